"""Azimuth of a rotation axis from the precession of an equatorial state.

The pole state is rotated about a known reference axis until it lies on the
equator, at azimuth ``beta``. The z-record of that state precessing about the
target axis fixes the target azimuth ``phi`` relative to the reference frame.

For a unit target axis at ``(theta, phi)`` and ``x = phi - beta``::

    z(a) = sin(theta) * [cos(theta) cos(x) (1 - cos a) - sin(x) sin a],   a = omega t

The axes ``(theta, phi)`` and ``(pi - theta, 2 beta + pi - phi)`` give the
same record, so one preparation cannot fix the sign of d_z. A second
preparation on the other branch of the rotation angle (a different ``beta``)
removes the tie; :func:`phi_fit` accepts such companion records.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .bloch import POLE, AxisSpherical, cartesian_from_spherical, rotate, wrap_angle
from .errors import (
    EquatorUnreachable,
    FitFailure,
    LabelingError,
    NoCrossingError,
    PoleDegenerate,
    UnidentifiableError,
)
from .measurement import Acquirer, TimeSeries
from .spectral import fit_parabola, sinusoid_vertex


@dataclass(frozen=True)
class PrepPlan:
    psi: float
    beta: float
    reference: AxisSpherical
    state: np.ndarray

    @property
    def duration(self) -> float:
        """Evolution time under the reference axis that realizes ``psi``."""
        return self.psi / self.reference.omega


def plan_equatorial_prep(reference: AxisSpherical, branch: int = 1) -> PrepPlan:
    """Rotation about ``reference`` that carries the pole onto the equator.

    ``branch=-1`` takes the second solution ``2 pi - psi``, which lands on a
    different equatorial point.
    """
    st, ct = math.sin(reference.theta), math.cos(reference.theta)
    if st == 0.0:
        raise EquatorUnreachable("reference axis is along z")
    ratio = -(ct * ct) / (st * st)
    if ratio < -1.0 - 1e-12:
        raise EquatorUnreachable(
            f"reference declination {reference.theta:.4f} is too close to the pole; "
            "the equator needs theta_r in [pi/4, 3pi/4]"
        )
    psi = math.acos(max(ratio, -1.0))
    if branch == -1:
        psi = 2 * math.pi - psi
    elif branch != 1:
        raise ValueError("branch must be +1 or -1")
    state = rotate(POLE, cartesian_from_spherical(reference), psi)
    beta = math.atan2(state[1], state[0])
    return PrepPlan(psi=psi, beta=beta, reference=reference, state=state)


def _smooth(z: np.ndarray, window: int) -> np.ndarray:
    if window <= 1:
        return z
    kernel = np.ones(window) / window
    padded = np.pad(z, (window // 2, window - 1 - window // 2), mode="edge")
    return np.convolve(padded, kernel, mode="valid")


def find_zero_crossing(series: TimeSeries, window: int = 1, threshold: float = 0.0) -> float:
    """First sign change of z after it departs from the known zero at t=0.

    ``window`` applies a moving average first and ``threshold`` sets how far
    from zero the record must move to count as departed; both suppress
    shot-noise crossings near t=0.
    """
    t = np.asarray(series.times)
    z = _smooth(np.asarray(series.values, dtype=float), window)
    departed = np.flatnonzero((np.abs(z) > threshold) & (t > 0))
    if len(departed) == 0:
        raise NoCrossingError("record never leaves zero")
    k0 = departed[0]
    sign = np.sign(z[k0])
    flips = np.flatnonzero(np.sign(z[k0:]) == -sign)
    if len(flips) == 0:
        raise NoCrossingError("no sign change in record")
    k = k0 + flips[0]
    # last sample before k still on the original side
    j = k - 1
    while np.sign(z[j]) == 0:
        j -= 1
    return float(t[j] + (t[k] - t[j]) * z[j] / (z[j] - z[k]))


@dataclass(frozen=True)
class ExtremaFit:
    z_max: float
    z_min: float
    alpha_max: float
    alpha_min: float
    windows: tuple = field(default=(), compare=False)

    @property
    def gamma(self) -> float:
        return (self.z_max - self.z_min) / 2

    @property
    def delta(self) -> float:
        return math.pi - (self.alpha_min + self.alpha_max) / 2


def locate_extrema(
    series: TimeSeries,
    omega: float,
    t0: float,
    acquire: Acquirer,
    *,
    window_frac: float = 0.15,
    n_points: int = 15,
    correct_readout: bool = False,
    curvature_correction: bool = True,
) -> ExtremaFit:
    """Fit parabolas to fresh data around the two extrema predicted from ``t0``.

    Zeros of z sit at 0, ``t0`` and one period, so the extrema are expected
    midway between them. Each window spans ``window_frac`` of a period either
    side of its prediction.

    A parabola fitted to a sinusoid over a finite window misses the true
    extremum by a fixed fraction of the amplitude. With ``curvature_correction``
    that fraction is measured by fitting the same quadratic to a unit cosine on
    the same times, and the amplitude is read off the fitted curvature.
    """
    if omega <= 0:
        raise FitFailure("omega must be positive")
    period = 2 * math.pi / omega
    half = window_frac * period
    scale = 1.0 - 2.0 * series.config.readout_error if correct_readout else 1.0
    found = {}
    windows = []
    for centre in (t0 / 2, (t0 + period) / 2):
        lo, hi = max(centre - half, 0.0), centre + half
        times = np.linspace(lo, hi, n_points)
        values = np.asarray(acquire(times), dtype=float) / scale
        tv, zv, coef = fit_parabola(times, values)
        if not lo <= tv <= hi:
            raise FitFailure(f"vertex {tv:.4g} escaped window [{lo:.4g}, {hi:.4g}]")
        if curvature_correction:
            zv = sinusoid_vertex(times, coef, tv, zv, omega)
        kind = "min" if coef[0] > 0 else "max"
        if kind in found:
            raise LabelingError(f"both windows contain a {kind}")
        found[kind] = (zv, (omega * tv) % (2 * math.pi))
        windows.append({"kind": kind, "times": times, "values": values, "coef": coef, "vertex": (tv, zv)})
    (z_max, a_max), (z_min, a_min) = found["max"], found["min"]
    if z_max < z_min:
        raise LabelingError("maximum fitted below minimum")
    return ExtremaFit(z_max, z_min, a_max, a_min, windows=tuple(windows))


@dataclass(frozen=True)
class PhiCandidates:
    """Azimuths allowed by the extrema relation.

    ``formula`` follows ``phi = -beta - asin(u)`` and its second arcsin
    branch. ``mirrored`` is the same relation for right-handed precession,
    with the arcsin sign set by which extremum came first.
    """

    formula: tuple[float, float]
    mirrored: tuple[float, float]
    clamped: bool

    def all(self) -> tuple[float, ...]:
        return self.formula + self.mirrored


def phi_closed_form(fit: ExtremaFit, beta: float, theta: float) -> PhiCandidates:
    st = math.sin(theta)
    if abs(st) < 1e-9:
        raise PoleDegenerate("target axis along z has no azimuth")
    raw = fit.gamma * math.cos(fit.delta) / st
    u = min(max(raw, -1.0), 1.0)
    a = math.asin(u)
    formula = (wrap_angle(-beta - a), wrap_angle(-beta - (math.pi - a)))
    s = 1.0 if fit.alpha_min < fit.alpha_max else -1.0
    mirrored = (wrap_angle(beta + s * a), wrap_angle(beta + math.pi - s * a))
    return PhiCandidates(formula, mirrored, clamped=bool(raw != u))


@dataclass(frozen=True)
class PhiFit:
    phi: float
    sign: int
    sse: float
    sse_other_sign: float


class _Record:
    """Sufficient statistics of one record for the model ``C1 cos x + C2 sin x``."""

    def __init__(self, series: TimeSeries, beta: float, omega: float, correct_readout: bool):
        t = np.asarray(series.times, dtype=float)
        z = series.corrected_values() if correct_readout else np.asarray(series.values, dtype=float)
        a = omega * t
        self.beta = beta
        self.zz = float(z @ z)
        self.n = len(t)
        self.ne = series.config.ne
        self.one_minus_cos = 1.0 - np.cos(a)
        self.sin = np.sin(a)
        self.z = z

    def stats(self, theta: float):
        st, ct = math.sin(theta), math.cos(theta)
        c1 = st * ct * self.one_minus_cos
        c2 = -st * self.sin
        return (self.z @ c1, self.z @ c2, c1 @ c1, c2 @ c2, c1 @ c2)

    def sse(self, phi, stats):
        zc1, zc2, c11, c22, c12 = stats
        x = np.asarray(phi) - self.beta
        cx, sx = np.cos(x), np.sin(x)
        return self.zz - 2 * (cx * zc1 + sx * zc2) + cx * cx * c11 + 2 * sx * cx * c12 + sx * sx * c22


def phi_fit(
    series: TimeSeries,
    omega: float,
    theta: float,
    beta: float,
    *,
    companions: Sequence[tuple[TimeSeries, float]] = (),
    correct_readout: bool = False,
    n_grid: int = 720,
) -> PhiFit:
    """Least-squares azimuth and d_z sign from equatorial precession records.

    Scans ``phi`` over a grid for both declinations ``theta`` and
    ``pi - theta`` and polishes the best point with bounded Brent search.
    ``companions`` are further ``(series, beta)`` records of the same axis.
    """
    records = [_Record(series, beta, omega, correct_readout)]
    records += [_Record(s, b, omega, correct_readout) for s, b in companions]
    grid = np.linspace(-math.pi, math.pi, n_grid, endpoint=False) + math.pi / n_grid
    step = grid[1] - grid[0]
    best = []
    spread = 0.0
    for sign, th in ((1, theta), (-1, math.pi - theta)):
        stats = [r.stats(th) for r in records]

        def total(phi, stats=stats):
            return sum(r.sse(phi, s) for r, s in zip(records, stats))

        landscape = total(grid)
        spread = max(spread, float(landscape.max() - landscape.min()))
        i = int(np.argmin(landscape))
        res = minimize_scalar(
            total, bounds=(grid[i] - step, grid[i] + step), method="bounded", options={"xatol": 1e-12}
        )
        phi, sse = (float(res.x), float(res.fun)) if res.fun <= landscape[i] else (float(grid[i]), float(landscape[i]))
        best.append((sse, sign, wrap_angle(phi)))
    n = sum(r.n for r in records)
    ne = records[0].ne
    floor = 3 * math.sqrt(2 * n) / ne if math.isfinite(ne) else 1e-12
    if spread < floor:
        raise UnidentifiableError("residual landscape is flat; azimuth not identifiable")
    (sse_pos, _, phi_pos), (sse_neg, _, phi_neg) = best
    # exact ties (theta = pi/2, or one record of a mirror pair) resolve to +1
    if sse_neg < sse_pos - 1e-9 * max(sse_pos, 1.0) - 1e-12:
        sign, phi, sse, sse_other = -1, phi_neg, sse_neg, sse_pos
    else:
        sign, phi, sse, sse_other = 1, phi_pos, sse_pos, sse_neg
    return PhiFit(phi=phi, sign=sign, sse=sse, sse_other_sign=sse_other)
