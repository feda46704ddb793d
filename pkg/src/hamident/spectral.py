"""Rotation frequency and declination from a pole-initialized z(t) record.

Three routes are provided: the Fourier route with truncation chosen by the
peak-sharpness criterion, a least-squares cosine fit, and a parabola fitted
to extra data acquired around the first minimum of z(t).

A record of ``n`` samples spaced ``dt`` has duration ``n * dt``; its DFT bins
sit at ``2 pi k / (n dt)``. Truncation lengths below are record durations,
so a truncation equal to a whole number of rotation periods puts the tone
exactly on a bin.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import EstimationError, FitFailure, NoRotationDetected, UndefinedSharpness
from .measurement import Acquirer, TimeSeries

SHARPNESS_CAP = 1e12


@dataclass(frozen=True)
class Spectrum:
    frequencies: np.ndarray
    coefficients: np.ndarray
    duration: float
    ne: float = math.inf

    def __len__(self):
        return len(self.frequencies)

    @property
    def resolution(self) -> float:
        return 2 * math.pi / self.duration

    def magnitudes(self) -> np.ndarray:
        return np.abs(self.coefficients)

    def to_csv(self) -> str:
        rows = ["omega,re,im,abs"]
        for w, c in zip(self.frequencies, self.coefficients):
            rows.append(f"{w!r},{c.real!r},{c.imag!r},{abs(c)!r}")
        return "\n".join(rows) + "\n"


@dataclass(frozen=True)
class StageOneEstimate:
    omega: float
    theta: float
    t_opt: float
    method: str
    extras: dict = field(default_factory=dict)


def _values(series: TimeSeries, correct_readout: bool) -> np.ndarray:
    return series.corrected_values() if correct_readout else np.asarray(series.values)


def _theta_from_cos2(c2: float) -> float:
    # noise can push the estimate of cos^2(theta) outside [0, 1]
    return float(np.arccos(np.sqrt(np.clip(abs(c2), 0.0, 1.0))))


def _uniform_step(times: np.ndarray) -> float:
    if len(times) < 2:
        raise EstimationError("need at least two samples")
    steps = np.diff(times)
    dt = float(steps.mean())
    if np.max(np.abs(steps - dt)) > 1e-9 * dt:
        raise EstimationError("DFT requires a uniform time grid")
    return dt


def dft(series: TimeSeries) -> Spectrum:
    """``F(w_n) = (1/N) sum_k z_k exp(-i w_n t_k)``, so ``F(0)`` is the sample mean."""
    t = np.asarray(series.times)
    dt = _uniform_step(t)
    n = len(t)
    duration = n * dt
    freqs = 2 * math.pi * np.arange(n) / duration
    coeffs = np.fft.fft(series.values) / n
    if t[0] != 0.0:
        coeffs = coeffs * np.exp(-1j * freqs * t[0])
    coeffs[0] = float(np.mean(series.values))
    return Spectrum(freqs, coeffs, duration, series.config.ne)


def noise_floor(n: int, ne: float) -> float:
    return max(3.0 / math.sqrt(n * ne), 1e-12)


def find_peak(spec: Spectrum) -> tuple[int, float]:
    """Lowest positive-frequency bin of maximal magnitude."""
    n = len(spec)
    if n < 3:
        raise EstimationError("spectrum too short for peak search")
    mags = spec.magnitudes()[1 : n // 2 + 1]
    top = mags.max()
    # magnitudes equal up to rounding count as tied; the lower bin wins
    p = int(np.flatnonzero(mags >= top * (1 - 1e-12))[0]) + 1
    if mags[p - 1] < noise_floor(n, spec.ne):
        raise NoRotationDetected(
            f"largest component {mags[p - 1]:.3g} below noise floor {noise_floor(n, spec.ne):.3g}"
        )
    return p, float(spec.frequencies[p])


def _sharpness(spec: Spectrum) -> float:
    p, _ = find_peak(spec)
    if p < 2:
        raise UndefinedSharpness("peak in first bin; no lower neighbour besides F(0)")
    mags = spec.magnitudes()
    lo, mid, hi = mags[p - 1], mags[p], mags[(p + 1) % len(mags)]
    denom = lo + hi
    if denom < 1e-15:
        raise UndefinedSharpness("side bins vanish")
    return float((mid - lo - hi) / denom)


def peak_sharpness(series: TimeSeries, tf: float) -> float:
    """Peak sharpness of the spectrum of the record truncated to duration ``tf``."""
    dt = _uniform_step(np.asarray(series.times))
    n = int(round(tf / dt))
    if n < 8:
        raise EstimationError("truncation leaves fewer than 8 samples")
    return _sharpness(dft(series.head(n)))


def sharpness_curve(series: TimeSeries) -> tuple[np.ndarray, np.ndarray]:
    """Peak sharpness for every grid truncation between half and full duration.

    Undefined points are NaN; leakage-free points read as ``SHARPNESS_CAP``.
    """
    dt = _uniform_step(np.asarray(series.times))
    n_all = len(series)
    lengths = np.arange(max(8, (n_all + 1) // 2), n_all + 1)
    values = np.full(len(lengths), np.nan)
    for i, n in enumerate(lengths):
        try:
            values[i] = min(_sharpness(dft(series.head(n))), SHARPNESS_CAP)
        except UndefinedSharpness as exc:
            if "side bins vanish" in str(exc):
                values[i] = SHARPNESS_CAP
        except NoRotationDetected:
            pass
    return lengths * dt, values


def optimal_truncation(series: TimeSeries) -> float:
    """Record duration in [span/2, span] maximizing peak sharpness; ties go long."""
    p, _ = find_peak(dft(series))
    if p < 2:
        raise EstimationError("record spans fewer than two rotation periods")
    durations, values = sharpness_curve(series)
    if np.all(np.isnan(values)):
        raise NoRotationDetected("no truncation yields a detectable peak")
    best = np.nanmax(values)
    idx = np.flatnonzero(values == best)[-1]
    return float(durations[idx])


def _interpolated_bin(mags: np.ndarray, p: int) -> float:
    a, b, c = mags[p - 1], mags[p], mags[p + 1]
    denom = a - 2 * b + c
    if denom >= 0:
        return float(p)
    return p + 0.5 * (a - c) / denom


def estimate_fourier(
    series: TimeSeries, *, interpolate: bool = True, correct_readout: bool = False
) -> StageOneEstimate:
    t_opt = optimal_truncation(series)
    dt = _uniform_step(np.asarray(series.times))
    spec = dft(series.head(int(round(t_opt / dt))))
    f0 = spec.coefficients[0].real
    if correct_readout:
        f0 /= 1.0 - 2.0 * series.config.readout_error
    theta = _theta_from_cos2(f0)
    p, omega = find_peak(spec)
    if interpolate and p + 1 < len(spec):
        omega = _interpolated_bin(spec.magnitudes(), p) * spec.resolution
    return StageOneEstimate(
        omega=float(omega),
        theta=theta,
        t_opt=t_opt,
        method="fourier",
        extras={"F0": float(f0), "peak_bin": p, "resolution": spec.resolution},
    )


def theta_from_mean(series: TimeSeries, *, correct_readout: bool = False) -> float:
    """Declination from the untruncated sample mean; used when no peak is detectable."""
    return _theta_from_cos2(float(np.mean(_values(series, correct_readout))))


def _linear_cos_fit(t, z, omega):
    design = np.column_stack([np.ones_like(t), np.cos(omega * t)])
    coef, *_ = np.linalg.lstsq(design, z, rcond=None)
    resid = z - design @ coef
    return coef, float(resid @ resid)


def fit_cosine_segment(
    series: TimeSeries,
    omega_init: float,
    *,
    correct_readout: bool = False,
    grid_per_bin: int = 8,
) -> StageOneEstimate:
    """Least-squares ``a + b cos(w t)`` with ``w`` searched in [0.5, 2] * omega_init.

    ``(a, b)`` is solved in closed form at each trial ``w``; ``w`` is located
    on a grid and polished by bounded Brent minimization.
    """
    t = np.asarray(series.times, dtype=float)
    z = _values(series, correct_readout)
    if omega_init <= 0:
        raise FitFailure("omega_init must be positive")
    span = t[-1] - t[0]
    if span * omega_init < math.pi / 2 * (1 - 1e-9):
        raise FitFailure("record shorter than a quarter period")
    lo, hi = 0.5 * omega_init, 2.0 * omega_init
    step = 2 * math.pi / max(span, 1e-12) / grid_per_bin
    grid = np.linspace(lo, hi, max(16, int(math.ceil((hi - lo) / step)) + 1))
    sse = np.array([_linear_cos_fit(t, z, w)[1] for w in grid])
    i = int(np.argmin(sse))
    a_, b_ = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    res = minimize_scalar(
        lambda w: _linear_cos_fit(t, z, w)[1],
        bounds=(a_, b_),
        method="bounded",
        options={"xatol": 1e-12 * omega_init, "maxiter": 500},
    )
    if not res.success:
        raise FitFailure(f"frequency refinement did not converge: {res.message}")
    omega = float(res.x)
    (a, b), sse_best = _linear_cos_fit(t, z, omega)
    floor = noise_floor(len(t), series.config.ne)
    if abs(b) < max(floor, 1e-9):
        raise FitFailure("no oscillation in data; frequency unidentifiable")
    return StageOneEstimate(
        omega=omega,
        theta=_theta_from_cos2(a),
        t_opt=float(t[-1]),
        method="cosine-fit",
        extras={
            "offset": float(a),
            "amplitude": float(b),
            "sse": sse_best,
            "z0_residual": float(a + b - z[0]),
        },
    )


def fit_parabola(t, z) -> tuple[float, float, np.ndarray]:
    """Least-squares quadratic; returns vertex ``(t_v, z_v)`` and coefficients."""
    t = np.asarray(t, dtype=float)
    z = np.asarray(z, dtype=float)
    if len(t) < 3:
        raise FitFailure("need at least three points for a parabola")
    centre = float(np.mean(t))
    coef = np.polyfit(t - centre, z, 2)
    if coef[0] == 0:
        raise FitFailure("degenerate parabola")
    tv = -coef[1] / (2 * coef[0])
    zv = float(np.polyval(coef, tv))
    return float(tv + centre), zv, coef


def sinusoid_vertex(times, coef, t_vertex: float, z_vertex: float, omega: float) -> float:
    """Extremum of the sinusoid behind a parabola fit ``coef`` over ``times``.

    The same quadratic is fitted to ``cos(omega (t - t_vertex))``; the ratio of
    curvatures gives the signed amplitude and the unit fit's vertex shortfall
    scales to the correction.
    """
    _, z_unit, coef_unit = fit_parabola(times, np.cos(omega * (np.asarray(times) - t_vertex)))
    return z_vertex + coef[0] / coef_unit[0] * (1.0 - z_unit)


def refine_minimum_parabola(
    series: TimeSeries,
    omega_coarse: float,
    acquire: Acquirer,
    *,
    n_points: int = 41,
    correct_readout: bool = False,
    curvature_correction: bool = True,
) -> StageOneEstimate:
    """Locate the first minimum of z(t) from extra samples in [0.8, 1.2] * pi / omega_coarse.

    ``curvature_correction`` removes the offset between a parabola's vertex and
    the true extremum of a sinusoid sampled over the same window.
    """
    if omega_coarse <= 0:
        raise FitFailure("omega_coarse must be positive")
    t_guess = math.pi / omega_coarse
    lo, hi = 0.8 * t_guess, 1.2 * t_guess
    times = np.linspace(lo, hi, n_points)
    z = np.asarray(acquire(times), dtype=float)
    if correct_readout:
        z = z / (1.0 - 2.0 * series.config.readout_error)
    t_min, z_min, coef = fit_parabola(times, z)
    if coef[0] <= 0 or not lo <= t_min <= hi:
        raise FitFailure(f"parabola vertex {t_min:.4g} not a minimum inside [{lo:.4g}, {hi:.4g}]")
    if curvature_correction:
        z_min = sinusoid_vertex(times, coef, t_min, z_min, math.pi / t_min)
    return StageOneEstimate(
        omega=math.pi / t_min,
        theta=_theta_from_cos2((1.0 + z_min) / 2.0),
        t_opt=float(series.times[-1]),
        method="minimum-parabola",
        extras={"t_min": t_min, "z_min": z_min, "window": (lo, hi), "times": times, "values": z},
    )
