"""Straight-line regression of recovered axes against control amplitude."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .bloch import HamiltonianModel, as_vector, spherical_from_cartesian
from .errors import RankDeficientError

COMPONENTS = ("x", "y", "z")


class InconsistencyWarning(UserWarning):
    """Per-channel estimates of d0 disagree: nonlinear response or a gauge slip."""


@dataclass(frozen=True)
class AxisMeasurement:
    channel: int
    f: float
    axis: np.ndarray
    uncertainty: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "axis", as_vector(self.axis))
        if self.channel == 0 and self.f != 0:
            raise ValueError("free-evolution entries must have f = 0")


@dataclass(frozen=True)
class LineFit:
    slope: float
    intercept: float
    rms: float
    intercept_se: float
    n: int

    def __call__(self, f):
        return self.intercept + self.slope * np.asarray(f)


def linear_fit(points: Iterable[tuple[float, float]]) -> LineFit:
    """Ordinary least squares ``value = intercept + slope * f``."""
    pts = np.asarray(list(points), dtype=float).reshape(-1, 2)
    f, y = pts[:, 0], pts[:, 1]
    if len(np.unique(f)) < 2:
        raise RankDeficientError("need at least two distinct control amplitudes")
    fm, ym = f.mean(), y.mean()
    sxx = float(((f - fm) ** 2).sum())
    slope = float(((f - fm) * (y - ym)).sum() / sxx)
    intercept = float(ym - slope * fm)
    resid = y - (intercept + slope * f)
    n = len(f)
    rms = float(math.sqrt((resid @ resid) / n))
    if n > 2:
        s2 = float(resid @ resid) / (n - 2)
        se = math.sqrt(s2 * (1.0 / n + fm * fm / sxx))
    else:
        se = math.nan
    return LineFit(slope, intercept, rms, se, n)


@dataclass
class IdentifiedModel:
    model: HamiltonianModel
    fits: dict  # (channel, component) -> LineFit
    intercepts: dict  # component -> per-channel intercepts
    consistent: bool = True
    distances: list | None = None

    @property
    def residuals(self) -> dict:
        return {key: fit.rms for key, fit in self.fits.items()}

    def to_dict(self) -> dict:
        out = {
            "d0": self.model.d0.tolist(),
            "controls": [d.tolist() for d in self.model.controls],
            "consistent": self.consistent,
            "fits": [
                {
                    "channel": m,
                    "component": c,
                    "slope": fit.slope,
                    "intercept": fit.intercept,
                    "rms": fit.rms,
                    "n": fit.n,
                }
                for (m, c), fit in sorted(self.fits.items())
            ],
        }
        if self.distances is not None:
            out["distances"] = list(self.distances)
        return out


def _pooled_intercept(fits: Sequence[LineFit]) -> float:
    values = np.array([fit.intercept for fit in fits])
    se = np.array([fit.intercept_se for fit in fits])
    if np.all(np.isfinite(se)) and np.all(se > 0):
        w = 1.0 / se**2
    else:
        w = np.ones_like(values)
    return float((w * values).sum() / w.sum())


def extract_hamiltonian(
    measurements: Iterable[AxisMeasurement], truth: HamiltonianModel | None = None
) -> IdentifiedModel:
    """Recover ``d0`` and every ``d_m`` from axes measured at several control settings.

    Each channel's entries are pooled with the free-evolution entries and each
    Cartesian component is fitted by a line. Slopes give ``d_m``; ``d0`` is the
    precision-weighted mean of the per-channel intercepts.
    """
    # canonical order so the floating-point result ignores input order
    entries = sorted(measurements, key=lambda e: (e.channel, e.f, tuple(e.axis)))
    free = [e for e in entries if e.channel == 0]
    channels = sorted({e.channel for e in entries if e.channel > 0})
    if channels and channels != list(range(1, channels[-1] + 1)):
        raise ValueError(f"control channels must be numbered 1..M, got {channels}")

    fits = {}
    d0 = np.zeros(3)
    controls = [np.zeros(3) for _ in channels]
    intercepts = {}
    consistent = True
    for ci, comp in enumerate(COMPONENTS):
        per_channel = []
        for m in channels:
            pool = free + [e for e in entries if e.channel == m]
            fit = linear_fit((e.f, e.axis[ci]) for e in pool)
            fits[(m, comp)] = fit
            controls[m - 1][ci] = fit.slope
            per_channel.append(fit)
        if per_channel:
            d0[ci] = _pooled_intercept(per_channel)
            values = [fit.intercept for fit in per_channel]
            pooled_rms = math.sqrt(sum(fit.rms**2 for fit in per_channel) / len(per_channel))
            intercepts[comp] = values
            if max(values) - min(values) > 5 * pooled_rms + 1e-9:
                consistent = False
        elif free:
            d0[ci] = float(np.mean([e.axis[ci] for e in free]))
        else:
            raise RankDeficientError("no measurements")
    if not consistent:
        warnings.warn("d0 intercepts disagree across channels", InconsistencyWarning, stacklevel=2)
    model = HamiltonianModel(d0, controls)
    distances = error_norms(model, truth) if truth is not None else None
    return IdentifiedModel(model, fits, intercepts, consistent, distances)


def error_norms(est: HamiltonianModel, actual: HamiltonianModel) -> list[float]:
    """``[|d0_est - d0|, |d1_est - d1|, ...]``."""
    if est.n_channels != actual.n_channels:
        raise ValueError(f"channel count mismatch: {est.n_channels} vs {actual.n_channels}")
    pairs = [(est.d0, actual.d0)] + list(zip(est.controls, actual.controls))
    return [float(np.linalg.norm(a - b)) for a, b in pairs]


def to_gauge(model: HamiltonianModel, reference: np.ndarray | None = None) -> HamiltonianModel:
    """Rotate ``model`` about z so the reference axis (default ``d0``) has zero azimuth."""
    ref = model.d0 if reference is None else as_vector(reference)
    return model.rotated_about_z(-spherical_from_cartesian(ref).phi)
