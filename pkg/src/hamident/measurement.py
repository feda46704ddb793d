"""Synthetic sigma_z records: repeated prepare, evolve, measure cycles.

Each time point is the average of ``ne`` projective shots, every shot
flipped independently with probability ``readout_error``. ``ne = inf``
selects exact mode, which returns the noiseless expectation value.
"""
from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .bloch import HamiltonianModel, POLE, as_vector, effective_axis, evolve_z
from .errors import SeriesFormatError

EXACT = math.inf

# acquire(times) -> estimates of <sigma_z> at those times
Acquirer = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class SamplingConfig:
    dt: float
    tf: float
    ne: float = 10
    readout_error: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.tf >= self.dt:
            raise ValueError("tf must be at least dt")
        if not (self.ne == EXACT or (self.ne >= 1 and float(self.ne).is_integer())):
            raise ValueError("ne must be a positive integer or inf")
        if not 0 <= self.readout_error < 0.5:
            raise ValueError("readout_error must lie in [0, 0.5)")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    @property
    def exact(self) -> bool:
        return self.ne == EXACT

    @property
    def n_points(self) -> int:
        # small epsilon so tf = k*dt keeps its last point despite rounding
        return int(math.floor(self.tf / self.dt + 1e-9)) + 1

    @property
    def total_measurements(self) -> float:
        return self.ne * self.n_points

    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.n_points)


@dataclass(frozen=True)
class TimeSeries:
    times: np.ndarray
    values: np.ndarray
    config: SamplingConfig
    aliasing_risk: bool = False

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        z = np.asarray(self.values, dtype=float)
        t.flags.writeable = False
        z.flags.writeable = False
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", z)
        if t.shape != z.shape or t.ndim != 1:
            raise SeriesFormatError("times and values must be 1-D and of equal length")
        if len(t) and np.any(np.diff(t) <= 0):
            raise SeriesFormatError("times must be strictly increasing")
        if np.any(np.abs(z) > 1 + 1e-12):
            raise SeriesFormatError("values must lie in [-1, 1]")

    def __len__(self):
        return len(self.times)

    def __eq__(self, other):
        if not isinstance(other, TimeSeries):
            return NotImplemented
        return (
            self.config == other.config
            and np.array_equal(self.times, other.times)
            and np.array_equal(self.values, other.values)
        )

    def truncate(self, tf: float) -> "TimeSeries":
        keep = self.times <= tf + 1e-9 * max(1.0, tf)
        return replace(self, times=self.times[keep], values=self.values[keep])

    def head(self, n: int) -> "TimeSeries":
        return replace(self, times=self.times[:n], values=self.values[:n])

    def corrected_values(self) -> np.ndarray:
        """Values divided by the mean readout contraction ``1 - 2p``."""
        return self.values / (1.0 - 2.0 * self.config.readout_error)


def experiment_rng(seed: int, *key) -> np.random.Generator:
    """Independent generator for one experiment, keyed by ``(seed, *key)``.

    Keys may be any values with a stable ``repr``; the stream does not depend
    on which other experiments are run or in what order.
    """
    words = [zlib.crc32(repr(k).encode()) for k in key]
    return np.random.default_rng(np.random.SeedSequence([seed, *words]))


def sample_z(z_true, ne, readout_error: float, rng: np.random.Generator):
    """Shot-noise estimate of ``<sigma_z>`` from ``ne`` flipped projective shots.

    Vectorized over ``z_true``. Shot outcomes are drawn as binomial counts,
    then each group is thinned by independent flips.
    """
    z_true = np.clip(np.asarray(z_true, dtype=float), -1.0, 1.0)
    if ne == EXACT:
        out = (1.0 - 2.0 * readout_error) * z_true
        return float(out) if out.ndim == 0 else out
    ne = int(ne)
    n_up = rng.binomial(ne, (1.0 + z_true) / 2.0)
    n_down = ne - n_up
    if readout_error > 0:
        up_to_down = rng.binomial(n_up, readout_error)
        down_to_up = rng.binomial(n_down, readout_error)
        n_up = n_up - up_to_down + down_to_up
    out = (2.0 * n_up - ne) / ne
    return float(out) if np.ndim(out) == 0 else out.astype(float)


def nyquist_risk(axis, dt: float) -> bool:
    return dt >= math.pi / float(np.linalg.norm(axis))


def measure_at(model, m: int, f: float, s0, times, ne, readout_error, rng) -> np.ndarray:
    axis = effective_axis(model, m, f)
    z = evolve_z(s0, axis, np.asarray(times, dtype=float))
    return sample_z(z, ne, readout_error, rng)


def run_precession_experiment(
    model: HamiltonianModel,
    m: int,
    f: float,
    s0,
    cfg: SamplingConfig,
    key: Sequence = (),
) -> TimeSeries:
    """Map z(t) of ``s0`` precessing about ``d0 + f d_m`` on the grid 0, dt, ..., <= tf.

    ``m = 0`` is free evolution. ``key`` identifies the experiment inside the
    run and selects its random substream.
    """
    axis = effective_axis(model, m, f)
    times = cfg.times()
    rng = experiment_rng(cfg.seed, "precession", m, float(f), *key)
    values = measure_at(model, m, f, as_vector(s0), times, cfg.ne, cfg.readout_error, rng)
    return TimeSeries(times, values, cfg, aliasing_risk=nyquist_risk(axis, cfg.dt))


def simulated_acquirer(
    model: HamiltonianModel,
    m: int,
    f: float,
    s0,
    cfg: SamplingConfig,
    key: Sequence = (),
    ne=None,
) -> Acquirer:
    """Callback that measures extra points of the same experiment on request.

    Every call draws from its own substream (``key`` plus a call counter),
    so the answers are reproducible for a fixed sequence of requests.
    """
    calls = [0]
    ne = cfg.ne if ne is None else ne
    s0 = as_vector(s0)

    def acquire(times):
        rng = experiment_rng(cfg.seed, "acquire", m, float(f), *key, calls[0])
        calls[0] += 1
        return measure_at(model, m, f, s0, times, ne, cfg.readout_error, rng)

    return acquire


def pole_series(model, m, f, cfg, key=()) -> TimeSeries:
    return run_precession_experiment(model, m, f, POLE, cfg, key)


# ---------------------------------------------------------------- file format

def _fmt(x: float) -> str:
    return repr(float(x))


def format_series(series: TimeSeries) -> str:
    c = series.config
    ne = "inf" if c.exact else str(int(c.ne))
    lines = [
        f"# dt={_fmt(c.dt)} ne={ne} readout_error={_fmt(c.readout_error)} seed={c.seed} tf={_fmt(c.tf)}",
        "t,z",
    ]
    lines += [f"{_fmt(t)},{_fmt(z)}" for t, z in zip(series.times, series.values)]
    return "\n".join(lines) + "\n"


def parse_series(text: str) -> TimeSeries:
    lines = text.splitlines()
    if not lines:
        raise SeriesFormatError("empty series file", line=1)
    header = lines[0].strip()
    if not header.startswith("#"):
        raise SeriesFormatError("missing '# dt=... ne=...' header", line=1)
    meta = {}
    for token in header[1:].split():
        key, sep, val = token.partition("=")
        if not sep:
            raise SeriesFormatError(f"bad header token {token!r}", line=1)
        meta[key] = val
    try:
        dt = float(meta["dt"])
        ne = EXACT if meta["ne"] == "inf" else int(meta["ne"])
        readout_error = float(meta["readout_error"])
        seed = int(meta["seed"])
    except (KeyError, ValueError) as exc:
        raise SeriesFormatError(f"bad header: {exc}", line=1) from None
    times, values = [], []
    for lineno, raw in enumerate(lines[1:], start=2):
        row = raw.strip()
        if not row or row == "t,z":
            continue
        parts = row.split(",")
        if len(parts) != 2:
            raise SeriesFormatError(f"expected 't,z', got {row!r}", line=lineno)
        try:
            t, z = float(parts[0]), float(parts[1])
        except ValueError:
            raise SeriesFormatError(f"non-numeric row {row!r}", line=lineno) from None
        if times and t <= times[-1]:
            raise SeriesFormatError("times must be strictly increasing", line=lineno)
        if abs(z) > 1:
            raise SeriesFormatError(f"value {z} outside [-1, 1]", line=lineno)
        times.append(t)
        values.append(z)
    if not times:
        raise SeriesFormatError("series has no data rows", line=len(lines))
    tf = float(meta.get("tf", times[-1]))
    try:
        cfg = SamplingConfig(dt=dt, tf=max(tf, dt), ne=ne, readout_error=readout_error, seed=seed)
    except ValueError as exc:
        raise SeriesFormatError(str(exc), line=1) from None
    return TimeSeries(np.array(times), np.array(values), cfg)


def write_series(series: TimeSeries, path) -> None:
    Path(path).write_text(format_series(series))


def read_series(path) -> TimeSeries:
    return parse_series(Path(path).read_text())
