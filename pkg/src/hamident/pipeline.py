"""End-to-end protocol: stage-1 records, equatorial stage-2 records, regression.

Data comes from a *lab*: :class:`SimulatedLab` draws it from a known model,
:class:`ReplayLab` reads files written earlier, and :class:`RecordingLab`
writes everything that passes through it so a run can be replayed.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .bloch import (
    POLE,
    AxisSpherical,
    HamiltonianModel,
    cartesian_from_spherical,
    effective_axis,
    rotate,
)
from .errors import ConfigError, EquatorUnreachable, EstimationError
from .identification import AxisMeasurement, extract_hamiltonian, to_gauge
from .measurement import (
    EXACT,
    SamplingConfig,
    TimeSeries,
    read_series,
    run_precession_experiment,
    simulated_acquirer,
    write_series,
)
from .phi import find_zero_crossing, locate_extrema, phi_closed_form, phi_fit, plan_equatorial_prep
from .spectral import (
    dft,
    estimate_fourier,
    find_peak,
    fit_cosine_segment,
    refine_minimum_parabola,
)

METHODS = {"fourier": "fourier", "cosine": "cosine-fit", "cosine-fit": "cosine-fit",
           "parabola": "minimum-parabola", "minimum-parabola": "minimum-parabola"}


@dataclass
class RunConfig:
    sampling: SamplingConfig
    control_grid: dict = field(default_factory=dict)  # channel -> list of f
    truth: HamiltonianModel | None = None
    method: str = "fourier"
    replicates: int = 1
    output_dir: str = "out"
    reference: tuple = (0, 0.0)
    stage2_periods: float = 8.0
    ne_refine: float = 400
    readout_correction: bool = True
    polish: bool = True
    interpolate: bool = True

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"unknown stage-1 method {self.method!r}")
        self.method = METHODS[self.method]
        self.control_grid = {int(m): [float(f) for f in fs] for m, fs in sorted(self.control_grid.items())}
        self.reference = (int(self.reference[0]), float(self.reference[1]))
        if self.truth is not None and self.truth.n_channels != len(self.control_grid):
            raise ConfigError("truth and control grid disagree on the number of channels")
        if sorted(self.control_grid) != list(range(1, len(self.control_grid) + 1)):
            raise ConfigError("channels must be numbered 1..M")
        if self.reference not in self.settings():
            raise ConfigError(f"reference setting {self.reference} is not in the control grid")
        if self.replicates < 1:
            raise ConfigError("replicates must be >= 1")

    @property
    def seed(self) -> int:
        return self.sampling.seed

    @property
    def exact(self) -> bool:
        return self.sampling.exact

    def settings(self) -> list:
        return [(0, 0.0)] + [(m, f) for m, fs in self.control_grid.items() for f in fs]

    def with_seed(self, seed: int) -> "RunConfig":
        return replace(self, sampling=replace(self.sampling, seed=seed))

    def as_exact(self) -> "RunConfig":
        return replace(self, sampling=replace(self.sampling, ne=EXACT), ne_refine=EXACT)

    def describe(self) -> dict:
        s = self.sampling
        return {
            "dt": s.dt,
            "tf": s.tf,
            "ne": "inf" if s.exact else int(s.ne),
            "readout_error": s.readout_error,
            "seed": s.seed,
            "control_grid": {str(m): fs for m, fs in self.control_grid.items()},
            "method": self.method,
            "reference": list(self.reference),
            "stage2_periods": self.stage2_periods,
            "ne_refine": "inf" if self.ne_refine == EXACT else int(self.ne_refine),
            "readout_correction": self.readout_correction,
            "polish": self.polish,
            "interpolate": self.interpolate,
        }


# ------------------------------------------------------------------- labs


@dataclass(frozen=True)
class Experiment:
    """One experiment type. Stage 2 starts with ``prep_time`` of evolution under the reference."""

    stage: int
    channel: int
    f: float
    reference: tuple | None = None
    prep_time: float = 0.0
    branch: int = 0

    @property
    def name(self) -> str:
        base = f"s{self.stage}_m{self.channel}_f{self.f!r}"
        return base if self.stage == 1 else f"{base}_b{self.branch:+d}"


class SimulatedLab:
    def __init__(self, truth: HamiltonianModel):
        self.truth = truth

    def _initial_state(self, exp: Experiment) -> np.ndarray:
        if exp.stage == 1:
            return POLE
        ref_axis = effective_axis(self.truth, *exp.reference)
        return rotate(POLE, ref_axis, float(np.linalg.norm(ref_axis)) * exp.prep_time)

    def series(self, exp: Experiment, cfg: SamplingConfig) -> TimeSeries:
        s0 = self._initial_state(exp)
        return run_precession_experiment(self.truth, exp.channel, exp.f, s0, cfg, key=(exp.name,))

    def acquirer(self, exp: Experiment, cfg: SamplingConfig, ne):
        s0 = self._initial_state(exp)
        return simulated_acquirer(self.truth, exp.channel, exp.f, s0, cfg, key=(exp.name,), ne=ne)


class ReplayLab:
    """Serves recorded series and acquisitions; falls back to ``fallback`` when a file is missing."""

    def __init__(self, directory, fallback=None):
        self.directory = Path(directory)
        self.fallback = fallback

    def series(self, exp, cfg):
        path = self.directory / "series" / f"{exp.name}.csv"
        if path.exists():
            return read_series(path)
        if self.fallback is None:
            raise ConfigError(f"replay data missing: {path}")
        return self.fallback.series(exp, cfg)

    def acquirer(self, exp, cfg, ne):
        calls = [0]
        live = [None]

        def acquire(times):
            k = calls[0]
            calls[0] += 1
            path = self.directory / "acquisitions" / f"{exp.name}_acq{k}.csv"
            if path.exists():
                rec = read_series(path)
                if len(rec) != len(times) or not np.allclose(rec.times, times, rtol=0, atol=1e-9):
                    raise ConfigError(f"recorded acquisition {path} does not match the requested times")
                return np.asarray(rec.values)
            if self.fallback is None:
                raise ConfigError(f"replay data missing: {path}")
            if live[0] is None:
                live[0] = self.fallback.acquirer(exp, cfg, ne)
                # keep the fallback's substream aligned with the call counter
                for _ in range(k):
                    live[0](np.zeros(1))
            return live[0](times)

        return acquire


class RecordingLab:
    def __init__(self, inner, directory):
        self.inner = inner
        self.directory = Path(directory)
        (self.directory / "series").mkdir(parents=True, exist_ok=True)
        (self.directory / "acquisitions").mkdir(parents=True, exist_ok=True)

    def series(self, exp, cfg):
        s = self.inner.series(exp, cfg)
        write_series(s, self.directory / "series" / f"{exp.name}.csv")
        return s

    def acquirer(self, exp, cfg, ne):
        inner = self.inner.acquirer(exp, cfg, ne)
        calls = [0]

        def acquire(times):
            values = inner(times)
            acfg = replace(cfg, ne=ne, tf=max(float(times[-1]), cfg.dt))
            rec = TimeSeries(np.asarray(times, dtype=float), values, acfg)
            write_series(rec, self.directory / "acquisitions" / f"{exp.name}_acq{calls[0]}.csv")
            calls[0] += 1
            return values

        return acquire


# ------------------------------------------------------------------ stages


def estimate_stage_one(series: TimeSeries, cfg: RunConfig, acquire=None) -> dict:
    corr = cfg.readout_correction
    if cfg.method == "fourier":
        est = estimate_fourier(series, interpolate=cfg.interpolate, correct_readout=corr)
    elif cfg.method == "cosine-fit":
        _, coarse = find_peak(dft(series))
        est = fit_cosine_segment(series, coarse, correct_readout=corr)
    else:
        coarse = estimate_fourier(series, interpolate=cfg.interpolate, correct_readout=corr)
        est = refine_minimum_parabola(series, coarse.omega, acquire, correct_readout=corr)
    out = {"method": est.method, "omega": est.omega, "theta": est.theta, "t_opt": est.t_opt,
           "raw_omega": est.omega, "raw_theta": est.theta}
    if cfg.polish:
        pol = fit_cosine_segment(series, est.omega, correct_readout=corr)
        out.update(omega=pol.omega, theta=pol.theta)
    return out


def _crossing_settings(series: TimeSeries, omega: float) -> tuple[int, float]:
    if series.config.exact:
        return 1, 0.0
    window = max(1, int(round(2 * math.pi / omega / 8 / series.config.dt)))
    return window, 3.0 / math.sqrt(series.config.ne * window)


def run_identification(cfg: RunConfig, lab=None) -> dict:
    """Run the full protocol for ``cfg.seed`` and return the report document."""
    if lab is None:
        if cfg.truth is None:
            raise ConfigError("no truth model and no recorded data to replay")
        lab = SimulatedLab(cfg.truth)
    s1cfg = cfg.sampling
    corr = cfg.readout_correction

    stage1 = {}
    for m, f in cfg.settings():
        exp = Experiment(1, m, f)
        series = lab.series(exp, s1cfg)
        acquire = lab.acquirer(exp, s1cfg, cfg.ne_refine) if cfg.method == "minimum-parabola" else None
        stage1[(m, f)] = estimate_stage_one(series, cfg, acquire)

    ref = stage1[cfg.reference]
    ref_axis = AxisSpherical(ref["omega"], ref["theta"], 0.0)
    try:
        plans = [plan_equatorial_prep(ref_axis, branch) for branch in (1, -1)]
    except EquatorUnreachable as exc:
        raise EquatorUnreachable(
            f"{exc}. Choose a control setting as reference (config 'reference = channel, f')."
        ) from None

    axes = {cfg.reference: cartesian_from_spherical(ref_axis)}
    stage2 = []
    for setting in cfg.settings():
        if setting == cfg.reference:
            continue
        m, f = setting
        est = stage1[setting]
        omega, theta = est["omega"], est["theta"]
        s2cfg = replace(s1cfg, tf=max(cfg.stage2_periods * 2 * math.pi / omega, s1cfg.dt))
        records, preps = [], []
        for plan, branch in zip(plans, (1, -1)):
            exp = Experiment(2, m, f, cfg.reference, plan.duration, branch)
            series = lab.series(exp, s2cfg)
            records.append((series, plan.beta))
            prep = {"branch": branch, "psi": plan.psi, "beta": plan.beta, "prep_time": plan.duration}
            try:
                window, threshold = _crossing_settings(series, omega)
                t0 = find_zero_crossing(series, window=window, threshold=threshold)
                ext = locate_extrema(series, omega, t0, lab.acquirer(exp, s2cfg, cfg.ne_refine),
                                     correct_readout=corr)
                cands = phi_closed_form(ext, plan.beta, theta)
                prep.update(
                    t0=t0, gamma=ext.gamma, delta=ext.delta, z_max=ext.z_max, z_min=ext.z_min,
                    alpha_max=ext.alpha_max, alpha_min=ext.alpha_min,
                    candidates={"formula": list(cands.formula), "mirrored": list(cands.mirrored),
                                "clamped": cands.clamped},
                )
            except EstimationError as exc:
                prep["closed_form_error"] = f"{type(exc).__name__}: {exc}"
            preps.append(prep)
        (s, beta), companions = records[0], records[1:]
        fit = phi_fit(s, omega, theta, beta, companions=companions, correct_readout=corr)
        theta_axis = theta if fit.sign > 0 else math.pi - theta
        axes[setting] = cartesian_from_spherical(AxisSpherical(omega, theta_axis, fit.phi))
        stage2.append({"channel": m, "f": f, "phi": fit.phi, "sign": fit.sign, "theta": theta_axis,
                       "sse": fit.sse, "sse_other_sign": fit.sse_other_sign, "preps": preps})

    measurements = [AxisMeasurement(m, f, axes[(m, f)]) for m, f in cfg.settings()]
    truth_gauged = None
    if cfg.truth is not None:
        truth_gauged = to_gauge(cfg.truth, effective_axis(cfg.truth, *cfg.reference))
    ident = extract_hamiltonian(measurements, truth_gauged)

    report = {
        "config": cfg.describe(),
        "stage1": [{"channel": m, "f": f, **stage1[(m, f)]} for m, f in cfg.settings()],
        "reference": {"channel": cfg.reference[0], "f": cfg.reference[1], "omega": ref_axis.omega,
                      "theta": ref_axis.theta,
                      "plans": [{"psi": p.psi, "beta": p.beta, "prep_time": p.duration} for p in plans]},
        "stage2": stage2,
        "axes": [{"channel": m, "f": f, "axis": axes[(m, f)].tolist()} for m, f in cfg.settings()],
        "identification": ident.to_dict(),
    }
    if truth_gauged is not None:
        report["truth"] = truth_gauged.to_dict()
        report["distances"] = ident.distances
    return _plain(report)


def _plain(obj):
    """Convert numpy scalars/arrays so ``json`` output is stable."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def dump_report(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def summarize(reports: list) -> dict:
    """Median and quartiles of the distances over replicate reports."""
    out = {"replicates": len(reports), "seeds": [r["config"]["seed"] for r in reports]}
    dists = [r["distances"] for r in reports if "distances" in r]
    if dists:
        d = np.asarray(dists)
        out["distances"] = {
            "median": np.median(d, axis=0).tolist(),
            "q25": np.quantile(d, 0.25, axis=0).tolist(),
            "q75": np.quantile(d, 0.75, axis=0).tolist(),
        }
    est = np.asarray([[r["identification"]["d0"]] + r["identification"]["controls"] for r in reports])
    out["vectors_median"] = np.median(est, axis=0).tolist()
    return _plain(out)


# ------------------------------------------------------------- simulate / report


def simulate_stage_one(cfg: RunConfig, directory) -> list:
    """Write one stage-1 series per setting into ``directory/series``."""
    if cfg.truth is None:
        raise ConfigError("simulate needs a truth model")
    lab = RecordingLab(SimulatedLab(cfg.truth), directory)
    return [lab.series(Experiment(1, m, f), cfg.sampling) for m, f in cfg.settings()]
