"""Run configuration files.

INI layout (JSON with the same sections is accepted for ``.json`` paths)::

    [sampling]
    dt = 0.25
    tf = 125
    ne = 10               ; or "inf" for noiseless records
    readout_error = 0.03

    [run]
    seed = 0
    replicates = 1
    method = fourier      ; fourier | cosine | parabola
    output_dir = out
    reference = 0, 0.0    ; (channel, f) of the reference axis
    stage2_periods = 8
    ne_refine = 400
    readout_correction = true
    polish = true
    interpolate = true

    [truth]               ; omit for replay of recorded data
    d0 = 0.2, 0, 0.1

    [channel 1]
    d = 1, 1, 0           ; omit for replay
    f = 0.05, 0.1, 0.15, 0.2

In JSON, channels live under ``"channels": {"1": {"d": [...], "f": [...]}}``.
"""
from __future__ import annotations

import configparser
import json
from pathlib import Path

from .bloch import HamiltonianModel
from .errors import ConfigError
from .measurement import EXACT, SamplingConfig
from .pipeline import RunConfig

DEFAULT_GRID = (0.05, 0.1, 0.15, 0.2)


def _floats(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).replace(";", ",").split(",") if v.strip()]


def _bool(value) -> bool:
    if isinstance(value, bool):
        return value
    v = str(value).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {value!r}")


def _ne(value) -> float:
    if str(value).strip().lower() in ("inf", "infinity", "exact"):
        return EXACT
    return int(value)


def _read_sections(path: Path) -> dict:
    text = path.read_text()
    if path.suffix.lower() == ".json":
        data = json.loads(text)
        sections = {k: v for k, v in data.items() if k != "channels"}
        for m, body in data.get("channels", {}).items():
            sections[f"channel {m}"] = body
        return sections
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    parser.read_string(text, source=str(path))
    return {name: dict(parser[name]) for name in parser.sections()}


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        sections = _read_sections(path)
    except (OSError, json.JSONDecodeError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        return build_config(sections)
    except (KeyError, ValueError, TypeError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid config {path}: {exc}") from None


def build_config(sections: dict) -> RunConfig:
    samp = sections.get("sampling", {})
    run = sections.get("run", {})
    sampling = SamplingConfig(
        dt=float(samp.get("dt", 0.25)),
        tf=float(samp.get("tf", 125.0)),
        ne=_ne(samp.get("ne", 10)),
        readout_error=float(samp.get("readout_error", 0.0)),
        seed=int(run.get("seed", samp.get("seed", 0))),
    )
    channels = {}
    for name, body in sections.items():
        if name.startswith("channel"):
            m = int(name.split()[-1])
            channels[m] = body
    grid = {m: _floats(body.get("f", DEFAULT_GRID)) for m, body in channels.items()}
    truth = None
    if "truth" in sections:
        missing = [m for m, body in channels.items() if "d" not in body]
        if missing:
            raise ConfigError(f"truth model needs 'd' for channels {missing}")
        truth = HamiltonianModel(
            _floats(sections["truth"]["d0"]),
            [_floats(channels[m]["d"]) for m in sorted(channels)],
        )
    reference = _floats(run.get("reference", "0, 0"))
    ne_refine = run.get("ne_refine")
    return RunConfig(
        sampling=sampling,
        control_grid=grid,
        truth=truth,
        method=str(run.get("method", "fourier")),
        replicates=int(run.get("replicates", 1)),
        output_dir=str(run.get("output_dir", "out")),
        reference=(int(reference[0]), reference[1]),
        stage2_periods=float(run.get("stage2_periods", 8.0)),
        ne_refine=400 if ne_refine is None else _ne(ne_refine),
        readout_correction=_bool(run.get("readout_correction", True)),
        polish=_bool(run.get("polish", True)),
        interpolate=_bool(run.get("interpolate", True)),
    )


def benchmark_config(**overrides) -> RunConfig:
    """The two-channel test system with d0=(0.2,0,0.1), d1=(1,1,0), d2=(0,0,1)."""
    kwargs = dict(
        sampling=SamplingConfig(dt=0.25, tf=125.0, ne=10, readout_error=0.03, seed=0),
        control_grid={1: list(DEFAULT_GRID), 2: list(DEFAULT_GRID)},
        truth=HamiltonianModel([0.2, 0.0, 0.1], [[1.0, 1.0, 0.0], [0.0, 0.0, 1.0]]),
    )
    kwargs.update(overrides)
    return RunConfig(**kwargs)


