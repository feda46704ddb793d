"""Plot-ready CSV files from a finished identify run directory."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .measurement import read_series
from .pipeline import Experiment
from .spectral import dft, fit_parabola, sharpness_curve


def _write(path: Path, header: str, rows) -> Path:
    lines = [header] + [",".join(repr(float(v)) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")
    return path


def load_report(run_dir) -> dict:
    path = Path(run_dir) / "report.json"
    if not path.exists():
        raise ConfigError(f"no report at {path}; run 'identify' first")
    report = json.loads(path.read_text() or "{}")
    if not report.get("stage1"):
        raise ConfigError(f"report {path} is empty")
    return report


def write_plot_data(run_dir) -> list[Path]:
    run_dir = Path(run_dir)
    report = load_report(run_dir)
    out = run_dir / "plots"
    out.mkdir(exist_ok=True)
    written = []

    for st in report["stage1"]:
        exp = Experiment(1, st["channel"], st["f"])
        series = read_series(run_dir / "series" / f"{exp.name}.csv")
        tag = f"m{exp.channel}_f{exp.f!r}"
        written.append(_write(out / f"fig2_{tag}_series.csv", "t,z", zip(series.times, series.values)))
        n = int(round(st["t_opt"] / series.config.dt))
        spec = dft(series.head(n))
        half = len(spec) // 2 + 1
        written.append(_write(out / f"fig2_{tag}_spectrum.csv", "omega,absF",
                              zip(spec.frequencies[:half], spec.magnitudes()[:half])))
        durations, values = sharpness_curve(series)
        keep = np.isfinite(values)
        written.append(_write(out / f"fig2_{tag}_sharpness.csv", "tf,P", zip(durations[keep], values[keep])))

    ref = (report["reference"]["channel"], report["reference"]["f"])
    for st in report["stage2"]:
        for prep in st["preps"]:
            exp = Experiment(2, st["channel"], st["f"], tuple(ref), prep["prep_time"], prep["branch"])
            tag = f"m{exp.channel}_f{exp.f!r}_b{exp.branch:+d}"
            series = read_series(run_dir / "series" / f"{exp.name}.csv")
            written.append(_write(out / f"fig3_{tag}_series.csv", "t,z", zip(series.times, series.values)))
            rows = []
            for k in range(2):
                path = run_dir / "acquisitions" / f"{exp.name}_acq{k}.csv"
                if not path.exists():
                    break
                acq = read_series(path)
                _, _, coef = fit_parabola(acq.times, acq.values)
                fitted = np.polyval(coef, acq.times - np.mean(acq.times))
                rows += [(t, z, fz, k) for t, z, fz in zip(acq.times, acq.values, fitted)]
            if rows:
                written.append(_write(out / f"fig3_{tag}_parabola.csv", "t,z,fit,window", rows))

    fits = {(f["channel"], f["component"]): f for f in report["identification"]["fits"]}
    channels = sorted({m for m, _ in fits})
    for m in channels:
        rows = []
        for entry in report["axes"]:
            if entry["channel"] not in (0, m):
                continue
            f = entry["f"]
            line = [fits[(m, c)]["intercept"] + fits[(m, c)]["slope"] * f for c in "xyz"]
            rows.append([f, *entry["axis"], *line])
        rows.sort()
        written.append(_write(out / f"fig4_channel{m}.csv", "f,x,y,z,fitx,fity,fitz", rows))
    return written
