"""Stage-1 benchmark: axis (0.2, 0, 0.2) observed from the pole.

Runs every stage-1 method over a range of seeds and prints the median errors
in omega and theta, with and without readout correction. With ``--csv`` the
series, spectrum and sharpness curve of the first seed are written out.

    python scripts/fig2_stage_one.py --seeds 50 --csv out/fig2
"""
import argparse
import math
from pathlib import Path

import numpy as np

from hamident.bloch import POLE, HamiltonianModel
from hamident.measurement import SamplingConfig, run_precession_experiment, simulated_acquirer, write_series
from hamident.spectral import (
    dft,
    estimate_fourier,
    find_peak,
    fit_cosine_segment,
    refine_minimum_parabola,
    sharpness_curve,
)

AXIS = np.array([0.2, 0.0, 0.2])
OMEGA, THETA = math.sqrt(0.08), math.pi / 4


def run(seed, args, correct):
    model = HamiltonianModel(AXIS)
    cfg = SamplingConfig(dt=args.dt, tf=args.tf, ne=args.ne, readout_error=args.readout_error, seed=seed)
    series = run_precession_experiment(model, 0, 0.0, POLE, cfg)
    fourier = estimate_fourier(series, correct_readout=correct)
    cosine = fit_cosine_segment(series, find_peak(dft(series))[1], correct_readout=correct)
    acquire = simulated_acquirer(model, 0, 0.0, POLE, cfg, ne=args.ne_refine)
    parabola = refine_minimum_parabola(series, fourier.omega, acquire, correct_readout=correct)
    return series, {"fourier": fourier, "cosine-fit": cosine, "minimum-parabola": parabola}


def dump(series, directory):
    directory.mkdir(parents=True, exist_ok=True)
    write_series(series, directory / "series.csv")
    (directory / "spectrum.csv").write_text(dft(series).to_csv())
    tf, p = sharpness_curve(series)
    np.savetxt(directory / "sharpness.csv", np.column_stack([tf, p]), delimiter=",", header="tf,P", comments="")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=50)
    ap.add_argument("--dt", type=float, default=0.25)
    ap.add_argument("--tf", type=float, default=125.0)
    ap.add_argument("--ne", type=int, default=10)
    ap.add_argument("--readout-error", type=float, default=0.03)
    ap.add_argument("--ne-refine", type=int, default=400)
    ap.add_argument("--csv", type=Path, help="directory for the first seed's plot data")
    args = ap.parse_args()

    print(f"truth: omega={OMEGA:.4f} theta={THETA:.4f}; {args.seeds} seeds")
    for correct in (False, True):
        errs = {}
        for seed in range(args.seeds):
            series, ests = run(seed, args, correct)
            if seed == 0 and args.csv and correct:
                dump(series, args.csv)
                print(f"single run (seed 0): omega={ests['fourier'].omega:.4f} theta={ests['fourier'].theta:.4f}"
                      f" t_opt={ests['fourier'].t_opt:.2f}")
            for name, est in ests.items():
                errs.setdefault(name, []).append((abs(est.omega - OMEGA), abs(est.theta - THETA)))
        print(f"readout correction {'on' if correct else 'off'}:")
        for name, e in errs.items():
            e = np.asarray(e)
            print(f"  {name:17s} median |d omega| {np.median(e[:, 0]):.4f}  median |d theta| {np.median(e[:, 1]):.4f}")


if __name__ == "__main__":
    main()
