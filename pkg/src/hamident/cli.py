"""Command line entry point: ``hamident simulate | identify | report``."""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .config import load_config, benchmark_config
from .errors import ConfigError, EstimationError
from .pipeline import (
    RecordingLab,
    ReplayLab,
    SimulatedLab,
    dump_report,
    run_identification,
    simulate_stage_one,
    summarize,
)
from .report import write_plot_data

log = logging.getLogger("hamident")

EXIT_CONFIG = 2
EXIT_ESTIMATION = 3


def _config(args):
    cfg = load_config(args.config) if args.config else benchmark_config()
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    if args.out is not None:
        cfg = replace(cfg, output_dir=args.out)
    if getattr(args, "method", None):
        cfg = replace(cfg, method=args.method)
    if args.replicates is not None:
        cfg = replace(cfg, replicates=args.replicates)
    if args.exact:
        cfg = cfg.as_exact()
    return cfg


def _seed_dirs(cfg):
    root = Path(cfg.output_dir)
    for r in range(cfg.replicates):
        seed = cfg.seed + r
        yield cfg.with_seed(seed), root / f"seed_{seed}"


def cmd_simulate(args) -> int:
    cfg = _config(args)
    for run_cfg, directory in _seed_dirs(cfg):
        series = simulate_stage_one(run_cfg, directory)
        log.info("wrote %d stage-1 series to %s", len(series), directory / "series")
    return 0


def cmd_identify(args) -> int:
    cfg = _config(args)
    reports = []
    for run_cfg, directory in _seed_dirs(cfg):
        directory.mkdir(parents=True, exist_ok=True)
        live = SimulatedLab(run_cfg.truth) if run_cfg.truth is not None else None
        if args.replay:
            lab = ReplayLab(Path(args.replay) / directory.name, fallback=live)
        elif live is None:
            raise ConfigError("config has no [truth] section; pass --replay DIR with recorded data")
        else:
            lab = live
        report = run_identification(run_cfg, RecordingLab(lab, directory))
        (directory / "report.json").write_text(dump_report(report))
        reports.append(report)
        if "distances" in report:
            log.info("seed %d distances %s", run_cfg.seed, ["%.4g" % d for d in report["distances"]])
    summary = dump_report(summarize(reports))
    Path(cfg.output_dir, "summary.json").write_text(summary)
    print(summary, end="")
    return 0


def cmd_report(args) -> int:
    root = Path(args.out or "out")
    run_dirs = sorted(p.parent for p in root.glob("seed_*/report.json"))
    if (root / "report.json").exists():
        run_dirs = [root]
    if not run_dirs:
        raise ConfigError(f"no report.json under {root}; run 'identify' first")
    for run_dir in run_dirs:
        for path in write_plot_data(run_dir):
            log.info("wrote %s", path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hamident", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, method=True):
        p.add_argument("--config", help="INI or JSON run config (default: built-in test system)")
        p.add_argument("--seed", type=int, help="master seed (replicates use seed, seed+1, ...)")
        p.add_argument("--out", help="output directory")
        p.add_argument("--exact", action="store_true", help="noiseless records")
        p.add_argument("--replicates", type=int)
        if method:
            p.add_argument("--method", choices=sorted({"fourier", "cosine", "parabola"}))

    common(sub.add_parser("simulate", help="write stage-1 series"), method=False)
    p = sub.add_parser("identify", help="run the identification protocol")
    common(p)
    p.add_argument("--replay", help="directory written by 'simulate' or 'identify' to read data from")
    p = sub.add_parser("report", help="write plot-ready CSVs for an identify run")
    p.add_argument("--out", help="run directory (default: out)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    handlers = {"simulate": cmd_simulate, "identify": cmd_identify, "report": cmd_report}
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EstimationError as exc:
        print(f"estimation failed: {exc}", file=sys.stderr)
        return EXIT_ESTIMATION
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
