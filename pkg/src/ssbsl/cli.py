"""Command-line entry point: simulate, features, train, run, report.

Exit status: 0 on success, 2 for usage or configuration errors, 3 for
numerical failures. Diagnostics go to stderr; data go to stdout only with
``--stdout``.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .classifier import MODE_NAMES, GcmClassifier, LearningMode
from .data import TrialDataset, atomic_write
from .drift import DEFAULT_SEED, resolve_scenario, write_trials
from .errors import InvalidStateError, NumericalError, SsbslError
from .features import DEFAULT_CUTOFF_HZ, DEFAULT_TRIM, RawRecording, extract_features
from .harness import (
    DEFAULT_THETA,
    ExperimentConfig,
    ExperimentReport,
    PriorConfig,
    prepare_experiment,
    run_experiment,
    run_mode,
    summarize,
    summary_csv,
    write_run,
)

log = logging.getLogger("ssbsl")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _mode_list(text: str) -> tuple[str, ...]:
    modes = tuple(m.strip().lower() for m in text.split(",") if m.strip())
    bad = [m for m in modes if m not in MODE_NAMES]
    if bad or not modes:
        raise argparse.ArgumentTypeError(f"modes must be drawn from {','.join(MODE_NAMES)}")
    return modes


def _add_prior_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--w-source", choices=["training_covariance", "identity"], default=None)
    p.add_argument("--w-reading", choices=["literal", "precision"], default=None)


def _add_data_flags(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group()
    src.add_argument("--scenario", help="preset:paper, preset:mild or a scenario JSON file")
    src.add_argument("--data", help="directory of trial_<t>.csv feature files")
    p.add_argument("--train-trials", type=_int_list, default=None)
    p.add_argument("--test-trials", type=_int_list, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--theta", type=float, default=None, help="confidence threshold (default 0.9)")
    p.add_argument("--config", help="experiment config JSON (schema_version 1)")
    _add_prior_flags(p)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ssbsl", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="write drifting-Gaussian trial CSVs")
    p.add_argument("--scenario", default="preset:paper")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("features", help="rectify, low-pass and trim raw recordings")
    p.add_argument("--in", dest="inputs", action="append", required=True,
                   help="raw CSV with columns ch1..chD (repeatable)")
    p.add_argument("--meta", action="append", required=True,
                   help="sidecar JSON for the matching --in (repeatable)")
    p.add_argument("--out", required=True)
    p.add_argument("--cutoff-hz", type=float, default=DEFAULT_CUTOFF_HZ)
    p.add_argument("--trim", type=float, default=DEFAULT_TRIM)
    p.add_argument("--stdout", action="store_true")

    p = sub.add_parser("train", help="initial learning; writes a .gcm.json checkpoint")
    _add_data_flags(p)
    p.add_argument("--mode", default="ss", choices=MODE_NAMES)
    p.add_argument("--out", required=True)

    p = sub.add_parser("run", help="full experiment for one or more learning modes")
    _add_data_flags(p)
    p.add_argument("--modes", type=_mode_list, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--figures", action="store_true",
                   help="also render predictive snapshots (2-D data only)")
    p.add_argument("--stdout", action="store_true")

    p = sub.add_parser("report", help="summaries, plot data and figures from run directories")
    p.add_argument("runs", nargs="+", help="run directories containing report.csv")
    p.add_argument("--out", required=True)
    p.add_argument("--no-figures", action="store_true")
    p.add_argument("--stdout", action="store_true")
    return parser


def _experiment_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    doc = {}
    if args.scenario:
        doc["source"] = args.scenario
    if args.data:
        doc["source"] = {"features_dir": args.data}
    for flag, key in (("train_trials", "train_trials"), ("test_trials", "test_trials"),
                      ("seed", "seed"), ("theta", "theta_th")):
        if getattr(args, flag) is not None:
            doc[key] = getattr(args, flag)
    if getattr(args, "modes", None):
        doc["modes"] = args.modes
    prior = cfg.prior.to_dict()
    if args.w_source:
        prior["w_source"] = args.w_source
    if args.w_reading:
        prior["w_reading"] = args.w_reading
    doc["prior"] = PriorConfig.from_dict(prior)
    fields = {k: getattr(cfg, k) for k in cfg.__dataclass_fields__}
    fields.update(doc)
    return ExperimentConfig(**fields)


def cmd_simulate(args) -> int:
    scenario = resolve_scenario(args.scenario, seed=args.seed)
    paths = write_trials(scenario, args.out)
    log.info("wrote %d trial files to %s", len(paths), args.out)
    return EXIT_OK


def cmd_features(args) -> int:
    if len(args.inputs) != len(args.meta):
        raise_usage("every --in needs a matching --meta")
    parts = []
    for csv_path, meta_path in zip(args.inputs, args.meta):
        rec = RawRecording.from_files(csv_path, meta_path)
        parts.append(extract_features(rec, args.cutoff_hz, args.trim))
    dims = {p.dim for p in parts}
    if len(dims) != 1:
        raise_usage(f"recordings disagree on channel count: {sorted(dims)}")
    out = TrialDataset.concat(parts, trial_id=parts[0].trial_id)
    text = out.to_csv()
    atomic_write(args.out, text)
    if args.stdout:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _experiment_config(args)
    prior, train, _ = prepare_experiment(cfg)
    mode = LearningMode.parse(args.mode, cfg.theta_th)
    GcmClassifier.fit_initial(train, prior, mode).save(args.out)
    log.info("wrote checkpoint %s", args.out)
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = _experiment_config(args)
    report = run_experiment(cfg)
    out = Path(args.out)
    write_run(report, out)
    atomic_write(out / "config.json", json.dumps(_config_doc(cfg), indent=1, sort_keys=True) + "\n")
    if args.figures:
        _snapshots(cfg, out)
    if args.stdout:
        sys.stdout.write(report.to_csv())
    return EXIT_OK


def _config_doc(cfg: ExperimentConfig) -> dict:
    src = cfg.source
    if isinstance(src, dict) and "features_dir" in src:
        data = {"features_dir": str(src["features_dir"])}
    elif isinstance(src, str):
        data = {"scenario": src}
    elif isinstance(src, dict):
        data = {"scenario": src}
    else:
        data = {"scenario": src.to_dict()}
    return {
        "schema_version": 1,
        "data": data,
        "train_trials": None if cfg.train_trials is None else list(cfg.train_trials),
        "test_trials": None if cfg.test_trials is None else list(cfg.test_trials),
        "modes": list(cfg.modes),
        "theta_th": cfg.theta_th,
        "seed": cfg.seed,
        "prior": cfg.prior.to_dict(),
        "num_classes": cfg.num_classes,
    }


def _snapshots(cfg: ExperimentConfig, out: Path) -> None:
    from .plotting import plot_predictive_snapshots

    prior, train, tests = prepare_experiment(cfg)
    if train.dim != 2:
        log.warning("predictive snapshots skipped: features are %d-D", train.dim)
        return
    for name in cfg.modes:
        _, history = run_mode(prior, train, tests, LearningMode.parse(name, cfg.theta_th))
        plot_predictive_snapshots(
            [c.state for c in history[:-1]], tests, out / "figures" / f"snapshots_{name}.png", title=name
        )


def cmd_report(args) -> int:
    from .plotting import write_report_outputs

    reports = []
    for run_dir in args.runs:
        path = Path(run_dir) / "report.csv"
        if not path.exists():
            raise_usage(f"no report.csv in {run_dir}")
        reports.append(ExperimentReport.from_csv(path.read_text()))
    summary = summarize(reports)
    out = Path(args.out)
    atomic_write(out / "summary.json", json.dumps(summary, indent=1, sort_keys=True) + "\n")
    atomic_write(out / "summary.csv", summary_csv(summary))
    write_report_outputs(reports, out, figures=not args.no_figures)
    if args.stdout:
        sys.stdout.write(summary_csv(summary))
    return EXIT_OK


class _UsageError(Exception):
    pass


def raise_usage(msg: str):
    raise _UsageError(msg)


COMMANDS = {
    "simulate": cmd_simulate,
    "features": cmd_features,
    "train": cmd_train,
    "run": cmd_run,
    "report": cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except (NumericalError, InvalidStateError) as exc:
        print(f"ssbsl {args.command}: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (SsbslError, _UsageError, OSError) as exc:
        print(f"ssbsl {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
