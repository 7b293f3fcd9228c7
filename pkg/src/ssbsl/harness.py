"""Experiment protocol: prior construction, initial learning, trial loop, metrics."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bayes import ClassPosteriorState
from .classifier import MODE_NAMES, GcmClassifier, LearningMode
from .data import TrialDataset, atomic_write, available_trials, load_trials
from .drift import DEFAULT_SEED, DriftScenario, generate_trial, resolve_scenario
from .errors import ConfigError, NumericalError

CONFIG_SCHEMA_VERSION = 1
DEFAULT_THETA = 0.9
RIDGE_SCALE = 1e-8

# Trial-averaged EMG accuracies reported for the six-subject dataset. Kept
# for documentation; that dataset is not public, so nothing asserts them.
REFERENCE_EMG_ACCURACY = {"ss": 0.934, "fs": 0.955, "frozen": 0.889}

REPORT_COLUMNS = ("mode", "trial", "accuracy", "n_gated_in", "n_gated_out", "mean_conf")


@dataclass(frozen=True)
class PriorConfig:
    """Shared prior hyperparameters.

    ``w_source`` is ``"training_covariance"``, ``"identity"`` or an explicit
    D x D matrix. With the training covariance, ``w_reading="literal"`` sets
    W to that covariance; ``"precision"`` sets W = cov^-1 / nu so that the
    prior mean precision nu W equals the empirical precision.
    ``alpha_init`` is ``"half_normal"`` (|N(0, 1)| draws) or a positive number
    used for every class.
    """

    m: tuple[float, ...] | None = None
    beta: float = 1.0
    nu_offset: float = 1.0
    w_source: str | tuple = "training_covariance"
    w_reading: str = "literal"
    alpha_init: str | float = "half_normal"

    def __post_init__(self):
        if not self.beta > 0:
            raise ConfigError(f"beta must be positive, got {self.beta}")
        if not self.nu_offset > -1:
            raise ConfigError(f"nu_offset must exceed -1 so that nu > D - 1, got {self.nu_offset}")
        if self.w_reading not in ("literal", "precision"):
            raise ConfigError(f"w_reading must be 'literal' or 'precision', got {self.w_reading!r}")
        if isinstance(self.w_source, str):
            if self.w_source not in ("training_covariance", "identity"):
                raise ConfigError(f"unknown w_source {self.w_source!r}")
        if isinstance(self.alpha_init, str):
            if self.alpha_init != "half_normal":
                raise ConfigError(f"unknown alpha_init {self.alpha_init!r}")
        elif not float(self.alpha_init) > 0:
            raise ConfigError("uniform alpha_init must be positive")

    @classmethod
    def from_dict(cls, doc: dict | None) -> "PriorConfig":
        doc = dict(doc or {})
        w = doc.get("w_source", "training_covariance")
        if not isinstance(w, str):
            w = tuple(tuple(float(v) for v in row) for row in w)
        m = doc.get("m")
        return cls(
            m=None if m is None else tuple(float(v) for v in m),
            beta=float(doc.get("beta", 1.0)),
            nu_offset=float(doc.get("nu_offset", 1.0)),
            w_source=w,
            w_reading=doc.get("w_reading", "literal"),
            alpha_init=doc.get("alpha_init", "half_normal"),
        )

    def to_dict(self) -> dict:
        return {
            "m": None if self.m is None else list(self.m),
            "beta": self.beta,
            "nu_offset": self.nu_offset,
            "w_source": self.w_source if isinstance(self.w_source, str) else [list(r) for r in self.w_source],
            "w_reading": self.w_reading,
            "alpha_init": self.alpha_init,
        }


def _training_covariance(x: np.ndarray) -> np.ndarray:
    if x.shape[0] < 2:
        raise NumericalError("need at least two training samples to estimate a covariance")
    cov = np.atleast_2d(np.cov(x, rowvar=False))
    d = cov.shape[0]
    eig = np.linalg.eigvalsh(cov)
    # Cholesky can succeed on a rank-deficient matrix through rounding, so test conditioning
    if eig[0] > d * np.finfo(float).eps * eig[-1]:
        return cov
    ridged = cov + RIDGE_SCALE * np.trace(cov) / d * np.eye(d)
    try:
        if not np.trace(cov) > 0:
            raise np.linalg.LinAlgError("zero covariance")
        np.linalg.cholesky(ridged)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            "training covariance is singular even after a ridge of "
            f"{RIDGE_SCALE:g} * trace/D; check for constant or collinear features, "
            "or use w_source='identity'"
        ) from exc
    return ridged


def build_prior(
    config: PriorConfig, train: TrialDataset, num_classes: int, seed: int = DEFAULT_SEED
) -> ClassPosteriorState:
    d = train.dim
    m = np.zeros(d) if config.m is None else np.asarray(config.m, dtype=float)
    if m.shape != (d,):
        raise ConfigError(f"prior mean has length {m.shape[0]}, data dimension is {d}")
    nu = d + config.nu_offset

    if isinstance(config.w_source, str) and config.w_source == "identity":
        w_inv = np.eye(d)
    elif isinstance(config.w_source, str):
        if len(train) == 0:
            raise ConfigError("training data are required to derive W from their covariance")
        cov = _training_covariance(train.features)
        w_inv = np.linalg.inv(cov) if config.w_reading == "literal" else nu * cov
    else:
        w = np.asarray(config.w_source, dtype=float)
        if w.shape != (d, d):
            raise ConfigError(f"explicit W must be {d}x{d}")
        w_inv = np.linalg.inv(w)
    w_inv = 0.5 * (w_inv + w_inv.T)

    if config.alpha_init == "half_normal":
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0xA1FA,)))
        alpha = np.abs(rng.standard_normal(num_classes))
        # |N(0,1)| is zero with probability 0, but a literal zero is invalid
        alpha = np.where(alpha > 0, alpha, np.finfo(float).eps)
    else:
        alpha = np.full(num_classes, float(config.alpha_init))
    return ClassPosteriorState.shared_prior(m, config.beta, nu, w_inv, alpha)


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: data source, trial split, modes, threshold and seed.

    ``source`` is a drift scenario (object, dict, ``preset:<name>`` or JSON
    path) or ``{"features_dir": path}`` pointing at trial_<t>.csv files.
    """

    source: object = "preset:paper"
    train_trials: tuple[int, ...] | None = None
    test_trials: tuple[int, ...] | None = None
    modes: tuple[str, ...] = MODE_NAMES
    theta_th: float = DEFAULT_THETA
    seed: int = DEFAULT_SEED
    prior: PriorConfig = field(default_factory=PriorConfig)
    num_classes: int | None = None

    def __post_init__(self):
        if not self.modes:
            raise ConfigError("at least one learning mode is required")
        for name in self.modes:
            LearningMode.parse(name, self.theta_th)
        if len(set(self.modes)) != len(self.modes):
            raise ConfigError("duplicate learning modes")
        if self.train_trials is not None and self.test_trials is not None:
            if set(self.train_trials) & set(self.test_trials):
                raise ConfigError("training and test trials overlap")
        if self.test_trials is not None and list(self.test_trials) != sorted(set(self.test_trials)):
            raise ConfigError("test trials must be strictly increasing")

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        version = doc.get("schema_version")
        if version != CONFIG_SCHEMA_VERSION:
            raise ConfigError(f"config schema_version must be {CONFIG_SCHEMA_VERSION}, got {version!r}")
        data = doc.get("data", {"scenario": "preset:paper"})
        if "features_dir" in data:
            source = {"features_dir": data["features_dir"]}
        elif "scenario" in data:
            source = data["scenario"]
        else:
            raise ConfigError("data must name either 'scenario' or 'features_dir'")
        opt = lambda k: None if doc.get(k) is None else tuple(int(v) for v in doc[k])  # noqa: E731
        return cls(
            source=source,
            train_trials=opt("train_trials"),
            test_trials=opt("test_trials"),
            modes=tuple(doc.get("modes", MODE_NAMES)),
            theta_th=float(doc.get("theta_th", DEFAULT_THETA)),
            seed=int(doc.get("seed", DEFAULT_SEED)),
            prior=PriorConfig.from_dict(doc.get("prior")),
            num_classes=doc.get("num_classes"),
        )

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        try:
            doc = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(doc)


@dataclass(frozen=True)
class TrialRecord:
    mode: str
    trial: int
    accuracy: float | None
    n_gated_in: int
    n_gated_out: int
    mean_conf: float


@dataclass(frozen=True)
class ExperimentReport:
    records: tuple[TrialRecord, ...]

    @property
    def modes(self) -> list[str]:
        seen: list[str] = []
        for r in self.records:
            if r.mode not in seen:
                seen.append(r.mode)
        return seen

    def for_mode(self, mode: str) -> list[TrialRecord]:
        return [r for r in self.records if r.mode == mode]

    def accuracies(self, mode: str) -> np.ndarray:
        return np.array([r.accuracy for r in self.for_mode(mode) if r.accuracy is not None])

    def mean_accuracy(self, mode: str) -> float | None:
        acc = self.accuracies(mode)
        return float(acc.mean()) if acc.size else None

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        for r in self.records:
            w.writerow([
                r.mode,
                r.trial,
                "" if r.accuracy is None else repr(r.accuracy),
                r.n_gated_in,
                r.n_gated_out,
                repr(r.mean_conf),
            ])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ExperimentReport":
        reader = csv.DictReader(io.StringIO(text))
        if tuple(reader.fieldnames or ()) != REPORT_COLUMNS:
            raise ConfigError(f"report header must be {','.join(REPORT_COLUMNS)}")
        records = []
        for row in reader:
            records.append(TrialRecord(
                mode=row["mode"],
                trial=int(row["trial"]),
                accuracy=float(row["accuracy"]) if row["accuracy"] else None,
                n_gated_in=int(row["n_gated_in"]),
                n_gated_out=int(row["n_gated_out"]),
                mean_conf=float(row["mean_conf"]),
            ))
        return cls(tuple(records))

    def summary(self) -> dict:
        return {mode: self.mean_accuracy(mode) for mode in self.modes}


def _load_data(config: ExperimentConfig) -> tuple[list[TrialDataset], list[TrialDataset]]:
    src = config.source
    if isinstance(src, dict) and "features_dir" in src:
        directory = src["features_dir"]
        ids = available_trials(directory)
        if not ids:
            raise ConfigError(f"no trial_<t>.csv files in {directory}")
        train_ids = list(config.train_trials or ids[:1])
        test_ids = list(config.test_trials or [t for t in ids if t not in train_ids])
        return load_trials(directory, train_ids), load_trials(directory, test_ids)
    scenario: DriftScenario = resolve_scenario(src, seed=config.seed)
    train_ids = list(config.train_trials or [1])
    test_ids = list(
        config.test_trials or [t for t in range(1, scenario.trials + 1) if t not in train_ids]
    )
    return (
        [generate_trial(scenario, t) for t in train_ids],
        [generate_trial(scenario, t) for t in test_ids],
    )


def run_mode(
    prior: ClassPosteriorState,
    train: TrialDataset,
    tests: list[TrialDataset],
    mode: LearningMode,
) -> tuple[list[TrialRecord], list[GcmClassifier]]:
    """Initial learning then the trial loop for one mode.

    Returns the per-trial records and the classifier history: entry ``k`` is
    the model used to predict ``tests[k]``; the last entry is the final model.
    """
    clf = GcmClassifier.fit_initial(train, prior, mode)
    records = []
    history = [clf]
    for trial in tests:
        clf, out = clf.process_trial(trial)
        history.append(clf)
        records.append(
            TrialRecord(mode.kind, trial.trial_id, out.accuracy, out.n_gated_in,
                        out.n_gated_out, out.mean_confidence)
        )
    return records, history


def prepare_experiment(
    config: ExperimentConfig,
) -> tuple[ClassPosteriorState, TrialDataset, list[TrialDataset]]:
    """Resolve the data and build the prior shared by every mode."""
    train_trials, tests = _load_data(config)
    train = TrialDataset.concat(train_trials)
    if train.labels is None:
        raise ConfigError("training trials must be labelled")
    if config.num_classes:
        num_classes = int(config.num_classes)
    else:
        seen = [train.labels] + [t.labels for t in tests if t.labels is not None]
        num_classes = int(max(int(y.max()) for y in seen)) + 1
    prior = build_prior(config.prior, train, num_classes, config.seed)
    return prior, train, tests


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    prior, train, tests = prepare_experiment(config)
    records: list[TrialRecord] = []
    for name in config.modes:
        mode = LearningMode.parse(name, config.theta_th)
        recs, _ = run_mode(prior, train, tests, mode)
        records.extend(recs)
    return ExperimentReport(tuple(records))


def summarize(reports: list[ExperimentReport]) -> dict:
    """Per-mode accuracy averaged over trials, then over runs."""
    if not reports:
        raise ConfigError("nothing to summarize")
    modes: list[str] = []
    for rep in reports:
        modes += [m for m in rep.modes if m not in modes]
    out = {}
    for mode in modes:
        means = [rep.mean_accuracy(mode) for rep in reports]
        means = [m for m in means if m is not None]
        out[mode] = {
            "mean_accuracy": float(np.mean(means)) if means else None,
            "runs": len(means),
        }
    return out


def summary_csv(summary: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["mode", "mean_accuracy", "runs"])
    for mode, row in summary.items():
        acc = row["mean_accuracy"]
        w.writerow([mode, "" if acc is None else repr(acc), row["runs"]])
    return buf.getvalue()


def write_run(report: ExperimentReport, out_dir: str | Path) -> None:
    out_dir = Path(out_dir)
    atomic_write(out_dir / "report.csv", report.to_csv())
    summary = summarize([report])
    atomic_write(out_dir / "summary.json", json.dumps(summary, indent=1, sort_keys=True) + "\n")
