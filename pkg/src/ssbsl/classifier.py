"""Gaussian classification model with trial-wise Bayesian sequential learning.

Three learning modes share the same predictor:

* ``frozen``  - the posterior is fixed after initial learning;
* ``ss``      - confidence-gated pseudo-labels update the posterior after each trial;
* ``fs``      - true labels update the posterior after each trial (oracle upper bound).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .bayes import ClassPosteriorState, accumulate_stats, class_posterior, update_posterior
from .data import TrialDataset, atomic_write
from .errors import ConfigError, DimensionError, MissingLabelError

FROZEN = "frozen"
SEMI_SUPERVISED = "ss"
FULLY_SUPERVISED = "fs"
MODE_NAMES = (FROZEN, SEMI_SUPERVISED, FULLY_SUPERVISED)


@dataclass(frozen=True)
class LearningMode:
    kind: str
    theta_th: float | None = None

    def __post_init__(self):
        if self.kind not in MODE_NAMES:
            raise ConfigError(f"unknown learning mode {self.kind!r}; expected one of {MODE_NAMES}")
        if self.kind == SEMI_SUPERVISED:
            if self.theta_th is None or not 0.0 <= self.theta_th <= 1.0:
                raise ConfigError(f"theta_th must lie in [0, 1], got {self.theta_th}")
            object.__setattr__(self, "theta_th", float(self.theta_th))
        elif self.theta_th is not None:
            raise ConfigError(f"mode {self.kind!r} takes no threshold")

    @classmethod
    def frozen(cls) -> "LearningMode":
        return cls(FROZEN)

    @classmethod
    def semi_supervised(cls, theta_th: float = 0.9) -> "LearningMode":
        return cls(SEMI_SUPERVISED, theta_th)

    @classmethod
    def fully_supervised(cls) -> "LearningMode":
        return cls(FULLY_SUPERVISED)

    @classmethod
    def parse(cls, name: str, theta_th: float = 0.9) -> "LearningMode":
        name = name.strip().lower()
        if name == SEMI_SUPERVISED:
            return cls.semi_supervised(theta_th)
        return cls(name)


@dataclass(frozen=True)
class Prediction:
    probs: np.ndarray
    predicted_class: int
    confidence: float


@dataclass(frozen=True)
class TrialOutcome:
    """Predictions for one trial plus what was fed back into the model."""

    trial_id: int
    probs: np.ndarray
    gated: np.ndarray
    accuracy: float | None = None
    predicted: np.ndarray = field(init=False)
    confidence: np.ndarray = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "predicted", np.argmax(self.probs, axis=1))
        object.__setattr__(self, "confidence", self.probs.max(axis=1))

    @property
    def n_gated_in(self) -> int:
        return int(np.count_nonzero(self.gated))

    @property
    def n_gated_out(self) -> int:
        return int(self.gated.shape[0] - self.n_gated_in)

    @property
    def mean_confidence(self) -> float:
        return float(self.confidence.mean())

    @property
    def predictions(self) -> list[Prediction]:
        return [
            Prediction(p, int(c), float(q))
            for p, c, q in zip(self.probs, self.predicted, self.confidence)
        ]


def gate_pseudo_labels(probs: np.ndarray, theta_th: float) -> tuple[np.ndarray, np.ndarray]:
    """Pseudo-labels (argmax, lowest index on ties) and the mask ``confidence > theta_th``."""
    probs = np.asarray(probs)
    return np.argmax(probs, axis=1), probs.max(axis=1) > theta_th


@dataclass(frozen=True)
class GcmClassifier:
    state: ClassPosteriorState
    mode: LearningMode
    trial_counter: int = 0

    @classmethod
    def fit_initial(
        cls, train: TrialDataset, prior: ClassPosteriorState, mode: LearningMode
    ) -> "GcmClassifier":
        if len(train) == 0:
            raise ConfigError("initial training data are empty")
        if train.labels is None:
            raise MissingLabelError("initial learning needs labelled data")
        if train.dim != prior.dim:
            raise DimensionError(f"training dimension {train.dim} != prior dimension {prior.dim}")
        stats = accumulate_stats(train.features, train.labels, prior.num_classes, prior.dim)
        return cls(update_posterior(prior, stats), mode, 0)

    @property
    def num_classes(self) -> int:
        return self.state.num_classes

    def predict_proba(self, x) -> np.ndarray:
        return class_posterior(self.state, x)

    def predict(self, x) -> Prediction:
        probs = class_posterior(self.state, np.asarray(x, dtype=float).reshape(-1))
        c = int(np.argmax(probs))
        return Prediction(probs, c, float(probs[c]))

    def process_trial(self, trial: TrialDataset) -> tuple["GcmClassifier", TrialOutcome]:
        """Predict the whole trial with the current posterior, then update once."""
        if len(trial) == 0:
            raise ConfigError("trial is empty")
        if trial.dim != self.state.dim:
            raise DimensionError(f"trial dimension {trial.dim} != model dimension {self.state.dim}")
        kind = self.mode.kind
        if kind == FULLY_SUPERVISED and trial.labels is None:
            raise MissingLabelError(f"trial {trial.trial_id}: fully supervised mode needs labels")

        probs = class_posterior(self.state, trial.features)
        n = len(trial)
        if kind == FROZEN:
            gated = np.zeros(n, dtype=bool)
            state = self.state
        elif kind == SEMI_SUPERVISED:
            pseudo, gated = gate_pseudo_labels(probs, self.mode.theta_th)
            stats = accumulate_stats(
                trial.features[gated], pseudo[gated], self.num_classes, self.state.dim
            )
            state = update_posterior(self.state, stats)
        else:
            gated = np.ones(n, dtype=bool)
            stats = accumulate_stats(trial.features, trial.labels, self.num_classes, self.state.dim)
            state = update_posterior(self.state, stats)

        accuracy = None
        if trial.labels is not None:
            accuracy = float(np.mean(np.argmax(probs, axis=1) == trial.labels))
        outcome = TrialOutcome(trial.trial_id, probs, gated, accuracy)
        return replace(self, state=state, trial_counter=self.trial_counter + 1), outcome

    # -- checkpoints ---------------------------------------------------
    def to_dict(self) -> dict:
        doc = self.state.to_dict()
        doc.update(
            mode=self.mode.kind,
            theta_th=None if self.mode.theta_th is None else float.hex(self.mode.theta_th),
            trial_counter=self.trial_counter,
        )
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "GcmClassifier":
        theta = doc.get("theta_th")
        if isinstance(theta, str):
            theta = float.fromhex(theta)
        return cls(
            ClassPosteriorState.from_dict(doc),
            LearningMode(doc["mode"], theta),
            int(doc["trial_counter"]),
        )

    def save(self, path: str | Path) -> None:
        atomic_write(path, json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "GcmClassifier":
        return cls.from_dict(json.loads(Path(path).read_text()))
