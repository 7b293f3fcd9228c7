"""Synthetic drifting-Gaussian trials.

Class ``c`` at trial ``t`` is drawn from N(base_c + t * velocity_c, cov_c).
Every (seed, t, class) triple gets its own random stream, so a trial can be
regenerated alone and in any order.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import TrialDataset, atomic_write, trial_path
from .errors import ConfigError, DimensionError

DEFAULT_SEED = 0


@dataclass(frozen=True)
class DriftScenario:
    base: np.ndarray  # (C, D)
    velocity: np.ndarray  # (C, D)
    covariance: np.ndarray  # (C, D, D)
    points_per_class: int
    trials: int
    rng_seed: int = DEFAULT_SEED
    name: str = "custom"

    def __post_init__(self):
        base = np.array(self.base, dtype=float)
        vel = np.array(self.velocity, dtype=float)
        cov = np.array(self.covariance, dtype=float)
        if base.ndim != 2 or vel.shape != base.shape:
            raise DimensionError("base and velocity must both be (C, D)")
        c, d = base.shape
        if cov.shape == (d, d):
            cov = np.broadcast_to(cov, (c, d, d)).copy()
        if cov.shape != (c, d, d):
            raise DimensionError(f"covariance must be (D, D) or (C, D, D), got {cov.shape}")
        for k in range(c):
            if not np.allclose(cov[k], cov[k].T):
                raise ConfigError(f"covariance of class {k} is not symmetric")
            try:
                np.linalg.cholesky(cov[k])
            except np.linalg.LinAlgError as exc:
                raise ConfigError(f"covariance of class {k} is not positive definite") from exc
        if int(self.points_per_class) < 1:
            raise ConfigError("points_per_class must be >= 1")
        if int(self.trials) < 1:
            raise ConfigError("trials must be >= 1")
        if not 0 <= int(self.rng_seed) < 2**64:
            raise ConfigError("rng_seed must be an unsigned 64-bit integer")
        for name, arr in (("base", base), ("velocity", vel), ("covariance", cov)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "points_per_class", int(self.points_per_class))
        object.__setattr__(self, "trials", int(self.trials))
        object.__setattr__(self, "rng_seed", int(self.rng_seed))

    @property
    def num_classes(self) -> int:
        return self.base.shape[0]

    @property
    def dim(self) -> int:
        return self.base.shape[1]

    def mean(self, t: int) -> np.ndarray:
        return self.base + t * self.velocity

    def with_seed(self, seed: int) -> "DriftScenario":
        return DriftScenario(
            self.base, self.velocity, self.covariance, self.points_per_class,
            self.trials, seed, self.name,
        )

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "name": self.name,
            "base": self.base.tolist(),
            "velocity": self.velocity.tolist(),
            "covariance": self.covariance.tolist(),
            "points_per_class": self.points_per_class,
            "trials": self.trials,
            "rng_seed": self.rng_seed,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "DriftScenario":
        try:
            return cls(
                base=doc["base"],
                velocity=doc["velocity"],
                covariance=doc["covariance"],
                points_per_class=doc["points_per_class"],
                trials=doc["trials"],
                rng_seed=doc.get("rng_seed", DEFAULT_SEED),
                name=doc.get("name", "custom"),
            )
        except KeyError as exc:
            raise ConfigError(f"scenario is missing field {exc}") from exc


def crossing_scenario(seed: int = DEFAULT_SEED) -> DriftScenario:
    """Two classes in 2-D whose means swap sides: [-6 + 1.2t, 3] and [6 - 1.2t, 3]."""
    return DriftScenario(
        base=[[-6.0, 3.0], [6.0, 3.0]],
        velocity=[[1.2, 0.0], [-1.2, 0.0]],
        covariance=3.0 * np.eye(2),
        points_per_class=300,
        trials=10,
        rng_seed=seed,
        name="paper",
    )


def mild_scenario(seed: int = DEFAULT_SEED) -> DriftScenario:
    """Non-crossing drift: both classes slide 0.3 per trial along their separation.

    At t=1 the means are [-3, 0] and [3, 0] (separation 6), covariance 3 I.
    """
    return DriftScenario(
        base=[[-3.3, 0.0], [2.7, 0.0]],
        velocity=[[0.3, 0.0], [0.3, 0.0]],
        covariance=3.0 * np.eye(2),
        points_per_class=300,
        trials=5,
        rng_seed=seed,
        name="mild",
    )


def random_mild_scenario(
    seed: int,
    num_classes: int = 6,
    dim: int = 4,
    points_per_class: int = 200,
    trials: int = 10,
    spread: float = 4.0,
    speed: float = 0.15,
) -> DriftScenario:
    """Random well-separated classes with small random linear drifts.

    Class centres are N(0, spread^2 I); velocities have norm ``speed`` in a
    random direction; covariances are random SPD with eigenvalues in [0.5, 1.5].
    """
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0xD1F7,)))
    base = rng.normal(0.0, spread, size=(num_classes, dim))
    direction = rng.normal(size=(num_classes, dim))
    velocity = speed * direction / np.linalg.norm(direction, axis=1, keepdims=True)
    cov = np.empty((num_classes, dim, dim))
    for c in range(num_classes):
        q, _ = np.linalg.qr(rng.normal(size=(dim, dim)))
        cov[c] = (q * rng.uniform(0.5, 1.5, size=dim)) @ q.T
        cov[c] = 0.5 * (cov[c] + cov[c].T)
    return DriftScenario(
        base, velocity, cov, points_per_class, trials, seed, name=f"random-mild-{seed}"
    )


PRESETS = {"paper": crossing_scenario, "mild": mild_scenario}


def resolve_scenario(source, seed: int | None = None) -> DriftScenario:
    """Scenario from ``preset:<name>``, a JSON file path, a dict, or a scenario."""
    if isinstance(source, DriftScenario):
        scenario = source
    elif isinstance(source, dict):
        scenario = DriftScenario.from_dict(source)
    elif isinstance(source, str) and source.startswith("preset:"):
        name = source.split(":", 1)[1]
        if name not in PRESETS:
            raise ConfigError(f"unknown preset {name!r}; available: {sorted(PRESETS)}")
        scenario = PRESETS[name]()
    else:
        path = Path(source)
        try:
            doc = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read scenario {source}: {exc}") from exc
        scenario = DriftScenario.from_dict(doc)
    return scenario if seed is None else scenario.with_seed(seed)


def generate_trial(scenario: DriftScenario, t: int) -> TrialDataset:
    """Labelled samples for trial ``t`` (1-based), class-blocked in label order."""
    if not 1 <= t <= scenario.trials:
        raise ConfigError(f"trial {t} outside [1, {scenario.trials}]")
    n, d = scenario.points_per_class, scenario.dim
    means = scenario.mean(t)
    blocks = []
    for c in range(scenario.num_classes):
        rng = np.random.default_rng(np.random.SeedSequence(scenario.rng_seed, spawn_key=(t, c)))
        chol = np.linalg.cholesky(scenario.covariance[c])
        blocks.append(means[c] + rng.standard_normal((n, d)) @ chol.T)
    labels = np.repeat(np.arange(scenario.num_classes), n)
    return TrialDataset(np.vstack(blocks), labels, trial_id=t)


def generate_all(scenario: DriftScenario) -> list[TrialDataset]:
    return [generate_trial(scenario, t) for t in range(1, scenario.trials + 1)]


def write_trials(scenario: DriftScenario, out_dir: str | Path) -> list[Path]:
    out_dir = Path(out_dir)
    paths = []
    for trial in generate_all(scenario):
        p = trial_path(out_dir, trial.trial_id)
        trial.save(p)
        paths.append(p)
    atomic_write(out_dir / "scenario.json", json.dumps(scenario.to_dict(), indent=1) + "\n")
    return paths
