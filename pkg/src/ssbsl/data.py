"""Trial datasets and their CSV representation."""
from __future__ import annotations

import csv
import io
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DimensionError


@dataclass(frozen=True)
class TrialDataset:
    """Feature vectors of one trial, in acquisition order.

    ``labels`` holds 0-based class indices, or is ``None`` for unlabelled data.
    """

    features: np.ndarray
    labels: np.ndarray | None = None
    trial_id: int = 0

    def __post_init__(self):
        x = np.array(self.features, dtype=float)
        if x.ndim != 2:
            raise DimensionError(f"features must be (N, D), got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise DimensionError("features must be finite")
        x.setflags(write=False)
        object.__setattr__(self, "features", x)
        if self.labels is not None:
            y = np.array(self.labels, dtype=np.int64)
            if y.shape != (x.shape[0],):
                raise DimensionError(f"{y.shape[0]} labels for {x.shape[0]} samples")
            y.setflags(write=False)
            object.__setattr__(self, "labels", y)

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    @staticmethod
    def concat(trials: list["TrialDataset"], trial_id: int = 0) -> "TrialDataset":
        if not trials:
            raise ConfigError("nothing to concatenate")
        x = np.vstack([t.features for t in trials])
        if any(t.labels is None for t in trials):
            y = None
        else:
            y = np.concatenate([t.labels for t in trials])
        return TrialDataset(x, y, trial_id)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        header = [f"f{i + 1}" for i in range(self.dim)]
        if self.labels is not None:
            header.append("label")
        w.writerow(header)
        for n, row in enumerate(self.features):
            out = [repr(float(v)) for v in row]
            if self.labels is not None:
                out.append(str(int(self.labels[n])))
            w.writerow(out)
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, trial_id: int = 0) -> "TrialDataset":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows:
            raise ConfigError("empty CSV (header row required)")
        header = [h.strip() for h in rows[0]]
        has_label = bool(header) and header[-1] == "label"
        fcols = header[:-1] if has_label else header
        if not fcols or fcols != [f"f{i + 1}" for i in range(len(fcols))]:
            raise ConfigError(f"feature CSV header must be f1..fD[,label], got {header}")
        body = [r for r in rows[1:] if r]
        try:
            data = np.array([[float(v) for v in r] for r in body], dtype=float)
        except ValueError as exc:
            raise ConfigError(f"non-numeric value in feature CSV: {exc}") from exc
        if body and data.shape[1] != len(header):
            raise ConfigError("ragged feature CSV")
        data = data.reshape(len(body), len(header))
        labels = data[:, -1].astype(np.int64) if has_label else None
        return cls(data[:, : len(fcols)], labels, trial_id)

    def save(self, path: str | Path) -> None:
        atomic_write(path, self.to_csv())

    @classmethod
    def load(cls, path: str | Path, trial_id: int = 0) -> "TrialDataset":
        return cls.from_csv(Path(path).read_text(), trial_id)


def trial_path(directory: str | Path, t: int) -> Path:
    return Path(directory) / f"trial_{t}.csv"


def load_trials(directory: str | Path, ids: list[int]) -> list[TrialDataset]:
    out = []
    for t in ids:
        p = trial_path(directory, t)
        if not p.exists():
            raise ConfigError(f"missing trial file {p}")
        out.append(TrialDataset.load(p, trial_id=t))
    return out


def available_trials(directory: str | Path) -> list[int]:
    ids = []
    for p in Path(directory).glob("trial_*.csv"):
        try:
            ids.append(int(p.stem.split("_", 1)[1]))
        except ValueError:
            continue
    return sorted(ids)


def atomic_write(path: str | Path, content: str | bytes) -> None:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(content, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(content)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
