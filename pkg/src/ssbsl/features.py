"""EMG envelope features: full-wave rectification, 2nd-order low-pass, transient trim."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy.signal import lfilter

from .data import TrialDataset
from .errors import ConfigError, DimensionError

DEFAULT_CUTOFF_HZ = 1.0
DEFAULT_TRIM = 0.10


@dataclass(frozen=True)
class RawRecording:
    """Multi-channel recording, ``samples`` shaped (length, D).

    Acquired recordings need at least two samples per channel (checked on
    load and by :func:`extract_features`); trimmed ones may be shorter.
    """

    sample_rate_hz: float
    samples: np.ndarray
    motion_label: int | None = None
    trial_id: int = 0

    def __post_init__(self):
        x = np.array(self.samples, dtype=float)
        if x.ndim != 2 or x.shape[1] < 1:
            raise DimensionError(f"samples must be (length, channels), got shape {x.shape}")
        if x.shape[0] < 1:
            raise ConfigError("a recording needs at least one sample per channel")
        if not self.sample_rate_hz > 0:
            raise ConfigError(f"sample rate must be positive, got {self.sample_rate_hz}")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)

    @property
    def num_channels(self) -> int:
        return self.samples.shape[1]

    def __len__(self) -> int:
        return self.samples.shape[0]

    @classmethod
    def from_files(cls, csv_path: str | Path, meta_path: str | Path) -> "RawRecording":
        try:
            meta = json.loads(Path(meta_path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read metadata {meta_path}: {exc}") from exc
        if "sample_rate_hz" not in meta:
            raise ConfigError(f"{meta_path}: sample_rate_hz is required")
        rows = list(csv.reader(io.StringIO(Path(csv_path).read_text())))
        if not rows:
            raise ConfigError(f"{csv_path}: empty file")
        header = [h.strip() for h in rows[0]]
        if header != [f"ch{i + 1}" for i in range(len(header))] or not header:
            raise ConfigError(f"{csv_path}: header must be ch1..chD, got {header}")
        body = [r for r in rows[1:] if r]
        if any(len(r) != len(header) for r in body):
            raise ConfigError(f"{csv_path}: ragged rows")
        try:
            samples = np.array([[float(v) for v in r] for r in body], dtype=float)
        except ValueError as exc:
            raise ConfigError(f"{csv_path}: non-numeric sample ({exc})") from exc
        if len(body) < 2:
            raise ConfigError(f"{csv_path}: a recording needs at least 2 samples per channel")
        label = meta.get("motion_label")
        return cls(
            float(meta["sample_rate_hz"]),
            samples.reshape(len(body), len(header)),
            None if label is None else int(label),
            int(meta.get("trial_id", 0)),
        )


@dataclass(frozen=True)
class FilterCoeffs:
    """Normalized biquad: H(z) = (b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2)."""

    b0: float
    b1: float
    b2: float
    a1: float
    a2: float

    def __post_init__(self):
        if np.any(np.abs(self.poles()) >= 1.0):
            raise ConfigError("filter poles must lie strictly inside the unit circle")

    @property
    def b(self) -> np.ndarray:
        return np.array([self.b0, self.b1, self.b2])

    @property
    def a(self) -> np.ndarray:
        return np.array([1.0, self.a1, self.a2])

    def poles(self) -> np.ndarray:
        return np.roots([1.0, self.a1, self.a2])

    def frequency_response(self, freq_hz, sample_rate_hz: float) -> np.ndarray:
        z = np.exp(-2j * np.pi * np.asarray(freq_hz, dtype=float) / sample_rate_hz)
        return (self.b0 + self.b1 * z + self.b2 * z**2) / (1.0 + self.a1 * z + self.a2 * z**2)

    def dc_gain(self) -> float:
        return (self.b0 + self.b1 + self.b2) / (1.0 + self.a1 + self.a2)


def butterworth2_lowpass(cutoff_hz: float, sample_rate_hz: float) -> FilterCoeffs:
    """Bilinear transform of s^2 + sqrt(2) s + 1 with the cutoff prewarped."""
    if not sample_rate_hz > 0:
        raise ConfigError(f"sample rate must be positive, got {sample_rate_hz}")
    if not 0 < cutoff_hz < sample_rate_hz / 2:
        raise ConfigError(
            f"cutoff {cutoff_hz} Hz must lie strictly between 0 and Nyquist ({sample_rate_hz / 2} Hz)"
        )
    k = math.tan(math.pi * cutoff_hz / sample_rate_hz)
    kk = k * k
    norm = 1.0 / (1.0 + math.sqrt(2.0) * k + kk)
    b0 = kk * norm
    return FilterCoeffs(
        b0=b0,
        b1=2.0 * b0,
        b2=b0,
        a1=2.0 * (kk - 1.0) * norm,
        a2=(1.0 - math.sqrt(2.0) * k + kk) * norm,
    )


def rectify(recording: RawRecording) -> RawRecording:
    return replace(recording, samples=np.abs(recording.samples))


def filter_forward(coeffs: FilterCoeffs, series) -> np.ndarray:
    """Causal filtering (direct form II transposed) from a zero initial state.

    Works along axis 0, so a (length, channels) array filters every channel.
    """
    series = np.asarray(series, dtype=float)
    if series.shape[0] < 1:
        raise ConfigError("cannot filter an empty series")
    return lfilter(coeffs.b, coeffs.a, series, axis=0)


def trim_transient(recording: RawRecording, fraction: float) -> RawRecording:
    if not 0.0 <= fraction < 1.0:
        raise ConfigError(f"trim fraction must lie in [0, 1), got {fraction}")
    drop = math.floor(fraction * len(recording))
    return replace(recording, samples=recording.samples[drop:])


def extract_features(
    recording: RawRecording,
    cutoff_hz: float = DEFAULT_CUTOFF_HZ,
    trim: float = DEFAULT_TRIM,
) -> TrialDataset:
    if len(recording) < 2:
        raise ConfigError("a recording needs at least 2 samples per channel")
    coeffs = butterworth2_lowpass(cutoff_hz, recording.sample_rate_hz)
    rect = rectify(recording)
    smoothed = replace(rect, samples=filter_forward(coeffs, rect.samples))
    kept = trim_transient(smoothed, trim)
    labels = None
    if recording.motion_label is not None:
        labels = np.full(len(kept), recording.motion_label, dtype=np.int64)
    return TrialDataset(kept.samples, labels, recording.trial_id)
