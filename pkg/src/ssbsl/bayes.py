"""Gaussian-Wishart / Dirichlet conjugate model for multi-class Gaussian data.

Each class owns a Gaussian-Wishart posterior over its mean and precision; the
class proportions share one Dirichlet posterior. Updates are closed form and
return new immutable states, so a state can be handed to several learners
without copying.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import gammaln, logsumexp

from .errors import DimensionError, InvalidStateError, NumericalError

SCHEMA_VERSION = 1
_SYM_RTOL = 1e-9


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


def _cholesky(a: np.ndarray, what: str) -> np.ndarray:
    try:
        return np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"{what} is not positive definite") from exc


@dataclass(frozen=True)
class GaussWishartParams:
    """Hyperparameters (m, beta, nu, W) of one class, with W kept as its inverse."""

    m: np.ndarray
    beta: float
    nu: float
    w_inv: np.ndarray

    def __post_init__(self):
        m = _frozen(self.m)
        w_inv = _frozen(self.w_inv)
        d = m.shape[0]
        if m.ndim != 1 or w_inv.shape != (d, d):
            raise DimensionError(f"m has shape {m.shape}, w_inv has shape {w_inv.shape}")
        if not np.all(np.isfinite(m)) or not np.all(np.isfinite(w_inv)):
            raise InvalidStateError("non-finite hyperparameter")
        if not self.beta > 0:
            raise InvalidStateError(f"beta must be positive, got {self.beta}")
        if not self.nu > d - 1:
            raise InvalidStateError(f"nu must exceed D-1={d - 1}, got {self.nu}")
        scale = max(np.abs(w_inv).max(), np.finfo(float).tiny)
        if np.abs(w_inv - w_inv.T).max() > _SYM_RTOL * scale:
            raise InvalidStateError("w_inv is not symmetric")
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "w_inv", w_inv)
        object.__setattr__(self, "beta", float(self.beta))
        object.__setattr__(self, "nu", float(self.nu))
        _cholesky(w_inv, "w_inv")

    @property
    def dim(self) -> int:
        return self.m.shape[0]

    @property
    def w(self) -> np.ndarray:
        return np.linalg.inv(self.w_inv)


@dataclass(frozen=True)
class DirichletParams:
    alpha: np.ndarray

    def __post_init__(self):
        alpha = _frozen(self.alpha)
        if alpha.ndim != 1 or not np.all(alpha > 0) or not np.all(np.isfinite(alpha)):
            raise InvalidStateError(f"alpha must be a vector of positive reals, got {alpha}")
        object.__setattr__(self, "alpha", alpha)

    def mean(self) -> np.ndarray:
        return self.alpha / self.alpha.sum()


@dataclass(frozen=True)
class ClassPosteriorState:
    """Full model memory: one Gaussian-Wishart per class plus the Dirichlet."""

    per_class: tuple[GaussWishartParams, ...]
    mixing: DirichletParams

    def __post_init__(self):
        per_class = tuple(self.per_class)
        object.__setattr__(self, "per_class", per_class)
        if len(per_class) == 0:
            raise InvalidStateError("state needs at least one class")
        if len(per_class) != self.mixing.alpha.shape[0]:
            raise DimensionError(
                f"{len(per_class)} classes but alpha has length {self.mixing.alpha.shape[0]}"
            )
        if len({p.dim for p in per_class}) != 1:
            raise DimensionError("classes disagree on feature dimension")

    @property
    def dim(self) -> int:
        return self.per_class[0].dim

    @property
    def num_classes(self) -> int:
        return len(self.per_class)

    @classmethod
    def shared_prior(cls, m, beta, nu, w_inv, alpha) -> "ClassPosteriorState":
        """Replicate one (m, beta, nu, W) prior across classes.

        ``alpha`` may be a scalar (same pseudo-count for every class) or a
        vector whose length fixes the number of classes.
        """
        alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
        gw = GaussWishartParams(m=m, beta=beta, nu=nu, w_inv=w_inv)
        return cls(per_class=(gw,) * alpha.shape[0], mixing=DirichletParams(alpha))

    # -- serialization -------------------------------------------------
    def to_dict(self) -> dict:
        hx = float.hex
        return {
            "schema_version": SCHEMA_VERSION,
            "dim": self.dim,
            "num_classes": self.num_classes,
            "per_class": [
                {
                    "m": [hx(float(v)) for v in p.m],
                    "beta": hx(p.beta),
                    "nu": hx(p.nu),
                    "w_inv_row_major": [hx(float(v)) for v in p.w_inv.ravel()],
                }
                for p in self.per_class
            ],
            "alpha": [hx(float(v)) for v in self.mixing.alpha],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ClassPosteriorState":
        version = doc.get("schema_version")
        if version != SCHEMA_VERSION:
            raise InvalidStateError(f"unsupported schema_version {version!r}")

        def fl(v):
            # hex strings are the canonical encoding; plain numbers are accepted
            return float.fromhex(v) if isinstance(v, str) else float(v)

        d = int(doc["dim"])
        per_class = []
        for entry in doc["per_class"]:
            w_inv = np.array([fl(v) for v in entry["w_inv_row_major"]]).reshape(d, d)
            per_class.append(
                GaussWishartParams(
                    m=[fl(v) for v in entry["m"]],
                    beta=fl(entry["beta"]),
                    nu=fl(entry["nu"]),
                    w_inv=w_inv,
                )
            )
        state = cls(tuple(per_class), DirichletParams([fl(v) for v in doc["alpha"]]))
        if state.num_classes != int(doc["num_classes"]):
            raise DimensionError("num_classes does not match per_class length")
        return state

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_json(cls, text: str) -> "ClassPosteriorState":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class SufficientStats:
    """Per-class weighted counts, sums and raw scatter matrices.

    Arrays are stacked over classes: ``count`` (C,), ``sums`` (C, D),
    ``scatter`` (C, D, D). Adding two stats objects pools their data.
    """

    count: np.ndarray
    sums: np.ndarray
    scatter: np.ndarray

    def __post_init__(self):
        for name in ("count", "sums", "scatter"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        c = self.count.shape[0]
        if self.sums.shape[0] != c or self.scatter.shape[:2] != (c, self.sums.shape[1]):
            raise DimensionError("inconsistent sufficient statistic shapes")
        if np.any(self.count < 0):
            raise InvalidStateError("negative count")

    @classmethod
    def zeros(cls, num_classes: int, dim: int) -> "SufficientStats":
        return cls(
            np.zeros(num_classes), np.zeros((num_classes, dim)), np.zeros((num_classes, dim, dim))
        )

    def __add__(self, other: "SufficientStats") -> "SufficientStats":
        if self.sums.shape != other.sums.shape:
            raise DimensionError("cannot add stats of different shapes")
        return SufficientStats(
            self.count + other.count, self.sums + other.sums, self.scatter + other.scatter
        )


def _label_weights(labels, n: int, num_classes: int) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.ndim == 2:
        if labels.shape != (n, num_classes):
            raise DimensionError(f"soft labels must have shape {(n, num_classes)}, got {labels.shape}")
        weights = labels.astype(float)
        if np.any(weights < 0):
            raise DimensionError("label weights must be non-negative")
        return weights
    if labels.shape != (n,):
        raise DimensionError(f"expected {n} labels, got shape {labels.shape}")
    if n and not np.issubdtype(labels.dtype, np.integer):
        if not np.all(labels == np.round(labels)):
            raise DimensionError("class labels must be integers")
        labels = labels.astype(np.int64)
    if n and (labels.min() < 0 or labels.max() >= num_classes):
        raise DimensionError(f"class labels must lie in [0, {num_classes})")
    weights = np.zeros((n, num_classes))
    weights[np.arange(n), labels.astype(np.int64)] = 1.0
    return weights


def accumulate_stats(x, labels, num_classes: int, dim: int | None = None) -> SufficientStats:
    """Sufficient statistics of labelled data.

    ``labels`` is either a vector of integer class indices or an (N, C)
    matrix of non-negative weights (soft labels).
    """
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        if dim is None:
            dim = x.shape[1] if x.ndim == 2 else None
        if dim is None:
            raise DimensionError("dim is required when no data are given")
        x = x.reshape(0, dim)
    if x.ndim != 2:
        raise DimensionError(f"features must be 2-D (N, D), got shape {x.shape}")
    if dim is not None and x.shape[1] != dim:
        raise DimensionError(f"features have dimension {x.shape[1]}, expected {dim}")
    if not np.all(np.isfinite(x)):
        raise DimensionError("features must be finite")
    r = _label_weights(labels, x.shape[0], num_classes)
    count = r.sum(axis=0)
    sums = r.T @ x
    scatter = np.einsum("nc,nd,ne->cde", r, x, x)
    scatter = 0.5 * (scatter + scatter.transpose(0, 2, 1))
    return SufficientStats(count, sums, scatter)


def _update_class(p: GaussWishartParams, n: float, s: np.ndarray, ss: np.ndarray):
    if n == 0:
        return p
    beta = p.beta + n
    m = (s + p.beta * p.m) / beta
    # Equivalent to ss + beta0 m0 m0' - beta m m' (the additive W^{-1} update),
    # arranged around the data mean to avoid cancellation.
    xbar = s / n
    dev = xbar - p.m
    w_inv = p.w_inv + (ss - np.outer(s, xbar)) + (p.beta * n / beta) * np.outer(dev, dev)
    w_inv = 0.5 * (w_inv + w_inv.T)
    return GaussWishartParams(m=m, beta=beta, nu=p.nu + n, w_inv=w_inv)


def update_posterior(prior: ClassPosteriorState, stats: SufficientStats) -> ClassPosteriorState:
    """Conjugate update of every class and of the mixing weights."""
    if stats.count.shape[0] != prior.num_classes or stats.sums.shape[1] != prior.dim:
        raise DimensionError(
            f"stats for (C={stats.count.shape[0]}, D={stats.sums.shape[1]}) "
            f"do not match state (C={prior.num_classes}, D={prior.dim})"
        )
    if not np.any(stats.count):
        return prior
    per_class = tuple(
        _update_class(p, float(stats.count[c]), stats.sums[c], stats.scatter[c])
        for c, p in enumerate(prior.per_class)
    )
    mixing = DirichletParams(prior.mixing.alpha + stats.count)
    return ClassPosteriorState(per_class, mixing)


def student_t_params(p: GaussWishartParams) -> tuple[np.ndarray, np.ndarray, float]:
    """Location, scale matrix and degrees of freedom of the predictive Student-t."""
    dof = p.nu + 1.0 - p.dim
    if not dof > 0:
        raise InvalidStateError(f"predictive degrees of freedom must be positive, got {dof}")
    scale = (1.0 + p.beta) / (p.beta * dof) * p.w_inv
    return p.m, scale, dof


def log_predictive_density(state: ClassPosteriorState, c: int, x) -> np.ndarray | float:
    """Log of the posterior predictive density of class ``c`` at ``x``.

    ``x`` may be one D-vector (returns a float) or an (N, D) array.
    """
    if not 0 <= c < state.num_classes:
        raise DimensionError(f"class index {c} outside [0, {state.num_classes})")
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x2 = np.atleast_2d(x)
    if x2.shape[1] != state.dim:
        raise DimensionError(f"feature dimension {x2.shape[1]} != model dimension {state.dim}")
    loc, scale, dof = student_t_params(state.per_class[c])
    d = state.dim
    chol = _cholesky(scale, "predictive scale")
    z = solve_triangular(chol, (x2 - loc).T, lower=True)
    maha = np.einsum("dn,dn->n", z, z)
    logdet = 2.0 * np.log(np.diag(chol)).sum()
    out = (
        gammaln(0.5 * (dof + d))
        - gammaln(0.5 * dof)
        - 0.5 * d * np.log(dof * np.pi)
        - 0.5 * logdet
        - 0.5 * (dof + d) * np.log1p(maha / dof)
    )
    return float(out[0]) if single else out


def class_log_joint(state: ClassPosteriorState, x) -> np.ndarray:
    """log E[pi_c] + log predictive_c(x), shape (N, C) (or (C,) for one point)."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x2 = np.atleast_2d(x)
    log_mix = np.log(state.mixing.mean())
    out = np.column_stack(
        [log_predictive_density(state, c, x2) for c in range(state.num_classes)]
    ) + log_mix
    return out[0] if single else out


def class_posterior(state: ClassPosteriorState, x) -> np.ndarray:
    """Posterior class probabilities p(y_c = 1 | x) for one point or a batch."""
    lj = class_log_joint(state, x)
    return np.exp(lj - logsumexp(lj, axis=-1, keepdims=True))


def stats_equal(a: ClassPosteriorState, b: ClassPosteriorState, rtol: float = 1e-9) -> bool:
    """Elementwise hyperparameter comparison at relative tolerance ``rtol``."""
    if a.num_classes != b.num_classes or a.dim != b.dim:
        return False
    close = lambda u, v: np.allclose(u, v, rtol=rtol, atol=0.0)  # noqa: E731
    for p, q in zip(a.per_class, b.per_class):
        if not (close(p.beta, q.beta) and close(p.nu, q.nu)):
            return False
        # matrix entries near zero are compared against the matrix scale
        wscale = max(np.abs(p.w_inv).max(), np.abs(q.w_inv).max())
        mscale = max(np.abs(p.m).max(), np.abs(q.m).max(), np.finfo(float).tiny)
        if np.abs(p.m - q.m).max() > rtol * mscale:
            return False
        if np.abs(p.w_inv - q.w_inv).max() > rtol * wscale:
            return False
    return close(a.mixing.alpha, b.mixing.alpha)
