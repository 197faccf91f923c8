"""Core model: dataset container, log-likelihood, gradients, exchange symmetry.

The observed-data likelihood multiplies two logistic factors, one per
component, so the success probability for observation i is
``F(gamma.z_i) * F(beta.x_i)``.  Under a shared design (Z = X) the
log-likelihood is invariant under swapping the two coefficient vectors,
and parameters are identified only up to that swap; ``canonicalize``
picks a deterministic representative of each unordered pair.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit


def inv_logit(mu):
    """Inverse logit, exp(mu)/(1+exp(mu)), overflow-safe for any finite mu."""
    return expit(mu)


def _log1pexp(u):
    # log(1 + e^u) without overflow; logaddexp handles both tails.
    return np.logaddexp(0.0, u)


@dataclass
class Dataset:
    """Binary responses with design matrices for both model components.

    ``Z`` defaults to ``X`` (shared design).  The first column of each
    design matrix must be an intercept column of ones; pass
    ``require_intercept=False`` only for separation analysis of raw
    (non-intercept) score matrices.
    """

    y: np.ndarray
    X: np.ndarray
    Z: np.ndarray | None = None
    column_names: list[str] | None = None
    require_intercept: bool = True

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=float)
        self.X = np.asarray(self.X, dtype=float)
        if self.X.ndim != 2 or self.y.ndim != 1:
            raise ValueError("y must be a vector and X a matrix")
        if self.X.shape[0] != self.y.shape[0]:
            raise ValueError(
                f"X has {self.X.shape[0]} rows but y has {self.y.shape[0]} entries"
            )
        if self.y.shape[0] < 1 or self.X.shape[1] < 1:
            raise ValueError("need at least one observation and one column")
        if not np.all(np.isin(self.y, (0.0, 1.0))):
            raise ValueError("y entries must be 0 or 1")
        if self.Z is None:
            self.Z = self.X
        else:
            self.Z = np.asarray(self.Z, dtype=float)
            if self.Z.ndim != 2 or self.Z.shape[0] != self.X.shape[0]:
                raise ValueError("Z must have the same number of rows as X")
        if not (np.all(np.isfinite(self.X)) and np.all(np.isfinite(self.Z))):
            raise ValueError("design matrices must be finite")
        if self.require_intercept:
            if not np.all(self.X[:, 0] == 1.0):
                raise ValueError("first column of X must be all ones")
            if not np.all(self.Z[:, 0] == 1.0):
                raise ValueError("first column of Z must be all ones")

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def p(self) -> int:
        return self.Z.shape[1]

    @property
    def shared_design(self) -> bool:
        return self.Z is self.X or (
            self.Z.shape == self.X.shape and np.array_equal(self.Z, self.X)
        )


@dataclass
class ParamPair:
    """Ordered coefficient pair: beta for the outcome component, gamma for
    the susceptibility (non-structural-zero) component."""

    beta: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        self.beta = np.atleast_1d(np.asarray(self.beta, dtype=float))
        self.gamma = np.atleast_1d(np.asarray(self.gamma, dtype=float))
        if not (np.all(np.isfinite(self.beta)) and np.all(np.isfinite(self.gamma))):
            raise ValueError("parameters must be finite")

    def swapped(self) -> "ParamPair":
        return ParamPair(self.gamma.copy(), self.beta.copy())

    def concat(self) -> np.ndarray:
        return np.concatenate([self.beta, self.gamma])


@dataclass
class EquivClass:
    """Swap-equivalence class, represented by its canonical ordered pair."""

    canonical: ParamPair


def _check_dims(d: Dataset, p: ParamPair) -> None:
    if p.beta.shape[0] != d.d:
        raise ValueError(f"beta has length {p.beta.shape[0]}, expected {d.d}")
    if p.gamma.shape[0] != d.p:
        raise ValueError(f"gamma has length {p.gamma.shape[0]}, expected {d.p}")


def _stable_terms(d: Dataset, p: ParamPair):
    """Return (a, b, lse) where a = X beta, b = Z gamma and
    lse = log(e^-a + e^-b + e^-a-b), so that
    log(F(a)F(b)) = -l1pe(-a) - l1pe(-b) and
    log(1 - F(a)F(b)) = lse - l1pe(-a) - l1pe(-b)."""
    a = d.X @ p.beta
    b = d.Z @ p.gamma
    lse = np.logaddexp(np.logaddexp(-a, -b), -a - b)
    return a, b, lse


def loglik(d: Dataset, p: ParamPair) -> float:
    """Observed-data log-likelihood; stable for linear scores up to ~700."""
    _check_dims(d, p)
    a, b, lse = _stable_terms(d, p)
    log_fafb = -_log1pexp(-a) - _log1pexp(-b)
    # y=1 terms: log(F(a)F(b)); y=0 terms: log(1 - F(a)F(b))
    return float(np.sum(d.y * log_fafb + (1.0 - d.y) * (lse + log_fafb)))


def grad_loglik(d: Dataset, p: ParamPair) -> tuple[np.ndarray, np.ndarray]:
    """Analytic gradient of ``loglik`` with respect to (beta, gamma).

    The per-observation weight is (y - g) / (1 - g) with g = F(a)F(b);
    for y=0 this equals -g/(1-g) = -exp(-lse), which avoids forming g
    explicitly near 1.
    """
    _check_dims(d, p)
    a, b, lse = _stable_terms(d, p)
    r = np.where(d.y == 1.0, 1.0, -np.exp(-lse))
    g_beta = d.X.T @ (r * expit(-a))
    g_gamma = d.Z.T @ (r * expit(-b))
    return g_beta, g_gamma


def canonicalize(p: ParamPair) -> EquivClass:
    """Deterministic representative of the unordered pair {(beta,gamma),
    (gamma,beta)}: the lexicographically smaller of (beta||gamma) and
    (gamma||beta).  Requires a shared design (len(beta) == len(gamma))."""
    if p.beta.shape[0] != p.gamma.shape[0]:
        raise ValueError("canonicalize requires a shared design (d == p)")
    fwd = p.concat()
    rev = p.swapped().concat()
    if tuple(fwd) <= tuple(rev):
        return EquivClass(ParamPair(p.beta.copy(), p.gamma.copy()))
    return EquivClass(p.swapped())
