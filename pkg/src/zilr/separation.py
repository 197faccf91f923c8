"""Separation diagnostics: certificates for MLE non-existence and margins.

Double separation (a joint direction pair that sign-separates both
components' linear scores by class, with at least one strict inequality)
implies the likelihood has no finite maximizer.  Detection is exact via a
linear program over a box.  The margin estimate targets the complementary
quantity: the infimum over unit direction pairs of the worst-case
violation, a nonconvex min-max that is attacked heuristically by
multi-start projected subgradient descent, so the reported value is an
upper bound on the true infimum and ``MARGIN_FOUND`` is advisory.

Note that for designs containing an intercept column the infimum can
never be positive: the direction (e_1, 0) yields a zero objective on any
dataset, so a positive margin certificate is only attainable for raw
score matrices built with ``require_intercept=False``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .model import Dataset

DEFAULT_TOL = 1e-8


class SeparationStatus(enum.Enum):
    DOUBLY_SEPARATED = "doubly_separated"
    MARGIN_FOUND = "margin_found"
    INCONCLUSIVE = "inconclusive"


@dataclass
class SeparationCertificate:
    status: SeparationStatus
    direction: tuple[np.ndarray, np.ndarray] | None = None
    margin: float = 0.0
    witness_index: int | None = None
    # Raw objective value (may be negative for margin estimates).
    estimate: float = 0.0

    def as_report(self) -> dict:
        rep = {"status": self.status.value, "margin": self.margin,
               "estimate": self.estimate}
        if self.direction is not None:
            v, w = self.direction
            rep["direction_v"] = ",".join(f"{u:.10g}" for u in v)
            rep["direction_w"] = ",".join(f"{u:.10g}" for u in w)
        if self.witness_index is not None:
            rep["witness_index"] = self.witness_index
        return rep


def _slacks(d: Dataset, v: np.ndarray, w: np.ndarray):
    """Signed per-observation, per-component scores (positive = toward the
    y=1 side)."""
    sx = d.X @ v
    sz = d.Z @ w
    sign = np.where(d.y == 1.0, 1.0, -1.0)
    return sign * sx, sign * sz


def check_direction(d: Dataset, v: np.ndarray, w: np.ndarray,
                    tol: float = DEFAULT_TOL) -> int | None:
    """Re-check a candidate separating direction directly against the data.

    Returns the index of a strict witness if (v, w) satisfies the double
    separation inequalities within ``tol``, else None.
    """
    ax, az = _slacks(d, v, w)
    if np.min(ax) < -tol or np.min(az) < -tol:
        return None
    total = ax + az
    idx = int(np.argmax(total))
    if total[idx] > tol:
        return idx
    return None


def detect_double_separation(d: Dataset, tol: float = DEFAULT_TOL) -> SeparationCertificate:
    """Exact double-separation detection via linear programming.

    Maximizes the total slack of the sign constraints over the box
    ||(v,w)||_inf <= 1; the optimum is positive iff some feasible
    direction has a strict witness.  Any certificate is independently
    re-verified against the data before being returned; LP failure yields
    INCONCLUSIVE, never a false certificate.
    """
    n, dd, pp = d.n, d.d, d.p
    sign = np.where(d.y == 1.0, 1.0, -1.0)[:, None]
    # Feasibility: sign * X v >= 0 and sign * Z w >= 0, i.e. -sign*X v <= 0.
    a_ub = np.zeros((2 * n, dd + pp))
    a_ub[:n, :dd] = -sign * d.X
    a_ub[n:, dd:] = -sign * d.Z
    b_ub = np.zeros(2 * n)
    # Objective: maximize total slack over both components.
    c = -np.concatenate([(sign * d.X).sum(axis=0), (sign * d.Z).sum(axis=0)])
    try:
        res = linprog(c, A_ub=a_ub, b_ub=b_ub, bounds=(-1.0, 1.0), method="highs")
    except Exception:
        return SeparationCertificate(SeparationStatus.INCONCLUSIVE)
    if not res.success:
        return SeparationCertificate(SeparationStatus.INCONCLUSIVE)
    value = -res.fun
    if value <= tol:
        return SeparationCertificate(SeparationStatus.INCONCLUSIVE, estimate=value)
    u = res.x
    norm = float(np.sqrt(u @ u))
    if norm == 0.0:
        return SeparationCertificate(SeparationStatus.INCONCLUSIVE, estimate=value)
    v, w = u[:dd] / norm, u[dd:] / norm
    witness = check_direction(d, v, w, tol=tol)
    if witness is None:
        return SeparationCertificate(SeparationStatus.INCONCLUSIVE, estimate=value)
    return SeparationCertificate(
        SeparationStatus.DOUBLY_SEPARATED,
        direction=(v, w),
        margin=0.0,
        witness_index=witness,
        estimate=value,
    )


def margin_objective(d: Dataset, v: np.ndarray, w: np.ndarray) -> float:
    """Worst-case violation of the separation inequalities for one unit
    direction pair: max of (a) minus the smallest y=1 combined score and
    (b) the largest y=0 both-component score."""
    pos = d.y == 1.0
    terms = []
    if np.any(pos):
        terms.append(-np.min(d.X[pos] @ v + d.Z[pos] @ w))
    if np.any(~pos):
        terms.append(np.max(np.minimum(d.X[~pos] @ v, d.Z[~pos] @ w)))
    return float(max(terms))


def _subgradient(d: Dataset, v: np.ndarray, w: np.ndarray) -> np.ndarray:
    pos = d.y == 1.0
    best = -np.inf
    grad = None
    if np.any(pos):
        sums = d.X[pos] @ v + d.Z[pos] @ w
        i = int(np.argmin(sums))
        best = -sums[i]
        xi = d.X[pos][i]
        zi = d.Z[pos][i]
        grad = -np.concatenate([xi, zi])
    if np.any(~pos):
        ax = d.X[~pos] @ v
        az = d.Z[~pos] @ w
        mins = np.minimum(ax, az)
        i = int(np.argmax(mins))
        if mins[i] >= best:
            if ax[i] <= az[i]:
                grad = np.concatenate([d.X[~pos][i], np.zeros(d.p)])
            else:
                grad = np.concatenate([np.zeros(d.d), d.Z[~pos][i]])
    return grad


def estimate_margin(d: Dataset, restarts: int = 64, iters: int = 500,
                    tol: float = DEFAULT_TOL, seed: int = 0) -> SeparationCertificate:
    """Heuristic margin estimate by multi-start projected subgradient
    descent on the unit sphere of direction pairs.

    The returned value upper-bounds the true infimum; MARGIN_FOUND with a
    positive margin is therefore an advisory existence indicator, to be
    combined with a negative double-separation check.
    """
    dim = d.d + d.p
    best_val = np.inf
    best_u = None
    for r in range(restarts):
        rng = np.random.Generator(np.random.Philox(
            np.random.SeedSequence(entropy=seed, spawn_key=(r,))))
        u = rng.standard_normal(dim)
        nu = np.linalg.norm(u)
        if nu == 0.0:
            continue
        u = u / nu
        local = np.inf
        local_u = u
        for k in range(iters):
            v, w = u[:d.d], u[d.d:]
            val = margin_objective(d, v, w)
            if val < local:
                local, local_u = val, u.copy()
            g = _subgradient(d, v, w)
            if g is None:
                break
            step = 0.2 / np.sqrt(k + 1.0)
            u = u - step * g
            nu = np.linalg.norm(u)
            if nu < 1e-12:
                u = rng.standard_normal(dim)
                nu = np.linalg.norm(u)
            u = u / nu
        # Deterministic reduction: strictly better value wins, ties keep
        # the lowest restart index.
        if local < best_val:
            best_val, best_u = local, local_u
    if best_u is None:
        return SeparationCertificate(SeparationStatus.INCONCLUSIVE)
    v, w = best_u[:d.d], best_u[d.d:]
    if best_val > tol:
        return SeparationCertificate(
            SeparationStatus.MARGIN_FOUND,
            direction=(v, w),
            margin=float(best_val),
            estimate=float(best_val),
        )
    return SeparationCertificate(
        SeparationStatus.INCONCLUSIVE,
        direction=(v, w),
        margin=max(0.0, float(best_val)),
        estimate=float(best_val),
    )
