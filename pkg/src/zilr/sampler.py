"""Tempered Polya-Gamma Gibbs sampler with replica exchange.

Each replica m targets the posterior whose complete-data likelihood is
raised to 1/T_m (the prior is not tempered).  One sweep updates the
latent indicators h, then gamma, then beta from their full conditionals;
every ``exchange_every`` sweeps, adjacent replicas propose state swaps
with the standard exchange acceptance probability evaluated on the
complete-data likelihood.  Draws from the T=1 replica after burn-in are
the retained posterior sample.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular
from scipy.special import expit

from .model import Dataset, ParamPair, loglik
from .polya_gamma import sample_pg

CHECKPOINT_VERSION = 1


@dataclass
class SamplerConfig:
    n_replicas: int = 20
    temp_ratio: float = 1.05
    exchange_every: int = 50
    total_iters: int = 53000
    burn_in: int = 3000
    prior_mean_beta: np.ndarray | None = None
    prior_mean_gamma: np.ndarray | None = None
    prior_var_beta: float | np.ndarray = 100.0
    prior_var_gamma: float | np.ndarray = 100.0
    pg_trunc: int = 200
    seed: int = 0
    init_sd: float = 0.1
    checkpoint_path: str | None = None
    checkpoint_every: int = 0

    def __post_init__(self):
        if self.n_replicas < 1:
            raise ValueError("need at least one replica")
        if self.n_replicas > 1 and self.temp_ratio <= 1.0:
            raise ValueError("temp_ratio must exceed 1 for multiple replicas")
        if not 0 <= self.burn_in < self.total_iters:
            raise ValueError("burn_in must be in [0, total_iters)")
        if np.any(np.asarray(self.prior_var_beta) <= 0) or np.any(
                np.asarray(self.prior_var_gamma) <= 0):
            raise ValueError("prior variances must be positive")

    def temperatures(self) -> np.ndarray:
        return self.temp_ratio ** np.arange(self.n_replicas)

    def config_hash(self) -> str:
        spec = {k: (v.tolist() if isinstance(v, np.ndarray) else v)
                for k, v in asdict(self).items()
                if k not in ("checkpoint_path", "checkpoint_every",
                             "total_iters")}
        return hashlib.sha256(json.dumps(spec, sort_keys=True).encode()).hexdigest()


@dataclass
class ReplicaState:
    beta: np.ndarray
    gamma: np.ndarray
    h: np.ndarray
    temperature: float
    rng: np.random.Generator

    def __post_init__(self):
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")


@dataclass
class PosteriorDraws:
    draws: np.ndarray           # (kept_iters, d + p), columns (beta || gamma)
    loglik_trace: np.ndarray
    swap_accept_rate: np.ndarray
    temperatures: np.ndarray

    @property
    def kept_iters(self) -> int:
        return self.draws.shape[0]


def _prior_precision(var, dim: int) -> tuple[np.ndarray, np.ndarray]:
    var = np.asarray(var, dtype=float)
    diag = np.full(dim, float(var)) if var.ndim == 0 else var
    return np.diag(1.0 / diag), 1.0 / diag


def complete_data_loglik(state: ReplicaState, d: Dataset) -> float:
    """Log of prod_i p(y_i, h_i | ...) at the replica's current state."""
    a = d.X @ state.beta
    b = d.Z @ state.gamma
    h, y = state.h, d.y
    lp = (h * -np.logaddexp(0.0, -b) + (1.0 - h) * -np.logaddexp(0.0, b)
          + y * -np.logaddexp(0.0, -a) + (h - y) * -np.logaddexp(0.0, a))
    return float(np.sum(lp))


def update_h(state: ReplicaState, d: Dataset) -> ReplicaState:
    """Gibbs step for the latent indicators: forced to 1 where y = 1,
    tempered Bernoulli elsewhere."""
    t = state.temperature
    mu = expit((d.Z @ state.gamma - np.logaddexp(0.0, d.X @ state.beta)) / t)
    u = state.rng.random(d.n)
    state.h = np.where(d.y == 1.0, 1.0, (u < mu).astype(float))
    return state


def _gaussian_step(design: np.ndarray, kappa: np.ndarray, omega: np.ndarray,
                   prior_prec: np.ndarray, prior_prec_mean: np.ndarray,
                   rng: np.random.Generator) -> np.ndarray:
    """Draw from N(m, P^-1) with P = design' diag(omega) design + prior
    precision and m = P^-1 (design' kappa + prior precision * prior mean),
    using a Cholesky factor of P (no explicit inverse)."""
    prec = design.T @ (design * omega[:, None]) + prior_prec
    chol, lower = cho_factor(prec, lower=True)
    mean = cho_solve((chol, lower), design.T @ kappa + prior_prec_mean)
    noise = solve_triangular(chol, rng.standard_normal(prec.shape[0]),
                             lower=True, trans="T")
    return mean + noise


def update_gamma(state: ReplicaState, d: Dataset, cfg: SamplerConfig) -> ReplicaState:
    t = state.temperature
    w = sample_pg(1.0 / t, d.Z @ state.gamma, trunc=cfg.pg_trunc, rng=state.rng)
    kappa = (state.h - 0.5) / t
    prior_prec, inv_diag = _prior_precision(cfg.prior_var_gamma, d.p)
    g0 = (np.zeros(d.p) if cfg.prior_mean_gamma is None
          else np.asarray(cfg.prior_mean_gamma, dtype=float))
    state.gamma = _gaussian_step(d.Z, kappa, w, prior_prec, inv_diag * g0, state.rng)
    return state


def update_beta(state: ReplicaState, d: Dataset, cfg: SamplerConfig) -> ReplicaState:
    t = state.temperature
    mask = state.h == 1.0
    x_h = d.X[mask]
    y_h = d.y[mask]
    omega = sample_pg(1.0 / t, x_h @ state.beta, trunc=cfg.pg_trunc, rng=state.rng)
    kappa = (y_h - 0.5) / t
    prior_prec, inv_diag = _prior_precision(cfg.prior_var_beta, d.d)
    b0 = (np.zeros(d.d) if cfg.prior_mean_beta is None
          else np.asarray(cfg.prior_mean_beta, dtype=float))
    state.beta = _gaussian_step(x_h, kappa, omega, prior_prec, inv_diag * b0, state.rng)
    return state


def attempt_swap(state_m: ReplicaState, state_m1: ReplicaState, d: Dataset,
                 rng: np.random.Generator) -> bool:
    """Propose exchanging the full (beta, gamma, h) states of two adjacent
    replicas; temperatures and RNG streams stay in place."""
    inv_diff = 1.0 / state_m.temperature - 1.0 / state_m1.temperature
    log_alpha = min(0.0, inv_diff * (complete_data_loglik(state_m1, d)
                                     - complete_data_loglik(state_m, d)))
    if np.log(rng.random()) < log_alpha:
        state_m.beta, state_m1.beta = state_m1.beta, state_m.beta
        state_m.gamma, state_m1.gamma = state_m1.gamma, state_m.gamma
        state_m.h, state_m1.h = state_m1.h, state_m.h
        return True
    return False


def _init_replicas(d: Dataset, cfg: SamplerConfig) -> tuple[list[ReplicaState], np.random.Generator]:
    temps = cfg.temperatures()
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.n_replicas + 1)
    swap_rng = np.random.Generator(np.random.Philox(seeds[-1]))
    replicas = []
    for m in range(cfg.n_replicas):
        rng = np.random.Generator(np.random.Philox(seeds[m]))
        beta = rng.normal(0.0, cfg.init_sd, size=d.d)
        gamma = rng.normal(0.0, cfg.init_sd, size=d.p)
        h = np.maximum(d.y, (rng.random(d.n) < 0.5).astype(float))
        replicas.append(ReplicaState(beta, gamma, h, float(temps[m]), rng))
    return replicas, swap_rng


def _rng_state_jsonable(gen: np.random.Generator) -> str:
    def default(o):
        if isinstance(o, np.ndarray):
            return {"__nd__": o.tolist()}
        if isinstance(o, (np.integer,)):
            return int(o)
        raise TypeError(type(o))
    return json.dumps(gen.bit_generator.state, default=default)


def _rng_from_json(text: str) -> np.random.Generator:
    def hook(obj):
        if "__nd__" in obj:
            return np.array(obj["__nd__"], dtype=np.uint64)
        return obj
    state = json.loads(text, object_hook=hook)
    gen = np.random.Generator(np.random.Philox())
    gen.bit_generator.state = state
    return gen


def save_checkpoint(path: str, cfg: SamplerConfig, iteration: int,
                    replicas: list[ReplicaState], swap_rng: np.random.Generator,
                    kept: list[np.ndarray], ll_trace: list[float],
                    swap_accepts: np.ndarray, swap_attempts: np.ndarray) -> None:
    """Versioned binary checkpoint (npz): config hash, iteration counter,
    per-replica (beta, gamma, h, temperature, RNG stream state)."""
    payload = {
        "version": np.array(CHECKPOINT_VERSION),
        "config_hash": np.array(cfg.config_hash()),
        "iteration": np.array(iteration),
        "swap_rng": np.array(_rng_state_jsonable(swap_rng)),
        "kept": np.array(kept) if kept else np.zeros((0, 0)),
        "ll_trace": np.array(ll_trace),
        "swap_accepts": swap_accepts,
        "swap_attempts": swap_attempts,
    }
    for m, st in enumerate(replicas):
        payload[f"beta_{m}"] = st.beta
        payload[f"gamma_{m}"] = st.gamma
        payload[f"h_{m}"] = st.h
        payload[f"temp_{m}"] = np.array(st.temperature)
        payload[f"rng_{m}"] = np.array(_rng_state_jsonable(st.rng))
    np.savez(path, **payload)


def load_checkpoint(path: str, cfg: SamplerConfig):
    data = np.load(path, allow_pickle=False)
    if int(data["version"]) != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {int(data['version'])}")
    if str(data["config_hash"]) != cfg.config_hash():
        raise ValueError("checkpoint config hash does not match the supplied config")
    replicas = []
    for m in range(cfg.n_replicas):
        replicas.append(ReplicaState(
            beta=data[f"beta_{m}"], gamma=data[f"gamma_{m}"], h=data[f"h_{m}"],
            temperature=float(data[f"temp_{m}"]),
            rng=_rng_from_json(str(data[f"rng_{m}"])),
        ))
    kept_arr = data["kept"]
    kept = [row for row in kept_arr] if kept_arr.size else []
    return (int(data["iteration"]), replicas, _rng_from_json(str(data["swap_rng"])),
            kept, list(data["ll_trace"]), data["swap_accepts"].copy(),
            data["swap_attempts"].copy())


def run_sampler(d: Dataset, cfg: SamplerConfig,
                resume_from: str | None = None) -> PosteriorDraws:
    """Full tempered Gibbs / replica-exchange loop.

    Swap rounds alternate between even and odd adjacent pairings so every
    neighboring pair is proposed on alternating rounds.  Only the T=1
    replica is retained, after burn-in.  Deterministic given the seed.
    """
    n_pairs = max(cfg.n_replicas - 1, 0)
    if resume_from is not None:
        (start, replicas, swap_rng, kept, ll_trace,
         swap_accepts, swap_attempts) = load_checkpoint(resume_from, cfg)
    else:
        replicas, swap_rng = _init_replicas(d, cfg)
        start = 0
        kept, ll_trace = [], []
        swap_accepts = np.zeros(n_pairs)
        swap_attempts = np.zeros(n_pairs)

    swap_round = start // cfg.exchange_every if cfg.exchange_every else 0
    for it in range(start + 1, cfg.total_iters + 1):
        for st in replicas:
            update_h(st, d)
            update_gamma(st, d, cfg)
            update_beta(st, d, cfg)
        if n_pairs and cfg.exchange_every and it % cfg.exchange_every == 0:
            first = swap_round % 2
            swap_round += 1
            for m in range(first, n_pairs, 2):
                swap_attempts[m] += 1
                if attempt_swap(replicas[m], replicas[m + 1], d, swap_rng):
                    swap_accepts[m] += 1
        if it > cfg.burn_in:
            cold = replicas[0]
            kept.append(np.concatenate([cold.beta, cold.gamma]))
            ll_trace.append(loglik(d, ParamPair(cold.beta, cold.gamma)))
        if (cfg.checkpoint_path and cfg.checkpoint_every
                and it % cfg.checkpoint_every == 0):
            save_checkpoint(cfg.checkpoint_path, cfg, it, replicas, swap_rng,
                            kept, ll_trace, swap_accepts, swap_attempts)

    with np.errstate(invalid="ignore"):
        rate = np.where(swap_attempts > 0, swap_accepts / np.maximum(swap_attempts, 1), 0.0)
    return PosteriorDraws(
        draws=np.array(kept).reshape(len(kept), d.d + d.p),
        loglik_trace=np.array(ll_trace),
        swap_accept_rate=rate,
        temperatures=cfg.temperatures(),
    )
