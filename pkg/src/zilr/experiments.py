"""Data generators and experiment drivers: simulation tables, bimodality
runs, and the misspecification sign-flip demonstration.

Simulation scenarios share the outcome-component truth and differ only in
the susceptibility intercept, which controls the structural-zero rate.
Per-replication RNG streams are derived from (seed, rep_index) via a
counter-based generator so that results are independent of execution
order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit

from .analysis import ClusterReport, PcaProjection, kmeans2, pca2
from .fit import FitConfig, FitResult, fit_logistic, fit_zilr, relabel, screen_reasonable
from .model import Dataset, ParamPair, canonicalize
from .sampler import PosteriorDraws, SamplerConfig, run_sampler

BETA_TRUE = np.array([0.5, 1.0, 0.5, 0.5, 0.25])
GAMMA_SLOPES = np.array([-1.0, -1.0, 0.5, 0.5])
MISLABEL_INTERCEPTS = {
    "VeryLow": 4.3,
    "Low": 3.0,
    "Moderate": 1.7,
    "High": 1.0,
}
BIMODALITY_COVARIATES = {
    "S1": ["intercept", "normal", "normal", "normal", "normal"],
    "S2": ["intercept", "bernoulli", "bernoulli", "bernoulli", "bernoulli"],
    "S3": ["intercept", "normal", "normal", "bernoulli", "bernoulli"],
}


@dataclass
class Scenario:
    name: str
    beta_true: np.ndarray
    gamma_true: np.ndarray
    n: int
    covariate_spec: list[str]
    reps: int = 500
    seed: int = 0

    def __post_init__(self):
        self.beta_true = np.asarray(self.beta_true, dtype=float)
        self.gamma_true = np.asarray(self.gamma_true, dtype=float)
        if len(self.covariate_spec) != self.beta_true.shape[0]:
            raise ValueError("covariate_spec length must match beta_true")
        if self.covariate_spec[0] != "intercept":
            raise ValueError("first covariate must be the intercept")

    @property
    def truth(self) -> ParamPair:
        return ParamPair(self.beta_true, self.gamma_true)


def simulation_scenario(name: str, reps: int = 500, n: int = 1000,
                        seed: int = 0) -> Scenario:
    """Mislabel-level scenarios: standard-normal covariates, zero-inflation
    controlled by the susceptibility intercept."""
    if name not in MISLABEL_INTERCEPTS:
        raise ValueError(f"unknown scenario {name!r}")
    gamma = np.concatenate([[MISLABEL_INTERCEPTS[name]], GAMMA_SLOPES])
    spec = ["intercept"] + ["normal"] * 4
    return Scenario(name, BETA_TRUE, gamma, n=n, covariate_spec=spec,
                    reps=reps, seed=seed)


def bimodality_scenario(name: str, n: int = 2000, seed: int = 0) -> Scenario:
    """Covariate-design scenarios for posterior bimodality runs."""
    if name not in BIMODALITY_COVARIATES:
        raise ValueError(f"unknown scenario {name!r}")
    gamma = np.concatenate([[1.7], GAMMA_SLOPES])
    return Scenario(name, BETA_TRUE, gamma, n=n,
                    covariate_spec=BIMODALITY_COVARIATES[name],
                    reps=1, seed=seed)


def _rep_rng(seed: int, rep_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(
        np.random.SeedSequence(entropy=seed, spawn_key=(rep_index,))))


def generate(scenario: Scenario, rep_index: int = 0):
    """One replication's dataset plus the latent indicators and uncensored
    responses (returned for debugging)."""
    rng = _rep_rng(scenario.seed, rep_index)
    cols = []
    for kind in scenario.covariate_spec:
        if kind == "intercept":
            cols.append(np.ones(scenario.n))
        elif kind == "normal":
            cols.append(rng.standard_normal(scenario.n))
        elif kind == "bernoulli":
            cols.append((rng.random(scenario.n) < 0.5).astype(float))
        else:
            raise ValueError(f"unknown covariate kind {kind!r}")
    x = np.column_stack(cols)
    h = (rng.random(scenario.n) < expit(x @ scenario.gamma_true)).astype(float)
    y_star = (rng.random(scenario.n) < expit(x @ scenario.beta_true)).astype(float)
    y = h * y_star
    d = Dataset(y=y, X=x)
    return d, h, y_star


def structural_zero_rate(scenario: Scenario, n_samples: int = 100000,
                         seed: int = 12345) -> float:
    """Monte-Carlo estimate of the structural-zero fraction E[1 - F(gamma.x)]."""
    probe = Scenario(scenario.name, scenario.beta_true, scenario.gamma_true,
                     n=n_samples, covariate_spec=scenario.covariate_spec,
                     reps=1, seed=seed)
    d, _, _ = generate(probe, 0)
    return float(np.mean(1.0 - expit(d.X @ scenario.gamma_true)))


@dataclass
class MethodSummary:
    bias: np.ndarray
    sd: np.ndarray
    n_converged: int
    n_unreasonable: int
    n_total: int
    estimates: np.ndarray        # raw per-rep estimates (NaN where failed)

    @property
    def ratio(self) -> float:
        return self.n_converged / self.n_total


@dataclass
class SimSummary:
    scenario: str
    methods: dict[str, MethodSummary]


METHODS = ("Proposed", "StandardLR", "NaiveZILR")


def run_simulation(scenario: Scenario, methods=METHODS,
                   fit_cfg: FitConfig | None = None) -> SimSummary:
    """Per replication: generate data, fit standard LR, fit the naive
    zero-inflated model, relabel against the LR reference, and screen the
    estimates against the truth.  Bias/SD aggregate over replications
    that converged with reasonable estimates."""
    methods = tuple(methods)
    truth_full = scenario.truth.concat()
    dim = {"StandardLR": scenario.beta_true.shape[0],
           "Proposed": truth_full.shape[0], "NaiveZILR": truth_full.shape[0]}
    store = {m: np.full((scenario.reps, dim[m]), np.nan) for m in methods}
    conv = {m: np.zeros(scenario.reps, dtype=bool) for m in methods}
    reasonable = {m: np.zeros(scenario.reps, dtype=bool) for m in methods}

    need_lr = "StandardLR" in methods or "Proposed" in methods
    need_zilr = "Proposed" in methods or "NaiveZILR" in methods
    for rep in range(scenario.reps):
        d, _, _ = generate(scenario, rep)
        base = fit_cfg or FitConfig()
        cfg = FitConfig(max_iters=base.max_iters, grad_tol=base.grad_tol,
                        init_sd=base.init_sd, seed=base.seed * 1_000_003 + rep,
                        norm_cap=base.norm_cap, full_memory=base.full_memory,
                        memory=base.memory)
        lr = fit_logistic(d, cfg) if need_lr else None
        zi = fit_zilr(d, cfg) if need_zilr else None
        if "StandardLR" in methods and lr is not None:
            store["StandardLR"][rep] = lr.params.beta
            conv["StandardLR"][rep] = lr.converged
            reasonable["StandardLR"][rep] = screen_reasonable(
                ParamPair(lr.params.beta, np.zeros(0)),
                ParamPair(scenario.beta_true, np.zeros(0)))
        if "NaiveZILR" in methods and zi is not None:
            store["NaiveZILR"][rep] = zi.params.concat()
            conv["NaiveZILR"][rep] = zi.converged
            reasonable["NaiveZILR"][rep] = screen_reasonable(zi.params, scenario.truth)
        if "Proposed" in methods and zi is not None and lr is not None:
            chosen, _, _ = relabel(zi.params, lr.params.beta)
            store["Proposed"][rep] = chosen.concat()
            conv["Proposed"][rep] = zi.converged and lr.converged
            reasonable["Proposed"][rep] = screen_reasonable(chosen, scenario.truth)

    summaries = {}
    for m in methods:
        truth = scenario.beta_true if m == "StandardLR" else truth_full
        good = conv[m] & reasonable[m]
        est = store[m][good]
        bias = est.mean(axis=0) - truth if est.size else np.full(dim[m], np.nan)
        sd = est.std(axis=0, ddof=1) if est.shape[0] > 1 else np.full(dim[m], np.nan)
        summaries[m] = MethodSummary(
            bias=bias, sd=sd,
            n_converged=int(good.sum()),
            n_unreasonable=int(scenario.reps - good.sum()),
            n_total=scenario.reps,
            estimates=store[m],
        )
    return SimSummary(scenario=scenario.name, methods=summaries)


@dataclass
class BimodalityReport:
    draws: PosteriorDraws
    clusters: ClusterReport
    projection: PcaProjection
    swap_distance: float        # ||b1-g2|| + ||g1-b2|| across centroids
    centroid_distance: float
    clusters_swap_related: bool


def swap_structure(clusters: ClusterReport) -> tuple[float, float]:
    """Cross-component centroid distance versus plain centroid distance."""
    c1, c2 = clusters.centroids
    half = c1.shape[0] // 2
    b1, g1 = c1[:half], c1[half:]
    b2, g2 = c2[:half], c2[half:]
    swap = float(np.linalg.norm(b1 - g2) + np.linalg.norm(g1 - b2))
    plain = float(np.linalg.norm(c1 - c2))
    return swap, plain


def run_bimodality(scenario: Scenario, sampler_cfg: SamplerConfig,
                   cluster_seed: int = 0) -> BimodalityReport:
    """Generate one dataset, sample the posterior, and summarize the mode
    structure.  Whether the two clusters are swap-related is reported,
    not asserted; binary designs are expected to fail the check."""
    d, _, _ = generate(scenario, 0)
    draws = run_sampler(d, sampler_cfg)
    clusters = kmeans2(draws, seed=cluster_seed)
    projection = pca2(draws)
    swap, plain = swap_structure(clusters)
    return BimodalityReport(
        draws=draws, clusters=clusters, projection=projection,
        swap_distance=swap, centroid_distance=plain,
        clusters_swap_related=bool(swap < plain),
    )


def canonical_posterior_mean(draws: PosteriorDraws) -> np.ndarray:
    """Mean of the draws after mapping each to its canonical ordering."""
    half = draws.draws.shape[1] // 2
    canon = np.array([
        canonicalize(ParamPair(row[:half], row[half:])).canonical.concat()
        for row in draws.draws])
    return canon.mean(axis=0)


@dataclass
class SignFlipConfig:
    a: float = 1.0
    beta_intercept: float = 0.5
    gamma_intercept: float = 1.7
    c_grid: tuple = (0.0, -1.0, -2.0, -4.0, -6.0, -8.0)
    n_samples: int = 200000
    seed: int = 0

    def __post_init__(self):
        if self.a <= 0:
            raise ValueError("true slope a must be positive")
        if any(c > 0 for c in self.c_grid):
            raise ValueError("c grid values must be <= 0")


@dataclass
class SignFlipRow:
    c: float
    t_star: float
    f_hat: float
    f_se: float
    converged: bool


def run_signflip(cfg: SignFlipConfig) -> list[SignFlipRow]:
    """Pseudo-true slope of a misspecified plain logistic fit as the
    zero-inflation slope c varies.

    One common covariate sample is reused across the whole c grid (common
    random numbers).  For each c the Monte-Carlo expected log-likelihood
    of the misspecified model is maximized jointly over (intercept, t),
    and f_hat estimates the profile derivative at t=0, whose sign
    determines the sign of the pseudo-true slope by concavity.
    """
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(cfg.seed)))
    xj = rng.standard_normal(cfg.n_samples)
    rows = []
    for c in cfg.c_grid:
        pi = expit(cfg.beta_intercept + cfg.a * xj) * expit(cfg.gamma_intercept + c * xj)

        def neg(theta):
            eta = theta[0] + theta[1] * xj
            val = np.mean(pi * -np.logaddexp(0.0, -eta)
                          + (1.0 - pi) * -np.logaddexp(0.0, eta))
            resid = pi - expit(eta)
            grad = np.array([np.mean(resid), np.mean(resid * xj)])
            return -val, -grad

        res = minimize(neg, np.zeros(2), jac=True, method="L-BFGS-B",
                       options={"maxiter": 500, "gtol": 1e-10})
        f_terms = pi * xj
        rows.append(SignFlipRow(
            c=float(c),
            t_star=float(res.x[1]),
            f_hat=float(np.mean(f_terms)),
            f_se=float(np.std(f_terms, ddof=1) / np.sqrt(cfg.n_samples)),
            converged=bool(res.success),
        ))
    return rows
