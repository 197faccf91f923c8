"""End-to-end acceptance checks.

Each test prints exactly one PASS/FAIL line so the suite output doubles
as a checklist.  The slow items (4 and 7) are full sampler runs and take
a few minutes each.
"""

import sys

import numpy as np
import pytest
from scipy.special import expit

from zilr.analysis import kmeans2
from zilr.experiments import (SignFlipConfig, bimodality_scenario,
                              canonical_posterior_mean, run_bimodality,
                              run_signflip, run_simulation,
                              simulation_scenario)
from zilr.fit import FitConfig, fit_zilr, relabel
from zilr.model import Dataset, ParamPair, canonicalize, grad_loglik, loglik
from zilr.polya_gamma import pg_mean, sample_pg
from zilr.sampler import SamplerConfig, run_sampler
from zilr.separation import (SeparationStatus, check_direction,
                             detect_double_separation, estimate_margin)


def report(num, ok, text):
    # write to the real stdout so the checklist shows up even under
    # pytest's default output capture
    print(f"\nACCEPTANCE {num}: {'PASS' if ok else 'FAIL'} - {text}",
          file=sys.__stdout__, flush=True)
    assert ok, text


def random_shared_instance(rng, n=40, d=4):
    X = np.column_stack([np.ones(n), rng.standard_normal((n, d - 1))])
    y = (rng.random(n) < 0.5).astype(float)
    p = ParamPair(rng.normal(0.0, 1.5, d), rng.normal(0.0, 1.5, d))
    return Dataset(y=y, X=X), p


def test_acceptance_01_exchange_symmetry():
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(1000):
        d, p = random_shared_instance(rng)
        la = loglik(d, p)
        lb = loglik(d, p.swapped())
        worst = max(worst, abs(la - lb) / (1.0 + abs(la)))
    report(1, worst < 1e-10,
           f"exchange symmetry over 1000 instances, worst rel diff {worst:.2e}")


def test_acceptance_02_gradient_check():
    rng = np.random.default_rng(102)
    eps = 1e-6
    worst = 0.0
    for _ in range(100):
        d, p = random_shared_instance(rng, n=25, d=3)
        gb, gg = grad_loglik(d, p)
        grad = np.concatenate([gb, gg])
        x0 = p.concat()
        for j in range(x0.size):
            hi = x0.copy(); hi[j] += eps
            lo = x0.copy(); lo[j] -= eps
            num = (loglik(d, ParamPair(hi[:3], hi[3:]))
                   - loglik(d, ParamPair(lo[:3], lo[3:]))) / (2 * eps)
            worst = max(worst,
                        abs(grad[j] - num) / max(abs(grad[j]), 1.0))
    report(2, worst < 1e-6,
           f"analytic vs central-difference gradient, worst rel err {worst:.2e}")


def test_acceptance_03_pg_moments():
    # independent oracle for the target: direct numeric summation of the
    # weight series brackets the closed-form mean before any sampling
    def oracle_brackets(b, c, terms=100000):
        k = np.arange(1, terms + 1)
        partial = np.sum(1.0 / ((k - 0.5) ** 2 + c * c / (4 * np.pi ** 2)))
        scale = b / (2.0 * np.pi ** 2)
        return scale * partial, scale * (partial + 1.0 / (terms - 0.5))

    rng = np.random.Generator(np.random.Philox(103))
    ok = True
    detail = []
    for temp in (1.0, 1.05 ** 20):
        b = 1.0 / temp
        for c in (0.5, 1.0, 2.0):
            target = b / (2.0 * c) * np.tanh(c / 2.0)
            lo, hi = oracle_brackets(b, c)
            ok &= lo <= target <= hi
            draws = sample_pg(b, np.full(100000, c), rng=rng)
            se = draws.std(ddof=1) / np.sqrt(draws.size)
            z = (draws.mean() - target) / se
            ok &= abs(z) < 3.0
            detail.append(f"T={temp:.2f},c={c}:z={z:+.2f}")
    report(3, ok, "PG moment check vs series oracle (" + " ".join(detail) + ")")


def test_acceptance_04_brute_force_posterior():
    X = np.array([[1.0, 0.5], [1.0, -1.0], [1.0, 1.5], [1.0, -0.3]])
    y = np.array([1.0, 0.0, 1.0, 0.0])
    d = Dataset(y=y, X=X)
    prior_var = 4.0
    lim, bins = 6.0, 40
    edges = np.linspace(-lim, lim, bins + 1)
    cent = 0.5 * (edges[:-1] + edges[1:])
    grid = np.stack(np.meshgrid(cent, cent, indexing="ij"),
                    axis=-1).reshape(-1, 2)
    scores = grid @ X.T
    log_f = -np.logaddexp(0.0, -scores)
    log_prior = -0.5 * np.sum(grid ** 2, axis=1) / prior_var
    # joint over the (beta, gamma) product grid; h marginalized exactly
    # because p(y=1) = F(a)F(b) and p(y=0) = 1 - F(a)F(b)
    joint = np.zeros((grid.shape[0], grid.shape[0]))
    for i in range(4):
        if y[i] == 1.0:
            joint += log_f[:, i][:, None] + log_f[None, :, i]
        else:
            joint += np.log1p(-np.outer(expit(scores[:, i]),
                                        expit(scores[:, i])))
    joint += log_prior[:, None] + log_prior[None, :]
    target = np.exp(joint - joint.max()).sum(axis=1)
    target = (target / target.sum()).reshape(bins, bins)

    cfg = SamplerConfig(n_replicas=4, temp_ratio=1.3, exchange_every=25,
                        total_iters=60000, burn_in=5000,
                        prior_var_beta=prior_var, prior_var_gamma=prior_var,
                        pg_trunc=100, seed=7)
    out = run_sampler(d, cfg)
    hist, _, _ = np.histogram2d(out.draws[:, 0], out.draws[:, 1],
                                bins=[edges, edges])
    hist /= hist.sum()
    tv = 0.5 * np.abs(hist - target).sum()
    report(4, tv < 0.05,
           f"sampler vs exhaustive-grid beta marginal, TV {tv:.4f}")


def test_acceptance_05_bias_table_moderate_low():
    results = {name: run_simulation(simulation_scenario(name, reps=500))
               for name in ("Moderate", "Low")}
    lr = results["Moderate"].methods["StandardLR"]
    ok = abs(lr.bias[1] - (-0.724)) <= 0.010
    ok &= abs(lr.bias[2] - (-0.559)) <= 0.010
    for name in ("Moderate", "Low"):
        prop = results[name].methods["Proposed"]
        base = results[name].methods["StandardLR"]
        for j in (1, 2):
            ok &= abs(prop.bias[j]) < abs(base.bias[j])
    report(5, ok,
           f"Moderate StandardLR bias ({lr.bias[1]:+.4f}, {lr.bias[2]:+.4f}) "
           "vs (-0.724, -0.559) +/- 0.010; proposed beats baseline in "
           "Low and Moderate")


def test_acceptance_06_reasonable_rates_verylow():
    out = run_simulation(simulation_scenario("VeryLow", reps=500))
    prop = out.methods["Proposed"].ratio
    naive = out.methods["NaiveZILR"].ratio
    lr = out.methods["StandardLR"].ratio
    ok = (prop - naive >= 0.10) and lr == 1.0
    report(6, ok,
           f"VeryLow usable-fit rates: proposed {prop:.1%}, naive {naive:.1%}, "
           f"standard LR {lr:.1%}")


def test_acceptance_07_bimodality():
    cfg = SamplerConfig(n_replicas=5, total_iters=6000, burn_in=1000,
                        exchange_every=50, seed=0, pg_trunc=64)
    s1 = run_bimodality(bimodality_scenario("S1", seed=2), cfg)
    swap_ok = s1.swap_distance < s1.centroid_distance
    truth = canonicalize(ParamPair(
        bimodality_scenario("S1").beta_true,
        bimodality_scenario("S1").gamma_true)).canonical.concat()
    diff = np.max(np.abs(canonical_posterior_mean(s1.draws) - truth))
    mean_ok = diff < 0.5

    # binary design: completion only, swap structure reported not asserted
    cfg2 = SamplerConfig(n_replicas=3, total_iters=1200, burn_in=400,
                         exchange_every=50, seed=0, pg_trunc=64,
                         temp_ratio=1.1)
    s2 = run_bimodality(bimodality_scenario("S2", seed=2), cfg2)
    s2_done = s2.draws.kept_iters == 800

    report(7, swap_ok and mean_ok and s2_done,
           f"S1 swap property ({s1.swap_distance:.2f} < "
           f"{s1.centroid_distance:.2f}), canonical mean within {diff:.3f} "
           f"of truth; S2 completed (swap-related={s2.clusters_swap_related},"
           f" not asserted)")


def test_acceptance_08_relabel_published_vectors():
    beta_a = np.array([1.250, -0.413, 1.085, -1.251, 0.647, -0.500])
    gamma_a = np.array([-3.192, 0.138, 0.179, 2.300, 0.371, -0.223])
    beta_lr = np.array([-3.444, -0.111, 0.627, 1.474, 0.590, -0.431])
    chosen, which, (sq_o, sq_s) = relabel(ParamPair(beta_a, gamma_a), beta_lr)
    ok = (which == "swapped" and abs(sq_o - 29.771) <= 0.01
          and abs(sq_s - 1.102) <= 0.01)
    report(8, ok,
           f"relabeling picks solution B, squared norms {sq_o:.3f} / {sq_s:.3f}")


def test_acceptance_09_sign_flip():
    rows = run_signflip(SignFlipConfig(seed=109))
    ok = rows[0].t_star > 0 and rows[-1].t_star < 0
    flip = any(a.t_star > 0 > b.t_star for a, b in zip(rows, rows[1:]))
    ok &= flip
    for prev, cur in zip(rows, rows[1:]):
        ok &= cur.f_hat <= prev.f_hat + 2.0 * (prev.f_se + cur.f_se)
    report(9, ok,
           "pseudo-true slope flips sign along the c grid "
           f"(t* from {rows[0].t_star:+.3f} to {rows[-1].t_star:+.3f}), "
           "f-hat monotone within MC error")


def test_acceptance_10_separation():
    x2 = np.array([0.01, 0.01, 0.01, -0.01, -0.01, -0.01])
    sep = Dataset(y=np.array([1.0, 1, 1, 0, 0, 0]),
                  X=np.column_stack([np.ones(6), x2]))
    cert = detect_double_separation(sep)
    cert_ok = (cert.status is SeparationStatus.DOUBLY_SEPARATED
               and check_direction(sep, *cert.direction) is not None)
    div = fit_zilr(sep, FitConfig(seed=0))
    div_ok = (not div.converged
              and np.max(np.abs(div.params.concat())) > 1e3)

    margin_data = Dataset(
        y=np.array([1.0, 1, 0, 0]),
        X=np.array([[1.0], [-1.0], [1.0], [-1.0]]),
        Z=np.array([[1.0], [-1.0], [-1.0], [1.0]]),
        require_intercept=False)
    mc = estimate_margin(margin_data, restarts=64, iters=400, seed=1)
    fit = fit_zilr(margin_data, FitConfig(seed=0))
    margin_ok = (mc.status is SeparationStatus.MARGIN_FOUND
                 and mc.estimate > 0.0 and fit.converged
                 and np.max(np.abs(fit.params.concat())) < 1e3)
    report(10, cert_ok and div_ok and margin_ok,
           f"double separation certified and fit diverges; margin "
           f"{mc.estimate:.4f} > 0 and fit converges bounded")
