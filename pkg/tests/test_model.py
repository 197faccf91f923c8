import numpy as np
import pytest

from zilr.model import (Dataset, ParamPair, canonicalize, grad_loglik,
                        inv_logit, loglik)


def random_instance(rng, n=30, d=3, shared=True, scale=1.0):
    X = np.column_stack([np.ones(n), rng.standard_normal((n, d - 1))])
    Z = X if shared else np.column_stack(
        [np.ones(n), rng.standard_normal((n, d - 1))])
    y = (rng.random(n) < 0.5).astype(float)
    data = Dataset(y=y, X=X, Z=None if shared else Z)
    p = ParamPair(rng.normal(0.0, scale, d), rng.normal(0.0, scale, d))
    return data, p


def test_dataset_validation():
    X = np.column_stack([np.ones(4), np.arange(4.0)])
    with pytest.raises(ValueError):
        Dataset(y=np.array([0.0, 1.0, 2.0, 0.0]), X=X)
    with pytest.raises(ValueError):
        Dataset(y=np.array([0.0, 1.0, np.nan, 0.0]), X=X)
    with pytest.raises(ValueError):
        Dataset(y=np.zeros(4), X=np.arange(8.0).reshape(4, 2))
    d = Dataset(y=np.array([0.0, 1.0, 1.0, 0.0]), X=X)
    assert d.shared_design
    assert (d.n, d.d, d.p) == (4, 2, 2)


def test_dataset_intercept_opt_out():
    X = np.arange(8.0).reshape(4, 2)
    d = Dataset(y=np.zeros(4), X=X, require_intercept=False)
    assert d.d == 2


def test_inv_logit_matches_definition():
    u = np.linspace(-30, 30, 101)
    assert np.allclose(inv_logit(u), 1.0 / (1.0 + np.exp(-u)))


def test_loglik_matches_naive_formula():
    rng = np.random.default_rng(0)
    for _ in range(20):
        d, p = random_instance(rng, shared=False)
        pr = inv_logit(d.X @ p.beta) * inv_logit(d.Z @ p.gamma)
        naive = np.sum(d.y * np.log(pr) + (1 - d.y) * np.log1p(-pr))
        assert loglik(d, p) == pytest.approx(naive, rel=1e-12)


def test_loglik_stable_at_extreme_parameters():
    rng = np.random.default_rng(1)
    d, p = random_instance(rng)
    big = ParamPair(p.beta * 200.0, p.gamma * 200.0)
    val = loglik(d, big)
    assert np.isfinite(val)
    gb, gg = grad_loglik(d, big)
    assert np.all(np.isfinite(gb)) and np.all(np.isfinite(gg))


def test_exchange_symmetry_shared_design():
    rng = np.random.default_rng(2)
    for _ in range(200):
        d, p = random_instance(rng, scale=rng.uniform(0.1, 3.0))
        la = loglik(d, p)
        lb = loglik(d, p.swapped())
        assert abs(la - lb) < 1e-10 * (1.0 + abs(la))


def test_gradient_matches_central_differences():
    rng = np.random.default_rng(3)
    eps = 1e-6
    for _ in range(30):
        d, p = random_instance(rng, shared=False)
        gb, gg = grad_loglik(d, p)
        grad = np.concatenate([gb, gg])
        x0 = p.concat()
        num = np.empty_like(grad)
        for j in range(x0.size):
            hi = x0.copy(); hi[j] += eps
            lo = x0.copy(); lo[j] -= eps
            num[j] = (loglik(d, ParamPair(hi[:d.d], hi[d.d:]))
                      - loglik(d, ParamPair(lo[:d.d], lo[d.d:]))) / (2 * eps)
        denom = np.maximum(np.abs(grad), 1.0)
        assert np.max(np.abs(grad - num) / denom) < 1e-6


def test_canonicalize_is_idempotent_and_symmetric():
    rng = np.random.default_rng(4)
    for _ in range(50):
        p = ParamPair(rng.standard_normal(3), rng.standard_normal(3))
        c1 = canonicalize(p).canonical
        c2 = canonicalize(p.swapped()).canonical
        assert np.array_equal(c1.concat(), c2.concat())
        assert np.array_equal(canonicalize(c1).canonical.concat(), c1.concat())
        # representative really is the lexicographically smaller ordering
        assert tuple(c1.concat()) <= tuple(c1.swapped().concat())


def test_canonicalize_requires_shared_dims():
    with pytest.raises(ValueError):
        canonicalize(ParamPair(np.zeros(2), np.zeros(3)))


def test_param_pair_dim_mismatch_raises():
    rng = np.random.default_rng(5)
    d, _ = random_instance(rng, d=3)
    with pytest.raises(ValueError):
        loglik(d, ParamPair(np.zeros(2), np.zeros(3)))
