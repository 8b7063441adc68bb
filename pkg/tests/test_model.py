import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sgmvcg.data import Dataset, synth_ridge
from sgmvcg.model import RidgeObjective, convexity_constants, exact_minimizer


def one_sample(x, y, lam):
    return RidgeObjective(Dataset(np.atleast_2d(x), np.atleast_1d(y)), lam)


def fd_grad(f, w, h=1e-6):
    g = np.zeros_like(w)
    for j in range(len(w)):
        e = np.zeros_like(w)
        e[j] = h
        g[j] = (f(w + e) - f(w - e)) / (2 * h)
    return g


def test_grad_examples():
    np.testing.assert_allclose(one_sample([1.0, 0.0], 1.0, 0.1).grad_i(np.zeros(2), 0), [-2, 0])
    w = np.array([0.3, -1.2])
    x = np.array([2.0, 0.5])
    np.testing.assert_allclose(one_sample(x, x @ w, 0.0).grad_i(w, 0), 0, atol=1e-15)
    obj = one_sample([1.0, 2.0], 0.0, 0.5)
    w = np.array([1.0, 1.0])
    np.testing.assert_allclose(obj.grad_i(w, 0), [7, 13])
    np.testing.assert_allclose(fd_grad(lambda v: obj.loss_i(v, 0), w), [7, 13], atol=1e-5)


def test_index_out_of_range():
    obj = one_sample([1.0], 1.0, 0.1)
    with pytest.raises(IndexError):
        obj.grad_i(np.zeros(1), 1)
    with pytest.raises(IndexError):
        obj.loss_i(np.zeros(1), -1)


@given(st.integers(0, 2**32 - 1), st.floats(0, 2))
def test_averages_and_finite_differences(seed, lam):
    ds, _ = synth_ridge(7, 3, seed=seed)
    obj = RidgeObjective(ds, lam)
    w = np.random.default_rng(seed).normal(size=3)
    losses = [obj.loss_i(w, i) for i in range(ds.n)]
    grads = [obj.grad_i(w, i) for i in range(ds.n)]
    np.testing.assert_allclose(obj.loss(w), np.mean(losses), rtol=1e-10)
    np.testing.assert_allclose(obj.full_grad(w), np.mean(grads, axis=0), rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(fd_grad(obj.loss, w), obj.full_grad(w), atol=1e-5)
    r = ds.targets - ds.features @ w
    assert obj.loss(w) == pytest.approx(np.mean(r ** 2) + lam * w @ w, rel=1e-12)


def test_convexity_constants_examples():
    obj = RidgeObjective(Dataset(np.zeros((3, 2)), np.ones(3)), 0.5)
    assert convexity_constants(obj) == (1.0, 1.0)
    obj = RidgeObjective(Dataset(np.array([[1.0, 0.0], [0.6, 0.0]]), np.ones(2)), 0.1)
    mu, L = convexity_constants(obj)
    assert mu == pytest.approx(0.2) and L == pytest.approx(2.2)
    hess = 2 * np.outer([1.0, 0.0], [1.0, 0.0]) + 0.2 * np.eye(2)
    eig = np.linalg.eigvalsh(hess)
    assert eig.min() == pytest.approx(mu) and eig.max() == pytest.approx(L)
    with pytest.warns(RuntimeWarning):
        mu, _ = RidgeObjective(Dataset(np.ones((2, 1)), np.ones(2)), 0.0).convexity_constants()
    assert mu == 0


def test_exact_minimizer_examples():
    assert exact_minimizer(one_sample([1.0], 2.0, 1.0))[0] == pytest.approx(1.0)
    ds, _ = synth_ridge(20, 4, seed=3)
    zero = RidgeObjective(Dataset(ds.features, np.zeros(20)), 0.1)
    np.testing.assert_array_equal(exact_minimizer(zero), 0)
    obj = RidgeObjective(ds, 1e-3)
    assert np.linalg.norm(obj.full_grad(obj.exact_minimizer())) <= 1e-8


def test_exact_minimizer_singular():
    obj = RidgeObjective(Dataset(np.zeros((2, 2)), np.ones(2)), 0.0)
    with pytest.raises(FloatingPointError):
        obj.exact_minimizer()


@given(st.integers(0, 2**32 - 1))
def test_strong_convexity_inequality(seed):
    # f_i(a) >= f_i(b) + grad_i(b).(a - b) + mu/2 ||a - b||^2, and the L upper bound
    ds, _ = synth_ridge(5, 3, seed=seed)
    obj = RidgeObjective(ds, 0.2)
    mu, L = obj.convexity_constants()
    rng = np.random.default_rng(seed)
    a, b = rng.normal(size=3), rng.normal(size=3)
    for i in range(ds.n):
        lin = obj.loss_i(b, i) + obj.grad_i(b, i) @ (a - b)
        q = 0.5 * (a - b) @ (a - b)
        assert obj.loss_i(a, i) >= lin + mu * q - 1e-9
        assert obj.loss_i(a, i) <= lin + L * q + 1e-9


def test_excess_loss_matches_difference():
    ds, _ = synth_ridge(50, 4, seed=4)
    obj = RidgeObjective(ds, 0.1)
    ws = obj.exact_minimizer()
    w = ws + 0.3
    assert obj.excess_loss(w, ws) == pytest.approx(obj.loss(w) - obj.loss(ws), rel=1e-9)
    assert obj.excess_loss(ws) == pytest.approx(0, abs=1e-20)
