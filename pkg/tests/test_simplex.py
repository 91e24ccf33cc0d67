import logging
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from omdbarrier.core import ProxError
from omdbarrier.simplex import (entropy_prox, is_simplex_point, lbftrl_kkt_residual, lbftrl_leader,
                                logbarrier_kkt_residual, logbarrier_prox, solve_multiplier, uniform)

from oracles import (entropy_prox_objective, logbarrier_prox_objective, quadratic_multiplier,
                     simplex_grid_d3)


def interior(rng, d):
    return 0.9 * rng.dirichlet(np.ones(d)) + 0.1 / d


class TestEntropyProx:
    def test_constant_gradient(self, rng):
        x = interior(rng, 6)
        np.testing.assert_allclose(entropy_prox(x, np.full(6, 4.0), 0.3), x, atol=1e-15)

    def test_hand_value(self):
        x = entropy_prox(np.array([0.5, 0.5]), np.array([math.log(2), 0.0]), 1.0)
        np.testing.assert_allclose(x, [1 / 3, 2 / 3], atol=1e-15)

    def test_matches_grid_d3(self, rng):
        x_t = interior(rng, 3)
        g = rng.normal(size=3)
        eta = 0.8
        x = entropy_prox(x_t, g, eta)
        best, _ = simplex_grid_d3(lambda X: entropy_prox_objective(X, x_t, g, eta))
        assert np.max(np.abs(x - best)) <= 1e-3

    def test_overflow_safe(self):
        x = entropy_prox(np.array([0.5, 0.5]), np.array([-1e4, 0.0]), 1.0)
        assert np.all(np.isfinite(x)) and x[0] == pytest.approx(1.0)


class TestLogBarrierProx:
    def test_zero_gradient(self, rng):
        x_t = interior(rng, 5)
        x, rep = logbarrier_prox(x_t, np.zeros(5), 0.4)
        np.testing.assert_allclose(x, x_t, atol=1e-12)
        assert abs(rep.multiplier) <= 1e-10

    def test_quadratic_root_d2(self):
        # 1/(1 + lam) + 1/(3 + lam) = 1  ->  lam^2 + 2 lam - 1 = 0
        lam = math.sqrt(2) - 1
        assert quadratic_multiplier(1.0, 3.0) == pytest.approx(lam)
        x, rep = logbarrier_prox(np.array([0.5, 0.5]), np.array([-1.0, 1.0]), 1.0)
        assert rep.multiplier == pytest.approx(lam, abs=1e-12)
        np.testing.assert_allclose(x, [1 / math.sqrt(2), 1 / (2 + math.sqrt(2))], atol=1e-12)

    def test_matches_grid_d3(self, rng):
        x_t = interior(rng, 3)
        g = rng.normal(size=3) * 3
        eta = 0.5
        x, _ = logbarrier_prox(x_t, g, eta)
        best, _ = simplex_grid_d3(lambda X: logbarrier_prox_objective(X, x_t, g, eta))
        assert np.max(np.abs(x - best)) <= 1e-3

    def test_randomized_contract(self, rng):
        worst_iter = 0
        for _ in range(300):
            d = int(rng.integers(2, 12))
            x_t = interior(rng, d)
            g = rng.normal(size=d) * 10 ** rng.uniform(-2, 3)
            eta = 1.0
            x, rep = logbarrier_prox(x_t, g, eta)
            assert is_simplex_point(x, tol=1e-12, interior=True)
            assert rep.residual <= 1e-12
            assert logbarrier_kkt_residual(x_t, g, eta, x) <= 1e-8 * max(1.0, np.abs(1 / x).max())
            obj = lambda z: logbarrier_prox_objective(z[None], x_t, g, eta)[0]
            assert obj(x) <= obj(x_t) + 1e-10
            worst_iter = max(worst_iter, rep.iterations)
        assert worst_iter <= 50

    def test_huge_spread_warns(self, caplog):
        with caplog.at_level(logging.WARNING, logger="omdbarrier"):
            x, rep = logbarrier_prox(np.array([0.5, 0.5]), np.array([1e7, 0.0]), 1.0)
        assert "ill-conditioned" in caplog.text
        assert rep.residual <= 1e-12 and np.all(x > 0)

    def test_iteration_budget(self):
        with pytest.raises(ProxError):
            solve_multiplier(np.array([0.3, 5.0, 40.0]), max_iter=1)

    def test_rejects_boundary(self):
        with pytest.raises(ValueError):
            logbarrier_prox(np.array([1.0, 0.0]), np.zeros(2), 0.1)


class TestLbftrlLeader:
    def test_zero_is_uniform(self):
        x, _ = lbftrl_leader(np.zeros(4), 0.25)
        np.testing.assert_allclose(x, uniform(4), atol=1e-15)

    def test_constant_is_uniform(self):
        x, _ = lbftrl_leader(np.full(3, -7.5), 0.25)
        np.testing.assert_allclose(x, uniform(3), atol=1e-14)

    def test_golden_ratio(self):
        x, rep = lbftrl_leader(np.array([0.0, 1.0]), 1.0)
        phi = (1 + math.sqrt(5)) / 2
        assert quadratic_multiplier(0.0, 1.0) == pytest.approx(phi)
        assert rep.multiplier == pytest.approx(phi, abs=1e-12)
        np.testing.assert_allclose(x, [2 / (1 + math.sqrt(5)), 2 / (3 + math.sqrt(5))], atol=1e-12)

    def test_kkt_random(self, rng):
        for _ in range(100):
            d = int(rng.integers(2, 10))
            cum = -rng.uniform(0, 200, size=d)
            x, rep = lbftrl_leader(cum, 0.1)
            assert lbftrl_kkt_residual(cum, 0.1, x) <= 1e-8 * max(1.0, np.abs(1 / x).max())
            f = lambda z: 0.1 * cum @ z - np.sum(np.log(z))
            assert f(x) <= f(uniform(d)) + 1e-10


@settings(max_examples=200, deadline=None)
@given(w=arrays(np.float64, st.integers(2, 8), elements=st.floats(0.01, 1.0)),
       g=st.lists(st.floats(-1e3, 1e3), min_size=8, max_size=8),
       eta=st.floats(1e-3, 1.0))
def test_prox_outputs_are_interior_simplex_points(w, g, eta):
    x_t = w / w.sum()
    g = np.array(g[: x_t.size])
    for x in (logbarrier_prox(x_t, g, eta)[0], entropy_prox(x_t, g, eta)):
        assert abs(x.sum() - 1) <= 1e-12
        assert np.all(x >= 0)
    x, rep = logbarrier_prox(x_t, g, eta)
    assert np.all(x > 0)
    assert rep.iterations <= 50


@settings(max_examples=100, deadline=None)
@given(c=arrays(np.float64, st.integers(2, 10), elements=st.floats(-1e4, 1e4)))
def test_multiplier_equation(c):
    x, rep = solve_multiplier(c)
    assert abs(x.sum() - 1) <= 1e-12
    np.testing.assert_allclose(1 / x - c, rep.multiplier, rtol=1e-9, atol=1e-9 * np.abs(c).max())
