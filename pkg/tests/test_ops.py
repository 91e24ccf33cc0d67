import math

import numpy as np
import pytest

from omdbarrier import core, ops
from omdbarrier.data import generate_market
from omdbarrier.ops import EgState, eg_round, lbftrl_round, lbomd_round, ops_gradient, ops_loss
from omdbarrier.simplex import uniform

from oracles import (central_difference, logbarrier_prox_objective, logbarrier_step_d2,
                     quadratic_multiplier, simplex_grid_d2)


class TestGradient:
    def test_all_ones(self, rng):
        x = rng.dirichlet(np.ones(4))
        np.testing.assert_allclose(ops_gradient(x, np.ones(4)), -np.ones(4), atol=1e-15)

    def test_uniform_single_asset(self):
        np.testing.assert_allclose(ops_gradient(uniform(2), [1.0, 0.0]), [-2.0, 0.0])

    def test_finite_difference(self, rng):
        for _ in range(50):
            d = int(rng.integers(2, 8))
            x = 0.8 * rng.dirichlet(np.ones(d)) + 0.2 / d
            a = rng.uniform(0.1, 1.0, size=d)
            u = rng.normal(size=d)
            fd = central_difference(lambda z: -math.log(a @ z), x, u)
            assert ops_gradient(x, a) @ u == pytest.approx(fd, rel=1e-5, abs=1e-9)

    def test_zero_wealth(self):
        with pytest.raises(ValueError):
            ops_gradient([1.0, 0.0], [0.0, 1.0])

    def test_normalization(self):
        np.testing.assert_allclose(ops.normalize_price_relatives([2.0, 1.0, 0.5]), [1, 0.5, 0.25])
        for bad in ([0.0, 0.0], [-1.0, 1.0], [np.nan, 1.0]):
            with pytest.raises(ValueError):
                ops.normalize_price_relatives(bad)


class TestEg:
    def test_constant_market(self):
        s = EgState.initial(3, 0.2, 0.1)
        s2, loss = eg_round(s, np.ones(3))
        assert loss == 0.0
        np.testing.assert_allclose(s2.x_hat, s.x_hat, atol=1e-15)
        np.testing.assert_allclose(s2.x, s.x, atol=1e-15)

    def test_smoothed_ratio(self, rng):
        for _ in range(100):
            d = int(rng.integers(2, 10))
            gamma = rng.uniform(0.01, 0.99)
            a = rng.uniform(size=d)
            a[0] = 0.0
            a_hat = ops.smoothed_price_relatives(a, gamma)
            assert a_hat.max() / a_hat.min() <= d / gamma + 1e-12

    def test_two_round_trace(self):
        gamma, eta = 0.2, 0.1
        s = EgState.initial(2, gamma, eta)
        # round 1 by hand: a = (1, 0.5), a_hat = 0.9 a + 0.1 = (1, 0.55)
        s, loss1 = eg_round(s, np.array([1.0, 0.5]))
        assert loss1 == pytest.approx(-math.log(0.75))
        w = [0.5 * math.exp(eta * 1.0 / 0.775), 0.5 * math.exp(eta * 0.55 / 0.775)]
        xh1 = np.array(w) / sum(w)
        x1 = 0.8 * xh1 + 0.1
        np.testing.assert_allclose(s.x_hat, xh1, atol=1e-15)
        np.testing.assert_allclose(s.x, x1, atol=1e-15)
        # round 2: a = (0.5, 1), a_hat = (0.55, 1)
        s, loss2 = eg_round(s, np.array([0.5, 1.0]))
        assert loss2 == pytest.approx(-math.log(0.5 * x1[0] + x1[1]))
        denom = 0.55 * xh1[0] + xh1[1]
        w = [xh1[0] * math.exp(eta * 0.55 / denom), xh1[1] * math.exp(eta * 1.0 / denom)]
        xh2 = np.array(w) / sum(w)
        np.testing.assert_allclose(s.x_hat, xh2, atol=1e-15)
        np.testing.assert_allclose(s.x, 0.8 * xh2 + 0.1, atol=1e-15)

    def test_mixing_identity(self, rng):
        market = generate_market("iid-uniform", 6, 300, 3)
        gamma, eta = core.eg_schedule(300, 6)
        run = ops.run_eg(market, gamma, eta)
        mixed = (1 - gamma) * run.internal + gamma / 6
        assert np.max(np.abs(run.plays - mixed)) <= 1e-15
        assert run.plays.min() >= gamma / 6 * (1 - gamma)


class TestLbOmd:
    def test_constant_market(self, rng):
        x = 0.9 * rng.dirichlet(np.ones(4)) + 0.025
        nxt, loss, r = lbomd_round(x, np.ones(4), 0.3)
        np.testing.assert_allclose(nxt, x, atol=1e-12)
        assert loss == pytest.approx(0.0, abs=1e-15)
        assert r <= 1e-12

    def test_single_round_grid(self):
        x_t, a, eta = uniform(2), np.array([1.0, 0.3]), 0.4
        nxt, _, _ = lbomd_round(x_t, a, eta)
        g = ops_gradient(x_t, a)
        best, _ = simplex_grid_d2(lambda X: logbarrier_prox_objective(X, x_t, g, eta))
        assert np.max(np.abs(nxt - best)) <= 1e-3
        np.testing.assert_allclose(nxt, logbarrier_step_d2(x_t, g, eta), atol=1e-12)

    def test_step_bound(self):
        market = generate_market("adversarial-alternating", 5, 500, 1)
        eta = core.lb_schedule(500, 5)
        run = ops.run_lbomd(market, eta)
        assert max(run.log.steps) <= eta / (1 - eta) + 1e-8
        assert all(np.all(x > 0) for x in run.plays)


class TestLbFtrl:
    def test_first_iterate_uniform(self):
        run = ops.run_lbftrl(np.ones((3, 4)), 0.25)
        np.testing.assert_allclose(run.plays[0], uniform(4))

    def test_two_round_quadratic(self):
        eta = 0.25
        a1, a2 = np.array([1.0, 0.5]), np.array([0.3, 1.0])
        x1 = uniform(2)
        x2, loss1, cum = lbftrl_round(np.zeros(2), x1, a1, eta)
        assert loss1 == pytest.approx(-math.log(0.75))
        c = eta * -a1 / 0.75
        lam = quadratic_multiplier(*c)
        np.testing.assert_allclose(x2, 1 / (c + lam), atol=1e-12)
        x3, loss2, cum = lbftrl_round(cum, x2, a2, eta)
        assert loss2 == pytest.approx(-math.log(a2 @ x2))
        c = c + eta * -a2 / (a2 @ x2)
        lam = quadratic_multiplier(*c)
        np.testing.assert_allclose(x3, 1 / (c + lam), atol=1e-12)

    def test_dual_norm(self, rng):
        market = generate_market("iid-uniform", 5, 400, 2)
        run = ops.run_lbftrl(market, core.lbftrl_eta(400, 5))
        vals = [ops.dual_norm_sq(x, a) for a, x in zip(market, run.plays)]
        assert max(vals) <= 1 + 1e-10
        assert ops.dual_norm_sq(uniform(3), np.ones(3)) == pytest.approx(1 / 3)
        assert ops.dual_norm_sq(uniform(3), [1.0, 0.0, 0.0]) == pytest.approx(1.0)


class TestProperties:
    def test_relative_smoothness_entropy_psd(self, rng):
        for _ in range(200):
            d = int(rng.integers(2, 11))
            x = 0.9 * rng.dirichlet(np.ones(d)) + 0.1 / d
            a = rng.uniform(0.05, 1.0, size=d)
            G = ops.relative_smoothness_constant(a)
            H = G * np.diag(1 / x) - np.outer(a, a) / (a @ x) ** 2
            assert np.linalg.eigvalsh(H).min() >= -1e-10 * np.abs(H).max()

    @pytest.mark.parametrize("run", ["eg", "lb-omd", "lb-ftrl"])
    def test_wealth_identity(self, run):
        market = generate_market("iid-uniform", 4, 1000, 9)
        if run == "eg":
            r = ops.run_eg(market, *core.eg_schedule(1000, 4))
        elif run == "lb-omd":
            r = ops.run_lbomd(market, core.lb_schedule(1000, 4))
        else:
            r = ops.run_lbftrl(market, core.lbftrl_eta(1000, 4))
        w = ops.wealth(market, r.plays, w1=2.5)
        assert -math.log(w[-1] / w[0]) == pytest.approx(r.log.cumulative_loss[-1], abs=1e-8)

    def test_losses_charged_at_plays(self):
        market = generate_market("iid-uniform", 3, 50, 0)
        r = ops.run_lbomd(market, 0.3)
        expect = [ops_loss(x, a) for a, x in zip(market, r.plays)]
        np.testing.assert_allclose(r.log.losses, expect, rtol=0, atol=0)
