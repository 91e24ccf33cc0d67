"""Numerical checks of the structural inequalities behind the regret bounds.

Every check reduces a family of samples to a signed worst violation: the
largest value of ``lhs - rhs`` for an inequality ``lhs <= rhs`` (optionally
scaled, see each check).  A report passes when the worst violation does
not exceed its tolerance.  Adversarial variants run the same checks with a
constant halved; they are expected to fail.

Derivatives of the losses are analytic.  Along a direction ``u`` at ``x``,
with ``r = <a, u> / <a, x>`` (or ``tr(A u) / tr(A x)``),

    Df = -r,   D2f = r**2,   D3f = -2 r**3.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Callable, Iterable

import numpy as np

from . import core, ops, quantum
from .comparator import best_crp, best_fixed_state, comparator_losses
from .data import generate_market, generate_quantum_stream
from .quantum import hermitian, inner
from .simplex import EntropyMap, LogBarrierMap


@dataclass
class CheckReport:
    name: str
    samples: int
    worst_violation: float
    tolerance: float
    expect_fail: bool = False

    @property
    def passed(self) -> bool:
        return bool(self.worst_violation <= self.tolerance)

    @property
    def ok(self) -> bool:
        """Outcome matches expectation (adversarial checks must fail)."""
        return self.passed != self.expect_fail

    def to_json(self) -> str:
        out = asdict(self)
        out["passed"] = self.passed
        out["ok"] = self.ok
        return json.dumps(out)


def _report(name, violations, tol, expect_fail=False) -> CheckReport:
    v = np.asarray(list(violations), dtype=float)
    worst = float(v.max()) if v.size else -math.inf
    return CheckReport(name, int(v.size), worst, tol, expect_fail)


def _rel(lhs, rhs):
    scale = max(abs(lhs), abs(rhs))
    return 0.0 if scale == 0 else (lhs - rhs) / scale


# --------------------------------------------------------------------- losses

class OpsLoss:
    """``f(x) = -log <a, x>`` on the positive orthant."""

    def __init__(self, a):
        self.a = np.asarray(a, dtype=float)

    def ratio(self, x, u) -> float:
        return float(np.dot(self.a, u) / np.dot(self.a, x))

    def value(self, x) -> float:
        return -math.log(float(np.dot(self.a, x)))

    def grad(self, x):
        return -self.a / np.dot(self.a, x)

    def inner(self, u, v) -> float:
        return float(np.dot(u, v))


class QuantumLoss:
    """``f(rho) = -log tr(A rho)`` on Hermitian matrices."""

    def __init__(self, A):
        self.A = hermitian(A)

    def ratio(self, rho, sigma) -> float:
        return inner(self.A, sigma) / inner(self.A, rho)

    def value(self, rho) -> float:
        return -math.log(inner(self.A, rho))

    def grad(self, rho):
        return -self.A / inner(self.A, rho)

    def inner(self, u, v) -> float:
        return inner(u, v)


def derivatives(loss, x, u) -> tuple[float, float, float]:
    r = loss.ratio(x, u)
    return -r, r * r, -2.0 * r ** 3


def local_norm(loss, x, u) -> float:
    return abs(loss.ratio(x, u))


# ---------------------------------------------------------------- the checks

def check_relative_smoothness_gradient(cases, L, grad_h: Callable, tol: float = 1e-8,
                                       name: str = "relative_smoothness_gradient",
                                       expect_fail: bool = False) -> CheckReport:
    """``<grad f(y) - grad f(x), y - x> <= L <grad h(y) - grad h(x), y - x>``.

    ``cases`` yields ``(loss, x, y)``; ``L`` is a number or a function of the
    loss (e.g. the max/min price-relative ratio for entropy).
    """
    def viol(loss, x, y):
        Lc = L(loss) if callable(L) else L
        diff = y - x
        lhs = loss.inner(loss.grad(y) - loss.grad(x), diff)
        rhs = Lc * loss.inner(grad_h(y) - grad_h(x), diff)
        return lhs - rhs

    return _report(name, (viol(*c) for c in cases), tol, expect_fail)


def check_relative_smoothness_hessian(cases, L, hess_h: Callable, tol: float = 1e-8,
                                      name: str = "relative_smoothness_hessian",
                                      expect_fail: bool = False) -> CheckReport:
    """``D2f(x)[u, u] <= L D2h(x)[u, u]``; ``hess_h(x, u)`` returns the quadratic form."""
    def viol(loss, x, u):
        Lc = L(loss) if callable(L) else L
        return derivatives(loss, x, u)[1] - Lc * hess_h(x, u)

    return _report(name, (viol(*c) for c in cases), tol, expect_fail)


def check_self_concordance(cases, M: float = 1.0, tol: float = 1e-8,
                           name: str = "self_concordance",
                           expect_fail: bool = False) -> CheckReport:
    """``|D3f[u,u,u]| <= 2 M (D2f[u,u])^{3/2}``, violation relative to the larger side."""
    def viol(loss, x, u):
        _, d2, d3 = derivatives(loss, x, u)
        return _rel(abs(d3), 2.0 * M * d2 ** 1.5)

    return _report(name, (viol(*c) for c in cases), tol, expect_fail)


def check_barrier(cases, nu: float = 1.0, tol: float = 1e-10, name: str = "barrier",
                  expect_fail: bool = False) -> CheckReport:
    """``(Df[u])^2 <= nu D2f[u,u]``, violation relative to the larger side."""
    def viol(loss, x, u):
        d1, d2, _ = derivatives(loss, x, u)
        return _rel(d1 * d1, nu * d2)

    return _report(name, (viol(*c) for c in cases), tol, expect_fail)


def check_self_concordance_monotonicity(cases, M: float = 1.0, tol: float = 1e-8,
                                        name: str = "self_concordance_monotonicity",
                                        expect_fail: bool = False) -> CheckReport:
    """``<grad f(y) - grad f(x), y - x> >= n^2 / (1 + M n)``, ``n = ||y - x||_x``.

    The violation is scaled by ``max(1, lhs)`` since both sides blow up as
    ``y`` approaches the boundary of the domain.
    """
    def viol(loss, x, y):
        diff = y - x
        n = local_norm(loss, x, diff)
        lhs = loss.inner(loss.grad(y) - loss.grad(x), diff)
        rhs = n * n / (1.0 + M * n)
        return (rhs - lhs) / max(1.0, abs(lhs))

    return _report(name, (viol(*c) for c in cases), tol, expect_fail)


def check_stepsize_lemma(steps, L: float, eta: float, tol: float = 1e-8,
                         scale: float = 1.0, name: str = "stepsize_lemma",
                         expect_fail: bool = False) -> CheckReport:
    """``r_t <= scale * L eta / (1 - L eta)`` on every recorded round."""
    if not L * eta < 1:
        raise ValueError("need L * eta < 1")
    bound = scale * L * eta / (1 - L * eta)
    r = np.asarray(steps, dtype=float)
    return _report(name, r[np.isfinite(r)] - bound, tol, expect_fail)


def check_dual_norm_bound(market, plays, tol: float = 1e-10, bound: float = 1.0,
                          name: str = "dual_norm_bound", expect_fail: bool = False) -> CheckReport:
    """``sum_i a(i)^2 x(i)^2 / <a, x>^2 <= bound`` at every played point."""
    vals = [ops.dual_norm_sq(x, a) - bound for a, x in zip(market, plays)]
    return _report(name, vals, tol, expect_fail)


def check_lookahead_regret(lookahead_losses, comparator_round_losses, divergence: float,
                           eta: float, tol: float = 1e-6, scale: float = 1.0,
                           name: str = "lookahead_regret",
                           expect_fail: bool = False) -> CheckReport:
    """``sum f_t(x_{t+1}) - sum f_t(x) <= scale * D_h(x, x_1) / eta``.

    Checked on every prefix of the run, so ``samples`` equals ``T``.
    """
    ahead = np.cumsum(np.asarray(lookahead_losses, dtype=float))
    cmp = np.cumsum(np.asarray(comparator_round_losses, dtype=float))
    return _report(name, ahead - cmp - scale * divergence / eta, tol, expect_fail)


# ------------------------------------------------------------------ sampling

def sample_simplex_interior(rng, d: int) -> np.ndarray:
    """Dirichlet(1, ..., 1) mixed 10% toward the uniform point."""
    return 0.9 * rng.dirichlet(np.ones(d)) + 0.1 / d


def sample_density_interior(rng, d: int) -> np.ndarray:
    """Normalized complex Wishart ``G G^H``, mixed 10% toward ``I/d``."""
    G = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    W = G @ G.conj().T
    return hermitian(0.9 * W / np.trace(W).real + 0.1 * np.eye(d) / d)


def sample_price_relatives(rng, d: int) -> np.ndarray:
    a = rng.uniform(0.0, 1.0, size=d)
    a[rng.integers(d)] = 1.0
    return a


def sample_observable(rng, d: int) -> np.ndarray:
    k = int(rng.integers(1, d + 1))
    G = rng.standard_normal((d, k)) + 1j * rng.standard_normal((d, k))
    return quantum.normalize_observable(G @ G.conj().T)


def sample_hermitian(rng, d: int, traceless: bool = False) -> np.ndarray:
    S = hermitian(rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d)))
    if traceless:
        S = S - np.trace(S).real / d * np.eye(d)
    return S


def _grad_entropy(x):
    return np.log(x)


def _grad_logbarrier(x):
    return -1.0 / x


def _grad_logdet(rho):
    return -quantum.inverse_pd(rho)


def _hess_logbarrier(x, u):
    return float(np.sum((u / x) ** 2))


def _hess_entropy(x, u):
    return float(np.sum(u * u / x))


def _hess_logdet(rho, sigma):
    S = sigma @ quantum.inverse_pd(rho)
    return float(np.real(np.trace(S @ S)))


# --------------------------------------------------------------------- suite

def _ops_pairs(rng, n, dims=(2, 3, 5, 10)):
    for _ in range(n):
        d = int(rng.choice(dims))
        yield OpsLoss(sample_price_relatives(rng, d)), sample_simplex_interior(rng, d), \
            sample_simplex_interior(rng, d)


def _ops_directions(rng, n, dims=(2, 3, 5, 10)):
    for _ in range(n):
        d = int(rng.choice(dims))
        yield OpsLoss(sample_price_relatives(rng, d)), sample_simplex_interior(rng, d), \
            rng.standard_normal(d)


def _q_pairs(rng, n, dims=(2, 3, 4)):
    for _ in range(n):
        d = int(rng.choice(dims))
        yield QuantumLoss(sample_observable(rng, d)), sample_density_interior(rng, d), \
            sample_density_interior(rng, d)


def _q_directions(rng, n, dims=(2, 3, 4), traceless=False):
    for _ in range(n):
        d = int(rng.choice(dims))
        yield QuantumLoss(sample_observable(rng, d)), sample_density_interior(rng, d), \
            sample_hermitian(rng, d, traceless)


def _boundary_pairs(rng, n, quantum_case=False):
    """Observable concentrated on one coordinate, iterate nearly vanishing there.

    Here the relative-smoothness constant 1 w.r.t. the log barrier / log det
    is attained in the limit, so halving it must produce violations.
    """
    for _ in range(n):
        d = int(rng.integers(2, 5))
        x = sample_simplex_interior(rng, d)
        x[0] = 10.0 ** rng.uniform(-4, -2)
        x /= x.sum()
        delta = x[0] * rng.uniform(0.01, 0.5)
        y = x.copy()
        y[0] += delta
        y[1] -= delta
        a = np.zeros(d)
        a[0] = 1.0
        if quantum_case:
            U = np.linalg.qr(rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d)))[0]
            rot = lambda v: hermitian((U * v) @ U.conj().T)
            yield QuantumLoss(rot(a)), rot(x), rot(y)
        else:
            yield OpsLoss(a), x, y


def _entropy_witness_pairs(rng, n):
    """``a = (1, eps)`` with ``eps`` on a grid; ``y = (1 + s) x`` leaves the simplex.

    Along the scaling direction ``D2f = D2h = 1`` (entropy), so the constant
    ``G = 1/eps`` is nearly tight for ``eps`` close to 1 and ``G/2`` fails.
    Along simplex-tangent directions the sharp constant is at most ``G/4``.
    """
    grid = np.linspace(0.05, 0.95, 19)
    for k in range(n):
        eps = grid[k % grid.size]
        x = sample_simplex_interior(rng, 2)
        y = x * (1.0 + rng.uniform(0.05, 0.5)) + 1e-3 * rng.uniform(0.0, 1.0, size=2)
        yield OpsLoss(np.array([1.0, eps])), x, y


def _lookahead_ops(market, plays):
    return -np.log(np.einsum("ti,ti->t", market, plays[1: len(market) + 1]))


def _lookahead_q(observables, plays):
    return -np.log(np.real(np.einsum("tij,tji->t", observables, plays[1: len(observables) + 1])))


def run_lemma_suite(seed: int = 0, samples: int = 1000) -> list[CheckReport]:
    """All function-class and run-level checks, with their adversarial twins."""
    rng = np.random.default_rng(seed)
    n = samples
    G = lambda loss: ops.relative_smoothness_constant(loss.a)
    reports = []
    add = reports.append

    # relative smoothness, gradient form (pairs on the decision set)
    add(check_relative_smoothness_gradient(list(_ops_pairs(rng, n)), 1.0, _grad_logbarrier,
                                           name="relsmooth_grad/ops-logbarrier"))
    add(check_relative_smoothness_gradient(list(_ops_pairs(rng, n)), G, _grad_entropy,
                                           name="relsmooth_grad/ops-entropy"))
    add(check_relative_smoothness_gradient(list(_q_pairs(rng, n)), 1.0, _grad_logdet,
                                           name="relsmooth_grad/quantum-logdet"))
    add(check_relative_smoothness_gradient(list(_boundary_pairs(rng, n)), 0.5, _grad_logbarrier,
                                           name="relsmooth_grad/ops-logbarrier-L/2",
                                           expect_fail=True))
    add(check_relative_smoothness_gradient(list(_boundary_pairs(rng, n, True)), 0.5, _grad_logdet,
                                           name="relsmooth_grad/quantum-logdet-L/2",
                                           expect_fail=True))
    witness = list(_entropy_witness_pairs(rng, n))
    add(check_relative_smoothness_gradient(witness, G, _grad_entropy,
                                           name="relsmooth_grad/ops-entropy-offsimplex"))
    add(check_relative_smoothness_gradient(witness, lambda loss: G(loss) / 2, _grad_entropy,
                                           name="relsmooth_grad/ops-entropy-G/2",
                                           expect_fail=True))

    # relative smoothness, Hessian form
    add(check_relative_smoothness_hessian(list(_q_directions(rng, n, traceless=True)), 1.0,
                                          _hess_logdet, name="relsmooth_hess/quantum-logdet"))
    add(check_relative_smoothness_hessian(list(_ops_directions(rng, n)), G, _hess_entropy,
                                          name="relsmooth_hess/ops-entropy"))
    add(check_relative_smoothness_hessian(list(_ops_directions(rng, n)), 1.0, _hess_logbarrier,
                                          name="relsmooth_hess/ops-logbarrier"))

    # self-concordance and barrier parameter
    for label, cases in (("ops", list(_ops_directions(rng, n))),
                         ("quantum", list(_q_directions(rng, n)))):
        add(check_self_concordance(cases, name=f"self_concordance/{label}"))
        add(check_self_concordance(cases, M=0.5, name=f"self_concordance/{label}-M/2",
                                   expect_fail=True))
        add(check_barrier(cases, name=f"barrier/{label}"))
        add(check_barrier(cases, nu=0.5, name=f"barrier/{label}-nu/2", expect_fail=True))

    for label, cases in (("ops", list(_ops_pairs(rng, n))), ("quantum", list(_q_pairs(rng, n)))):
        add(check_self_concordance_monotonicity(cases, name=f"sc_monotonicity/{label}"))
        add(check_self_concordance_monotonicity(cases, M=0.5, name=f"sc_monotonicity/{label}-M/2",
                                                expect_fail=True))

    reports.extend(run_level_checks(seed, T=max(n, 1000)))
    return reports


def run_level_checks(seed: int = 0, T: int = 1000) -> list[CheckReport]:
    """Step-size, dual-norm and look-ahead checks on recorded runs."""
    reports = []
    add = reports.append
    d = 5
    market = generate_market("iid-uniform", d, T, seed)
    eta = core.lb_schedule(T, d)
    run = ops.run_lbomd(market, eta)
    add(check_stepsize_lemma(run.log.steps, 1.0, eta, name="stepsize/lb-omd"))

    # a one-hot market on a large simplex drives r_t to its bound
    hard = np.zeros((T, 50))
    hard[np.arange(T), np.arange(T) % 50] = 1.0
    hard_run = ops.run_lbomd(hard, 0.5)
    add(check_stepsize_lemma(hard_run.log.steps, 1.0, 0.5, name="stepsize/lb-omd-onehot"))
    add(check_stepsize_lemma(hard_run.log.steps, 1.0, 0.5, scale=0.5,
                             name="stepsize/lb-omd-onehot-bound/2", expect_fail=True))

    qs = generate_quantum_stream(3, T, seed)
    q_eta = core.lb_schedule(T, 3)
    qrun = quantum.run_qlbomd(qs.observables, q_eta)
    add(check_stepsize_lemma(qrun.log.steps, 1.0, q_eta, name="stepsize/q-lb-omd"))

    gamma, eg_eta = core.eg_schedule(max(T, 100), d)
    eg = ops.run_eg(market, gamma, eg_eta)
    add(check_stepsize_lemma(eg.log.steps, d / gamma, eg_eta, name="stepsize/eg-internal"))

    ftrl_eta = core.lbftrl_eta(T, d)
    ftrl = ops.run_lbftrl(market, ftrl_eta)
    add(check_dual_norm_bound(market, ftrl.plays, name="dual_norm/lb-ftrl"))
    onehot = np.eye(d)[np.arange(T) % d]
    ftrl_hot = ops.run_lbftrl(onehot, ftrl_eta)
    add(check_dual_norm_bound(onehot, ftrl_hot.plays, bound=0.5,
                              name="dual_norm/lb-ftrl-onehot-bound/2", expect_fail=True))

    # look-ahead regret against the (clipped) best fixed action
    cmp = best_crp(market)
    x_bar = quantum.clipped_point(cmp.point, T)
    D = LogBarrierMap().divergence(x_bar, run.plays[0])
    add(check_lookahead_regret(_lookahead_ops(market, run.plays), comparator_losses(x_bar, market),
                               D, eta, name="lookahead/lb-omd"))

    qcmp = best_fixed_state(qs.observables)
    rho_bar = quantum.clipped_comparator(qcmp.point, T)
    Dq = quantum.logdet_divergence(rho_bar, qrun.plays[0])
    add(check_lookahead_regret(_lookahead_q(qs.observables, qrun.plays),
                               comparator_losses(rho_bar, qs.observables), Dq, q_eta,
                               name="lookahead/q-lb-omd"))

    a_hat = ops.smoothed_price_relatives(market, gamma)
    cmp_hat = best_crp(a_hat)
    D_eg = EntropyMap().divergence(cmp_hat.point, eg.internal[0])
    add(check_lookahead_regret(_lookahead_ops(a_hat, eg.internal), comparator_losses(cmp_hat.point, a_hat),
                               D_eg, eg_eta, name="lookahead/eg-internal"))

    adv_market, adv_gamma, adv_eta = lookahead_witness()
    adv = ops.run_eg(adv_market, adv_gamma, adv_eta)
    a_adv = ops.smoothed_price_relatives(adv_market, adv_gamma)
    x_star = np.eye(adv_market.shape[1])[0]
    D_adv = EntropyMap().divergence(x_star, adv.internal[0])
    args = (_lookahead_ops(a_adv, adv.internal), comparator_losses(x_star, a_adv), D_adv, adv_eta)
    add(check_lookahead_regret(*args, name="lookahead/eg-witness"))
    add(check_lookahead_regret(*args, scale=0.5, name="lookahead/eg-witness-bound/2",
                               expect_fail=True))
    return reports


def lookahead_witness(d: int = 50, T: int = 5000, kappa: float = 0.01):
    """Market on which the look-ahead regret nearly reaches ``D_h(x*, x_1) / eta``.

    With ``a_t = (1, 1 - kappa, ..., 1 - kappa)`` the log-loss is almost the
    linear loss ``kappa (1 - x(1))``, for which the entropic mirror step
    attains the divergence term up to ``O(kappa)``.  Returns
    ``(market, gamma, eta)``; ``eta`` sits below the inverse
    relative-smoothness constant of the smoothed losses.
    """
    market = np.full((T, d), 1.0 - kappa)
    market[:, 0] = 1.0
    gamma = 0.01
    a_hat = ops.smoothed_price_relatives(market[0], gamma)
    eta = 0.5 / ops.relative_smoothness_constant(a_hat)
    return market, gamma, eta


def dump(reports: Iterable[CheckReport], fh) -> None:
    for r in reports:
        fh.write(r.to_json() + "\n")
