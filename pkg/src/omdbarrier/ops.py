"""Online portfolio selection learners.

Loss at round t is ``f_t(x) = -log <a_t, x>`` with price relatives ``a_t``
scaled so that ``max_i a_t(i) = 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import core
from .simplex import entropy_prox, lbftrl_leader, logbarrier_prox, uniform


def normalize_price_relatives(a) -> np.ndarray:
    """Scale ``a`` by its largest entry; rejects negative or all-zero input."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 1 or not np.all(np.isfinite(a)) or np.any(a < 0):
        raise ValueError("price relatives must be finite and nonnegative")
    top = a.max()
    if top <= 0:
        raise ValueError("all-zero price relatives")
    return a / top


def ops_loss(x, a) -> float:
    val = float(np.dot(a, x))
    if val <= 0:
        raise ValueError("<a, x> = 0: infinite loss")
    return -math.log(val)


def ops_gradient(x, a) -> np.ndarray:
    """Gradient ``-a / <a, x>`` of the log-loss."""
    a = np.asarray(a, dtype=float)
    val = float(np.dot(a, x))
    if val <= 0:
        raise ValueError("<a, x> = 0: gradient undefined")
    return -a / val


def local_step(x_t, x_next, a) -> float:
    """``||x_t - x_next||`` in the Hessian norm of the loss at ``x_t``."""
    return abs(float(np.dot(a, np.asarray(x_t) - np.asarray(x_next)))) / float(np.dot(a, x_t))


def dual_norm_sq(x, a) -> float:
    """Squared dual local norm of the loss gradient w.r.t. the log barrier at ``x``."""
    ax = np.asarray(a) * np.asarray(x)
    return float(np.dot(ax, ax) / ax.sum() ** 2)


def relative_smoothness_constant(a) -> float:
    """``max_i a(i) / min_j a(j)``: smoothness of the loss relative to entropy."""
    a = np.asarray(a, dtype=float)
    lo = a.min()
    return math.inf if lo <= 0 else float(a.max() / lo)


@dataclass
class EgState:
    x: np.ndarray
    x_hat: np.ndarray
    gamma: float
    eta: float

    @classmethod
    def initial(cls, d: int, gamma: float, eta: float) -> "EgState":
        if not 0 < gamma < 1:
            raise ValueError("gamma must lie in (0, 1)")
        return cls(uniform(d), uniform(d), gamma, eta)


def smoothed_price_relatives(a, gamma: float) -> np.ndarray:
    d = np.shape(a)[-1]
    return (1 - gamma / d) * np.asarray(a, dtype=float) + gamma / d


def eg_round(state: EgState, a_t) -> tuple[EgState, float]:
    """One round of exponentiated gradient with uniform mixing.

    The loss is charged at the mixed point ``x``; the multiplicative step
    runs on the internal point against the smoothed price relatives.
    """
    loss = ops_loss(state.x, a_t)
    d = state.x.size
    a_hat = smoothed_price_relatives(a_t, state.gamma)
    x_hat = entropy_prox(state.x_hat, ops_gradient(state.x_hat, a_hat), state.eta)
    x = (1 - state.gamma) * x_hat + state.gamma / d
    return EgState(x, x_hat, state.gamma, state.eta), loss


def lbomd_round(x_t, a_t, eta: float) -> tuple[np.ndarray, float, float]:
    """One LB-OMD round: returns ``(x_next, loss, r_t)``."""
    loss = ops_loss(x_t, a_t)
    x_next, _ = logbarrier_prox(x_t, ops_gradient(x_t, a_t), eta)
    return x_next, loss, local_step(x_t, x_next, a_t)


def lbftrl_round(cum_grad, x_t, a_t, eta: float) -> tuple[np.ndarray, float, np.ndarray]:
    """One round of FTRL with the log barrier on linearized losses."""
    loss = ops_loss(x_t, a_t)
    cum_grad = np.asarray(cum_grad, dtype=float) + ops_gradient(x_t, a_t)
    x_next, _ = lbftrl_leader(cum_grad, eta)
    return x_next, loss, cum_grad


@dataclass
class OpsRun:
    """Trajectory of an OPS learner.

    ``plays[t]`` is the point charged at round t; ``plays`` has ``T + 1``
    rows, the last being the point that would be played next.  For the EG
    learner ``internal`` holds the internal points and ``internal_losses``
    the smoothed losses ``-log <a_hat_t, x_hat_t>``.
    """

    log: core.ExperimentLog
    plays: np.ndarray
    eta: float
    gamma: float | None = None
    internal: np.ndarray | None = None


def run_eg(market, gamma: float, eta: float, kahan: bool = False) -> OpsRun:
    market = np.asarray(market, dtype=float)
    T, d = market.shape
    state = EgState.initial(d, gamma, eta)
    log = core.ExperimentLog(kahan=kahan)
    plays = [state.x]
    internal = [state.x_hat]
    for a in market:
        prev_hat = state.x_hat
        state, loss = eg_round(state, a)
        a_hat = smoothed_price_relatives(a, gamma)
        log.record(loss, local_step(prev_hat, state.x_hat, a_hat))
        plays.append(state.x)
        internal.append(state.x_hat)
    return OpsRun(log, np.array(plays), eta, gamma, np.array(internal))


def run_lbomd(market, eta: float, kahan: bool = False) -> OpsRun:
    market = np.asarray(market, dtype=float)
    T, d = market.shape
    x = uniform(d)
    log = core.ExperimentLog(kahan=kahan)
    plays = [x]
    for a in market:
        x, loss, r = lbomd_round(x, a, eta)
        log.record(loss, r)
        plays.append(x)
    return OpsRun(log, np.array(plays), eta)


def run_lbftrl(market, eta: float, kahan: bool = False) -> OpsRun:
    market = np.asarray(market, dtype=float)
    T, d = market.shape
    x = uniform(d)
    cum = np.zeros(d)
    log = core.ExperimentLog(kahan=kahan)
    plays = [x]
    for a in market:
        x_next, loss, cum = lbftrl_round(cum, x, a, eta)
        log.record(loss)
        x = x_next
        plays.append(x)
    return OpsRun(log, np.array(plays), eta)


def wealth(market, plays, w1: float = 1.0) -> np.ndarray:
    """Wealth ``w_1, ..., w_{T+1}`` from rebalancing to ``plays[t]`` each round."""
    market = np.asarray(market, dtype=float)
    growth = np.einsum("ti,ti->t", market, np.asarray(plays)[: len(market)])
    return w1 * np.concatenate([[1.0], np.cumprod(growth)])
