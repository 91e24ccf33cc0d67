"""Online mirror descent engine, learning-rate schedules and regret accounting."""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field, replace

import numpy as np


class ProxError(RuntimeError):
    """Raised when a prox/projection solver fails to converge."""


class ScheduleError(ValueError):
    """Raised when a learning-rate schedule is used outside its valid range."""


class MirrorMap(ABC):
    """Legendre function ``h`` together with its prox-step solver.

    Subclasses work on vectors (simplex) or Hermitian matrices (density
    matrices); inner products are real parts of Frobenius products.
    """

    @abstractmethod
    def contains(self, x) -> bool:
        """Interior membership test for the decision set."""

    @abstractmethod
    def value(self, x) -> float:
        ...

    @abstractmethod
    def grad(self, x):
        ...

    def divergence(self, x, y) -> float:
        """Bregman divergence ``h(x) - h(y) - <grad h(y), x - y>``."""
        gy = self.grad(y)
        diff = np.asarray(x) - np.asarray(y)
        return float(self.value(x) - self.value(y) - np.real(np.vdot(gy, diff)))

    @abstractmethod
    def prox(self, x_t, g, eta: float):
        """``argmin_x eta <g, x - x_t> + D_h(x, x_t)`` over the decision set."""


@dataclass
class OmdState:
    iterate: np.ndarray
    eta: float
    t: int = 1

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError("learning rate must be positive")


def omd_round(state: OmdState, mirror: MirrorMap, loss_gradient) -> OmdState:
    """One mirror-descent step from ``state.iterate`` along ``loss_gradient``."""
    g = np.asarray(loss_gradient)
    if not np.all(np.isfinite(g)):
        raise ValueError("loss gradient contains non-finite entries")
    nxt = mirror.prox(state.iterate, g, state.eta)
    return replace(state, iterate=nxt, t=state.t + 1)


def omd_regret_bound(divergence_at_start: float, L: float, eta: float, T: int) -> float:
    """Regret bound ``D/eta + T L eta / (1 - L eta)`` for ``0 < eta < 1/L``."""
    if not (0.0 < eta and L * eta < 1.0):
        raise ScheduleError(f"need 0 < eta < 1/L, got eta={eta}, L={L}")
    if T < 1 or divergence_at_start < 0:
        raise ValueError("need T >= 1 and a nonnegative divergence")
    return divergence_at_start / eta + T * L * eta / (1.0 - L * eta)


def eg_schedule(T: int, d: int, variant: str = "log-d") -> tuple[float, float]:
    """Mixing weight and learning rate for the clipped EG learner.

    ``variant="log-d"`` uses ``sqrt(log d)`` in the numerator of eta (the
    value that minimizes the bound derived for the algorithm);
    ``variant="sqrt-d"`` uses ``sqrt(d)`` instead.
    """
    if d < 2:
        raise ScheduleError("need d >= 2")
    logd = math.log(d)
    if not T > 4 * d / logd:
        raise ScheduleError(f"need T > 4d/log d = {4 * d / logd:.3f}, got T={T}")
    gamma = 2 ** (2 / 3) * d ** (1 / 3) / (T * logd) ** (1 / 3)
    if variant == "log-d":
        num = math.sqrt(logd)
    elif variant == "sqrt-d":
        num = math.sqrt(d)
    else:
        raise ValueError(f"unknown EG schedule variant {variant!r}")
    eta = gamma * num / (math.sqrt(T * d * gamma) + d * math.sqrt(logd))
    return gamma, eta


def lb_schedule(T: int, d: int) -> float:
    """``sqrt(d log T) / (sqrt(T) + sqrt(d log T))``, valid for ``T > d >= 2``."""
    if d < 2 or not T > d:
        raise ScheduleError(f"need T > d >= 2, got T={T}, d={d}")
    s = math.sqrt(d * math.log(T))
    return s / (math.sqrt(T) + s)


def lbftrl_eta(T: int, d: int) -> float:
    """``min(1/4, sqrt(d log T / (2T)))``, the minimizer of the FTRL bound capped at 1/4."""
    if d < 1 or T < 2:
        raise ScheduleError("need d >= 1 and T >= 2")
    return min(0.25, math.sqrt(d * math.log(T) / (2 * T)))


def eg_regret_bound(T: int, d: int) -> float:
    logd = math.log(d)
    return (2 ** (5 / 3) * T ** (2 / 3) * d ** (1 / 3) * logd ** (2 / 3)
            + 2 ** (-2 / 3) * T ** (1 / 3) * d ** (2 / 3) * logd ** (4 / 3))


def lb_regret_bound(T: int, d: int) -> float:
    logT = math.log(T)
    return 2 * math.sqrt(T * d * logT) + d * logT + 2


def lbftrl_regret_bound(T: int, d: int, eta: float) -> float:
    if not 0 < eta <= 0.25:
        raise ScheduleError("LB-FTRL bound requires 0 < eta <= 1/4")
    return d * math.log(T) / eta + 2 * eta * T + 2


def accumulate(values, kahan: bool = False) -> np.ndarray:
    """Running sums in ascending order, optionally with compensated summation."""
    values = np.asarray(values, dtype=float)
    if not kahan:
        return np.cumsum(values)
    out = np.empty_like(values)
    total = 0.0
    comp = 0.0
    for i, v in enumerate(values):
        y = v - comp
        s = total + y
        comp = (s - total) - y
        total = s
        out[i] = total
    return out


@dataclass
class ExperimentLog:
    """Per-round record of an online run."""

    losses: list = field(default_factory=list)
    steps: list = field(default_factory=list)
    comparator_losses: list | None = None
    comparator_value: float | None = None
    kahan: bool = False

    def record(self, loss: float, r_t: float | None = None) -> None:
        self.losses.append(float(loss))
        self.steps.append(np.nan if r_t is None else float(r_t))

    @property
    def T(self) -> int:
        return len(self.losses)

    @property
    def cumulative_loss(self) -> np.ndarray:
        return accumulate(self.losses, self.kahan)

    def set_comparator(self, per_round_losses) -> None:
        per_round_losses = np.asarray(per_round_losses, dtype=float)
        if per_round_losses.shape != (self.T,):
            raise ValueError("comparator losses must have one entry per round")
        self.comparator_losses = per_round_losses
        self.comparator_value = float(accumulate(per_round_losses, self.kahan)[-1]) if self.T else 0.0

    @property
    def regret(self) -> np.ndarray:
        if self.comparator_losses is None:
            raise ValueError("comparator losses not set")
        return regret_trace(self, self.comparator_losses)


def regret_trace(log: ExperimentLog, comparator_losses) -> np.ndarray:
    """Learner's cumulative loss minus the comparator's, round by round."""
    cmp = np.asarray(comparator_losses, dtype=float)
    if cmp.shape != (log.T,):
        raise ValueError(f"length mismatch: {cmp.shape[0] if cmp.ndim else 0} comparator "
                         f"losses for {log.T} rounds")
    return log.cumulative_loss - accumulate(cmp, log.kahan)
