"""Mirror maps on the probability simplex.

Two geometries are provided:

* negative Shannon entropy, whose prox step is the multiplicative
  (exponentiated-gradient) update;
* the logarithmic barrier ``h(x) = -sum(log x)``, whose prox step reduces to
  a scalar equation in the simplex multiplier, solved by safeguarded Newton.

The same scalar solver backs the FTRL leader with the log-barrier
regularizer and the log-det prox in :mod:`omdbarrier.quantum`.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .core import MirrorMap, ProxError

logger = logging.getLogger(__name__)

SUM_TOL = 1e-12
MAX_NEWTON_ITER = 200
CONDITIONING_WARN = 1e6


@dataclass(frozen=True)
class NewtonSolveReport:
    """Diagnostics of a scalar multiplier solve."""

    multiplier: float
    iterations: int
    residual: float


def _as_interior(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 1:
        raise ValueError("simplex point must be a non-empty vector")
    if not np.all(np.isfinite(x)) or np.any(x <= 0.0):
        raise ValueError("simplex point must be finite and strictly positive")
    return x


def _check_finite(g: np.ndarray, name: str = "gradient") -> np.ndarray:
    g = np.asarray(g, dtype=float)
    if not np.all(np.isfinite(g)):
        raise ValueError(f"{name} contains non-finite entries")
    return g


def is_simplex_point(x, tol: float = 1e-9, interior: bool = False) -> bool:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or not np.all(np.isfinite(x)):
        return False
    if interior and np.any(x <= 0.0):
        return False
    return bool(np.all(x >= 0.0) and abs(x.sum() - 1.0) <= tol)


def uniform(d: int) -> np.ndarray:
    return np.full(d, 1.0 / d)


def solve_multiplier(c: np.ndarray, max_iter: int = MAX_NEWTON_ITER,
                     tol: float = SUM_TOL) -> tuple[np.ndarray, NewtonSolveReport]:
    """Find ``lam`` with ``sum_i 1/(c_i + lam) = 1`` and all ``c_i + lam > 0``.

    ``phi(lam) = sum 1/(c_i + lam) - 1`` is strictly decreasing and convex on
    ``lam > -min(c)``, and its root lies in ``[1 - min(c), d - min(c)]``.
    Newton started at the left end of that bracket (where ``phi >= 0``)
    increases monotonically to the root; a bisection step is taken whenever
    a Newton step would leave the bracket, which only happens through
    rounding.

    Returns
    -------
    x : ndarray
        ``1 / (c + lam)``.
    report : NewtonSolveReport
    """
    c = _check_finite(c, "shifted dual vector")
    d = c.size
    cmin = c.min()
    if np.ptp(c) > CONDITIONING_WARN:
        logger.warning("ill-conditioned multiplier equation: spread %.3e", np.ptp(c))
    # shift so the smallest denominator is the unknown; avoids cancellation
    # when |c| is large relative to the root
    s = c - cmin
    lo, hi = 1.0, float(d)
    u = lo
    resid = np.inf
    for it in range(1, max_iter + 1):
        den = s + u
        inv = 1.0 / den
        phi = inv.sum() - 1.0
        resid = abs(phi)
        if resid <= tol:
            break
        if phi > 0.0:
            lo = max(lo, u)
        else:
            hi = min(hi, u)
        step = phi / np.dot(inv, inv)
        u_new = u + step
        if not (lo < u_new < hi) or u_new == u:
            if u_new == u:
                break
            u_new = 0.5 * (lo + hi)
        u = u_new
    else:
        raise ProxError(f"multiplier solve did not converge in {max_iter} iterations "
                        f"(residual {resid:.3e})")
    x = 1.0 / (s + u)
    resid = abs(x.sum() - 1.0)
    if resid > tol:
        raise ProxError(f"multiplier solve stalled at residual {resid:.3e}")
    return x, NewtonSolveReport(multiplier=float(u - cmin), iterations=it, residual=float(resid))


def entropy_prox(x_t, g, eta: float) -> np.ndarray:
    """Exponentiated-gradient step ``x(i) ~ x_t(i) exp(-eta g(i))``."""
    x_t = _as_interior(x_t)
    g = _check_finite(g)
    z = np.log(x_t) - eta * g
    z -= z.max()
    w = np.exp(z)
    return w / w.sum()


def logbarrier_prox(x_t, g, eta: float) -> tuple[np.ndarray, NewtonSolveReport]:
    """Mirror step of the logarithmic barrier on the simplex.

    Solves ``argmin_{x in simplex} eta <g, x> + D_h(x, x_t)`` with
    ``h = -sum(log x)``; the minimizer is ``x(i) = 1 / (1/x_t(i) + eta g(i) + lam)``.
    """
    x_t = _as_interior(x_t)
    g = _check_finite(g)
    return solve_multiplier(1.0 / x_t + eta * g)


def lbftrl_leader(cum_grad, eta: float) -> tuple[np.ndarray, NewtonSolveReport]:
    """``argmin_{x in simplex} eta <cum_grad, x> - sum(log x)``."""
    cum_grad = _check_finite(cum_grad, "cumulative gradient")
    return solve_multiplier(eta * cum_grad)


def logbarrier_kkt_residual(x_t, g, eta: float, x) -> float:
    """Spread of ``eta g + grad h(x) - grad h(x_t)`` over coordinates.

    Zero exactly when the stationarity condition of the simplex-constrained
    prox problem holds (all entries equal the negated multiplier).
    """
    v = eta * np.asarray(g) - 1.0 / np.asarray(x) + 1.0 / np.asarray(x_t)
    return float(np.ptp(v))


def lbftrl_kkt_residual(cum_grad, eta: float, x) -> float:
    v = eta * np.asarray(cum_grad) - 1.0 / np.asarray(x)
    return float(np.ptp(v))


class EntropyMap(MirrorMap):
    """Negative entropy ``h(x) = sum x log x - sum x`` on the simplex."""

    def contains(self, x) -> bool:
        return is_simplex_point(x, interior=True)

    def value(self, x):
        x = np.asarray(x, dtype=float)
        pos = x > 0
        return float(np.sum(x[pos] * np.log(x[pos])) - x.sum())

    def grad(self, x):
        return np.log(np.asarray(x, dtype=float))

    def divergence(self, x, y) -> float:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        pos = x > 0
        return float(np.sum(x[pos] * np.log(x[pos] / y[pos])) - x.sum() + y.sum())

    def prox(self, x_t, g, eta):
        return entropy_prox(x_t, g, eta)


class LogBarrierMap(MirrorMap):
    """Logarithmic barrier ``h(x) = -sum log x`` restricted to the simplex."""

    def contains(self, x) -> bool:
        return is_simplex_point(x, interior=True)

    def value(self, x):
        return float(-np.sum(np.log(x)))

    def grad(self, x):
        return -1.0 / np.asarray(x, dtype=float)

    def divergence(self, x, y) -> float:
        ratio = np.asarray(x, dtype=float) / np.asarray(y, dtype=float)
        return float(np.sum(ratio - np.log(ratio) - 1.0))

    def prox(self, x_t, g, eta):
        return logbarrier_prox(x_t, g, eta)[0]
