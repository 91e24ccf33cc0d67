"""Best fixed action in hindsight, with certified optimality gaps.

Both problems maximize a concave log-likelihood ``F(x) = sum_t log <a_t, x>``
(or ``sum_t log tr(A_t rho)``).  Since ``<grad F(x), x> = T``, the
conditional-gradient gap ``max_s <grad F(x), s - x>`` is
``lambda_max(grad F(x)) - T``, and by concavity it upper-bounds
``F* - F(x)``.  The gap is evaluated at the returned point regardless of how
the point was obtained.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
import numpy as np
from scipy.optimize import minimize

from .quantum import hermitian

MAX_ITER = 100_000


class ComparatorError(RuntimeError):
    pass


@dataclass
class ComparatorResult:
    point: np.ndarray
    objective: float
    """Comparator cumulative loss ``sum_t f_t(x*)`` (nats)."""
    gap: float
    iterations: int

    def per_round_losses(self, losses) -> np.ndarray:
        return comparator_losses(self.point, losses)


def comparator_losses(point, losses) -> np.ndarray:
    """Per-round losses of a fixed simplex point or density matrix."""
    losses = np.asarray(losses)
    point = np.asarray(point)
    if losses.ndim == 2:
        vals = losses @ point
    else:
        vals = np.real(np.einsum("tij,ji->t", losses, point))
    with np.errstate(divide="ignore"):
        return -np.log(vals)


def _line_search(c, b, smax):
    """Maximize ``sum log(c + s b)`` over ``s in [0, smax]`` (concave in s)."""

    def dpsi(s):
        den = c + s * b
        q = b / den
        return q.sum(), -np.dot(q, q)

    # largest step keeping every term finite
    neg = b < 0
    if np.any(neg):
        s_pole = np.min(-c[neg] / b[neg])
        if s_pole <= smax:
            smax = s_pole * (1 - 1e-12) if s_pole < smax else smax
    g_hi, _ = dpsi(smax)
    if g_hi >= 0:
        return smax
    lo, hi = 0.0, smax
    s = 0.0
    for _ in range(100):
        g, h = dpsi(s)
        if g > 0:
            lo = s
        else:
            hi = s
        if abs(g) <= 1e-14 * max(1.0, len(c)) or hi - lo <= 1e-16 * max(1.0, hi):
            break
        s_new = s - g / h
        if not (lo < s_new < hi):
            s_new = 0.5 * (lo + hi)
        s = s_new
    return s


def _crp_solve(B, x0, tol, max_iter=MAX_ITER):
    """Away-step Frank-Wolfe for ``max_x sum_t log <B_t, x>`` over the simplex."""
    T, d = B.shape
    x = np.array(x0, dtype=float)
    Bx = B @ x
    gap = math.inf
    for it in range(1, max_iter + 1):
        grad = B.T @ (1.0 / Bx)
        s = int(np.argmax(grad))
        gap = grad[s] - T
        if gap <= tol:
            return x, gap, it
        support = np.flatnonzero(x > 0)
        v = support[np.argmin(grad[support])]
        away_gap = T - grad[v]
        away = away_gap > gap and x[v] < 1.0
        if away:
            direction = x.copy()
            direction[v] -= 1.0
            smax = x[v] / (1.0 - x[v])
            Bd = Bx - B[:, v]
        else:
            direction = -x.copy()
            direction[s] += 1.0
            smax = 1.0
            Bd = B[:, s] - Bx
        step = _line_search(Bx, Bd, smax)
        x = x + step * direction
        if away and step >= smax:
            x[v] = 0.0  # drop step
        x = np.clip(x, 0.0, None)
        x /= x.sum()
        Bx = B @ x
    raise ComparatorError(f"conditional gradient budget exhausted (gap {gap:.3e})")


def best_crp(market, tol: float = 1e-6, max_iter: int = MAX_ITER) -> ComparatorResult:
    """Best constant-rebalanced portfolio for a stream of price relatives."""
    B = np.asarray(market, dtype=float)
    if B.ndim != 2 or np.any(B.max(axis=1) <= 0):
        raise ValueError("every price-relative vector must be nonzero")
    T, d = B.shape
    x, gap, it = _crp_solve(B, np.full(d, 1.0 / d), tol, max_iter)
    obj = float(-np.sum(np.log(B @ x)))
    return ComparatorResult(x, obj, max(float(gap), 0.0), it)


def state_gap(observables, rho) -> float:
    """Certified suboptimality of ``rho`` for the best-fixed-state problem."""
    A = np.asarray(observables, dtype=complex)
    vals = np.real(np.einsum("tij,ji->t", A, rho))
    R = hermitian(np.einsum("tij,t->ij", A, 1.0 / vals))
    return float(np.linalg.eigvalsh(R)[-1] - len(A))


def _factored_objective(A):
    """Negative log-likelihood of ``rho = V V^H / tr(V V^H)`` and its real gradient."""
    T, d, _ = A.shape

    def fg(z):
        V = (z[: d * d] + 1j * z[d * d:]).reshape(d, d)
        P = V @ V.conj().T
        tr = np.trace(P).real
        vals = np.real(np.einsum("tij,ji->t", A, P))
        f = -(np.sum(np.log(vals)) - T * np.log(tr))
        R = np.einsum("tij,t->ij", A, 1.0 / vals)
        G = -2.0 * (R @ V - T * V / tr)
        return f, np.concatenate([G.real.ravel(), G.imag.ravel()])

    return fg


def _unfactor(z, d):
    V = (z[: d * d] + 1j * z[d * d:]).reshape(d, d)
    P = hermitian(V @ V.conj().T)
    return P / np.trace(P).real


def _corrective_step(A, rho, tol, max_iter):
    """Re-weight the eigenvectors of ``rho`` plus the top gradient eigenvector."""
    T = len(A)
    vals = np.real(np.einsum("tij,ji->t", A, rho))
    R = hermitian(np.einsum("tij,t->ij", A, 1.0 / vals))
    _, Q = np.linalg.eigh(R)
    w, V = np.linalg.eigh(rho)
    atoms = np.column_stack([V, Q[:, -1]])
    weights = np.concatenate([np.clip(w, 0.0, None), [0.0]])
    weights /= weights.sum()
    B = np.real(np.einsum("ik,tij,jk->tk", atoms.conj(), A, atoms))
    weights, _, it = _crp_solve(B, weights, tol, max_iter)
    return hermitian((atoms * weights) @ atoms.conj().T), it


def best_fixed_state(observables, tol: float = 1e-6, max_iter: int = MAX_ITER) -> ComparatorResult:
    """Best fixed density matrix for a stream of PSD observables.

    The point is found by L-BFGS on the factorization ``rho = V V^H / tr(V V^H)``
    (restarted while the certificate improves), then polished with
    fully-corrective conditional-gradient steps: the eigenvectors of the
    iterate plus the top eigenvector of the gradient serve as atoms, and
    re-weighting them is a portfolio problem with price relatives
    ``u_j^H A_t u_j``.  Only the certificate decides success.
    """
    A = np.asarray(observables, dtype=complex)
    if A.ndim != 3 or A.shape[1] != A.shape[2]:
        raise ValueError("observables must be a (T, d, d) array")
    T, d, _ = A.shape
    fg = _factored_objective(A)
    z = np.concatenate([np.eye(d).ravel() / math.sqrt(d), np.zeros(d * d)])
    rho = np.eye(d, dtype=complex) / d
    gap = state_gap(A, rho)
    total = 0
    for _ in range(10):
        if gap <= 0.1 * tol:
            break
        res = minimize(fg, z, jac=True, method="L-BFGS-B",
                       options=dict(maxiter=max_iter, gtol=1e-12, ftol=0.0, maxcor=30))
        total += res.nit
        cand = _unfactor(res.x, d)
        cand_gap = state_gap(A, cand)
        if cand_gap >= gap:
            break
        z, rho, gap = res.x, cand, cand_gap
    while gap > tol and total < max_iter:
        cand, it = _corrective_step(A, rho, 1e-3 * tol, max_iter)
        total += it
        cand_gap = state_gap(A, cand)
        if cand_gap >= gap:
            break
        rho, gap = cand, cand_gap
    if gap > tol:
        raise ComparatorError(f"best fixed state not certified (gap {gap:.3e})")
    vals = np.real(np.einsum("tij,ji->t", A, rho))
    return ComparatorResult(rho, float(-np.sum(np.log(vals))), max(gap, 0.0), total)
