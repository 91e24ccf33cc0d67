"""Density-matrix decision space and the log-det mirror map.

Loss at round t is ``f_t(rho) = -log tr(A_t rho)`` for a PSD observable
``A_t``.  The log-det prox step needs one Hermitian eigendecomposition and
a scalar multiplier solve (shared with the simplex log-barrier prox).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import core
from .simplex import NewtonSolveReport, solve_multiplier

TRACE_TOL = 1e-9
EIG_TOL = 1e-10


def hermitian(m) -> np.ndarray:
    """Complex copy of ``m`` symmetrized as ``(m + m^H) / 2``."""
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("expected a square matrix")
    return 0.5 * (m + m.conj().T)


def inner(x, y) -> float:
    """Real Frobenius inner product ``Re tr(x^H y)``."""
    return float(np.real(np.vdot(x, y)))


def is_density_matrix(rho, tol: float = TRACE_TOL, interior: bool = False) -> bool:
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        return False
    if np.max(np.abs(rho - rho.conj().T)) > 1e-12:
        return False
    if abs(np.trace(rho).real - 1.0) > tol:
        return False
    w = np.linalg.eigvalsh(rho)
    return bool(w.min() > 0) if interior else bool(w.min() >= -EIG_TOL)


def maximally_mixed(d: int) -> np.ndarray:
    return np.eye(d, dtype=complex) / d


def from_eig(w, U) -> np.ndarray:
    return hermitian((U * w) @ U.conj().T)


def inverse_pd(rho) -> np.ndarray:
    """Inverse of a positive-definite Hermitian matrix via its eigenbasis."""
    w, U = np.linalg.eigh(hermitian(rho))
    if w.min() <= 0:
        raise ValueError("matrix is not positive definite")
    return from_eig(1.0 / w, U)


def normalize_observable(A) -> np.ndarray:
    """Scale a PSD observable to unit spectral norm; rejects zero / indefinite input."""
    A = hermitian(A)
    w = np.linalg.eigvalsh(A)
    if w.min() < -EIG_TOL * max(1.0, abs(w).max()):
        raise ValueError("observable is not positive semidefinite")
    if w.max() <= 0:
        raise ValueError("all-zero observable")
    return A / w.max()


def quantum_loss(rho, A) -> float:
    val = inner(A, rho)
    if val <= 0:
        raise ValueError("tr(A rho) <= 0: infinite loss")
    return -math.log(val)


def quantum_gradient(rho, A) -> np.ndarray:
    """Gradient ``-A / tr(A rho)``."""
    val = inner(A, rho)
    if val <= 0:
        raise ValueError("tr(A rho) <= 0: gradient undefined")
    return -hermitian(A) / val


def logdet_divergence(rho, sigma) -> float:
    """``tr(rho sigma^-1) - log det(rho sigma^-1) - d``."""
    S = inverse_pd(sigma)
    d = rho.shape[0]
    _, logdet_rho = np.linalg.slogdet(rho)
    _, logdet_sigma = np.linalg.slogdet(sigma)
    return float(inner(S, rho) - logdet_rho.real + logdet_sigma.real - d)


def logdet_prox_from_inverse(rho_inv, G, eta: float):
    """Log-det prox given ``rho_t^{-1}`` directly.

    Returns ``(rho_next, rho_next_inv, report)``.  With
    ``M = rho_t^{-1} + eta G = U diag(mu) U^H`` the minimizer is
    ``U diag(1/(mu + lam)) U^H`` and its inverse is ``M + lam I``.
    """
    M = hermitian(rho_inv) + eta * hermitian(G)
    try:
        mu, U = np.linalg.eigh(M)
    except np.linalg.LinAlgError as exc:
        raise core.ProxError(f"eigendecomposition failed: {exc}") from exc
    w, report = solve_multiplier(mu)
    rho = from_eig(w, U)
    rho_inv = from_eig(mu + report.multiplier, U)
    return rho, rho_inv, report


def logdet_prox(rho_t, G, eta: float) -> tuple[np.ndarray, NewtonSolveReport]:
    """``argmin_{rho in D_d} eta <G, rho> + D_h(rho, rho_t)`` with ``h = -log det``."""
    if not np.all(np.isfinite(G)):
        raise ValueError("gradient contains non-finite entries")
    rho, _, report = logdet_prox_from_inverse(inverse_pd(rho_t), G, eta)
    return rho, report


def logdet_kkt_residual(rho_t, G, eta: float, rho) -> float:
    """Max-entry deviation of ``eta G - rho^-1 + rho_t^-1`` from a multiple of ``I``."""
    V = eta * hermitian(G) - inverse_pd(rho) + inverse_pd(rho_t)
    d = V.shape[0]
    shift = np.trace(V).real / d
    return float(np.max(np.abs(V - shift * np.eye(d))))


def local_step(rho_t, rho_next, A) -> float:
    return abs(inner(A, rho_t - rho_next)) / inner(A, rho_t)


def qlbomd_round(rho_t, A_t, eta: float, rho_inv=None):
    """One Q-LB-OMD round: returns ``(rho_next, loss, r_t)``.

    ``rho_inv`` may carry ``rho_t^{-1}`` from the previous prox step so the
    round costs a single eigendecomposition; pass ``None`` to compute it.
    """
    rho_next, _, _ = _qlbomd_step(rho_t, A_t, eta, rho_inv)
    loss = quantum_loss(rho_t, A_t)
    return rho_next, loss, local_step(rho_t, rho_next, A_t)


def _qlbomd_step(rho_t, A_t, eta, rho_inv):
    if rho_inv is None:
        rho_inv = inverse_pd(rho_t)
    return logdet_prox_from_inverse(rho_inv, quantum_gradient(rho_t, A_t), eta)


@dataclass
class QuantumRun:
    log: core.ExperimentLog
    plays: np.ndarray
    eta: float


def run_qlbomd(observables, eta: float, kahan: bool = False) -> QuantumRun:
    observables = np.asarray(observables, dtype=complex)
    d = observables.shape[1]
    rho = maximally_mixed(d)
    rho_inv = np.eye(d, dtype=complex) * d
    log = core.ExperimentLog(kahan=kahan)
    plays = [rho]
    for A in observables:
        loss = quantum_loss(rho, A)
        rho_next, rho_inv, _ = _qlbomd_step(rho, A, eta, rho_inv)
        log.record(loss, local_step(rho, rho_next, A))
        rho = rho_next
        plays.append(rho)
    return QuantumRun(log, np.array(plays), eta)


def clipped_comparator(rho, T: int, d: int | None = None) -> np.ndarray:
    """``(1 - 1/T) rho + I / (T d)``: an interior point near ``rho``."""
    if T < 2:
        raise ValueError("need T >= 2")
    rho = np.asarray(rho, dtype=complex)
    d = rho.shape[0] if d is None else d
    return hermitian((1 - 1 / T) * rho + np.eye(d) / (T * d))


def clipped_point(x, T: int) -> np.ndarray:
    """Simplex analogue of :func:`clipped_comparator`."""
    x = np.asarray(x, dtype=float)
    return (1 - 1 / T) * x + 1 / (T * x.size)


def validate_povm(povm, tol: float = 1e-9) -> list:
    elems = [hermitian(M) for M in povm]
    if not elems:
        raise ValueError("empty POVM")
    d = elems[0].shape[0]
    for M in elems:
        if np.linalg.eigvalsh(M).min() < -EIG_TOL:
            raise ValueError("POVM element is not positive semidefinite")
    if np.max(np.abs(sum(elems) - np.eye(d))) > tol:
        raise ValueError("POVM elements do not sum to the identity")
    return elems


def outcome_probabilities(rho, povm) -> np.ndarray:
    p = np.array([inner(M, rho) for M in povm])
    if abs(p.sum() - 1.0) > 1e-8:
        raise ValueError(f"outcome probabilities sum to {p.sum():.12f}")
    return np.clip(p, 0.0, None)


def sample_measurement(rho_true, povm, rng) -> tuple[int, np.ndarray]:
    """Draw an outcome ``k`` with probability ``tr(M_k rho)``.

    ``rng`` is a :class:`numpy.random.Generator` or an integer seed.
    Returns the 0-based outcome index and the normalized observable ``M_k``.
    """
    rng = np.random.default_rng(rng)
    elems = validate_povm(povm)
    p = outcome_probabilities(rho_true, elems)
    k = int(rng.choice(len(elems), p=p / p.sum()))
    return k, normalize_observable(elems[k])



class LogDetMap(core.MirrorMap):
    """``h(rho) = -log det rho`` on the interior of the density matrices."""

    def contains(self, rho) -> bool:
        return is_density_matrix(rho, interior=True)

    def value(self, rho) -> float:
        sign, logdet = np.linalg.slogdet(hermitian(rho))
        if sign.real <= 0:
            return math.inf
        return float(-logdet.real)

    def grad(self, rho):
        return -inverse_pd(rho)

    def divergence(self, rho, sigma) -> float:
        return logdet_divergence(rho, sigma)

    def prox(self, rho_t, G, eta):
        return logdet_prox(rho_t, G, eta)[0]
