"""Loss-stream generators and file formats.

All generators draw from ``numpy.random.default_rng(seed)`` (PCG64) in a
fixed order, so a (kind, d, T, seed) tuple always produces the same stream.

Market kinds
------------
iid-uniform
    ``a_t(i) ~ U[0, 1)`` independently, row by row.
kelly-two-asset
    Deterministic; ``a_t = 0.5 e + 0.5 e_{t mod d}``.  For ``d = 2`` this
    alternates ``(1, 0.5)`` and ``(0.5, 1)`` and the best rebalanced
    portfolio is strictly inside the simplex.
adversarial-alternating
    ``a_t = e_k + eps_t (e - e_k)`` with ``k = t mod d`` and
    ``eps_t ~ U[0, 0.05)``: nearly all wealth sits in one asset per round.
dominant-asset
    ``a_t(1) = 1`` and the remaining entries ``~ U[0, 0.9)``; the first
    vertex is the best rebalanced portfolio.

Every row is finally divided by its maximum.

File formats
------------
Price relatives: CSV with header ``a1,...,ad``, one row per round.
Observables: JSON array with one entry per round; each entry is the list of
the ``d*d`` matrix entries in row-major order, each as ``[re, im]``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.stats import unitary_group

from .ops import normalize_price_relatives
from .quantum import hermitian, maximally_mixed, normalize_observable, sample_measurement

MARKET_KINDS = ("iid-uniform", "kelly-two-asset", "adversarial-alternating", "dominant-asset")
STATE_KINDS = ("random", "pure", "maximally-mixed", "diagonal")
POVM_KINDS = ("haar", "diagonal", "computational", "identity")


def _check_sizes(d, T):
    if d < 2 or T < 1:
        raise ValueError("need d >= 2 and T >= 1")


def generate_market(kind: str, d: int, T: int, seed: int = 0) -> np.ndarray:
    """A ``(T, d)`` array of price relatives, each row scaled to max 1."""
    _check_sizes(d, T)
    rng = np.random.default_rng(seed)
    t = np.arange(T)
    if kind == "iid-uniform":
        a = rng.uniform(0.0, 1.0, size=(T, d))
    elif kind == "kelly-two-asset":
        a = np.full((T, d), 0.5)
        a[t, t % d] = 1.0
    elif kind == "adversarial-alternating":
        eps = rng.uniform(0.0, 0.05, size=T)
        a = np.repeat(eps[:, None], d, axis=1)
        a[t, t % d] = 1.0
    elif kind == "dominant-asset":
        a = rng.uniform(0.0, 0.9, size=(T, d))
        a[:, 0] = 1.0
    else:
        raise ValueError(f"unknown market kind {kind!r}; choose from {MARKET_KINDS}")
    for row in a:
        if row.max() <= 0:
            row[:] = 1.0  # measure-zero event for the random kinds
    return a / a.max(axis=1, keepdims=True)


def random_density_matrix(d: int, rng, kind: str = "random") -> np.ndarray:
    rng = np.random.default_rng(rng)
    if kind == "maximally-mixed":
        return maximally_mixed(d)
    if kind == "diagonal":
        return np.diag(rng.dirichlet(np.ones(d))).astype(complex)
    G = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    if kind == "pure":
        G = G[:, :1]
    elif kind != "random":
        raise ValueError(f"unknown state kind {kind!r}; choose from {STATE_KINDS}")
    rho = G @ G.conj().T
    return hermitian(rho / np.trace(rho).real)


def random_povm(d: int, rng, kind: str = "haar") -> list:
    """A POVM on ``C^d``.

    ``haar``: rank-one projectors onto a Haar-random orthonormal basis;
    ``diagonal``: ``d`` diagonal elements whose weights at each coordinate
    are Dirichlet(1, ..., 1) across elements; ``computational``: the standard
    basis projectors; ``identity``: the single element ``I``.
    """
    rng = np.random.default_rng(rng)
    if kind == "haar":
        U = unitary_group.rvs(d, random_state=rng) if d > 1 else np.eye(1)
        return [np.outer(U[:, k], U[:, k].conj()) for k in range(d)]
    if kind == "diagonal":
        W = rng.dirichlet(np.ones(d), size=d)  # W[i, k]: weight of coordinate i in element k
        return [np.diag(W[:, k]).astype(complex) for k in range(d)]
    if kind == "computational":
        return [np.diag(np.eye(d)[k]).astype(complex) for k in range(d)]
    if kind == "identity":
        return [np.eye(d, dtype=complex)]
    raise ValueError(f"unknown POVM kind {kind!r}; choose from {POVM_KINDS}")


@dataclass
class QuantumStream:
    observables: np.ndarray
    outcomes: np.ndarray
    rho_true: np.ndarray


def generate_quantum_stream(d: int, T: int, seed: int = 0, state: str = "random",
                            povm: str = "haar") -> QuantumStream:
    """Measurement stream: a fresh POVM each round, outcome sampled from ``rho_true``.

    Draw order: the true state, then per round the POVM followed by the outcome.
    """
    _check_sizes(d, T)
    rng = np.random.default_rng(seed)
    rho_true = random_density_matrix(d, rng, state)
    obs = np.empty((T, d, d), dtype=complex)
    outcomes = np.empty(T, dtype=int)
    for t in range(T):
        elems = random_povm(d, rng, povm)
        outcomes[t], obs[t] = sample_measurement(rho_true, elems, rng)
    return QuantumStream(obs, outcomes, rho_true)


def write_market_csv(path, market) -> None:
    market = np.asarray(market, dtype=float)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"a{i + 1}" for i in range(market.shape[1])])
        for row in market:
            w.writerow([repr(float(v)) for v in row])


def read_market_csv(path) -> np.ndarray:
    """Read price relatives and scale every row to max 1."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    header, body = rows[0], rows[1:]
    if header != [f"a{i + 1}" for i in range(len(header))]:
        raise ValueError(f"{path}: expected header a1..ad, got {header}")
    market = np.array([[float(v) for v in row] for row in body if row], dtype=float)
    if market.ndim != 2 or market.shape[1] != len(header):
        raise ValueError(f"{path}: ragged rows")
    return np.array([normalize_price_relatives(a) for a in market])


def write_observables_json(path, observables) -> None:
    payload = [[[float(z.real), float(z.imag)] for z in np.asarray(A).ravel()]
               for A in observables]
    Path(path).write_text(json.dumps(payload))


def read_observables_json(path) -> np.ndarray:
    """Read observables and scale each to unit spectral norm."""
    payload = json.loads(Path(path).read_text())
    out = []
    for entry in payload:
        flat = np.asarray(entry, dtype=float).reshape(-1, 2)
        d = math.isqrt(len(flat))
        if d * d != len(flat):
            raise ValueError(f"{path}: observable with {len(flat)} entries is not square")
        out.append(normalize_observable((flat[:, 0] + 1j * flat[:, 1]).reshape(d, d)))
    return np.array(out)
