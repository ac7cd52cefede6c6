"""Dense operator and superoperator algebra.

Conventions used throughout the package:

* Operators are plain square ``complex128`` numpy arrays.
* Tensor factors are ordered ``H0 (x) H1``: the dissipated factor comes first.
* Vectorization is row-stacking, ``vec(X)[i*d + j] = X[i, j]``, so that
  ``vec(|a><b|) = |a> (x) |b>*`` and ``vec(Q X W) = (Q (x) W^T) vec(X)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

#: Tolerance for algebraic identities, relative to the max-norm of the inputs.
IDENTITY_TOL = 1e-12

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)  # |up><down|
SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)
PAULI = (SIGMA_X, SIGMA_Y, SIGMA_Z)


class DimensionError(ValueError):
    """Raised when operator dimensions are inconsistent."""


@dataclass(frozen=True)
class HilbertSplit:
    """Factorization ``H = H0 (x) H1`` with ``dim H0 = d0``, ``dim H1 = d1``."""

    d0: int
    d1: int

    def __post_init__(self):
        if self.d0 < 2 or self.d1 < 1:
            raise DimensionError(f"invalid split d0={self.d0}, d1={self.d1}")

    @property
    def d(self) -> int:
        return self.d0 * self.d1


def as_operator(x, dim: int | None = None) -> np.ndarray:
    """Return ``x`` as a square complex array, optionally checking its dimension."""
    a = np.asarray(x, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    if dim is not None and a.shape[0] != dim:
        raise DimensionError(f"expected dimension {dim}, got {a.shape[0]}")
    return a


def dagger(x: np.ndarray) -> np.ndarray:
    return np.conj(x).T


def kron(a, b) -> np.ndarray:
    return np.kron(as_operator(a), as_operator(b))


def kron_all(ops: Iterable[np.ndarray]) -> np.ndarray:
    out = np.eye(1, dtype=complex)
    for op in ops:
        out = np.kron(out, op)
    return out


def site_operator(op: np.ndarray, site: int, n_sites: int, local_dim: int = 2) -> np.ndarray:
    """Embed a single-site operator at ``site`` of an ``n_sites`` chain."""
    if not 0 <= site < n_sites:
        raise DimensionError(f"site {site} outside chain of length {n_sites}")
    eye = np.eye(local_dim, dtype=complex)
    return kron_all(op if j == site else eye for j in range(n_sites))


def weighted_partial_trace_first(w, x, split: HilbertSplit) -> np.ndarray:
    """Compute ``tr_H0((w (x) I_H1) x)`` as an operator on ``H1``."""
    w = as_operator(w, split.d0)
    x = as_operator(x, split.d)
    x4 = x.reshape(split.d0, split.d1, split.d0, split.d1)
    return np.einsum("ij,jpiq->pq", w, x4)


def vectorize(x) -> np.ndarray:
    return as_operator(x).reshape(-1).copy()


def devectorize(v, dim: int | None = None) -> np.ndarray:
    v = np.asarray(v, dtype=complex).reshape(-1)
    d = int(round(np.sqrt(v.size)))
    if d * d != v.size or d == 0:
        raise DimensionError(f"vector length {v.size} is not a perfect square")
    if dim is not None and dim != d:
        raise DimensionError(f"vector of length {v.size} does not match dim {dim}")
    return v.reshape(d, d).copy()


def sandwich_superop(q, w) -> np.ndarray:
    """Matrix of ``rho -> q rho w`` acting on row-stacked vectors."""
    q = as_operator(q)
    w = as_operator(w, q.shape[0])
    return np.kron(q, w.T)


def commutator_superop(h) -> np.ndarray:
    """Matrix of ``rho -> -i [h, rho]``."""
    h = as_operator(h)
    eye = np.eye(h.shape[0], dtype=complex)
    return -1j * (np.kron(h, eye) - np.kron(eye, h.T))


def lindblad_superop(jumps: Sequence[tuple[np.ndarray, float]], dim: int | None = None) -> np.ndarray:
    """Matrix of ``rho -> sum_a r_a (L rho L^+ - {L^+ L, rho}/2)``.

    ``dim`` is only needed when ``jumps`` is empty.
    """
    if not jumps:
        if dim is None:
            raise DimensionError("dimension required for an empty jump list")
        return np.zeros((dim * dim, dim * dim), dtype=complex)
    d = as_operator(jumps[0][0]).shape[0]
    if dim is not None and dim != d:
        raise DimensionError(f"jump dimension {d} does not match dim {dim}")
    eye = np.eye(d, dtype=complex)
    out = np.zeros((d * d, d * d), dtype=complex)
    for op, rate in jumps:
        op = as_operator(op, d)
        if rate < 0:
            raise ValueError(f"negative jump rate {rate}")
        if rate == 0:
            continue
        ldl = dagger(op) @ op
        out += rate * (np.kron(op, op.conj()) - 0.5 * np.kron(ldl, eye) - 0.5 * np.kron(eye, ldl.T))
    return out


def max_norm(x) -> float:
    x = np.asarray(x)
    return float(np.max(np.abs(x))) if x.size else 0.0
