"""Ground truth: dense eigendecomposition of the full vectorized Liouvillian."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .model import MAX_FREE_SPINS, XYZChainConfig, full_liouvillian
from .operators import devectorize, max_norm

RESIDUAL_TOL = 1e-8
ZERO_TOL = 1e-9


class EigensolverError(RuntimeError):
    pass


class KernelError(ValueError):
    """The Liouvillian kernel is not one-dimensional."""


@dataclass(frozen=True)
class ExactSpectrum:
    eigenvalues: np.ndarray
    right_eigenvectors: np.ndarray | None
    config_echo: XYZChainConfig | None = None


@dataclass(frozen=True)
class SteadyState:
    rho: np.ndarray
    residual: float


def canonical_order(values: np.ndarray) -> np.ndarray:
    """Stable permutation sorting by real part, then imaginary part."""
    values = np.asarray(values)
    return np.lexsort((values.imag, values.real))


def eig_general(m: np.ndarray, eigenvectors: bool = True):
    """Dense non-Hermitian eigendecomposition with a residual check.

    Returns ``(values, vectors)`` sorted by ``(Re, Im)``; ``vectors`` is None
    when not requested.
    """
    m = np.asarray(m, dtype=complex)
    if not np.all(np.isfinite(m)):
        raise EigensolverError("matrix has non-finite entries")
    try:
        if eigenvectors:
            w, v = scipy.linalg.eig(m, check_finite=False)
        else:
            w, v = scipy.linalg.eigvals(m, check_finite=False), None
    except scipy.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise EigensolverError(str(exc)) from exc
    order = canonical_order(w)
    w = w[order]
    if v is not None:
        v = v[:, order]
        scale = max(1.0, np.linalg.norm(m, 2))
        resid = np.linalg.norm(m @ v - v * w, axis=0)
        if np.max(resid) > RESIDUAL_TOL * scale:
            raise EigensolverError(f"eigenpair residual {np.max(resid):.3e} exceeds tolerance")
    return w, v


def exact_liouvillian_spectrum(cfg: XYZChainConfig, eigenvectors: bool = False) -> ExactSpectrum:
    if cfg.n_free > MAX_FREE_SPINS:
        raise ValueError(f"n_free={cfg.n_free} exceeds the dense envelope of {MAX_FREE_SPINS}")
    w, v = eig_general(full_liouvillian(cfg), eigenvectors=eigenvectors)
    return ExactSpectrum(w, v, cfg)


def steady_state_of(lv: np.ndarray) -> SteadyState:
    """Unique kernel element of a Liouvillian matrix as a density matrix."""
    u, s, vh = np.linalg.svd(lv)
    scale = max(1.0, s[0])
    n_null = int(np.sum(s <= ZERO_TOL * scale))
    if n_null != 1:
        raise KernelError(f"Liouvillian kernel has dimension {n_null}, expected 1")
    rho = devectorize(vh[-1].conj())
    rho = 0.5 * (rho + rho.conj().T)
    rho = rho / np.trace(rho).real
    residual = max_norm(devectorize(lv @ rho.reshape(-1)))
    return SteadyState(rho, residual)


def steady_state(cfg: XYZChainConfig) -> SteadyState:
    return steady_state_of(full_liouvillian(cfg))
