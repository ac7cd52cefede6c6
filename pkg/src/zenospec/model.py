"""XYZ chain with a strongly dissipated boundary spin.

Builds the Hamiltonian and boundary dissipator, diagonalizes the dissipator
on the dissipated site, and computes the operators ``g_k`` and the trace
coefficients ``A, B, C`` (plus the derived rank-5 tensors) that the Zeno-limit
perturbation theory is written in.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .operators import (
    PAULI,
    DimensionError,
    HilbertSplit,
    as_operator,
    commutator_superop,
    dagger,
    devectorize,
    lindblad_superop,
    site_operator,
    vectorize,
    weighted_partial_trace_first,
)

KERNEL_TOL = 1e-9
DEGENERACY_TOL = 1e-9
DEFECT_TOL = 1e-8
MAX_FREE_SPINS = 10


class DissipatorError(ValueError):
    """The dissipator violates an assumption of the theory."""


@dataclass(frozen=True)
class XYZChainConfig:
    n_free: int
    j_coupling: tuple[float, float, float]
    theta: float = 0.0
    phi: float = 0.0
    mu: float = 1.0
    gamma_strength: float = 1.0

    def __post_init__(self):
        if int(self.n_free) != self.n_free or self.n_free < 1:
            raise ValueError(f"n_free must be a positive integer, got {self.n_free}")
        if len(self.j_coupling) != 3:
            raise ValueError("j_coupling must have three entries (Jx, Jy, Jz)")
        object.__setattr__(self, "j_coupling", tuple(float(j) for j in self.j_coupling))
        if abs(self.mu) > 1:
            raise ValueError(f"|mu| must not exceed 1, got {self.mu}")
        if not self.gamma_strength > 0:
            raise ValueError(f"gamma_strength must be positive, got {self.gamma_strength}")
        vals = (*self.j_coupling, self.theta, self.phi, self.mu, self.gamma_strength)
        if not all(np.isfinite(vals)):
            raise ValueError("all physical parameters must be finite")

    @property
    def split(self) -> HilbertSplit:
        return HilbertSplit(2, 2**self.n_free)

    @property
    def dim(self) -> int:
        return 2 ** (self.n_free + 1)

    def with_gamma(self, gamma_strength: float) -> "XYZChainConfig":
        return replace(self, gamma_strength=gamma_strength)


@dataclass(frozen=True)
class DissipatorSpec:
    """Weighted jump operators on the dissipated factor.

    ``target`` is ``(theta, phi, mu)`` when the spec was produced by
    :func:`build_boundary_dissipator`; it enables the closed-form eigenbasis.
    """

    jumps: tuple[tuple[np.ndarray, float], ...]
    target: tuple[float, float, float] | None = None

    def __post_init__(self):
        dims = {as_operator(op).shape[0] for op, _ in self.jumps}
        if len(dims) > 1:
            raise DimensionError(f"jump operators have mixed dimensions {sorted(dims)}")
        if any(rate < 0 for _, rate in self.jumps):
            raise ValueError("jump rates must be non-negative")

    @property
    def d0(self) -> int:
        return as_operator(self.jumps[0][0]).shape[0]

    def superop(self) -> np.ndarray:
        return lindblad_superop(list(self.jumps))


@dataclass(frozen=True)
class SpectralBasis:
    """Dissipator eigenvalues ``c``, right eigenmatrices ``psi`` and duals ``phi``."""

    c: np.ndarray
    psi: tuple[np.ndarray, ...]
    phi: tuple[np.ndarray, ...]
    degeneracy_classes: tuple[tuple[int, ...], ...]

    @property
    def size(self) -> int:
        return len(self.c)

    def class_of(self, k: int) -> tuple[int, ...]:
        for cls in self.degeneracy_classes:
            if k in cls:
                return cls
        raise IndexError(k)


@dataclass(frozen=True)
class StructureCoefficients:
    """``g_k`` operators on H1 and the tensors ``A[m,k,n]``, ``B[m,k,n]``, ``C[m,k,n]``."""

    basis: SpectralBasis
    g: tuple[np.ndarray, ...]
    a: np.ndarray
    b: np.ndarray
    cc: np.ndarray


@dataclass(frozen=True)
class DysonTensors:
    """Second-order coefficients.

    Index layout: ``gamma[n, s, k, m, z]`` multiplies ``g_m R_s g_z^+``,
    ``eps[n, s, k, z, m]`` multiplies ``g_z^+ g_m R_s`` and
    ``delta[n, s, k, z, m]`` multiplies ``R_s g_z^+ g_m``.
    """

    gamma: np.ndarray
    eps: np.ndarray
    delta: np.ndarray


@dataclass(frozen=True)
class ChainModel:
    """Everything the perturbative stripes need for one configuration."""

    cfg: XYZChainConfig
    hamiltonian: np.ndarray
    dissipator: DissipatorSpec
    coeffs: StructureCoefficients
    tensors: DysonTensors = field(repr=False)

    @property
    def basis(self) -> SpectralBasis:
        return self.coeffs.basis

    @property
    def split(self) -> HilbertSplit:
        return HilbertSplit(self.dissipator.d0, self.coeffs.g[0].shape[0])


def build_xyz_hamiltonian(cfg: XYZChainConfig) -> np.ndarray:
    n_sites = cfg.n_free + 1
    h = np.zeros((cfg.dim, cfg.dim), dtype=complex)
    for j in range(cfg.n_free):
        for coupling, s in zip(cfg.j_coupling, PAULI):
            if coupling:
                h += coupling * site_operator(s, j, n_sites) @ site_operator(s, j + 1, n_sites)
    return h


def target_state_vectors(theta: float, phi: float) -> tuple[np.ndarray, np.ndarray]:
    """Return ``|s>`` and its orthogonal partner ``|s_perp>``."""
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    em, ep = np.exp(-0.5j * phi), np.exp(0.5j * phi)
    ket = np.array([c * em, s * ep])
    perp = np.array([-s * em, c * ep])
    return ket, perp


def bloch_vector(theta: float, phi: float) -> np.ndarray:
    return np.array([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)])


def build_boundary_dissipator(theta: float, phi: float, mu: float) -> DissipatorSpec:
    """Two-jump dissipator targeting polarization ``mu * n(theta, phi)``.

    The second jump is ``|s_perp><s|``, the Hermitian conjugate of the first;
    it coincides with the plain transpose whenever ``phi`` is 0 or pi.
    """
    if abs(mu) > 1:
        raise ValueError(f"|mu| must not exceed 1, got {mu}")
    s, sp = target_state_vectors(theta, phi)
    l1 = np.outer(s, sp.conj())
    jumps = ((l1, (1 + mu) / 2), (dagger(l1), (1 - mu) / 2))
    return DissipatorSpec(jumps=jumps, target=(theta, phi, mu))


def boundary_closed_forms(theta: float, phi: float, mu: float):
    """Closed-form eigenvalues, eigenmatrices and dual basis of the boundary dissipator."""
    s, sp = target_state_vectors(theta, phi)
    ps = np.outer(s, s.conj())
    pp = np.outer(sp, sp.conj())
    psi = (
        (1 + mu) / 2 * ps + (1 - mu) / 2 * pp,
        np.outer(s, sp.conj()),
        np.outer(sp, s.conj()),
        ps - pp,
    )
    phi_ = (np.eye(2, dtype=complex), psi[2].copy(), psi[1].copy(), (1 - mu) / 2 * ps - (1 + mu) / 2 * pp)
    c = np.array([0.0, -0.5, -0.5, -1.0], dtype=complex)
    return c, psi, phi_


def degeneracy_classes(c: np.ndarray, tol: float = DEGENERACY_TOL) -> tuple[tuple[int, ...], ...]:
    scale = max(1.0, float(np.max(np.abs(c))))
    classes: list[list[int]] = []
    for i, ci in enumerate(c):
        for cls in classes:
            if abs(c[cls[0]] - ci) <= tol * scale:
                cls.append(i)
                break
        else:
            classes.append([i])
    return tuple(tuple(cls) for cls in classes)


def biorthogonal_basis(psi: Sequence[np.ndarray]) -> list[np.ndarray]:
    """Dual family ``phi_n`` with ``tr(phi_n psi_k) = delta_nk``."""
    psi = [as_operator(p) for p in psi]
    d = psi[0].shape[0]
    if len(psi) != d * d:
        raise DimensionError(f"need {d * d} matrices for a basis, got {len(psi)}")
    # tr(phi psi) = vec(phi) . vec(psi^T); columns of s are vec(psi_k^T)
    s = np.array([vectorize(p.T) for p in psi]).T
    sv = np.linalg.svd(s, compute_uv=False)
    if sv[-1] <= DEFECT_TOL * sv[0]:
        raise DissipatorError("eigenmatrix family is rank deficient")
    dual = np.linalg.inv(s)
    return [devectorize(row, d) for row in dual]


def _fix_scale(x: np.ndarray) -> np.ndarray:
    x = x / np.linalg.norm(x)
    flat = x.reshape(-1)
    pivot = flat[np.argmax(np.abs(flat))]
    return x * (abs(pivot) / pivot)


def dissipator_eigensystem(spec: DissipatorSpec) -> SpectralBasis:
    """Diagonalize the dissipator on the dissipated factor.

    Eigenvalues are sorted by decreasing real part, then increasing imaginary
    part, so ``c[0] = 0``. The kernel element is normalized to unit trace.
    """
    d0 = spec.d0
    sup = spec.superop()
    sv = np.linalg.svd(sup, compute_uv=False)
    n_null = int(np.sum(sv <= KERNEL_TOL * max(1.0, sv[0])))
    if n_null != 1:
        raise DissipatorError(f"dissipator kernel has dimension {n_null}, expected 1")

    c, vecs = np.linalg.eig(sup)
    # snap the kernel eigenvalue so ordering is stable
    k0 = int(np.argmin(np.abs(c)))
    c[k0] = 0.0
    order = np.lexsort((np.round(c.imag, 12), -np.round(c.real, 12)))
    c, vecs = c[order], vecs[:, order]
    vecs = vecs / np.linalg.norm(vecs, axis=0)
    if np.linalg.svd(vecs, compute_uv=False)[-1] <= DEFECT_TOL:
        raise DissipatorError("dissipator is not diagonalizable within tolerance")

    if spec.target is not None:
        c_cf, psi, phi = boundary_closed_forms(*spec.target)
        for ck, pk in zip(c_cf, psi):
            resid = sup @ vectorize(pk) - ck * vectorize(pk)
            if np.max(np.abs(resid)) > 1e-10:
                raise DissipatorError("boundary dissipator does not match its closed forms")
        if np.max(np.abs(np.sort_complex(c) - np.sort_complex(c_cf))) > 1e-10:
            raise DissipatorError("boundary dissipator eigenvalues do not match closed forms")
        return SpectralBasis(c_cf, tuple(psi), tuple(phi), degeneracy_classes(c_cf))

    psi = [devectorize(vecs[:, k], d0) for k in range(d0 * d0)]
    psi[0] = psi[0] / np.trace(psi[0])
    psi[1:] = [_fix_scale(p) for p in psi[1:]]
    phi = biorthogonal_basis(psi)
    return SpectralBasis(c, tuple(psi), tuple(phi), degeneracy_classes(c))


def g_operators(h: np.ndarray, basis: SpectralBasis, split: HilbertSplit) -> list[np.ndarray]:
    """``g_k = tr_H0((psi_k (x) I) H)`` for every dissipator eigenmatrix."""
    h = as_operator(h, split.d)
    return [weighted_partial_trace_first(p, h, split) for p in basis.psi]


def structure_coefficients(basis: SpectralBasis, g: Sequence[np.ndarray] = ()) -> StructureCoefficients:
    psi = np.array(basis.psi)
    phi = np.array(basis.phi)
    phid = np.conj(phi).transpose(0, 2, 1)
    # A[m,k,n] = tr(phi_n psi_k phi_m^+)
    a = np.einsum("nij,kjl,mli->mkn", phi, psi, phid)
    # B[m,k,n] = tr(phi_n phi_m^+ psi_k)
    b = np.einsum("nij,mjl,kli->mkn", phi, phid, psi)
    # C[m,k,n] = tr(phi_n phi_m psi_k)
    cc = np.einsum("nij,mjl,kli->mkn", phi, phi, psi)
    return StructureCoefficients(basis, tuple(np.asarray(x, complex) for x in g), a, b, cc)


def dyson_tensors(coeffs: StructureCoefficients) -> DysonTensors:
    a, b, c = coeffs.a, coeffs.b, coeffs.cc
    # gamma^{n,s,k}_{m,z} = C[m,s,n] A[z,n,k] + A[z,s,n] C[m,n,k]
    gamma = np.einsum("msn,znk->nskmz", c, a) + np.einsum("zsn,mnk->nskmz", a, c)
    # eps^{n,s,k}_{z,m} = C[m,s,n] B[z,n,k]
    eps = np.einsum("msn,znk->nskzm", c, b)
    # delta^{n,s,k}_{z,m} = A[z,s,n] C[k,n,m]
    delta = np.einsum("zsn,knm->nskzm", a, c)
    return DysonTensors(gamma, eps, delta)


def embedded_jumps(spec: DissipatorSpec, d1: int) -> list[tuple[np.ndarray, float]]:
    eye = np.eye(d1, dtype=complex)
    return [(np.kron(op, eye), rate) for op, rate in spec.jumps]


def liouvillian(h: np.ndarray, spec: DissipatorSpec, d1: int, gamma_strength: float) -> np.ndarray:
    """Vectorized ``-i[H, .] + Gamma D[.]`` with the dissipator on the first factor."""
    return commutator_superop(h) + gamma_strength * lindblad_superop(embedded_jumps(spec, d1))


def full_liouvillian(cfg: XYZChainConfig) -> np.ndarray:
    spec = build_boundary_dissipator(cfg.theta, cfg.phi, cfg.mu)
    return liouvillian(build_xyz_hamiltonian(cfg), spec, cfg.split.d1, cfg.gamma_strength)


def build_model(cfg: XYZChainConfig, spec: DissipatorSpec | None = None,
                hamiltonian: np.ndarray | None = None) -> ChainModel:
    """Assemble basis, ``g_k`` and all coefficient tensors for one configuration."""
    if cfg.n_free > MAX_FREE_SPINS:
        raise ValueError(f"n_free={cfg.n_free} exceeds the dense envelope of {MAX_FREE_SPINS}")
    spec = spec if spec is not None else build_boundary_dissipator(cfg.theta, cfg.phi, cfg.mu)
    h = build_xyz_hamiltonian(cfg) if hamiltonian is None else as_operator(hamiltonian)
    split = HilbertSplit(spec.d0, h.shape[0] // spec.d0)
    if split.d != h.shape[0]:
        raise DimensionError("Hamiltonian dimension is not a multiple of d0")
    basis = dissipator_eigensystem(spec)
    coeffs = structure_coefficients(basis, g_operators(h, basis, split))
    return ChainModel(cfg, h, spec, coeffs, dyson_tensors(coeffs))
