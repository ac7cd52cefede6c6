"""Liouvillian eigenvalues near the Zeno limit, stripe by stripe, through order 1/Gamma.

Sign convention: the coherent part of the Liouvillian is ``-i[H, .]``, so the
zeroth-order generator of stripe ``k`` acts as ``R -> Gamma c_k R - i(U R - R W)``
and a mode ``|alpha><beta~|`` has ``lambda0 = Gamma c_k - i(u_alpha - w_beta)``.

Two families of routines live here:

* general ones driven only by the dissipator basis and the coefficient tensors
  (any dissipator with a unique kernel), and
* closed-form routines specialized to the two-jump boundary dissipator of the
  XYZ chain, written in terms of ``g_1, g_2, g_3`` matrix elements.

Both resolve degenerate zeroth-order eigenvalues by diagonalizing the 1/Gamma
operator inside the degenerate subspace.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg
from scipy.optimize import linear_sum_assignment
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .model import ChainModel, DissipatorError
from .operators import dagger, kron_all

LAMBDA0_TOL = 1e-8
REAL_TOL = 1e-8


class PairingError(RuntimeError):
    """Eigenvectors of the two flipped-field operators could not be paired."""


class DefectiveOperatorError(RuntimeError):
    """A zeroth-order operator is not diagonalizable within tolerance."""


class RealnessWarning(UserWarning):
    """Resolved corrections that are expected to be real are not."""


@dataclass(frozen=True)
class StripeRecord:
    """One perturbative eigenvalue ``lambda0 + correction``.

    ``alpha``/``beta`` label the factorized zeroth-order mode. Modes obtained
    from a resolved degenerate subspace carry ``alpha == beta`` equal to their
    position inside that subspace; ``-1`` marks unfactorized modes.
    """

    alpha: int
    beta: int
    lambda0: complex
    correction: complex
    left_factor: np.ndarray | None = field(default=None, repr=False)
    right_factor: np.ndarray | None = field(default=None, repr=False)

    @property
    def value(self) -> complex:
        return self.lambda0 + self.correction


@dataclass(frozen=True)
class DegeneracyResolver:
    """Matrix whose eigenvalues give the corrections of a degenerate subspace.

    ``scale`` converts its eigenvalues into eigenvalue corrections
    (``1/Gamma`` for the stripe-0 Markov matrix, ``2/Gamma`` for the T matrices).
    """

    kind: str
    matrix: np.ndarray
    resolved_corrections: np.ndarray
    scale: float


@dataclass(frozen=True)
class StripeSpectrum:
    c: complex
    members: tuple[int, ...]
    records: tuple[StripeRecord, ...]
    resolvers: tuple[DegeneracyResolver, ...] = ()
    flags: dict = field(default_factory=dict)

    @property
    def stripe_key(self) -> tuple[complex, tuple[int, ...]]:
        return self.c, self.members

    def eigenvalues(self) -> np.ndarray:
        return np.array([r.value for r in self.records], dtype=complex)

    def zeroth_order(self) -> np.ndarray:
        return np.array([r.lambda0 for r in self.records], dtype=complex)

    def __len__(self):
        return len(self.records)


@dataclass(frozen=True)
class EffectiveModel:
    """Effective Lindblad generator of the zero stripe on H1."""

    h_d: np.ndarray
    lamb_shift: np.ndarray
    effective_jumps: tuple[tuple[np.ndarray, float], ...]
    y_matrix: np.ndarray
    beta_matrix: np.ndarray
    gamma_matrix: np.ndarray

    def jump_operators(self) -> list[np.ndarray]:
        """Jumps with their rates folded in, ``sqrt(rate) * L``."""
        return [np.sqrt(rate) * op for op, rate in self.effective_jumps]


# ---------------------------------------------------------------------------
# small linear-algebra helpers


def _diag_elements(bra: np.ndarray, op: np.ndarray, ket: np.ndarray) -> np.ndarray:
    """``bra[i] @ op @ ket[:, i]`` for every i; ``bra`` holds rows, ``ket`` columns."""
    return np.einsum("ij,jk,ki->i", bra, op, ket)


def _eig_biorthogonal(op: np.ndarray):
    """Eigenvalues with right vectors (columns) and dual left vectors (rows)."""
    w, right = scipy.linalg.eig(op)
    right = right / np.linalg.norm(right, axis=0)
    sv = np.linalg.svd(right, compute_uv=False)
    if sv[-1] < 1e-8 * sv[0]:
        raise DefectiveOperatorError("zeroth-order operator is defective within tolerance")
    left = np.linalg.inv(right)
    return w, right, left


def _clusters(values: np.ndarray, tol: float) -> list[np.ndarray]:
    """Group indices whose values are within ``tol`` (single linkage)."""
    values = np.asarray(values, dtype=complex)
    n = len(values)
    if n == 0:
        return []
    pts = np.column_stack([values.real, values.imag])
    pairs = cKDTree(pts).query_pairs(tol, output_type="ndarray")
    adj = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    _, labels = connected_components(adj, directed=False)
    return [np.flatnonzero(labels == lab) for lab in np.unique(labels)]


def _lambda0_tol(*ops: np.ndarray) -> float:
    return LAMBDA0_TOL * max([1.0] + [float(np.linalg.norm(o, 2)) for o in ops])


def _project(idx, apply_v: Callable[[int], np.ndarray], pair: Callable[[int, np.ndarray], complex]):
    """Matrix ``P[i, j] = <left_i | V | right_j>`` restricted to ``idx``."""
    n = len(idx)
    p = np.empty((n, n), dtype=complex)
    for jj, j in enumerate(idx):
        vj = apply_v(j)
        for ii, i in enumerate(idx):
            p[ii, jj] = pair(i, vj)
    return p


def time_reversal(n_spins: int) -> np.ndarray:
    """Unitary part ``Y`` of the spin-flip antiunitary ``Theta = Y K``."""
    iy = np.array([[0, 1], [-1, 0]], dtype=complex)
    return kron_all([iy] * n_spins)


# ---------------------------------------------------------------------------
# general machinery (any dissipator)


def uw_operators(model: ChainModel, k: int, s: int) -> tuple[np.ndarray, np.ndarray]:
    """``U_{k,s} = sum_n B[n,s,k] g_n^+`` and ``W_{k,s} = sum_n A[n,s,k] g_n^+``."""
    co = model.coeffs
    gd = np.array([dagger(g) for g in co.g])
    u = np.einsum("n,nij->ij", co.b[:, s, k], gd)
    w = np.einsum("n,nij->ij", co.a[:, s, k], gd)
    return u, w


def _second_order_weights(model: ChainModel, k: int, s: int, cls: Sequence[int]):
    """Summed coefficient matrices ``G[m,z], E[z,m], D[z,m]`` of the 1/Gamma term."""
    basis, t = model.basis, model.tensors
    size = basis.size
    weights = np.zeros(size, dtype=complex)
    for n in range(size):
        if n not in cls:
            weights[n] = 1.0 / (basis.c[n] - basis.c[k])
    gmat = np.einsum("n,nmz->mz", weights, t.gamma[:, s, k])
    emat = np.einsum("n,nzm->zm", weights, t.eps[:, s, k])
    dmat = np.einsum("n,nzm->zm", weights, t.delta[:, s, k])
    # only m, z > 0 enter; the label-0 terms vanish identically for trace-preserving D
    for x in (gmat, emat, dmat):
        x[0, :] = 0
        x[:, 0] = 0
    return gmat, emat, dmat


def _second_order_action(model: ChainModel, k: int, s: int, cls: Sequence[int]):
    """Return ``(terms, left_op, right_op)`` with ``V[X] = -sum c g_m X g_z^+ + P X + X Q``."""
    g = model.coeffs.g
    gmat, emat, dmat = _second_order_weights(model, k, s, cls)
    size = len(g)
    d1 = g[0].shape[0]
    p = np.zeros((d1, d1), dtype=complex)
    q = np.zeros((d1, d1), dtype=complex)
    terms = []
    for m in range(1, size):
        for z in range(1, size):
            gzgm = dagger(g[z]) @ g[m]
            p += emat[z, m] * gzgm
            q += dmat[z, m] * gzgm
            if gmat[m, z] != 0:
                terms.append((gmat[m, z], g[m], dagger(g[z])))
    return terms, p, q


def stripe_generator(model: ChainModel, cls: Sequence[int], gamma_strength: float):
    """Vectorized generator of a stripe class: ``(zeroth, first)``.

    ``zeroth`` includes ``Gamma c_k``; ``first`` is the full 1/Gamma term. Both act
    on the stacked row-vectorized components ``(R_s)`` for ``s`` in ``cls``.
    """
    d1 = model.split.d1
    n = d1 * d1
    deg = len(cls)
    eye = np.eye(d1, dtype=complex)
    zeroth = np.zeros((deg * n, deg * n), dtype=complex)
    first = np.zeros_like(zeroth)
    for a, k in enumerate(cls):
        for b, s in enumerate(cls):
            u, w = uw_operators(model, k, s)
            blk = -1j * (np.kron(u, eye) - np.kron(eye, w.T))
            if a == b:
                blk = blk + gamma_strength * model.basis.c[k] * np.eye(n)
            zeroth[a * n:(a + 1) * n, b * n:(b + 1) * n] = blk
            terms, p, q = _second_order_action(model, k, s, cls)
            v = np.kron(p, eye) + np.kron(eye, q.T)
            for coef, left, right in terms:
                v -= coef * np.kron(left, right.T)
            first[a * n:(a + 1) * n, b * n:(b + 1) * n] = v / gamma_strength
    return zeroth, first


def general_degenerate_stripe(model: ChainModel, cls: Sequence[int], gamma_strength: float) -> StripeSpectrum:
    """Eigenvalues of the assembled stripe generator, solved directly.

    Records are paired with zeroth-order eigenvalues by optimal matching; their
    ``correction`` therefore contains all orders the truncated generator keeps.
    """
    cls = tuple(cls)
    zeroth, first = stripe_generator(model, cls, gamma_strength)
    lam = scipy.linalg.eigvals(zeroth + first)
    lam0 = scipy.linalg.eigvals(zeroth)
    cost = np.abs(lam0[:, None] - lam[None, :])
    rows, cols = linear_sum_assignment(cost)
    records = tuple(StripeRecord(-1, -1, complex(lam0[r]), complex(lam[c] - lam0[r])) for r, c in zip(rows, cols))
    return StripeSpectrum(complex(model.basis.c[cls[0]]), cls, records, flags={"method": "direct"})


def general_stripe_first_order(model: ChainModel, cls: Sequence[int], gamma_strength: float) -> StripeSpectrum:
    """Degenerate first-order perturbation theory on the vectorized stripe generator."""
    cls = tuple(cls)
    zeroth, first = stripe_generator(model, cls, gamma_strength)
    lam0, right, left = _eig_biorthogonal(zeroth)
    tol = _lambda0_tol(zeroth - gamma_strength * model.basis.c[cls[0]] * np.eye(len(zeroth)))
    corr = np.empty(len(lam0), dtype=complex)
    proj = left @ first @ right
    n_multi = 0
    for idx in _clusters(lam0, tol):
        if len(idx) == 1:
            corr[idx[0]] = proj[idx[0], idx[0]]
        else:
            n_multi += 1
            corr[idx] = np.linalg.eigvals(proj[np.ix_(idx, idx)])
    records = tuple(StripeRecord(-1, -1, complex(l0), complex(cr)) for l0, cr in zip(lam0, corr))
    return StripeSpectrum(complex(model.basis.c[cls[0]]), cls, records,
                          flags={"method": "first-order", "degenerate_clusters": n_multi})


def stripe_nondegenerate_general(model: ChainModel, k: int, gamma_strength: float) -> StripeSpectrum:
    """Factorized zeroth order plus the first-order correction for a simple ``c_k``."""
    basis = model.basis
    cls = basis.class_of(k)
    if len(cls) != 1:
        raise ValueError(f"c_{k} is degenerate (class {cls}); use general_degenerate_stripe")
    co = model.coeffs
    g = co.g
    ck = basis.c[k]
    uk, wk = uw_operators(model, k, k)
    u, ru, lu = _eig_biorthogonal(uk)
    w, rw, lw = _eig_biorthogonal(wk)
    d1 = len(u)
    lam0 = gamma_strength * ck - 1j * (u[:, None] - w[None, :])

    gmat, emat, dmat = _second_order_weights(model, k, k, cls)
    size = len(g)
    gm_a = np.array([_diag_elements(lu, g[m], ru) for m in range(size)])        # <alpha|g_m|alpha>
    gz_b = np.array([_diag_elements(lw, dagger(g[z]), rw) for z in range(size)])  # <beta~|g_z^+|beta~>
    pa = np.zeros(d1, dtype=complex)
    qb = np.zeros(d1, dtype=complex)
    for m in range(1, size):
        for z in range(1, size):
            gzgm = dagger(g[z]) @ g[m]
            if emat[z, m] != 0:
                pa += emat[z, m] * _diag_elements(lu, gzgm, ru)
            if dmat[z, m] != 0:
                qb += dmat[z, m] * _diag_elements(lw, gzgm, rw)
    corr = (-np.einsum("mz,ma,zb->ab", gmat, gm_a, gz_b) + pa[:, None] + qb[None, :]) / gamma_strength

    terms, p, q = _second_order_action(model, k, k, cls)

    def apply_v(x):
        out = p @ x + x @ q
        for coef, left, right in terms:
            out -= coef * left @ x @ right
        return out / gamma_strength

    flat0 = lam0.reshape(-1)
    flatc = corr.reshape(-1).copy()
    tol = _lambda0_tol(uk, wk)
    n_multi = 0
    for idx in _clusters(flat0, tol):
        if len(idx) == 1:
            continue
        n_multi += 1
        ab = [divmod(int(i), d1) for i in idx]
        proj = _project(
            range(len(idx)),
            lambda j: apply_v(np.outer(ru[:, ab[j][0]], lw[ab[j][1]])),
            lambda i, x: lu[ab[i][0]] @ x @ rw[:, ab[i][1]],
        )
        flatc[idx] = np.linalg.eigvals(proj)
    records = []
    for i, (l0, cr) in enumerate(zip(flat0, flatc)):
        a, b = divmod(i, d1)
        records.append(StripeRecord(a, b, complex(l0), complex(cr), ru[:, a], lw[b]))
    return StripeSpectrum(complex(ck), cls, tuple(records),
                          flags={"method": "factorized", "degenerate_clusters": n_multi})


# ---------------------------------------------------------------------------
# stripe 0: effective Lindblad dynamics on H1


def effective_model_stripe0(model: ChainModel) -> EffectiveModel:
    """Dissipation-projected Hamiltonian, Lamb shift and effective jumps.

    ``Y[m,n] = -tr(phi_m^+ phi_n psi_0) / conj(c_m)`` for ``m, n > 0``;
    ``gamma = Y + Y^+`` and ``beta = (Y - Y^+) / 2i``.
    """
    basis = model.basis
    g = model.coeffs.g
    size = basis.size
    c = basis.c
    if np.any(np.abs(c[1:]) <= 1e-12):
        raise DissipatorError("a nonzero-label dissipator eigenvalue vanishes")
    psi0 = basis.psi[0]
    y = np.empty((size - 1, size - 1), dtype=complex)
    for m in range(1, size):
        for n in range(1, size):
            y[m - 1, n - 1] = -np.trace(dagger(basis.phi[m]) @ basis.phi[n] @ psi0) / np.conj(c[m])
    gamma = y + dagger(y)
    beta = (y - dagger(y)) / 2j
    gs = g[1:]
    d1 = g[0].shape[0]
    lamb = np.zeros((d1, d1), dtype=complex)
    for m in range(size - 1):
        for n in range(size - 1):
            if beta[m, n] != 0:
                lamb += beta[m, n] * dagger(gs[m]) @ gs[n]
    rates, vecs = np.linalg.eigh(gamma)
    scale = max(1.0, float(np.max(np.abs(rates))))
    if rates[0] < -1e-10 * scale:
        raise DissipatorError(f"effective rate matrix is not positive semidefinite ({rates[0]:.3e})")
    jumps = []
    for p in range(len(rates)):
        if rates[p] <= 1e-14 * scale:
            continue
        op = np.einsum("n,nij->ij", np.conj(vecs[:, p]), np.array(gs))
        jumps.append((op, float(rates[p])))
    return EffectiveModel(g[0], lamb, tuple(jumps), y, beta, gamma)


def effective_generator_stripe0(eff: EffectiveModel, gamma_strength: float) -> np.ndarray:
    """Vectorized ``-i[h_d + H_a/Gamma, .] + D_eff/Gamma`` on H1."""
    from .operators import commutator_superop, lindblad_superop

    d1 = eff.h_d.shape[0]
    gen = commutator_superop(eff.h_d + eff.lamb_shift / gamma_strength)
    gen = gen + lindblad_superop(list(eff.effective_jumps), dim=d1) / gamma_strength
    return gen


def markov_matrix(jumps: Sequence[np.ndarray], basis_vectors: np.ndarray) -> np.ndarray:
    """``M[a,b] = sum_p |<a|L_p|b>|^2`` off the diagonal, zero column sums."""
    d = basis_vectors.shape[1]
    m = np.zeros((d, d))
    for op in jumps:
        m += np.abs(dagger(basis_vectors) @ op @ basis_vectors) ** 2
    np.fill_diagonal(m, 0.0)
    m -= np.diag(m.sum(axis=0))
    return m


def stripe0_eigenvalues(eff: EffectiveModel, gamma_strength: float) -> StripeSpectrum:
    """Zero-stripe eigenvalues from the effective model.

    Off-diagonal modes ``|alpha><beta|`` get the first-order Lindblad correction;
    the ``d1`` diagonal modes are resolved by the classical Markov matrix.
    """
    eps, vecs = np.linalg.eigh(eff.h_d)
    d1 = len(eps)
    jumps = eff.jump_operators()
    lam0 = 1j * (eps[None, :] - eps[:, None])  # row alpha, column beta
    ha = np.real(_diag_elements(dagger(vecs), eff.lamb_shift, vecs))
    corr = -1j * (ha[:, None] - ha[None, :])
    for op in jumps:
        ld = _diag_elements(dagger(vecs), op, vecs)
        nd = np.real(_diag_elements(dagger(vecs), dagger(op) @ op, vecs))
        corr = corr + np.outer(ld, np.conj(ld)) - 0.5 * nd[:, None] - 0.5 * nd[None, :]
    corr = corr / gamma_strength

    def apply_v(x):
        out = -1j * (eff.lamb_shift @ x - x @ eff.lamb_shift)
        for op in jumps:
            ldl = dagger(op) @ op
            out += op @ x @ dagger(op) - 0.5 * (ldl @ x + x @ ldl)
        return out / gamma_strength

    tol = _lambda0_tol(eff.h_d)
    records: list[StripeRecord] = []
    resolvers = []
    flags = {"accidental_clusters": 0, "method": "closed-form"}
    done = np.zeros((d1, d1), dtype=bool)
    for idx in _clusters(lam0.reshape(-1), tol):
        ab = [divmod(int(i), d1) for i in idx]
        diagonal = [a for a, b in ab if a == b]
        if len(idx) == 1:
            a, b = ab[0]
            records.append(StripeRecord(a, b, complex(lam0[a, b]), complex(corr[a, b]), vecs[:, a], vecs[:, b].conj()))
        elif len(diagonal) == len(idx):
            mm = markov_matrix(jumps, vecs)
            mu = np.linalg.eigvals(mm)
            mu = mu[np.lexsort((mu.imag, -mu.real))]
            resolvers.append(DegeneracyResolver("markov", mm, mu, 1.0 / gamma_strength))
            records.extend(StripeRecord(i, i, 0j, complex(m / gamma_strength)) for i, m in enumerate(mu))
        else:
            flags["accidental_clusters"] += 1
            proj = _project(
                range(len(idx)),
                lambda j: apply_v(np.outer(vecs[:, ab[j][0]], vecs[:, ab[j][1]].conj())),
                lambda i, x: vecs[:, ab[i][0]].conj() @ x @ vecs[:, ab[i][1]],
            )
            vals = np.linalg.eigvals(proj)
            l0 = complex(np.mean(lam0.reshape(-1)[idx]))
            records.extend(StripeRecord(-1, -1, l0, complex(v)) for v in vals)
        for a, b in ab:
            done[a, b] = True
    assert done.all()
    return StripeSpectrum(0j, (0,), tuple(records), tuple(resolvers), flags)


# ---------------------------------------------------------------------------
# boundary dissipator closed forms


def _require_boundary(model: ChainModel) -> float:
    if model.dissipator.target is None:
        raise DissipatorError("closed-form stripes need the two-jump boundary dissipator")
    return float(model.dissipator.target[2])


def stripe3_operator(model: ChainModel) -> np.ndarray:
    """``U_3 = W_3 = g_0 - mu g_3^+``."""
    mu = _require_boundary(model)
    g = model.coeffs.g
    return g[0] - mu * dagger(g[3])


def stripe3_corrections(model: ChainModel, gamma_strength: float) -> StripeSpectrum:
    """Stripe ``c_3 = -1``: closed-form corrections and the diagonal T matrix."""
    mu = _require_boundary(model)
    g = model.coeffs.g
    g1, g2, g3 = g[1], g[2], g[3]
    u3 = stripe3_operator(model)
    eps, v = np.linalg.eigh(0.5 * (u3 + dagger(u3)))
    vd = dagger(v)
    d1 = len(eps)
    wp, wm, w3 = 1 + mu, 1 - mu, (1 - mu**2) / 4

    d = {n: _diag_elements(vd, g[n], v) for n in (1, 2, 3)}
    nn = {n: np.real(_diag_elements(vd, dagger(g[n]) @ g[n], v)) for n in (1, 2, 3)}

    def pair(a, b):
        return a[:, None] + b[None, :]

    corr = (
        wp * (pair(nn[2], nn[2]) + 2 * np.outer(d[1], np.conj(d[1])))
        + wm * (pair(nn[1], nn[1]) + 2 * np.outer(d[2], np.conj(d[2])))
        + w3 * (pair(nn[3], nn[3]) - 2 * np.outer(d[3], np.conj(d[3])))
    ) / gamma_strength
    lam0 = -gamma_strength - 1j * (eps[:, None] - eps[None, :])

    def apply_v(x):
        def e(gn, gm):
            ndn = dagger(gn) @ gn
            return ndn @ x + x @ ndn + 2 * gm @ x @ dagger(gm)

        dg3 = g3 @ x @ dagger(g3) - 0.5 * (dagger(g3) @ g3 @ x + x @ dagger(g3) @ g3)
        return (wp * e(g2, g1) + wm * e(g1, g2) - 2 * w3 * dg3) / gamma_strength

    wmat = {n: np.abs(vd @ g[n] @ v) ** 2 for n in (1, 2, 3)}
    w_mu = wp * wmat[1] + wm * wmat[2] - w3 * wmat[3]
    f_mu = wp * wmat[2] + wm * wmat[1] + w3 * wmat[3]
    tmat = w_mu.copy()
    tmat[np.diag_indices(d1)] = f_mu.sum(axis=0) + np.diag(w_mu)

    return _assemble_boundary_stripe(
        c=-1.0, members=(3,), lam0=lam0, corr=corr, vecs=v, apply_v=apply_v,
        diag_matrix=tmat, diag_kind="stripe3-T", h_ops=(u3,), gamma_strength=gamma_strength, mu=mu,
    )


def _assemble_boundary_stripe(*, c, members, lam0, corr, vecs, apply_v, diag_matrix, diag_kind,
                              h_ops, gamma_strength, mu):
    d1 = lam0.shape[0]
    tol = _lambda0_tol(*h_ops)
    records: list[StripeRecord] = []
    resolvers = []
    flags = {"accidental_clusters": 0, "method": "closed-form"}
    for idx in _clusters(lam0.reshape(-1), tol):
        ab = [divmod(int(i), d1) for i in idx]
        if len(idx) == 1:
            a, b = ab[0]
            records.append(StripeRecord(a, b, complex(lam0[a, b]), complex(corr[a, b]), vecs[:, a], vecs[:, b].conj()))
        elif all(a == b for a, b in ab) and len(idx) == d1:
            q = np.linalg.eigvals(diag_matrix)
            q = _check_real(q, diag_matrix, diag_kind, mu)
            resolvers.append(DegeneracyResolver(diag_kind, diag_matrix, q, 2.0 / gamma_strength))
            l0 = complex(lam0[0, 0])
            records.extend(StripeRecord(i, i, l0, complex(2 * x / gamma_strength)) for i, x in enumerate(q))
        else:
            flags["accidental_clusters"] += 1
            proj = _project(
                range(len(idx)),
                lambda j: apply_v(np.outer(vecs[:, ab[j][0]], vecs[:, ab[j][1]].conj())),
                lambda i, x: vecs[:, ab[i][0]].conj() @ x @ vecs[:, ab[i][1]],
            )
            l0 = complex(np.mean(lam0.reshape(-1)[idx]))
            records.extend(StripeRecord(-1, -1, l0, complex(v)) for v in np.linalg.eigvals(proj))
    return StripeSpectrum(complex(c), members, tuple(records), tuple(resolvers), flags)


def _check_real(values: np.ndarray, matrix: np.ndarray, kind: str, mu: float) -> np.ndarray:
    values = values[np.lexsort((values.imag, -values.real))]
    scale = max(1.0, float(np.linalg.norm(matrix, 2)))
    if np.max(np.abs(values.imag), initial=0.0) > REAL_TOL * scale:
        warnings.warn(f"{kind} eigenvalues are not real (mu={mu})", RealnessWarning, stacklevel=3)
        return values
    return values.real.astype(complex)


def flipped_field_operators(model: ChainModel) -> tuple[np.ndarray, np.ndarray]:
    """``f_+ = g_0 + (1-mu)/2 g_3^+`` and ``f_- = g_0 - (1+mu)/2 g_3^+``."""
    mu = _require_boundary(model)
    g = model.coeffs.g
    return g[0] + (1 - mu) / 2 * dagger(g[3]), g[0] - (1 + mu) / 2 * dagger(g[3])


def paired_eigenbases(f_plus: np.ndarray, f_minus: np.ndarray):
    """Eigenvalues of ``f_+`` with eigenvectors of ``f_+`` and ``f_-`` sharing labels.

    The partner of ``|alpha>`` is its spin-flipped image ``Y |alpha>*``, which
    is an eigenvector of ``f_-`` with the same eigenvalue whenever the two
    operators differ only by the sign of a real boundary field. Otherwise the
    sorted eigenvectors of ``f_-`` are used and the result is flagged.
    """
    eps, vp = np.linalg.eigh(0.5 * (f_plus + dagger(f_plus)))
    eps_m, vm_sorted = np.linalg.eigh(0.5 * (f_minus + dagger(f_minus)))
    scale = max(1.0, float(np.max(np.abs(eps))))
    if np.max(np.abs(eps - eps_m)) > 1e-8 * scale:
        raise PairingError("f_+ and f_- are not isospectral")
    n_spins = int(round(np.log2(len(eps))))
    if 2**n_spins == len(eps):
        vm = time_reversal(n_spins) @ np.conj(vp)
        resid = np.linalg.norm(f_minus @ vm - vm * eps, axis=0)
        if np.max(resid) <= 1e-8 * scale:
            return eps, vp, vm, False
    gaps = np.diff(eps)
    if gaps.size and np.min(gaps) <= 1e-9 * scale:
        raise PairingError("degenerate flipped-field spectrum without a spin-flip partner map")
    return eps, vp, vm_sorted, True


def stripe12_operators(model: ChainModel):
    """Quantities shared by the closed-form stripe-1&2 routines."""
    mu = _require_boundary(model)
    g = model.coeffs.g
    fp, fm = flipped_field_operators(model)
    eps, a, t, fallback = paired_eigenbases(fp, fm)
    return mu, g[1], g[2], fp, fm, eps, a, t, fallback


def stripe12_block_t(model: ChainModel) -> np.ndarray:
    """Block matrix ``[[T11, T12], [T21, T22]]`` of the diagonal modes of stripes 1&2."""
    mu, g1, g2, _, _, eps, a, t, _ = stripe12_operators(model)
    return _block_t(mu, g1, g2, a, t)


def _block_t(mu, g1, g2, a, t):
    ad, td = dagger(a), dagger(t)
    g1a, g2a = ad @ g1 @ a, ad @ g2 @ a          # <alpha|g|beta>
    g1t, g2t = td @ g1 @ t, td @ g2 @ t          # <alpha~|g|beta~>
    ov = ad @ t                                   # <alpha|beta~>
    x12 = ad @ dagger(g1) @ g2 @ t                # <alpha|g1^+ g2|beta~>
    x21 = td @ dagger(g2) @ g1 @ a                # <alpha~|g2^+ g1|beta>
    wp, wm = 1 + mu, 1 - mu
    # <beta~|g^+|alpha~> = conj(<alpha~|g|beta~>), elementwise in (alpha, beta)
    w1 = -wp * g1a * np.conj(g1t) - wm * g2a * np.conj(g2t)
    w2 = -wp * g1t * np.conj(g1a) - wm * g2t * np.conj(g2a)
    # f(alpha, beta) = mu |<beta~|g2|alpha~>|^2 - mu |<beta|g1|alpha>|^2
    f = mu * np.abs(g2t.T) ** 2 - mu * np.abs(g1a.T) ** 2
    w12 = wm * ov * x12.T + wp * ov.T * x12
    w21 = wm * np.conj(ov.T) * x21.T + wp * np.conj(ov) * x21
    t11 = w1.copy()
    t22 = w2.copy()
    fsum = f.sum(axis=1)
    t11[np.diag_indices_from(t11)] = np.diag(w1) + fsum
    t22[np.diag_indices_from(t22)] = np.diag(w2) + fsum
    return np.block([[t11, w12], [w21, t22]])


def stripe12_spectrum(model: ChainModel, gamma_strength: float) -> StripeSpectrum:
    """Doubly degenerate stripe ``c_1 = c_2 = -1/2`` via 2x2 V matrices and the block T matrix."""
    mu, g1, g2, fp, fm, eps, a, t, fallback = stripe12_operators(model)
    d1 = len(eps)
    ad, td = dagger(a), dagger(t)
    wp, wm = 1 + mu, 1 - mu
    n11a = np.real(_diag_elements(ad, dagger(g1) @ g1, a))
    n22t = np.real(_diag_elements(td, dagger(g2) @ g2, t))
    d1a, d2a = _diag_elements(ad, g1, a), _diag_elements(ad, g2, a)
    d1t, d2t = _diag_elements(td, g1, t), _diag_elements(td, g2, t)
    ov = _diag_elements(ad, np.eye(d1), t)                  # <alpha|alpha~>
    q12 = _diag_elements(ad, dagger(g1) @ g2, t)            # <alpha|g1^+ g2|alpha~>
    r21 = _diag_elements(td, dagger(g2) @ g1, a)            # <alpha~|g2^+ g1|alpha>

    v11 = -wp * np.outer(d1a, np.conj(d1t)) - wm * np.outer(d2a, np.conj(d2t)) - mu * n11a[:, None] + mu * n22t[None, :]
    v22 = -wp * np.outer(d1t, np.conj(d1a)) - wm * np.outer(d2t, np.conj(d2a)) + mu * n22t[:, None] - mu * n11a[None, :]
    v12 = wp * np.outer(ov, q12) + wm * np.outer(q12, ov)
    v21 = wp * np.outer(r21, np.conj(ov)) + wm * np.outer(np.conj(ov), r21)
    tr = v11 + v22
    disc = np.sqrt((v11 - v22) ** 2 + 4 * v12 * v21)
    v_plus, v_minus = (tr + disc) / 2, (tr - disc) / 2
    lam0 = -gamma_strength / 2 - 1j * (eps[:, None] - eps[None, :])

    def apply_v(pair_state):
        r1, r2 = pair_state
        o1 = (-wp * g1 @ r1 @ dagger(g1) - wm * g2 @ r1 @ dagger(g2) - mu * dagger(g1) @ g1 @ r1
              + mu * r1 @ dagger(g2) @ g2 + wm * dagger(g1) @ g2 @ r2 + wp * r2 @ dagger(g1) @ g2)
        o2 = (-wp * g1 @ r2 @ dagger(g1) - wm * g2 @ r2 @ dagger(g2) + mu * dagger(g2) @ g2 @ r2
              - mu * r2 @ dagger(g1) @ g1 + wp * dagger(g2) @ g1 @ r1 + wm * r1 @ dagger(g2) @ g1)
        return 2 * o1 / gamma_strength, 2 * o2 / gamma_strength

    tol = _lambda0_tol(fp, fm)
    records: list[StripeRecord] = []
    resolvers = []
    flags = {"accidental_clusters": 0, "pairing_fallback": bool(fallback), "method": "closed-form"}
    zero = np.zeros((d1, d1), dtype=complex)
    for idx in _clusters(lam0.reshape(-1), tol):
        ab = [divmod(int(i), d1) for i in idx]
        if len(idx) == 1:
            x, y = ab[0]
            for v in (v_plus[x, y], v_minus[x, y]):
                records.append(StripeRecord(x, y, complex(lam0[x, y]), complex(2 * v / gamma_strength), a[:, x], t[:, y].conj()))
        elif all(x == y for x, y in ab) and len(idx) == d1:
            tm = _block_t(mu, g1, g2, a, t)
            q = _check_real(np.linalg.eigvals(tm), tm, "stripe12-T", mu)
            resolvers.append(DegeneracyResolver("stripe12-T", tm, q, 2.0 / gamma_strength))
            records.extend(StripeRecord(i, i, complex(-gamma_strength / 2), complex(2 * x / gamma_strength))
                           for i, x in enumerate(q))
        else:
            flags["accidental_clusters"] += 1
            # modes: (|alpha><beta~|, 0) and (0, |alpha~><beta|) for each (alpha, beta)
            modes = [(x, y, 0) for x, y in ab] + [(x, y, 1) for x, y in ab]

            def right(j):
                x, y, comp = modes[j]
                if comp == 0:
                    return np.outer(a[:, x], t[:, y].conj()), zero
                return zero, np.outer(t[:, x], a[:, y].conj())

            def pair(i, out):
                x, y, comp = modes[i]
                if comp == 0:
                    return a[:, x].conj() @ out[0] @ t[:, y]
                return t[:, x].conj() @ out[1] @ a[:, y]

            proj = _project(range(len(modes)), lambda j: apply_v(right(j)), pair)
            l0 = complex(np.mean(lam0.reshape(-1)[idx]))
            records.extend(StripeRecord(-1, -1, l0, complex(v)) for v in np.linalg.eigvals(proj))
    return StripeSpectrum(-0.5 + 0j, (1, 2), tuple(records), tuple(resolvers), flags)


def stripe12_superop(model: ChainModel, gamma_strength: float) -> np.ndarray:
    """Vectorized 1/Gamma term acting on stacked ``(r_1, r_2)`` for the boundary dissipator."""
    mu = _require_boundary(model)
    g = model.coeffs.g
    g1, g2 = g[1], g[2]
    d1 = g1.shape[0]
    eye = np.eye(d1, dtype=complex)
    wp, wm = 1 + mu, 1 - mu

    def sw(q, w):
        return np.kron(q, w.T)

    b11 = -wp * sw(g1, dagger(g1)) - wm * sw(g2, dagger(g2)) - mu * sw(dagger(g1) @ g1, eye) + mu * sw(eye, dagger(g2) @ g2)
    b12 = wm * sw(dagger(g1) @ g2, eye) + wp * sw(eye, dagger(g1) @ g2)
    b22 = -wp * sw(g1, dagger(g1)) - wm * sw(g2, dagger(g2)) + mu * sw(dagger(g2) @ g2, eye) - mu * sw(eye, dagger(g1) @ g1)
    b21 = wp * sw(dagger(g2) @ g1, eye) + wm * sw(eye, dagger(g2) @ g1)
    return 2 * np.block([[b11, b12], [b21, b22]]) / gamma_strength


# ---------------------------------------------------------------------------
# full perturbative spectrum


def zeno_spectrum(model: ChainModel, gamma_strength: float, method: str = "closed-form") -> list[StripeSpectrum]:
    """All stripes of the perturbative spectrum.

    ``method`` is ``"closed-form"`` (boundary dissipator only), ``"general"``
    (factorized or first-order formulas from the coefficient tensors) or
    ``"direct"`` (eigensolve every assembled stripe generator).
    """
    basis = model.basis
    if method == "closed-form":
        _require_boundary(model)
        return [
            stripe0_eigenvalues(effective_model_stripe0(model), gamma_strength),
            stripe12_spectrum(model, gamma_strength),
            stripe3_corrections(model, gamma_strength),
        ]
    stripes = []
    for cls in basis.degeneracy_classes:
        if method == "direct":
            stripes.append(general_degenerate_stripe(model, cls, gamma_strength))
        elif method == "general":
            if cls == (0,):
                stripes.append(stripe0_eigenvalues(effective_model_stripe0(model), gamma_strength))
            elif len(cls) == 1:
                stripes.append(stripe_nondegenerate_general(model, cls[0], gamma_strength))
            else:
                stripes.append(general_stripe_first_order(model, cls, gamma_strength))
        else:
            raise ValueError(f"unknown method {method!r}")
    return stripes


def all_eigenvalues(stripes: Sequence[StripeSpectrum]) -> np.ndarray:
    return np.concatenate([s.eigenvalues() for s in stripes])


# ---------------------------------------------------------------------------
# diagnostics


@dataclass(frozen=True)
class KolmogorovResult:
    passed: bool
    max_violation: float


def kolmogorov_check(m: np.ndarray, tol: float = 1e-8) -> KolmogorovResult:
    """Cycle condition ``M_ab M_bc M_ca = M_ac M_cb M_ba`` over distinct triples.

    The violation is measured relative to the largest off-diagonal entry cubed.
    """
    m = np.asarray(m)
    n = m.shape[0]
    off = m.copy()
    np.fill_diagonal(off, 0)
    if np.any(off.real < -1e-12 * max(1.0, np.max(np.abs(off)))):
        raise ValueError("off-diagonal entries must be non-negative")
    scale = float(np.max(np.abs(off))) ** 3
    if n < 3 or scale == 0:
        return KolmogorovResult(True, 0.0)
    worst = 0.0
    idx = np.arange(n)
    for a in range(n):
        fwd = off[a][:, None] * off * off[:, a][None, :]  # M_ab M_bc M_ca
        bwd = off[:, a][:, None] * off.T * off[a][None, :]  # M_ba M_cb M_ac
        diff = np.abs(fwd - bwd)
        mask = (idx[:, None] != idx[None, :]) & (idx[:, None] != a) & (idx[None, :] != a)
        worst = max(worst, float(np.max(np.where(mask, diff, 0.0))))
    rel = worst / scale
    return KolmogorovResult(rel <= tol, rel)


def two_qubit_closed_forms(gamma_aniso: float, delta: float, gamma_strength: float) -> np.ndarray:
    """The 16 near-Zeno eigenvalues of the two-qubit chain targeted to spin up.

    Couplings are ``(1, gamma_aniso, delta)``; grouped as 4 (stripe 0),
    8 (stripes 1&2) and 4 (stripe 3).
    """
    if delta == 0:
        raise ValueError("delta = 0 (free-fermion point) is excluded")
    gam = gamma_strength
    gp = 4 * (1 + gamma_aniso**2)
    gm = 4 * (1 - gamma_aniso**2)
    s0 = [0, -2 * gp / gam, -gp / gam + 2j * delta, -gp / gam - 2j * delta]
    s12 = [-gam / 2, -gam / 2, -gam / 2 + 2 * gm / gam, -gam / 2 - 2 * gm / gam]
    s12 += [-gam / 2 + a * 8 * gamma_aniso / gam + b * 2j * delta for a in (1, -1) for b in (1, -1)]
    s3 = [-gam, -gam + 2 * gp / gam, -gam + gp / gam + 2j * delta, -gam + gp / gam - 2j * delta]
    return np.array(s0 + s12 + s3, dtype=complex)
