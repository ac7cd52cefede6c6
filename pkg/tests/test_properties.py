"""Property-based checks over random operators and random chain parameters."""
import warnings

import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from zenospec.exact import KernelError, exact_liouvillian_spectrum, steady_state
from zenospec.model import (
    DissipatorSpec,
    XYZChainConfig,
    build_boundary_dissipator,
    build_model,
    dissipator_eigensystem,
    full_liouvillian,
)
from zenospec.operators import (
    HilbertSplit,
    commutator_superop,
    devectorize,
    kron,
    lindblad_superop,
    sandwich_superop,
    vectorize,
    weighted_partial_trace_first,
)
from zenospec.zeno import all_eigenvalues, zeno_spectrum

from conftest import multiset_distance

SETTINGS = settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])

seeds = st.integers(0, 2**32 - 1)
angles = st.floats(0, 2 * np.pi, allow_nan=False)
couplings = st.tuples(*[st.floats(-2, 2, allow_nan=False)] * 3)
mus = st.floats(-1, 1, allow_nan=False)


def cmat(rng, n, m=None):
    m = n if m is None else m
    return rng.normal(size=(n, m)) + 1j * rng.normal(size=(n, m))


def herm(rng, n):
    a = cmat(rng, n)
    return a + a.conj().T


def random_density(rng, n):
    a = cmat(rng, n)
    rho = a @ a.conj().T
    return rho / np.trace(rho)


@SETTINGS
@given(seeds, st.integers(1, 4), st.integers(1, 4))
def test_sandwich_acts_as_product(seed, n, k):
    rng = np.random.default_rng(seed)
    q, w, r = cmat(rng, n), cmat(rng, n), cmat(rng, n)
    np.testing.assert_allclose(devectorize(sandwich_superop(q, w) @ vectorize(r)), q @ r @ w, atol=1e-10)
    a, b, c = cmat(rng, n), cmat(rng, k), cmat(rng, 2)
    np.testing.assert_allclose(kron(kron(a, b), c), kron(a, kron(b, c)), atol=1e-12)


@SETTINGS
@given(seeds, st.integers(2, 3), st.integers(1, 3))
def test_partial_trace_against_loop(seed, d0, d1):
    rng = np.random.default_rng(seed)
    w, x = cmat(rng, d0), cmat(rng, d0 * d1)
    big = np.kron(w, np.eye(d1)) @ x
    expect = sum(big[i * d1:(i + 1) * d1, i * d1:(i + 1) * d1] for i in range(d0))
    np.testing.assert_allclose(weighted_partial_trace_first(w, x, HilbertSplit(d0, d1)), expect, atol=1e-10)


@SETTINGS
@given(seeds, st.integers(2, 4), st.integers(1, 3))
def test_lindbladian_preserves_trace_and_hermiticity(seed, n, n_jumps):
    rng = np.random.default_rng(seed)
    jumps = [(cmat(rng, n), float(r)) for r in rng.uniform(0, 2, n_jumps)]
    lv = commutator_superop(herm(rng, n)) + lindblad_superop(jumps)
    assert np.max(np.abs(vectorize(np.eye(n)) @ lv)) <= 1e-12 * max(1.0, np.linalg.norm(lv, 2))
    out = devectorize(lv @ vectorize(random_density(rng, n)))
    np.testing.assert_allclose(out, out.conj().T, atol=1e-10)


@SETTINGS
@given(angles, angles, mus)
def test_boundary_basis_biorthogonal(theta, phi, mu):
    basis = dissipator_eigensystem(build_boundary_dissipator(theta, phi, mu))
    gram = np.array([[np.trace(f @ p) for p in basis.psi] for f in basis.phi])
    np.testing.assert_allclose(gram, np.eye(len(basis.psi)), atol=1e-10)
    np.testing.assert_allclose(np.sort(basis.c.real), [-1, -0.5, -0.5, 0], atol=1e-12)


@SETTINGS
@given(seeds, st.integers(2, 3))
def test_random_dissipator_biorthogonal(seed, d0):
    rng = np.random.default_rng(seed)
    spec = DissipatorSpec(tuple((cmat(rng, d0), float(r)) for r in rng.uniform(0.2, 1.5, 2)))
    basis = dissipator_eigensystem(spec)
    gram = np.array([[np.trace(f @ p) for p in basis.psi] for f in basis.phi])
    np.testing.assert_allclose(gram, np.eye(d0 * d0), atol=1e-10)


@SETTINGS
@given(st.integers(1, 2), couplings, angles, angles, mus, st.floats(0.1, 50))
def test_exact_spectrum_properties(n, j, theta, phi, mu, gamma):
    cfg = XYZChainConfig(n, j, theta, phi, mu, gamma)
    lv = full_liouvillian(cfg)
    assert np.max(np.abs(vectorize(np.eye(cfg.dim)) @ lv)) <= 1e-12 * max(1.0, np.linalg.norm(lv, 2))
    lam = exact_liouvillian_spectrum(cfg).eigenvalues
    assert multiset_distance(lam, lam.conj()) <= 1e-8 * max(1.0, gamma)
    assert np.max(lam.real) <= 1e-8 * max(1.0, gamma)


@SETTINGS
@given(st.integers(1, 2), couplings, angles, angles, st.floats(-0.95, 0.95), st.floats(0.5, 50))
def test_ness(n, j, theta, phi, mu, gamma):
    # |mu| < 1 keeps both jump channels open, so the steady state is unique for generic couplings
    cfg = XYZChainConfig(n, j, theta, phi, mu, gamma)
    try:
        ss = steady_state(cfg)
    except KernelError:
        return  # degenerate kernel for special couplings is a reported error, not a wrong answer
    assert abs(np.trace(ss.rho) - 1) <= 1e-10
    lv = full_liouvillian(cfg)
    assert np.linalg.norm(lv @ vectorize(ss.rho)) <= 1e-9


@settings(max_examples=10, deadline=None)
@given(st.integers(1, 2), couplings, angles, angles, st.sampled_from([1.0, 0.5, -0.7]))
def test_perturbative_spectrum_counts_and_closure(n, j, theta, phi, mu):
    cfg = XYZChainConfig(n, j, theta, phi, mu, 1000.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        lam = all_eigenvalues(zeno_spectrum(build_model(cfg), 1000.0))
    assert len(lam) == 4 ** (n + 1)
    assert multiset_distance(lam, lam.conj()) <= 1e-6
