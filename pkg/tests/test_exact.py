import numpy as np
import pytest

from zenospec.exact import (
    EigensolverError,
    KernelError,
    canonical_order,
    eig_general,
    exact_liouvillian_spectrum,
    steady_state,
    steady_state_of,
)
from zenospec.model import XYZChainConfig, full_liouvillian
from zenospec.operators import devectorize, lindblad_superop
from zenospec.zeno import two_qubit_closed_forms

from conftest import FIG1, FIG3, match_cost, multiset_distance, random_matrix


def test_eig_general_canonical_sort():
    w, _ = eig_general(np.diag([1, 2j, -3]))
    # ascending real part: -3, then 2i (Re 0), then 1
    np.testing.assert_allclose(w, [-3, 2j, 1])


def test_eig_general_sigma_minus():
    sm = np.array([[0, 0], [1, 0]], dtype=complex)
    w, _ = eig_general(lindblad_superop([(sm, 1.0)]))
    np.testing.assert_allclose(w, [-1, -0.5, -0.5, 0], atol=1e-14)


def test_eig_general_residual(rng):
    m = random_matrix(rng, 10)
    w, v = eig_general(m)
    assert np.max(np.linalg.norm(m @ v - v * w, axis=0)) <= 1e-8 * np.linalg.norm(m, 2)


def test_eig_general_rejects_nonfinite():
    with pytest.raises(EigensolverError):
        eig_general(np.array([[np.nan, 0], [0, 1]]))


def test_canonical_order_ties_stable():
    vals = np.array([1 + 1j, 1 - 1j, 1 + 1j, -2])
    np.testing.assert_array_equal(canonical_order(vals), [3, 1, 0, 2])


def test_fig1_stripes_at_gamma_20():
    spec = exact_liouvillian_spectrum(XYZChainConfig(**FIG1, gamma_strength=20.0))
    lam = spec.eigenvalues
    assert len(lam) == 1024
    centres = np.array([0, -10, -20])
    nearest = centres[np.argmin(np.abs(lam.real[:, None] - centres), axis=1)]
    assert np.max(np.abs(lam.real - nearest)) < 5


def test_decoupled_n4_spectrum():
    lam = exact_liouvillian_spectrum(XYZChainConfig(4, (0, 0, 0), 0.3, 0.1, 0.5, 6.0)).eigenvalues
    np.testing.assert_allclose(lam.real, np.repeat([-6, -3, 0], [256, 512, 256]), atol=1e-9)


def test_two_qubit_gamma_100_matches_closed_forms():
    cfg = XYZChainConfig(**FIG3, gamma_strength=100.0)
    lam = exact_liouvillian_spectrum(cfg).eigenvalues
    closed = two_qubit_closed_forms(2.3, -0.61, 100.0)
    # residuals are O(1/Gamma^2) with a two-qubit constant of a few hundred
    assert multiset_distance(lam, closed) < 0.05


@pytest.mark.parametrize("params", [FIG3, dict(n_free=2, j_coupling=(0.4, -1.1, 0.9), theta=1.3, phi=0.5, mu=-0.3)])
def test_exact_spectrum_invariants(params):
    cfg = XYZChainConfig(**params, gamma_strength=7.0)
    lv = full_liouvillian(cfg)
    lam = exact_liouvillian_spectrum(cfg).eigenvalues
    assert len(lam) == 4 ** (cfg.n_free + 1)
    assert np.sum(np.abs(lam) <= 1e-9 * 7.0) == 1
    assert np.max(lam.real) <= 1e-9 * 7.0
    assert multiset_distance(lam, lam.conj()) <= 1e-8
    assert abs(lam.sum() - np.trace(lv)) <= 1e-8 * np.linalg.norm(lv, 2)


def test_steady_state_fig1():
    ss = steady_state(XYZChainConfig(**FIG1, gamma_strength=20.0))
    assert abs(np.trace(ss.rho) - 1) < 1e-12
    assert ss.residual <= 1e-9
    assert np.min(np.linalg.eigvalsh(ss.rho)) >= -1e-9
    np.testing.assert_allclose(ss.rho, ss.rho.conj().T)


def test_steady_state_zeno_pinning():
    pol = []
    for gamma in (100.0, 200.0):
        rho = steady_state(XYZChainConfig(**FIG3, gamma_strength=gamma)).rho
        r0 = rho.reshape(2, 2, 2, 2).trace(axis1=1, axis2=3)
        pol.append(np.real(r0[0, 0] - r0[1, 1]))
    dev = 1 - np.array(pol)
    assert np.all(dev >= -1e-12)
    assert dev[0] < 1e-2
    assert dev[1] / dev[0] == pytest.approx(0.25, rel=0.2)


def test_steady_state_degenerate_kernel():
    with pytest.raises(KernelError):
        steady_state(XYZChainConfig(2, (0, 0, 0), 0.0, 0.0, 1.0, 5.0))


def test_steady_state_of_residual():
    lv = full_liouvillian(XYZChainConfig(**FIG3, gamma_strength=3.0))
    ss = steady_state_of(lv)
    np.testing.assert_allclose(devectorize(lv @ ss.rho.reshape(-1)), 0, atol=1e-9)


def test_envelope():
    cfg = XYZChainConfig(11, (1, 1, 1))
    with pytest.raises(ValueError):
        exact_liouvillian_spectrum(cfg)
