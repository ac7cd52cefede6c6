import warnings

import numpy as np
import pytest

from zenospec.analysis import (
    FitError,
    _discriminant_roots,
    GridTooCoarseError,
    MatchingError,
    StripeOverlapWarning,
    classify_stripes,
    compare_config,
    distinct_stripe_centers,
    ep_scan,
    fit_gamma_c,
    gamma_sweep,
    match_spectra,
    optimal_matching,
    track_eigenvalues,
)
from zenospec.exact import exact_liouvillian_spectrum
from zenospec.model import XYZChainConfig

from conftest import FIG1, FIG3

C_BOUNDARY = [0, -0.5, -0.5, -1]


def test_distinct_centres():
    np.testing.assert_array_equal(distinct_stripe_centers(C_BOUNDARY), [0, -0.5, -1])


def test_classify_example():
    cls = classify_stripes(np.array([-9.8 + 3j, 0.1j, -19.9]), C_BOUNDARY, 20.0, warn=False)
    np.testing.assert_array_equal(cls.centers[cls.labels], [-10, 0, -20])


def test_classify_fig1_counts_and_overlap():
    lam = exact_liouvillian_spectrum(XYZChainConfig(**FIG1, gamma_strength=20.0)).eigenvalues
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        cls = classify_stripes(lam, C_BOUNDARY, 20.0)
    assert cls.counts() == [256, 512, 256]
    assert not cls.overlap
    lam = exact_liouvillian_spectrum(XYZChainConfig(**FIG1, gamma_strength=0.5)).eigenvalues
    with pytest.warns(StripeOverlapWarning):
        assert classify_stripes(lam, C_BOUNDARY, 0.5).overlap


def test_classify_invariant_under_imaginary_shift(rng):
    lam = rng.uniform(-25, 2, 50) + 1j * rng.normal(size=50)
    a = classify_stripes(lam, C_BOUNDARY, 20.0, warn=False).labels
    b = classify_stripes(lam + 7.3j, C_BOUNDARY, 20.0, warn=False).labels
    np.testing.assert_array_equal(a, b)


def test_match_identical_and_shift(rng):
    a = rng.normal(size=12) + 1j * rng.normal(size=12)
    m = match_spectra(a, a[::-1])
    np.testing.assert_allclose(m.residuals, 0)
    m = match_spectra(a, rng.permutation(a) + 1e-3)
    np.testing.assert_allclose(m.residuals, 1e-3, rtol=1e-9)


def test_match_crossing_pair():
    perm, res = optimal_matching(np.array([0.0, 1.0]), np.array([0.9, 0.1]))
    np.testing.assert_array_equal(perm, [1, 0])
    assert res.sum() == pytest.approx(0.2)
    with pytest.raises(MatchingError):
        optimal_matching(np.zeros(2), np.zeros(3))


def test_match_cost_not_above_other_permutations(rng):
    a = rng.normal(size=8) + 1j * rng.normal(size=8)
    b = a + 0.3 * (rng.normal(size=8) + 1j * rng.normal(size=8))
    best = optimal_matching(a, b)[1].sum()
    assert best <= np.abs(a - b).sum() + 1e-12
    for _ in range(20):
        assert best <= np.abs(a - b[rng.permutation(8)]).sum() + 1e-12


def test_compare_fig1_gamma_8000():
    comp = compare_config(XYZChainConfig(**FIG1, gamma_strength=8000.0))
    assert comp.bijective and comp.n_matched == 1024
    assert max(s.std_dev for s in comp.per_stripe) < 1e-4


def test_compare_residuals_drop_fourfold():
    cfg = XYZChainConfig(**FIG3, gamma_strength=200.0)
    a = compare_config(cfg).max_residual
    b = compare_config(cfg.with_gamma(400.0)).max_residual
    assert a / b == pytest.approx(4, rel=0.2)


def test_fit_synthetic():
    g = np.array([50.0, 100, 200, 400])
    fit = fit_gamma_c(g, (5 / g) ** 2)
    assert fit.gamma_c == pytest.approx(5, rel=1e-12)
    assert fit.free_slope == pytest.approx(-2, abs=1e-12)
    assert fit.fit_residual < 1e-12


def test_fit_needs_three_points_below_ceiling():
    with pytest.raises(FitError):
        fit_gamma_c([10.0, 20.0], [0.01, 0.002])
    with pytest.raises(FitError):
        # the first two points sit above the ceiling
        fit_gamma_c([1.0, 2.0, 4.0, 8.0], [1.0, 0.5, 0.05, 0.01])


def test_gamma_sweep_two_qubit():
    res = gamma_sweep(XYZChainConfig(**FIG3), [400.0, 800.0, 1600.0, 3200.0], jobs=2)
    assert res.std_dev.shape == (4, 3)
    assert all(f is not None for f in res.fits)
    for f in res.fits:
        assert -2.3 <= f.free_slope <= -1.7
    assert not res.flags.get("point_errors")


def test_gamma_sweep_rejects_bad_grid():
    with pytest.raises(ValueError):
        gamma_sweep(XYZChainConfig(**FIG3), [100.0, 50.0])


def test_ep_scan_two_qubit():
    res = ep_scan(XYZChainConfig(**FIG3), np.arange(2.0, 40.0 + 1e-9, 0.05))
    found = [b.gamma for b in res.branch_points]
    assert any(abs(g - 8.0) <= 0.1 for g in found)
    assert any(abs(g - 8 * 2.3) <= 0.1 for g in found)
    assert res.points_in(25, 40) == []
    assert res.trajectories.shape == (761, 16)
    assert np.max(np.abs(res.rescaled_real)) <= 1 + 1e-9


def test_ep_scan_no_crossings_for_diagonal_family():
    coherent = np.diag([1j, 2j, 3j + 0.5])
    dissipator = np.diag([-1.0, -0.5, -0.2])
    gammas = np.linspace(0, 5, 200)
    traj = track_eigenvalues(coherent, dissipator, gammas)
    np.testing.assert_allclose(traj, np.diag(coherent)[None, :] + gammas[:, None] * np.diag(dissipator)[None, :])
    assert _discriminant_roots(traj, gammas, 0.05) == []


def test_ep_scan_coarse_grid_raises():
    with pytest.raises(GridTooCoarseError):
        ep_scan(XYZChainConfig(**FIG3), [2.0, 20.0, 40.0])
    with pytest.raises(ValueError):
        ep_scan(XYZChainConfig(**FIG3), [2.0])
