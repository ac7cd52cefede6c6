"""Liouvillian spectra of a boundary-dissipated XYZ spin chain near the Zeno limit.

Exact dense diagonalization, stripe-by-stripe perturbation theory in 1/Gamma,
and tools to compare the two.
"""
from .model import XYZChainConfig, build_boundary_dissipator, build_model, full_liouvillian
from .exact import exact_liouvillian_spectrum, steady_state
from .zeno import all_eigenvalues, two_qubit_closed_forms, zeno_spectrum
from .analysis import classify_stripes, compare_config, ep_scan, gamma_sweep, match_spectra

__version__ = "0.1.0"

__all__ = [
    "XYZChainConfig", "build_boundary_dissipator", "build_model", "full_liouvillian",
    "exact_liouvillian_spectrum", "steady_state",
    "all_eigenvalues", "two_qubit_closed_forms", "zeno_spectrum",
    "classify_stripes", "compare_config", "ep_scan", "gamma_sweep", "match_spectra",
]
