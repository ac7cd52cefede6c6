"""Built-in self checks run by ``zenospec check``."""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .analysis import (
    StripeOverlapWarning,
    classify_stripes,
    compare_config,
    match_spectra,
)
from .exact import exact_liouvillian_spectrum
from .model import XYZChainConfig, build_model
from .zeno import (
    effective_model_stripe0,
    kolmogorov_check,
    markov_matrix,
    two_qubit_closed_forms,
    zeno_spectrum,
    all_eigenvalues,
)

TWO_QUBIT = XYZChainConfig(1, (1.0, 2.3, -0.61), 0.0, 0.0, 1.0, 200.0)
FIG1 = XYZChainConfig(4, (1.0, 1.0, -0.6058), np.pi / 2, 0.0, 1.0, 20.0)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def check_two_qubit() -> CheckResult:
    cfg = TWO_QUBIT
    exact = exact_liouvillian_spectrum(cfg).eigenvalues
    closed = two_qubit_closed_forms(cfg.j_coupling[1], cfg.j_coupling[2], cfg.gamma_strength)
    res = match_spectra(exact, closed).residuals.max()
    return CheckResult("two-qubit closed forms (Gamma=200)", bool(res < 1e-2), f"max residual {res:.3e}")


def check_stripe_counts() -> CheckResult:
    cfg = FIG1
    exact = exact_liouvillian_spectrum(cfg).eigenvalues
    c = build_model(cfg).basis.c
    counts = classify_stripes(exact, c, cfg.gamma_strength, warn=False).counts()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        low = cfg.with_gamma(0.5)
        classify_stripes(exact_liouvillian_spectrum(low).eigenvalues, c, 0.5)
    warned = any(issubclass(w.category, StripeOverlapWarning) for w in caught)
    ok = counts == [256, 512, 256] and warned
    return CheckResult("stripe populations (N=4, Gamma=20) and overlap warning (Gamma=0.5)", ok,
                       f"counts {counts}, overlap warning {'emitted' if warned else 'missing'}")


def check_kolmogorov() -> CheckResult:
    out = []
    for mu in (1.0, 0.3):
        model = build_model(XYZChainConfig(FIG1.n_free, FIG1.j_coupling, FIG1.theta, FIG1.phi, mu, 1.0))
        eff = effective_model_stripe0(model)
        _, vecs = np.linalg.eigh(eff.h_d)
        out.append(kolmogorov_check(markov_matrix(eff.jump_operators(), vecs)))
    ok = out[0].passed and not out[1].passed
    return CheckResult("Kolmogorov condition (passes at mu=1, fails at mu=0.3)", ok,
                       f"violations {out[0].max_violation:.2e} / {out[1].max_violation:.2e}")


def check_real_count() -> CheckResult:
    details, ok = [], True
    for n in (1, 2, 3):
        cfg = XYZChainConfig(n, (1.0, 1.7, -0.137), 2 * np.pi / 7, 0.0, 1.0, 1000.0)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            lam = all_eigenvalues(zeno_spectrum(build_model(cfg), cfg.gamma_strength))
        n_real = int(np.sum(np.abs(lam.imag) <= 1e-8))
        ok &= n_real == 2 ** (n + 2)
        details.append(f"N={n}: {n_real}/{2 ** (n + 2)}")
    return CheckResult("real perturbative eigenvalues = 2^(N+2)", ok, ", ".join(details))


def check_random_oracle(seed: int) -> CheckResult:
    rng = np.random.default_rng(seed)
    cfg = XYZChainConfig(2, tuple(rng.uniform(-1, 1, 3)), rng.uniform(0, np.pi), rng.uniform(0, 2 * np.pi),
                         float(rng.choice([1.0, 0.5, -0.7])), 2000.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        comp = compare_config(cfg)
    ok = comp.bijective and comp.max_residual < 1e-3
    return CheckResult(f"random N=2 draw vs exact (seed {seed}, Gamma=2000)", ok,
                       f"max residual {comp.max_residual:.3e}")


def run_checks(seed: int = 0) -> list[CheckResult]:
    checks: list[Callable[[], CheckResult]] = [
        check_two_qubit, check_stripe_counts, check_kolmogorov, check_real_count,
        lambda: check_random_oracle(seed),
    ]
    return [fn() for fn in checks]
