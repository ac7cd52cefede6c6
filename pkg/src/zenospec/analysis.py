"""Exact versus perturbative spectra: stripes, matching, error laws, branch points."""
from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg
from scipy.optimize import linear_sum_assignment

from .exact import exact_liouvillian_spectrum
from .model import XYZChainConfig, build_model, full_liouvillian
from .zeno import StripeSpectrum, zeno_spectrum

ERR_FIT_CEILING = 0.1
MIN_FIT_POINTS = 3


class StripeOverlapWarning(UserWarning):
    """Stripes are not separated: classification by real part is unreliable."""


class MatchingError(ValueError):
    pass


class FitError(ValueError):
    pass


class GridTooCoarseError(RuntimeError):
    pass


@dataclass(frozen=True)
class StripeClassification:
    labels: np.ndarray          # index into ``centers`` per eigenvalue
    centers: np.ndarray         # distinct Gamma c_k, real parts
    overlap: bool
    min_gap: float
    max_spread: float

    def counts(self) -> list[int]:
        return [int(np.sum(self.labels == i)) for i in range(len(self.centers))]


def distinct_stripe_centers(c_values: Sequence[complex], tol: float = 1e-9) -> np.ndarray:
    """Distinct real parts of the dissipator eigenvalues, descending."""
    out: list[float] = []
    for c in sorted((float(np.real(x)) for x in c_values), reverse=True):
        if not out or abs(out[-1] - c) > tol:
            out.append(c)
    return np.array(out)


def classify_stripes(eigenvalues: np.ndarray, c_values: Sequence[complex], gamma_strength: float,
                     warn: bool = True) -> StripeClassification:
    """Assign each eigenvalue to the nearest stripe centre ``Gamma Re(c_k)``.

    Stripes count as separated when the smallest gap between distinct centres
    exceeds twice the largest spread of real parts inside one stripe.
    """
    lam = np.asarray(eigenvalues)
    centers = gamma_strength * distinct_stripe_centers(c_values)
    labels = np.argmin(np.abs(lam.real[:, None] - centers[None, :]), axis=1)
    spread = 0.0
    for i in range(len(centers)):
        sel = lam.real[labels == i]
        if sel.size:
            spread = max(spread, float(sel.max() - sel.min()))
    gap = float(np.min(-np.diff(centers))) if len(centers) > 1 else np.inf
    overlap = not gap > 2 * spread
    if overlap and warn:
        warnings.warn(
            f"stripes overlap at Gamma={gamma_strength}: gap {gap:.4g} <= 2 x spread {spread:.4g}",
            StripeOverlapWarning, stacklevel=2,
        )
    return StripeClassification(labels, centers, overlap, gap, spread)


@dataclass(frozen=True)
class StripeMatch:
    center: float
    exact: np.ndarray
    pert: np.ndarray
    residuals: np.ndarray

    @property
    def std_dev(self) -> float:
        return float(np.std(self.residuals))

    @property
    def mean_abs(self) -> float:
        return float(np.mean(self.residuals))


@dataclass(frozen=True)
class SpectrumComparison:
    per_stripe: tuple[StripeMatch, ...]
    unmatched_exact: tuple[complex, ...] = ()
    unmatched_pert: tuple[complex, ...] = ()

    @property
    def bijective(self) -> bool:
        return not self.unmatched_exact and not self.unmatched_pert

    @property
    def max_residual(self) -> float:
        return max(float(np.max(s.residuals, initial=0.0)) for s in self.per_stripe)

    @property
    def n_matched(self) -> int:
        return sum(len(s.residuals) for s in self.per_stripe)


def optimal_matching(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Permutation of ``b`` minimizing ``sum |a_i - b_perm(i)|``; returns (perm, residuals)."""
    a, b = np.asarray(a), np.asarray(b)
    if len(a) != len(b):
        raise MatchingError(f"cannot match {len(a)} against {len(b)} values")
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    perm = np.empty(len(a), dtype=int)
    perm[rows] = cols
    return perm, cost[rows, cols][np.argsort(rows)]


def match_spectra(exact: Sequence[complex], pert: Sequence[complex], center: float = 0.0) -> StripeMatch:
    exact = np.asarray(exact, dtype=complex)
    pert = np.asarray(pert, dtype=complex)
    perm, res = optimal_matching(exact, pert)
    return StripeMatch(center, exact, pert[perm], res)


def compare_spectra(exact: np.ndarray, stripes: Sequence[StripeSpectrum], gamma_strength: float,
                    c_values: Sequence[complex]) -> SpectrumComparison:
    """Classify exact eigenvalues into stripes and match each stripe bijectively."""
    cls = classify_stripes(exact, c_values, gamma_strength, warn=False)
    pert_by_center: dict[int, list[np.ndarray]] = {}
    for s in stripes:
        i = int(np.argmin(np.abs(cls.centers - gamma_strength * np.real(s.c))))
        pert_by_center.setdefault(i, []).append(s.eigenvalues())
    out, un_e, un_p = [], [], []
    for i, centre in enumerate(cls.centers):
        ex = exact[cls.labels == i]
        pt = np.concatenate(pert_by_center.get(i, [np.zeros(0, complex)]))
        if len(ex) != len(pt):
            # leave the surplus of the larger side unmatched
            n = min(len(ex), len(pt))
            cost = np.abs(ex[:, None] - pt[None, :])
            rows, cols = linear_sum_assignment(cost)
            un_e.extend(complex(x) for j, x in enumerate(ex) if j not in set(rows))
            un_p.extend(complex(x) for j, x in enumerate(pt) if j not in set(cols))
            out.append(StripeMatch(float(centre), ex[rows], pt[cols], cost[rows, cols]))
            assert len(rows) == n
            continue
        out.append(match_spectra(ex, pt, float(centre)))
    return SpectrumComparison(tuple(out), tuple(un_e), tuple(un_p))


def compare_config(cfg: XYZChainConfig, method: str = "closed-form") -> SpectrumComparison:
    model = build_model(cfg)
    exact = exact_liouvillian_spectrum(cfg).eigenvalues
    stripes = zeno_spectrum(model, cfg.gamma_strength, method=method)
    return compare_spectra(exact, stripes, cfg.gamma_strength, model.basis.c)


# ---------------------------------------------------------------------------
# error law


@dataclass(frozen=True)
class StripeFit:
    gamma_c: float
    fit_residual: float
    n_points: int
    free_slope: float
    free_intercept: float


@dataclass(frozen=True)
class GammaSweepResult:
    gammas: np.ndarray
    centers: np.ndarray              # stripe centres in units of Gamma (Re c)
    std_dev: np.ndarray              # shape (n_gamma, n_stripes)
    mean_abs: np.ndarray
    fits: tuple[StripeFit | None, ...]
    fit_errors: tuple[str | None, ...] = ()
    flags: dict = field(default_factory=dict)

    @property
    def gamma_c(self) -> list[float | None]:
        return [f.gamma_c if f else None for f in self.fits]


def fit_gamma_c(gammas: Sequence[float], errors: Sequence[float], ceiling: float = ERR_FIT_CEILING) -> StripeFit:
    """Least-squares fit of ``err = (Gamma_c / Gamma)^2`` with the slope fixed at -2.

    Only points with ``0 < err < ceiling`` enter. A free-slope fit of the same
    points is returned as a diagnostic.
    """
    g = np.asarray(gammas, dtype=float)
    e = np.asarray(errors, dtype=float)
    use = (e > 0) & (e < ceiling) & np.isfinite(e)
    if use.sum() < MIN_FIT_POINTS:
        raise FitError(f"need at least {MIN_FIT_POINTS} sweep points with error below {ceiling}, got {int(use.sum())}")
    lg, le = np.log(g[use]), np.log(e[use])
    # log e = 2 log Gc - 2 log G
    log_gc = float(np.mean(le + 2 * lg) / 2)
    resid = le - (2 * log_gc - 2 * lg)
    slope, intercept = np.polyfit(lg, le, 1)
    return StripeFit(float(np.exp(log_gc)), float(np.sqrt(np.mean(resid**2))), int(use.sum()),
                     float(slope), float(intercept))


def _sweep_point(cfg: XYZChainConfig, gamma: float, method: str):
    """Per-stripe (std_dev, mean_abs, error message); NaN rows when the point fails."""
    try:
        comp = compare_config(cfg.with_gamma(gamma), method=method)
    except (MatchingError, np.linalg.LinAlgError, RuntimeError) as exc:
        return None, None, f"Gamma={gamma}: {exc}"
    if not comp.bijective:
        return None, None, f"Gamma={gamma}: stripe populations differ from the perturbative counts"
    return [s.std_dev for s in comp.per_stripe], [s.mean_abs for s in comp.per_stripe], None


def gamma_sweep(cfg: XYZChainConfig, gammas: Sequence[float], method: str = "closed-form",
                jobs: int = 1) -> GammaSweepResult:
    gammas = np.asarray(gammas, dtype=float)
    if gammas.size == 0 or np.any(gammas <= 0) or np.any(np.diff(gammas) <= 0):
        raise ValueError("gammas must be positive and strictly increasing")
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        results = list(pool.map(lambda g: _sweep_point(cfg, g, method), gammas))
    centers = distinct_stripe_centers(build_model(cfg).basis.c)
    nan_row = [np.nan] * len(centers)
    std = np.array([r[0] if r[0] is not None else nan_row for r in results])
    mae = np.array([r[1] if r[1] is not None else nan_row for r in results])
    point_errors = tuple(r[2] for r in results)
    fits, errs = [], []
    for j in range(std.shape[1]):
        try:
            fits.append(fit_gamma_c(gammas, std[:, j]))
            errs.append(None)
        except FitError as exc:
            fits.append(None)
            errs.append(str(exc))
    flags = {}
    if any(point_errors):
        flags["point_errors"] = [e for e in point_errors if e]
    nonmono = [j for j in range(std.shape[1]) if np.any(np.diff(std[:, j]) > 0)]
    if nonmono:
        flags["non_monotone_stripes"] = nonmono
        warnings.warn(f"error curves of stripes {nonmono} are not monotone in Gamma", RuntimeWarning, stacklevel=2)
    return GammaSweepResult(gammas, centers, std, mae, tuple(fits), tuple(errs), flags)


# ---------------------------------------------------------------------------
# branch points


@dataclass(frozen=True)
class BranchPoint:
    gamma: float
    uncertainty: float
    trajectories: tuple[int, ...]


@dataclass(frozen=True)
class EPScanResult:
    gammas: np.ndarray
    trajectories: np.ndarray        # (n_gamma, n_eig) tracked eigenvalues
    branch_points: tuple[BranchPoint, ...]

    @property
    def rescaled_real(self) -> np.ndarray:
        return self.trajectories.real / self.gammas[:, None]

    def points_in(self, lo: float, hi: float) -> list[BranchPoint]:
        return [b for b in self.branch_points if lo <= b.gamma <= hi]


def track_eigenvalues(coherent: np.ndarray, dissipator: np.ndarray, gammas: np.ndarray,
                      max_step_fraction: float = 0.1, jobs: int = 1) -> np.ndarray:
    """Eigenvalues of ``coherent + Gamma dissipator`` continued along the grid.

    Consecutive grid points are linked by optimal assignment. If any link moves
    an eigenvalue by more than ``max_step_fraction * ||coherent||_2`` (the
    scale of level spacings inside a stripe) the grid is too coarse to follow
    the spectrum and :class:`GridTooCoarseError` is raised.
    """
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        spectra = list(pool.map(lambda g: scipy.linalg.eigvals(coherent + g * dissipator), gammas))
    bound = max_step_fraction * max(1.0, float(np.linalg.norm(coherent, 2)))
    out = np.empty((len(gammas), len(spectra[0])), dtype=complex)
    out[0] = spectra[0]
    for i in range(1, len(gammas)):
        perm, res = optimal_matching(out[i - 1], spectra[i])
        out[i] = spectra[i][perm]
        if res.max() > bound:
            raise GridTooCoarseError(
                f"continuation step {res.max():.3g} exceeds bound {bound:.3g} between "
                f"Gamma={gammas[i - 1]:.6g} and {gammas[i]:.6g}"
            )
    return out


def _discriminant_roots(traj: np.ndarray, gammas: np.ndarray, imag_tol: float):
    """Cells where ``(lambda_a - lambda_b)^2`` passes through zero.

    At a square-root branch point the squared difference of the two branches
    is analytic in Gamma and changes sign, so linear interpolation inside a
    cell gives a root with a real interpolation parameter.
    """
    n = traj.shape[1]
    found = []
    for a in range(n):
        z = (traj[:, a, None] - traj[:, a + 1:]) ** 2
        scale = np.max(np.abs(z), axis=0)
        for jb in range(z.shape[1]):
            if scale[jb] < 1e-10:
                continue
            zz = z[:, jb]
            z0, z1 = zz[:-1], zz[1:]
            dz = z1 - z0
            ok = np.abs(dz) > 1e-14 * scale[jb]
            t = np.full(len(z0), np.nan + 0j)
            t[ok] = -z0[ok] / dz[ok]
            hit = ok & (t.real >= 0) & (t.real <= 1) & (np.abs(t.imag) < imag_tol)
            for i in np.flatnonzero(hit):
                g = gammas[i] + t[i].real * (gammas[i + 1] - gammas[i])
                found.append((float(g), float(gammas[i + 1] - gammas[i]), a, a + 1 + jb))
    return found


def ep_scan(cfg: XYZChainConfig, gammas: Sequence[float], imag_tol: float = 0.05,
            max_step_fraction: float = 0.1, jobs: int = 1) -> EPScanResult:
    """Locate branch points of the Liouvillian spectrum over a grid of Gamma."""
    gammas = np.asarray(gammas, dtype=float)
    if gammas.size < 2 or np.any(np.diff(gammas) <= 0):
        raise ValueError("gamma grid must have at least two strictly increasing points")
    coherent = full_liouvillian(cfg.with_gamma(1.0))
    dissipator = full_liouvillian(cfg.with_gamma(2.0)) - coherent
    coherent = coherent - dissipator
    traj = track_eigenvalues(coherent, dissipator, gammas, max_step_fraction, jobs=jobs)
    hits = sorted(_discriminant_roots(traj, gammas, imag_tol))
    points: list[BranchPoint] = []
    for g, width, a, b in hits:
        if points and g - points[-1].gamma <= max(width, points[-1].uncertainty):
            last = points[-1]
            ids = tuple(sorted(set(last.trajectories) | {a, b}))
            points[-1] = BranchPoint(last.gamma, last.uncertainty, ids)
        else:
            points.append(BranchPoint(g, width, (a, b)))
    return EPScanResult(gammas, traj, tuple(points))
