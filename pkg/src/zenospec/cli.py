"""Command-line front end.

Every command reads one JSON config::

    {"model": {"n_free": 1, "j": [1, 2.3, -0.61], "theta": 0, "phi": 0, "mu": 1, "gamma": 100},
     "run": {...},
     "output": {"dir": "out", "format": "csv"}}

and writes flat CSV (or JSON) files. Exit codes: 0 ok, 1 config error,
2 numerical failure, 3 failed self check.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import warnings
from pathlib import Path

import jsonschema
import numpy as np
import scipy.linalg

from . import analysis, checks, exact, model, zeno

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_CHECK = 0, 1, 2, 3

NUMERICAL_ERRORS = (
    exact.EigensolverError, exact.KernelError, analysis.MatchingError, analysis.FitError,
    analysis.GridTooCoarseError, model.DissipatorError, zeno.PairingError,
    zeno.DefectiveOperatorError, scipy.linalg.LinAlgError, np.linalg.LinAlgError,
)

_NUMBER = {"type": "number"}
CONFIG_SCHEMA = {
    "type": "object",
    "required": ["model"],
    "additionalProperties": False,
    "properties": {
        "model": {
            "type": "object",
            "required": ["n_free", "j"],
            "additionalProperties": False,
            "properties": {
                "n_free": {"type": "integer", "minimum": 1, "maximum": model.MAX_FREE_SPINS},
                "j": {"type": "array", "items": _NUMBER, "minItems": 3, "maxItems": 3},
                "theta": _NUMBER,
                "phi": _NUMBER,
                "mu": {"type": "number", "minimum": -1, "maximum": 1},
                "gamma": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "run": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "method": {"enum": ["closed-form", "general", "direct"]},
                "gammas": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1},
                "grid": {
                    "type": "object",
                    "required": ["start", "stop", "step"],
                    "additionalProperties": False,
                    "properties": {
                        "start": {"type": "number", "exclusiveMinimum": 0},
                        "stop": {"type": "number", "exclusiveMinimum": 0},
                        "step": {"type": "number", "exclusiveMinimum": 0},
                    },
                },
                "imag_tol": {"type": "number", "exclusiveMinimum": 0},
                "max_step_fraction": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"dir": {"type": "string"}, "format": {"enum": ["csv", "json"]}},
        },
    },
}


class ConfigError(ValueError):
    pass


def _path(parts) -> str:
    return ".".join(str(p) for p in parts) or "<root>"


def load_config(path: str | Path) -> dict:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    validate_config(doc)
    return doc


def validate_config(doc: dict) -> None:
    errors = sorted(jsonschema.Draft202012Validator(CONFIG_SCHEMA).iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        raise ConfigError(f"config field '{_path(err.absolute_path)}': {err.message}")
    gammas = doc.get("run", {}).get("gammas")
    if gammas is not None and any(b <= a for a, b in zip(gammas, gammas[1:])):
        raise ConfigError("config field 'run.gammas': values must be strictly increasing")
    grid = doc.get("run", {}).get("grid")
    if grid is not None and not grid["stop"] > grid["start"]:
        raise ConfigError("config field 'run.grid.stop': must exceed run.grid.start")


def chain_config(doc: dict) -> model.XYZChainConfig:
    m = doc["model"]
    try:
        return model.XYZChainConfig(
            n_free=m["n_free"], j_coupling=tuple(m["j"]), theta=m.get("theta", 0.0), phi=m.get("phi", 0.0),
            mu=m.get("mu", 1.0), gamma_strength=m.get("gamma", 1.0),
        )
    except ValueError as exc:
        raise ConfigError(f"config field 'model': {exc}") from exc


def gamma_grid(doc: dict, prefer: str = "gammas") -> np.ndarray:
    """Gamma values from ``run.gammas`` or ``run.grid``; ``prefer`` wins when both are given."""
    run = doc.get("run", {})
    for key in (prefer, "grid" if prefer == "gammas" else "gammas"):
        if key == "gammas" and "gammas" in run:
            return np.asarray(run["gammas"], dtype=float)
        if key == "grid" and "grid" in run:
            g = run["grid"]
            n = int(np.floor((g["stop"] - g["start"]) / g["step"] + 1e-9)) + 1
            return np.round(g["start"] + g["step"] * np.arange(n), 12)
    raise ConfigError("config field 'run': needs 'gammas' or 'grid' for this command")


# ---------------------------------------------------------------------------
# output


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def write_table(out_dir: Path, name: str, header: list[str], rows: list[list], fmt_kind: str) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    if fmt_kind == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(x) for x in r])
        path = out_dir / f"{name}.csv"
        path.write_bytes(buf.getvalue().encode("utf-8"))
    else:
        recs = [dict(zip(header, (_jsonable(x) for x in r))) for r in rows]
        path = out_dir / f"{name}.json"
        write_json(path, recs)
    return path


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (np.floating, float)):
        # JSON has no NaN; failed grid points become null
        return float(x) if np.isfinite(x) else None
    return x


def write_json(path: Path, obj) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(_jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"
    path.write_bytes(text.encode("utf-8"))
    return path


def stripe_label(members) -> str:
    return "-".join(str(m) for m in members)


# ---------------------------------------------------------------------------
# commands


def cmd_spectrum_exact(doc, cfg, out: Path, fmt_kind: str, args) -> int:
    spec = exact.exact_liouvillian_spectrum(cfg, eigenvectors=args.eigenvectors)
    basis = model.build_model(cfg).basis
    cls = analysis.classify_stripes(spec.eigenvalues, basis.c, cfg.gamma_strength, warn=False)
    labels = _center_labels(basis, cls.centers / cfg.gamma_strength)
    rows = [[lam.real, lam.imag, labels[i]] for lam, i in zip(spec.eigenvalues, cls.labels)]
    write_table(out, "spectrum_exact", ["re", "im", "stripe_label"], rows, fmt_kind)
    meta = {"n_eigenvalues": len(rows), "gamma": cfg.gamma_strength, "stripe_counts": dict(zip(labels, cls.counts())),
            "overlap_warning": bool(cls.overlap), "min_gap": cls.min_gap, "max_spread": cls.max_spread}
    write_json(out / "spectrum_exact_meta.json", meta)
    if cls.overlap:
        print(f"warning: stripes overlap at Gamma={cfg.gamma_strength}", file=sys.stderr)
    if spec.right_eigenvectors is not None:
        v = spec.right_eigenvectors
        vrows = [[j, i, v[i, j].real, v[i, j].imag] for j in range(v.shape[1]) for i in range(v.shape[0])]
        write_table(out, "eigenvectors_exact", ["eigenvalue_index", "component", "re", "im"], vrows, fmt_kind)
    return EXIT_OK


def _center_labels(basis, centers) -> list[str]:
    labels = []
    for c in centers:
        members = [k for k in range(basis.size) if abs(basis.c[k].real - c) <= 1e-9]
        labels.append(stripe_label(members))
    return labels


def cmd_spectrum_zeno(doc, cfg, out: Path, fmt_kind: str, args) -> int:
    method = doc.get("run", {}).get("method", "closed-form")
    m = model.build_model(cfg)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", zeno.RealnessWarning)
        stripes = zeno.zeno_spectrum(m, cfg.gamma_strength, method=method)
    header = ["stripe", "alpha", "beta", "lambda0_re", "lambda0_im", "corr_re", "corr_im", "lambda_re", "lambda_im"]
    meta = {"method": method, "gamma": cfg.gamma_strength, "stripes": {},
            "warnings": [str(w.message) for w in caught]}
    total = 0
    for s in stripes:
        label = stripe_label(s.members)
        rows = [[label, r.alpha, r.beta, r.lambda0.real, r.lambda0.imag, r.correction.real, r.correction.imag,
                 r.value.real, r.value.imag] for r in s.records]
        total += len(rows)
        write_table(out, f"spectrum_zeno_stripe_{label}", header, rows, fmt_kind)
        meta["stripes"][label] = {
            "c": s.c.real, "n_records": len(rows), "flags": s.flags,
            "resolvers": [{"kind": r.kind, "scale": r.scale,
                           "eigenvalues": [[x.real, x.imag] for x in r.resolved_corrections]} for r in s.resolvers],
        }
    meta["n_eigenvalues"] = total
    write_json(out / "spectrum_zeno_meta.json", meta)
    return EXIT_OK


def cmd_compare(doc, cfg, out: Path, fmt_kind: str, args) -> int:
    method = doc.get("run", {}).get("method", "closed-form")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", zeno.RealnessWarning)
        comp = analysis.compare_config(cfg, method=method)
    basis = model.build_model(cfg).basis
    labels = _center_labels(basis, [s.center / cfg.gamma_strength for s in comp.per_stripe])
    rows, report = [], {"gamma": cfg.gamma_strength, "method": method, "bijective": comp.bijective, "stripes": {}}
    for label, s in zip(labels, comp.per_stripe):
        order = np.lexsort((s.exact.imag, s.exact.real))
        rows.extend([label, s.exact[i].real, s.exact[i].imag, s.pert[i].real, s.pert[i].imag, s.residuals[i]]
                    for i in order)
        report["stripes"][label] = {"n": len(s.residuals), "std_dev": s.std_dev, "mean_abs": s.mean_abs,
                                    "max": float(np.max(s.residuals, initial=0.0))}
    report["unmatched_exact"] = [[x.real, x.imag] for x in comp.unmatched_exact]
    report["unmatched_pert"] = [[x.real, x.imag] for x in comp.unmatched_pert]
    write_table(out, "compare_residuals", ["stripe", "exact_re", "exact_im", "pert_re", "pert_im", "residual"], rows, fmt_kind)
    write_json(out / "compare_report.json", report)
    if not comp.bijective:
        print(f"error: {len(comp.unmatched_exact)} exact and {len(comp.unmatched_pert)} perturbative "
              "eigenvalues could not be matched within their stripes", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_sweep_gamma(doc, cfg, out: Path, fmt_kind: str, args) -> int:
    gammas = gamma_grid(doc)
    method = doc.get("run", {}).get("method", "closed-form")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", zeno.RealnessWarning)
        warnings.simplefilter("ignore", RuntimeWarning)
        res = analysis.gamma_sweep(cfg, gammas, method=method, jobs=args.jobs)
    basis = model.build_model(cfg).basis
    labels = _center_labels(basis, res.centers)
    rows = [[g, labels[j], res.std_dev[i, j], res.mean_abs[i, j]]
            for i, g in enumerate(res.gammas) for j in range(len(labels))]
    write_table(out, "sweep_errors", ["gamma", "stripe", "std_dev", "mean_abs"], rows, fmt_kind)
    fit_rows = []
    for label, fit, err in zip(labels, res.fits, res.fit_errors):
        if fit is None:
            fit_rows.append([label, "nan", "nan", 0, "nan", err])
        else:
            fit_rows.append([label, fit.gamma_c, fit.fit_residual, fit.n_points, fit.free_slope, ""])
    write_table(out, "sweep_fit", ["stripe", "gamma_c", "fit_residual", "n_points", "free_slope", "error"], fit_rows, fmt_kind)
    failed = list(res.flags.get("point_errors", [])) + [e for e in res.fit_errors if e]
    for e in failed:
        print(f"error: {e}", file=sys.stderr)
    return EXIT_NUMERICAL if failed else EXIT_OK


def cmd_scan_ep(doc, cfg, out: Path, fmt_kind: str, args) -> int:
    gammas = gamma_grid(doc, prefer="grid")
    run = doc.get("run", {})
    res = analysis.ep_scan(cfg, gammas, imag_tol=run.get("imag_tol", 0.05),
                           max_step_fraction=run.get("max_step_fraction", 0.1), jobs=args.jobs)
    scaled = res.rescaled_real
    rows = [[g, j, scaled[i, j]] for i, g in enumerate(res.gammas) for j in range(scaled.shape[1])]
    write_table(out, "ep_trajectories", ["gamma", "trajectory", "re_over_gamma"], rows, fmt_kind)
    bp_rows = [[b.gamma, b.uncertainty, ";".join(str(t) for t in b.trajectories)] for b in res.branch_points]
    write_table(out, "ep_branch_points", ["gamma", "uncertainty", "trajectories"], bp_rows, fmt_kind)
    return EXIT_OK


COMMANDS = {
    "spectrum-exact": cmd_spectrum_exact,
    "spectrum-zeno": cmd_spectrum_zeno,
    "compare": cmd_compare,
    "sweep-gamma": cmd_sweep_gamma,
    "scan-ep": cmd_scan_ep,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="zenospec", description="Liouvillian spectra of a boundary-dissipated XYZ chain near the Zeno limit.")
    p.add_argument("command", choices=[*COMMANDS, "check"])
    p.add_argument("--config", help="JSON config file (not needed for 'check')")
    p.add_argument("--out", help="output directory (overrides output.dir)")
    p.add_argument("--format", choices=["csv", "json"], help="output format (overrides output.format)")
    p.add_argument("--jobs", type=int, default=1, help="concurrent grid points for sweeps and scans")
    p.add_argument("--eigenvectors", action="store_true", help="also write exact right eigenvectors")
    p.add_argument("--seed", type=int, default=0, help="seed for randomized diagnostics in 'check'")
    return p


def run_check(seed: int) -> int:
    results = checks.run_checks(seed)
    for r in results:
        print(f"[{'PASS' if r.passed else 'FAIL'}] {r.name}: {r.detail}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.jobs < 1:
        print("error: --jobs must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "check":
        return run_check(args.seed)
    if not args.config:
        print(f"error: '{args.command}' needs --config", file=sys.stderr)
        return EXIT_CONFIG
    try:
        doc = load_config(args.config)
        cfg = chain_config(doc)
        out_block = doc.get("output", {})
        out = Path(args.out or out_block.get("dir", "."))
        fmt_kind = args.format or out_block.get("format", "csv")
        return COMMANDS[args.command](doc, cfg, out, fmt_kind, args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERICAL_ERRORS as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
