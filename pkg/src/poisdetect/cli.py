"""Command line driver: single-shot testing, calibration, power, and grids.

Reports are machine-readable JSON (use --pretty for humans). Exit codes:
0 success, 2 malformed input, 3 invalid values or configuration, 4 runtime
failure. Flags can be defaulted through POISDETECT_* environment variables
(POISDETECT_SEED, POISDETECT_ALPHA, POISDETECT_NULL_REPS,
POISDETECT_POWER_REPS, POISDETECT_WORKERS).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from ._version import __version__
from .boundaries import (
    dense_boundary,
    max_test_boundary,
    one_sided_dense_boundary,
    small_means_boundary,
    sparse_boundary,
)
from .detectors import DETECTOR_NAMES, NullTables, detector_info, make_detector
from .harness import (
    PURPOSE_AUX,
    CalibrationConfig,
    GridConfig,
    PersistenceError,
    calibrate,
    estimate_power,
    load_calibration,
    run_grid,
    save_calibration,
    save_grid,
    stream_id,
)
from .model import ExplicitSignal, ModelSpec, build_spec, regime_from_json, sample
from .rng import RngStream

__all__ = ["main"]

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_RUNTIME = 4

ENV_PREFIX = "POISDETECT_"

COUNTS_HEADER = "index,lambda,count"


class InputFormatError(Exception):
    """Malformed input file, reported with the parse exit code."""


def _env(name: str, cast):
    raw = os.environ.get(ENV_PREFIX + name)
    if raw is None:
        return None
    try:
        return cast(raw)
    except ValueError:
        raise ValueError(f"{ENV_PREFIX + name}: cannot parse {raw!r}") from None


def _resolve(value, env_name: str, cast, default=None):
    if value is not None:
        return value
    env = _env(env_name, cast)
    return env if env is not None else default


def _require_seed(args) -> int:
    seed = _resolve(args.seed, "SEED", int)
    if seed is None:
        raise ValueError("--seed is required (flag or POISDETECT_SEED)")
    return seed


def _parse_detectors(raw, default):
    if raw is None:
        return list(default)
    kinds = [part.strip() for part in raw.split(",") if part.strip()]
    if not kinds:
        raise ValueError("--detectors: empty list")
    for kind in kinds:
        detector_info(kind)
    if len(set(kinds)) != len(kinds):
        raise ValueError("--detectors: duplicates not allowed")
    return kinds


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _emit_json(doc, args) -> None:
    indent = 2 if args.pretty else None
    _emit(json.dumps(doc, indent=indent) + "\n", args.out)


# ---------------------------------------------------------------------------
# input files


def _read_counts_csv(path: str) -> tuple[np.ndarray, np.ndarray]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputFormatError(f"{path}: {exc}") from None
    lines = text.splitlines()
    if not lines:
        raise InputFormatError(f"{path}: empty counts file")
    if lines[0].strip() != COUNTS_HEADER:
        raise InputFormatError(f"{path}: line 1: expected header '{COUNTS_HEADER}'")
    rows = []
    seen = set()
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise InputFormatError(
                f"{path}: line {line_no}: expected 3 fields, got {len(parts)}"
            )
        try:
            index = int(parts[0])
            lam = float(parts[1])
            count = int(parts[2])
        except ValueError:
            raise InputFormatError(
                f"{path}: line {line_no}: cannot parse '{line}'"
            ) from None
        if index in seen:
            raise ValueError(f"{path}: line {line_no}: duplicate index {index}")
        seen.add(index)
        if not (lam > 0 and math.isfinite(lam)):
            raise ValueError(f"{path}: line {line_no}: lambda must be positive")
        if count < 0:
            raise ValueError(f"{path}: line {line_no}: count must be nonnegative")
        rows.append((index, lam, count))
    if not rows:
        raise InputFormatError(f"{path}: no data rows")
    rows.sort()
    lambdas = np.array([row[1] for row in rows])
    counts = np.array([row[2] for row in rows], dtype=np.int64)
    return lambdas, counts


def _read_counts_json(path: str) -> tuple[np.ndarray, np.ndarray]:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise InputFormatError(f"{path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise InputFormatError(f"{path}: {exc}") from None
    if not isinstance(doc, dict) or "lambdas" not in doc or "counts" not in doc:
        raise InputFormatError(f"{path}: expected an object with lambdas and counts")
    lambdas = np.asarray(doc["lambdas"], dtype=np.float64)
    counts = np.asarray(doc["counts"])
    if lambdas.ndim != 1 or counts.shape != lambdas.shape:
        raise InputFormatError(f"{path}: lambdas and counts must be equal-length lists")
    if lambdas.size == 0:
        raise InputFormatError(f"{path}: empty counts file")
    return lambdas, counts


def _read_counts(path: str, fmt: str) -> tuple[np.ndarray, np.ndarray]:
    if fmt == "json":
        return _read_counts_json(path)
    return _read_counts_csv(path)


def _load_spec_config(path: str) -> ModelSpec:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise InputFormatError(f"{path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise InputFormatError(f"{path}: {exc}") from None
    if not isinstance(doc, dict):
        raise InputFormatError(f"{path}: expected a JSON object")
    if doc.get("format") == "poisdetect/spec-v1":
        return ModelSpec.from_json(doc)
    if "regime" not in doc or "n" not in doc:
        raise InputFormatError(f"{path}: model config needs 'n' and 'regime'")
    regime = regime_from_json(doc["regime"])
    return build_spec(
        int(doc["n"]),
        regime=regime,
        lambdas=doc.get("lambdas"),
        lambda0=doc.get("lambda0"),
        lambda_dist=doc.get("lambda_dist", "constant"),
        means_seed=doc.get("means_seed"),
        beta=doc.get("beta"),
        epsilon=doc.get("epsilon"),
        sidedness=doc.get("sidedness", "two-sided"),
    )


# ---------------------------------------------------------------------------
# subcommands


def _cmd_test(args) -> int:
    lambdas, counts = _read_counts(args.counts, args.format)
    kinds = _parse_detectors(
        args.detectors, [k for k in DETECTOR_NAMES if k != "lrt"]
    )
    if "lrt" in kinds:
        raise ValueError(
            "the oracle likelihood ratio needs a full alternative model; "
            "use the power command with a model config"
        )
    seed = _require_seed(args)
    alpha = _resolve(args.alpha, "ALPHA", float, 0.05)
    null_reps = _resolve(args.null_reps, "NULL_REPS", int, 500)
    n = int(lambdas.size)
    spec = build_spec(
        n,
        regime=ExplicitSignal(np.ones(n)),
        lambdas=lambdas,
        epsilon=0.0,
        sidedness=args.sidedness,
    )
    tables = NullTables(spec.lambdas)
    config = CalibrationConfig(seed, alpha, null_reps)
    calibrated = calibrate(spec, kinds, config, tables=tables)
    results = []
    for cal in calibrated:
        res = make_detector(cal.kind, spec, tables).evaluate(counts)
        entry = {
            "detector": cal.kind,
            "statistic": res.statistic,
            "critical_value": cal.critical_value,
            "reject": bool(res.statistic > cal.critical_value),
        }
        if res.diagnostics:
            entry["diagnostics"] = res.diagnostics
        results.append(entry)
    report = {
        "command": "test",
        "tool_version": __version__,
        "n": n,
        "sidedness": args.sidedness,
        "alpha": alpha,
        "null_reps": null_reps,
        "seed": seed,
        "spec_fingerprint": spec.null_fingerprint(),
        "results": results,
    }
    if args.pvalues:
        report["pvalues"] = [
            float(p) for p in np.exp(tables.log_pvalues(counts, args.sidedness))
        ]
    _emit_json(report, args)
    return EXIT_OK


def _default_kinds(spec: ModelSpec) -> list[str]:
    if spec.epsilon > 0.0:
        return list(DETECTOR_NAMES)
    return [k for k in DETECTOR_NAMES if k != "lrt"]


def _cmd_calibrate(args) -> int:
    spec = _load_spec_config(args.config)
    kinds = _parse_detectors(args.detectors, _default_kinds(spec))
    seed = _require_seed(args)
    alpha = _resolve(args.alpha, "ALPHA", float, 0.05)
    null_reps = _resolve(args.null_reps, "NULL_REPS", int, 500)
    config = CalibrationConfig(seed, alpha, null_reps)
    calibrated = calibrate(spec, kinds, config)
    if args.out:
        save_calibration(calibrated, args.out)
    else:
        doc = [cal.to_json() for cal in calibrated]
        sys.stdout.write(json.dumps(doc, indent=2) + "\n")
    return EXIT_OK


def _cmd_power(args) -> int:
    spec = _load_spec_config(args.config)
    seed = _require_seed(args)
    alpha = _resolve(args.alpha, "ALPHA", float, 0.05)
    null_reps = _resolve(args.null_reps, "NULL_REPS", int, 500)
    power_reps = _resolve(args.power_reps, "POWER_REPS", int, 200)
    if args.calibration:
        calibrated = load_calibration(args.calibration)
        if args.detectors is not None:
            wanted = set(_parse_detectors(args.detectors, ()))
            calibrated = [cal for cal in calibrated if cal.kind in wanted]
            missing = wanted - {cal.kind for cal in calibrated}
            if missing:
                raise ValueError(
                    f"calibration file lacks: {', '.join(sorted(missing))}"
                )
    else:
        kinds = _parse_detectors(args.detectors, _default_kinds(spec))
        config = CalibrationConfig(seed, alpha, null_reps)
        calibrated = calibrate(spec, kinds, config)
    cells = estimate_power(spec, calibrated, power_reps, seed, under=args.under)
    crit = {cal.kind: cal.critical_value for cal in calibrated}
    report = {
        "command": "power",
        "tool_version": __version__,
        "n": spec.n,
        "sidedness": spec.sidedness,
        "under": args.under,
        "seed": seed,
        "reps": power_reps,
        "spec_fingerprint": spec.null_fingerprint(),
        "results": [
            {
                "detector": cell.detector,
                "power": cell.power,
                "beta": cell.beta,
                "signal_kind": cell.signal_kind,
                "signal": cell.signal,
                "boundary_value": cell.boundary_value,
                "critical_value": crit[cell.detector],
                "flag": cell.flag,
            }
            for cell in cells
        ],
    }
    _emit_json(report, args)
    return EXIT_OK


def _cmd_grid(args) -> int:
    try:
        doc = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except OSError as exc:
        raise InputFormatError(f"{args.config}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise InputFormatError(f"{args.config}: {exc}") from None
    if not isinstance(doc, dict):
        raise InputFormatError(f"{args.config}: expected a JSON object")
    overrides = [
        ("seed", args.seed, "SEED", int),
        ("alpha", args.alpha, "ALPHA", float),
        ("null_reps", args.null_reps, "NULL_REPS", int),
        ("power_reps", args.power_reps, "POWER_REPS", int),
        ("workers", args.workers, "WORKERS", int),
        ("hc_pvalue_reps", args.hc_pvalue_reps, None, int),
    ]
    for field, flag_value, env_name, cast in overrides:
        value = flag_value
        if value is None and env_name is not None:
            value = _env(env_name, cast)
        if value is not None:
            doc[field] = value
    if doc.get("seed") is None:
        raise ValueError("--seed is required (flag, POISDETECT_SEED, or config)")
    config = GridConfig.from_json(doc)
    grid = run_grid(config)
    csv_path, meta_path = save_grid(grid, args.out)
    summary = {
        "command": "grid",
        "tool_version": __version__,
        "cells": len(grid.cells),
        "csv": str(csv_path),
        "meta": str(meta_path),
    }
    sys.stdout.write(json.dumps(summary, indent=2 if args.pretty else None) + "\n")
    return EXIT_OK


_BOUNDARY_KINDS = {
    "dense": dense_boundary,
    "sparse": sparse_boundary,
    "dense-one": one_sided_dense_boundary,
    "small-means": small_means_boundary,
    "max": max_test_boundary,
}

_BOUNDARY_RANGES = {
    "dense": (0.025, 0.475),
    "dense-one": (0.025, 0.475),
    "sparse": (0.525, 0.975),
    "max": (0.525, 0.975),
    "small-means": (0.525, 0.975),
}


def _cmd_boundary(args) -> int:
    fn = _BOUNDARY_KINDS[args.kind]
    lo_default, hi_default = _BOUNDARY_RANGES[args.kind]
    lo = args.beta_from if args.beta_from is not None else lo_default
    hi = args.beta_to if args.beta_to is not None else hi_default
    step = args.beta_step
    if step <= 0:
        raise ValueError("--beta-step must be positive")
    if not lo <= hi:
        raise ValueError("--beta-from must not exceed --beta-to")
    betas = []
    k = 0
    while True:
        b = lo + k * step
        if b > hi + 1e-12:
            break
        betas.append(round(b, 12))
        k += 1
    rows = [(b, fn(b)) for b in betas]
    if args.format == "csv":
        text = "beta,boundary\n" + "".join(
            f"{repr(b)},{repr(v)}\n" for b, v in rows
        )
        _emit(text, args.out)
    else:
        doc = {
            "command": "boundary",
            "kind": args.kind,
            "rows": [{"beta": b, "boundary": v} for b, v in rows],
        }
        _emit_json(doc, args)
    return EXIT_OK


def _cmd_simulate(args) -> int:
    spec = _load_spec_config(args.config)
    seed = _require_seed(args)
    reps = args.reps
    if reps < 1:
        raise ValueError("--reps must be positive")
    if reps > 1 and (not args.out or "{rep}" not in args.out):
        raise ValueError("--out with a {rep} placeholder is required for --reps > 1")
    for rep in range(reps):
        stream = RngStream(seed, stream_id(PURPOSE_AUX, 0, rep))
        draw = sample(spec, stream, under=args.under)
        lines = [COUNTS_HEADER]
        lines.extend(
            f"{i},{float(spec.lambdas[i])!r},{int(draw.counts[i])}"
            for i in range(spec.n)
        )
        text = "\n".join(lines) + "\n"
        out = args.out.format(rep=rep) if args.out else None
        _emit(text, out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _add_report_flags(sp) -> None:
    sp.add_argument("--out", help="write the report here instead of stdout")
    sp.add_argument("--pretty", action="store_true", help="indent JSON output")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="poisdetect",
        description="Detection tests for sparse mean shifts in Poisson count vectors.",
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("test", help="run detectors on an observed count vector")
    sp.add_argument("--counts", required=True, help="counts file (index,lambda,count)")
    sp.add_argument("--format", choices=["csv", "json"], default="csv")
    sp.add_argument("--detectors", help="comma-separated detector names")
    sp.add_argument("--sidedness", choices=["two-sided", "one-sided"], default="two-sided")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--null-reps", type=int)
    sp.add_argument("--pvalues", action="store_true", help="include per-coordinate P-values")
    _add_report_flags(sp)
    sp.set_defaults(func=_cmd_test)

    sp = sub.add_parser("calibrate", help="simulate critical values for a model")
    sp.add_argument("--config", required=True, help="model config JSON")
    sp.add_argument("--detectors")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--null-reps", type=int)
    sp.add_argument("--out", help="write calibration JSON here instead of stdout")
    sp.set_defaults(func=_cmd_calibrate, pretty=False)

    sp = sub.add_parser("power", help="estimate rejection rates under a model")
    sp.add_argument("--config", required=True, help="model config JSON")
    sp.add_argument("--calibration", help="reuse a saved calibration JSON")
    sp.add_argument("--detectors")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--null-reps", type=int)
    sp.add_argument("--power-reps", type=int)
    sp.add_argument(
        "--under",
        choices=["alternative", "null"],
        default="alternative",
        help="sample from the alternative (power) or the null (level)",
    )
    _add_report_flags(sp)
    sp.set_defaults(func=_cmd_power)

    sp = sub.add_parser("grid", help="sweep a (beta, signal) power grid")
    sp.add_argument("--config", required=True, help="grid config JSON")
    sp.add_argument("--out", required=True, help="output CSV path")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--null-reps", type=int)
    sp.add_argument("--power-reps", type=int)
    sp.add_argument("--workers", type=int)
    sp.add_argument("--hc-pvalue-reps", type=int)
    sp.add_argument("--pretty", action="store_true")
    sp.set_defaults(func=_cmd_grid)

    sp = sub.add_parser("boundary", help="tabulate a detection boundary curve")
    sp.add_argument("--kind", required=True, choices=sorted(_BOUNDARY_KINDS))
    sp.add_argument("--beta-from", type=float)
    sp.add_argument("--beta-to", type=float)
    sp.add_argument("--beta-step", type=float, default=0.025)
    sp.add_argument("--format", choices=["json", "csv"], default="json")
    _add_report_flags(sp)
    sp.set_defaults(func=_cmd_boundary)

    sp = sub.add_parser("simulate", help="emit raw samples from a model")
    sp.add_argument("--config", required=True, help="model config JSON")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--reps", type=int, default=1)
    sp.add_argument(
        "--under", choices=["alternative", "null"], default="alternative"
    )
    sp.add_argument("--out", help="output path; use a {rep} placeholder for --reps > 1")
    sp.set_defaults(func=_cmd_simulate)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_PARSE
    try:
        return args.func(args)
    except InputFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except PersistenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # pragma: no cover - last-resort reporting
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
