"""Monte Carlo calibration, power estimation, and grid sweeps.

The protocol: draw null samples, take the empirical (1-alpha)-quantile of
each detector's statistic as its critical value, then estimate power as the
fraction of fresh alternative samples whose statistic strictly exceeds it.
All detectors see the same null samples during calibration.

Every random draw is tied to a (purpose, cell, replicate) stream id, so
results are bit-identical for any worker count or execution order.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from ._version import __version__
from .boundaries import boundary_for
from .detectors import (
    DETECTOR_NAMES,
    Detector,
    NullTables,
    PvalDist,
    detector_info,
    make_detector,
    simulated_pval_dist,
)
from .model import (
    DenseSignal,
    ModelSpec,
    SmallMeansSignal,
    SparseSignal,
    build_spec,
    sample,
)
from .rng import RngStream

__all__ = [
    "CalibrationConfig",
    "CalibratedDetector",
    "PowerCell",
    "GridConfig",
    "PowerGrid",
    "FingerprintMismatch",
    "PersistenceError",
    "null_samples",
    "calibrate",
    "estimate_power",
    "run_grid",
    "save_grid",
    "load_grid",
    "save_calibration",
    "load_calibration",
    "CSV_HEADER",
]

TOOL_VERSION = __version__
FORMAT_VERSION = 1

CSV_HEADER = "detector,n,beta,signal_kind,signal,power,reps,boundary_value,flag"

# stream id layout: purpose in the top 16 bits, cell in the middle 24, rep low
PURPOSE_CALIBRATION = 1
PURPOSE_POWER = 2
PURPOSE_MEANS = 3
PURPOSE_AUX = 4

_CELL_BITS = 24
_CELL_LIMIT = 1 << _CELL_BITS


class FingerprintMismatch(ValueError):
    """Calibrated critical values applied to a different null model."""


class PersistenceError(ValueError):
    """Corrupt, stale, or inconsistent persisted artifact."""


def stream_id(purpose: int, cell: int, rep: int) -> int:
    if not 0 <= cell < _CELL_LIMIT:
        raise ValueError(f"cell index out of range: {cell}")
    if not 0 <= rep < _CELL_LIMIT:
        raise ValueError(f"replicate index out of range: {rep}")
    return (purpose << 48) | (cell << _CELL_BITS) | rep


@dataclass(frozen=True)
class CalibrationConfig:
    """Level, null replication count, and master seed for calibration."""

    seed: int
    alpha: float = 0.05
    null_reps: int = 500

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must lie in (0, 1]")
        if not 2 <= self.null_reps < _CELL_LIMIT:
            raise ValueError("null_reps must be at least 2")


@dataclass(frozen=True)
class CalibratedDetector:
    """A detector kind with its simulated critical value and provenance."""

    kind: str
    critical_value: float
    calibration: CalibrationConfig
    spec_fingerprint: str

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "alpha": self.calibration.alpha,
            "null_reps": self.calibration.null_reps,
            "seed": self.calibration.seed,
            "critical_value": self.critical_value,
            "spec_fingerprint": self.spec_fingerprint,
            "tool_version": TOOL_VERSION,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "CalibratedDetector":
        try:
            kind = doc["kind"]
            cfg = CalibrationConfig(
                seed=int(doc["seed"]),
                alpha=float(doc["alpha"]),
                null_reps=int(doc["null_reps"]),
            )
            crit = float(doc["critical_value"])
            fingerprint = str(doc["spec_fingerprint"])
        except (KeyError, TypeError, ValueError) as exc:
            raise PersistenceError(f"bad calibration record: {exc}") from None
        detector_info(kind)
        return cls(kind, crit, cfg, fingerprint)


def critical_value(stats: np.ndarray, alpha: float) -> float:
    """Empirical critical value: the ceil((1-alpha)*reps)-th order statistic.

    Conservative convention; paired with strict ">" rejection it keeps the
    level at or below alpha up to Monte Carlo error.
    """
    stats = np.sort(np.asarray(stats, dtype=np.float64))
    k = max(1, math.ceil((1.0 - alpha) * stats.size))
    return float(stats[k - 1])


def null_samples(
    spec: ModelSpec, config: CalibrationConfig, *, cell: int = 0
) -> np.ndarray:
    """The calibration null draws, one row per replicate."""
    out = np.empty((config.null_reps, spec.n), dtype=np.int64)
    for rep in range(config.null_reps):
        stream = RngStream(config.seed, stream_id(PURPOSE_CALIBRATION, cell, rep))
        out[rep] = sample(spec, stream, under="null").counts
    return out


def calibrate(
    spec: ModelSpec,
    kinds: Sequence[str],
    config: CalibrationConfig,
    *,
    tables: Optional[NullTables] = None,
    samples: Optional[np.ndarray] = None,
    hc_dist: Optional[PvalDist] = None,
) -> list[CalibratedDetector]:
    """Simulate null statistics and return per-detector critical values.

    All requested detectors are evaluated on the same null samples. A
    precomputed sample block from null_samples(spec, config) may be passed in
    when several calls share draws; it must come from the same config.
    """
    kinds = list(kinds)
    if len(set(kinds)) != len(kinds):
        raise ValueError("duplicate detector kinds")
    for kind in kinds:
        detector_info(kind)
    if tables is None:
        tables = NullTables(spec.lambdas)
    if samples is None:
        samples = null_samples(spec, config)
    elif samples.shape != (config.null_reps, spec.n):
        raise ValueError("sample block does not match the calibration config")
    detectors = [_bind(kind, spec, tables, hc_dist) for kind in kinds]
    stats = np.empty((len(kinds), config.null_reps))
    for rep in range(config.null_reps):
        counts = samples[rep]
        for j, det in enumerate(detectors):
            stats[j, rep] = det.evaluate(counts).statistic
    fingerprint = spec.null_fingerprint()
    return [
        CalibratedDetector(kind, critical_value(stats[j], config.alpha), config, fingerprint)
        for j, kind in enumerate(kinds)
    ]


def _bind(kind: str, spec: ModelSpec, tables: NullTables, hc_dist) -> Detector:
    return make_detector(kind, spec, tables, hc_dist=hc_dist)


@dataclass(frozen=True)
class PowerCell:
    """One (detector, beta, signal) grid entry."""

    detector: str
    n: int
    beta: float
    signal_kind: str
    signal: float
    power: float
    reps: int
    boundary_value: float
    flag: str = "ok"
    means_descriptor: str = ""


def estimate_power(
    spec: ModelSpec,
    calibrated: Sequence[CalibratedDetector],
    reps: int,
    seed: int,
    *,
    cell: int = 0,
    tables: Optional[NullTables] = None,
    under: str = "alternative",
    hc_dist: Optional[PvalDist] = None,
) -> list[PowerCell]:
    """Empirical rejection rate of each calibrated detector.

    Samples `reps` draws from the alternative (or the null, for level
    checks), shared across detectors, on streams disjoint from calibration.
    Rejection is strict exceedance of the critical value.
    """
    if reps < 1 or reps >= _CELL_LIMIT:
        raise ValueError("reps must be a positive integer")
    fingerprint = spec.null_fingerprint()
    for cal in calibrated:
        if cal.spec_fingerprint != fingerprint:
            raise FingerprintMismatch(
                f"{cal.kind}: calibrated for {cal.spec_fingerprint}, "
                f"model fingerprint is {fingerprint}"
            )
    if tables is None:
        tables = NullTables(spec.lambdas)
    detectors = [_bind(cal.kind, spec, tables, hc_dist) for cal in calibrated]
    stats = np.empty((len(detectors), reps))
    for rep in range(reps):
        stream = RngStream(seed, stream_id(PURPOSE_POWER, cell, rep))
        counts = sample(spec, stream, under=under).counts
        for j, det in enumerate(detectors):
            stats[j, rep] = det.evaluate(counts).statistic
    beta = spec.beta if spec.beta is not None else math.nan
    kind_tag = spec.regime.kind
    boundary = boundary_for(kind_tag, spec.sidedness, beta)
    cells = []
    for j, cal in enumerate(calibrated):
        rejections = int(np.sum(stats[j] > cal.critical_value))
        all_sentinel = bool(np.all(np.isneginf(stats[j])))
        cells.append(
            PowerCell(
                detector=cal.kind,
                n=spec.n,
                beta=float(beta),
                signal_kind=kind_tag,
                signal=float(spec.regime.value),
                power=rejections / reps,
                reps=reps,
                boundary_value=boundary,
                flag="sentinel" if all_sentinel else "ok",
                means_descriptor=spec.means_descriptor,
            )
        )
    return cells


# ---------------------------------------------------------------------------
# grid sweeps


_REGIMES = {"dense": "s", "sparse": "r", "small-means": "gamma"}


@dataclass(frozen=True)
class GridConfig:
    """Axes, model, and execution settings for a power-grid sweep."""

    n: int
    lambda0: float
    regime: str
    betas: tuple[float, ...]
    signals: tuple[float, ...]
    detectors: tuple[str, ...]
    seed: int
    lambda_dist: str = "constant"
    means_seed: Optional[int] = None
    sidedness: str = "two-sided"
    alpha: float = 0.05
    null_reps: int = 500
    power_reps: int = 200
    workers: int = 1
    hc_pvalue_reps: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))
        object.__setattr__(self, "signals", tuple(float(s) for s in self.signals))
        object.__setattr__(self, "detectors", tuple(self.detectors))
        if self.n < 1:
            raise ValueError("n: must be positive")
        if not (self.lambda0 > 0 and math.isfinite(self.lambda0)):
            raise ValueError("lambda0: must be positive and finite")
        if self.regime not in _REGIMES:
            raise ValueError(f"regime: must be one of {sorted(_REGIMES)}")
        if not self.betas:
            raise ValueError("betas: must be nonempty")
        for i, b in enumerate(self.betas):
            if not (0.0 < b < 1.0):
                raise ValueError(f"betas[{i}]: must lie in (0, 1)")
        if not self.signals:
            raise ValueError("signals: must be nonempty")
        for i, s in enumerate(self.signals):
            if not math.isfinite(s):
                raise ValueError(f"signals[{i}]: must be finite")
            if self.regime == "sparse" and s <= 0.0:
                raise ValueError(f"signals[{i}]: sparse strength must be positive")
            if self.regime == "small-means" and not (0.0 < s < 1.0):
                raise ValueError(f"signals[{i}]: deflation exponent must lie in (0, 1)")
        if not self.detectors:
            raise ValueError("detectors: must be nonempty")
        if len(set(self.detectors)) != len(self.detectors):
            raise ValueError("detectors: duplicates not allowed")
        for name in self.detectors:
            try:
                detector_info(name)
            except ValueError as exc:
                raise ValueError(f"detectors: {exc}") from None
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed: must be a 64-bit unsigned integer")
        if self.lambda_dist not in ("constant", "shifted-exp"):
            raise ValueError("lambda_dist: must be 'constant' or 'shifted-exp'")
        if self.means_seed is not None and not 0 <= self.means_seed < 2**64:
            raise ValueError("means_seed: must be a 64-bit unsigned integer")
        if self.sidedness not in ("two-sided", "one-sided"):
            raise ValueError("sidedness: must be 'two-sided' or 'one-sided'")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha: must lie in (0, 1]")
        if not 2 <= self.null_reps < _CELL_LIMIT:
            raise ValueError("null_reps: must be at least 2")
        if not 1 <= self.power_reps < _CELL_LIMIT:
            raise ValueError("power_reps: must be positive")
        if self.workers < 1:
            raise ValueError("workers: must be positive")
        if self.hc_pvalue_reps is not None and self.hc_pvalue_reps < 2:
            raise ValueError("hc_pvalue_reps: must be at least 2")
        if len(self.betas) * len(self.signals) > _CELL_LIMIT:
            raise ValueError("grid too large for the cell index space")

    @property
    def signal_kind(self) -> str:
        return _REGIMES[self.regime]

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "lambda0": self.lambda0,
            "regime": self.regime,
            "betas": list(self.betas),
            "signals": list(self.signals),
            "detectors": list(self.detectors),
            "seed": self.seed,
            "lambda_dist": self.lambda_dist,
            "means_seed": self.means_seed,
            "sidedness": self.sidedness,
            "alpha": self.alpha,
            "null_reps": self.null_reps,
            "power_reps": self.power_reps,
            "workers": self.workers,
            "hc_pvalue_reps": self.hc_pvalue_reps,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "GridConfig":
        if not isinstance(doc, dict):
            raise ValueError("grid config must be a JSON object")
        known = {
            "n", "lambda0", "regime", "betas", "signals", "detectors", "seed",
            "lambda_dist", "means_seed", "sidedness", "alpha", "null_reps",
            "power_reps", "workers", "hc_pvalue_reps",
        }
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config fields: {', '.join(sorted(unknown))}")
        required = {"n", "lambda0", "regime", "betas", "signals", "detectors", "seed"}
        missing = required - set(doc)
        if missing:
            raise ValueError(f"missing config fields: {', '.join(sorted(missing))}")
        return cls(**doc)


@dataclass(frozen=True)
class PowerGrid:
    """All cells of a sweep plus the config that produced them."""

    cells: tuple[PowerCell, ...]
    config: GridConfig
    spec_fingerprint: str
    tool_version: str = TOOL_VERSION


def _cell_spec(config: GridConfig, beta: float, signal: float) -> ModelSpec:
    if config.regime == "dense":
        regime = DenseSignal(signal)
    elif config.regime == "sparse":
        regime = SparseSignal(signal)
    else:
        regime = SmallMeansSignal(signal)
    return build_spec(
        config.n,
        regime=regime,
        lambda0=config.lambda0,
        lambda_dist=config.lambda_dist,
        means_seed=config.means_seed if config.means_seed is not None else config.seed,
        beta=beta,
        sidedness=config.sidedness,
    )


# per-worker state, built once per process by _init_worker
_WORKER: dict = {}


def _init_worker(config: GridConfig) -> None:
    base = _cell_spec(config, config.betas[0], config.signals[0])
    tables = NullTables(base.lambdas)
    cal_config = CalibrationConfig(config.seed, config.alpha, config.null_reps)
    hc_dist = None
    if config.hc_pvalue_reps is not None and "hc-p" in config.detectors:
        stream = RngStream(config.seed, stream_id(PURPOSE_AUX, 0, 0))
        hc_dist = simulated_pval_dist(
            tables, detector_info("hc-p").sided, config.hc_pvalue_reps, stream
        )
    shared_kinds = [k for k in config.detectors if k != "lrt"]
    samples = null_samples(base, cal_config)
    shared = calibrate(
        base, shared_kinds, cal_config, tables=tables, samples=samples, hc_dist=hc_dist
    )
    _WORKER.clear()
    _WORKER.update(
        config=config,
        tables=tables,
        cal_config=cal_config,
        hc_dist=hc_dist,
        shared={cal.kind: cal for cal in shared},
        samples=samples if "lrt" in config.detectors else None,
    )


def _run_cell(task: tuple[int, float, float]) -> tuple[int, list[PowerCell]]:
    index, beta, signal = task
    config: GridConfig = _WORKER["config"]
    tables: NullTables = _WORKER["tables"]
    spec = _cell_spec(config, beta, signal)
    calibrated = []
    for kind in config.detectors:
        if kind == "lrt":
            calibrated.extend(
                calibrate(
                    spec,
                    ["lrt"],
                    _WORKER["cal_config"],
                    tables=tables,
                    samples=_WORKER["samples"],
                )
            )
        else:
            calibrated.append(_WORKER["shared"][kind])
    try:
        cells = estimate_power(
            spec,
            calibrated,
            config.power_reps,
            config.seed,
            cell=index,
            tables=tables,
            hc_dist=_WORKER["hc_dist"],
        )
    except Exception as exc:  # recorded per cell, the sweep keeps going
        cells = [
            PowerCell(
                detector=kind,
                n=config.n,
                beta=beta,
                signal_kind=config.signal_kind,
                signal=signal,
                power=math.nan,
                reps=config.power_reps,
                boundary_value=boundary_for(config.signal_kind, config.sidedness, beta),
                flag=f"error:{type(exc).__name__}",
                means_descriptor=spec.means_descriptor,
            )
            for kind in config.detectors
        ]
    return index, cells


def run_grid(config: GridConfig) -> PowerGrid:
    """Sweep the (beta, signal) grid and estimate every detector's power.

    Calibration happens once per distinct null model; the oracle likelihood
    ratio, whose statistic depends on the cell's alternative, is recalibrated
    per cell on the same null draws. Cells are independent tasks; output is
    identical for any worker count.
    """
    tasks = [
        (i_b * len(config.signals) + i_s, beta, signal)
        for i_b, beta in enumerate(config.betas)
        for i_s, signal in enumerate(config.signals)
    ]
    results: dict[int, list[PowerCell]] = {}
    if config.workers == 1:
        _init_worker(config)
        for task in tasks:
            index, cells = _run_cell(task)
            results[index] = cells
    else:
        import multiprocessing as mp

        # fork keeps plain scripts usable without a __main__ guard; results
        # are schedule-independent either way
        try:
            ctx = mp.get_context("fork")
        except ValueError:
            ctx = mp.get_context("spawn")
        with ctx.Pool(
            processes=config.workers, initializer=_init_worker, initargs=(config,)
        ) as pool:
            for index, cells in pool.imap_unordered(_run_cell, tasks):
                results[index] = cells
    order = {kind: i for i, kind in enumerate(config.detectors)}
    cells = [cell for index in sorted(results) for cell in results[index]]
    cells.sort(key=lambda c: (order[c.detector], c.beta, c.signal))
    fingerprint = _cell_spec(config, config.betas[0], config.signals[0]).null_fingerprint()
    return PowerGrid(tuple(cells), config, fingerprint)


# ---------------------------------------------------------------------------
# persistence


def _format_real(x: float) -> str:
    return repr(float(x))


def _cell_row(cell: PowerCell) -> str:
    return ",".join(
        [
            cell.detector,
            str(cell.n),
            _format_real(cell.beta),
            cell.signal_kind,
            _format_real(cell.signal),
            _format_real(cell.power),
            str(cell.reps),
            _format_real(cell.boundary_value),
            cell.flag,
        ]
    )


def grid_csv_text(grid: PowerGrid) -> str:
    lines = [CSV_HEADER]
    lines.extend(_cell_row(cell) for cell in grid.cells)
    return "\n".join(lines) + "\n"


def _meta_path(csv_path: Path) -> Path:
    return csv_path.with_suffix(".meta.json")


def save_grid(grid: PowerGrid, path) -> tuple[Path, Path]:
    """Write the grid CSV and its JSON sidecar; returns both paths."""
    csv_path = Path(path)
    text = grid_csv_text(grid)
    data = text.encode("utf-8")
    csv_path.write_bytes(data)
    meta = {
        "format_version": FORMAT_VERSION,
        "tool_version": grid.tool_version,
        "csv_sha256": hashlib.sha256(data).hexdigest(),
        "spec_fingerprint": grid.spec_fingerprint,
        "config": grid.config.to_json(),
    }
    meta_path = _meta_path(csv_path)
    meta_path.write_text(
        json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return csv_path, meta_path


def _parse_cell(line_no: int, line: str) -> PowerCell:
    parts = line.split(",")
    if len(parts) != 9:
        raise PersistenceError(f"line {line_no}: expected 9 fields, got {len(parts)}")
    try:
        detector_info(parts[0])
    except ValueError as exc:
        raise PersistenceError(f"line {line_no}: {exc}") from None
    try:
        return PowerCell(
            detector=parts[0],
            n=int(parts[1]),
            beta=float(parts[2]),
            signal_kind=parts[3],
            signal=float(parts[4]),
            power=float(parts[5]),
            reps=int(parts[6]),
            boundary_value=float(parts[7]),
            flag=parts[8],
        )
    except ValueError as exc:
        raise PersistenceError(f"line {line_no}: {exc}") from None


def load_grid(path) -> PowerGrid:
    """Read back a grid CSV with its sidecar, verifying version and checksum."""
    csv_path = Path(path)
    meta_path = _meta_path(csv_path)
    if not meta_path.exists():
        raise PersistenceError(f"missing grid sidecar {meta_path}")
    try:
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise PersistenceError(f"bad grid sidecar: {exc}") from None
    if meta.get("format_version") != FORMAT_VERSION:
        raise PersistenceError(
            f"unsupported grid format version {meta.get('format_version')!r}"
        )
    data = csv_path.read_bytes()
    digest = hashlib.sha256(data).hexdigest()
    if digest != meta.get("csv_sha256"):
        raise PersistenceError("grid CSV does not match its recorded checksum")
    try:
        config = GridConfig.from_json(meta["config"])
    except (KeyError, TypeError, ValueError) as exc:
        raise PersistenceError(f"bad grid config in sidecar: {exc}") from None
    lines = data.decode("utf-8").splitlines()
    if not lines or lines[0] != CSV_HEADER:
        raise PersistenceError("grid CSV header mismatch")
    cells = tuple(
        _parse_cell(i + 2, line) for i, line in enumerate(lines[1:]) if line
    )
    return PowerGrid(
        cells,
        config,
        str(meta.get("spec_fingerprint", "")),
        str(meta.get("tool_version", TOOL_VERSION)),
    )


def save_calibration(calibrated: Sequence[CalibratedDetector], path) -> Path:
    out = Path(path)
    doc = [cal.to_json() for cal in calibrated]
    out.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    return out


def load_calibration(path) -> list[CalibratedDetector]:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise PersistenceError(f"bad calibration file: {exc}") from None
    if not isinstance(doc, list):
        raise PersistenceError("calibration file must hold a JSON array")
    return [CalibratedDetector.from_json(entry) for entry in doc]
