"""Detection tests for sparse mean shifts in vectors of Poisson counts.

The package covers the full pipeline: exact log-space tail probabilities and
P-values, the mixture model and its samplers, a family of detection
statistics (goodness-of-fit sums, max-type scans, P-value combinations,
higher criticism variants, the oracle likelihood ratio), closed-form
detection boundaries, and a deterministic Monte Carlo harness for
calibration, power estimation, and phase-diagram grids.
"""

from ._version import __version__
from .boundaries import (
    boundary_for,
    dense_boundary,
    max_test_boundary,
    one_sided_dense_boundary,
    regime_label,
    side_of_boundary,
    small_means_boundary,
    sparse_boundary,
)
from .detectors import (
    DETECTOR_NAMES,
    Detector,
    DetectorResult,
    NullTables,
    PvalDist,
    bonferroni,
    chi_squared,
    detector_info,
    fisher,
    freeman_tukey,
    g2_statistic,
    higher_criticism_pval,
    higher_criticism_z,
    make_detector,
    max_abs_z,
    max_z,
    one_sided_hc,
    one_sided_sum,
    tukey_hc,
)
from .harness import (
    CalibratedDetector,
    CalibrationConfig,
    FingerprintMismatch,
    GridConfig,
    PersistenceError,
    PowerCell,
    PowerGrid,
    calibrate,
    estimate_power,
    load_calibration,
    load_grid,
    run_grid,
    save_calibration,
    save_grid,
)
from .model import (
    DenseSignal,
    ExplicitSignal,
    ModelSpec,
    Sample,
    SmallMeansSignal,
    SparseSignal,
    build_spec,
    constant_means,
    oracle_lrt,
    sample,
    shifted_exponential_means,
)
from .rng import RngStream, poisson
from .tails import (
    berry_esseen_gap,
    bohman_lower_bound,
    chernoff_lower_tail_bounds,
    chernoff_upper_tail_bounds,
    h_rate,
    log_pmf,
    log_two_sided_pvalue,
    one_sided_pvalue,
    pvalue_null_cdf,
    support_cap,
    survival_lower,
    survival_upper,
    two_sided_pvalue,
    two_sided_tail,
)

__all__ = [
    "__version__",
    # tails
    "log_pmf",
    "survival_upper",
    "survival_lower",
    "two_sided_tail",
    "two_sided_pvalue",
    "log_two_sided_pvalue",
    "one_sided_pvalue",
    "pvalue_null_cdf",
    "support_cap",
    "h_rate",
    "chernoff_upper_tail_bounds",
    "chernoff_lower_tail_bounds",
    "bohman_lower_bound",
    "berry_esseen_gap",
    # rng
    "RngStream",
    "poisson",
    # model
    "DenseSignal",
    "SparseSignal",
    "SmallMeansSignal",
    "ExplicitSignal",
    "ModelSpec",
    "Sample",
    "build_spec",
    "constant_means",
    "shifted_exponential_means",
    "sample",
    "oracle_lrt",
    # detectors
    "DETECTOR_NAMES",
    "Detector",
    "DetectorResult",
    "NullTables",
    "PvalDist",
    "detector_info",
    "make_detector",
    "chi_squared",
    "g2_statistic",
    "freeman_tukey",
    "max_abs_z",
    "max_z",
    "one_sided_sum",
    "tukey_hc",
    "bonferroni",
    "fisher",
    "higher_criticism_z",
    "higher_criticism_pval",
    "one_sided_hc",
    # boundaries
    "dense_boundary",
    "sparse_boundary",
    "one_sided_dense_boundary",
    "small_means_boundary",
    "max_test_boundary",
    "boundary_for",
    "regime_label",
    "side_of_boundary",
    # harness
    "CalibrationConfig",
    "CalibratedDetector",
    "PowerCell",
    "PowerGrid",
    "GridConfig",
    "FingerprintMismatch",
    "PersistenceError",
    "calibrate",
    "estimate_power",
    "run_grid",
    "save_grid",
    "load_grid",
    "save_calibration",
    "load_calibration",
]
