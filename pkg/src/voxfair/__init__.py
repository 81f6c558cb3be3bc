"""Group-wise cost-sensitive evaluation and calibration of binary posteriors."""

__version__ = "0.1.0"

from .calibration import (
    AffineCalibrator,
    CalibrationScope,
    PavCalibrator,
    apply_affine,
    apply_pav,
    calibration_loss,
    cv_calibrate,
    fit_affine,
    fit_pav,
)
from .data import (
    ClassLabel,
    EvalSet,
    FoldAssignment,
    GroupKey,
    Priors,
    ScoredSample,
    assign_folds,
    derive_group,
    empirical_priors,
    filter_severity,
    format_eval_csv,
    parse_eval_csv,
)
from .errors import CalibrationError, DegenerateDataError, SchemaError, VoxfairError
from .metrics import (
    ConfusionRates,
    CostMatrix,
    bayes_threshold,
    confusion_rates,
    cross_entropy,
    decide,
    expected_cost,
    llr,
    log_odds,
    naive_ec,
    normalized_ec,
    normalized_xe,
    standard_metrics,
    summarize,
)
from .report import MetricReport
from .resampling import BootstrapEstimate, bootstrap_metric, bootstrap_report
from .synthetic import GroupScenario, SyntheticSpec, generate, metadata_baseline, table1_fixture

__all__ = [
    "__version__",
    "AffineCalibrator",
    "CalibrationScope",
    "PavCalibrator",
    "apply_affine",
    "apply_pav",
    "calibration_loss",
    "cv_calibrate",
    "fit_affine",
    "fit_pav",
    "ClassLabel",
    "EvalSet",
    "FoldAssignment",
    "GroupKey",
    "Priors",
    "ScoredSample",
    "assign_folds",
    "derive_group",
    "empirical_priors",
    "filter_severity",
    "format_eval_csv",
    "parse_eval_csv",
    "ConfusionRates",
    "CostMatrix",
    "bayes_threshold",
    "confusion_rates",
    "cross_entropy",
    "decide",
    "expected_cost",
    "llr",
    "log_odds",
    "naive_ec",
    "normalized_ec",
    "normalized_xe",
    "standard_metrics",
    "summarize",
    "CalibrationError",
    "DegenerateDataError",
    "SchemaError",
    "VoxfairError",
    "MetricReport",
    "BootstrapEstimate",
    "bootstrap_metric",
    "bootstrap_report",
    "GroupScenario",
    "SyntheticSpec",
    "generate",
    "metadata_baseline",
    "table1_fixture",
]
