"""Outlier detection for databases of node-attributed network samples.

Each sample is contrasted with its nearest neighbours by a network-regularised
sparse regression; the nodes it selects form the explanatory subnetworks and
the subspace they span is scored by local outlier factor.
"""

from .errors import (
    ConfigError,
    EmptySupport,
    EvaluationError,
    FormatError,
    NetOutlierError,
    NumericalFailure,
    ParameterError,
    ValidationError,
)
from .evaluate import evaluate_report, roc_auc, subnetwork_recovery
from .model import (
    NetworkDatabase,
    NetworkSample,
    effective_edges,
    impute_missing,
    load_database,
    write_database,
)
from .scoring import (
    DetectConfig,
    Explanation,
    OutlierReport,
    SampleResult,
    detect_all,
    detect_one,
    detect_sample,
    extract_subnetworks,
    lof_score,
)
from .solver import ModelCoefficients, SolverOptions, fit, newton_solve, recover_coefficients
from .synth import GroundTruth, SynthConfig, generate_synthetic

__version__ = "0.1.0"
