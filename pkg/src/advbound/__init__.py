"""Model-independent lower bounds on adversarial error.

Given a dataset and a perturbation strength, the estimator constructs small
error regions (unions of metric balls around samples), measures how much
probability mass their expansions swallow, and extrapolates to the clean
error rate of interest. The resulting number lower-bounds the adversarial
error of EVERY classifier with that clean error, for both plain l2
perturbations and trace-distance perturbations of quantum state encodings.
Companion gradient attacks (`pgd_l2`, `td_pgd`) provide empirical upper
references against a built-in toy classifier.
"""

from .attacks import AttackConfig, AttackOutcome, adversarial_error, clean_error, pgd_l2, run_attack, td_pgd
from .classifier import LogisticClassifier, softmax_temperature, train_toy_classifier
from .datasets import DatasetFormat, DatasetSource, Normalization, SampleSet, load_dataset, save_npz
from .distindex import (
    CondensedView,
    SortedDistanceIndex,
    condense,
    condense_view,
    find_rank,
    index_from_matrix,
    load_distance_cache,
    pairwise_distances,
    save_distance_cache,
)
from .errors import (
    AdvBoundError,
    AlphaTooSmall,
    BracketError,
    BudgetExceeded,
    BudgetExhausted,
    DegenerateLabels,
    DimensionError,
    DomainError,
    FormatError,
    InvalidSample,
    MetricMismatch,
    MissingLabels,
    NotNormalized,
    NumericalError,
    PartitionError,
    ZeroNormSample,
)
from .estimator import (
    BoundConfig,
    BoundReport,
    IterationPoint,
    SweepPoint,
    estimate_bound,
    fit_line,
    invert_bound,
    sweep_T,
)
from .metrics import (
    L2,
    TRACE_AMPLITUDE,
    TRACE_ANGLE,
    MetricKind,
    MetricSpace,
    amplitude_fidelity,
    angle_fidelity,
    bures_angle,
    expand_radius,
    l2_distance,
    metric_from_name,
    normalized_rows,
    trace_distance_from_fidelity,
)
from .regions import BestSphere, CarveState, ErrorRegion, best_sphere, evaluate_membership, fit_error_region, initial_state

__version__ = "0.1.0"

__all__ = [
    "AdvBoundError",
    "AlphaTooSmall",
    "AttackConfig",
    "AttackOutcome",
    "BestSphere",
    "BoundConfig",
    "BoundReport",
    "BracketError",
    "BudgetExceeded",
    "BudgetExhausted",
    "CarveState",
    "CondensedView",
    "DatasetFormat",
    "DatasetSource",
    "DegenerateLabels",
    "DimensionError",
    "DomainError",
    "ErrorRegion",
    "FormatError",
    "InvalidSample",
    "IterationPoint",
    "L2",
    "LogisticClassifier",
    "MetricKind",
    "MetricMismatch",
    "MetricSpace",
    "MissingLabels",
    "Normalization",
    "NotNormalized",
    "NumericalError",
    "PartitionError",
    "SampleSet",
    "SortedDistanceIndex",
    "SweepPoint",
    "TRACE_AMPLITUDE",
    "TRACE_ANGLE",
    "ZeroNormSample",
    "adversarial_error",
    "amplitude_fidelity",
    "angle_fidelity",
    "best_sphere",
    "bures_angle",
    "clean_error",
    "condense",
    "condense_view",
    "estimate_bound",
    "evaluate_membership",
    "expand_radius",
    "find_rank",
    "fit_error_region",
    "fit_line",
    "index_from_matrix",
    "initial_state",
    "invert_bound",
    "l2_distance",
    "load_dataset",
    "load_distance_cache",
    "metric_from_name",
    "normalized_rows",
    "pairwise_distances",
    "pgd_l2",
    "run_attack",
    "save_distance_cache",
    "save_npz",
    "softmax_temperature",
    "sweep_T",
    "td_pgd",
    "trace_distance_from_fidelity",
    "train_toy_classifier",
    "__version__",
]
