"""Constants for metricwise."""

from logging import Logger, getLogger

LOGGER: Logger = getLogger(__package__)

DOMAIN = "metricwise"

# Environment
ENV_SEED = "METRICWISE_SEED"

# Planning defaults
DEFAULT_LAMBDA = 0.9
DEFAULT_THRESHOLD = 0.5
DEFAULT_EPSILON = 1e-10
DEFAULT_B_MIN = 1e-6
DEFAULT_ALPHA = 0.5

# Confidence intervals
DEFAULT_LEVEL = 0.9
BETA_CLAMP = 1e-6
QUANTILE_TOLERANCE = 1e-8

# Numerical tolerances
PROBABILITY_SUM_TOLERANCE = 1e-12
BUDGET_SUM_TOLERANCE = 1e-9
LOG_ERROR_FLOOR = 1e-30

# Sampling methods
METHOD_UNIFORM = "uniform"
METHOD_IMPORTANCE = "importance"
METHOD_BERNOULLI = "bernoulli"

METHODS = [METHOD_UNIFORM, METHOD_IMPORTANCE, METHOD_BERNOULLI]

METHOD_ALIASES = {
    "uniform": METHOD_UNIFORM,
    "is": METHOD_IMPORTANCE,
    "importance": METHOD_IMPORTANCE,
    "bs": METHOD_BERNOULLI,
    "bernoulli": METHOD_BERNOULLI,
}

# Report flags
FLAG_CLAMPED = "clamped"
FLAG_DEGENERATE = "degenerate"
FLAG_POINT_MASS = "point_mass"
FLAG_DEGENERATE_CLASS = "degenerate_class"
FLAG_EXACT = "exact"

# Random stream roots
STREAM_POOL = 0
STREAM_REPETITION = 1
STREAM_ONLINE = 2

# Scenario scales
DESK_POINTS = 2000
DESK_REPETITIONS = 500
FULL_POINTS = 11200
FULL_REPETITIONS = 3000

# Exit codes
EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VALIDATION = 2
EXIT_DEGENERATE = 3

# Output formats
RESULTS_COLUMNS = [
    "method",
    "budget",
    "mean_abs_err",
    "mean_log_sq_err",
    "std",
    "stderr",
    "coverage",
    "mean_distinct",
    "frac_saturated",
    "failures",
    "mean_draws",
]
FLOAT_FORMAT = "%.10g"

# Multilabel experiments
DEFAULT_CLASSES = 3
MULTILABEL_METRICS = ["MicroF1", "MacroF1"]
