"""Constants used throughout the wsdict package.

This module centralizes default parameters, exit codes and file-format names.
"""

# =============================================================================
# Structure Parameters
# =============================================================================

# Group constant: minimum size of a climbing group and one more than the
# largest helping group. Fixed; any other value is rejected.
GROUP_CONSTANT = 5

# Default width constant d in w_i = d * 2^(i+k). With k = 3 this is the
# smallest d whose D_0 holds the six size fields.
DEFAULT_D = 24

# Default base-size exponent k in capacity(i) = 2^(2^(i+k)). Below 3, D_i and
# the capped structures outnumber the helping points a level must group, and
# shift-up runs out of climbing points.
DEFAULT_K = 3

# Smallest k for which the shift-up liveness argument holds, as a function of d:
# k > log log (380 + 20d) + 1. Exposed so callers can opt into the proven regime.
LIVENESS_BASE = 380
LIVENESS_PER_D = 20

# Default simulated cache-line length in elements (harness only)
DEFAULT_B_SIM = 64

# Number of size fields encoded in each full D_i (A, R, W, H, C, G)
SIZE_FIELDS = 6

# Extra bit per size field; holds in-operation overshoot
FIELD_SPARE_BITS = 1

# Levels on which Parameters checks that D_i holds the size fields
FIELD_CHECK_LEVELS = 6

# Settle passes allowed after an update before giving up on slack repair
MAX_SETTLE_PASSES = 64

# Level reported for the missing outer side of min(P) and max(P)
UNBOUNDED = 1 << 30

# =============================================================================
# Degenerate Forms
# =============================================================================

# Sizes at or below this are stored without any block decoding:
# n=1 bare element, n=2 G0=[min,max], n=3 D0=[mid] G0=[min,max]
SMALL_FORM_LIMIT = 3

# =============================================================================
# Harness
# =============================================================================

# Exit codes of the replay CLI
EXIT_SUCCESS = 0
EXIT_ERROR = 1
EXIT_MISMATCH = 2
EXIT_INVARIANT_VIOLATION = 3
EXIT_USAGE = 4

# Trace verbs, one operation per line: "<verb> <key>"
TRACE_VERBS = ("insert", "delete", "search", "pred", "succ")

# CSV report columns, in output order
CSV_COLUMNS = (
    "op_index",
    "op",
    "key",
    "answer",
    "ws_oracle",
    "comparisons",
    "element_moves",
    "charged_cost",
    "cache_lines",
    "levels_touched",
    "valid",
)

# Rendering of the two sentinels in CSV answers
NEG_INF_TEXT = "-inf"
POS_INF_TEXT = "+inf"

# Answer recorded when an insert hits an existing key
DUPLICATE_TEXT = "duplicate"

# Workload generator names accepted by --gen NAME[:ARG]
GENERATORS = ("uniform", "zipf", "working-set", "adversarial-minmax")

# Default generator arguments
DEFAULT_ZIPF_EXPONENT = 1.2
DEFAULT_WORKING_SET_WINDOW = 16

# Default key universe exponent (keys drawn from [0, 2^16))
DEFAULT_UNIVERSE_BITS = 16

# Resumed copies compare answers up to the end of the trace unless a window is set
DEFAULT_RESUME_WINDOW = 0

# Share of operations that are searches in the mixed generators
SEARCH_SHARE = 0.6
