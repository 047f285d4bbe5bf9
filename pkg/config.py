# --- Configuration Module ---
"""
Configuration constants and defaults for the safe linear bandit simulator
"""

# Experiment defaults (δ, λ, R used in every published simulation)
DEFAULT_DELTA = 0.01
DEFAULT_LAMBDA = 1.0
DEFAULT_NOISE_SCALE = 0.1
DEFAULT_BASE_SEED = 20191208
DEFAULT_OUTPUT_DIR = "results"
DEFAULT_LOG_LEVEL = "INFO"
DEFAULT_THREADS = 1
THREADS_ENV_VAR = "SAFEBAN_THREADS"

# Linear algebra
INVERSE_REFRESH_INTERVAL = 10_000   # rank-1 updates between from-scratch inversions
JACOBI_TOLERANCE = 1e-12            # off-diagonal Frobenius norm
JACOBI_MAX_SWEEPS = 100
SYMMETRY_TOLERANCE = 1e-12

# Action sets
DEFAULT_GRID_RESOLUTION = 101       # points per axis, forced odd
MAX_CONTEXT_RETRIES = 1000
ASSUMPTION_LOSS_BOUND = 1.0         # |μᵀx| ≤ 1

# Warm-up samplers
REJECTION_MAX_TRIES = 1_000_000
LAMBDA_MINUS_SAMPLES = 10_000
LAMBDA_MINUS_DEFLATION = 0.9

# Numeric slack for boundary membership checks
BOUNDARY_SLACK = 1e-9
LP_FEASIBILITY_TOLERANCE = 1e-9
LP_MAX_VARIABLES = 64
GAP_ZERO_TOLERANCE = 1e-12          # gap lower bounds below this count as 0

# Policies
POLICY_KINDS = ["safe_lucb", "gslucb", "no_exploration", "oracle"]
REGION_KINDS = ["ell1", "ell2"]
SAMPLER_KINDS = ["rejection", "surface", "warmup_arms"]
T_PRIME_RULES = ["t_delta", "t_big_delta", "t_zero"]
DEFAULT_REGION_KIND = "ell1"
# Rounds between GSLUCB gap-bound updates. Each update solves O(K²) small LPs
# (about 35 ms at K = 15, d = 4). A K-armed run that explores for all 2·10⁴
# rounds then takes about 12 minutes per replication at 1, roughly 4 hours for
# the 20-replication preset on one worker; 10 cuts that tenfold.
DEFAULT_GSLUCB_EVERY = 1

PHASE_PURE_EXPLORATION = "PureExploration"
PHASE_EXPLORE_EXPLOIT = "ExploreExploit"

# Instances
INSTANCE_KINDS = ["finite", "box", "contextual", "random_karmed", "fig2"]
NOISE_KINDS = ["gaussian", "uniform"]

# Published figure settings
FIG2_MU = [0.9, 0.044]
FIG2_B = [[0.6, 1.8], [1.8, 0.4]]
FIG2_C = 0.9
FIG2_HORIZON = 100_000
FIG2_T_PRIME = 1054
FIG2_SNAPSHOT_ROUND = 50_000
FIG2_REPLICATIONS = 20
KARMED_DIM = 4
KARMED_ARMS = 15
KARMED_WARMUP_ARMS = 5
KARMED_B_RANGE = (0.0, 0.5)
KARMED_C_RANGE = (0.0, 1.0)
KARMED_HORIZON = 20_000
KARMED_REPLICATIONS = 20
PRESET_NAMES = ["fig1-karmed", "fig2-polytope", "fig3-safesets"]

# Output
CSV_SIGNIFICANT_DIGITS = 12
RUN_CSV_COLUMNS = [
    "round", "x", "loss", "regret", "cum_regret", "per_step_regret",
    "term1", "term2", "alpha_t", "safe", "phase",
]
AGGREGATE_CSV_COLUMNS = ["round", "mean", "std", "n"]
PLOT_MAX_POINTS = 2000
