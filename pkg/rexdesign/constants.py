# Exchange updates
REFRESH_CADENCE = 64
BOUNDARY_SNAP = 1e-14
DET_FACTOR_FLOOR = 1e-14

# Regularity
RANK_RATIO = 1e-10
REGULARITY_RATIO = 1e-12
DEPENDENCE_RATIO = 1e-12

# Step formulas
DISCRIMINANT_TOL = 1e-9
ZERO_TOL = 1e-12
NUMERIC_SNAP = 1e-10
NUMERIC_XTOL = 1e-12

# Solvers
DEFAULT_GAMMA = 4.0
DEFAULT_EFF = 1 - 1e-6
DEFAULT_T_MAX = 60.0
STALL_ITERATIONS = 50
STALL_TOL = 1e-15
INIT_TRIES = 100

# Reporting and benchmark models
LOG_EFF_CAP = 16.0
MAX_GRID_POINTS = 10_000_000
RANDOM_SPACE_TRIES = 10
DEFAULT_REPEATS = 5
