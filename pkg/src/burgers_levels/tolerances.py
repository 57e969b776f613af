"""Every numerical tolerance and reference ensemble size used by the checks.

Keeping them in one place makes it obvious what a verdict depends on.
"""

# --- fitting -----------------------------------------------------------------
FIT_K_MIN = 4                 # lower edge of the mode-decay fit band
FIT_K_MAX_FRACTION = 4        # upper edge is K // FIT_K_MAX_FRACTION
MIN_FIT_POINTS = 4
MIN_FIT_SAMPLES = 30
MIN_R_SQUARED = 0.9

# --- mode-decay slope tolerances ---------------------------------------------
TOL_OU_SLOPE = 0.1
TOL_WICK2_SLOPE = 0.15
TOL_WICK2_SLOPE_CRITICAL = 0.2      # gamma = 1/2, logarithmic loss
TOL_JZ_SLOPE = 0.2
TOL_RESONANT_SLOPE = 0.2
TOL_THETA_Z_SLOPE = 0.3

# --- regularity (block regression) tolerances --------------------------------
TOL_OU_REGULARITY = 0.1
TOL_LEVEL_REGULARITY = 0.1
TOL_REMAINDER_REGULARITY = 0.15
TOL_RHO_REGULARITY = 0.2
MIN_RHO_ETA_GAP = 0.3
MAX_DEAD_FRACTION = 0.5

# --- Monte Carlo agreement ---------------------------------------------------
N_STANDARD_ERRORS = 3.0

# --- decomposition identity --------------------------------------------------
DECOMPOSITION_MAX_DISCREPANCY = 1e-2
DECOMPOSITION_ORDER = 1.0
DECOMPOSITION_ORDER_TOL = 0.2
ZERO_NOISE_MAX_DISCREPANCY = 1e-10
SPLIT_MAX_DISCREPANCY = 1e-10

# --- Girsanov cutoff sweep ---------------------------------------------------
GIRSANOV_STABLE_TOL = 0.10          # ratio per doubling within 1 +- this
GIRSANOV_GROWTH_FACTOR = 2.0        # divergence: at least this per doubling

# --- lattice sums ------------------------------------------------------------
LATTICE_SUM_STABLE_TOL = 0.05
LATTICE_SUM_GROWTH_MIN = 1.05

# --- distribution tests ------------------------------------------------------
DISTRIBUTION_ALPHA = 0.01           # family-wise level, Bonferroni corrected
DISTRIBUTION_MIN_SURVIVORS = 500
DISTRIBUTION_PERMUTATIONS = 999

# --- spectral budget ---------------------------------------------------------
BUDGET_RTOL = 1e-12

# --- blow-up -----------------------------------------------------------------
BLOWUP_THRESHOLD = 1e8
