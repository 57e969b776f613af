"""Spectral simulation and Monte Carlo verification for the stochastic Burgers
equation with rough noise, split into feed-forward levels plus a remainder."""

from .errors import (ConfigurationError, DiagnosticError, InfeasibleBaseError,
                     OutOfRegimeError, UnsupportedRegimeError)
from .gaussian import (DecaySpec, OUSpec, b_nonlinearity, chaos_covariance_oracles,
                       convolution_sum_bruteforce, j_convolve, ou_covariance_oracle, ou_step,
                       wick_square)
from .noise import NoiseBank, NoiseStream
from .planner import (LevelPlan, constraint_margins, materialize_spectra, minimal_levels,
                      plan_schedule, validate_plan)
from .solvers import (LevelRun, SystemConfig, fixed_point_regime_check,
                      girsanov_integrand_diagnostic, run_direct_burgers, run_frak_system,
                      run_split_remainder, run_x_system, simulate)
from .spectral import (DeathState, DyadicPartition, FieldPath, RegularityFit, SpectralField,
                       apply_diagonal, besov_exponent_fit, block_norms, bony_decompose,
                       pointwise_product)

__version__ = "0.1.0"
