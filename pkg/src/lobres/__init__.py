"""Block-shaped limit order book simulation and its high-resilience limit.

Spreads widen as a large trader eats into a block-shaped book and revert to
their baseline at resilience rate kappa * K_t; wealth in this structural
model converges, as kappa grows, to a reduced-form model with quadratic
trading costs (1 - alpha) / (kappa * K * h).  The package simulates both
wealth processes on common noise, verifies the convergence rates and the
dominance of smoothed over block execution, and evaluates the
leading-order-optimal portfolio tracker.
"""

from .book import (BookParams, BookTemplate, ReferencePricePath, SpreadPaths,
                   evolve_spreads, reference_price, scaled_excess_spread)
from .errors import (ConfigError, ConfigParseError, ConfigValidationError,
                     InsufficientData, NumericFailure)
from .experiments import (ConvergenceReport, FundamentalSpec, KappaLadder,
                          LemmaJumpReport, RateFit, TrackerBoundReport,
                          UniformBounds, UtilityReport, fit_rate, ladder_grid,
                          lemma_jump_experiment, l2_convergence_experiment,
                          remark1_experiment, theorem1_experiment,
                          tracker_bound_experiment, utility_experiment)
from .paths import (RandomSource, SampledPath, TimeGrid, as_path, constant_path,
                    function_path, make_grid, sample_brownian, sample_ito)
from .strategies import (Strategy, StrategyDiagnostics, TrackerSpec, block_schedule,
                         diagnostics, exponential_tracker, optimal_tracker,
                         position_paths, rate_strategy, read_strategy_csv,
                         smooth_blocks, write_strategy_csv, zero_strategy)
from .wealth import SafeAccountPath, WealthPath, ac_wealth, ow_wealth, safe_account

__version__ = "0.1.0"

__all__ = [
    "BookParams", "BookTemplate", "ConfigError", "ConfigParseError",
    "ConfigValidationError", "ConvergenceReport", "FundamentalSpec",
    "InsufficientData", "KappaLadder", "LemmaJumpReport", "NumericFailure",
    "RandomSource", "RateFit", "ReferencePricePath", "SafeAccountPath",
    "SampledPath", "SpreadPaths", "Strategy", "StrategyDiagnostics", "TimeGrid",
    "TrackerBoundReport", "TrackerSpec", "UniformBounds", "UtilityReport",
    "WealthPath", "ac_wealth", "as_path", "block_schedule", "constant_path",
    "diagnostics", "evolve_spreads", "exponential_tracker", "fit_rate",
    "function_path", "ladder_grid", "lemma_jump_experiment",
    "l2_convergence_experiment", "make_grid", "optimal_tracker", "ow_wealth",
    "position_paths", "rate_strategy", "read_strategy_csv", "reference_price",
    "remark1_experiment", "safe_account", "sample_brownian", "sample_ito",
    "scaled_excess_spread", "smooth_blocks", "theorem1_experiment",
    "tracker_bound_experiment", "utility_experiment", "write_strategy_csv",
    "zero_strategy",
]
