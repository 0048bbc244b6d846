"""Cut-based consolidated valuation."""

from ._cbv import (
    CbvError,
    ConvergenceError,
    CutStatistics,
    IntegrityError,
    ValuationResult,
    aggregate,
    bilateral_goods_index,
    boundary_bound,
    chain_link,
    clear,
    condition_diagnostics,
    control_matrix,
    cvar,
    delta_max,
    eval_waterfall,
    evaluate,
    fisher_indices,
    format_grouped,
    hedge_vector,
    monte_carlo_band,
    package_statistics,
    pwa_error_bound,
    run_cli,
    scale_units,
    spectral_radius_bound,
    validate_package,
)

__version__ = "1.0.0"
