"""Multiproposal MCMC toolkit: Python bindings over the C++ core."""

from ._core import (  # noqa: F401
    ChainTrace,
    CloudRecord,
    ConfigError,
    DegenerateWeightsError,
    KernelSpec,
    ParameterError,
    TargetModel,
    UnsupportedOperationError,
    adapt_rate,
    banana_target,
    draw_limit_slingshot,
    ess,
    estimate_rb,
    estimate_standard,
    gaussian_mixture_target,
    gaussian_posterior_target,
    gaussian_reference_target,
    gaussian_target,
    kernel_from_json,
    kernel_redraws,
    ks_distance,
    loglog_slope,
    order_stat_mse,
    product_normal_target,
    run_chain,
    sigma_star,
    sigma_star_norm,
    step,
    target_from_json,
    tv_estimate,
    weight_mean_variance,
)

__all__ = [n for n in dir() if not n.startswith("_")]
__version__ = "0.1.0"
