"""Capacity lower bounds for the discrete-time Poisson channel."""

from .analytic import (
    digamma,
    exact_mi_direct,
    exact_mi_gamma,
    gmi_closed_form,
    lapidoth_moser_bound,
    lm_rate_check,
    output_marginal,
    s_hat,
    theorem_rate,
    weighted_metric_denominator,
)
from .channel import DecoderConfig, GammaInput, poisson_pmf
from .montecarlo import estimate_gmi_mc, estimate_lm_mc, rng_stream, run_random_coding
from .quadrature import IntegrationResult, integrate_adaptive

__version__ = "0.1.0"
