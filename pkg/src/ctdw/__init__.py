"""Robust Bayesian median regression for lower-truncated count data.

Contaminated truncated discrete Weibull (cTDW) mixtures with a shifted-median
log link, a native adaptive Metropolis sampler, posterior-predictive and
influence diagnostics, importance-sampled leave-one-out comparison, and a
replicated Monte Carlo robustness harness.
"""

from ctdw.dwcore import (
    CTDWParams,
    TDWParams,
    TNBParams,
    ctdw_cdf,
    ctdw_log_pmf,
    ctdw_pmf,
    ctdw_quantile,
    ctdw_sample,
    median_to_q,
    tdw_cdf,
    tdw_kurtosis,
    tdw_log_pmf,
    tdw_pmf,
    tdw_quantile,
    tdw_raw_moment,
    tdw_sample,
    tnb_cdf,
    tnb_log_pmf,
    tnb_pmf,
    tnb_quantile,
    tnb_sample,
    tnb_truncated_mean,
)

__version__ = "0.1.0"
