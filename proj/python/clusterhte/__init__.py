"""Kernel-based tests for heterogeneous treatment effects under clustered
interference: studentized statistics S1/S2, bootstrap null distributions,
and the Holm classification of the heterogeneity source."""

from ._core import (
    ClusteredSample,
    DataError,
    NumericError,
    bandwidth,
    bootstrap_s1,
    bootstrap_s2,
    eval_kernel,
    gaussian_abs_cov,
    gen_dgp,
    holm,
    kernel_convolution,
    kernel_l2,
    load_csv,
    normal_cdf,
    ols_cluster_comparison,
    run_tests,
    s1_test,
    s2_test,
)

__all__ = [
    "ClusteredSample",
    "DataError",
    "NumericError",
    "bandwidth",
    "bootstrap_s1",
    "bootstrap_s2",
    "eval_kernel",
    "gaussian_abs_cov",
    "gen_dgp",
    "holm",
    "kernel_convolution",
    "kernel_l2",
    "load_csv",
    "normal_cdf",
    "ols_cluster_comparison",
    "run_tests",
    "s1_test",
    "s2_test",
]
