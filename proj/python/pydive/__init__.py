"""Distributional IV estimation with monotone Bernstein CDFs."""

from ._core import (
    BernsteinCdf,
    DataError,
    DegenerateCdfError,
    DiveFit,
    DomainError,
    RangeError,
    TestResult,
    ace,
    cvm_statistic,
    cvm_test,
    dok,
    dte,
    fit,
    hsic_statistic,
    hsic_test,
    logit_ce,
    qte,
    simulate,
    true_cdf,
)

__all__ = [
    "BernsteinCdf",
    "DataError",
    "DegenerateCdfError",
    "DiveFit",
    "DomainError",
    "RangeError",
    "TestResult",
    "ace",
    "cvm_statistic",
    "cvm_test",
    "dok",
    "dte",
    "fit",
    "hsic_statistic",
    "hsic_test",
    "logit_ce",
    "qte",
    "simulate",
    "true_cdf",
]
