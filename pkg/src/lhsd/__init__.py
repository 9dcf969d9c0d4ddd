"""Latin hypercube sampling for dependent inputs.

Stratified designs are pushed through the chain of conditional quantiles of
the target law (or through inverse conditional copulas), so the joint law is
preserved exactly while the conditional distributions are stratified.
"""
from .copula import BivariateLogisticCopula, GaussianCopula, IndependentCopula
from .dist import Gumbel, Logistic, MvnSpec, Normal, Triangular, Truncated, Uniform, mvn_conditional
from .estimate import analyze, confidence_interval, estimate_tau, estimate_variance, fit_main_effects
from .sampler import (
    SCHEMES,
    ChainModel,
    CopulaModel,
    MvnModel,
    SampleMatrix,
    draw,
    sample_lhs_independent,
    sample_lhs_rank,
    sample_lhsd,
    sample_lhsd_copula,
    sample_srs,
)
from .strata import Design, generate_design, stratification_certificate

__version__ = "0.1.0"

__all__ = [
    "BivariateLogisticCopula",
    "GaussianCopula",
    "IndependentCopula",
    "Gumbel",
    "Logistic",
    "MvnSpec",
    "Normal",
    "Triangular",
    "Truncated",
    "Uniform",
    "mvn_conditional",
    "analyze",
    "confidence_interval",
    "estimate_tau",
    "estimate_variance",
    "fit_main_effects",
    "SCHEMES",
    "ChainModel",
    "CopulaModel",
    "MvnModel",
    "SampleMatrix",
    "draw",
    "sample_lhs_independent",
    "sample_lhs_rank",
    "sample_lhsd",
    "sample_lhsd_copula",
    "sample_srs",
    "Design",
    "generate_design",
    "stratification_certificate",
]
