"""Built-in studies and their reference values.

``mvn``
    Four-dimensional normal inputs with mean drawn from N(0, 1) and
    covariance ``P^T P`` for a 4x4 standard normal ``P``; the draw is fixed
    by `MVN_PARAM_SEED`.
``logistic``
    Gumbel's bivariate logistic law: logistic(0, 1) marginals coupled by the
    copula ``u v / (u + v - u v)``.
``flood``
    Eight river inputs coupled by a Gaussian copula with correlations
    0.5 (Q, Ks), 0.3 (Zv, Zm) and 0.3 (L, B). The Strickler coefficient's
    second parameter is read as a standard deviation and the flowrate as a
    location/scale Gumbel.
"""
from __future__ import annotations

import importlib
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .._rng import name_key, substream
from ..copula import BivariateLogisticCopula, GaussianCopula, correlation_from_pairs
from ..dist import Logistic, MvnSpec, Triangular, Uniform, truncated_gumbel, truncated_normal
from ..sampler import CopulaModel, JointModel, MvnModel
from .functions import FLOOD_NAMES, flood_overflow, h_logistic, h_mvn

__all__ = [
    "MVN_PARAM_SEED",
    "STUDIES",
    "Study",
    "OracleResult",
    "build_study",
    "mvn_parameters",
    "flood_model_inputs",
    "tau_oracle",
    "resolve_integrand",
]

MVN_PARAM_SEED = 2022
STUDIES = ("mvn", "logistic", "flood")


@dataclass(frozen=True)
class Study:
    name: str
    model: JointModel
    h: Callable
    corr_targets: dict = field(default_factory=dict)


def mvn_parameters(seed: int = MVN_PARAM_SEED) -> MvnSpec:
    rng = np.random.default_rng(seed)
    mu = rng.standard_normal(4)
    p = rng.standard_normal((4, 4))
    return MvnSpec(mu, p.T @ p)


FLOOD_PAIRS = ({"i": 0, "j": 1, "rho": 0.5}, {"i": 2, "j": 3, "rho": 0.3}, {"i": 6, "j": 7, "rho": 0.3})


def flood_model_inputs() -> CopulaModel:
    marginals = [
        truncated_gumbel(1013.0, 558.0, 500.0, 3000.0),
        truncated_normal(30.0, 8.0, 15.0, math.inf),
        Triangular(49.0, 50.0, 51.0),
        Triangular(54.0, 55.0, 56.0),
        Uniform(7.0, 9.0),
        Triangular(55.0, 55.5, 56.0),
        Triangular(4990.0, 5000.0, 5010.0),
        Triangular(295.0, 300.0, 305.0),
    ]
    corr = correlation_from_pairs(8, FLOOD_PAIRS)
    return CopulaModel(marginals, GaussianCopula(corr), FLOOD_NAMES)


def build_study(name: str, mvn_seed: int = MVN_PARAM_SEED) -> Study:
    if name == "mvn":
        return Study("mvn", MvnModel(mvn_parameters(mvn_seed), ("x1", "x2", "x3", "x4")), h_mvn)
    if name == "logistic":
        model = CopulaModel([Logistic(0.0, 1.0), Logistic(0.0, 1.0)], BivariateLogisticCopula(), ("x1", "x2"))
        return Study("logistic", model, h_logistic)
    if name == "flood":
        targets = {(p["i"], p["j"]): p["rho"] for p in FLOOD_PAIRS}
        return Study("flood", flood_model_inputs(), flood_overflow, targets)
    raise ValueError(f"unknown study {name!r}; expected one of {STUDIES} or a custom config")


def resolve_integrand(spec: str) -> Callable:
    """Find an integrand by built-in name or ``module:function`` path."""
    builtin = {"h_mvn": h_mvn, "h_logistic": h_logistic, "flood": flood_overflow}
    if spec in builtin:
        return builtin[spec]
    module, _, attr = spec.partition(":")
    if not attr:
        raise ValueError(f"integrand {spec!r} is neither built in nor of the form module:function")
    return getattr(importlib.import_module(module), attr)


@dataclass(frozen=True)
class OracleResult:
    tau: float
    se: float
    n: int
    seed: int

    def to_dict(self) -> dict:
        return {"tau": self.tau, "se": self.se, "n": self.n, "seed": self.seed}


_ORACLE_CACHE: dict = {}
_ORACLE_CHUNK = 200_000


def tau_oracle(study: Study, n_oracle: int = 1_000_000, seed: int = 0) -> OracleResult:
    """Large simple-random-sample estimate of ``E h(X)`` with its standard error.

    Cached per (study, n, seed) within the process.
    """
    key = (study.name, id(study.model) if study.name == "custom" else None, int(n_oracle), int(seed))
    if key in _ORACLE_CACHE:
        return _ORACLE_CACHE[key]
    rng = substream(seed, name_key("oracle"), name_key(study.name))
    total, total_sq, done = [], [], 0
    while done < n_oracle:
        m = min(_ORACLE_CHUNK, n_oracle - done)
        z = rng.random((m, study.model.dim))
        z = np.clip(z, 1e-12, 1.0 - 1e-12)
        y = np.asarray(study.h(study.model.inverse_transform(z)), dtype=float)
        total.append(math.fsum(y))
        total_sq.append(math.fsum(y * y))
        done += m
    mean = math.fsum(total) / n_oracle
    var = max(math.fsum(total_sq) / n_oracle - mean * mean, 0.0) * n_oracle / max(n_oracle - 1, 1)
    result = OracleResult(mean, math.sqrt(var / n_oracle), int(n_oracle), int(seed))
    _ORACLE_CACHE[key] = result
    return result
