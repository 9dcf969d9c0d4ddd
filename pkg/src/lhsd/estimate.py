"""Mean estimation, main-effect decomposition and asymptotic variance.

The integrand is studied on the uniform scale ``z = m(x)`` produced by the
conditional-cdf transform. A one-dimensional k-nearest-neighbour regression
of ``y`` on each ``z_k`` gives the main effects; what is left after removing
the mean and all main effects is the residual from additivity, whose mean
square is the asymptotic variance of ``sqrt(n) * tau_hat`` under stratified
sampling. Adding the main-effect mean squares gives the simple-random-
sampling counterpart.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special
from scipy.spatial import cKDTree

__all__ = [
    "TransformedSample",
    "MainEffect",
    "VarianceEstimate",
    "EstimateReport",
    "default_knn_k",
    "estimate_tau",
    "transformed_sample",
    "fit_main_effects",
    "residuals",
    "estimate_variance",
    "confidence_interval",
    "analyze",
]


# backfitting sweeps used unless the caller asks otherwise; three sweeps
# are enough for the fit to settle to well below the k-NN noise level
DEFAULT_BACKFIT = 3


def default_knn_k(n: int) -> int:
    return max(5, int(round(math.sqrt(n))))


def estimate_tau(y) -> float:
    y = np.asarray(y, dtype=float).ravel()
    if y.size == 0:
        raise ValueError("cannot estimate a mean from an empty sample")
    if not np.all(np.isfinite(y)):
        raise ValueError("integrand values must be finite")
    return math.fsum(y) / y.size


@dataclass(frozen=True)
class TransformedSample:
    """Integrand values ``y`` against their uniform-scale inputs ``z``."""

    z: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        z = np.atleast_2d(np.asarray(self.z, dtype=float))
        y = np.asarray(self.y, dtype=float).ravel()
        if z.shape[0] != y.size:
            raise ValueError(f"z has {z.shape[0]} rows but y has {y.size} values")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.y.size


def transformed_sample(model, x, h, ordering=None) -> TransformedSample:
    """Evaluate ``h`` on the rows of ``x`` and map ``x`` to the uniform scale."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    return TransformedSample(z=model.transform(x, ordering), y=h(x))


class MainEffect:
    """k-NN estimate of one main effect, callable on ``[0, 1]``.

    The fit averages ``y`` over the ``k`` nearest sample points in one
    coordinate, subtracts the overall mean, then shifts by a constant so the
    fitted effect averages to zero over the training points.
    """

    def __init__(self, z, y, k_neighbors: int, y_bar: float | None = None):
        z = np.asarray(z, dtype=float).ravel()
        y = np.asarray(y, dtype=float).ravel()
        if not 1 <= k_neighbors <= z.size:
            raise ValueError(f"k_neighbors={k_neighbors} must lie in 1..{z.size}")
        self.k = int(k_neighbors)
        self._y = y
        self._tree = cKDTree(z[:, None])
        self.y_bar = estimate_tau(y) if y_bar is None else y_bar
        self.shift = 0.0
        self.shift = float(np.mean(self(z)))

    def _smooth(self, z):
        _, idx = self._tree.query(np.asarray(z, dtype=float).reshape(-1, 1), k=self.k)
        idx = idx.reshape(-1, self.k)
        return self._y[idx].mean(axis=1)

    def __call__(self, z):
        z_arr = np.asarray(z, dtype=float)
        out = self._smooth(z_arr) - self.y_bar - self.shift
        return float(out[0]) if z_arr.ndim == 0 else out.reshape(z_arr.shape)


def fit_main_effects(ts: TransformedSample, k_neighbors: int | None = None,
                     backfit: int = DEFAULT_BACKFIT) -> list[MainEffect]:
    """k-NN main effects of ``y`` on each column of ``z``.

    With ``backfit=0`` each effect is the regression of ``y`` on one column
    alone. Each backfitting sweep refits every effect on the partial
    residual ``y - sum of the other effects``, which removes the noise the
    other components add to a marginal regression; without it the residual
    mean square is inflated by roughly ``sum of Var(other effects) / k``.
    """
    k_neighbors = default_knn_k(ts.n) if k_neighbors is None else int(k_neighbors)
    if k_neighbors > ts.n:
        raise ValueError(f"k_neighbors={k_neighbors} exceeds sample size {ts.n}")
    if backfit < 0:
        raise ValueError("backfit must be a non-negative number of sweeps")
    y_bar = estimate_tau(ts.y)
    d = ts.z.shape[1]
    alphas = [MainEffect(ts.z[:, j], ts.y, k_neighbors, y_bar) for j in range(d)]
    if backfit:
        fitted = np.column_stack([a(ts.z[:, j]) for j, a in enumerate(alphas)])
        for _ in range(backfit):
            for j in range(d):
                partial = ts.y - (fitted.sum(axis=1) - fitted[:, j])
                alphas[j] = MainEffect(ts.z[:, j], partial, k_neighbors, y_bar)
                fitted[:, j] = alphas[j](ts.z[:, j])
    return alphas


def _effect_matrix(ts, alphas):
    return np.column_stack([a(ts.z[:, j]) for j, a in enumerate(alphas)])


def residuals(ts: TransformedSample, alphas) -> np.ndarray:
    y_bar = estimate_tau(ts.y)
    return ts.y - y_bar - _effect_matrix(ts, alphas).sum(axis=1)


@dataclass(frozen=True)
class VarianceEstimate:
    var_lhsd_hat: float
    var_srs_hat: float
    residual_ms: float
    main_effect_ms: tuple[float, ...]


def estimate_variance(ts: TransformedSample, alphas) -> VarianceEstimate:
    """Plug-in asymptotic variances of ``tau_hat`` for stratified and i.i.d. sampling."""
    effects = _effect_matrix(ts, alphas)
    r = ts.y - estimate_tau(ts.y) - effects.sum(axis=1)
    n = ts.n
    residual_ms = float(np.mean(r * r))
    effect_ms = tuple(float(v) for v in np.mean(effects * effects, axis=0))
    var_lhsd = residual_ms / n
    return VarianceEstimate(var_lhsd, var_lhsd + math.fsum(effect_ms) / n, residual_ms, effect_ms)


def confidence_interval(tau_hat: float, var_lhsd_hat: float, level: float = 0.95) -> tuple[float, float]:
    if not 0.0 < level < 1.0:
        raise ValueError(f"confidence level must lie in (0, 1), got {level}")
    half = special.ndtri(0.5 * (1.0 + level)) * math.sqrt(max(var_lhsd_hat, 0.0))
    return (tau_hat - half, tau_hat + half)


@dataclass
class EstimateReport:
    tau_hat: float
    n: int
    scheme: str
    var_lhsd_hat: float
    var_srs_hat: float
    ci: tuple[float, float, float]
    knn_k: int
    main_effects: list = field(default_factory=list, repr=False)
    residuals: np.ndarray | None = field(default=None, repr=False)

    @property
    def var_residual_hat(self) -> float:
        return self.var_lhsd_hat * self.n

    def to_dict(self) -> dict:
        lo, hi, level = self.ci
        return {
            "tau_hat": self.tau_hat,
            "n": self.n,
            "scheme": self.scheme,
            "var_lhsd_hat": self.var_lhsd_hat,
            "var_srs_hat": self.var_srs_hat,
            "ci": {"lo": lo, "hi": hi, "level": level},
            "knn_k": self.knn_k,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def analyze(ts: TransformedSample, scheme: str = "lhsd", k_neighbors: int | None = None,
            level: float = 0.95, backfit: int = DEFAULT_BACKFIT) -> EstimateReport:
    """Point estimate, main effects, residuals, variances and CI in one pass."""
    k_neighbors = default_knn_k(ts.n) if k_neighbors is None else int(k_neighbors)
    tau_hat = estimate_tau(ts.y)
    alphas = fit_main_effects(ts, k_neighbors, backfit)
    var = estimate_variance(ts, alphas)
    lo, hi = confidence_interval(tau_hat, var.var_lhsd_hat, level)
    return EstimateReport(
        tau_hat=tau_hat,
        n=ts.n,
        scheme=scheme,
        var_lhsd_hat=var.var_lhsd_hat,
        var_srs_hat=var.var_srs_hat,
        ci=(lo, hi, level),
        knn_k=k_neighbors,
        main_effects=alphas,
        residuals=residuals(ts, alphas),
    )
