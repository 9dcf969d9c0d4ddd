"""Copulas, conditional copulas and their inverses.

Components are 0-based. The conditional copula of component ``k`` is the cdf
of ``U_k`` given ``U_0..U_{k-1}``; ``cond`` arguments therefore carry ``k``
trailing values and broadcast over leading (row) axes.

Conditioning values must lie strictly inside (0, 1). Public functions reject
boundary values; samplers composing several transforms use `clamp_interior`,
which nudges values by `EPS` and records how often it did so in
`clamp_events`.
"""
from __future__ import annotations

import math
from abc import ABC, abstractmethod
from collections import Counter
from dataclasses import dataclass

import numpy as np
from scipy import special, stats

from .dist import Marginal, MvnSpec, conditional_weights

__all__ = [
    "EPS",
    "BoundaryError",
    "ConvergenceError",
    "Copula",
    "IndependentCopula",
    "GaussianCopula",
    "BivariateLogisticCopula",
    "ConditionalCopula",
    "bisect_conditional_quantile",
    "clamp_interior",
    "clamp_events",
    "conditional_input_cdf",
    "conditional_input_quantile",
    "copula_from_dict",
    "correlation_from_pairs",
]

EPS = 1e-12

clamp_events: Counter = Counter()


class BoundaryError(ValueError):
    """Conditioning value on the boundary of the unit cube."""


class ConvergenceError(ArithmeticError):
    pass


def clamp_interior(u, label: str = "clamp"):
    u = np.asarray(u, dtype=float)
    hit = (u < EPS) | (u > 1.0 - EPS)
    if hit.any():
        clamp_events[label] += int(hit.sum())
        u = np.clip(u, EPS, 1.0 - EPS)
    return u


def _check_cond(cond, k):
    cond = np.asarray(cond, dtype=float)
    if cond.shape[-1] != k:
        raise ValueError(f"component {k} needs {k} conditioning values, got {cond.shape[-1]}")
    if np.any(~((cond > 0.0) & (cond < 1.0))):
        raise BoundaryError("conditioning values must lie strictly inside (0, 1)")
    return cond


def _check_component(copula, k):
    if not 1 <= k < copula.dim:
        raise IndexError(f"conditional copula defined for components 1..{copula.dim - 1}, got {k}")


def _rowwise(fn, u, dim):
    """Apply a row-matrix function to ``(..., dim)`` points; a single point gives a float."""
    u = np.asarray(u, dtype=float)
    if u.shape[-1:] != (dim,):
        raise ValueError(f"points must have {dim} trailing coordinates, got shape {u.shape}")
    out = fn(u.reshape(-1, dim))
    return float(out[0]) if u.ndim == 1 else out.reshape(u.shape[:-1])


class Copula(ABC):
    family: str = ""

    @property
    @abstractmethod
    def dim(self) -> int: ...

    @abstractmethod
    def cdf(self, u): ...

    @abstractmethod
    def logpdf(self, u): ...

    @abstractmethod
    def _conditional_cdf(self, k, u_k, cond): ...

    def _conditional_quantile(self, k, z, cond):
        return bisect_conditional_quantile(self, k, z, cond)

    def conditional_cdf(self, k: int, u_k, cond):
        """``P(U_k <= u_k | U_0..U_{k-1} = cond)``."""
        _check_component(self, k)
        cond = _check_cond(cond, k)
        u_k = np.clip(np.asarray(u_k, dtype=float), 0.0, 1.0)
        out = np.clip(self._conditional_cdf(k, u_k, cond), 0.0, 1.0)
        return float(out) if out.ndim == 0 else out

    def conditional_quantile(self, k: int, z, cond):
        """Inverse of `conditional_cdf` in its first argument."""
        _check_component(self, k)
        cond = _check_cond(cond, k)
        z = np.asarray(z, dtype=float)
        if np.any(~((z > 0.0) & (z < 1.0))):
            raise ValueError("conditional quantile argument must lie in (0, 1)")
        out = self._conditional_quantile(k, z, cond)
        return float(out) if np.ndim(out) == 0 else out

    def conditional(self, k: int) -> "ConditionalCopula":
        return ConditionalCopula(self, k)

    def marginal_cdf(self, u_prefix):
        """The ``k``-dimensional marginal copula ``C(u_0..u_{k-1}, 1, ..., 1)``."""
        u_prefix = np.asarray(u_prefix, dtype=float)
        pad = np.ones(u_prefix.shape[:-1] + (self.dim - u_prefix.shape[-1],))
        return self.cdf(np.concatenate([u_prefix, pad], axis=-1))

    def reordered(self, order) -> "Copula":
        raise NotImplementedError(f"{type(self).__name__} does not support reordering")

    def to_dict(self) -> dict:
        return {"family": self.family}


@dataclass(frozen=True)
class ConditionalCopula:
    parent: Copula
    k: int

    def cdf(self, u_k, cond):
        return self.parent.conditional_cdf(self.k, u_k, cond)

    def quantile(self, z, cond):
        return self.parent.conditional_quantile(self.k, z, cond)


def bisect_conditional_quantile(copula: Copula, k, z, cond, tol=1e-13, max_iter=200):
    """Bracketed bisection on ``[EPS, 1 - EPS]`` for a monotone conditional cdf.

    Vectorised over rows. Raises `ConvergenceError` if the bracket has not
    shrunk below ``tol`` after ``max_iter`` halvings.
    """
    z = np.asarray(z, dtype=float)
    shape = np.broadcast_shapes(z.shape, cond.shape[:-1])
    z = np.broadcast_to(z, shape)
    cond = np.broadcast_to(cond, shape + (k,))
    lo = np.full(shape, EPS)
    hi = np.full(shape, 1.0 - EPS)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        below = copula._conditional_cdf(k, mid, cond) < z
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.max(hi - lo) < tol:
            return 0.5 * (lo + hi)
    raise ConvergenceError(
        f"conditional quantile did not converge for component {k}: "
        f"max bracket width {np.max(hi - lo):.3g} after {max_iter} iterations"
    )


class IndependentCopula(Copula):
    family = "independent"

    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError("copula dimension must be positive")
        self._dim = int(dim)

    def __eq__(self, other):
        return isinstance(other, IndependentCopula) and other._dim == self._dim

    def __hash__(self):
        return hash(("independent", self._dim))

    def __repr__(self):
        return f"IndependentCopula(dim={self._dim})"

    @property
    def dim(self):
        return self._dim

    def cdf(self, u):
        return np.prod(np.clip(np.asarray(u, dtype=float), 0.0, 1.0), axis=-1)

    def logpdf(self, u):
        u = np.asarray(u, dtype=float)
        inside = np.all((u >= 0) & (u <= 1), axis=-1)
        return np.where(inside, 0.0, -np.inf)

    def _conditional_cdf(self, k, u_k, cond):
        return np.broadcast_to(u_k, np.broadcast_shapes(u_k.shape, cond.shape[:-1])).copy()

    def _conditional_quantile(self, k, z, cond):
        return np.broadcast_to(z, np.broadcast_shapes(z.shape, cond.shape[:-1])).copy()

    def reordered(self, order):
        return self

    def to_dict(self):
        return {"family": self.family, "dim": self._dim}


class GaussianCopula(Copula):
    """Normal copula with correlation matrix ``corr``.

    Conditional copulas are computed on normal scores ``y = Phi^{-1}(u)``:
    ``C_k(u_k | cond) = Phi((y_k - m) / s)`` where ``m`` and ``s**2`` are the
    conditional mean and variance of a standard normal vector with
    correlation ``corr``.
    """

    family = "gaussian"

    def __init__(self, corr):
        corr = np.array(corr, dtype=float)
        if corr.ndim != 2 or corr.shape[0] != corr.shape[1]:
            raise ValueError(f"correlation matrix must be square, got shape {corr.shape}")
        if not np.allclose(np.diag(corr), 1.0, rtol=0, atol=1e-12):
            raise ValueError("correlation matrix must have unit diagonal")
        try:
            spec = MvnSpec(np.zeros(corr.shape[0]), corr)
        except np.linalg.LinAlgError:
            raise ValueError("correlation matrix is not positive definite") from None
        self._spec = spec
        self._weights = [None] + [conditional_weights(spec, k) for k in range(1, spec.dim)]
        self._chol = np.linalg.cholesky(spec.sigma)

    def __repr__(self):
        return f"GaussianCopula(corr={self.corr.tolist()})"

    @property
    def corr(self):
        return self._spec.sigma

    @property
    def dim(self):
        return self._spec.dim

    def cdf(self, u):
        return _rowwise(self._cdf_rows, u, self.dim)

    def _cdf_rows(self, u):
        u = np.clip(u, 0.0, 1.0)
        y = special.ndtri(u)
        if self.dim == 1:
            return u[:, 0]
        if self.dim == 2:
            return _bivariate_normal_cdf(y[:, 0], y[:, 1], self.corr[0, 1])
        out = np.empty(u.shape[0])
        for i, row in enumerate(y):
            if np.any(row == -np.inf):
                out[i] = 0.0
                continue
            finite = np.isfinite(row)
            if not finite.any():
                out[i] = 1.0
                continue
            sub = self.corr[np.ix_(finite, finite)]
            out[i] = stats.multivariate_normal(np.zeros(finite.sum()), sub).cdf(row[finite])
        return out

    def logpdf(self, u):
        return _rowwise(self._logpdf_rows, u, self.dim)

    def _logpdf_rows(self, u):
        y = special.ndtri(u)
        sol = np.linalg.solve(self._chol, y.T).T
        quad = np.sum(sol * sol, axis=1) - np.sum(y * y, axis=1)
        logdet = 2.0 * np.sum(np.log(np.diag(self._chol)))
        return -0.5 * quad - 0.5 * logdet

    def normal_score_conditional(self, k, y_prefix):
        """Conditional mean and sd of score ``k`` given the preceding scores."""
        w, s2 = self._weights[k]
        return np.asarray(y_prefix) @ w, math.sqrt(s2)

    def _conditional_cdf(self, k, u_k, cond):
        m, s = self.normal_score_conditional(k, special.ndtri(cond))
        with np.errstate(divide="ignore"):
            return special.ndtr((special.ndtri(u_k) - m) / s)

    def _conditional_quantile(self, k, z, cond):
        m, s = self.normal_score_conditional(k, special.ndtri(cond))
        return special.ndtr(m + s * special.ndtri(z))

    def reordered(self, order):
        order = np.asarray(order)
        return GaussianCopula(self.corr[np.ix_(order, order)])

    def to_dict(self):
        return {"family": self.family, "correlation": self.corr.tolist()}


def _bivariate_normal_cdf(h, k, rho):
    """Standard bivariate normal cdf via Owen's T function."""
    h, k = np.broadcast_arrays(np.asarray(h, dtype=float), np.asarray(k, dtype=float))
    out = np.empty(h.shape)
    lower = (h == -np.inf) | (k == -np.inf)
    h_inf = ~lower & (h == np.inf)
    k_inf = ~lower & (k == np.inf)
    out[lower] = 0.0
    out[h_inf] = special.ndtr(k[h_inf])
    out[k_inf & ~h_inf] = special.ndtr(h[k_inf & ~h_inf])
    mask = ~lower & ~h_inf & ~k_inf
    hh, kk = h[mask], k[mask]
    if rho == 0.0:
        out[mask] = special.ndtr(hh) * special.ndtr(kk)
        return out
    r = math.sqrt(1.0 - rho * rho)
    # On an axis the general formula degenerates to 0.5 Phi(t) - T(t, -rho/r).
    axis_h = hh == 0.0
    axis_k = (kk == 0.0) & ~axis_h
    general = ~axis_h & ~axis_k
    val = np.empty(hh.shape)
    val[axis_h] = 0.5 * special.ndtr(kk[axis_h]) - special.owens_t(kk[axis_h], -rho / r)
    val[axis_k] = 0.5 * special.ndtr(hh[axis_k]) - special.owens_t(hh[axis_k], -rho / r)
    g_h, g_k = hh[general], kk[general]
    beta = np.where(g_h * g_k < 0, 0.5, 0.0)
    val[general] = (
        0.5 * (special.ndtr(g_h) + special.ndtr(g_k))
        - special.owens_t(g_h, (g_k - rho * g_h) / (g_h * r))
        - special.owens_t(g_k, (g_h - rho * g_k) / (g_k * r))
        - beta
    )
    out[mask] = val
    return out


class BivariateLogisticCopula(Copula):
    """Copula of Gumbel's bivariate logistic law, ``u v / (u + v - u v)``."""

    family = "bivariate_logistic"

    def __eq__(self, other):
        return isinstance(other, BivariateLogisticCopula)

    def __hash__(self):
        return hash("bivariate_logistic")

    def __repr__(self):
        return "BivariateLogisticCopula()"

    @property
    def dim(self):
        return 2

    def cdf(self, u):
        return _rowwise(self._cdf_rows, u, 2)

    def _cdf_rows(self, u):
        u = np.clip(u, 0.0, 1.0)
        a, b = u[:, 0], u[:, 1]
        den = a + b - a * b
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(den > 0, a * b / den, 0.0)

    def logpdf(self, u):
        return _rowwise(self._logpdf_rows, u, 2)

    def _logpdf_rows(self, u):
        a, b = u[:, 0], u[:, 1]
        with np.errstate(divide="ignore", invalid="ignore"):
            return math.log(2.0) + np.log(a) + np.log(b) - 3.0 * np.log(a + b - a * b)

    def _conditional_cdf(self, k, u_k, cond):
        u1 = cond[..., 0]
        return u_k**2 / (u1 + u_k - u1 * u_k) ** 2

    def _conditional_quantile(self, k, z, cond):
        u1 = cond[..., 0]
        s = np.sqrt(z)
        return u1 * s / (1.0 - s + u1 * s)

    def reordered(self, order):
        if sorted(int(i) for i in order) != [0, 1]:
            raise ValueError(f"invalid ordering {order!r} for a bivariate copula")
        return self


def correlation_from_pairs(dim: int, pairs) -> np.ndarray:
    """Expand ``[{"i", "j", "rho"}]`` (0-based) into a full correlation matrix."""
    corr = np.eye(dim)
    for p in pairs:
        i, j, rho = int(p["i"]), int(p["j"]), float(p["rho"])
        if i == j:
            raise ValueError("pair correlation needs two distinct components")
        corr[i, j] = corr[j, i] = rho
    return corr


def copula_from_dict(spec: dict, dim: int | None = None) -> Copula:
    family = spec["family"]
    if family == "independent":
        return IndependentCopula(spec.get("dim", dim))
    if family == "bivariate_logistic":
        return BivariateLogisticCopula()
    if family == "gaussian":
        if "correlation" in spec:
            return GaussianCopula(spec["correlation"])
        if "pairs" in spec:
            return GaussianCopula(correlation_from_pairs(spec.get("dim", dim), spec["pairs"]))
        raise ValueError("gaussian copula needs 'correlation' or 'pairs'")
    raise ValueError(f"unknown copula family {family!r}")


def _marginal_u(marginals, x):
    return np.stack([m.cdf(x[..., i]) for i, m in enumerate(marginals)], axis=-1)


def conditional_input_cdf(marginals: list[Marginal], copula: Copula, k: int, x_k, x_prefix):
    """Conditional cdf of input ``k`` given inputs ``0..k-1`` under ``copula``."""
    x_prefix = np.asarray(x_prefix, dtype=float)
    u_prefix = _marginal_u(marginals[:k], x_prefix)
    u_k = marginals[k].cdf(np.asarray(x_k, dtype=float))
    return copula.conditional_cdf(k, u_k, u_prefix)


def conditional_input_quantile(marginals: list[Marginal], copula: Copula, k: int, z, x_prefix):
    x_prefix = np.asarray(x_prefix, dtype=float)
    u_prefix = _marginal_u(marginals[:k], x_prefix)
    u_k = copula.conditional_quantile(k, z, u_prefix)
    return marginals[k].quantile(u_k)
