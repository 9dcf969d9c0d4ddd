"""Univariate distributions and the multivariate normal conditional chain.

All distributions are immutable and vectorised: ``cdf``, ``quantile``,
``pdf`` and ``logpdf`` accept scalars or arrays. Parameters are validated at
construction time, so calls never fail on bad parameters.

Parameterisations
-----------------
normal            mu, sd (standard deviation)
gumbel            mu (location), beta (scale); cdf exp(-exp(-(x - mu) / beta))
triangular        a (min), c (mode), b (max)
logistic          loc, scale
uniform           a, b
truncated_*       parent parameters plus lo, hi; either bound may be infinite
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

__all__ = [
    "DomainError",
    "Marginal",
    "Uniform",
    "Normal",
    "Gumbel",
    "Triangular",
    "Logistic",
    "Truncated",
    "truncated_normal",
    "truncated_gumbel",
    "marginal_from_dict",
    "FAMILIES",
    "MvnSpec",
    "MvnConditional",
    "mvn_conditional",
]


class DomainError(ValueError):
    """Argument outside the domain of a distribution function."""


def _as_array(x):
    return np.asarray(x, dtype=float)


def _scalar_or_array(out, like):
    return float(out) if np.ndim(like) == 0 else out


class Marginal:
    """Common behaviour for univariate continuous distributions.

    Subclasses implement ``_cdf``, ``_ppf`` and ``_logpdf`` on arrays and
    define ``family``, ``params`` and ``support``.
    """

    family: str = ""

    def cdf(self, x):
        x = _as_array(x)
        lo, hi = self.support
        out = np.clip(self._cdf(x), 0.0, 1.0)
        out = np.where(x <= lo, 0.0, out)
        out = np.where(x >= hi, 1.0, out)
        return _scalar_or_array(out, x)

    def quantile(self, u):
        """Right-continuous inverse ``inf{x : cdf(x) >= u}``.

        ``quantile(0)`` and ``quantile(1)`` return the support bounds, which
        are infinite for unbounded families.
        """
        u = _as_array(u)
        if np.any(~((u >= 0.0) & (u <= 1.0))):
            raise DomainError("quantile argument must lie in [0, 1]")
        lo, hi = self.support
        with np.errstate(divide="ignore", invalid="ignore"):
            out = self._ppf(u)
        out = np.clip(out, lo, hi)
        out = np.where(u == 0.0, lo, out)
        out = np.where(u == 1.0, hi, out)
        return _scalar_or_array(out, u)

    def pdf(self, x):
        return np.exp(self.logpdf(x))

    def logpdf(self, x):
        x = _as_array(x)
        lo, hi = self.support
        inside = (x >= lo) & (x <= hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(inside, self._logpdf(x), -np.inf)
        return _scalar_or_array(out, x)

    def to_dict(self) -> dict:
        return {"family": self.family, "params": dict(self.params)}

    @property
    def params(self) -> dict:
        raise NotImplementedError

    @property
    def support(self) -> tuple[float, float]:
        raise NotImplementedError


@dataclass(frozen=True)
class Uniform(Marginal):
    a: float = 0.0
    b: float = 1.0
    family = "uniform"

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError(f"uniform needs a < b, got a={self.a}, b={self.b}")

    @property
    def params(self):
        return {"a": self.a, "b": self.b}

    @property
    def support(self):
        return (self.a, self.b)

    def _cdf(self, x):
        return (x - self.a) / (self.b - self.a)

    def _ppf(self, u):
        return self.a + u * (self.b - self.a)

    def _logpdf(self, x):
        return np.full_like(x, -math.log(self.b - self.a))


@dataclass(frozen=True)
class Normal(Marginal):
    mu: float = 0.0
    sd: float = 1.0
    family = "normal"

    def __post_init__(self):
        if not self.sd > 0:
            raise ValueError(f"normal needs sd > 0, got {self.sd}")

    @property
    def params(self):
        return {"mu": self.mu, "sd": self.sd}

    @property
    def support(self):
        return (-math.inf, math.inf)

    def _cdf(self, x):
        return special.ndtr((x - self.mu) / self.sd)

    def _sf(self, x):
        return special.ndtr((self.mu - x) / self.sd)

    def _ppf(self, u):
        return self.mu + self.sd * special.ndtri(u)

    def _logpdf(self, x):
        t = (x - self.mu) / self.sd
        return -0.5 * t * t - math.log(self.sd) - 0.5 * math.log(2 * math.pi)


@dataclass(frozen=True)
class Gumbel(Marginal):
    mu: float = 0.0
    beta: float = 1.0
    family = "gumbel"

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError(f"gumbel needs beta > 0, got {self.beta}")

    @property
    def params(self):
        return {"mu": self.mu, "beta": self.beta}

    @property
    def support(self):
        return (-math.inf, math.inf)

    def _cdf(self, x):
        return np.exp(-np.exp(-(x - self.mu) / self.beta))

    def _sf(self, x):
        return -np.expm1(-np.exp(-(x - self.mu) / self.beta))

    def _ppf(self, u):
        return self.mu - self.beta * np.log(-np.log(u))

    def _logpdf(self, x):
        t = (x - self.mu) / self.beta
        return -t - np.exp(-t) - math.log(self.beta)


@dataclass(frozen=True)
class Triangular(Marginal):
    a: float = 0.0
    c: float = 0.5
    b: float = 1.0
    family = "triangular"

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError(f"triangular needs a < b, got a={self.a}, b={self.b}")
        if not self.a <= self.c <= self.b:
            raise ValueError(f"triangular mode c={self.c} outside [{self.a}, {self.b}]")

    @property
    def params(self):
        return {"a": self.a, "c": self.c, "b": self.b}

    @property
    def support(self):
        return (self.a, self.b)

    def _cdf(self, x):
        a, b, c = self.a, self.b, self.c
        left = np.where(c > a, (x - a) ** 2 / ((b - a) * max(c - a, 1e-300)), 0.0)
        right = np.where(c < b, 1.0 - (b - x) ** 2 / ((b - a) * max(b - c, 1e-300)), 1.0)
        return np.where(x <= c, left, right)

    def _ppf(self, u):
        a, b, c = self.a, self.b, self.c
        split = (c - a) / (b - a)
        left = a + np.sqrt(u * (b - a) * (c - a))
        right = b - np.sqrt((1.0 - u) * (b - a) * (b - c))
        return np.where(u < split, left, right)

    def _logpdf(self, x):
        a, b, c = self.a, self.b, self.c
        left = 2.0 * (x - a) / ((b - a) * max(c - a, 1e-300))
        right = 2.0 * (b - x) / ((b - a) * max(b - c, 1e-300))
        return np.log(np.where(x < c, left, np.where(x > c, right, 2.0 / (b - a))))


@dataclass(frozen=True)
class Logistic(Marginal):
    loc: float = 0.0
    scale: float = 1.0
    family = "logistic"

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError(f"logistic needs scale > 0, got {self.scale}")

    @property
    def params(self):
        return {"loc": self.loc, "scale": self.scale}

    @property
    def support(self):
        return (-math.inf, math.inf)

    def _cdf(self, x):
        return special.expit((x - self.loc) / self.scale)

    def _sf(self, x):
        return special.expit((self.loc - x) / self.scale)

    def _ppf(self, u):
        return self.loc + self.scale * special.logit(u)

    def _logpdf(self, x):
        t = (x - self.loc) / self.scale
        return -t - 2.0 * np.log1p(np.exp(-t)) - math.log(self.scale)


@dataclass(frozen=True)
class Truncated(Marginal):
    """A parent distribution restricted to ``[lo, hi]``.

    The cdf is rescaled as ``(F(x) - F(lo)) / (F(hi) - F(lo))`` and the
    quantile composes the parent quantile with the rescaled probability, so no
    root finding is involved.
    """

    parent: Marginal
    lo: float = -math.inf
    hi: float = math.inf

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"truncation needs lo < hi, got lo={self.lo}, hi={self.hi}")
        if self.mass <= 0.0:
            raise ValueError("truncation interval carries no probability mass")

    @property
    def family(self):
        return "truncated_" + self.parent.family

    @property
    def params(self):
        return {**self.parent.params, "lo": self.lo, "hi": self.hi}

    @property
    def support(self):
        plo, phi = self.parent.support
        return (max(self.lo, plo), min(self.hi, phi))

    @property
    def _flo(self):
        return float(self.parent.cdf(self.lo))

    @property
    def _fhi(self):
        return float(self.parent.cdf(self.hi))

    @property
    def mass(self):
        return self._fhi - self._flo

    def _cdf(self, x):
        return (self.parent.cdf(x) - self._flo) / self.mass

    def _ppf(self, u):
        flo, fhi = self._flo, self._fhi
        if flo > 0.5 and hasattr(self.parent, "_sf"):
            # Upper-tail truncation: work with survival probabilities to keep
            # resolution where the parent cdf is close to 1.
            slo = float(self.parent._sf(self.lo))
            shi = float(self.parent._sf(self.hi)) if math.isfinite(self.hi) else 0.0
            s = slo - u * (slo - shi)
            return self.parent.quantile(np.clip(1.0 - s, 0.0, 1.0))
        return self.parent.quantile(np.clip(flo + u * (fhi - flo), 0.0, 1.0))

    def _logpdf(self, x):
        return self.parent.logpdf(x) - math.log(self.mass)


def truncated_normal(mu, sd, lo=-math.inf, hi=math.inf) -> Truncated:
    return Truncated(Normal(mu, sd), lo, hi)


def truncated_gumbel(mu, beta, lo=-math.inf, hi=math.inf) -> Truncated:
    return Truncated(Gumbel(mu, beta), lo, hi)


def _normal_from_params(p):
    if "sd" in p:
        return Normal(p["mu"], p["sd"])
    if "var" in p:
        return Normal(p["mu"], math.sqrt(p["var"]))
    raise ValueError("normal needs 'sd' or 'var'")


def _bound(p, key, default):
    v = p.get(key, default)
    return default if v is None else float(v)


FAMILIES = {
    "uniform": lambda p: Uniform(p["a"], p["b"]),
    "normal": _normal_from_params,
    "truncated_normal": lambda p: Truncated(
        _normal_from_params(p), _bound(p, "lo", -math.inf), _bound(p, "hi", math.inf)
    ),
    "gumbel": lambda p: Gumbel(p["mu"], p["beta"]),
    "truncated_gumbel": lambda p: truncated_gumbel(
        p["mu"], p["beta"], _bound(p, "lo", -math.inf), _bound(p, "hi", math.inf)
    ),
    "triangular": lambda p: Triangular(p["a"], p["c"], p["b"]),
    "logistic": lambda p: Logistic(p.get("loc", 0.0), p.get("scale", 1.0)),
}


def marginal_from_dict(spec: dict) -> Marginal:
    """Build a marginal from a ``{"family": ..., "params": {...}}`` record."""
    family = spec["family"]
    try:
        factory = FAMILIES[family]
    except KeyError:
        raise ValueError(f"unknown family {family!r}; expected one of {sorted(FAMILIES)}") from None
    return factory(spec.get("params", {}))


# -- multivariate normal ---------------------------------------------------


@dataclass(frozen=True)
class MvnSpec:
    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        mu = np.array(self.mu, dtype=float).ravel()
        sigma = np.array(self.sigma, dtype=float)
        if sigma.shape != (mu.size, mu.size):
            raise ValueError(f"sigma shape {sigma.shape} does not match mu length {mu.size}")
        if not np.allclose(sigma, sigma.T, rtol=0, atol=1e-12 * max(1.0, np.abs(sigma).max())):
            raise ValueError("sigma must be symmetric")
        np.linalg.cholesky(sigma)
        mu.flags.writeable = False
        sigma.flags.writeable = False
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)

    @property
    def dim(self) -> int:
        return self.mu.size

    def permuted(self, order) -> "MvnSpec":
        order = np.asarray(order)
        return MvnSpec(self.mu[order], self.sigma[np.ix_(order, order)])


@dataclass(frozen=True)
class MvnConditional:
    """Law of component ``k`` given the preceding components."""

    mu_star: float | np.ndarray
    sigma_star_sq: float
    k: int

    def as_normal(self) -> Normal:
        return Normal(float(self.mu_star), math.sqrt(self.sigma_star_sq))


def conditional_weights(spec: MvnSpec, k: int):
    """Regression weights and conditional variance for component ``k``.

    Returns ``(w, s2)`` with ``w = Sigma_kk^{-1} sigma_k`` so that the
    conditional mean is ``mu_k + w @ (prefix - mu[:k])``.
    """
    if not 1 <= k < spec.dim:
        raise IndexError(f"component index {k} outside 1..{spec.dim - 1}")
    head = spec.sigma[:k, :k]
    cross = spec.sigma[:k, k]
    w = np.linalg.solve(head, cross)
    s2 = float(spec.sigma[k, k] - cross @ w)
    return w, s2


def mvn_conditional(spec: MvnSpec, k: int, x_prefix) -> MvnConditional:
    """Conditional normal law of component ``k`` (0-based, ``k >= 1``).

    ``x_prefix`` holds the values of components ``0..k-1``; a 2-d array of
    prefixes gives a vector of conditional means (the variance does not
    depend on the prefix).
    """
    x_prefix = np.asarray(x_prefix, dtype=float)
    if x_prefix.shape[-1] != k:
        raise ValueError(f"prefix for component {k} must have length {k}, got {x_prefix.shape[-1]}")
    if not np.all(np.isfinite(x_prefix)):
        raise ValueError("prefix must be finite")
    w, s2 = conditional_weights(spec, k)
    mu_star = spec.mu[k] + (x_prefix - spec.mu[:k]) @ w
    if np.ndim(mu_star) == 0:
        mu_star = float(mu_star)
    return MvnConditional(mu_star=mu_star, sigma_star_sq=s2, k=k)
