"""Sampling schemes for dependent inputs.

Six schemes share one interface and all return a `SampleMatrix`:

=============  ==============================================================
``srs``        i.i.d. draws: the conditional chain applied to i.i.d. uniforms
``lhs_ind``    stratified marginals, dependence ignored
``lhsd``       stratified design pushed through the conditional quantiles
``lhsd_c``     ``lhsd`` on a centered design
``lhsd_copula``stratified design pushed through inverse conditional copulas,
               then through the marginal quantiles
``lhs_rank``   rank-reordered marginal LHS (reference-ranks baseline)
=============  ==============================================================

A joint model exposes the conditional quantile and cdf of component ``k``
given components ``0..k-1``. ``ordering`` permutes the components before the
chain is applied; output columns always follow the declared order.
"""
from __future__ import annotations

import csv
import json
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import special

from ._rng import check_random_state
from .copula import Copula, clamp_interior, conditional_input_cdf, conditional_input_quantile
from .dist import Marginal, MvnSpec, Normal, conditional_weights
from .strata import generate_design

__all__ = [
    "SCHEMES",
    "JointModel",
    "ChainModel",
    "MvnModel",
    "CopulaModel",
    "SampleMatrix",
    "SamplingError",
    "sample_srs",
    "sample_lhs_independent",
    "sample_lhsd",
    "sample_lhsd_copula",
    "sample_lhs_rank",
    "draw",
]

SCHEMES = ("srs", "lhs_ind", "lhsd", "lhsd_c", "lhsd_copula", "lhs_rank")


class SamplingError(RuntimeError):
    pass


def _check_ordering(order, dim):
    if order is None:
        return np.arange(dim)
    order = np.asarray(order, dtype=int)
    if order.shape != (dim,) or sorted(order.tolist()) != list(range(dim)):
        raise ValueError(f"ordering {order.tolist()} is not a permutation of 0..{dim - 1}")
    return order


class JointModel(ABC):
    """A joint law described by its chain of conditional distributions."""

    names: tuple[str, ...]

    @property
    def dim(self) -> int:
        return len(self.names)

    @property
    @abstractmethod
    def marginals(self) -> list[Marginal]: ...

    @abstractmethod
    def conditional_quantile(self, k: int, z, x_prefix): ...

    @abstractmethod
    def conditional_cdf(self, k: int, x_k, x_prefix): ...

    @abstractmethod
    def logpdf(self, x): ...

    def reordered(self, order) -> "JointModel":
        order = _check_ordering(order, self.dim)
        if np.array_equal(order, np.arange(self.dim)):
            return self
        raise NotImplementedError(f"{type(self).__name__} does not support reordering")

    def inverse_transform(self, z, ordering=None) -> np.ndarray:
        """Map uniforms to inputs through the conditional quantiles.

        Column ``i`` of ``z`` drives the ``i``-th component in chain order.
        """
        order = _check_ordering(ordering, self.dim)
        model = self.reordered(order)
        z = np.atleast_2d(np.asarray(z, dtype=float))
        x = np.empty_like(z)
        for k in range(self.dim):
            try:
                x[:, k] = model.conditional_quantile(k, z[:, k], x[:, :k])
            except (ValueError, ArithmeticError) as exc:
                raise SamplingError(f"conditional quantile failed for component {k}: {exc}") from exc
        out = np.empty_like(x)
        out[:, order] = x
        return out

    def transform(self, x, ordering=None) -> np.ndarray:
        """Conditional-cdf transform of inputs; columns in chain order."""
        order = _check_ordering(ordering, self.dim)
        model = self.reordered(order)
        x = np.atleast_2d(np.asarray(x, dtype=float))[:, order]
        z = np.empty_like(x)
        for k in range(self.dim):
            z[:, k] = model.conditional_cdf(k, x[:, k], x[:, :k])
        return z


class ChainModel(JointModel):
    """Joint law given directly as an ordered chain of conditionals.

    ``steps[0]`` is a `Marginal`; every later step exposes
    ``quantile(z, prefix)`` and ``cdf(x, prefix)`` for a 2-d prefix array.
    ``marginals`` is only needed by schemes that ignore dependence.
    """

    def __init__(self, steps, names=None, marginals=None, logpdf=None):
        self.steps = list(steps)
        self.names = tuple(names or (f"x{i}" for i in range(len(self.steps))))
        if len(self.names) != len(self.steps):
            raise ValueError("one name per chain step is required")
        self._marginals = marginals
        self._logpdf = logpdf

    @property
    def marginals(self):
        if self._marginals is None:
            raise NotImplementedError("this chain model was built without marginals")
        return list(self._marginals)

    def conditional_quantile(self, k, z, x_prefix):
        if k == 0:
            return self.steps[0].quantile(z)
        return self.steps[k].quantile(z, x_prefix)

    def conditional_cdf(self, k, x_k, x_prefix):
        if k == 0:
            return self.steps[0].cdf(x_k)
        return self.steps[k].cdf(x_k, x_prefix)

    def logpdf(self, x):
        if self._logpdf is None:
            raise NotImplementedError("this chain model was built without a log density")
        return self._logpdf(x)


class MvnModel(JointModel):
    """Multivariate normal law sampled through its normal conditionals."""

    def __init__(self, spec: MvnSpec, names=None):
        self.spec = spec
        self.names = tuple(names or (f"x{i}" for i in range(spec.dim)))
        self._steps = [None] + [conditional_weights(spec, k) for k in range(1, spec.dim)]

    @classmethod
    def from_arrays(cls, mu, sigma, names=None):
        return cls(MvnSpec(mu, sigma), names)

    @property
    def marginals(self):
        sd = np.sqrt(np.diag(self.spec.sigma))
        return [Normal(float(m), float(s)) for m, s in zip(self.spec.mu, sd)]

    def _law(self, k, x_prefix):
        if k == 0:
            return self.spec.mu[0], np.sqrt(self.spec.sigma[0, 0])
        w, s2 = self._steps[k]
        return self.spec.mu[k] + (x_prefix - self.spec.mu[:k]) @ w, np.sqrt(s2)

    def conditional_quantile(self, k, z, x_prefix):
        m, s = self._law(k, np.asarray(x_prefix))
        return m + s * special.ndtri(z)

    def conditional_cdf(self, k, x_k, x_prefix):
        m, s = self._law(k, np.asarray(x_prefix))
        return special.ndtr((np.asarray(x_k) - m) / s)

    def logpdf(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        chol = np.linalg.cholesky(self.spec.sigma)
        sol = np.linalg.solve(chol, (x - self.spec.mu).T)
        logdet = 2.0 * np.sum(np.log(np.diag(chol)))
        return -0.5 * (np.sum(sol * sol, axis=0) + logdet + self.dim * np.log(2 * np.pi))

    def reordered(self, order):
        order = _check_ordering(order, self.dim)
        if np.array_equal(order, np.arange(self.dim)):
            return self
        return MvnModel(self.spec.permuted(order), [self.names[i] for i in order])


class CopulaModel(JointModel):
    """Joint law built from marginals and a copula."""

    def __init__(self, marginals, copula: Copula, names=None):
        self._marginals = list(marginals)
        if copula.dim != len(self._marginals):
            raise ValueError(f"copula dimension {copula.dim} != {len(self._marginals)} marginals")
        self.copula = copula
        self.names = tuple(names or (f"x{i}" for i in range(len(self._marginals))))

    @property
    def marginals(self):
        return list(self._marginals)

    def conditional_quantile(self, k, z, x_prefix):
        if k == 0:
            return self._marginals[0].quantile(z)
        x_prefix = np.asarray(x_prefix)
        u_prefix = clamp_interior(self._u(x_prefix), "conditioning")
        u_k = self.copula.conditional_quantile(k, z, u_prefix)
        return self._marginals[k].quantile(u_k)

    def conditional_cdf(self, k, x_k, x_prefix):
        if k == 0:
            return self._marginals[0].cdf(x_k)
        u_prefix = clamp_interior(self._u(np.asarray(x_prefix)), "conditioning")
        return self.copula.conditional_cdf(k, self._marginals[k].cdf(x_k), u_prefix)

    def copula_chain(self, z) -> np.ndarray:
        """Uniforms with the copula's law from stratified uniforms ``z``."""
        z = np.atleast_2d(np.asarray(z, dtype=float))
        u = np.empty_like(z)
        u[:, 0] = z[:, 0]
        for k in range(1, self.dim):
            cond = clamp_interior(u[:, :k], "conditioning")
            u[:, k] = self.copula.conditional_quantile(k, z[:, k], cond)
        return u

    def _u(self, x):
        return np.stack([m.cdf(x[..., i]) for i, m in enumerate(self._marginals[: x.shape[-1]])], axis=-1)

    def logpdf(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        u = self._u(x)
        marg = sum(m.logpdf(x[:, i]) for i, m in enumerate(self._marginals))
        return self.copula.logpdf(u) + marg

    def reordered(self, order):
        order = _check_ordering(order, self.dim)
        if np.array_equal(order, np.arange(self.dim)):
            return self
        return CopulaModel(
            [self._marginals[i] for i in order],
            self.copula.reordered(order),
            [self.names[i] for i in order],
        )

    def input_cdf(self, k, x_k, x_prefix):
        return conditional_input_cdf(self._marginals, self.copula, k, x_k, x_prefix)

    def input_quantile(self, k, z, x_prefix):
        return conditional_input_quantile(self._marginals, self.copula, k, z, x_prefix)


@dataclass(frozen=True)
class SampleMatrix:
    x: np.ndarray
    scheme: str
    names: tuple[str, ...]
    mode: str | None = None
    seed: int | None = None
    ordering: tuple[int, ...] | None = None
    z: np.ndarray | None = None
    note: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def k(self) -> int:
        return self.x.shape[1]

    def metadata(self) -> dict:
        meta = {
            "scheme": self.scheme,
            "seed": self.seed,
            "mode": self.mode,
            "ordering": list(self.ordering) if self.ordering is not None else None,
            "n": self.n,
            "k": self.k,
            "names": list(self.names),
        }
        if self.note:
            meta["note"] = self.note
        return meta

    def to_csv(self, path) -> Path:
        """Write the sample and a JSON metadata sidecar; returns the sidecar path."""
        path = Path(path)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.names)
            for row in self.x:
                writer.writerow([repr(float(v)) for v in row])
        sidecar = path.with_suffix(path.suffix + ".json")
        sidecar.write_text(json.dumps(self.metadata(), indent=2) + "\n")
        return sidecar


def read_sample_csv(path) -> SampleMatrix:
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    sidecar = path.with_suffix(path.suffix + ".json")
    meta = json.loads(sidecar.read_text()) if sidecar.exists() else {}
    ordering = meta.get("ordering")
    return SampleMatrix(
        x=np.array([[float(v) for v in r] for r in rows[1:]]),
        scheme=meta.get("scheme", "unknown"),
        names=tuple(rows[0]),
        mode=meta.get("mode"),
        seed=meta.get("seed"),
        ordering=tuple(ordering) if ordering is not None else None,
        note=meta.get("note", ""),
    )


def _seed_of(rng):
    return int(rng) if isinstance(rng, (int, np.integer)) else None


def _ordering_tuple(ordering, dim):
    return tuple(int(i) for i in _check_ordering(ordering, dim))


def sample_srs(model: JointModel, n: int, rng=None, ordering=None) -> SampleMatrix:
    seed = _seed_of(rng)
    rng = check_random_state(rng)
    z = clamp_interior(rng.random((n, model.dim)), "uniform")
    x = model.inverse_transform(z, ordering)
    return SampleMatrix(x, "srs", model.names, None, seed, _ordering_tuple(ordering, model.dim), z)


def sample_lhs_independent(marginals, n: int, mode: str = "jittered", rng=None, names=None) -> SampleMatrix:
    """Marginal LHS: ``x[:, k] = quantile_k(z[:, k])`` for a stratified design."""
    marginals = list(marginals)
    seed = _seed_of(rng)
    design = generate_design(n, len(marginals), mode, check_random_state(rng))
    z = clamp_interior(design.z, "design")
    x = np.column_stack([m.quantile(z[:, k]) for k, m in enumerate(marginals)])
    names = tuple(names or (f"x{i}" for i in range(len(marginals))))
    return SampleMatrix(x, "lhs_ind", names, mode, seed, None, design.z)


def sample_lhsd(model: JointModel, n: int, mode: str = "jittered", rng=None, ordering=None) -> SampleMatrix:
    """Stratified design pushed through the conditional quantile chain.

    ``mode="centered"`` gives the centered variant.
    """
    seed = _seed_of(rng)
    design = generate_design(n, model.dim, mode, check_random_state(rng))
    z = clamp_interior(design.z, "design")
    x = model.inverse_transform(z, ordering)
    scheme = "lhsd_c" if mode == "centered" else "lhsd"
    return SampleMatrix(x, scheme, model.names, mode, seed, _ordering_tuple(ordering, model.dim), design.z)


def sample_lhsd_copula(model: CopulaModel, n: int, mode: str = "jittered", rng=None, ordering=None) -> SampleMatrix:
    """Stratified design through inverse conditional copulas, then marginal quantiles."""
    if not isinstance(model, CopulaModel):
        raise TypeError("sample_lhsd_copula needs a CopulaModel (marginals + copula)")
    seed = _seed_of(rng)
    order = _check_ordering(ordering, model.dim)
    chained = model.reordered(order)
    design = generate_design(n, model.dim, mode, check_random_state(rng))
    z = clamp_interior(design.z, "design")
    try:
        u = chained.copula_chain(z)
    except (ValueError, ArithmeticError) as exc:
        raise SamplingError(f"inverse conditional copula failed: {exc}") from exc
    x_chain = np.column_stack([m.quantile(u[:, k]) for k, m in enumerate(chained.marginals)])
    x = np.empty_like(x_chain)
    x[:, order] = x_chain
    return SampleMatrix(
        x, "lhsd_copula", model.names, mode, seed, tuple(int(i) for i in order), design.z, extra={"u": u}
    )


def sample_lhs_rank(model: JointModel, n: int, rng=None, ordering=None) -> SampleMatrix:
    """Rank-matched LHS baseline.

    Draws an i.i.d. reference sample from the joint law and an independent
    marginal LHS, then rearranges each LHS column so its ranks match those of
    the reference column.
    """
    seed = _seed_of(rng)
    rng = check_random_state(rng)
    reference = sample_srs(model, n, rng, ordering).x
    lhs = sample_lhs_independent(model.marginals, n, "jittered", rng).x
    x = np.empty_like(lhs)
    for k in range(model.dim):
        ranks = np.argsort(np.argsort(reference[:, k], kind="stable"), kind="stable")
        x[:, k] = np.sort(lhs[:, k])[ranks]
    return SampleMatrix(
        x, "lhs_rank", model.names, "jittered", seed, _ordering_tuple(ordering, model.dim),
        note="baseline, reconstruction",
    )


def draw(model: JointModel, scheme: str, n: int, rng=None, ordering=None, mode=None) -> SampleMatrix:
    """Dispatch to a sampler by scheme name.

    ``lhsd`` and ``lhsd_c`` use the copula route when the model is a
    `CopulaModel`; ``mode`` overrides the scheme's default design mode.
    """
    if scheme == "srs":
        return sample_srs(model, n, rng, ordering)
    if scheme == "lhs_ind":
        sm = sample_lhs_independent(model.marginals, n, mode or "jittered", rng, model.names)
        return sm
    if scheme in ("lhsd", "lhsd_c"):
        mode = mode or ("centered" if scheme == "lhsd_c" else "jittered")
        if isinstance(model, CopulaModel):
            sm = sample_lhsd_copula(model, n, mode, rng, ordering)
        else:
            sm = sample_lhsd(model, n, mode, rng, ordering)
        return SampleMatrix(sm.x, scheme, sm.names, sm.mode, sm.seed, sm.ordering, sm.z, sm.note, sm.extra)
    if scheme == "lhsd_copula":
        return sample_lhsd_copula(model, n, mode or "jittered", rng, ordering)
    if scheme == "lhs_rank":
        return sample_lhs_rank(model, n, rng, ordering)
    raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
