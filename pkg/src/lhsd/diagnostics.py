"""Goodness-of-fit diagnostics for samples against a target law.

`kl_divergence` splits the divergence between the sample's empirical
density and the target into a negative entropy term, estimated with the
Kozachenko-Leonenko nearest-neighbour estimator, and a cross term, the
sample mean of the target log density.

`correlation_table` summarises how well replicated samples reproduce target
pairwise (Pearson) correlations.
"""
from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path

import numpy as np
from scipy import special
from scipy.spatial import cKDTree

__all__ = [
    "KlReport",
    "CorrelationReport",
    "DiagnosticError",
    "knn_entropy",
    "kl_divergence",
    "correlation_table",
]


DUPLICATE_JITTER = 1e-12


class DiagnosticError(ValueError):
    pass


@dataclass(frozen=True)
class KlReport:
    kl_hat: float
    entropy_hat: float
    cross_term: float
    k_entropy: int
    jittered: int = 0

    def to_dict(self) -> dict:
        return {
            "kl_hat": self.kl_hat,
            "entropy_hat": self.entropy_hat,
            "cross_term": self.cross_term,
            "k_entropy": self.k_entropy,
        }


def knn_entropy(x, k: int = 3, rng=None) -> tuple[float, int]:
    """Kozachenko-Leonenko differential entropy estimate (nats).

    ``H = psi(n) - psi(k) + log V_d + d * mean(log eps_i)`` where ``eps_i`` is
    the Euclidean distance from point ``i`` to its ``k``-th nearest
    neighbour and ``V_d`` the volume of the unit ``d``-ball. Exact duplicate
    rows are separated by a tiny jitter; the number of jittered rows is
    returned alongside the estimate.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n, d = x.shape
    if n <= k:
        raise DiagnosticError(f"need more than k={k} points, got {n}")
    jittered = 0
    _, first = np.unique(x, axis=0, return_index=True)
    if first.size < n:
        dup = np.setdiff1d(np.arange(n), first)
        jittered = dup.size
        warnings.warn(f"jittering {jittered} duplicate rows before entropy estimation", RuntimeWarning,
                      stacklevel=2)
        gen = np.random.default_rng(0 if rng is None else rng)
        x = x.copy()
        scale = np.maximum(np.abs(x[dup]), 1.0)
        x[dup] += DUPLICATE_JITTER * scale * gen.standard_normal(x[dup].shape)
    tree = cKDTree(x)
    dist, _ = tree.query(x, k=k + 1)
    eps = dist[:, -1]
    log_unit_ball = 0.5 * d * math.log(math.pi) - special.gammaln(0.5 * d + 1.0)
    h = special.digamma(n) - special.digamma(k) + log_unit_ball + d * float(np.mean(np.log(eps)))
    return float(h), jittered


def kl_divergence(x, log_f, k_entropy: int = 3) -> KlReport:
    """KL divergence from the target density to the sample's empirical density.

    ``x`` is an ``(n, d)`` array or anything with an ``x`` attribute;
    ``log_f`` maps an ``(n, d)`` array to target log densities.
    """
    x = np.atleast_2d(np.asarray(getattr(x, "x", x), dtype=float))
    log_values = np.asarray(log_f(x), dtype=float)
    if not np.all(np.isfinite(log_values)):
        bad = np.flatnonzero(~np.isfinite(log_values))
        raise DiagnosticError(f"target log density is not finite at rows {bad[:10].tolist()}")
    entropy, jittered = knn_entropy(x, k_entropy)
    cross = math.fsum(log_values) / log_values.size
    return KlReport(kl_hat=-entropy - cross, entropy_hat=entropy, cross_term=cross,
                    k_entropy=k_entropy, jittered=jittered)


@dataclass
class CorrelationReport:
    names: tuple[str, ...]
    targets: dict
    pairs: list
    correlations: np.ndarray
    bias: dict = field(default_factory=dict)
    mse: dict = field(default_factory=dict)
    other_bias: float = float("nan")
    other_mse: float = float("nan")

    @property
    def reps(self) -> int:
        return self.correlations.shape[0]

    def label(self, pair) -> str:
        i, j = pair
        return f"{self.names[i]}-{self.names[j]}"

    def to_dict(self) -> dict:
        return {
            "reps": self.reps,
            "pairs": {
                self.label(p): {"target": self.targets.get(p, 0.0), "bias": self.bias[p], "mse": self.mse[p]}
                for p in self.pairs
            },
            "max_abs_other": {"bias": self.other_bias, "mse": self.other_mse},
        }

    def aggregate_rows(self) -> list[dict]:
        rows = [
            {"pair": self.label(p), "target": self.targets[p], "bias": self.bias[p], "mse": self.mse[p]}
            for p in self.pairs if p in self.targets
        ]
        rows.append({"pair": "max_abs_other", "target": 0.0, "bias": self.other_bias, "mse": self.other_mse})
        return rows

    def write_csv(self, path, scheme: str = "") -> None:
        """One row per replication, then ``target``, ``bias`` and ``mse`` rows.

        Columns are the pair labels plus ``max_abs_other``, which is only
        filled on the aggregate rows.
        """
        path = Path(path)
        labels = [self.label(p) for p in self.pairs]
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["scheme", "replication", *labels, "max_abs_other"])
            for r, row in enumerate(self.correlations):
                writer.writerow([scheme, r, *[repr(float(v)) for v in row], ""])
            writer.writerow([scheme, "target", *[repr(self.targets.get(p, 0.0)) for p in self.pairs], "0.0"])
            writer.writerow([scheme, "bias", *[repr(self.bias[p]) for p in self.pairs], repr(self.other_bias)])
            writer.writerow([scheme, "mse", *[repr(self.mse[p]) for p in self.pairs], repr(self.other_mse)])

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _normalize_targets(targets, names):
    out = {}
    for key, rho in targets.items():
        i, j = key
        if isinstance(i, str):
            i, j = names.index(i), names.index(j)
        out[(min(i, j), max(i, j))] = float(rho)
    return out


def correlation_table(samples, targets: dict, names=None) -> CorrelationReport:
    """Bias and MSE of sample Pearson correlations over replications.

    ``samples`` is an iterable of ``(n, d)`` arrays (or objects with ``x``
    and ``names``). ``targets`` maps index or name pairs to target
    correlations; every pair not listed has target zero and is summarised by
    the maximum absolute bias and MSE across those pairs.
    """
    mats = []
    for s in samples:
        if names is None and hasattr(s, "names"):
            names = tuple(s.names)
        mats.append(np.atleast_2d(np.asarray(getattr(s, "x", s), dtype=float)))
    if len(mats) < 2:
        raise DiagnosticError("correlation table needs at least two replications")
    d = mats[0].shape[1]
    names = tuple(names or (f"x{i}" for i in range(d)))
    targets = _normalize_targets(targets, list(names))
    pairs = list(combinations(range(d), 2))
    corr = np.empty((len(mats), len(pairs)))
    for r, x in enumerate(mats):
        sd = x.std(axis=0)
        if np.any(sd == 0):
            raise DiagnosticError(f"replication {r} has a constant column; correlation undefined")
        c = np.corrcoef(x, rowvar=False)
        corr[r] = [c[i, j] for i, j in pairs]
    report = CorrelationReport(names=names, targets=targets, pairs=pairs, correlations=corr)
    other_bias, other_mse = [], []
    for col, p in enumerate(pairs):
        err = corr[:, col] - targets.get(p, 0.0)
        report.bias[p] = float(np.mean(err))
        report.mse[p] = float(np.mean(err * err))
        if p not in targets:
            other_bias.append(abs(report.bias[p]))
            other_mse.append(report.mse[p])
    if other_bias:
        report.other_bias = max(other_bias)
        report.other_mse = max(other_mse)
    return report
