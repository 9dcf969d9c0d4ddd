"""Stratified uniform designs.

A design is an ``n x k`` matrix whose columns each put exactly one point in
every interval ``[(p-1)/n, p/n)``. The jittered variant places the point
uniformly inside its interval; the centered variant places it at the
midpoint. Every LHS-type sampler in the package consumes one of these.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._rng import check_random_state

__all__ = [
    "MODES",
    "Design",
    "Certificate",
    "InvalidDimensionError",
    "permutation_matrix",
    "generate_design",
    "stratification_certificate",
    "write_design_csv",
    "read_design_csv",
]

MODES = ("jittered", "centered")


class InvalidDimensionError(ValueError):
    pass


@dataclass(frozen=True)
class Design:
    z: np.ndarray
    mode: str = "jittered"
    seed: object = None

    def __post_init__(self):
        z = np.array(self.z, dtype=float)
        if z.ndim != 2:
            raise InvalidDimensionError(f"design must be 2-d, got shape {z.shape}")
        z.flags.writeable = False
        object.__setattr__(self, "z", z)

    @property
    def n(self) -> int:
        return self.z.shape[0]

    @property
    def k(self) -> int:
        return self.z.shape[1]


@dataclass(frozen=True)
class Certificate:
    ok: bool
    counts: np.ndarray
    violations: dict = field(default_factory=dict)

    def __bool__(self):
        return self.ok


def permutation_matrix(n: int, k: int, rng=None) -> np.ndarray:
    """Columns are independent uniform permutations of ``1..n``."""
    _check_dims(n, k)
    rng = check_random_state(rng)
    p = np.empty((n, k), dtype=np.int64)
    for col in range(k):
        p[:, col] = rng.permutation(n) + 1
    return p


def generate_design(n: int, k: int, mode: str = "jittered", rng=None) -> Design:
    """Draw a stratified uniform design.

    Each point is ``((p - 1) + u) / n`` with ``p`` the column permutation and
    ``u ~ U[0, 1)`` (jittered) or ``u = 1/2`` (centered). Writing the offset
    as ``p - 1 + u`` rather than ``p - u`` gives the same law while keeping
    every value strictly below ``p / n``.

    Parameters
    ----------
    n, k : int
        Sample size (rows) and dimension (columns), both at least 1.
    mode : {"jittered", "centered"}
    rng : None, int or numpy Generator
        Source of randomness; integers are treated as seeds.
    """
    if mode not in MODES:
        raise ValueError(f"unknown design mode {mode!r}; expected one of {MODES}")
    seed = rng if isinstance(rng, (int, np.integer)) else None
    rng = check_random_state(rng)
    p = permutation_matrix(n, k, rng)
    if mode == "centered":
        z = (p - 0.5) / n
    else:
        u = rng.random((n, k))
        z = ((p - 1) + u) / n
        z = _pin_to_stratum(z, p, n)
    return Design(z=z, mode=mode, seed=seed)


def _pin_to_stratum(z, p, n):
    # Rounding in (p - 1 + u) / n can land exactly on p / n when u is within
    # an ulp of 1; step such values back inside their stratum.
    bad = np.floor(n * z) > p - 1
    while bad.any():
        z[bad] = np.nextafter(z[bad], 0.0)
        bad = np.floor(n * z) > p - 1
    return z


def stratification_certificate(design) -> Certificate:
    """Check that every column hits every stratum exactly once.

    Accepts a `Design` or a raw matrix. ``violations`` maps ``(column, bin)``
    to the observed count for every bin whose count differs from 1.
    """
    z = design.z if isinstance(design, Design) else np.asarray(design, dtype=float)
    n, k = z.shape
    bins = np.floor(n * z).astype(np.int64)
    inside = (bins >= 0) & (bins < n)
    counts = np.zeros((n, k), dtype=np.int64)
    violations = {}
    for col in range(k):
        counts[:, col] = np.bincount(bins[inside[:, col], col], minlength=n)
        outside = int((~inside[:, col]).sum())
        if outside:
            violations[(col, None)] = outside
    for b, col in zip(*np.nonzero(counts != 1)):
        violations[(int(col), int(b))] = int(counts[b, col])
    return Certificate(ok=not violations, counts=counts, violations=violations)


def write_design_csv(design: Design, path, layout: str = "long") -> None:
    """Write a design as ``j,k,z`` rows (1-based) or as a plain matrix.

    Values are written with ``repr`` so they round-trip exactly.
    """
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        if layout == "long":
            writer.writerow(["j", "k", "z"])
            for j in range(design.n):
                for col in range(design.k):
                    writer.writerow([j + 1, col + 1, repr(float(design.z[j, col]))])
        elif layout == "matrix":
            for row in design.z:
                writer.writerow([repr(float(v)) for v in row])
        else:
            raise ValueError(f"unknown layout {layout!r}")


def read_design_csv(path, mode: str = "jittered") -> Design:
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if rows and rows[0] == ["j", "k", "z"]:
        entries = [(int(j), int(c), float(v)) for j, c, v in rows[1:]]
        n = max(e[0] for e in entries)
        k = max(e[1] for e in entries)
        z = np.empty((n, k))
        for j, c, v in entries:
            z[j - 1, c - 1] = v
    else:
        z = np.array([[float(v) for v in row] for row in rows])
    return Design(z=z, mode=mode)


def _check_dims(n, k):
    if int(n) < 1 or int(k) < 1:
        raise InvalidDimensionError(f"n and k must be positive, got n={n}, k={k}")
