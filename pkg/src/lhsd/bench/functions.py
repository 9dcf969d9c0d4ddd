"""Integrands used by the built-in studies.

Each accepts a single input vector or an ``(n, k)`` array of rows and returns
a float or a length-``n`` array accordingly.
"""
from __future__ import annotations

from dataclasses import astuple, dataclass

import numpy as np

__all__ = [
    "SingularInputError",
    "FloodInputs",
    "FLOOD_NAMES",
    "h_mvn",
    "h_logistic",
    "flood_model",
    "flood_overflow",
]


class SingularInputError(ValueError):
    """Integrand evaluated where it is undefined (for example log|0|)."""


def _rows(x, k):
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.shape[1] != k:
        raise ValueError(f"expected {k} components per row, got {arr.shape[1]}")
    return arr, single


def _check_nonzero(x1):
    if np.any(x1 == 0.0):
        raise SingularInputError("first component is exactly zero; log|x1| is undefined")


def h_mvn(x):
    """``x1 + x2 x3 / 2 - x2 log|x1| + exp(x4 / 4)``."""
    arr, single = _rows(x, 4)
    x1, x2, x3, x4 = arr.T
    _check_nonzero(x1)
    out = x1 + 0.5 * x2 * x3 - x2 * np.log(np.abs(x1)) + np.exp(0.25 * x4)
    return float(out[0]) if single else out


def h_logistic(x):
    """``x1 - x2 + x2 log|x1|``."""
    arr, single = _rows(x, 2)
    x1, x2 = arr.T
    _check_nonzero(x1)
    out = x1 - x2 + x2 * np.log(np.abs(x1))
    return float(out[0]) if single else out


FLOOD_NAMES = ("Q", "Ks", "Zv", "Zm", "Hd", "Cb", "L", "B")


@dataclass(frozen=True)
class FloodInputs:
    Q: float   # maximal annual flowrate, m^3/s
    Ks: float  # Strickler coefficient
    Zv: float  # downstream river level, m
    Zm: float  # upstream river level, m
    Hd: float  # dyke height, m
    Cb: float  # bank level, m
    L: float   # river stretch length, m
    B: float   # river width, m


def flood_model(inputs) -> dict:
    """River height ``H`` and overflow ``S`` (both in metres).

    ``H = (Q / (B Ks sqrt((Zm - Zv) / L)))**0.6`` and ``S = Zv + H - Hd - Cb``.
    Accepts a `FloodInputs`, a length-8 vector or an ``(n, 8)`` array.
    """
    if isinstance(inputs, FloodInputs):
        inputs = astuple(inputs)
    arr, single = _rows(inputs, 8)
    q, ks, zv, zm, hd, cb, length, width = arr.T
    if np.any(zm <= zv):
        raise ValueError("upstream level Zm must exceed downstream level Zv")
    if np.any(q < 0) or np.any(ks <= 0) or np.any(width <= 0) or np.any(length <= 0):
        raise ValueError("Q must be non-negative and Ks, B, L positive")
    h = (q / (width * ks * np.sqrt((zm - zv) / length))) ** 0.6
    s = zv + h - hd - cb
    if single:
        return {"S": float(s[0]), "H": float(h[0])}
    return {"S": s, "H": h}


def flood_overflow(x):
    return flood_model(x)["S"]
