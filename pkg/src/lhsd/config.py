"""JSON model specifications.

A model file is one of::

    {"study": "flood"}                                   built-in study model
    {"names": [...], "mvn": {"mu": [...], "sigma": [[...]]}}
    {"names": [...], "marginals": [{"family": ..., "params": {...}}, ...],
     "copula": {"family": "gaussian", "pairs": [{"i": 0, "j": 1, "rho": 0.5}]}}

The copula defaults to independence when omitted. Pair indices are 0-based
integers or component names.
"""
from __future__ import annotations

import json
from pathlib import Path

from .copula import IndependentCopula, copula_from_dict
from .dist import marginal_from_dict
from .sampler import CopulaModel, JointModel, MvnModel

__all__ = ["load_json", "model_from_dict", "model_to_dict"]


def load_json(path) -> dict:
    return json.loads(Path(path).read_text())


def _resolve_pairs(spec, names):
    pairs = []
    for p in spec.get("pairs", []):
        i, j = p["i"], p["j"]
        i = names.index(i) if isinstance(i, str) else int(i)
        j = names.index(j) if isinstance(j, str) else int(j)
        pairs.append({"i": i, "j": j, "rho": p["rho"]})
    return {**spec, "pairs": pairs} if "pairs" in spec else spec


def model_from_dict(spec: dict) -> JointModel:
    if "study" in spec:
        from .bench.studies import build_study

        return build_study(spec["study"], **spec.get("options", {})).model
    names = spec.get("names")
    if "mvn" in spec:
        return MvnModel.from_arrays(spec["mvn"]["mu"], spec["mvn"]["sigma"], names)
    if "marginals" in spec:
        marginals = [marginal_from_dict(m) for m in spec["marginals"]]
        names = names or [m.get("name", f"x{i}") for i, m in enumerate(spec["marginals"])]
        cop_spec = spec.get("copula")
        if cop_spec is None:
            copula = IndependentCopula(len(marginals))
        else:
            copula = copula_from_dict(_resolve_pairs(cop_spec, list(names)), len(marginals))
        return CopulaModel(marginals, copula, names)
    raise ValueError("model spec needs one of 'study', 'mvn' or 'marginals'")


def model_to_dict(model: JointModel) -> dict:
    if isinstance(model, MvnModel):
        return {"names": list(model.names),
                "mvn": {"mu": model.spec.mu.tolist(), "sigma": model.spec.sigma.tolist()}}
    if isinstance(model, CopulaModel):
        return {"names": list(model.names),
                "marginals": [m.to_dict() for m in model.marginals],
                "copula": model.copula.to_dict()}
    raise TypeError(f"cannot serialise {type(model).__name__}")
