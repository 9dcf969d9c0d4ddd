"""Replicated sampling experiments.

Each replication of each scheme owns an RNG substream keyed by
``(seed, study, scheme, replication)``, so results do not depend on the
order in which replications run or on how they are split across workers.
"""
from __future__ import annotations

import csv
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .._rng import name_key, substream
from ..diagnostics import CorrelationReport, correlation_table, kl_divergence
from ..estimate import DEFAULT_BACKFIT, TransformedSample, default_knn_k, estimate_variance, fit_main_effects
from ..sampler import SCHEMES, draw
from .studies import Study, build_study, resolve_integrand, tau_oracle

__all__ = [
    "ExperimentConfig",
    "SchemeResult",
    "StudyReport",
    "StudyAborted",
    "run_study",
    "theoretical_variances",
    "write_outputs",
]

log = logging.getLogger(__name__)

MAX_FAILURE_RATE = 0.001
DEFAULT_SCHEMES = ("lhsd", "lhsd_c", "lhs_ind", "lhs_rank", "srs")
FULL_SCALE_REPS = 10_000


class StudyAborted(RuntimeError):
    pass


@dataclass
class ExperimentConfig:
    study: str = "logistic"
    n: int = 30
    reps: int = 2000
    schemes: tuple[str, ...] = DEFAULT_SCHEMES
    seed: int = 12345
    knn_k: int | None = None
    backfit: int = DEFAULT_BACKFIT
    k_entropy: int = 3
    ordering: tuple[int, ...] | None = None
    n_oracle: int = 1_000_000
    oracle_seed: int = 0
    kl: bool = False
    correlations: bool = False
    calibration_n: int | None = None
    workers: int = 1
    full_scale: bool = False
    model: dict | None = None
    integrand: str | None = None
    corr_targets: list | None = None
    out_dir: str | None = None

    def __post_init__(self):
        self.schemes = tuple(self.schemes)
        if self.ordering is not None:
            self.ordering = tuple(int(i) for i in self.ordering)
        if self.full_scale:
            self.reps = FULL_SCALE_REPS
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        if not self.schemes:
            raise ValueError("at least one scheme is required")
        unknown = set(self.schemes) - set(SCHEMES)
        if unknown:
            raise ValueError(f"unknown schemes {sorted(unknown)}; expected a subset of {SCHEMES}")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise ValueError(f"unknown config keys {sorted(extra)}")
        return cls(**data)

    def to_dict(self) -> dict:
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        out["schemes"] = list(self.schemes)
        if self.ordering is not None:
            out["ordering"] = list(self.ordering)
        return out

    def build_study(self) -> Study:
        if self.study != "custom":
            return build_study(self.study)
        from ..config import model_from_dict

        if self.model is None or self.integrand is None:
            raise ValueError("a custom study needs 'model' and 'integrand'")
        model = model_from_dict(self.model)
        targets = {}
        for entry in self.corr_targets or []:
            i, j = entry["i"], entry["j"]
            i = model.names.index(i) if isinstance(i, str) else int(i)
            j = model.names.index(j) if isinstance(j, str) else int(j)
            targets[(i, j)] = float(entry["rho"])
        return Study("custom", model, resolve_integrand(self.integrand), targets)


@dataclass
class SchemeResult:
    scheme: str
    tau_hats: np.ndarray
    bias: float
    variance: float
    mse: float
    failures: int = 0
    kl: np.ndarray | None = None
    correlation: CorrelationReport | None = None

    def scaled(self, n, tau):
        return math.sqrt(n) * (self.tau_hats - tau)

    def to_dict(self) -> dict:
        out = {
            "bias": self.bias,
            "variance": self.variance,
            "mse": self.mse,
            "mean_tau_hat": math.fsum(self.tau_hats) / self.tau_hats.size,
            "reps": int(self.tau_hats.size),
            "failures": self.failures,
        }
        if self.kl is not None:
            out["kl_mean"] = _mean(self.kl)
            out["kl_variance"] = _variance(self.kl)
        if self.correlation is not None:
            out["correlation"] = self.correlation.to_dict()
        return out


@dataclass
class StudyReport:
    config: ExperimentConfig
    tau: float
    tau_se: float
    results: dict
    theory: dict | None = None
    runtime: float = 0.0
    notes: list = field(default_factory=list)

    def __getitem__(self, scheme) -> SchemeResult:
        return self.results[scheme]

    def to_dict(self) -> dict:
        return {
            "study": self.config.study,
            "n": self.config.n,
            "reps": self.config.reps,
            "seed": self.config.seed,
            "config": self.config.to_dict(),
            "oracle": {"tau": self.tau, "se": self.tau_se, "n": self.config.n_oracle,
                       "seed": self.config.oracle_seed},
            "scaling": "sqrt(n) * tau_hat",
            "schemes": {s: r.to_dict() for s, r in self.results.items()},
            "theory": self.theory,
            "notes": self.notes,
            "runtime_seconds": self.runtime,
        }


def _mean(v):
    return math.fsum(v) / len(v)


def _variance(v):
    m = _mean(v)
    return math.fsum((np.asarray(v) - m) ** 2) / len(v)


def _moments(scaled):
    """Bias, variance (divisor n) and MSE of the scaled errors about the oracle."""
    bias = _mean(scaled)
    variance = _variance(scaled)
    mse = math.fsum(np.asarray(scaled) ** 2) / len(scaled)
    return bias, variance, mse


def _run_chunk(args):
    study, cfg, scheme, reps = args
    skey, ckey = name_key(study.name), name_key(scheme)
    out = []
    for r in reps:
        rng = substream(cfg.seed, skey, ckey, r)
        try:
            sm = draw(study.model, scheme, cfg.n, rng, cfg.ordering)
            y = np.asarray(study.h(sm.x), dtype=float)
            tau_hat = math.fsum(y) / y.size
            if not math.isfinite(tau_hat):
                raise FloatingPointError("non-finite estimate")
            kl = None
            if cfg.kl:
                kl = kl_divergence(sm.x, study.model.logpdf, cfg.k_entropy).kl_hat
            x = sm.x if cfg.correlations else None
            out.append((r, tau_hat, kl, x, None))
        except Exception as exc:  # recorded per replication, judged in aggregate
            out.append((r, math.nan, None, None, f"{type(exc).__name__}: {exc}"))
    return out


def _chunks(reps, workers):
    size = max(1, math.ceil(reps / (4 * workers)))
    return [range(i, min(i + size, reps)) for i in range(0, reps, size)]


def _run_scheme(study, cfg, scheme, pool):
    jobs = [(study, cfg, scheme, c) for c in _chunks(cfg.reps, cfg.workers)]
    rows = []
    parts = pool.map(_run_chunk, jobs) if pool is not None else map(_run_chunk, jobs)
    for part in parts:
        rows.extend(part)
    rows.sort(key=lambda t: t[0])
    failed = [(r, msg) for r, _, _, _, msg in rows if msg is not None]
    for r, msg in failed[:5]:
        log.warning("%s/%s replication %d failed: %s", study.name, scheme, r, msg)
    if len(failed) > MAX_FAILURE_RATE * cfg.reps:
        raise StudyAborted(
            f"{len(failed)} of {cfg.reps} replications failed for scheme {scheme!r} "
            f"(limit {MAX_FAILURE_RATE:.1%}); first error: {failed[0][1]}"
        )
    ok = [t for t in rows if t[4] is None]
    tau_hats = np.array([t[1] for t in ok])
    kl = np.array([t[2] for t in ok]) if cfg.kl else None
    corr = None
    if cfg.correlations and len(ok) >= 2:
        corr = correlation_table([t[3] for t in ok], study.corr_targets, study.model.names)
    return tau_hats, kl, corr, len(failed)


def theoretical_variances(study: Study, n_calib: int = 10_000, seed: int = 0, k_neighbors=None,
                          backfit: int = DEFAULT_BACKFIT) -> dict:
    """Asymptotic ``n * Var(tau_hat)`` for stratified and i.i.d. sampling.

    Main effects and residuals are fitted by k-NN regression on an
    independent simple random sample of size ``n_calib``.
    """
    rng = substream(seed, name_key("calibration"), name_key(study.name))
    z = np.clip(rng.random((n_calib, study.model.dim)), 1e-12, 1.0 - 1e-12)
    x = study.model.inverse_transform(z)
    ts = TransformedSample(study.model.transform(x), study.h(x))
    k = default_knn_k(n_calib) if k_neighbors is None else k_neighbors
    var = estimate_variance(ts, fit_main_effects(ts, k, backfit))
    return {
        "n_calibration": n_calib,
        "knn_k": k,
        "backfit": backfit,
        "lhsd": var.var_lhsd_hat * n_calib,
        "srs": var.var_srs_hat * n_calib,
        "main_effects": list(var.main_effect_ms),
    }


def run_study(cfg: ExperimentConfig) -> StudyReport:
    start = time.perf_counter()
    study = cfg.build_study()
    oracle = tau_oracle(study, cfg.n_oracle, cfg.oracle_seed)
    results = {}
    pool = ProcessPoolExecutor(cfg.workers) if cfg.workers > 1 else None
    try:
        for scheme in cfg.schemes:
            tau_hats, kl, corr, failures = _run_scheme(study, cfg, scheme, pool)
            scaled = math.sqrt(cfg.n) * (tau_hats - oracle.tau)
            bias, variance, mse = _moments(scaled)
            results[scheme] = SchemeResult(scheme, tau_hats, bias, variance, mse, failures, kl, corr)
    finally:
        if pool is not None:
            pool.shutdown()
    theory = None
    if cfg.calibration_n:
        theory = theoretical_variances(study, cfg.calibration_n, cfg.seed, cfg.knn_k, cfg.backfit)
    notes = []
    if "lhs_rank" in cfg.schemes:
        notes.append("lhs_rank is a baseline reconstruction (reference-ranks reordering)")
    report = StudyReport(cfg, oracle.tau, oracle.se, results, theory, time.perf_counter() - start, notes)
    if cfg.out_dir:
        write_outputs(report, cfg.out_dir)
    return report


def _fmt(v):
    return repr(float(v))


def write_outputs(report: StudyReport, out_dir) -> Path:
    """Write report.json, table.csv, kl.csv, corr.csv and density.csv."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(json.dumps(report.to_dict(), indent=2) + "\n")

    with (out / "table.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["scheme", "n", "bias", "variance", "mse"])
        for s, r in report.results.items():
            w.writerow([s, report.config.n, _fmt(r.bias), _fmt(r.variance), _fmt(r.mse)])

    with (out / "density.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["scheme", "replication", "tau_hat"])
        for s, r in report.results.items():
            for i, t in enumerate(r.tau_hats):
                w.writerow([s, i, _fmt(t)])

    with (out / "kl.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["scheme", "replication", "kl_hat"])
        for s, r in report.results.items():
            if r.kl is None:
                continue
            for i, v in enumerate(r.kl):
                w.writerow([s, i, _fmt(v)])
            w.writerow([s, "mean", _fmt(_mean(r.kl))])
            w.writerow([s, "variance", _fmt(_variance(r.kl))])

    with (out / "corr.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        header_written = False
        for s, r in report.results.items():
            c = r.correlation
            if c is None:
                continue
            labeled = [p for p in c.pairs if p in c.targets]
            if not header_written:
                cols = [c.label(p) for p in labeled] + ["max_abs_other"]
                w.writerow(["scheme", *[f"bias:{k}" for k in cols], *[f"mse:{k}" for k in cols]])
                header_written = True
            w.writerow([
                s,
                *[_fmt(c.bias[p]) for p in labeled], _fmt(c.other_bias),
                *[_fmt(c.mse[p]) for p in labeled], _fmt(c.other_mse),
            ])
    return out
