"""Error metrics, the rank-1 eigenvalue oracle, and experiment sweeps."""
from __future__ import annotations

import csv
import dataclasses
import logging
import math
import time
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .completion import CompletionConfig, complete
from .errors import DimensionMismatch, TargetedError, ZeroTruth
from .observed import ObservedMatrix, SubmatrixDescriptor, mask_uniform
from .pipeline import TargetedConfig, targeted_complete
from .svp import SvpConfig, discover_all
from .synthgen import PlantSpec, generate

log = logging.getLogger(__name__)

SWEPT_VARS = ("density", "subrank", "subsize", "backrank", "pi")
METHODS = ("plain", "targeted", "svp")
MAX_REPORTED_PLANTS = 3
SWEEP_HEADER = ["swept_var", "value", "seed", "method", "relerr_M",
                "relerr_S1", "relerr_S2", "relerr_S3",
                "fscore_S1", "fscore_S2", "fscore_S3",
                "time_discover_s", "time_complete_s"]


def rel_err(truth, estimate) -> float:
    """||truth - estimate||_F^2 / ||truth||_F^2."""
    truth = np.asarray(truth, dtype=np.float64)
    estimate = np.asarray(estimate, dtype=np.float64)
    if truth.shape != estimate.shape:
        raise DimensionMismatch(f"shapes differ: {truth.shape} vs {estimate.shape}")
    denom = float(np.sum(truth ** 2))
    if denom == 0.0:
        raise ZeroTruth("relative error undefined for an all-zero truth")
    return float(np.sum((truth - estimate) ** 2)) / denom


def rel_err_over(truth, estimate, d: SubmatrixDescriptor) -> float:
    truth = np.asarray(truth)
    d.check(truth.shape)
    return rel_err(d.block(truth), d.block(estimate))


def f_score(truth: SubmatrixDescriptor, found: SubmatrixDescriptor) -> float:
    """Harmonic mean of precision and recall over the cell sets rows x cols."""
    inter = (len(set(truth.rows) & set(found.rows))
             * len(set(truth.cols) & set(found.cols)))
    if inter == 0:
        return 0.0
    precision = inter / found.n_cells
    recall = inter / truth.n_cells
    return 2 * precision * recall / (precision + recall)


def f_score_axes(truth: SubmatrixDescriptor, found: SubmatrixDescriptor) -> tuple[float, float]:
    """Row-only and column-only F-scores, for diagnosing which side failed."""
    def f(a, b):
        inter = len(set(a) & set(b))
        return 0.0 if inter == 0 else 2 * inter / (len(a) + len(b))
    return f(truth.rows, found.rows), f(truth.cols, found.cols)


def best_f_score(truth: SubmatrixDescriptor, found: Sequence[SubmatrixDescriptor]) -> float:
    return max((f_score(truth, d) for d in found), default=0.0)


def rank1_lambda_oracle(sigma: float, tau: float, gamma: float) -> tuple[float, float]:
    """Eigenvalues of M^T M for M = [sigma * a x^T ; tau * b y^T], |<x, y>| = gamma.

    lambda = (sigma^2 + tau^2 +- sqrt((sigma^2 - tau^2)^2 + 4 sigma^2 tau^2 gamma^2)) / 2
    """
    if sigma < 0 or tau < 0:
        raise ValueError("sigma and tau must be non-negative")
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("gamma must lie in [0, 1]")
    s2, t2 = sigma * sigma, tau * tau
    root = math.sqrt((s2 - t2) ** 2 + 4.0 * s2 * t2 * gamma * gamma)
    plus = 0.5 * (s2 + t2 + root)
    # product form avoids cancellation in the smaller root
    minus = s2 * t2 * (1.0 - gamma * gamma) / plus if plus > 0 else 0.0
    return plus, minus


# -- sweeps -------------------------------------------------------------------

@dataclass(frozen=True)
class SweepSpec:
    swept: str
    values: tuple
    n: int = 400
    m: int = 400
    background_rank: int = 30
    plants: tuple = (PlantSpec(40, 40, 2, 1.2),)
    density: float = 1.0
    seeds: int = 1
    methods: tuple = ("plain", "targeted")
    svp: SvpConfig = SvpConfig()
    completion: CompletionConfig = CompletionConfig()

    def __post_init__(self):
        if self.swept not in SWEPT_VARS:
            raise ValueError(f"swept variable must be one of {SWEPT_VARS}")
        if not self.values:
            raise ValueError("value grid is empty")
        if self.seeds < 1:
            raise ValueError("need at least one seed per point")
        bad = set(self.methods) - set(METHODS)
        if bad or not self.methods:
            raise ValueError(f"methods must be drawn from {METHODS}")

    def point(self, value):
        """(n, m, r, plants, density) for one grid value."""
        plants, r, density = list(self.plants), self.background_rank, self.density
        if self.swept == "density":
            density = float(value)
        elif self.swept == "backrank":
            r = int(value)
        elif self.swept == "subrank":
            plants = [dataclasses.replace(p, rank=int(value)) for p in plants]
        elif self.swept == "subsize":
            plants = [dataclasses.replace(p, rows=int(value), cols=int(value)) for p in plants]
        elif self.swept == "pi":
            plants = [dataclasses.replace(p, pi_target=float(value)) for p in plants]
        return self.n, self.m, r, plants, density


def evaluate_method(method: str, truth: np.ndarray, plants_truth, M_obs: ObservedMatrix,
                    svp_cfg: SvpConfig, completion_cfg: CompletionConfig, seed: int) -> dict:
    """Run one method on one instance and collect its metrics."""
    row = {}
    if method == "svp":
        t0 = time.perf_counter()
        found = discover_all(M_obs, svp_cfg, seed)
        row["time_discover_s"] = time.perf_counter() - t0
    elif method == "plain":
        t0 = time.perf_counter()
        estimate = complete(M_obs, completion_cfg, seed).estimate
        row["time_complete_s"] = time.perf_counter() - t0
        found = None
    else:
        res = targeted_complete(M_obs, TargetedConfig(svp_cfg, completion_cfg), seed)
        estimate = res.estimate
        found = list(res.descriptors)
        row["time_discover_s"] = res.timings["discover_s"]
        row["time_complete_s"] = res.timings["complete_s"]
    if method != "svp":
        row["relerr_M"] = rel_err(truth, estimate)
        for k, d in enumerate(plants_truth[:MAX_REPORTED_PLANTS]):
            row[f"relerr_S{k + 1}"] = rel_err_over(truth, estimate, d)
    if found is not None:
        for k, d in enumerate(plants_truth[:MAX_REPORTED_PLANTS]):
            row[f"fscore_S{k + 1}"] = best_f_score(d, found)
        row["n_found"] = len(found)
    return row


def run_sweep(spec: SweepSpec, seed: int = 0, timings: bool = True) -> list[dict]:
    """Generate, mask and evaluate every (grid value, seed, method) combination.

    Instance ``s`` of a point uses seed ``seed + s`` for generation, masking and
    the methods. Failures are recorded in the row's ``error`` field instead of
    aborting. Rows come back sorted by (grid position, seed, method).
    """
    rows = []
    for pos, value in enumerate(spec.values):
        n, m, r, plants, density = spec.point(value)
        for s in range(spec.seeds):
            inst_seed = seed + s
            try:
                inst = generate(n, m, r, plants, inst_seed)
                M_obs = mask_uniform(inst.matrix, density, inst_seed)
            except TargetedError as exc:
                inst, M_obs, gen_error = None, None, exc
            else:
                gen_error = None
            for method in spec.methods:
                row = {"swept_var": spec.swept, "value": value, "seed": inst_seed,
                       "method": method, "_pos": pos}
                try:
                    if gen_error is not None:
                        raise gen_error
                    row.update(evaluate_method(method, inst.matrix, inst.truth, M_obs,
                                               spec.svp, spec.completion, inst_seed))
                except (TargetedError, np.linalg.LinAlgError) as exc:
                    log.warning("sweep %s=%s seed=%d %s failed: %s", spec.swept, value,
                                inst_seed, method, exc)
                    row["error"] = f"{type(exc).__name__}: {exc}"
                if not timings:
                    row.pop("time_discover_s", None)
                    row.pop("time_complete_s", None)
                rows.append(row)
    rows.sort(key=lambda r: (r["_pos"], r["seed"], METHODS.index(r["method"])))
    for r in rows:
        del r["_pos"]
    return rows


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_sweep_csv(path, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SWEEP_HEADER)
        for row in rows:
            writer.writerow([_fmt(row.get(col)) for col in SWEEP_HEADER])


def median_by(rows, key: str, value_col: str, method: Optional[str] = None) -> dict:
    """Median of ``value_col`` per distinct ``key`` (rows with errors count as missing)."""
    groups = {}
    for row in rows:
        if method is not None and row["method"] != method:
            continue
        v = row.get(value_col)
        if v is None:
            continue
        groups.setdefault(row[key], []).append(v)
    return {k: float(np.median(v)) for k, v in groups.items()}
