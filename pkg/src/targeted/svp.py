"""Singular Vector Projection (SVP): unsupervised discovery of low-rank submatrices.

Rows are normalized and projected onto the leading right singular vectors of
the matrix; the projection magnitudes are split into two groups by an exact
1-D 2-means, and the high group is taken as the submatrix rows. The same is
done on the transpose for the columns.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (DegeneratePartition, DimensionMismatch, EmptyComplement,
                     EmptyObservation, EmptySplit, NoSubmatrixFound)
from .incsvd import IncSvdConfig, estimate_singular_vectors
from .linalg import (SingularBasis, as_dense, normalize_rows, numerical_rank,
                     spectral_norm, truncated_svd)
from .observed import ObservedMatrix, SubmatrixDescriptor, fill_zeros, restrict

ESTIMATORS = ("auto", "exact", "incremental", "zerofill")
# T's singular vectors examined for gamma; beyond the numerical rank they are noise
GAMMA_MAX_VECTORS = 10


@dataclass(frozen=True)
class SvpConfig:
    n_vectors: int = 3
    delta_threshold: float = 0.2
    max_submatrices: Optional[int] = None
    estimator: str = "auto"
    incremental: IncSvdConfig = IncSvdConfig()

    def __post_init__(self):
        if self.n_vectors < 1:
            raise ValueError("n_vectors must be at least 1")
        if self.delta_threshold < 0:
            raise ValueError("delta_threshold must be non-negative")
        if self.max_submatrices is not None and self.max_submatrices < 0:
            raise ValueError("max_submatrices must be non-negative")
        if self.estimator not in ESTIMATORS:
            raise ValueError(f"estimator must be one of {ESTIMATORS}")


@dataclass(frozen=True)
class SeparationReport:
    """Measured separation of a candidate split.

    ``pi`` is ||S||^2 / ||T||^2 (spectral norms), ``gamma`` the largest
    |<s_1, t_j>| over T's leading right singular vectors, ``delta`` the
    row-side projection gap and ``delta_cols`` the column-side one.
    """

    pi: float
    gamma: float
    delta: float
    delta_cols: Optional[float] = None

    def csv_line(self) -> str:
        cols = "" if self.delta_cols is None else repr(self.delta_cols)
        return f"{self.pi!r},{self.gamma!r},{self.delta!r},{cols}"


def project(A, basis: SingularBasis) -> np.ndarray:
    """Projection magnitude of every normalized row onto the basis' right vectors.

    With k vectors, p_i is the L2 norm of (|<v_d, N(A_i)>|)_d divided by
    sqrt(k); for k = 1 this is |<v_1, N(A_i)>|. Zero rows map to 0.
    """
    A = as_dense(A)
    if basis.right.shape[0] != A.shape[1]:
        raise DimensionMismatch(
            f"basis vectors have length {basis.right.shape[0]}, matrix has {A.shape[1]} columns")
    P = normalize_rows(A) @ basis.right
    p = np.linalg.norm(P, axis=1) / math.sqrt(basis.k)
    # Cauchy-Schwarz bound; clip rounding noise
    return np.clip(p, 0.0, 1.0)


def _two_means_split(sorted_p):
    """Index k minimizing WCSS of sorted_p[:k] | sorted_p[k:] (never splitting ties)."""
    x = sorted_p - sorted_p.mean()
    n = x.size
    c1 = np.cumsum(x)[:-1]
    c2 = np.cumsum(x * x)[:-1]
    k = np.arange(1, n)
    tot1, tot2 = x.sum(), (x * x).sum()
    wcss = (c2 - c1 ** 2 / k) + ((tot2 - c2) - (tot1 - c1) ** 2 / (n - k))
    valid = sorted_p[1:] > sorted_p[:-1]
    wcss = np.where(valid, wcss, np.inf)
    best = wcss.min()
    # among equal-cost splits prefer the smaller high cluster (largest k)
    ties = np.nonzero(wcss <= best + 1e-12 * max(abs(best), 1e-300))[0]
    return int(k[ties[-1]])


def partition_projections(p) -> tuple[np.ndarray, np.ndarray]:
    """Optimal 1-D 2-means of the projections; returns (high, low) index arrays."""
    p = np.asarray(p, dtype=np.float64).ravel()
    if p.size == 0:
        raise ValueError("empty projection vector")
    if p.size < 2 or p.max() - p.min() <= 1e-12:
        raise DegeneratePartition("all projections are equal")
    order = np.argsort(p, kind="stable")
    k = _two_means_split(p[order])
    return np.sort(order[k:]), np.sort(order[:k])


def delta_gap(M, row_split, basis: SingularBasis) -> float:
    """Mean |<v_1, N(M_i)>| over the S rows minus the mean over the T rows."""
    M = as_dense(M)
    rs = np.asarray(row_split[0], dtype=np.int64)
    rt = np.asarray(row_split[1], dtype=np.int64)
    if rs.size == 0 or rt.size == 0:
        raise EmptySplit("both sides of the row split must be non-empty")
    if (rs.size + rt.size != M.shape[0]
            or not np.array_equal(np.sort(np.concatenate([rs, rt])), np.arange(M.shape[0]))):
        raise ValueError("row split must partition the rows")
    if basis.right.shape[0] != M.shape[1]:
        raise DimensionMismatch("basis does not match matrix columns")
    proj = np.abs(normalize_rows(M) @ basis.right[:, 0])
    return float(proj[rs].mean() - proj[rt].mean())


def _top_right_vectors(A, q):
    if not np.any(A):
        return None, np.zeros(0)
    b = truncated_svd(A, min(q, *A.shape))
    return b.right, b.values


def _gamma(S_rows, T_rows):
    """max_j |<s_1, t_j>| between the row spaces of two row blocks sharing columns."""
    s_vecs, _ = _top_right_vectors(S_rows, 1)
    t_vecs, t_vals = _top_right_vectors(T_rows, GAMMA_MAX_VECTORS + 1)
    if s_vecs is None or t_vecs is None:
        return 0.0
    q = min(max(numerical_rank(t_vals), 1), GAMMA_MAX_VECTORS)
    return float(np.clip(np.max(np.abs(t_vecs[:, :q].T @ s_vecs[:, 0])), 0.0, 1.0))


def separation_params(M, d: SubmatrixDescriptor) -> SeparationReport:
    """pi, gamma and the projection gaps of the split induced by ``d``.

    T is M(complement rows, complement cols). If ``d`` spans every column
    (or every row), the one-sided split is used instead: T = M(complement
    rows, :) (resp. M(:, complement cols)). gamma compares the row spaces of
    M(R_s, :) and M(R_t, :), which live in the same column space.
    """
    M = as_dense(M)
    rows_t, cols_t = d.complement(M.shape)
    if rows_t.size == 0 and cols_t.size == 0:
        raise EmptyComplement("descriptor covers the whole matrix")
    rows_s, cols_s = d.row_index, d.col_index
    S = M[np.ix_(rows_s, cols_s)]
    if rows_t.size and cols_t.size:
        T = M[np.ix_(rows_t, cols_t)]
    elif rows_t.size:
        T = M[rows_t, :]
    else:
        T = M[:, cols_t]
    s_norm = spectral_norm(S)
    t_norm = spectral_norm(T)
    pi = s_norm ** 2 / t_norm ** 2 if t_norm > 0 else math.inf

    if rows_t.size:
        gamma = _gamma(M[rows_s, :], M[rows_t, :])
    else:
        gamma = _gamma(M[:, cols_s].T, M[:, cols_t].T)

    if not np.any(M):
        return SeparationReport(pi, gamma, 0.0, 0.0 if cols_t.size else None)
    host = truncated_svd(M, 1)
    delta = delta_gap(M, (rows_s, rows_t), host) if rows_t.size else 0.0
    delta_cols = (delta_gap(M.T, (cols_s, cols_t), host.transpose())
                  if cols_t.size else None)
    return SeparationReport(pi, gamma, delta, delta_cols)


def estimate_basis(M_obs: ObservedMatrix, cfg: SvpConfig, seed: int = 0) -> SingularBasis:
    """Leading singular vectors of ``M_obs`` using the configured estimator."""
    if M_obs.n_observed == 0:
        raise EmptyObservation("no observed entries")
    k = min(cfg.n_vectors, *M_obs.shape)
    estimator = cfg.estimator
    if estimator == "auto":
        estimator = "exact" if M_obs.fully_observed else "incremental"
    if estimator == "exact":
        if not M_obs.fully_observed:
            raise ValueError("the exact estimator needs a fully observed matrix; "
                             "use 'incremental' or 'zerofill'")
        return truncated_svd(fill_zeros(M_obs), k)
    if estimator == "zerofill":
        return truncated_svd(fill_zeros(M_obs), k)
    inc = IncSvdConfig(k=k, learning_rate=cfg.incremental.learning_rate,
                       regularization=cfg.incremental.regularization,
                       max_epochs=cfg.incremental.max_epochs,
                       convergence_tol=cfg.incremental.convergence_tol)
    return estimate_singular_vectors(M_obs, inc, seed)


def svp_discover(M_obs: ObservedMatrix, cfg: SvpConfig = SvpConfig(),
                 seed: int = 0) -> tuple[SubmatrixDescriptor, SeparationReport]:
    """One SVP pass: candidate submatrix and the separation it implies.

    Missing entries are treated as zeros when rows are normalized and
    projected. Raises ``NoSubmatrixFound`` when the projections carry no
    split (all equal).
    """
    basis = estimate_basis(M_obs, cfg, seed)
    filled = fill_zeros(M_obs)
    try:
        rows_s, rows_t = partition_projections(project(filled, basis))
        cols_s, cols_t = partition_projections(project(filled.T, basis.transpose()))
    except DegeneratePartition as exc:
        raise NoSubmatrixFound(str(exc)) from exc
    d = SubmatrixDescriptor(rows_s, cols_s)

    S = filled[np.ix_(rows_s, cols_s)]
    T = filled[np.ix_(rows_t, cols_t)]
    t_norm = spectral_norm(T)
    pi = spectral_norm(S) ** 2 / t_norm ** 2 if t_norm > 0 else math.inf
    gamma = _gamma(filled[rows_s, :], filled[rows_t, :])
    delta = delta_gap(filled, (rows_s, rows_t), basis)
    delta_cols = delta_gap(filled.T, (cols_s, cols_t), basis.transpose())
    return d, SeparationReport(pi, gamma, delta, delta_cols)


def discover_all(M_obs: ObservedMatrix, cfg: SvpConfig = SvpConfig(), seed: int = 0,
                 return_reports: bool = False):
    """Repeated SVP on the complement of each accepted submatrix.

    A candidate is accepted while both its row and column projection gaps
    exceed ``cfg.delta_threshold``. Returned descriptors use host indices and
    are pairwise disjoint in rows and in columns.
    """
    found, reports = [], []
    region = SubmatrixDescriptor.full(M_obs.shape)
    sub = M_obs
    while cfg.max_submatrices is None or len(found) < cfg.max_submatrices:
        if min(sub.shape) < 2 or sub.n_observed == 0:
            break
        try:
            local, report = svp_discover(sub, cfg, seed + len(found))
        except NoSubmatrixFound:
            break
        if not (report.delta > cfg.delta_threshold
                and report.delta_cols > cfg.delta_threshold):
            break
        found.append(region.lift(local.row_index, local.col_index))
        reports.append(report)
        rows_t, cols_t = local.complement(sub.shape)
        region = region.lift(rows_t, cols_t)
        sub = restrict(M_obs, region)
    return (found, reports) if return_reports else found
