"""Low-rank completion of a single observed matrix by alternating least squares."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import EmptyObservation, RankTooLarge
from .observed import ObservedMatrix, fill_zeros

# ridge weight relative to the mean squared observed value
RIDGE_SCALE = 1e-6
# residual below this counts as an exact fit
_EXACT_FIT = 1e-13
# allowed rise of the relative observed-entry residual between sweeps
_MONOTONE_SLACK = 1e-10


@dataclass(frozen=True)
class CompletionConfig:
    rank: Union[int, str] = "auto"
    max_rank: int = 50
    tol: float = 1e-5
    max_iter: int = 500

    def __post_init__(self):
        if self.rank != "auto" and (not isinstance(self.rank, (int, np.integer)) or self.rank < 1):
            raise ValueError("rank must be a positive integer or 'auto'")
        if self.max_rank < 1:
            raise ValueError("max_rank must be at least 1")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


@dataclass(frozen=True)
class CompletionOutput:
    estimate: np.ndarray
    used_rank: int
    iterations: int
    final_residual: float
    residual_history: tuple = ()
    # rows / columns without a single observed entry; their estimates are unsupported
    unobserved_rows: tuple = ()
    unobserved_cols: tuple = ()
    metadata: dict = field(default_factory=dict)

    def summary(self) -> dict:
        return {"used_rank": self.used_rank, "iterations": self.iterations,
                "final_residual": self.final_residual}


def estimate_rank(M_obs: ObservedMatrix, max_rank: int = 50) -> int:
    """Largest-ratio gap in the spectrum of the density-rescaled zero-fill.

    Looks at the top ``max_rank + 1`` singular values of fill_zeros(M)/density
    and returns the i (1-based, at most ``max_rank``) maximizing s_i / s_{i+1}.
    """
    if M_obs.n_observed == 0:
        raise EmptyObservation("cannot estimate rank without observations")
    dense = fill_zeros(M_obs) / M_obs.density
    s = np.linalg.svd(dense, compute_uv=False)[: max_rank + 1]
    if s.size < 2 or s[0] == 0:
        return 1
    floor = np.finfo(np.float64).eps * s[0]
    ratios = s[:-1] / np.maximum(s[1:], floor)
    ratios = ratios[:max_rank]
    return int(np.argmax(ratios)) + 1


def _solve_factor(W, MW, F, ridge):
    """Row-wise ridge least squares: argmin_x sum_j W_ij (M_ij - x . F_j)^2 + ridge |x|^2."""
    r = F.shape[1]
    iu, ju = np.triu_indices(r)
    gram = W @ (F[:, iu] * F[:, ju])  # n x r(r+1)/2, one GEMM for every row's Gram matrix
    G = np.empty((W.shape[0], r, r))
    G[:, iu, ju] = gram
    G[:, ju, iu] = gram
    G[:, np.arange(r), np.arange(r)] += ridge
    rhs = MW @ F
    return np.linalg.solve(G, rhs[:, :, None])[:, :, 0]


def _balance(X, Y):
    """Rescale factors so X and Y carry equal singular values (X @ Y.T unchanged).

    Without this the gauge drifts and the ridge term damps directions whose
    factor norms became lopsided, which stalls convergence.
    """
    qx, rx = np.linalg.qr(X)
    qy, ry = np.linalg.qr(Y)
    a, s, bt = np.linalg.svd(rx @ ry.T)
    root = np.sqrt(s)
    return (qx @ a) * root, (qy @ bt.T) * root


def complete(M_obs: ObservedMatrix, cfg: CompletionConfig = CompletionConfig(),
             seed: int = 0) -> CompletionOutput:
    """Complete ``M_obs`` with a rank-r factorization X @ Y.T fit on Omega.

    Each sweep solves for X with Y fixed, then for Y with X fixed (ridge
    damped), then rebalances the two factors. Stops when the relative change of the Omega-residual drops
    below ``cfg.tol``, when the residual would rise (ridge floor reached; the
    last accepted sweep is kept), or after ``cfg.max_iter`` sweeps.
    """
    n, m = M_obs.shape
    if M_obs.n_observed == 0:
        raise EmptyObservation("cannot complete a matrix with no observations")
    rank = estimate_rank(M_obs, cfg.max_rank) if cfg.rank == "auto" else int(cfg.rank)
    if rank > min(n, m):
        raise RankTooLarge(f"rank {rank} exceeds min({n}, {m})")

    W = M_obs.mask().astype(np.float64)
    MW = fill_zeros(M_obs)
    norm_obs = float(np.linalg.norm(M_obs.values))
    ridge = RIDGE_SCALE * float(np.mean(M_obs.values ** 2))
    if ridge == 0.0:
        ridge = RIDGE_SCALE

    empty_rows = np.nonzero(W.sum(axis=1) == 0)[0]
    empty_cols = np.nonzero(W.sum(axis=0) == 0)[0]

    rng = np.random.default_rng(seed)
    Y = rng.standard_normal((m, rank))
    Y0 = Y.copy()

    def residual(X, Y):
        if norm_obs == 0.0:
            return 0.0
        R = (X @ Y.T - MW) * W
        return float(np.linalg.norm(R)) / norm_obs

    history = []
    iterations = 0
    X = None
    for iterations in range(1, cfg.max_iter + 1):
        X_new = _solve_factor(W, MW, Y, ridge)
        Y_new = _solve_factor(W.T, MW.T, X_new, ridge)
        # columns with no data keep their initialization
        Y_new[empty_cols] = Y0[empty_cols]
        X_new, Y_new = _balance(X_new, Y_new)
        res = residual(X_new, Y_new)
        if history and res > history[-1] + _MONOTONE_SLACK:
            # ALS decreases the ridge-penalized objective; once the raw misfit
            # starts rising the fit has reached the ridge floor
            iterations -= 1
            break
        X, Y = X_new, Y_new
        history.append(res)
        if res <= _EXACT_FIT:
            break
        if len(history) > 1:
            prev = history[-2]
            if abs(prev - res) <= cfg.tol * prev:
                break
    estimate = X @ Y.T
    return CompletionOutput(estimate=estimate, used_rank=rank, iterations=iterations,
                            final_residual=history[-1], residual_history=tuple(history),
                            unobserved_rows=tuple(int(i) for i in empty_rows),
                            unobserved_cols=tuple(int(j) for j in empty_cols))
