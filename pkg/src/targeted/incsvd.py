"""Funk-style incremental SVD: leading singular vectors from observed entries only.

Features are fit one at a time by stochastic gradient descent on the
residual left by the previous features, then the factor matrices are
orthonormalized into a :class:`SingularBasis`.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numba
import numpy as np

from .errors import ConvergenceWarning, EmptyObservation, InvalidRank
from .linalg import SingularBasis, _orient
from .observed import ObservedMatrix

log = logging.getLogger(__name__)

# per-epoch slack allowed on the training RMSE before an epoch is rejected
MONOTONE_SLACK = 1e-9
_MIN_LEARNING_RATE = 1e-10
# residual RMS (unit-RMS data) below which a feature has nothing left to fit
_NOTHING_LEFT = 1e-12


@dataclass(frozen=True)
class IncSvdConfig:
    k: int = 3
    learning_rate: float = 0.01
    regularization: float = 0.02
    max_epochs: int = 200
    convergence_tol: float = 1e-4

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.regularization < 0:
            raise ValueError("regularization must be non-negative")


@numba.njit(cache=True)
def _sgd_epoch(rows, cols, resid, order, u, v, lr, reg):
    for t in range(order.shape[0]):
        e = order[t]
        i = rows[e]
        j = cols[e]
        err = resid[e] - u[i] * v[j]
        ui = u[i]
        u[i] += lr * (err * v[j] - reg * ui)
        v[j] += lr * (err * ui - reg * v[j])


def _rmse(rows, cols, resid, u, v):
    return float(np.sqrt(np.mean((resid - u[rows] * v[cols]) ** 2)))


def _fit_feature(rows, cols, resid, n, m, cfg, rng):
    """One rank-1 feature; returns (u, v, rmse history, converged)."""
    u = 0.1 + 1e-3 * rng.standard_normal(n)
    v = 0.1 + 1e-3 * rng.standard_normal(m)
    order = rng.permutation(resid.shape[0])
    baseline = float(np.sqrt(np.mean(resid ** 2)))
    if baseline <= _NOTHING_LEFT:
        return np.zeros(n), np.zeros(m), [baseline], True
    # until the fit beats u = v = 0 it is still on the plateau around the start
    plateau = baseline * (1.0 - cfg.convergence_tol)
    history = [_rmse(rows, cols, resid, u, v)]
    lr = cfg.learning_rate
    converged = False
    epochs = 0
    last_gain = None
    while epochs < cfg.max_epochs:
        u_try, v_try = u.copy(), v.copy()
        _sgd_epoch(rows, cols, resid, order, u_try, v_try, lr, cfg.regularization)
        current = _rmse(rows, cols, resid, u_try, v_try)
        if not np.isfinite(current) or current > history[-1] + MONOTONE_SLACK:
            # overshoot: discard the epoch and retry with a smaller step
            lr *= 0.5
            if lr < _MIN_LEARNING_RATE:
                converged = True
                break
            continue
        epochs += 1
        u, v = u_try, v_try
        prev = history[-1]
        history.append(current)
        gain = prev - current
        if prev == 0:
            converged = True
            break
        # Zero-mean data barely correlates with the constant init, so early
        # gains are tiny and then grow; only a small, shrinking gain below
        # the plateau counts as convergence.
        if (gain / prev < cfg.convergence_tol and current < plateau
                and last_gain is not None and gain <= last_gain):
            converged = True
            break
        last_gain = gain
    return u, v, history, converged


def estimate_singular_vectors(M_obs: ObservedMatrix, cfg: IncSvdConfig = IncSvdConfig(),
                              seed: int = 0) -> SingularBasis:
    """Estimate the top ``cfg.k`` singular triples of a partially observed matrix.

    Values are rescaled to unit RMS before training so the default step size
    works regardless of the data's magnitude; singular values are reported
    in the original scale. ``info["rmse_history"]`` holds the per-feature
    training RMSE after every accepted epoch (non-increasing by construction).
    """
    n, m = M_obs.shape
    if M_obs.n_observed == 0:
        raise EmptyObservation("incremental SVD needs at least one observed entry")
    if cfg.k > min(n, m):
        raise InvalidRank(f"k={cfg.k} exceeds min({n}, {m})")
    if M_obs.n_observed < cfg.k * (n + m):
        warnings.warn(f"only {M_obs.n_observed} observed entries for {cfg.k} features "
                      f"of a {n}x{m} matrix", ConvergenceWarning, stacklevel=2)

    scale = float(np.sqrt(np.mean(M_obs.values ** 2)))
    if scale == 0.0:
        scale = 1.0
    rows = np.ascontiguousarray(M_obs.rows)
    cols = np.ascontiguousarray(M_obs.cols)
    resid = M_obs.values / scale

    rng = np.random.default_rng(seed)
    U = np.empty((n, cfg.k))
    V = np.empty((m, cfg.k))
    histories = []
    all_converged = True
    for f in range(cfg.k):
        u, v, hist, ok = _fit_feature(rows, cols, resid, n, m, cfg, rng)
        U[:, f], V[:, f] = u, v
        histories.append(tuple(hist))
        all_converged &= ok
        resid = resid - u[rows] * v[cols]
        log.debug("feature %d: %d epochs, rmse %.4g", f, len(hist) - 1, hist[-1])
    if not all_converged:
        warnings.warn(f"incremental SVD hit max_epochs={cfg.max_epochs}",
                      ConvergenceWarning, stacklevel=2)

    # orthonormal basis for the fitted factorization U @ V.T
    Qu, Ru = np.linalg.qr(U)
    Qv, Rv = np.linalg.qr(V)
    a, s, bt = np.linalg.svd(Ru @ Rv.T)
    left, right = _orient(Qu @ a, Qv @ bt.T)
    return SingularBasis(left, s * scale, right, converged=all_converged,
                         info={"rmse_history": tuple(histories)})
