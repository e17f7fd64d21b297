"""Dense-matrix primitives: truncated SVD, norms, row normalization, CSV I/O.

Dense matrices are plain 2-D ``float64`` numpy arrays throughout the package.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidRank, NoConvergence, ZeroMatrix

# Singular values at or below RANK_RTOL * sigma_1 count as zero.
RANK_RTOL = 1e-8


def as_dense(A) -> np.ndarray:
    """Validate ``A`` as a finite 2-D float matrix and return it as float64."""
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix contains NaN or Inf entries")
    return A


@dataclass(frozen=True)
class SingularBasis:
    """Top-k singular triples, ``A ~= left @ diag(values) @ right.T``.

    ``left`` is ``n_rows x k`` and ``right`` is ``n_cols x k``; columns are the
    singular vectors. ``converged`` is False when the producing routine hit its
    iteration budget, and ``info`` carries routine-specific diagnostics.
    """

    left: np.ndarray
    values: np.ndarray
    right: np.ndarray
    converged: bool = True
    info: dict | None = None

    @property
    def k(self) -> int:
        return int(self.values.shape[0])

    def transpose(self) -> "SingularBasis":
        """Basis of the transposed matrix (left and right swapped)."""
        return SingularBasis(self.right, self.values, self.left, self.converged, self.info)


def _orient(U, V):
    # make the largest-magnitude entry of each right vector positive
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return U * signs, V * signs


def truncated_svd(A, k: int, tol: float = 1e-8, max_iter: int = 1000,
                  oversample: int = 10) -> SingularBasis:
    """Top-``k`` singular triples by block subspace iteration.

    Each sweep multiplies a block of ``k + oversample`` vectors through ``A``
    and ``A.T``, re-orthonormalizes it (QR), and extracts Ritz values from the
    small projected matrix. Iteration stops once every returned triple satisfies
    ``||A v - s u|| <= tol * s_1``.

    Raises ``ZeroMatrix`` for an all-zero input and ``NoConvergence`` (carrying
    the best basis and its residual) if ``max_iter`` sweeps are not enough.
    """
    A = as_dense(A)
    n, m = A.shape
    if not 1 <= k <= min(n, m):
        raise InvalidRank(f"k={k} outside [1, {min(n, m)}]")
    if not np.any(A):
        raise ZeroMatrix("truncated_svd of an all-zero matrix")

    p = min(k + oversample, n, m)
    # fixed start block keeps results reproducible across calls
    start = np.random.default_rng(0x5EED).standard_normal((m, p))
    V, _ = np.linalg.qr(start)
    best = None
    for _ in range(max_iter):
        Q, _ = np.linalg.qr(A @ V)
        B = Q.T @ A
        Ub, s, Vbt = np.linalg.svd(B, full_matrices=False)
        U = Q @ Ub
        V = Vbt.T
        resid = np.linalg.norm(A @ V[:, :k] - U[:, :k] * s[:k], axis=0)
        worst = float(resid.max())
        U_k, V_k = _orient(U[:, :k], V[:, :k])
        best = SingularBasis(U_k, s[:k].copy(), V_k, converged=False,
                             info={"residual": worst})
        if worst <= tol * s[0]:
            return SingularBasis(U_k, s[:k].copy(), V_k, converged=True,
                                 info={"residual": worst})
    raise NoConvergence(f"truncated_svd did not reach tol={tol} in {max_iter} sweeps",
                        best=best, residual=best.info["residual"])


def spectral_norm(A) -> float:
    """Largest singular value; 0 for the zero matrix."""
    A = as_dense(A)
    if A.size == 0:
        raise ValueError("spectral norm of an empty matrix")
    if not np.any(A):
        return 0.0
    return float(truncated_svd(A, 1).values[0])


def frobenius_norm(A) -> float:
    return float(np.sqrt(np.sum(np.square(as_dense(A)))))


def normalize_rows(A) -> np.ndarray:
    """Scale each non-zero row to unit L2 norm; zero rows stay zero."""
    A = as_dense(A)
    # divide by the largest magnitude first so tiny rows do not underflow
    peak = np.max(np.abs(A), axis=1) if A.shape[1] else np.zeros(A.shape[0])
    out = np.zeros_like(A)
    nz = peak > 0
    scaled = A[nz] / peak[nz, None]
    out[nz] = scaled / np.linalg.norm(scaled, axis=1)[:, None]
    return out


def numerical_rank(values, rtol: float = RANK_RTOL) -> int:
    """Count singular values above ``rtol`` times the largest one."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0 or values[0] <= 0:
        return 0
    return int(np.sum(values > rtol * values[0]))


def low_rank_gaussian(n: int, m: int, r: int, seed: int) -> np.ndarray:
    """Rank-``r`` matrix ``A @ B.T`` with i.i.d. standard normal factors."""
    if r < 0 or r > min(n, m):
        raise InvalidRank(f"rank {r} exceeds min({n}, {m})")
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, r))
    B = rng.standard_normal((m, r))
    return A @ B.T


def write_dense_csv(path, A) -> None:
    """One row per line, comma separated, no header, round-trip precision."""
    np.savetxt(path, as_dense(A), delimiter=",", fmt="%.17g")


def read_dense_csv(path) -> np.ndarray:
    return as_dense(np.loadtxt(path, delimiter=",", ndmin=2))
