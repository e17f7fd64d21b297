"""Synthetic benchmark: Gaussian low-rank background with planted low-rank blocks."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidRank, OverlapError, UnachievablePi
from .linalg import low_rank_gaussian, spectral_norm
from .observed import SubmatrixDescriptor


@dataclass(frozen=True)
class PlantSpec:
    rows: int
    cols: int
    rank: int
    pi_target: float = 1.2
    placement: Optional[SubmatrixDescriptor] = None  # None: random disjoint placement

    def __post_init__(self):
        if self.rank < 1 or self.rank > min(self.rows, self.cols):
            raise InvalidRank(f"plant rank {self.rank} exceeds min({self.rows}, {self.cols})")
        if not self.pi_target > 0:
            raise UnachievablePi(f"pi_target must be positive, got {self.pi_target}")
        if self.placement is not None and self.placement.shape != (self.rows, self.cols):
            raise ValueError("placement shape does not match rows x cols")


@dataclass(frozen=True)
class SynthInstance:
    matrix: np.ndarray
    truth: tuple
    background_rank: int
    achieved_pi: tuple

    def complement_region(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        """Rows/cols outside plants 0..k: the host in which plant k's pi is defined."""
        n, m = self.matrix.shape
        used_r = np.concatenate([d.row_index for d in self.truth[: k + 1]])
        used_c = np.concatenate([d.col_index for d in self.truth[: k + 1]])
        return np.setdiff1d(np.arange(n), used_r), np.setdiff1d(np.arange(m), used_c)


def _place(spec, free_rows, free_cols, rng, shape):
    if spec.placement is not None:
        d = spec.placement
        d.check(shape)
        if not (free_rows[d.row_index].all() and free_cols[d.col_index].all()):
            raise OverlapError("explicit placement overlaps an earlier plant")
        return d
    avail_r = np.nonzero(free_rows)[0]
    avail_c = np.nonzero(free_cols)[0]
    if avail_r.size < spec.rows or avail_c.size < spec.cols:
        raise OverlapError("not enough free rows/columns to place plant")
    return SubmatrixDescriptor(rng.choice(avail_r, spec.rows, replace=False),
                               rng.choice(avail_c, spec.cols, replace=False))


def generate(n: int, m: int, r: int, plants: Sequence[PlantSpec] = (),
             seed: int = 0) -> SynthInstance:
    """Background ``low_rank_gaussian(n, m, r, seed)`` with planted blocks.

    Each plant overwrites its cells with an independent rank-l Gaussian block,
    scaled so ||S_k||^2 / ||T_k||^2 = pi_target. T_k is the matrix restricted
    to the rows and columns outside plants 0..k, i.e. the complement seen when
    plants are peeled off in order. For a single plant this is the usual
    T = M(complement rows, complement cols). Scaling runs from the last plant
    to the first, so each T_k only contains blocks that are already final.
    """
    M = low_rank_gaussian(n, m, r, seed)
    if not plants:
        return SynthInstance(M, (), r, ())
    place_rng = np.random.default_rng((seed, 0))
    free_rows = np.ones(n, dtype=bool)
    free_cols = np.ones(m, dtype=bool)
    truth = []
    for k, spec in enumerate(plants):
        d = _place(spec, free_rows, free_cols, place_rng, (n, m))
        free_rows[d.row_index] = False
        free_cols[d.col_index] = False
        truth.append(d)
        M[np.ix_(d.row_index, d.col_index)] = low_rank_gaussian(
            spec.rows, spec.cols, spec.rank, (seed, k + 1))

    inst = SynthInstance(M, tuple(truth), r, ())
    achieved = [0.0] * len(plants)
    for k in reversed(range(len(plants))):
        d = truth[k]
        rows_t, cols_t = inst.complement_region(k)
        if rows_t.size == 0 or cols_t.size == 0:
            raise UnachievablePi("plants leave no complement to compare against")
        t_norm = spectral_norm(M[np.ix_(rows_t, cols_t)])
        s_norm = spectral_norm(M[np.ix_(d.row_index, d.col_index)])
        if t_norm == 0.0 or s_norm == 0.0:
            raise UnachievablePi("complement or plant has zero norm")
        M[np.ix_(d.row_index, d.col_index)] *= np.sqrt(plants[k].pi_target) * t_norm / s_norm
        achieved[k] = spectral_norm(M[np.ix_(d.row_index, d.col_index)]) ** 2 / t_norm ** 2
    return SynthInstance(M, tuple(truth), r, tuple(achieved))
