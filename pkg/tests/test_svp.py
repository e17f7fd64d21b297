import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import brute_two_means, rank1_two_block, wcss
from targeted.errors import DegeneratePartition, EmptyComplement, EmptySplit
from targeted.evaluation import f_score
from targeted.linalg import SingularBasis, low_rank_gaussian, truncated_svd
from targeted.observed import ObservedMatrix, SubmatrixDescriptor, mask_uniform
from targeted.svp import (SvpConfig, delta_gap, discover_all, partition_projections,
                          project, separation_params, svp_discover)
from targeted.synthgen import PlantSpec, generate


def _basis(right):
    right = np.asarray(right, float)
    if right.ndim == 1:
        right = right[:, None]
    k = right.shape[1]
    return SingularBasis(np.zeros((1, k)), np.ones(k), right)


def block_toy(seed=0, sigma=2.0, tau=1.0):
    """S = a x^T on rows 0-4 / cols 0-4, T = b y^T on rows 5-9 / cols 5-9."""
    rng = np.random.default_rng(seed)
    M = np.zeros((10, 10))
    for rows, cols, scale in ((slice(0, 5), slice(0, 5), sigma), (slice(5, 10), slice(5, 10), tau)):
        a, x = rng.standard_normal(5), rng.standard_normal(5)
        blk = np.outer(a, x)
        M[rows, cols] = scale * blk / np.linalg.norm(blk, 2)
    return M


# -- project ----------------------------------------------------------------

def test_project_parallel_rows_give_one():
    rng = np.random.default_rng(0)
    M = np.outer(rng.standard_normal(6), rng.standard_normal(4))
    assert np.allclose(project(M, truncated_svd(M, 1)), 1.0)


def test_project_orthogonal_row_gives_zero():
    p = project(np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]]), _basis([[1, 0], [0, 1], [0, 0]]))
    assert p[0] == 0.0 and p[1] == pytest.approx(1 / math.sqrt(2))


def test_project_two_block_rank1_two_values():
    rng = np.random.default_rng(1)
    x = np.zeros(8)
    x[:4] = rng.standard_normal(4)
    y = np.zeros(8)
    y[4:] = rng.standard_normal(4)
    M = np.vstack([np.outer(rng.standard_normal(5), x), 0.5 * np.outer(rng.standard_normal(5), y)])
    basis = truncated_svd(M, 1)
    v1 = basis.right[:, 0]
    p = project(M, basis)
    assert np.allclose(p[:5], abs(v1 @ x) / np.linalg.norm(x), atol=1e-12)
    assert np.allclose(p[5:], abs(v1 @ y) / np.linalg.norm(y), atol=1e-12)


@given(st.integers(0, 10 ** 6), st.floats(0.0, 1.0), st.floats(0.2, 5.0))
def test_rank1_dichotomy(seed, gamma, sigma):
    M, _, _ = rank1_two_block(np.random.default_rng(seed), 4, 6, 7, sigma, 1.0, gamma)
    p = project(M, truncated_svd(M, 1))
    distinct = np.unique(np.round(p / 1e-9)) * 1e-9
    assert len(distinct) <= 2


@given(st.integers(0, 10 ** 6), st.integers(1, 4))
def test_project_bounded(seed, k):
    M = np.random.default_rng(seed).standard_normal((9, 6))
    p = project(M, truncated_svd(M, k))
    assert np.all((p >= 0) & (p <= 1))


# -- partition --------------------------------------------------------------

def test_partition_examples():
    high, low = partition_projections([0.9, 0.9, 0.1, 0.1])
    assert high.tolist() == [0, 1] and low.tolist() == [2, 3]
    with pytest.raises(DegeneratePartition):
        partition_projections([0.5, 0.5, 0.5])
    high, _ = partition_projections([0.95, 0.9, 0.88, 0.3, 0.25, 0.2, 0.15])
    assert high.tolist() == [0, 1, 2]


@given(st.lists(st.floats(0, 1, allow_nan=False), min_size=2, max_size=10))
def test_partition_is_global_two_means_optimum(p):
    if max(p) - min(p) <= 1e-12:
        with pytest.raises(DegeneratePartition):
            partition_projections(p)
        return
    high, low = partition_projections(p)
    assert sorted(high.tolist() + low.tolist()) == list(range(len(p)))
    assert min(p[i] for i in high) > max(p[i] for i in low)
    cost, _ = brute_two_means(p)
    assert wcss(p, high) <= cost + 1e-9


# -- delta ------------------------------------------------------------------

def test_delta_gap_one_for_aligned_and_orthogonal():
    M = np.array([[2.0, 0.0], [3.0, 0.0], [0.0, 1.0], [0.0, -4.0]])
    assert delta_gap(M, ([0, 1], [2, 3]), _basis([1.0, 0.0])) == pytest.approx(1.0)


def test_delta_gap_identical_halves_is_zero():
    A = np.random.default_rng(2).standard_normal((5, 6))
    M = np.vstack([A, A])
    assert delta_gap(M, (range(5), range(5, 10)), truncated_svd(M, 1)) == pytest.approx(0.0, abs=1e-12)


def _v1_closed_form(sigma, tau, gamma):
    """|<v1, x>| and |<v1, y>| for M^T M = s^2 x x^T + t^2 y y^T, <x, y> = gamma."""
    s2, t2 = sigma ** 2, tau ** 2
    lam = 0.5 * (s2 + t2 + math.sqrt((s2 - t2) ** 2 + 4 * s2 * t2 * gamma ** 2))
    # v = alpha x + beta y with s2 (alpha + beta gamma) = lam alpha
    if gamma == 0:
        alpha, beta = (1.0, 0.0) if s2 >= t2 else (0.0, 1.0)
    else:
        alpha, beta = 1.0, (lam - s2) / (s2 * gamma)
    norm = math.sqrt(alpha ** 2 + beta ** 2 + 2 * alpha * beta * gamma)
    alpha, beta = alpha / norm, beta / norm
    return abs(alpha + beta * gamma), abs(alpha * gamma + beta)


@pytest.mark.parametrize("seed", range(10))
def test_delta_gap_matches_rank1_closed_form(seed):
    rng = np.random.default_rng(seed)
    sigma, gamma = rng.uniform(1.1, 3.0), rng.uniform(0.0, 0.9)
    M, _, _ = rank1_two_block(rng, 5, 5, 8, sigma, 1.0, gamma)
    cx, cy = _v1_closed_form(sigma, 1.0, gamma)
    got = delta_gap(M, (range(5), range(5, 10)), truncated_svd(M, 1))
    assert got == pytest.approx(cx - cy, abs=1e-8)


def test_delta_gap_rejects_bad_split():
    M = np.eye(3)
    with pytest.raises(EmptySplit):
        delta_gap(M, ([], [0, 1, 2]), _basis([1.0, 0, 0]))
    with pytest.raises(ValueError):
        delta_gap(M, ([0], [1]), _basis([1.0, 0, 0]))


# -- separation ---------------------------------------------------------------

def test_separation_orthogonal_rank1_gamma_zero():
    M = block_toy(0)
    rep = separation_params(M, SubmatrixDescriptor(range(5), range(5)))
    assert rep.gamma == pytest.approx(0.0, abs=1e-12)
    assert rep.pi == pytest.approx(4.0)


def test_separation_identical_blocks_pi_one():
    A = np.random.default_rng(3).standard_normal((4, 4))
    M = np.zeros((8, 8))
    M[:4, :4] = A
    M[4:, 4:] = A
    assert separation_params(M, SubmatrixDescriptor(range(4), range(4))).pi == pytest.approx(1.0)


def test_separation_constructed_pi():
    rng = np.random.default_rng(4)
    S, T = rng.standard_normal((5, 5)), rng.standard_normal((7, 7))
    S *= math.sqrt(1.2) * np.linalg.norm(T, 2) / np.linalg.norm(S, 2)
    M = rng.standard_normal((12, 12))
    M[:5, :5] = S
    M[5:, 5:] = T
    assert separation_params(M, SubmatrixDescriptor(range(5), range(5))).pi == pytest.approx(1.2, abs=1e-6)


def test_separation_whole_matrix_has_no_complement():
    with pytest.raises(EmptyComplement):
        separation_params(np.eye(3), SubmatrixDescriptor.full((3, 3)))


# -- discovery ----------------------------------------------------------------

def test_svp_discover_rank1_toy_exact():
    # with one vector the projections are exactly 1 on S and 0 on T; with
    # three, the extra vectors make both sides equal (see ledger)
    M = block_toy(5)
    d, rep = svp_discover(ObservedMatrix.from_dense(M), SvpConfig(n_vectors=1))
    truth = SubmatrixDescriptor(range(5), range(5))
    assert d == truth and f_score(truth, d) == 1.0
    assert rep.delta == pytest.approx(1.0) and rep.delta_cols == pytest.approx(1.0)


@given(st.integers(0, 10 ** 6))
def test_svp_discover_permutation_invariant(seed):
    inst = generate(60, 50, 3, [PlantSpec(12, 10, 1, 2.0)], seed)
    rng = np.random.default_rng(seed)
    pr, pc = rng.permutation(60), rng.permutation(50)
    d0, _ = svp_discover(ObservedMatrix.from_dense(inst.matrix))
    d1, _ = svp_discover(ObservedMatrix.from_dense(inst.matrix[np.ix_(pr, pc)]))
    assert SubmatrixDescriptor(pr[list(d1.rows)], pc[list(d1.cols)]) == d0


@given(st.integers(0, 10 ** 6), st.floats(1e-3, 1e3))
def test_svp_discover_scale_invariant(seed, c):
    M = generate(40, 40, 3, [PlantSpec(8, 8, 1, 2.0)], seed).matrix
    d0, _ = svp_discover(ObservedMatrix.from_dense(M))
    d1, _ = svp_discover(ObservedMatrix.from_dense(c * M))
    assert d0 == d1


def test_discover_all_pure_background_is_empty():
    M = low_rank_gaussian(400, 400, 30, 0)
    assert discover_all(ObservedMatrix.from_dense(M)) == []


def test_discover_all_respects_max_submatrices():
    M = block_toy(7)
    cfg = SvpConfig(n_vectors=1, max_submatrices=1)
    assert len(discover_all(ObservedMatrix.from_dense(M), cfg)) <= 1
    assert discover_all(ObservedMatrix.from_dense(M), SvpConfig(max_submatrices=0)) == []


@given(st.integers(0, 10 ** 6), st.floats(0.05, 0.3))
def test_discover_all_outputs_disjoint(seed, thr):
    inst = generate(60, 60, 2, [PlantSpec(10, 10, 1, 3.0), PlantSpec(10, 10, 1, 3.0)], seed)
    M_obs = mask_uniform(inst.matrix, 1.0, seed)
    found = discover_all(M_obs, SvpConfig(n_vectors=1, delta_threshold=thr), seed)
    rows = [i for d in found for i in d.rows]
    cols = [j for d in found for j in d.cols]
    assert len(rows) == len(set(rows)) <= 60
    assert len(cols) == len(set(cols)) <= 60


def test_estimator_choice_validation():
    M_obs = mask_uniform(np.random.default_rng(0).standard_normal((10, 10)), 0.5, 0)
    with pytest.raises(ValueError):
        svp_discover(M_obs, SvpConfig(estimator="exact"))
    with pytest.raises(ValueError):
        SvpConfig(estimator="power")


@pytest.mark.xfail(strict=True, reason="projection gaps of about 0.13-0.26 on a rank-30 "
                   "background; plants are not isolated (recorded in the decisions ledger)")
def test_discover_all_three_plants():
    inst = generate(400, 400, 30, [PlantSpec(40, 40, 2, 1.2)] * 3, 0)
    found = discover_all(ObservedMatrix.from_dense(inst.matrix), SvpConfig(), 0)
    assert len(found) == 3
    for t in inst.truth:
        assert max(f_score(t, d) for d in found) >= 0.9
