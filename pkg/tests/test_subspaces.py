"""Subspace algebra: worked examples plus randomized structural properties."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from geouio.errors import DimensionMismatch, InvarianceViolated
from geouio.subspaces import (Subspace, TolerancePolicy,
                              canonical_projection, contains, image,
                              induced_map, intersect, kernel, margin_monitor,
                              orth_complement, preimage, subspace_sum,
                              subspaces_equal, unobservable_subspace)

# 3-state demo data used throughout (one unknown-input column, two outputs)
A3 = np.array([[2.0, -2.0, 0.0], [0.0, 0.0, 1.0], [0.0, -2.0, 1.0]])
C3 = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
BBAR3 = np.array([[1.0], [1.0], [0.0]])


def span(*cols):
    return image(np.column_stack(cols))


def rand_subspace(rng, n, k):
    if k == 0:
        return Subspace.zero(n)
    q, _ = np.linalg.qr(rng.normal(size=(n, k)))
    return Subspace(n, q[:, :k])


# ---------------------------------------------------------------------------
# image / kernel


def test_image_of_single_column():
    V = image(BBAR3)
    assert V.dim == 1
    expected = np.array([1.0, 1.0, 0.0]) / np.sqrt(2)
    assert np.allclose(np.abs(V.basis[:, 0]), np.abs(expected))


def test_image_of_zero_matrix_is_zero_subspace():
    assert image(np.zeros((3, 2))).is_zero


def test_image_of_identity_is_full():
    assert image(np.eye(3)).is_full


def test_kernel_of_output_matrix_is_e3():
    K = kernel(C3)
    assert subspaces_equal(K, span(np.array([0.0, 0.0, 1.0])))


def test_kernel_of_identity_is_zero():
    assert kernel(np.eye(4)).is_zero


def test_kernel_of_zero_map_is_full():
    assert kernel(np.zeros((2, 3))).is_full


# ---------------------------------------------------------------------------
# sum / intersection


def test_sum_of_axes():
    s = subspace_sum(span(np.array([1.0, 0, 0])), span(np.array([0.0, 1, 0])))
    assert s.dim == 2
    assert contains(s, span(np.array([1.0, 0, 0])))


def test_sum_idempotent():
    V = span(np.array([1.0, 2, -1]), np.array([0.0, 1, 1]))
    assert subspaces_equal(subspace_sum(V, V), V)


def test_sum_diagonal_plus_e3():
    # span{(1,1,0)} + span{e3} = all (a, a, c): orthogonal to (1,-1,0)
    s = subspace_sum(image(BBAR3), span(np.array([0.0, 0, 1])))
    assert s.dim == 2
    assert np.allclose(np.array([1.0, -1.0, 0.0]) @ s.basis, 0.0, atol=1e-12)


def test_intersection_unknown_input_with_kernel_is_zero():
    assert intersect(image(BBAR3), kernel(C3)).is_zero


def test_intersection_idempotent():
    V = span(np.array([1.0, 0, 2]), np.array([0.0, 1, 1]))
    assert subspaces_equal(intersect(V, V), V)


def test_intersection_of_coordinate_planes():
    e1, e2, e3 = np.eye(3).T
    got = intersect(span(e1, e2), span(e2, e3))
    assert subspaces_equal(got, span(e2))


def test_binary_ops_reject_mixed_ambient():
    with pytest.raises(DimensionMismatch):
        subspace_sum(Subspace.zero(3), Subspace.zero(4))
    with pytest.raises(DimensionMismatch):
        intersect(Subspace.full(2), Subspace.full(3))


# ---------------------------------------------------------------------------
# preimage


def test_preimage_of_zero_is_kernel():
    assert subspaces_equal(preimage(C3, Subspace.zero(2)), kernel(C3))


def test_preimage_under_A_of_plane():
    # {x : Ax in span{(1,1,0), e3}} = {x : 2x1 - 2x2 - x3 = 0} (by hand:
    # the plane is the kernel of (1,-1,0)^T, and (1,-1,0) A = (2,-2,-1)).
    S = subspace_sum(image(BBAR3), span(np.array([0.0, 0, 1])))
    got = preimage(A3, S)
    assert got.dim == 2
    assert np.allclose(np.array([2.0, -2.0, -1.0]) @ got.basis, 0.0, atol=1e-10)


def test_preimage_under_identity():
    V = span(np.array([1.0, 2, 3]), np.array([-1.0, 0, 1]))
    assert subspaces_equal(preimage(np.eye(3), V), V)


# ---------------------------------------------------------------------------
# complement / canonical projection / induced map


def test_orth_complement_of_e3():
    got = orth_complement(span(np.array([0.0, 0, 1])))
    e1, e2 = np.eye(3).T[:2]
    assert subspaces_equal(got, span(e1, e2))


def test_orth_complement_of_zero_is_full():
    assert orth_complement(Subspace.zero(5)).is_full


def test_orth_complement_orthogonality_and_dims():
    V = image(BBAR3)
    W = orth_complement(V)
    assert V.dim + W.dim == 3
    assert np.abs(V.basis.T @ W.basis).max() < 1e-12


def test_canonical_projection_kills_subspace():
    W = span(np.array([0.0, 0, 1]))
    P = canonical_projection(W)
    assert P.shape == (2, 3)
    assert np.allclose(P @ np.array([0.0, 0, 1]), 0.0, atol=1e-12)
    assert np.allclose(P @ P.T, np.eye(2), atol=1e-12)


def test_canonical_projection_of_zero_is_orthogonal():
    P = canonical_projection(Subspace.zero(3))
    assert P.shape == (3, 3)
    assert np.allclose(P @ P.T, np.eye(3), atol=1e-12)


def test_canonical_projection_of_full_space_has_no_rows():
    assert canonical_projection(Subspace.full(3)).shape == (0, 3)


def test_induced_map_with_zero_subspace_is_similar_to_A():
    W = Subspace.zero(3)
    P = canonical_projection(W)
    Abar = induced_map(A3, W, P)
    assert np.allclose(np.sort_complex(np.linalg.eigvals(Abar)),
                       np.sort_complex(np.linalg.eigvals(A3)))


def test_induced_map_of_identity_is_identity():
    W = span(np.array([1.0, 1, 0]))
    P = canonical_projection(W)
    assert np.allclose(induced_map(np.eye(3), W, P), np.eye(2), atol=1e-12)


def test_induced_map_rejects_noninvariant_subspace():
    W = span(np.array([0.0, 1, 0]))  # A e2 = (-2, 0, -2) not in span{e2}
    P = canonical_projection(W)
    with pytest.raises(InvarianceViolated):
        induced_map(A3, W, P)


# ---------------------------------------------------------------------------
# contains / equal


def test_contains_full_and_zero():
    rng = np.random.default_rng(0)
    V = rand_subspace(rng, 4, 2)
    assert contains(Subspace.full(4), V)
    assert not contains(Subspace.zero(4), V)


def test_equal_is_scale_invariant():
    a = span(np.array([1.0, 1, 0]))
    b = span(np.array([2.0, 2, 0]))
    assert subspaces_equal(a, b)


# ---------------------------------------------------------------------------
# randomized properties


@settings(max_examples=40, deadline=None, derandomize=True)
@given(st.integers(2, 7), st.integers(0, 4), st.integers(0, 4),
       st.integers(0, 2**31 - 1))
def test_dimension_formula(n, kv, kw, seed):
    kv, kw = min(kv, n), min(kw, n)
    rng = np.random.default_rng(seed)
    V, W = rand_subspace(rng, n, kv), rand_subspace(rng, n, kw)
    s = subspace_sum(V, W)
    i = intersect(V, W)
    assert s.dim + i.dim == V.dim + W.dim
    assert contains(s, V) and contains(s, W)
    assert contains(V, i) and contains(W, i)


@settings(max_examples=40, deadline=None, derandomize=True)
@given(st.integers(2, 6), st.integers(2, 6), st.integers(0, 3),
       st.integers(0, 2**31 - 1))
def test_preimage_duality(p, n, k, seed):
    # preimage(M, S)^perp = image(M^T basis(S^perp))
    k = min(k, p)
    rng = np.random.default_rng(seed)
    M = rng.normal(size=(p, n))
    S = rand_subspace(rng, p, k)
    left = orth_complement(preimage(M, S))
    right = image(M.T @ orth_complement(S).basis)
    assert subspaces_equal(left, right)


@settings(max_examples=30, deadline=None, derandomize=True)
@given(st.integers(2, 7), st.integers(1, 4), st.integers(0, 2**31 - 1))
def test_induced_map_commutation(n, k, seed):
    k = min(k, n - 1)
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    blocks = rng.normal(size=(n, n))
    blocks[k:, :k] = 0.0  # first k coordinates invariant in the Q chart
    A = Q @ blocks @ Q.T
    W = Subspace(n, Q[:, :k])
    P = canonical_projection(W)
    Abar = induced_map(A, W, P)
    assert np.linalg.norm(Abar @ P - P @ A) <= 1e-9 * max(1, np.linalg.norm(A))


def test_operations_are_deterministic():
    rng = np.random.default_rng(7)
    M = rng.normal(size=(5, 3))
    N = rng.normal(size=(2, 5))
    a1, a2 = image(M), image(M)
    assert np.array_equal(a1.basis, a2.basis)
    k1, k2 = kernel(N), kernel(N)
    assert np.array_equal(k1.basis, k2.basis)
    s1 = subspace_sum(a1, kernel(N))
    s2 = subspace_sum(a2, kernel(N))
    assert np.array_equal(s1.basis, s2.basis)


def test_unobservable_subspace_matches_observability_matrix():
    rng = np.random.default_rng(3)
    for _ in range(20):
        n = int(rng.integers(2, 6))
        p = int(rng.integers(1, 3))
        A = rng.normal(size=(n, n))
        C = rng.normal(size=(p, n))
        if rng.random() < 0.5:
            C[:, rng.integers(0, n)] = 0.0
        obs_rows = np.vstack([C @ np.linalg.matrix_power(A, k) for k in range(n)])
        N = unobservable_subspace(C, A)
        assert N.dim == n - np.linalg.matrix_rank(obs_rows)
        if N.dim:
            assert np.linalg.norm(obs_rows @ N.basis) < 1e-7


def test_margin_monitor_flags_near_threshold_decisions():
    with margin_monitor() as rec:
        image(np.array([[1.0, 0.0], [0.0, 5e-10]]))  # just above the rank cut
    assert rec.margins and rec.min_margin < 1e-6
    with margin_monitor() as rec:
        image(np.array([[1.0, 0.0], [0.0, 0.0]]))  # exact zero: stable drop
    assert rec.min_margin > 0.5


def test_subspace_rejects_nonorthonormal_basis():
    with pytest.raises(DimensionMismatch):
        Subspace(3, np.array([[1.0], [1.0], [0.0]]))


def test_tolerance_policy_requires_positive_entries():
    with pytest.raises(ValueError):
        TolerancePolicy(rel_rank_tol=0.0)
