"""Geometric synthesis: recursions, splitting, friends, full decomposition."""

import numpy as np
import pytest

from geouio.errors import NotConditionedInvariant, SpectrumUnassignable
from geouio.subspaces import (Subspace, canonical_projection, contains, image,
                              intersect, kernel, orth_complement,
                              subspaces_equal)
from geouio.synthesis import (SpectralPartition, common_friend, compute_wg_star,
                              decompose, default_pole_targets, friend_gain,
                              infimal_conditioned_invariant,
                              infimal_unobservability_subspace, spectral_split,
                              stabilizing_friend)

A3 = np.array([[2.0, -2.0, 0.0], [0.0, 0.0, 1.0], [0.0, -2.0, 1.0]])
C3 = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
BBAR3 = np.array([[1.0], [1.0], [0.0]])
DIAG_SPAN = image(BBAR3)  # span{(1,1,0)}

ALPHA0 = SpectralPartition(0.0)


def rand_system(rng, n_max=5, p_max=3, q_max=2):
    n = int(rng.integers(2, n_max + 1))
    p = int(rng.integers(1, min(p_max, n) + 1))
    q = int(rng.integers(1, min(q_max, p) + 1))
    return (rng.uniform(-2, 2, (n, n)), rng.uniform(-2, 2, (p, n)),
            rng.uniform(-2, 2, (n, q)))


# ---------------------------------------------------------------------------
# W* recursion


def test_wstar_demo_system_fixes_at_input_span():
    W = infimal_conditioned_invariant(A3, C3, DIAG_SPAN)
    assert subspaces_equal(W, DIAG_SPAN)


def test_wstar_of_zero_input_is_zero():
    W = infimal_conditioned_invariant(A3, C3, Subspace.zero(3))
    assert W.is_zero


def test_wstar_with_injective_output_is_input_span():
    # Ker C = 0 makes the recursion add nothing.
    rng = np.random.default_rng(1)
    A = rng.normal(size=(3, 3))
    B = rng.normal(size=(3, 1))
    W = infimal_conditioned_invariant(A, np.eye(3), image(B))
    assert subspaces_equal(W, image(B))


def test_wstar_chain_is_monotone_and_short():
    rng = np.random.default_rng(2)
    for _ in range(25):
        A, C, B = rand_system(rng)
        W, hist = infimal_conditioned_invariant(A, C, image(B),
                                                return_history=True)
        dims = [h.dim for h in hist]
        assert dims == sorted(dims)
        assert len(hist) <= A.shape[0] + 2
        for prev, nxt in zip(hist, hist[1:]):
            assert contains(nxt, prev)


# ---------------------------------------------------------------------------
# S* recursion


def test_sstar_demo_system_equals_wstar():
    W = infimal_conditioned_invariant(A3, C3, DIAG_SPAN)
    S = infimal_unobservability_subspace(A3, C3, W)
    assert subspaces_equal(S, W)


def test_sstar_with_injective_output_is_wstar():
    rng = np.random.default_rng(3)
    A = rng.normal(size=(4, 4))
    B = rng.normal(size=(4, 1))
    W = infimal_conditioned_invariant(A, np.eye(4), image(B))
    S = infimal_unobservability_subspace(A, np.eye(4), W)
    assert subspaces_equal(S, W)


def test_sstar_with_zero_output_is_everything():
    W = infimal_conditioned_invariant(A3, np.zeros((1, 3)), DIAG_SPAN)
    S = infimal_unobservability_subspace(A3, np.zeros((1, 3)), W)
    assert S.is_full


def test_sstar_chain_is_monotone_decreasing():
    rng = np.random.default_rng(4)
    for _ in range(25):
        A, C, B = rand_system(rng)
        W = infimal_conditioned_invariant(A, C, image(B))
        S, hist = infimal_unobservability_subspace(A, C, W, return_history=True)
        dims = [h.dim for h in hist]
        assert dims == sorted(dims, reverse=True)
        assert len(hist) <= A.shape[0] + 2
        assert contains(S, W)
        # fixed point: S = W* + (A^-1 S ∩ Ker C)
        from geouio.subspaces import preimage, subspace_sum
        rhs = subspace_sum(W, intersect(preimage(A, S), kernel(C)))
        assert subspaces_equal(S, rhs)


# ---------------------------------------------------------------------------
# friends


def test_friend_zero_subspace_gives_zero_gain():
    L = friend_gain(A3, C3, Subspace.zero(3))
    assert np.allclose(L, 0.0)


def test_friend_for_A_invariant_subspace():
    # span{e1} is A-invariant for A3, so L = 0 works; check the contract.
    W = image(np.array([[1.0], [0.0], [0.0]]))
    L = friend_gain(A3, C3, W)
    P = canonical_projection(W)
    assert np.linalg.norm(P @ (A3 + L @ C3) @ W.basis) <= 1e-9
    assert np.linalg.norm(P @ A3 @ W.basis) <= 1e-12  # L = 0 already valid


def test_friend_on_demo_wstar():
    L = friend_gain(A3, C3, DIAG_SPAN)
    P = canonical_projection(DIAG_SPAN)
    assert np.linalg.norm(P @ (A3 + L @ C3) @ DIAG_SPAN.basis) <= 1e-9


def test_friend_rejects_non_conditioned_invariant():
    # span{e3} ⊂ Ker C3 and A e3 = (0,1,1) is outside span{e3}.
    W = image(np.array([[0.0], [0.0], [1.0]]))
    with pytest.raises(NotConditionedInvariant):
        friend_gain(A3, C3, W)


def test_common_friend_fixes_both_subspaces():
    rng = np.random.default_rng(5)
    for _ in range(25):
        A, C, B = rand_system(rng)
        W = infimal_conditioned_invariant(A, C, image(B))
        S = infimal_unobservability_subspace(A, C, W)
        L0 = common_friend(A, C, [W, S])
        AL = A + L0 @ C
        for sub in (W, S):
            if 0 < sub.dim < A.shape[0]:
                P = canonical_projection(sub)
                resid = np.linalg.norm(P @ AL @ sub.basis)
                assert resid <= 1e-8 * max(1, np.linalg.norm(A))


# ---------------------------------------------------------------------------
# spectral split


def test_split_demo_system_is_trivial():
    W = infimal_conditioned_invariant(A3, C3, DIAG_SPAN)
    S = infimal_unobservability_subspace(A3, C3, W)
    L0 = common_friend(A3, C3, [W, S])
    Xg, Xb = spectral_split(A3, C3, W, S, L0, ALPHA0)
    assert Xg.is_zero and Xb.is_zero


def test_split_diagonal_induced_map():
    # C = 0 makes S* the whole space and the induced map equal to A itself.
    A = np.diag([-1.0, 2.0])
    C = np.zeros((1, 2))
    W = Subspace.zero(2)
    S = infimal_unobservability_subspace(A, C, W)
    Xg, Xb = spectral_split(A, C, W, S, np.zeros((2, 1)), ALPHA0)
    assert Xg.dim == 1 and Xb.dim == 1
    assert np.allclose(np.abs(Xg.basis[:, 0]), [1.0, 0.0])
    assert np.allclose(np.abs(Xb.basis[:, 0]), [0.0, 1.0])


def test_split_all_good_modes():
    A = np.diag([-1.0, -2.0, -3.0])
    C = np.zeros((1, 3))
    W = Subspace.zero(3)
    S = infimal_unobservability_subspace(A, C, W)
    Xg, Xb = spectral_split(A, C, W, S, np.zeros((3, 1)), ALPHA0)
    assert Xb.is_zero and Xg.dim == 3


def test_split_dimension_identity_random():
    rng = np.random.default_rng(6)
    for _ in range(30):
        A, C, B = rand_system(rng)
        W = infimal_conditioned_invariant(A, C, image(B))
        S = infimal_unobservability_subspace(A, C, W)
        L0 = common_friend(A, C, [W, S])
        Xg, Xb = spectral_split(A, C, W, S, L0, ALPHA0)
        assert Xg.dim + Xb.dim == S.dim - W.dim


def test_invariant_zero_spectrum_is_friend_independent():
    rng = np.random.default_rng(7)
    checked = 0
    for _ in range(40):
        A, C, B = rand_system(rng, n_max=5)
        W = infimal_conditioned_invariant(A, C, image(B))
        S = infimal_unobservability_subspace(A, C, W)
        if S.dim - W.dim == 0:
            continue
        n, p = A.shape[0], C.shape[0]
        rows = [np.kron((C @ sub.basis).T, canonical_projection(sub))
                for sub in (W, S) if 0 < sub.dim < n]
        rhs = [(-canonical_projection(sub) @ A @ sub.basis).flatten(order="F")
               for sub in (W, S) if 0 < sub.dim < n]
        G, h = np.vstack(rows), np.concatenate(rhs)
        spectra = []
        for jitter in (None, 11, 12):
            if jitter is None:
                L = common_friend(A, C, [W, S])
            else:
                # a different exact solution of the joint friend equations:
                # correct a random gain back onto the solution manifold
                jr = np.random.default_rng(jitter)
                L_rand = jr.normal(size=(n, p))
                fix, *_ = np.linalg.lstsq(G, G @ L_rand.flatten(order="F") - h,
                                          rcond=None)
                L = L_rand - fix.reshape((n, p), order="F")
                assert np.linalg.norm(G @ L.flatten(order="F") - h) < 1e-8
            P = canonical_projection(W)
            Sq = P @ intersect(S, orth_complement(W)).basis
            R = Sq.T @ (P @ (A + L @ C) @ P.T) @ Sq
            spectra.append(np.sort_complex(np.linalg.eigvals(R)))
        for other in spectra[1:]:
            assert np.allclose(spectra[0], other, atol=1e-6)
        checked += 1
    assert checked >= 10


# ---------------------------------------------------------------------------
# W_g* and the stabilizing friend


def test_wg_star_trivial_and_full_lifts():
    W = infimal_conditioned_invariant(A3, C3, DIAG_SPAN)
    P = canonical_projection(W)
    q = P.shape[0]
    assert subspaces_equal(compute_wg_star(W, Subspace.zero(q), P), W)
    S = infimal_unobservability_subspace(A3, C3, W)
    quotient_of_S = image(P @ intersect(S, orth_complement(W)).basis)
    assert subspaces_equal(compute_wg_star(W, quotient_of_S, P), S)


def test_wg_star_demo_equals_wstar():
    d = decompose(A3, C3, BBAR3, ALPHA0)
    assert subspaces_equal(d.W_g_star, DIAG_SPAN)
    assert d.V.shape[1] == 0


def test_decomposition_sandwich_random():
    rng = np.random.default_rng(8)
    for _ in range(30):
        A, C, B = rand_system(rng)
        d = decompose(A, C, B, ALPHA0)
        assert contains(d.W_star, image(B))
        assert contains(d.W_g_star, d.W_star)
        assert contains(d.S_star, d.W_g_star)
        assert d.W_g_star.dim == d.W_star.dim + d.Xbar_b.dim
        ok = d.validate(A, C, B)
        for name, val in ok.items():
            if isinstance(val, bool):
                assert val, name
            else:
                assert val <= 1e-9, (name, val)


def test_rank_condition_forces_wstar_equal_input_span():
    rng = np.random.default_rng(9)
    hits = 0
    for _ in range(40):
        A, C, B = rand_system(rng)
        if np.linalg.matrix_rank(C @ B) != np.linalg.matrix_rank(B):
            continue
        W = infimal_conditioned_invariant(A, C, image(B))
        assert subspaces_equal(W, image(B))
        hits += 1
    assert hits >= 15


def test_stabilizing_friend_demo():
    d = decompose(A3, C3, BBAR3, ALPHA0)
    L, Abar = stabilizing_friend(A3, C3, d.W_g_star, ALPHA0,
                                 keep_invariant=(d.W_star,))
    assert Abar.shape == (2, 2)
    eigs = np.linalg.eigvals(Abar)
    assert eigs.real.max() < -0.5
    # the friend keeps the decoupled subspace invariant
    resid = np.linalg.norm(d.P_Wg @ (A3 + L @ C3) @ d.W_g_star.basis)
    assert resid <= 1e-9


def test_stabilizing_friend_classical_observer_case():
    # W_g* = 0 with an observable pair reduces to plain pole placement.
    rng = np.random.default_rng(10)
    A = rng.normal(size=(4, 4))
    C = rng.normal(size=(2, 4))
    L, Abar = stabilizing_friend(A, C, Subspace.zero(4), ALPHA0)
    assert np.linalg.eigvals(Abar).real.max() < 0.0
    assert np.allclose(Abar, A + L @ C)
    targets = default_pole_targets(0.0, 4)
    assert np.allclose(np.sort(np.linalg.eigvals(Abar).real), np.sort(targets),
                       atol=1e-6)


def test_stabilizing_friend_accepts_already_stable_quotient():
    A = np.diag([-2.0, -3.0])
    C = np.zeros((1, 2))
    # quotient spectrum is fixed at {-2, -3}: nothing to place, still valid
    L, Abar = stabilizing_friend(A, C, Subspace.zero(2), ALPHA0)
    assert np.linalg.eigvals(Abar).real.max() < 0.0


def test_stabilizing_friend_unassignable_spectrum_raises():
    # undetectable unstable mode: C = 0 and A has an eigenvalue at +1
    A = np.diag([1.0, -1.0])
    C = np.zeros((1, 2))
    with pytest.raises(SpectrumUnassignable):
        stabilizing_friend(A, C, Subspace.zero(2), ALPHA0)


def test_explicit_pole_targets_are_used():
    rng = np.random.default_rng(11)
    A = rng.normal(size=(3, 3))
    C = rng.normal(size=(2, 3))
    L, Abar = stabilizing_friend(A, C, Subspace.zero(3), ALPHA0,
                                 pole_targets=(-4.0, -5.0, -6.0))
    assert np.allclose(np.sort(np.linalg.eigvals(Abar).real),
                       [-6.0, -5.0, -4.0], atol=1e-6)
