"""Tolerance-aware numerical subspace algebra.

Every subspace is stored as an orthonormal basis obtained from an SVD, with
ranks cut at ``sigma_max * max_dim * rel_rank_tol``.  Degenerate subspaces
(dimension 0 or full) are ordinary values.  All operations are pure and
deterministic: identical inputs give bit-identical outputs.
"""

from __future__ import annotations

import threading
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvarianceViolated

DEFAULT_REL_RANK_TOL = 1e-10
DEFAULT_ABS_RESIDUAL_TOL = 1e-9


@dataclass(frozen=True)
class TolerancePolicy:
    """Numerical regime shared by every rank and residual decision.

    rel_rank_tol
        Relative singular-value cutoff for rank decisions.
    abs_residual_tol
        Absolute bound under which residuals count as zero.
    """

    rel_rank_tol: float = DEFAULT_REL_RANK_TOL
    abs_residual_tol: float = DEFAULT_ABS_RESIDUAL_TOL

    def __post_init__(self):
        if not (self.rel_rank_tol > 0 and self.abs_residual_tol > 0):
            raise ValueError("tolerances must be strictly positive")


DEFAULT_POLICY = TolerancePolicy()


# ---------------------------------------------------------------------------
# Decision-margin monitoring.
#
# Randomized verification needs to know how close any rank decision (or
# spectral-boundary classification) came to flipping.  Monitors form a stack
# so nested batteries stay independent.

_monitor_state = threading.local()


class MarginRecorder:
    """Collects the flip distance of every numerical decision made under it."""

    def __init__(self):
        self.margins: list[float] = []

    def note(self, margin: float):
        self.margins.append(float(margin))

    @property
    def min_margin(self) -> float:
        return min(self.margins) if self.margins else np.inf


@contextmanager
def margin_monitor():
    """Record rank-gap and eigenvalue-boundary margins of enclosed operations."""
    stack = getattr(_monitor_state, "stack", None)
    if stack is None:
        stack = _monitor_state.stack = []
    rec = MarginRecorder()
    stack.append(rec)
    try:
        yield rec
    finally:
        stack.pop()


def note_margin(margin: float):
    stack = getattr(_monitor_state, "stack", None)
    if stack:
        for rec in stack:
            rec.note(margin)


# ---------------------------------------------------------------------------
# Matrix plumbing.  Linear maps are plain float ndarrays.


def as_matrix(M, name="matrix") -> np.ndarray:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got shape {M.shape}")
    if M.size and not np.all(np.isfinite(M)):
        raise DimensionMismatch(f"{name} has non-finite entries")
    return M


def _rank_cut(s: np.ndarray, shape, rel_tol: float, scale_floor: float = 0.0):
    """Number of singular values kept, recording the flip margin.

    The cutoff is ``max(sigma_max, scale_floor) * max(shape) * rel_tol``.
    ``scale_floor`` guards products of operators: a numerically-zero product
    must not resurface as a normalized garbage direction.
    """
    scale = max(float(s[0]) if s.size else 0.0, scale_floor)
    if scale == 0.0:
        note_margin(np.inf)
        return 0, 0.0
    threshold = scale * max(shape) * rel_tol
    rank = int(np.sum(s > threshold))
    # Flip margin of the decision: the spectral gap across the cut.  Exactly
    # (or numerically) zero singular values below the cut are stable drops.
    kept_min = float(s[rank - 1]) if rank > 0 else np.inf
    dropped_max = float(s[rank]) if rank < s.size else 0.0
    note_margin(kept_min - dropped_max)
    return rank, threshold


def monitored_rank(M, tol: TolerancePolicy = DEFAULT_POLICY) -> int:
    """Numerical rank with the shared cutoff rule (works for complex input)."""
    M = np.atleast_2d(np.asarray(M))
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    rank, _ = _rank_cut(s, M.shape, tol.rel_rank_tol)
    return rank


# ---------------------------------------------------------------------------
# The subspace value type.


@dataclass(frozen=True, eq=False)
class Subspace:
    """A linear subspace of R^n held as an orthonormal basis.

    ``basis`` is ``ambient_dim x k`` with orthonormal columns; the zero
    subspace has ``k == 0`` (never a zero column).  ``tol`` records the
    relative rank tolerance used to construct it.
    """

    ambient_dim: int
    basis: np.ndarray
    tol: float = DEFAULT_REL_RANK_TOL

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=float)
        if b.ndim != 2 or b.shape[0] != self.ambient_dim:
            raise DimensionMismatch(
                f"basis shape {b.shape} inconsistent with ambient dim {self.ambient_dim}")
        if b.shape[1] > self.ambient_dim:
            raise DimensionMismatch("subspace dimension exceeds ambient dimension")
        if b.shape[1]:
            gram_err = np.abs(b.T @ b - np.eye(b.shape[1])).max()
            if gram_err > 1e-12:
                raise DimensionMismatch(f"basis not orthonormal (error {gram_err:.2e})")
        b.setflags(write=False)
        object.__setattr__(self, "basis", b)

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def is_zero(self) -> bool:
        return self.dim == 0

    @property
    def is_full(self) -> bool:
        return self.dim == self.ambient_dim

    def projector(self) -> np.ndarray:
        """Orthogonal projector onto the subspace."""
        return self.basis @ self.basis.T

    @classmethod
    def zero(cls, n: int, tol: float = DEFAULT_REL_RANK_TOL) -> "Subspace":
        return cls(n, np.zeros((n, 0)), tol)

    @classmethod
    def full(cls, n: int, tol: float = DEFAULT_REL_RANK_TOL) -> "Subspace":
        return cls(n, np.eye(n), tol)

    def __repr__(self):
        return f"Subspace(dim={self.dim}, ambient={self.ambient_dim})"


def _check_same_ambient(V: Subspace, W: Subspace):
    if V.ambient_dim != W.ambient_dim:
        raise DimensionMismatch(
            f"ambient dimensions differ: {V.ambient_dim} vs {W.ambient_dim}")


# ---------------------------------------------------------------------------
# Operations.


def image(M, tol: TolerancePolicy = DEFAULT_POLICY, scale_floor: float = 0.0) -> Subspace:
    """Numerical column space of ``M`` as a Subspace."""
    M = as_matrix(M)
    n = M.shape[0]
    if M.shape[1] == 0 or M.size == 0:
        return Subspace.zero(n, tol.rel_rank_tol)
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    rank, _ = _rank_cut(s, M.shape, tol.rel_rank_tol, scale_floor)
    return Subspace(n, U[:, :rank], tol.rel_rank_tol)


def kernel(M, tol: TolerancePolicy = DEFAULT_POLICY, scale_floor: float = 0.0) -> Subspace:
    """Numerical null space of ``M``; dimension is ``n - rank(M)``."""
    M = as_matrix(M)
    p, n = M.shape
    if p == 0 or n == 0 or M.size == 0:
        return Subspace.full(n, tol.rel_rank_tol)
    _, s, Vt = np.linalg.svd(M, full_matrices=True)
    rank, _ = _rank_cut(s, M.shape, tol.rel_rank_tol, scale_floor)
    return Subspace(n, Vt[rank:].T, tol.rel_rank_tol)


def subspace_sum(V: Subspace, W: Subspace, tol: TolerancePolicy = DEFAULT_POLICY) -> Subspace:
    """V + W, the span of both bases."""
    _check_same_ambient(V, W)
    if V.is_zero:
        return W
    if W.is_zero:
        return V
    return image(np.hstack([V.basis, W.basis]), tol)


def orth_complement(V: Subspace, tol: TolerancePolicy = DEFAULT_POLICY) -> Subspace:
    """Orthogonal complement; dim(V) + dim(V^perp) = n."""
    if V.is_zero:
        return Subspace.full(V.ambient_dim, tol.rel_rank_tol)
    return kernel(V.basis.T, tol)


def intersect(V: Subspace, W: Subspace, tol: TolerancePolicy = DEFAULT_POLICY) -> Subspace:
    """V ∩ W, computed through complement duality for conditioning."""
    _check_same_ambient(V, W)
    if V.is_full:
        return W
    if W.is_full:
        return V
    return orth_complement(
        subspace_sum(orth_complement(V, tol), orth_complement(W, tol), tol), tol)


def preimage(M, S: Subspace, tol: TolerancePolicy = DEFAULT_POLICY) -> Subspace:
    """{x : Mx ∈ S}, the inverse image of S under the map M."""
    M = as_matrix(M)
    if M.shape[0] != S.ambient_dim:
        raise DimensionMismatch(
            f"map codomain {M.shape[0]} does not match subspace ambient {S.ambient_dim}")
    comp = orth_complement(S, tol)
    if comp.is_zero:
        return Subspace.full(M.shape[1], tol.rel_rank_tol)
    # Scale floor ||M||: a product that vanishes relative to M maps into S.
    return kernel(comp.basis.T @ M, tol,
                  scale_floor=float(np.linalg.norm(M, 2)) if M.size else 0.0)


def canonical_projection(W: Subspace, tol: TolerancePolicy = DEFAULT_POLICY) -> np.ndarray:
    """Chart of the quotient X/W: orthonormal rows spanning W^perp, kernel W."""
    return orth_complement(W, tol).basis.T


def induced_map(A, W: Subspace, P, tol: TolerancePolicy = DEFAULT_POLICY) -> np.ndarray:
    """Matrix of the map induced by ``A`` on the quotient chart ``P``.

    Requires A·W ⊆ W; the result ``Abar`` satisfies ``Abar @ P == P @ A`` up
    to the residual tolerance.  Raises InvarianceViolated otherwise.
    """
    A = as_matrix(A, "A")
    P = as_matrix(P, "P")
    if W.dim:
        resid = float(np.linalg.norm(P @ A @ W.basis))
        scale = max(1.0, float(np.linalg.norm(A, 2)))
        if resid > tol.abs_residual_tol * scale:
            raise InvarianceViolated(
                f"subspace is not invariant under the map (residual {resid:.2e})")
    return P @ A @ P.T


def contains(V: Subspace, W: Subspace, tol: TolerancePolicy = DEFAULT_POLICY) -> bool:
    """True iff W ⊆ V within the residual tolerance."""
    _check_same_ambient(V, W)
    if W.is_zero:
        return True
    resid = W.basis - V.basis @ (V.basis.T @ W.basis)
    return bool(np.linalg.norm(resid, axis=0).max() <= tol.abs_residual_tol)


def subspaces_equal(V: Subspace, W: Subspace, tol: TolerancePolicy = DEFAULT_POLICY) -> bool:
    return contains(V, W, tol) and contains(W, V, tol)


def unobservable_subspace(C, A, tol: TolerancePolicy = DEFAULT_POLICY,
                          meas_scale: float = 0.0) -> Subspace:
    """Largest A-invariant subspace inside Ker C (iterated-kernel construction).

    ``meas_scale`` floors the kernel rank decision when C is itself a product
    that may be numerically zero.
    """
    C = as_matrix(C, "C")
    A = as_matrix(A, "A")
    n = A.shape[0]
    K = kernel(C, tol, scale_floor=meas_scale)
    N = K
    for _ in range(n):
        nxt = intersect(K, preimage(A, N, tol), tol)
        if nxt.dim == N.dim:
            return nxt
        N = nxt
    return N
