"""Centralized unknown-input observer synthesis.

The observer runs a copy of the plant's dynamics on the quotient X/W_g*,
which the unknown input cannot reach, and reassembles the state estimate from
the quotient variable and the measurement through the reconstruction identity
E·P + F·C = I.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, ExistenceFailed, NotSolvable
from .subspaces import (DEFAULT_POLICY, TolerancePolicy, as_matrix,
                        intersect, kernel, monitored_rank)
from .synthesis import (GeometricDecomposition, SpectralPartition, decompose,
                        stabilizing_friend)


@dataclass(frozen=True)
class LinSystem:
    """Plant matrices x' = Ax + Bu, y = Cx."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        A = as_matrix(self.A, "A")
        B = as_matrix(self.B, "B")
        C = as_matrix(self.C, "C")
        n = A.shape[0]
        if A.shape != (n, n):
            raise DimensionMismatch("A must be square")
        if B.shape[0] != n:
            raise DimensionMismatch("B row count must match A")
        if C.shape[1] != n:
            raise DimensionMismatch("C column count must match A")
        for name, M in (("A", A), ("B", B), ("C", C)):
            object.__setattr__(self, name, M)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def p(self) -> int:
        return self.C.shape[0]


@dataclass(frozen=True)
class InputPartition:
    """Column split of B into known and unknown input channels."""

    B_known: np.ndarray
    B_unknown: np.ndarray
    known_cols: tuple
    unknown_cols: tuple

    @classmethod
    def from_columns(cls, sys: LinSystem, known_cols, unknown_cols) -> "InputPartition":
        known = tuple(int(i) for i in known_cols)
        unknown = tuple(int(i) for i in unknown_cols)
        cols = sorted(known + unknown)
        if cols != list(range(sys.m)):
            raise DimensionMismatch(
                f"known {known} and unknown {unknown} must partition the "
                f"{sys.m} input columns")
        n_unknown = len(unknown)
        if not (n_unknown <= sys.p <= sys.n):
            raise DimensionMismatch(
                f"need #unknown ({n_unknown}) <= p ({sys.p}) <= n ({sys.n})")
        return cls(sys.B[:, list(known)], sys.B[:, list(unknown)], known, unknown)

    @property
    def l(self) -> int:
        return len(self.known_cols)


@dataclass(frozen=True)
class CentralizedObserver:
    """Synthesized observer z' = Abar_L z + P B' u' - P L y,  xhat = E z + F y."""

    Abar_L: np.ndarray
    P_Wg: np.ndarray
    L: np.ndarray
    E: np.ndarray
    F: np.ndarray
    input_map: np.ndarray   # P_Wg @ B_known, applied to the known input
    output_map: np.ndarray  # P_Wg @ L, applied to the measurement
    decomp: GeometricDecomposition
    alpha: float

    @property
    def z_dim(self) -> int:
        return self.Abar_L.shape[0]

    def validate(self, sys: LinSystem, part: InputPartition) -> dict:
        """Residuals for every observer invariant (see acceptance suite)."""
        n = sys.n
        AL = sys.A + self.L @ sys.C
        out = {
            "reconstruction_residual": float(np.linalg.norm(
                self.E @ self.P_Wg + self.F @ sys.C - np.eye(n))),
            "quotient_kills_unknown_input": float(np.linalg.norm(
                self.P_Wg @ part.B_unknown)) if part.B_unknown.size else 0.0,
            "commutation_residual": float(np.linalg.norm(
                self.Abar_L @ self.P_Wg - self.P_Wg @ AL)),
            "max_re_quotient_spectrum": float(
                np.linalg.eigvals(self.Abar_L).real.max()) if self.z_dim else -np.inf,
            "friend_invariance_residual": float(np.linalg.norm(
                self.P_Wg @ AL @ self.decomp.W_g_star.basis))
            if self.decomp.W_g_star.dim else 0.0,
            "split_dimension_identity": (
                self.decomp.Xbar_g.dim + self.decomp.Xbar_b.dim
                == self.decomp.S_star.dim - self.decomp.W_star.dim),
        }
        return out


def check_uio_condition(decomp: GeometricDecomposition, C,
                        tol: TolerancePolicy = DEFAULT_POLICY) -> bool:
    """Existence condition: the decoupled subspace meets Ker C only at 0."""
    C = as_matrix(C, "C")
    return intersect(decomp.W_g_star, kernel(C, tol), tol).is_zero


def classical_rank_condition(sys: LinSystem, part: InputPartition,
                             alpha: float = 0.0,
                             tol: TolerancePolicy = DEFAULT_POLICY):
    """Textbook existence test: (i) rank(C Bbar) = rank(Bbar), and
    (ii) detectability of (C, A1) with A1 = (I - Bbar (C Bbar)^+ C) A.

    Detectability is tested PBH-style on every eigenvalue whose real part
    reaches the spectral boundary.
    """
    Bbar = part.B_unknown
    C, A, n = sys.C, sys.A, sys.n
    cond_i = monitored_rank(C @ Bbar, tol) == monitored_rank(Bbar, tol)
    CB_pinv = np.linalg.pinv(C @ Bbar) if Bbar.shape[1] else np.zeros((0, sys.p))
    A1 = (np.eye(n) - Bbar @ CB_pinv @ C) @ A
    spart = SpectralPartition(alpha)
    scale = max(1.0, float(np.linalg.norm(A1, 2)))
    cond_ii = True
    for lam in np.linalg.eigvals(A1):
        if spart.is_bad(lam.real, scale):
            pbh = np.vstack([A1 - lam * np.eye(n), C.astype(complex)])
            if monitored_rank(pbh, tol) < n:
                cond_ii = False
    return cond_i, cond_ii


def solve_output_reconstruction(P_Wg, C, tol: TolerancePolicy = DEFAULT_POLICY):
    """Minimum-norm (E, F) with E P_Wg + F C = I_n.

    Solvable iff the rows of P_Wg and C jointly span R^n; raises NotSolvable
    otherwise.
    """
    P_Wg = as_matrix(P_Wg, "P_Wg")
    C = as_matrix(C, "C")
    n = P_Wg.shape[1]
    if C.shape[1] != n:
        raise DimensionMismatch("P_Wg and C must share the state dimension")
    M = np.vstack([P_Wg, C])
    if monitored_rank(M, tol) < n:
        raise NotSolvable(
            "rows of the quotient chart and C do not span the state space")
    Xt, *_ = np.linalg.lstsq(M.T, np.eye(n), rcond=None)
    X = Xt.T
    resid = float(np.linalg.norm(X @ M - np.eye(n)))
    if resid > tol.abs_residual_tol:
        raise NotSolvable(f"reconstruction solve residual too large ({resid:.2e})")
    q = P_Wg.shape[0]
    return X[:, :q], X[:, q:]


def synthesize_centralized_uio(sys: LinSystem, part: InputPartition,
                               spectral: SpectralPartition = SpectralPartition(),
                               tol: TolerancePolicy = DEFAULT_POLICY,
                               pole_targets=None, margin: float = 0.5) -> CentralizedObserver:
    """Full pipeline: decomposition, existence check, gain, reconstruction."""
    decomp = decompose(sys.A, sys.C, part.B_unknown, spectral, tol)
    blocked = intersect(decomp.W_g_star, kernel(sys.C, tol), tol)
    if not blocked.is_zero:
        raise ExistenceFailed(
            "unrecoverable directions: the decoupled subspace intersects Ker C",
            diagnostics={"intersection_basis": blocked.basis,
                         "w_g_dim": decomp.W_g_star.dim})
    try:
        L, Abar_L = stabilizing_friend(
            sys.A, sys.C, decomp.W_g_star, spectral, tol,
            pole_targets=pole_targets, margin=margin,
            keep_invariant=(decomp.W_star,))
    except Exception as exc:  # SpectrumUnassignable and friends
        raise ExistenceFailed(f"quotient spectrum not assignable: {exc}",
                              diagnostics={"cause": exc}) from exc
    E, F = solve_output_reconstruction(decomp.P_Wg, sys.C, tol)
    return CentralizedObserver(Abar_L=Abar_L, P_Wg=decomp.P_Wg, L=L, E=E, F=F,
                               input_map=decomp.P_Wg @ part.B_known,
                               output_map=decomp.P_Wg @ L,
                               decomp=decomp, alpha=spectral.alpha)


def observer_rhs(obs: CentralizedObserver, z, y, u_known) -> np.ndarray:
    """dz/dt = Abar_L z + (P B_known) u_known - (P L) y."""
    z = np.asarray(z, dtype=float)
    y = np.asarray(y, dtype=float)
    u_known = np.asarray(u_known, dtype=float)
    return obs.Abar_L @ z + obs.input_map @ u_known - obs.output_map @ y


def estimate(obs: CentralizedObserver, z, y) -> np.ndarray:
    """xhat = E z + F y."""
    return obs.E @ np.asarray(z, dtype=float) + obs.F @ np.asarray(y, dtype=float)
