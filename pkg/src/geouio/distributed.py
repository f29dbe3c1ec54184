"""Networked unknown-input observers over a sensor graph.

Nodes split into two classes by the local rank test rank(C_i Bbar_i) =
rank(Bbar_i).  Class-1 nodes run a reduced observer on X/W_i* and recover
their locally-blind directions (spanned by V_i) through linear consensus;
class-2 nodes run full-order observers whose unknown-input leakage is
dominated by a sign-coupling term.  Gains come from the spectral-norm /
minimum-singular-value bound on the consensus Gram matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import AssumptionViolated, DimensionMismatch, SingularQ
from .subspaces import (DEFAULT_POLICY, Subspace, TolerancePolicy, as_matrix,
                        contains, intersect, monitored_rank, subspaces_equal)
from .central import LinSystem, solve_output_reconstruction
from .synthesis import (GeometricDecomposition, SpectralPartition, decompose,
                        stabilizing_friend)

N1 = "N1"
N2 = "N2"


@dataclass(frozen=True)
class NodeSpec:
    """Raw description of one sensor node before synthesis."""

    node_id: int
    C: np.ndarray
    known_cols: tuple
    unknown_cols: tuple

    def __post_init__(self):
        object.__setattr__(self, "C", as_matrix(self.C, f"C_{self.node_id}"))
        object.__setattr__(self, "known_cols", tuple(int(i) for i in self.known_cols))
        object.__setattr__(self, "unknown_cols", tuple(int(i) for i in self.unknown_cols))


@dataclass(frozen=True)
class SensorGraph:
    """Undirected communication graph given by a symmetric 0/1 adjacency."""

    adjacency: np.ndarray

    def __post_init__(self):
        A = as_matrix(self.adjacency, "adjacency")
        N = A.shape[0]
        if A.shape != (N, N):
            raise DimensionMismatch("adjacency must be square")
        if not np.array_equal(A, A.T):
            raise DimensionMismatch("adjacency must be symmetric")
        if np.any(np.diag(A) != 0):
            raise DimensionMismatch("adjacency diagonal must be zero")
        if not np.all(np.isin(A, (0.0, 1.0))):
            raise DimensionMismatch("adjacency entries must be 0 or 1")
        A.setflags(write=False)
        object.__setattr__(self, "adjacency", A)

    @property
    def n_nodes(self) -> int:
        return self.adjacency.shape[0]

    @property
    def laplacian(self) -> np.ndarray:
        return np.diag(self.adjacency.sum(axis=1)) - self.adjacency

    @property
    def algebraic_connectivity(self) -> float:
        if self.n_nodes == 1:
            return np.inf
        return float(np.sort(np.linalg.eigvalsh(self.laplacian))[1])

    @property
    def is_connected(self) -> bool:
        return self.n_nodes == 1 or self.algebraic_connectivity > 1e-9


@dataclass(frozen=True)
class SensorNode:
    """One synthesized node of the networked observer."""

    node_id: int
    C: np.ndarray
    B_known: np.ndarray
    B_unknown: np.ndarray
    known_cols: tuple
    unknown_cols: tuple
    node_class: str
    decomp: GeometricDecomposition
    L: np.ndarray
    A_cl: np.ndarray               # A + L C
    Abarbar: np.ndarray            # induced map on X/W_g,i*
    E: np.ndarray | None = None    # class-1 reconstruction pair
    F: np.ndarray | None = None
    Abar_L: np.ndarray | None = None  # class-1 induced map on X/W_i*

    @property
    def V(self) -> np.ndarray:
        return self.decomp.V

    @property
    def Wg_basis(self) -> np.ndarray:
        return self.decomp.W_g_star.basis

    @property
    def P_Wstar(self) -> np.ndarray:
        return self.decomp.P_Wstar

    @property
    def P_Wg(self) -> np.ndarray:
        return self.decomp.P_Wg

    @property
    def z_dim(self) -> int:
        n = self.decomp.n
        return n - self.decomp.W_star.dim if self.node_class == N1 else n

    def consensus_block(self) -> np.ndarray:
        """V_i for class 1, the W_g,i* insertion for class 2."""
        return self.V if self.node_class == N1 else self.Wg_basis

    def coupling_restriction(self) -> np.ndarray:
        """Restriction of A + L C to the consensus block directions."""
        blk = self.consensus_block()
        return blk.T @ self.A_cl @ blk

    def validate(self, sys: LinSystem, tol: TolerancePolicy = DEFAULT_POLICY) -> dict:
        d = self.decomp
        AL = self.A_cl
        n = sys.n
        checks = {
            "local_rank_condition_matches_class": (
                (monitored_rank(self.C @ self.B_unknown, tol)
                 == monitored_rank(self.B_unknown, tol))
                == (self.node_class == N1)),
            "friend_invariance_residual": float(np.linalg.norm(
                d.P_Wg @ AL @ d.W_g_star.basis)) if d.W_g_star.dim else 0.0,
            "max_re_quotient_spectrum": float(np.linalg.eigvals(
                self.Abarbar).real.max()) if self.Abarbar.size else -np.inf,
            "quotient_kills_unknown_input": float(np.linalg.norm(
                d.P_Wg @ self.B_unknown)) if self.B_unknown.size else 0.0,
            # block relations between the two quotient charts
            "chart_rowspace_is_Wstar_perp": subspaces_equal(
                Subspace(n, d.P_Wstar.T if d.P_Wstar.size else np.zeros((n, 0)),
                         tol.rel_rank_tol),
                Subspace(n, sla.null_space(d.W_star.basis.T) if d.W_star.dim
                         else np.eye(n), tol.rel_rank_tol), tol),
            "V_inside_Wg": contains(
                d.W_g_star, Subspace(n, d.V, tol.rel_rank_tol), tol),
            "V_orthogonal_to_Wstar": float(np.linalg.norm(
                d.V.T @ d.W_star.basis)) if d.W_star.dim and d.V.size else 0.0,
            "split_dimension_identity": (
                d.Xbar_g.dim + d.Xbar_b.dim == d.S_star.dim - d.W_star.dim),
        }
        if self.node_class == N1:
            checks["reconstruction_residual"] = float(np.linalg.norm(
                self.E @ d.P_Wstar + self.F @ self.C - np.eye(n)))
            checks["wstar_friend_invariance"] = float(np.linalg.norm(
                d.P_Wstar @ AL @ d.W_star.basis)) if d.W_star.dim else 0.0
        return checks


@dataclass(frozen=True)
class DistributedObserverNetwork:
    """All synthesized nodes plus the consensus gains and block matrices."""

    nodes: tuple
    graph: SensorGraph
    chi: float
    gamma: float
    u_bar_max: float
    safety: float
    W_V_block: np.ndarray
    A_L_block: np.ndarray
    chi_min: float
    gamma_min: float
    sigma_min_Q: float

    @property
    def n1_ids(self):
        return [nd.node_id for nd in self.nodes if nd.node_class == N1]

    @property
    def n2_ids(self):
        return [nd.node_id for nd in self.nodes if nd.node_class == N2]

    def node_by_id(self, node_id) -> SensorNode:
        for nd in self.nodes:
            if nd.node_id == node_id:
                return nd
        raise KeyError(node_id)

    def validate(self, sys: LinSystem, tol: TolerancePolicy = DEFAULT_POLICY) -> dict:
        checks = {"graph_connected": self.graph.is_connected,
                  "sigma_min_Q": self.sigma_min_Q,
                  "chi_exceeds_bound": (self.chi > self.chi_min
                                        or (self.chi_min == 0 and self.chi >= 0.1)),
                  "gamma_exceeds_bound": (self.gamma >= self.safety * self.gamma_min)}
        W_V, A_L, _ = build_consensus_blocks(self.nodes)
        checks["block_matrices_match"] = bool(
            np.allclose(W_V, self.W_V_block) and np.allclose(A_L, self.A_L_block))
        for nd in self.nodes:
            for name, val in nd.validate(sys, tol).items():
                checks[f"node{nd.node_id}_{name}"] = val
        return checks


# ---------------------------------------------------------------------------
# Synthesis steps.


def classify_nodes(sys: LinSystem, node_specs,
                   tol: TolerancePolicy = DEFAULT_POLICY):
    """Split node ids by the local rank condition rank(C_i Bbar_i) = rank(Bbar_i)."""
    n1, n2 = [], []
    for spec in node_specs:
        Bbar = sys.B[:, list(spec.unknown_cols)]
        ok = monitored_rank(spec.C @ Bbar, tol) == monitored_rank(Bbar, tol)
        (n1 if ok else n2).append(spec.node_id)
    return n1, n2


def per_node_decomposition(sys: LinSystem, spec: NodeSpec,
                           spectral: SpectralPartition = SpectralPartition(),
                           tol: TolerancePolicy = DEFAULT_POLICY,
                           pole_targets=None, margin: float = 0.5) -> SensorNode:
    """Run the geometric pipeline for one node and populate its observer data."""
    cols = sorted(spec.known_cols + spec.unknown_cols)
    if cols != list(range(sys.m)):
        raise DimensionMismatch(
            f"node {spec.node_id}: known/unknown columns must partition the inputs")
    B_known = sys.B[:, list(spec.known_cols)]
    B_unknown = sys.B[:, list(spec.unknown_cols)]
    is_n1 = monitored_rank(spec.C @ B_unknown, tol) == monitored_rank(B_unknown, tol)
    decomp = decompose(sys.A, spec.C, B_unknown, spectral, tol)
    L, Abarbar = stabilizing_friend(
        sys.A, spec.C, decomp.W_g_star, spectral, tol,
        pole_targets=pole_targets, margin=margin,
        keep_invariant=(decomp.W_star,))
    A_cl = sys.A + L @ spec.C
    E = F = Abar_L = None
    if is_n1:
        E, F = solve_output_reconstruction(decomp.P_Wstar, spec.C, tol)
        Abar_L = decomp.P_Wstar @ A_cl @ decomp.P_Wstar.T
    return SensorNode(node_id=spec.node_id, C=spec.C, B_known=B_known,
                      B_unknown=B_unknown, known_cols=spec.known_cols,
                      unknown_cols=spec.unknown_cols,
                      node_class=N1 if is_n1 else N2, decomp=decomp, L=L,
                      A_cl=A_cl, Abarbar=Abarbar, E=E, F=F, Abar_L=Abar_L)


def _class_order(nodes):
    """Class-1 nodes first (ascending id), then class-2: the block convention."""
    n1 = sorted([nd for nd in nodes if nd.node_class == N1], key=lambda d: d.node_id)
    n2 = sorted([nd for nd in nodes if nd.node_class == N2], key=lambda d: d.node_id)
    return n1 + n2


def build_consensus_blocks(nodes):
    """Block-diagonal W_V and A_L in class order; returns (W_V, A_L, ordered nodes)."""
    ordered = _class_order(nodes)
    n = ordered[0].decomp.n
    blocks, ablocks = [], []
    for nd in ordered:
        blk = nd.consensus_block()
        blocks.append(blk if blk.size else np.zeros((n, 0)))
        ablocks.append(nd.coupling_restriction())
    W_V = sla.block_diag(*blocks) if blocks else np.zeros((0, 0))
    A_L = sla.block_diag(*ablocks) if ablocks else np.zeros((0, 0))
    # block_diag collapses empty blocks; fix the row count explicitly
    if W_V.shape[0] != n * len(ordered):
        W_V = np.zeros((n * len(ordered), sum(b.shape[1] for b in blocks)))
        c = 0
        for k, blk in enumerate(blocks):
            W_V[k * n:(k + 1) * n, c:c + blk.shape[1]] = blk
            c += blk.shape[1]
    return W_V, A_L, ordered


def _permuted_laplacian(graph: SensorGraph, nodes, ordered):
    ids = [nd.node_id for nd in nodes]
    perm = [ids.index(nd.node_id) for nd in ordered]
    L = graph.laplacian
    return L[np.ix_(perm, perm)]


def recoverability_intersection(nodes, tol: TolerancePolicy = DEFAULT_POLICY) -> Subspace:
    """Directions invisible to every node: ∩ Im V_i (class 1) ∩ W_g,j* (class 2)."""
    n = nodes[0].decomp.n
    inter = None
    for nd in nodes:
        blk = nd.consensus_block()
        sub = Subspace(n, blk, tol.rel_rank_tol)
        inter = sub if inter is None else intersect(inter, sub, tol)
        if inter.is_zero:
            break
    return inter


def joint_detectability_check(nodes, graph: SensorGraph,
                              tol: TolerancePolicy = DEFAULT_POLICY):
    """(ok, sigma_min_Q): Gram-matrix route, cross-checked by direct intersection."""
    W_V, _, ordered = build_consensus_blocks(nodes)
    if W_V.shape[1] == 0:
        sigma_min = np.inf
        gram_ok = True
    else:
        Lp = _permuted_laplacian(graph, nodes, ordered)
        n = ordered[0].decomp.n
        Q = W_V.T @ np.kron(Lp, np.eye(n)) @ W_V
        sigma_min = float(np.linalg.svd(Q, compute_uv=False).min())
        gram_ok = sigma_min > 1e-9
    subspace_ok = recoverability_intersection(nodes, tol).is_zero
    ok = graph.is_connected and gram_ok
    if graph.is_connected and gram_ok != subspace_ok:
        # The two routes disagree only in numerically marginal situations.
        ok = False
    return ok, sigma_min


def gain_bounds(nodes, graph: SensorGraph, u_bar_max: float,
                tol: TolerancePolicy = DEFAULT_POLICY):
    """Lower bounds (chi_min, gamma_min) for the consensus gains."""
    if u_bar_max < 0:
        raise ValueError("u_bar_max must be nonnegative")
    W_V, A_L, ordered = build_consensus_blocks(nodes)
    if W_V.shape[1] == 0:
        chi_min, sigma_min = 0.0, np.inf
    else:
        Lp = _permuted_laplacian(graph, nodes, ordered)
        n = ordered[0].decomp.n
        Q = W_V.T @ np.kron(Lp, np.eye(n)) @ W_V
        sigma_min = float(np.linalg.svd(Q, compute_uv=False).min())
        if sigma_min <= 1e-9:
            raise SingularQ(
                f"consensus Gram matrix is singular (sigma_min = {sigma_min:.2e})")
        chi_min = float(np.linalg.norm(A_L, 2)) / sigma_min if A_L.size else 0.0
    n2 = [nd for nd in ordered if nd.node_class == N2]
    if n2 and u_bar_max > 0:
        gamma_min = (u_bar_max
                     * max(np.linalg.norm(nd.B_unknown, 1) for nd in n2)
                     * max(np.linalg.norm(nd.Wg_basis, np.inf) for nd in n2))
    else:
        gamma_min = 0.0
    return chi_min, gamma_min, sigma_min


def synthesize_distributed(sys: LinSystem, node_specs, graph: SensorGraph,
                           spectral: SpectralPartition = SpectralPartition(),
                           safety: float = 1.1, u_bar_max: float = 0.0,
                           tol: TolerancePolicy = DEFAULT_POLICY,
                           pole_targets=None, margin: float = 0.5,
                           ) -> DistributedObserverNetwork:
    """Full networked synthesis with assumption checks and gain selection."""
    if safety < 1:
        raise ValueError("safety factor must be >= 1")
    if graph.n_nodes != len(node_specs):
        raise DimensionMismatch("graph size must match the number of nodes")
    if not graph.is_connected:
        raise AssumptionViolated(
            1, "communication graph is not connected",
            diagnostics={"algebraic_connectivity": graph.algebraic_connectivity})
    if u_bar_max < 0:
        raise AssumptionViolated(2, "unknown-input bound must be nonnegative",
                                 diagnostics={"u_bar_max": u_bar_max})
    nodes = tuple(per_node_decomposition(sys, spec, spectral, tol,
                                         pole_targets=pole_targets, margin=margin)
                  for spec in node_specs)
    inter = recoverability_intersection(nodes, tol)
    ok, sigma_min = joint_detectability_check(nodes, graph, tol)
    if not ok:
        raise AssumptionViolated(
            3, "jointly unrecoverable directions remain",
            diagnostics={"intersection_basis": inter.basis, "sigma_min_Q": sigma_min})
    chi_min, gamma_min, sigma_min = gain_bounds(nodes, graph, u_bar_max, tol)
    chi = safety * chi_min if chi_min > 0 else 0.1
    gamma = safety * gamma_min
    W_V, A_L, _ = build_consensus_blocks(nodes)
    return DistributedObserverNetwork(
        nodes=nodes, graph=graph, chi=chi, gamma=gamma, u_bar_max=u_bar_max,
        safety=safety, W_V_block=W_V, A_L_block=A_L,
        chi_min=chi_min, gamma_min=gamma_min, sigma_min_Q=sigma_min)


# ---------------------------------------------------------------------------
# Node dynamics (reference implementations; the simulator assembles the same
# maps into one operator).


def node_estimate_n1(node: SensorNode, z_i, y_i) -> np.ndarray:
    """xhat_i = E_i z_i + F_i y_i."""
    return node.E @ np.asarray(z_i, float) + node.F @ np.asarray(y_i, float)


def node_rhs_n1(node: SensorNode, z_i, y_i, u_i, neighbor_estimates, chi) -> np.ndarray:
    """Reduced-order node: quotient copy plus consensus drive along V_i."""
    if node.node_class != N1:
        raise DimensionMismatch("node is not class 1")
    z_i = np.asarray(z_i, float)
    y_i = np.asarray(y_i, float)
    u_i = np.asarray(u_i, float)
    xhat_i = node_estimate_n1(node, z_i, y_i)
    s = np.zeros(node.decomp.n)
    for xj in neighbor_estimates:
        s += np.asarray(xj, float) - xhat_i
    P = node.P_Wstar
    V = node.V
    return (node.Abar_L @ z_i - P @ (node.L @ y_i) + P @ (node.B_known @ u_i)
            + chi * (P @ V) @ (V.T @ s))


def node_rhs_n2(node: SensorNode, xhat_i, y_i, u_i, neighbor_estimates,
                chi, gamma, sign_fn=np.sign) -> np.ndarray:
    """Full-order node: local injection, linear consensus, sign coupling."""
    if node.node_class != N2:
        raise DimensionMismatch("node is not class 2")
    xhat_i = np.asarray(xhat_i, float)
    y_i = np.asarray(y_i, float)
    u_i = np.asarray(u_i, float)
    s = np.zeros(node.decomp.n)
    for xj in neighbor_estimates:
        s += np.asarray(xj, float) - xhat_i
    Wg = node.Wg_basis
    return (node.A_cl @ xhat_i - node.L @ y_i + node.B_known @ u_i
            + chi * Wg @ (Wg.T @ s) + gamma * Wg @ sign_fn(Wg.T @ s))
