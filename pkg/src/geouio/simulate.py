"""Deterministic fixed-step simulation of plant plus observers.

The centralized case is integrated in (x, zeta) coordinates, where
zeta = P_Wg x - z is the autonomous quotient error.  This is the same ODE as
the (x, z) form under a constant linear change of variables (fixed-step
Runge-Kutta commutes with such changes), but it keeps the error observable in
floating point even when the plant itself grows by many orders of magnitude.
The distributed case assembles all node dynamics into one linear operator
plus per-node sign couplings, evaluated against the step-begin snapshot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .central import CentralizedObserver, InputPartition, LinSystem
from .distributed import N1, DistributedObserverNetwork
from .errors import DimensionMismatch, NonFiniteState

SIGNAL_KINDS = ("sin", "cos", "const")


@dataclass(frozen=True)
class SignalSpec:
    """One input channel: amplitude * kind(frequency * t + phase)."""

    kind: str
    amplitude: float = 1.0
    frequency: float = 1.0
    phase: float = 0.0

    def __post_init__(self):
        if self.kind not in SIGNAL_KINDS:
            raise DimensionMismatch(f"unknown signal kind {self.kind!r}")

    def __call__(self, t: float) -> float:
        if self.kind == "sin":
            return self.amplitude * math.sin(self.frequency * t + self.phase)
        if self.kind == "cos":
            return self.amplitude * math.cos(self.frequency * t + self.phase)
        return self.amplitude


def eval_signals(specs, t: float) -> np.ndarray:
    """Stack the channel values at time t."""
    return np.array([s(t) for s in specs], dtype=float)


@dataclass(frozen=True)
class SimConfig:
    """Fixed-step integration settings."""

    t_end: float
    x0: np.ndarray
    dt: float = 1e-3
    method: str = "rk4"
    sign_mode: str = "boundary_layer"
    eps_bl: float = 1e-3
    observer_init: tuple | None = None   # per-observer initial states; zeros if None
    record_stride: int = 1
    divergence_guard: float = 1e12

    def __post_init__(self):
        object.__setattr__(self, "x0", np.asarray(self.x0, dtype=float).ravel())
        if not (self.t_end > 0):
            raise DimensionMismatch("t_end must be positive")
        if not (0 < self.dt < self.t_end):
            raise DimensionMismatch("dt must satisfy 0 < dt < t_end")
        if self.method not in ("euler", "rk4"):
            raise DimensionMismatch(f"unknown method {self.method!r}")
        if self.sign_mode not in ("exact", "boundary_layer"):
            raise DimensionMismatch(f"unknown sign_mode {self.sign_mode!r}")
        if self.sign_mode == "boundary_layer" and not (self.eps_bl > 0):
            raise DimensionMismatch("eps_bl must be positive")
        if not (isinstance(self.record_stride, int) and self.record_stride >= 1):
            raise DimensionMismatch("record_stride must be a positive integer")

    def sign_fn(self):
        if self.sign_mode == "exact":
            return np.sign
        eps = self.eps_bl
        return lambda v: np.clip(v / eps, -1.0, 1.0)


@dataclass(frozen=True)
class Trajectory:
    """Recorded run: times, plant state, per-observer estimates and errors.

    ``quotient_err`` holds each observer's autonomous quotient-error block
    (the coordinate whose dynamics are governed by the stable induced map);
    ``quotient_maps`` carries those induced maps for conformance checks.
    """

    times: np.ndarray
    x: np.ndarray
    xhat: tuple
    err_norm: tuple
    labels: tuple
    quotient_err: tuple
    quotient_maps: tuple

    def __post_init__(self):
        T = len(self.times)
        if self.x.shape[0] != T or any(h.shape[0] != T for h in self.xhat):
            raise DimensionMismatch("trajectory arrays must share their length")


def _integrate(f, s0, cfg: SimConfig, n_steps: int):
    """Fixed-step integration collecting every ``record_stride``-th state."""
    dt = cfg.dt
    s = np.asarray(s0, dtype=float)
    recs = [s.copy()]
    guard = cfg.divergence_guard
    t = 0.0
    rk4 = cfg.method == "rk4"
    for k in range(n_steps):
        if rk4:
            k1 = f(t, s)
            k2 = f(t + 0.5 * dt, s + 0.5 * dt * k1)
            k3 = f(t + 0.5 * dt, s + 0.5 * dt * k2)
            k4 = f(t + dt, s + dt * k3)
            s = s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        else:
            s = s + dt * f(t, s)
        t = (k + 1) * dt
        if not np.all(np.isfinite(s)) or np.abs(s).max() > guard:
            raise NonFiniteState(
                f"state left the bounded region at t = {t:.6g} "
                f"(max |state| > {guard:.3g} or non-finite)", t=t)
        if (k + 1) % cfg.record_stride == 0:
            recs.append(s.copy())
    return np.asarray(recs)


def _n_steps(cfg: SimConfig) -> int:
    return int(math.floor(cfg.t_end / cfg.dt + 1e-9))


def simulate_centralized(sys: LinSystem, part: InputPartition,
                         obs: CentralizedObserver, signals,
                         cfg: SimConfig) -> Trajectory:
    """Integrate the plant and the observer's quotient error jointly."""
    n = sys.n
    if len(signals) != sys.m:
        raise DimensionMismatch("need one signal per input channel")
    if cfg.x0.size != n:
        raise DimensionMismatch("x0 dimension mismatch")
    if cfg.observer_init is None:
        z0 = np.zeros(obs.z_dim)
    else:
        z0 = np.asarray(cfg.observer_init[0], dtype=float).ravel()
        if z0.size != obs.z_dim:
            raise DimensionMismatch(
                f"observer initial state must have length {obs.z_dim}")
    zeta0 = obs.P_Wg @ cfg.x0 - z0
    A, B = sys.A, sys.B
    Abar = obs.Abar_L

    def f(t, s):
        u = eval_signals(signals, t)
        return np.concatenate([A @ s[:n] + B @ u, Abar @ s[n:]])

    recs = _integrate(f, np.concatenate([cfg.x0, zeta0]), cfg, _n_steps(cfg))
    kept = recs.shape[0]
    times = np.arange(kept) * (cfg.dt * cfg.record_stride)
    x = recs[:, :n]
    zeta = recs[:, n:]
    err = zeta @ obs.E.T            # e = E zeta, by the reconstruction identity
    xhat = x - err
    err_norm = np.linalg.norm(err, axis=1)
    return Trajectory(times=times, x=x, xhat=(xhat,), err_norm=(err_norm,),
                      labels=("node1",), quotient_err=(zeta,),
                      quotient_maps=(Abar,))


class _AssembledNetwork:
    """Precomputed linear operator + sign lifts for one observer network."""

    def __init__(self, sys: LinSystem, net: DistributedObserverNetwork, signals):
        n, m = sys.n, sys.m
        if len(signals) != m:
            raise DimensionMismatch("need one signal per input channel")
        self.sys, self.net, self.signals = sys, net, signals
        nodes = net.nodes
        offs, o = [], n
        for nd in nodes:
            offs.append(o)
            o += nd.z_dim
        self.dim, self.offsets = o, offs
        # estimate maps: xhat_i = H_i s
        H = []
        for nd, off in zip(nodes, offs):
            Hi = np.zeros((n, self.dim))
            if nd.node_class == N1:
                Hi[:, :n] = nd.F @ nd.C
                Hi[:, off:off + nd.z_dim] = nd.E
            else:
                Hi[:, off:off + n] = np.eye(n)
            H.append(Hi)
        self.H = H
        adj = net.graph.adjacency
        cons = []
        for i, nd in enumerate(nodes):
            Ki = -adj[i].sum() * H[i]
            for j in range(len(nodes)):
                if adj[i, j]:
                    Ki = Ki + H[j]
            cons.append(Ki)
        M = np.zeros((self.dim, self.dim))
        G = np.zeros((self.dim, m))
        M[:n, :n] = sys.A
        G[:n, :] = sys.B
        self.sign_K, self.sign_lift = [], []
        for i, (nd, off) in enumerate(zip(nodes, offs)):
            sel = np.zeros((len(nd.known_cols), m))
            for r, c in enumerate(nd.known_cols):
                sel[r, c] = 1.0
            if nd.node_class == N1:
                P, V = nd.P_Wstar, nd.V
                M[off:off + nd.z_dim, :n] -= P @ (nd.L @ nd.C)
                M[off:off + nd.z_dim, off:off + nd.z_dim] += nd.Abar_L
                M[off:off + nd.z_dim, :] += net.chi * (P @ V) @ (V.T @ cons[i])
                G[off:off + nd.z_dim, :] = P @ nd.B_known @ sel
            else:
                Wg = nd.Wg_basis
                M[off:off + n, :n] -= nd.L @ nd.C
                M[off:off + n, off:off + n] += nd.A_cl
                M[off:off + n, :] += net.chi * Wg @ (Wg.T @ cons[i])
                G[off:off + n, :] = nd.B_known @ sel
                if Wg.shape[1]:
                    self.sign_K.append(Wg.T @ cons[i])
                    lift = np.zeros((self.dim, Wg.shape[1]))
                    lift[off:off + n, :] = net.gamma * Wg
                    self.sign_lift.append(lift)
        self.M, self.G = M, G

    def initial_state(self, cfg: SimConfig) -> np.ndarray:
        s0 = np.zeros(self.dim)
        n = self.sys.n
        s0[:n] = cfg.x0
        if cfg.observer_init is not None:
            if len(cfg.observer_init) != len(self.net.nodes):
                raise DimensionMismatch("need one initial state per node")
            for nd, off, v in zip(self.net.nodes, self.offsets, cfg.observer_init):
                v = np.asarray(v, dtype=float).ravel()
                if v.size != nd.z_dim:
                    raise DimensionMismatch(
                        f"node {nd.node_id} initial state must have length {nd.z_dim}")
                s0[off:off + nd.z_dim] = v
        return s0

    def rhs(self, sign_fn):
        M, G, signals = self.M, self.G, self.signals
        pairs = list(zip(self.sign_lift, self.sign_K))

        def f(t, s):
            ds = M @ s + G @ eval_signals(signals, t)
            for lift, K in pairs:
                ds = ds + lift @ sign_fn(K @ s)
            return ds

        return f


def simulate_distributed(sys: LinSystem, net: DistributedObserverNetwork,
                         signals, cfg: SimConfig) -> Trajectory:
    """Synchronous-snapshot integration of the plant and every node."""
    if cfg.x0.size != sys.n:
        raise DimensionMismatch("x0 dimension mismatch")
    asm = _AssembledNetwork(sys, net, signals)
    recs = _integrate(asm.rhs(cfg.sign_fn()), asm.initial_state(cfg), cfg,
                      _n_steps(cfg))
    kept = recs.shape[0]
    times = np.arange(kept) * (cfg.dt * cfg.record_stride)
    n = sys.n
    x = recs[:, :n]
    xhat, err_norm, labels, q_err, q_maps = [], [], [], [], []
    for nd, off, Hi in zip(net.nodes, asm.offsets, asm.H):
        est = recs @ Hi.T
        xhat.append(est)
        err_norm.append(np.linalg.norm(x - est, axis=1))
        labels.append(f"node{nd.node_id}")
        q = nd.P_Wg.shape[0]
        if nd.node_class == N1:
            # leading block of (P_Wstar x - z): the chart stacks [P_Wg; V^T]
            qe = x @ nd.P_Wg.T - recs[:, off:off + q]
        else:
            qe = (x - est) @ nd.P_Wg.T
        q_err.append(qe)
        q_maps.append(nd.Abarbar)
    return Trajectory(times=times, x=x, xhat=tuple(xhat),
                      err_norm=tuple(err_norm), labels=tuple(labels),
                      quotient_err=tuple(q_err), quotient_maps=tuple(q_maps))


def error_metrics(traj: Trajectory, tol: float = 1e-2,
                  t_star: float | None = None) -> dict:
    """Final error, time-to-tolerance and tail sup-norm, per observer."""
    out = {}
    times = traj.times
    if t_star is None:
        t_star = 0.75 * times[-1]
    tail = times >= t_star
    for label, err in zip(traj.labels, traj.err_norm):
        above = np.nonzero(err >= tol)[0]
        if above.size == 0:
            t_tol = float(times[0])
        elif above[-1] + 1 < len(times):
            t_tol = float(times[above[-1] + 1])
        else:
            t_tol = None  # never settles below tol
        out[label] = {
            "final_err": float(err[-1]),
            "time_to_tolerance": t_tol,
            "tolerance": tol,
            "sup_err_after_t_star": float(err[tail].max()),
            "t_star": float(t_star),
        }
    out["max_final_err"] = float(max(err[-1] for err in traj.err_norm))
    return out
