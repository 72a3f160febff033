"""Coupled integration of agent poses and per-edge spacing states.

Each step runs sense -> exchange -> control -> integrate -> retopologize.
Controls are recomputed at every integrator stage; the edge set is frozen
within a step and re-evaluated only at step boundaries.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import metrics
from .bus import message_count, publish_all
from .controller import AgentState, ControllerConfig, agent_step_inputs, batch_controls
from .errors import FlockError, InvalidArgument, SimulationAborted
from .field import FieldModel, gradient, hessian
from .graph import EdgeEvent, EventKind, Mode, Topology, update_edges
from .spacing import EdgeState, SpacingParams, d_rate, edge_state, fixed_edge_state, scaling_factor

log = logging.getLogger(__name__)

__all__ = [
    "AgentState",
    "Dynamics",
    "SimState",
    "SimTrace",
    "derivatives",
    "step",
    "run",
    "random_poses",
    "wrap_angle",
]


def wrap_angle(theta):
    """Map angles to (-pi, pi]."""
    out = np.pi - np.mod(np.pi - np.asarray(theta, dtype=float), 2 * np.pi)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class Dynamics:
    """Everything that stays fixed over a run."""

    field: FieldModel
    spacing: SpacingParams
    control: ControllerConfig
    d_init: float = 2.0
    adaptive: bool = True  # False gives the fixed-spacing baseline (s == 1)
    integrator: str = "rk4"
    engine: str = "vectorized"  # or "bus": per-agent evaluation through mailboxes

    def __post_init__(self):
        if self.integrator not in ("rk4", "euler"):
            raise InvalidArgument(f"unknown integrator {self.integrator!r}")
        if self.engine not in ("vectorized", "bus"):
            raise InvalidArgument(f"unknown engine {self.engine!r}")


@dataclass
class SimState:
    t: float
    poses: np.ndarray  # (N, 3): x, y, unwrapped theta
    d: dict  # canonical edge -> auxiliary spacing state
    topo: Topology
    step_index: int = 0

    @property
    def n_agents(self):
        return len(self.poses)

    def edge_arrays(self):
        edges = sorted(self.d)
        ei = np.array([e[0] for e in edges], dtype=int)
        ej = np.array([e[1] for e in edges], dtype=int)
        dvals = np.array([self.d[e] for e in edges], dtype=float)
        return edges, ei, ej, dvals

    def gradients(self, dyn: Dynamics):
        return gradient(dyn.field, self.poses[:, :2])

    def edge_states(self, dyn: Dynamics):
        X = self.gradients(dyn)
        out = {}
        for (i, j), d in sorted(self.d.items()):
            gap = float(np.hypot(*(X[j] - X[i])))
            out[(i, j)] = edge_state(d, gap, dyn.spacing) if dyn.adaptive else fixed_edge_state(gap, dyn.spacing)
        return out


def _desired_gaps(dyn, dvals):
    if dyn.adaptive:
        return dyn.spacing.d_nom * scaling_factor(dvals, dyn.spacing)
    return np.full(len(dvals), dyn.spacing.d_nom)


def _bus_controls(dyn, poses, X, H, edges, D_star, step_index):
    n = len(poses)
    view = Topology.static(n, edges)
    mailboxes = publish_all(X, step_index, view)
    D = dict(zip(edges, D_star))
    v = np.zeros(n)
    omega = np.zeros(n)
    for i in range(n):
        mem = {}
        for sample in mailboxes[i]:
            gap_star = D[(min(i, sample.sender), max(i, sample.sender))]
            mem[sample.sender] = EdgeState(d=math.nan, s=gap_star / dyn.spacing.d_nom, D_star=gap_star, mu=math.nan, e=math.nan)
        pose = AgentState(*poses[i])
        v[i], omega[i] = agent_step_inputs(pose, X[i], H[i], mailboxes[i], mem, dyn.control)
    return v, omega


def _rates(dyn, poses, dvals, edges, ei, ej, step_index=0):
    xy = poses[:, :2]
    theta = poses[:, 2]
    X = gradient(dyn.field, xy)
    H = hessian(dyn.field, xy)
    D_star = _desired_gaps(dyn, dvals)
    v, omega, _, mu, e = batch_controls(theta, X, H, ei, ej, D_star, dyn.control)
    if dyn.engine == "bus":
        v, omega = _bus_controls(dyn, poses, X, H, edges, D_star, step_index)
    dposes = np.column_stack([v * np.cos(theta), v * np.sin(theta), omega])
    dd = d_rate(e) if dyn.adaptive else np.zeros(len(dvals))
    return dposes, dd, v, omega


def derivatives(state: SimState, dyn: Dynamics):
    """Time derivatives of the poses (N, 3) and of d (ordered by sorted edge)
    together with the controls (N, 2) that produce them."""
    edges, ei, ej, dvals = state.edge_arrays()
    dposes, dd, v, omega = _rates(dyn, state.poses, dvals, edges, ei, ej, state.step_index)
    return dposes, dd, np.column_stack([v, omega])


def _scheme(f, p0, d0, dt, integrator):
    if integrator == "euler":
        dp, dd = f(p0, d0)
        return p0 + dt * dp, d0 + dt * dd
    k1p, k1d = f(p0, d0)
    k2p, k2d = f(p0 + 0.5 * dt * k1p, d0 + 0.5 * dt * k1d)
    k3p, k3d = f(p0 + 0.5 * dt * k2p, d0 + 0.5 * dt * k2d)
    k4p, k4d = f(p0 + dt * k3p, d0 + dt * k3d)
    p1 = p0 + dt / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p)
    d1 = d0 + dt / 6.0 * (k1d + 2 * k2d + 2 * k3d + k4d)
    return p1, d1


def step(state: SimState, dt: float, dyn: Dynamics):
    """Advance one step; returns the new state and any edge events at the new time.

    The edge set stays frozen for the whole step and is re-evaluated once at
    the new time.
    """
    if not dt > 0:
        raise InvalidArgument(f"dt must be positive, got {dt}")
    edges, ei, ej, d0 = state.edge_arrays()
    k = state.step_index

    def f(p, d):
        dp, dd, _, _ = _rates(dyn, p, d, edges, ei, ej, k)
        return dp, dd

    with np.errstate(over="ignore", invalid="ignore"):
        p1, d1 = _scheme(f, state.poses, d0, dt, dyn.integrator)
    if not (np.all(np.isfinite(p1)) and np.all(np.isfinite(d1))):
        raise InvalidArgument(f"non-finite state after the step at t={state.t:.6g}")

    new = SimState(
        t=state.t + dt,
        poses=p1,
        d=dict(zip(edges, (float(x) for x in d1))),
        topo=state.topo.copy(),
        step_index=k + 1,
    )
    events = []
    if new.topo.mode is Mode.DYNAMIC:
        events = update_edges(new.topo, new.gradients(dyn), new.t)
        for ev in events:
            if ev.kind is EventKind.ADDED:
                new.d[ev.edge] = dyn.d_init
            else:
                log.warning("edge %s left range at t=%.6g", ev.edge, ev.time)
                del new.d[ev.edge]
    return new, events


@dataclass
class SimTrace:
    n_agents: int
    edge_events: list = field(default_factory=list)
    times: list = field(default_factory=list)
    poses: list = field(default_factory=list)
    controls: list = field(default_factory=list)
    edges: list = field(default_factory=list)  # per record: {edge: EdgeState}
    metrics: list = field(default_factory=list)
    messages: list = field(default_factory=list)
    # extremes of s and D* over every integrator step, not just recorded ones
    s_min: float = math.inf
    s_max: float = -math.inf
    D_min: float = math.inf
    D_max: float = -math.inf
    status: str = "ok"
    error: Optional[str] = None

    @property
    def violations(self):
        return [ev for ev in self.edge_events if ev.kind is EventKind.REMOVED_VIOLATION]

    @property
    def final(self):
        return self.metrics[-1]

    def record(self, state: SimState, dyn: Dynamics):
        _, _, u = derivatives(state, dyn)
        edges = state.edge_states(dyn)
        self.times.append(state.t)
        self.poses.append(state.poses.copy())
        self.controls.append(u)
        self.edges.append(edges)
        self.messages.append(2 * len(edges))
        self.metrics.append(metrics.snapshot(state, u, dyn, edges))

    def track_bounds(self, state: SimState, dyn: Dynamics):
        if not state.d or not dyn.adaptive:
            return
        s = scaling_factor(np.fromiter(state.d.values(), float), dyn.spacing)
        self.s_min = min(self.s_min, float(s.min()))
        self.s_max = max(self.s_max, float(s.max()))
        self.D_min = min(self.D_min, dyn.spacing.d_nom * float(s.min()))
        self.D_max = max(self.D_max, dyn.spacing.d_nom * float(s.max()))


def initial_state(poses, topo: Topology, dyn: Dynamics) -> SimState:
    poses = np.asarray(poses, dtype=float).reshape(-1, 3)
    topo = topo.copy()
    if topo.mode is Mode.DYNAMIC:
        update_edges(topo, gradient(dyn.field, poses[:, :2]), 0.0)
    return SimState(0.0, poses, {e: dyn.d_init for e in sorted(topo.edges)}, topo)


def simulate(state: SimState, dyn: Dynamics, dt: float, T: float, record_every: int = 1) -> SimTrace:
    """Integrate from ``state`` to time T, recording every ``record_every``-th step.

    On any runtime violation the partial trace is attached to the raised
    :class:`SimulationAborted`.
    """
    n_steps = int(round(T / dt))
    if n_steps < 0 or record_every < 1:
        raise InvalidArgument("T must be non-negative and record_every >= 1")
    trace = SimTrace(state.n_agents)
    try:
        trace.track_bounds(state, dyn)
        trace.record(state, dyn)
        for k in range(1, n_steps + 1):
            state, events = step(state, dt, dyn)
            trace.edge_events.extend(events)
            trace.track_bounds(state, dyn)
            if k % record_every == 0 or k == n_steps or events:
                trace.record(state, dyn)
    except FlockError as exc:
        trace.status = "aborted"
        trace.error = f"{type(exc).__name__}: {exc}"
        log.error("run aborted at t=%.6g: %s", state.t, trace.error)
        raise SimulationAborted(exc, trace) from exc
    return trace


def build(config):
    """Turn a validated scenario config into ``(initial SimState, Dynamics)``."""
    spacing = SpacingParams(config.d_nom, config.lam)
    dyn = Dynamics(
        field=config.field_model(),
        spacing=spacing,
        control=ControllerConfig(config.K_f, config.potential_kind(), config.edge_force),
        d_init=config.d_init_value(),
        adaptive=config.spacing == "asp",
        integrator=config.integrator,
    )
    return initial_state(config.resolve_poses(), config.initial_topology(), dyn), dyn


def run(config) -> SimTrace:
    state, dyn = build(config)
    return simulate(state, dyn, config.dt, config.T, config.record_every)


def random_poses(n, seed, radius=1.0, center=(0.0, 0.0), min_separation=0.0, fld=None, max_tries=100_000):
    """Seeded uniform poses in a disc whose gradients are pairwise at least
    ``min_separation`` apart (in gradient space when ``fld`` is given)."""
    rng = np.random.default_rng(seed)
    fld = fld or FieldModel.quadratic_bowl()
    chosen, grads = [], []
    for _ in range(max_tries):
        if len(chosen) == n:
            break
        rho = radius * math.sqrt(rng.uniform())
        phi = rng.uniform(-math.pi, math.pi)
        x, y = center[0] + rho * math.cos(phi), center[1] + rho * math.sin(phi)
        g = gradient(fld, (x, y))
        if all(np.hypot(*(g - h)) >= min_separation for h in grads):
            chosen.append((x, y, rng.uniform(-math.pi, math.pi)))
            grads.append(g)
    if len(chosen) < n:
        raise InvalidArgument(f"could not place {n} agents with gradient separation {min_separation}")
    return np.array(chosen)
