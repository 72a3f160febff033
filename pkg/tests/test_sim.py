import dataclasses
import json
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from flexflock.config import ScenarioConfig, load_config, with_overrides
from flexflock.controller import ControllerConfig
from flexflock.errors import InvalidArgument, SimulationAborted
from flexflock.field import FieldModel, gradient, hessian
from flexflock.graph import EventKind, Mode, Topology
from flexflock.potential import PotentialKind
from flexflock.sim import (
    Dynamics,
    SimState,
    build,
    derivatives,
    initial_state,
    random_poses,
    run,
    simulate,
    step,
    wrap_angle,
)
from flexflock.spacing import SpacingParams

FIXTURE = json.loads((Path(__file__).parent / "fixtures" / "k5_step0.json").read_text())


def bowl_dynamics(**kw):
    return Dynamics(FieldModel.quadratic_bowl(), SpacingParams(), ControllerConfig(), **kw)


def equilibrium_pair():
    # gradients (0, 0) and (-2, 0) are exactly d_nom apart
    poses = np.array([[0.0, 0.0, 0.4], [1.0, 0.0, -1.0]])
    return initial_state(poses, Topology.static(2, [(0, 1)]), bowl_dynamics())


def test_wrap_angle():
    assert wrap_angle(math.pi) == pytest.approx(math.pi)
    assert wrap_angle(-math.pi) == pytest.approx(math.pi)
    assert wrap_angle(3 * math.pi / 2) == pytest.approx(-math.pi / 2)
    np.testing.assert_allclose(wrap_angle(np.array([0.0, 7.0])), [0.0, 7.0 - 2 * math.pi])


@given(st.floats(-1e4, 1e4))
def test_wrap_angle_range(theta):
    w = wrap_angle(theta)
    assert -math.pi < w <= math.pi
    assert math.isclose(math.cos(w), math.cos(theta), abs_tol=1e-9)


def test_dynamics_validation():
    with pytest.raises(InvalidArgument):
        bowl_dynamics(integrator="rk45")
    with pytest.raises(InvalidArgument):
        bowl_dynamics(engine="threads")


def test_equilibrium_has_zero_derivatives_and_does_not_move():
    state = equilibrium_pair()
    dp, dd, u = derivatives(state, bowl_dynamics())
    assert not dp.any() and not dd.any() and not u.any()
    new, events = step(state, 0.01, bowl_dynamics())
    np.testing.assert_array_equal(new.poses, state.poses)
    assert new.d == state.d and events == []
    with pytest.raises(InvalidArgument):
        step(state, 0.0, bowl_dynamics())


def test_single_agent_run_is_trivial():
    cfg = ScenarioConfig(name="solo", field="quadratic_bowl", n_agents=1, poses=[[0.3, -0.2, 1.0]], T=1.0, dt=0.01, record_every=10)
    trace = run(cfg)
    assert len(trace.times) == 11
    for P in trace.poses:
        np.testing.assert_array_equal(P, [[0.3, -0.2, 1.0]])
    assert all(m.n_edges == 0 and m.connected for m in trace.metrics)


def test_k5_step0_regression_fixture():
    state, dyn = build(load_config("static_k5_cubic"))
    np.testing.assert_allclose(state.poses, FIXTURE["poses"], rtol=0, atol=1e-15)
    dp, dd, u = derivatives(state, dyn)
    np.testing.assert_allclose(dp, FIXTURE["pose_rates"], rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(dd, FIXTURE["d_rates"], rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(u, FIXTURE["controls"], rtol=1e-12, atol=1e-12)


def test_k5_step0_agent0_by_hand():
    poses = np.array(FIXTURE["poses"])
    fld = FieldModel.cubic_bench()
    x, y, th = poses[0]
    X = [(-4 * px, -3 * py * py - 2) for px, py, _ in poses]
    s0 = math.exp(math.tanh((0.0 - 2.0) / 2))  # d starts at zero
    g = np.zeros(2)
    for j in range(1, 5):
        diff = np.subtract(X[j], X[0])
        m = math.hypot(*diff)
        g -= (m - 2.0 * s0) * diff / m
    Hg = np.array([[-4.0, 0.0], [0.0, -6.0 * y]]) @ g
    v = -0.25 * (math.cos(th) * Hg[0] + math.sin(th) * Hg[1])
    w = 0.25 * (math.sin(th) * Hg[0] - math.cos(th) * Hg[1])
    np.testing.assert_allclose(FIXTURE["controls"][0], [v, w], rtol=1e-12)
    np.testing.assert_allclose(FIXTURE["pose_rates"][0], [v * math.cos(th), v * math.sin(th), w], rtol=1e-12)
    np.testing.assert_allclose(hessian(fld, (x, y)), [[-4, 0], [0, -6 * y]])
    np.testing.assert_allclose(gradient(fld, poses[:, :2]), X)


def short_static(**overrides):
    cfg = load_config("static_k5_cubic")
    return with_overrides(cfg, **{"T": 1.0, "dt": 0.01, "record_every": 1000, **overrides})


def final_poses(cfg):
    return run(cfg).poses[-1]


def test_rk4_order_by_richardson():
    a, b, c = (final_poses(short_static(dt=dt)) for dt in (0.01, 0.005, 0.0025))
    order = math.log2(np.abs(a - b).max() / np.abs(b - c).max())
    assert order >= 3.5


def test_euler_differs_from_rk4_at_first_order():
    ref = final_poses(short_static(dt=0.0025))
    gap1 = np.abs(final_poses(short_static(integrator="euler", dt=0.01)) - ref).max()
    gap2 = np.abs(final_poses(short_static(integrator="euler", dt=0.005)) - ref).max()
    assert 1.7 < gap1 / gap2 < 2.3


def test_bus_engine_matches_vectorized_engine():
    state, dyn = build(short_static())
    bus = dataclasses.replace(dyn, engine="bus")
    a = simulate(state, dyn, 0.01, 0.2, 5)
    b = simulate(state, bus, 0.01, 0.2, 5)
    for Pa, Pb in zip(a.poses, b.poses):
        np.testing.assert_allclose(Pa, Pb, rtol=0, atol=1e-12)
    assert b.messages[0] == 20


def test_runs_are_deterministic():
    cfg = short_static(T=0.5)
    a, b = run(cfg), run(cfg)
    assert a.metrics == b.metrics
    for Pa, Pb in zip(a.poses, b.poses):
        assert (Pa == Pb).all()


def test_recording_schedule():
    trace = run(short_static(T=0.1, record_every=3))
    np.testing.assert_allclose(trace.times, [0.0, 0.03, 0.06, 0.09, 0.1], atol=1e-12)
    assert all(b > a for a, b in zip(trace.times, trace.times[1:]))


def test_dynamic_bookkeeping_and_fresh_edges():
    # three agents on a line in gradient space; the outer pair starts out of range
    poses = np.array([[0.0, 0.0, 0.0], [2.4, 0.0, 0.0], [5.1, 0.0, math.pi]])
    dyn = Dynamics(FieldModel.quadratic_bowl(), SpacingParams(), ControllerConfig(potential=PotentialKind.barrier(10.0)), d_init=2.0)
    state = initial_state(poses, Topology.dynamic(3, 10.0), dyn)
    assert set(state.d) == state.topo.edges == {(0, 1), (1, 2)}
    seen = []
    for _ in range(300):
        state, events = step(state, 1e-3, dyn)
        assert set(state.d) == state.topo.edges
        seen += events
        for ev in events:
            assert state.d[ev.edge] == 2.0
    assert [ev.edge for ev in seen] == [(0, 2)]
    assert seen[0].kind is EventKind.ADDED


def test_lost_edge_is_reported_and_dropped():
    # an edge whose gap already exceeds r (no barrier to stop it) is removed at the next boundary
    poses = np.array([[0.0, 0.0, 0.0], [6.0, 0.0, 0.0]])
    dyn = bowl_dynamics()
    topo = Topology(Mode.DYNAMIC, 2, {(0, 1)}, 10.0)
    state = SimState(0.0, poses, {(0, 1): 2.0}, topo)
    trace = simulate(state, dyn, 1e-3, 0.01, 5)
    assert [ev.kind for ev in trace.edge_events] == [EventKind.REMOVED_VIOLATION]
    assert trace.edge_events[0].time == pytest.approx(1e-3)
    assert trace.final.n_edges == 0 and not trace.final.connected
    assert trace.violations == trace.edge_events


def test_abort_carries_partial_trace():
    poses = np.array([[1.0, 1.0, 0.0], [1.0, 1.0, 0.0]])
    dyn = bowl_dynamics()
    state = SimState(0.0, poses, {(0, 1): 2.0}, Topology.static(2, [(0, 1)]))
    with pytest.raises(SimulationAborted) as info:
        simulate(state, dyn, 0.01, 1.0)
    assert info.value.trace.status == "aborted"
    assert "CollisionState" in info.value.trace.error


def test_random_poses_seeded_and_separated():
    fld = FieldModel.cubic_bench()
    a = random_poses(6, 11, radius=2.0, center=(1.0, -1.0), min_separation=0.5, fld=fld)
    b = random_poses(6, 11, radius=2.0, center=(1.0, -1.0), min_separation=0.5, fld=fld)
    assert (a == b).all()
    assert np.all(np.hypot(a[:, 0] - 1.0, a[:, 1] + 1.0) <= 2.0)
    X = gradient(fld, a[:, :2])
    gaps = np.hypot(*(X[:, None] - X[None]).transpose(2, 0, 1))
    assert gaps[np.triu_indices(6, 1)].min() >= 0.5
    assert not (random_poses(6, 12, min_separation=0.5) == a).all()
