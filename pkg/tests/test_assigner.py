from __future__ import annotations

import pytest

from taskmpc.assigner import PV_LIMIT, assign, initial_state, target_ocp
from taskmpc.errors import NoAdjacentLane, SchemaMismatch
from taskmpc.iocp import make_iocp
from taskmpc.ocp import PrimitiveKind
from taskmpc.primitives import PvState
from taskmpc.world import EgoState, LaneGeometry, TaskCommand, Vehicle, WorldState


def make_world(ego_lane=1, ego_x=0.0, vehicles=(), lanes=LaneGeometry()):
    ego = EgoState(x=ego_x, y=lanes.center(ego_lane), theta=0.0, v=22.0)
    vs = tuple(
        Vehicle(vid=i, state=PvState(x=x, y=lanes.center(lane), vx=v, vy=0.0),
                lane=lane, desired_speed=v)
        for i, (x, lane, v) in enumerate(vehicles)
    )
    return WorldState(ego=ego, vehicles=vs, lanes=lanes, t=0.0)


def kinds(primitives):
    return [p.kind for p in primitives]


def names(primitives):
    return [p.name for p in primitives]


class TestAssignRules:
    def test_idle_far_lead_uses_constant_speed(self, ego, task):
        world = make_world(vehicles=[(100.0, 1, 20.0)])  # gap 100 > 2*d_acc
        prims = assign(TaskCommand.IDLE, world, ego, task)
        assert "cs" in names(prims)
        assert not any(n.startswith("acc") for n in names(prims))
        assert "lk@lane1" in names(prims)

    def test_idle_close_lead_uses_acc(self, ego, task):
        world = make_world(vehicles=[(30.0, 1, 20.0)])  # gap 30 <= 40
        prims = assign(TaskCommand.IDLE, world, ego, task)
        assert any(n.startswith("acc@0") for n in names(prims))

    def test_threshold_is_twice_target_gap(self, ego, task):
        at = make_world(vehicles=[(2 * task.d_acc, 1, 20.0)])
        beyond = make_world(vehicles=[(2 * task.d_acc + 0.01, 1, 20.0)])
        assert any(n.startswith("acc") for n in names(assign(TaskCommand.IDLE, at, ego, task)))
        assert not any(
            n.startswith("acc") for n in names(assign(TaskCommand.IDLE, beyond, ego, task))
        )

    def test_lane_change_targets_adjacent_center(self, ego, task):
        world = make_world(ego_lane=1, vehicles=[(20.0, 0, 20.0)])
        prims = assign(TaskCommand.LANE_LEFT, world, ego, task)
        assert "lc@lane0" in names(prims)

    def test_lane_left_from_leftmost_rejected(self, ego, task):
        world = make_world(ego_lane=0)
        with pytest.raises(NoAdjacentLane):
            assign(TaskCommand.LANE_LEFT, world, ego, task)

    def test_kbm_exactly_once_and_one_of_each_task_kind(self, ego, task, rng):
        for _ in range(30):
            n = int(rng.integers(0, 9))
            vehicles = [
                (float(rng.uniform(-80, 80)), int(rng.integers(0, 3)), 20.0)
                for _ in range(n)
            ]
            world = make_world(ego_lane=1, vehicles=vehicles)
            cmd = [TaskCommand.IDLE, TaskCommand.LANE_LEFT, TaskCommand.LANE_RIGHT][
                int(rng.integers(0, 3))
            ]
            prims = assign(cmd, world, ego, task)
            ks = kinds(prims)
            assert ks.count(PrimitiveKind.EGO_DYNAMICS) == 1
            assert ks.count(PrimitiveKind.LATERAL) == 1
            assert ks.count(PrimitiveKind.LONGITUDINAL) == 1

    def test_pv_cap_six_nearest(self, ego, task):
        # Nine vehicles in range with CS longitudinal (no tracked lead):
        # exactly the six nearest by Euclidean distance become clearance blocks.
        vehicles = [(50.0 + 1.0 * i, 0, 20.0) for i in range(9)]
        world = make_world(ego_lane=2, vehicles=vehicles)
        prims = assign(TaskCommand.IDLE, world, ego, task)
        pv_names = [n for n in names(prims) if n.startswith("pv")]
        assert len(pv_names) == PV_LIMIT
        assert pv_names == [f"pv{i}" for i in range(6)]  # nearest six

    def test_pv_selection_permutation_stable(self, ego, task, rng):
        base = [
            (float(rng.uniform(-50, 50)), int(rng.integers(0, 3)), 20.0) for _ in range(8)
        ]
        world = make_world(vehicles=base)
        ref = [n for n in names(assign(TaskCommand.IDLE, world, ego, task)) if n.startswith("pv")]
        perm = list(world.vehicles)
        rng.shuffle(perm)
        shuffled = WorldState(ego=world.ego, vehicles=tuple(perm), lanes=world.lanes, t=0.0)
        out = [n for n in names(assign(TaskCommand.IDLE, shuffled, ego, task)) if n.startswith("pv")]
        assert out == ref

    def test_tracked_vehicles_forced_into_pv_set(self, ego, task):
        # Six decoys nearer than the lead: the lead's block must still be present.
        vehicles = [(6.0 + i, 0, 20.0) for i in range(6)] + [(35.0, 1, 18.0)]
        world = make_world(ego_lane=1, vehicles=vehicles)
        prims = assign(TaskCommand.IDLE, world, ego, task)
        pv_names = [n for n in names(prims) if n.startswith("pv")]
        assert len(pv_names) == PV_LIMIT
        assert "pv6" in pv_names  # the followed lead
        assert any(n.startswith("acc@6") for n in names(prims))

    def test_symmetric_lane_changes_from_middle(self, ego, task):
        world = make_world(ego_lane=1)
        left = assign(TaskCommand.LANE_LEFT, world, ego, task)
        right = assign(TaskCommand.LANE_RIGHT, world, ego, task)
        y_left = [p for p in left if p.kind is PrimitiveKind.LATERAL][0]
        y_right = [p for p in right if p.kind is PrimitiveKind.LATERAL][0]
        # names carry the lane; references sit one lane either side
        assert y_left.name == "lc@lane0" and y_right.name == "lc@lane2"


class TestTargetOcp:
    def test_lane_left_provenance(self, ego, task):
        world = make_world(ego_lane=1, vehicles=[(25.0, 0, 20.0)])
        ocp = target_ocp(TaskCommand.LANE_LEFT, world, ego, task, 20, 0.05)
        assert any(p.startswith("lc@lane0") for p in ocp.provenance)

    def test_deterministic_provenance(self, ego, task, rng):
        vehicles = [
            (float(rng.uniform(-50, 50)), int(rng.integers(0, 3)), 20.0) for _ in range(7)
        ]
        world = make_world(vehicles=vehicles)
        a = target_ocp(TaskCommand.IDLE, world, ego, task, 20, 0.05)
        b = target_ocp(TaskCommand.IDLE, world, ego, task, 20, 0.05)
        assert a.provenance == b.provenance

    def test_n_g_matches_per_row_arithmetic(self, ego, task):
        # KBM 0 + LC 5 + ACC 3 + one PV each: table-row sums.
        world = make_world(
            ego_lane=1, vehicles=[(25.0, 1, 20.0), (30.0, 0, 20.0)]
        )
        ocp = target_ocp(TaskCommand.LANE_LEFT, world, ego, task, 20, 0.05)
        assert ocp.n_g == 0 + 5 + 3 + 2 * 1

    def test_committed_lane_overrides_current(self, ego, task):
        world = make_world(ego_lane=1)
        ocp = target_ocp(
            TaskCommand.LANE_RIGHT, world, ego, task, 20, 0.05, committed_lane=2
        )
        assert any(p.startswith("lc@lane2") for p in ocp.provenance)


class TestInitialState:
    def test_resolves_ego_and_pv_blocks(self, ego, task):
        world = make_world(ego_lane=1, vehicles=[(25.0, 1, 20.0)])
        ocp = target_ocp(TaskCommand.IDLE, world, ego, task, 20, 0.05)
        x0 = initial_state(ocp, world)
        assert x0[ocp.state_names.index("x")] == world.ego.x
        assert x0[ocp.state_names.index("v")] == world.ego.v
        assert x0[ocp.state_names.index("pv0.x")] == 25.0

    def test_resolves_bridge_prefixes_from_fresh_observation(self, ego, task):
        world = make_world(ego_lane=1, vehicles=[(25.0, 1, 20.0)])
        prev = target_ocp(TaskCommand.IDLE, world, ego, task, 20, 0.05)
        target = target_ocp(TaskCommand.LANE_LEFT, world, ego, task, 20, 0.05)
        bridge = make_iocp(prev, target)
        x0 = initial_state(bridge, world)
        i_prev = bridge.state_names.index("prev:x")
        i_target = bridge.state_names.index("target:x")
        assert x0[i_prev] == x0[i_target] == world.ego.x

    def test_unknown_component_rejected(self, ego, task, box):
        from taskmpc.ocp import build_ocp
        from taskmpc.primitives import make_kbm, make_pv_safety

        world = make_world()
        ocp = build_ocp(
            [make_kbm(ego), make_pv_safety(ego, task, PvState(1, 1, 1, 0), label="99")],
            20, 0.05, box,
        )
        with pytest.raises(SchemaMismatch):
            initial_state(ocp, world)  # vehicle 99 is not in the scene
