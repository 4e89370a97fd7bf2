"""Rule-based mapping from a task command and the observed scene to a problem.

Every assignment carries the ego-dynamics primitive, exactly one lateral and
one longitudinal task primitive, and a clearance primitive per nearby vehicle
(nearest six, ties broken by vehicle id). Adaptive cruise replaces constant
speed once the same-lane lead is within twice the target gap.
"""

from __future__ import annotations

import re
from dataclasses import replace

import numpy as np

from .errors import SchemaMismatch
from .ocp import Array, MpcPrimitive, Ocp, build_ocp
from .primitives import (
    EgoParams,
    TaskParams,
    make_acc,
    make_constant_speed,
    make_kbm,
    make_lane_change,
    make_lane_keep,
    make_pv_safety,
)
from .world import MPC_COMMANDS, TaskCommand, WorldState, lead_vehicle, nearest_in_lane

PV_LIMIT = 6
PV_RANGE = 60.0  # longitudinal window for clearance primitives [m]

_PV_NAME = re.compile(r"pv(\d+)\.(x|y|vx|vy)")


def assign(
    cmd: TaskCommand,
    world: WorldState,
    ego_params: EgoParams,
    task: TaskParams,
    committed_lane: int | None = None,
) -> list[MpcPrimitive]:
    """Select the primitive set for one command in one scene.

    A lateral command resolves to a concrete target lane; callers that hold a
    command across several steps pass the lane they resolved at decision time
    as ``committed_lane`` so mid-maneuver lane flips do not re-target.
    """
    if cmd not in MPC_COMMANDS:
        raise ValueError(f"{cmd} is not a motion-planning command")
    ego = world.ego
    lanes = world.lanes
    current = world.ego_lane()

    tracked: list[int] = []  # vehicles whose predicted state a task primitive reads

    if cmd is TaskCommand.IDLE:
        lane = committed_lane if committed_lane is not None else current
        lateral = make_lane_keep(
            ego_params, replace(task, y_ref=lanes.center(lane)), name=f"lk@lane{lane}"
        )
    else:
        lane = committed_lane if committed_lane is not None else lanes.adjacent(current, cmd)
        gap_vehicle = nearest_in_lane(world, lane, ego.x)
        if gap_vehicle is not None and abs(gap_vehicle.state.x - ego.x) > PV_RANGE:
            gap_vehicle = None  # too far to matter within the horizon
        if gap_vehicle is not None:
            tracked.append(gap_vehicle.vid)
        lateral = make_lane_change(
            ego_params,
            replace(task, y_ref=lanes.center(lane)),
            str(gap_vehicle.vid) if gap_vehicle is not None else None,
            with_gap=gap_vehicle is not None,
            name=f"lc@lane{lane}",
        )

    lead = lead_vehicle(world, current, ego.x)
    if lead is not None and lead.state.x - ego.x <= 2 * task.d_acc:
        if lead.vid not in tracked:
            tracked.append(lead.vid)
        longitudinal = make_acc(ego_params, task, str(lead.vid), name=f"acc@{lead.vid}")
    else:
        longitudinal = make_constant_speed(ego_params, task)

    # Clearance primitives: the tracked vehicles must be present (their blocks
    # feed the task constraints), then the nearest others up to the cap.
    nearby = [v for v in world.vehicles if abs(v.state.x - ego.x) <= PV_RANGE]
    nearby.sort(key=lambda v: (np.hypot(v.state.x - ego.x, v.state.y - ego.y), v.vid))
    chosen = [v for v in nearby if v.vid in tracked]
    for v in nearby:
        if len(chosen) >= PV_LIMIT:
            break
        if v.vid not in tracked:
            chosen.append(v)
    chosen.sort(key=lambda v: (np.hypot(v.state.x - ego.x, v.state.y - ego.y), v.vid))
    safety = [make_pv_safety(ego_params, task, v.state, label=str(v.vid)) for v in chosen]

    return [make_kbm(ego_params), lateral, longitudinal, *safety]


def target_ocp(
    cmd: TaskCommand,
    world: WorldState,
    ego_params: EgoParams,
    task: TaskParams,
    horizon: int,
    dt: float,
    committed_lane: int | None = None,
) -> Ocp:
    """Assemble the problem for a command; deterministic in its inputs."""
    primitives = assign(cmd, world, ego_params, task, committed_lane=committed_lane)
    return build_ocp(primitives, horizon, dt, ego_params.input_box())


def initial_state(ocp: Ocp, world: WorldState) -> Array:
    """Fill the problem's start state from the current observation.

    Ego components map to the measured ego state and pv blocks to the matching
    vehicle; bridge-problem prefixes resolve recursively, so both stacked
    copies start from the same observation.
    """
    by_id = {str(v.vid): v.state for v in world.vehicles}
    ego = world.ego

    def resolve(name: str) -> float:
        if ":" in name:
            return resolve(name.split(":", 1)[1])
        if name == "x":
            return ego.x
        if name == "y":
            return ego.y
        if name == "theta":
            return ego.theta
        if name == "v":
            return ego.v
        m = _PV_NAME.fullmatch(name)
        if m and m.group(1) in by_id:
            return getattr(by_id[m.group(1)], m.group(2))
        raise SchemaMismatch(f"cannot resolve state component {name!r} from the scene")

    return np.array([resolve(name) for name in ocp.state_names])
