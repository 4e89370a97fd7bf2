"""Deterministic three-lane highway world.

The ego integrates the same kinematic bicycle the planner predicts with
(speed clamped at zero); surrounding vehicles hold their lane and follow the
car ahead with the intelligent-driver model at fixed per-vehicle desired
speeds drawn at spawn. A vehicle treats the ego as its leader whenever the
ego laterally overlaps its lane. There is no randomness after spawning, so an
episode is a pure function of the seed and the applied inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import SpawnFailure
from .ocp import ControlInput
from .primitives import EgoParams, PvState
from .world import EgoState, LaneGeometry, TaskCommand, Vehicle, WorldState


@dataclass(frozen=True)
class VehicleGeometry:
    length: float = 5.0  # [m]
    width: float = 2.0  # [m]

    def __post_init__(self):
        if not (self.length > 0 and self.width > 0):
            raise ValueError("vehicle footprint must be positive")


@dataclass(frozen=True)
class IdmParams:
    """Intelligent-driver car-following parameters."""

    accel_max: float = 3.0  # [m/s^2]
    decel_comfort: float = 5.0  # [m/s^2]
    jam_distance: float = 4.0  # [m]
    time_headway: float = 1.2  # [s]
    exponent: float = 4.0


@dataclass(frozen=True)
class EpisodeConfig:
    """Everything that defines one randomized episode."""

    seed: int = 0
    n_vehicles: int = 12
    duration: float = 50.0  # [s]
    dt: float = 0.05  # [s]
    lanes: LaneGeometry = LaneGeometry()
    geometry: VehicleGeometry = VehicleGeometry()
    spawn_x_range: tuple[float, float] = (-40.0, 220.0)
    min_gap_same_lane: float = 22.0  # center-to-center [m]
    min_gap_ego: float = 12.0  # any-lane clearance around the ego [m]
    speed_range: tuple[float, float] = (17.0, 23.0)
    ego_speed: float = 22.0  # [m/s]

    def __post_init__(self):
        if not self.duration > 0 or not self.dt > 0:
            raise ValueError("duration and dt must be positive")
        if self.min_gap_same_lane < self.geometry.length:
            raise ValueError("same-lane spawn gap must cover the vehicle footprint")

    @property
    def steps(self) -> int:
        return int(round(self.duration / self.dt))


def spawn_episode(cfg: EpisodeConfig) -> WorldState:
    """Seeded placement with the configured clearances; same seed, same world."""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy=cfg.seed)))
    ego_lane = int(rng.integers(cfg.lanes.count))
    ego = EgoState(x=0.0, y=cfg.lanes.center(ego_lane), theta=0.0, v=cfg.ego_speed)

    placed: list[tuple[int, float]] = []
    vehicles: list[Vehicle] = []
    for vid in range(cfg.n_vehicles):
        for _ in range(1000):
            lane = int(rng.integers(cfg.lanes.count))
            x = float(rng.uniform(*cfg.spawn_x_range))
            if abs(x - ego.x) < cfg.min_gap_ego:
                continue
            if lane == ego_lane and abs(x - ego.x) < cfg.min_gap_same_lane:
                continue
            if any(l == lane and abs(x - px) < cfg.min_gap_same_lane for l, px in placed):
                continue
            break
        else:
            raise SpawnFailure(f"could not place vehicle {vid} after 1000 tries")
        speed = float(rng.uniform(*cfg.speed_range))
        placed.append((lane, x))
        vehicles.append(
            Vehicle(
                vid=vid,
                state=PvState(x=x, y=cfg.lanes.center(lane), vx=speed, vy=0.0),
                lane=lane,
                desired_speed=speed,
            )
        )
    return WorldState(ego=ego, vehicles=tuple(vehicles), lanes=cfg.lanes, t=0.0)


def idm_acceleration(
    v: float, v_desired: float, gap: Optional[float], v_lead: Optional[float], p: IdmParams
) -> float:
    """Longitudinal acceleration toward the desired speed, braking for a leader.

    ``gap`` is bumper-to-bumper; None means free road.
    """
    free = 1.0 - (max(v, 0.0) / v_desired) ** p.exponent
    if gap is None:
        interaction = 0.0
    else:
        closing = v - v_lead
        s_star = p.jam_distance + max(
            0.0, v * p.time_headway + v * closing / (2.0 * np.sqrt(p.accel_max * p.decel_comfort))
        )
        interaction = (s_star / max(gap, 0.1)) ** 2
    a = p.accel_max * (free - interaction)
    return float(np.clip(a, -2.0 * p.decel_comfort, p.accel_max))


def _ego_claims_lane(ego_y: float, lane_center: float, lanes: LaneGeometry, geom: VehicleGeometry) -> bool:
    return abs(ego_y - lane_center) < (lanes.width + geom.width) / 2


def step_world(
    world: WorldState,
    ego_input: ControlInput,
    dt: float,
    ego_params: EgoParams = EgoParams(),
    idm: IdmParams = IdmParams(),
    geometry: VehicleGeometry = VehicleGeometry(),
) -> WorldState:
    """Advance everything one step from a single pre-step snapshot."""
    ego = world.ego
    accelerations: list[float] = []
    for veh in world.vehicles:
        leaders = [
            (o.state.x, o.state.vx)
            for o in world.vehicles
            if o.vid != veh.vid and o.lane == veh.lane and o.state.x > veh.state.x
        ]
        if ego.x > veh.state.x and _ego_claims_lane(
            ego.y, world.lanes.center(veh.lane), world.lanes, geometry
        ):
            leaders.append((ego.x, ego.v))
        if leaders:
            lead_x, lead_v = min(leaders)
            gap = lead_x - veh.state.x - geometry.length
            accelerations.append(
                idm_acceleration(veh.state.vx, veh.desired_speed, gap, lead_v, idm)
            )
        else:
            accelerations.append(
                idm_acceleration(veh.state.vx, veh.desired_speed, None, None, idm)
            )

    new_vehicles = []
    for veh, a in zip(world.vehicles, accelerations):
        vx = max(0.0, veh.state.vx + a * dt)
        new_vehicles.append(
            replace(veh, state=replace(veh.state, x=veh.state.x + vx * dt, vx=vx))
        )

    u = ego_input.as_array()
    theta_dot = ego.v / ego_params.wheelbase * np.tan(u[1])
    new_ego = EgoState(
        x=ego.x + ego.v * np.cos(ego.theta) * dt,
        y=ego.y + ego.v * np.sin(ego.theta) * dt,
        theta=ego.theta + theta_dot * dt,
        v=max(0.0, ego.v + u[0] * dt),
    )
    return WorldState(
        ego=new_ego, vehicles=tuple(new_vehicles), lanes=world.lanes, t=world.t + dt
    )


def rectangle_corners(cx: float, cy: float, heading: float, geom: VehicleGeometry) -> np.ndarray:
    half_l, half_w = geom.length / 2, geom.width / 2
    local = np.array(
        [[half_l, half_w], [half_l, -half_w], [-half_l, -half_w], [-half_l, half_w]]
    )
    c, s = np.cos(heading), np.sin(heading)
    rot = np.array([[c, -s], [s, c]])
    return local @ rot.T + np.array([cx, cy])


def rectangles_overlap(a: np.ndarray, b: np.ndarray) -> bool:
    """Separating-axis test for two convex quadrilaterals (symmetric in a, b)."""
    for poly in (a, b):
        edges = np.roll(poly, -1, axis=0) - poly
        axes = np.stack([-edges[:, 1], edges[:, 0]], axis=1)
        for axis in axes:
            pa = a @ axis
            pb = b @ axis
            if pa.max() < pb.min() or pb.max() < pa.min():
                return False
    return True


def detect_collision(
    world: WorldState, geometry: VehicleGeometry = VehicleGeometry()
) -> Optional[Vehicle]:
    """First vehicle whose footprint overlaps the ego's, by ascending id."""
    ego_rect = rectangle_corners(world.ego.x, world.ego.y, world.ego.theta, geometry)
    for veh in sorted(world.vehicles, key=lambda v: v.vid):
        if abs(veh.state.x - world.ego.x) > geometry.length + 1.0:
            continue
        rect = rectangle_corners(veh.state.x, veh.state.y, 0.0, geometry)
        if rectangles_overlap(ego_rect, rect):
            return veh
    return None


@dataclass(frozen=True)
class PidGains:
    """Defaults settle a one-meter lane offset in under two seconds at highway
    speed with no visible overshoot."""

    k_lat: float = 1.5  # lateral velocity per meter of offset [1/s]
    k_heading: float = 6.0  # yaw-rate per radian of heading error [1/s]
    k_speed: float = 0.8  # accel per m/s of speed error [1/s]
    heading_limit: float = 0.5  # [rad]
    speed_step: float = 5.0  # FASTER/SLOWER increment [m/s]


class PidController:
    """Baseline lane/speed tracker with no awareness of other traffic.

    Lateral commands shift the target lane once per command; speed commands
    step the setpoint. IDLE holds both.
    """

    def __init__(
        self,
        lanes: LaneGeometry,
        ego_params: EgoParams = EgoParams(),
        gains: PidGains = PidGains(),
        target_lane: int = 0,
        speed_setpoint: float = 25.0,
    ):
        self.lanes = lanes
        self.ego_params = ego_params
        self.gains = gains
        self.target_lane = target_lane
        self.speed_setpoint = speed_setpoint

    def apply_command(self, cmd: TaskCommand) -> None:
        if cmd in (TaskCommand.LANE_LEFT, TaskCommand.LANE_RIGHT):
            shifted = self.target_lane + (-1 if cmd is TaskCommand.LANE_LEFT else 1)
            self.target_lane = int(np.clip(shifted, 0, self.lanes.count - 1))
        elif cmd is TaskCommand.FASTER:
            self.speed_setpoint += self.gains.speed_step
        elif cmd is TaskCommand.SLOWER:
            self.speed_setpoint = max(0.0, self.speed_setpoint - self.gains.speed_step)

    def control(self, world: WorldState) -> ControlInput:
        ego = world.ego
        g = self.gains
        y_err = self.lanes.center(self.target_lane) - ego.y
        v_safe = max(ego.v, 1.0)
        heading_ref = np.clip(
            np.arcsin(np.clip(g.k_lat * y_err / v_safe, -0.9, 0.9)),
            -g.heading_limit,
            g.heading_limit,
        )
        yaw_rate_cmd = g.k_heading * (heading_ref - ego.theta)
        delta = np.arctan(self.ego_params.wheelbase * yaw_rate_cmd / v_safe)
        delta = float(np.clip(delta, self.ego_params.delta_min, self.ego_params.delta_max))
        a = float(
            np.clip(
                g.k_speed * (self.speed_setpoint - ego.v),
                self.ego_params.a_min,
                self.ego_params.a_max,
            )
        )
        return ControlInput(a=a, delta=delta)

    def act(self, cmd: Optional[TaskCommand], world: WorldState) -> ControlInput:
        if cmd is not None:
            self.apply_command(cmd)
        return self.control(world)
