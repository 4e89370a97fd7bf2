"""Ground-truth world model: lanes, the ego vehicle, traffic, and task commands."""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional

import numpy as np

from .errors import NoAdjacentLane
from .primitives import PvState


class TaskCommand(str, Enum):
    LANE_LEFT = "LANE_LEFT"
    IDLE = "IDLE"
    LANE_RIGHT = "LANE_RIGHT"
    FASTER = "FASTER"
    SLOWER = "SLOWER"


# The planner vocabulary for the MPC pipelines; the PID baseline adds speed steps.
MPC_COMMANDS = (TaskCommand.LANE_LEFT, TaskCommand.IDLE, TaskCommand.LANE_RIGHT)
PID_COMMANDS = MPC_COMMANDS + (TaskCommand.FASTER, TaskCommand.SLOWER)


@dataclass(frozen=True)
class LaneGeometry:
    """A straight multi-lane road; lane 0 is leftmost, y grows to the right."""

    count: int = 3
    width: float = 4.0  # [m]

    def __post_init__(self):
        if self.count < 1 or not self.width > 0:
            raise ValueError("need at least one lane of positive width")

    def center(self, index: int) -> float:
        if not 0 <= index < self.count:
            raise NoAdjacentLane(f"lane {index} does not exist")
        return index * self.width

    @property
    def centers(self) -> tuple[float, ...]:
        return tuple(i * self.width for i in range(self.count))

    @property
    def y_min(self) -> float:
        return -self.width / 2

    @property
    def y_max(self) -> float:
        return (self.count - 0.5) * self.width

    def index_of(self, y: float) -> int:
        """Lane whose center is nearest to the ordinate (clipped to the road)."""
        return int(np.clip(round(y / self.width), 0, self.count - 1))

    def adjacent(self, index: int, command: TaskCommand) -> int:
        if command is TaskCommand.LANE_LEFT:
            target = index - 1
        elif command is TaskCommand.LANE_RIGHT:
            target = index + 1
        else:
            raise ValueError(f"{command} is not a lateral command")
        if not 0 <= target < self.count:
            raise NoAdjacentLane(f"no lane {command.value} of lane {index}")
        return target


@dataclass(frozen=True)
class EgoState:
    x: float
    y: float
    theta: float  # [rad]
    v: float  # [m/s]

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.theta, self.v])


@dataclass(frozen=True)
class Vehicle:
    """One surrounding vehicle: id, kinematic state, home lane, cruise speed."""

    vid: int
    state: PvState
    lane: int
    desired_speed: float


@dataclass(frozen=True)
class WorldState:
    ego: EgoState
    vehicles: tuple[Vehicle, ...]
    lanes: LaneGeometry
    t: float = 0.0

    def ego_lane(self) -> int:
        return self.lanes.index_of(self.ego.y)

    def with_time(self, t: float) -> "WorldState":
        return replace(self, t=t)


def lead_vehicle(world: WorldState, lane: int, x: float) -> Optional[Vehicle]:
    """Nearest vehicle ahead of x in the given lane."""
    ahead = [v for v in world.vehicles if v.lane == lane and v.state.x > x]
    return min(ahead, key=lambda v: (v.state.x, v.vid)) if ahead else None


def rear_vehicle(world: WorldState, lane: int, x: float) -> Optional[Vehicle]:
    """Nearest vehicle behind x in the given lane."""
    behind = [v for v in world.vehicles if v.lane == lane and v.state.x <= x]
    return max(behind, key=lambda v: (v.state.x, -v.vid)) if behind else None


def nearest_in_lane(world: WorldState, lane: int, x: float) -> Optional[Vehicle]:
    """Vehicle in the lane with the smallest absolute longitudinal offset."""
    candidates = [v for v in world.vehicles if v.lane == lane]
    return min(candidates, key=lambda v: (abs(v.state.x - x), v.vid)) if candidates else None
