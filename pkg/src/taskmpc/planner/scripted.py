"""Deterministic planners for tests and offline benchmarking."""

from __future__ import annotations

from typing import Sequence

from ..world import TaskCommand, WorldState, nearest_in_lane
from .base import PlannerFeedback, PlanResult


class ScriptedPlanner:
    """Plays a fixed command list, then repeats the last entry forever."""

    def __init__(self, script: Sequence[TaskCommand]):
        if not script:
            raise ValueError("script must contain at least one command")
        self.script = tuple(script)
        self._cursor = 0

    def plan(self, world: WorldState, feedback: PlannerFeedback) -> PlanResult:
        cmd = self.script[min(self._cursor, len(self.script) - 1)]
        self._cursor += 1
        return PlanResult(command=cmd, reasoning="(scripted)")


class RecklessPlanner:
    """Always demands a lane change toward the most crowded adjacent lane.

    Picks the side whose nearest vehicle is closest to the ego, ignoring all
    safety; a worst-case stand-in for an overeager high-level planner.
    """

    def __init__(self):
        self._flip = False

    def plan(self, world: WorldState, feedback: PlannerFeedback) -> PlanResult:
        lane = world.ego_lane()
        options: list[tuple[float, int, TaskCommand]] = []
        for cmd, neighbor in (
            (TaskCommand.LANE_LEFT, lane - 1),
            (TaskCommand.LANE_RIGHT, lane + 1),
        ):
            if not 0 <= neighbor < world.lanes.count:
                continue
            nearest = nearest_in_lane(world, neighbor, world.ego.x)
            distance = abs(nearest.state.x - world.ego.x) if nearest else float("inf")
            options.append((distance, neighbor, cmd))
        options.sort()
        if len(options) > 1 and options[0][0] == options[1][0]:
            # Symmetric scene: alternate sides so both get exercised.
            self._flip = not self._flip
            choice = options[1] if self._flip else options[0]
        else:
            choice = options[0]
        return PlanResult(
            command=choice[2],
            reasoning=f"(reckless: nearest neighbor in lane {choice[1]} at {choice[0]:.1f} m)",
        )
