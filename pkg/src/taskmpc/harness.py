"""Closed-loop pipelines, cadence coupling, metrics, and reports.

Three pipelines share the planner interface:

* ``proposed``   planner -> assigner -> feasibility switch (bridge problems,
  rejection feedback) -> sampling solver -> world.
* ``lvlm2mpc``   planner -> assigner -> sampling solver, one way: no
  feasibility check, no bridge problems, no feedback.
* ``lvlm2pid``   planner -> lane/speed PID, re-planned at a fixed rate.

A plan governs the loop until enough non-bridge control steps have run
(``steps_per_plan``), then the planner is consulted again with feedback about
how its last command fared. Every step appends structured records to the
episode trace; metrics and the lane-change safety audit are pure functions of
those traces.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from . import mppi
from .assigner import initial_state, target_ocp
from .config import AppConfig
from .errors import MalformedTrace, NoAdjacentLane
from .ocp import INPUT_DIM, ControlInput
from .planner.base import NEUTRAL_FEEDBACK, PlannerFeedback, PlanResult
from .sim import (
    EpisodeConfig,
    PidController,
    detect_collision,
    spawn_episode,
    step_world,
)
from .switcher import SwitchDecision, SwitcherState, SwitchMode, switch
from .switcher import FeasibilityReport
from .trace import TraceRecord, read_trace, trace_path, write_trace
from .world import TaskCommand, WorldState

_LC_LANE = re.compile(r"lc@lane(\d+)")


class PipelineKind(str, Enum):
    PROPOSED = "proposed"
    LVLM2MPC = "lvlm2mpc"
    LVLM2PID = "lvlm2pid"


@dataclass(frozen=True)
class Metrics:
    """Aggregate results over one pipeline's episodes."""

    episodes: int = 0
    successes: int = 0
    planning_steps: int = 0
    lane_change_decisions: int = 0
    completed_lane_changes: int = 0
    safe_lane_changes: int = 0
    assisted_count: int = 0
    rejected_count: int = 0
    mean_travel_distance: float = 0.0

    def __post_init__(self):
        if self.successes > self.episodes:
            raise ValueError("more successes than episodes")
        if self.safe_lane_changes > self.completed_lane_changes:
            raise ValueError("more safe lane changes than completed ones")

    def to_dict(self) -> dict:
        return {
            "episodes": self.episodes,
            "successes": self.successes,
            "planning_steps": self.planning_steps,
            "lane_change_decisions": self.lane_change_decisions,
            "completed_lane_changes": self.completed_lane_changes,
            "safe_lane_changes": self.safe_lane_changes,
            "assisted_count": self.assisted_count,
            "rejected_count": self.rejected_count,
            "mean_travel_distance": self.mean_travel_distance,
        }


@dataclass
class _Resolved:
    """A command pinned to concrete lanes at decision time."""

    command: TaskCommand
    mode: str  # "idle" | "lc"
    lane: int


class _PlannerDriver:
    """Couples the slow planner to the fast loop.

    Synchronous mode blocks the loop (the simulation effectively pauses while
    the planner thinks). Asynchronous mode delivers the plan a fixed number of
    control steps after the request; the plan is computed from the scene at
    request time, and the loop keeps executing the current command meanwhile.
    """

    def __init__(self, planner, synchronous: bool = True, latency_steps: int = 0):
        self.planner = planner
        self.synchronous = synchronous
        self.latency_steps = max(0, latency_steps)
        self._pending: Optional[tuple[int, PlanResult]] = None

    def request(self, world: WorldState, feedback: PlannerFeedback) -> Optional[PlanResult]:
        result = self.planner.plan(world, feedback)
        if self.synchronous or self.latency_steps == 0:
            return result
        self._pending = (self.latency_steps, result)
        return None

    @property
    def pending(self) -> bool:
        return self._pending is not None

    def poll(self) -> Optional[PlanResult]:
        if self._pending is None:
            return None
        remaining, result = self._pending
        if remaining <= 1:
            self._pending = None
            return result
        self._pending = (remaining - 1, result)
        return None


def _world_payload(world: WorldState, applied: Optional[ControlInput]) -> dict:
    return {
        "ego": {
            "x": world.ego.x,
            "y": world.ego.y,
            "theta": world.ego.theta,
            "v": world.ego.v,
        },
        "vehicles": [
            {
                "vid": v.vid,
                "x": v.state.x,
                "y": v.state.y,
                "vx": v.state.vx,
                "vy": v.state.vy,
                "lane": v.lane,
            }
            for v in world.vehicles
        ],
        "input": None if applied is None else {"a": applied.a, "delta": applied.delta},
    }


def _plan_payload(result: PlanResult, feedback: PlannerFeedback, extra: dict) -> dict:
    payload = {
        "command": result.command.value,
        "reasoning": result.reasoning,
        "feedback": {
            "last_command": feedback.last_command.value if feedback.last_command else None,
            "feasible": feedback.feasible,
            "rejected": feedback.rejected,
            "assist_mode": feedback.assist_mode,
        },
        "parse_fallback": result.parse_fallback,
    }
    if result.prompt_text is not None:
        payload["prompt_text"] = result.prompt_text
    if result.image_sha256 is not None:
        payload["image_sha256"] = result.image_sha256
    if result.request is not None:
        payload["request"] = result.request
    if result.response_text is not None:
        payload["response"] = result.response_text
    payload.update(extra)
    return payload


def _resolve(
    result: PlanResult, world: WorldState
) -> tuple[_Resolved, bool]:
    """Pin the command to lanes; the second value flags an assignment rejection."""
    lane = world.ego_lane()
    cmd = result.command
    if cmd in (TaskCommand.LANE_LEFT, TaskCommand.LANE_RIGHT):
        try:
            target = world.lanes.adjacent(lane, cmd)
        except NoAdjacentLane:
            return _Resolved(cmd, "idle", lane), True
        return _Resolved(cmd, "lc", target), False
    return _Resolved(cmd, "idle", lane), False


def _cycle_feedback(
    command: TaskCommand,
    modes: list[SwitchMode],
    rejected: bool,
) -> PlannerFeedback:
    if rejected:
        assist = "reverted"
    elif SwitchMode.INTERMEDIATE in modes:
        assist = "intermediate"
    else:
        assist = "direct"
    feasible = (not rejected) and (not modes or modes[-1] is SwitchMode.DIRECT)
    return PlannerFeedback(
        last_command=command, feasible=feasible, rejected=rejected, assist_mode=assist
    )


def run_episode(
    kind: PipelineKind,
    episode: EpisodeConfig,
    app: AppConfig,
    planner,
    use_iocp: bool = True,
) -> list[TraceRecord]:
    """Run one seeded episode to completion or first collision."""
    records: list[TraceRecord] = []
    world = spawn_episode(episode)
    dt = episode.dt
    start_x = world.ego.x

    records.append(
        TraceRecord(
            step=0,
            t=0.0,
            kind="event",
            payload={
                "event": "header",
                "pipeline": kind.value,
                "seed": episode.seed,
                "dt": dt,
                "duration": episode.duration,
                "config": app.digest(),
                "use_iocp": use_iocp,
                "lanes": {"count": episode.lanes.count, "width": episode.lanes.width},
            },
        )
    )

    # The PID baseline plans at a fixed rate with the simulation paused.
    driver = _PlannerDriver(
        planner,
        app.planner.synchronous or kind is PipelineKind.LVLM2PID,
        app.planner.latency_steps,
    )
    feedback = NEUTRAL_FEEDBACK
    plan = driver.request(world, feedback)
    assert plan is not None or not driver.synchronous
    if plan is None:  # async first plan still needs something to execute
        plan = PlanResult(command=TaskCommand.IDLE, reasoning="(awaiting first plan)")
    resolved, assignment_rejected = _resolve(plan, world)
    records.append(
        TraceRecord(step=0, t=0.0, kind="plan",
                    payload=_plan_payload(plan, feedback, {"assignment_rejected": assignment_rejected}))
    )

    if kind is PipelineKind.LVLM2PID:
        pid = PidController(
            lanes=episode.lanes,
            ego_params=app.ego,
            gains=app.pid,
            target_lane=world.ego_lane(),
            speed_setpoint=app.harness.pid_speed_setpoint,
        )
        pid.apply_command(plan.command)
        plan_period = max(1, int(round(1.0 / (app.cadence.pid_plan_hz * dt))))
    else:
        mppi_cfg = replace(app.mppi, horizon=app.mppi.horizon, dt=dt)
        n_max = app.cadence.n_max if use_iocp else 0
        idle_ocp = target_ocp(
            TaskCommand.IDLE, world, app.ego, app.task, mppi_cfg.horizon, dt,
            committed_lane=world.ego_lane(),
        )
        switch_state = SwitcherState(
            prev_ocp=idle_ocp,
            n_iocp=0,
            n_max=n_max,
            last_inputs=np.zeros((mppi_cfg.horizon, INPUT_DIM)),
        )
        warm = np.zeros((mppi_cfg.horizon, INPUT_DIM))
        u_applied = np.zeros(INPUT_DIM)

    success = True
    non_bridge_steps = 0
    cycle_modes: list[SwitchMode] = []
    cycle_rejected = assignment_rejected
    tol = app.harness.lane_tolerance

    for step in range(episode.steps):
        if kind is PipelineKind.LVLM2PID:
            applied = pid.control(world)
        else:
            if resolved.mode == "lc" and abs(
                world.ego.y - world.lanes.center(resolved.lane)
            ) <= tol:
                resolved = _Resolved(resolved.command, "idle", resolved.lane)
            cmd_eff = (
                TaskCommand.IDLE if resolved.mode == "idle" else resolved.command
            )
            target = target_ocp(
                cmd_eff, world, app.ego, app.task, mppi_cfg.horizon, dt,
                committed_lane=resolved.lane,
            )
            if kind is PipelineKind.PROPOSED:
                decision, switch_state = switch(
                    switch_state,
                    target,
                    initial_state(target, world),
                    iocp_params=app.iocp,
                    include_target_cost=app.harness.include_target_cost,
                    eps_g=app.switcher.eps_g,
                    eps_h=app.switcher.eps_h,
                )
                checked = True
            else:
                decision = SwitchDecision(
                    target, False, SwitchMode.DIRECT, FeasibilityReport(True)
                )
                checked = False
            x0 = initial_state(decision.solve_ocp, world)
            result = mppi.solve(
                decision.solve_ocp,
                x0,
                warm,
                mppi_cfg,
                rng=mppi_cfg.rng(stream=step),
                u_before=u_applied,
            )
            applied = result.first_input
            warm = result.nominal_inputs
            switch_state = replace(switch_state, last_inputs=result.planned.inputs)
            u_applied = applied.as_array()
            cycle_modes.append(decision.mode)
            if decision.is_rejected:
                cycle_rejected = True
                # The task switch is dead: regroup on the nearest lane and let
                # the planner hear about the rejection right away.
                resolved = _Resolved(resolved.command, "idle", world.ego_lane())
            records.append(
                TraceRecord(
                    step=step,
                    t=step * dt,
                    kind="switch",
                    payload={
                        "mode": decision.mode.value,
                        "is_rejected": decision.is_rejected,
                        "feasible": decision.report.feasible,
                        "checked": checked,
                        "violated": list(decision.report.violated_names()),
                    },
                )
            )
            records.append(
                TraceRecord(
                    step=step,
                    t=step * dt,
                    kind="solve",
                    payload={
                        "provenance": list(decision.solve_ocp.provenance),
                        "cost": result.cost,
                        "input": {"a": applied.a, "delta": applied.delta},
                    },
                )
            )

        records.append(
            TraceRecord(step=step, t=step * dt, kind="world",
                        payload=_world_payload(world, applied))
        )
        world = step_world(
            world, applied, dt, ego_params=app.ego, idm=app.idm,
            geometry=episode.geometry,
        )
        hit = detect_collision(world, episode.geometry)
        if hit is not None:
            success = False
            records.append(
                TraceRecord(
                    step=step,
                    t=step * dt,
                    kind="event",
                    payload={"event": "collision", "with": hit.vid},
                )
            )
            break

        # Cadence: consult the planner again once enough non-bridge steps ran.
        last_step = step == episode.steps - 1
        if kind is PipelineKind.LVLM2PID:
            if (step + 1) % plan_period == 0 and not last_step:
                plan = driver.request(world, NEUTRAL_FEEDBACK)
                if plan is not None:
                    records.append(
                        TraceRecord(
                            step=step + 1, t=(step + 1) * dt, kind="plan",
                            payload=_plan_payload(
                                plan, NEUTRAL_FEEDBACK,
                                {"target_lane_before": pid.target_lane},
                            ),
                        )
                    )
                    pid.apply_command(plan.command)
        else:
            if cycle_modes and cycle_modes[-1] is not SwitchMode.INTERMEDIATE:
                non_bridge_steps += 1
            if last_step:
                continue
            landed = driver.poll()
            if landed is None and (
                non_bridge_steps >= app.cadence.steps_per_plan
                and not driver.pending
            ):
                if kind is PipelineKind.PROPOSED:
                    feedback = _cycle_feedback(
                        resolved.command, cycle_modes, cycle_rejected
                    )
                else:
                    feedback = NEUTRAL_FEEDBACK
                landed = driver.request(world, feedback)
            if landed is not None:
                resolved, assignment_rejected = _resolve(landed, world)
                records.append(
                    TraceRecord(
                        step=step + 1, t=(step + 1) * dt, kind="plan",
                        payload=_plan_payload(
                            landed, feedback,
                            {"assignment_rejected": assignment_rejected},
                        ),
                    )
                )
                non_bridge_steps = 0
                cycle_modes = []
                cycle_rejected = assignment_rejected

    final_step = records[-1].step
    records.append(
        TraceRecord(
            step=final_step,
            t=final_step * dt,
            kind="event",
            payload={
                "event": "end",
                "success": success,
                "travel": world.ego.x - start_x,
            },
        )
    )
    return records


@dataclass(frozen=True)
class LaneChangeSpan:
    """One audited lane change: activation step through arrival at the center."""

    start_step: int
    end_step: int
    target_lane: int
    completed: bool
    safe: bool
    min_gap: float


def _direct_lc_lane(provenance: Sequence[str]) -> Optional[int]:
    for name in provenance:
        if name.startswith("iocp["):
            return None
        m = _LC_LANE.fullmatch(name) or _LC_LANE.match(name)
        if m:
            return int(m.group(1))
    return None


def _pending_lc_lane(provenance: Sequence[str]) -> Optional[int]:
    """Target lane of the incoming problem inside a bridge tag, if any."""
    for name in provenance:
        if name.startswith("iocp["):
            part = name.split("->", 1)
            if len(part) == 2:
                m = _LC_LANE.search(part[1])
                if m:
                    return int(m.group(1))
    return None


def lane_change_safety_audit(
    records: Sequence[TraceRecord],
    d_safe: float = 10.0,
    lane_tolerance: float = 0.3,
) -> list[LaneChangeSpan]:
    """Label every lane change in a trace as safe or unsafe.

    A span opens when a lane-change problem is first solved directly (for the
    PID baseline: when a lateral command shifts the target lane) and closes
    when the ego ordinate reaches the target-lane center within tolerance.
    It is safe when, at every step of the span, both the nearest leading and
    the nearest following vehicle in the target lane keep at least ``d_safe``
    of longitudinal distance. Bridge-problem steps between activation and
    arrival stay inside the span.
    """
    header = next(
        (r.payload for r in records if r.kind == "event" and r.payload.get("event") == "header"),
        None,
    )
    if header is None:
        raise MalformedTrace("trace has no header event")
    pipeline = header["pipeline"]

    worlds: dict[int, dict] = {}
    for r in records:
        if r.kind == "world":
            worlds[r.step] = r.payload
    if not worlds:
        raise MalformedTrace("trace has no world records")
    max_step = max(worlds)

    # Per-step lane the controller is currently changing into. ``direct``
    # marks steps where a lane-change problem was solved as-is; bridge steps
    # toward the same lane keep a span alive but do not start one.
    active: dict[int, Optional[int]] = {}
    direct: dict[int, bool] = {}
    if pipeline == PipelineKind.LVLM2PID.value:
        current_target: Optional[int] = None
        lane_cmds = {TaskCommand.LANE_LEFT.value, TaskCommand.LANE_RIGHT.value}
        plans = sorted(
            (r for r in records if r.kind == "plan"), key=lambda r: r.step
        )
        pointer = 0
        for step in sorted(worlds):
            while pointer < len(plans) and plans[pointer].step <= step:
                payload = plans[pointer].payload
                if payload["command"] in lane_cmds:
                    before = payload.get("target_lane_before")
                    if before is not None:
                        shift = -1 if payload["command"] == TaskCommand.LANE_LEFT.value else 1
                        current_target = before + shift
                pointer += 1
            active[step] = current_target
            direct[step] = current_target is not None
    else:
        for r in records:
            if r.kind != "solve":
                continue
            lane = _direct_lc_lane(r.payload["provenance"])
            if lane is not None:
                active[r.step] = lane
                direct[r.step] = True
            else:
                active[r.step] = _pending_lc_lane(r.payload["provenance"])
                direct[r.step] = False

    lane_width = header.get("lanes", {}).get("width", 4.0)

    def lane_center(lane: int) -> float:
        return lane * lane_width

    def neighbor_gaps(step: int, lane: int) -> float:
        payload = worlds[step]
        ego_x = payload["ego"]["x"]
        ahead = [v["x"] - ego_x for v in payload["vehicles"] if v["lane"] == lane and v["x"] >= ego_x]
        behind = [ego_x - v["x"] for v in payload["vehicles"] if v["lane"] == lane and v["x"] < ego_x]
        gaps = []
        if ahead:
            gaps.append(min(ahead))
        if behind:
            gaps.append(min(behind))
        return min(gaps) if gaps else float("inf")

    spans: list[LaneChangeSpan] = []
    open_lane: Optional[int] = None
    open_start = 0
    min_gap = float("inf")

    def close(step: int, completed: bool) -> None:
        nonlocal open_lane, min_gap
        spans.append(
            LaneChangeSpan(
                start_step=open_start,
                end_step=step,
                target_lane=open_lane,
                completed=completed,
                safe=completed and min_gap >= d_safe,
                min_gap=min_gap,
            )
        )
        open_lane = None
        min_gap = float("inf")

    for step in sorted(worlds):
        lane_now = active.get(step)
        if open_lane is not None:
            ego_y = worlds[step]["ego"]["y"]
            arrived = abs(ego_y - lane_center(open_lane)) <= lane_tolerance
            if arrived:
                # Arrival step still counts toward the gap audit.
                min_gap = min(min_gap, neighbor_gaps(step, open_lane))
                close(step, completed=True)
                continue
            if lane_now != open_lane:
                close(step, completed=False)
            else:
                min_gap = min(min_gap, neighbor_gaps(step, open_lane))
        if open_lane is None and lane_now is not None and direct.get(step, False):
            ego_y = worlds[step]["ego"]["y"]
            if abs(ego_y - lane_center(lane_now)) <= lane_tolerance:
                continue  # already there; not a lane change
            open_lane = lane_now
            open_start = step
            min_gap = neighbor_gaps(step, lane_now)
    if open_lane is not None:
        close(max_step, completed=False)
    return spans


@dataclass(frozen=True)
class EpisodeSummary:
    pipeline: str
    seed: int
    success: bool
    travel: float
    planning_steps: int
    lane_change_decisions: int
    assisted: int
    rejected: int
    spans: tuple[LaneChangeSpan, ...]


def summarize_episode(
    records: Sequence[TraceRecord], d_safe: float = 10.0, lane_tolerance: float = 0.3
) -> EpisodeSummary:
    header = records[0].payload
    if header.get("event") != "header":
        raise MalformedTrace("first record must be the header event")
    end = next(
        (r.payload for r in reversed(records) if r.kind == "event" and r.payload.get("event") == "end"),
        None,
    )
    if end is None:
        raise MalformedTrace("trace has no end event")

    plans = [r for r in records if r.kind == "plan"]
    lane_cmds = {TaskCommand.LANE_LEFT.value, TaskCommand.LANE_RIGHT.value}
    lc_plans = [r for r in plans if r.payload["command"] in lane_cmds]

    # Group switch records into plan cycles to tally assists and rejections.
    switches = [r for r in records if r.kind == "switch"]
    assisted = 0
    rejected = 0
    boundaries = [r.step for r in plans] + [max((r.step for r in records), default=0) + 1]
    for i, plan in enumerate(plans):
        if plan.payload["command"] not in lane_cmds:
            continue
        lo, hi = boundaries[i], boundaries[i + 1]
        cycle = [s for s in switches if lo <= s.step < hi]
        was_rejected = plan.payload.get("assignment_rejected", False) or any(
            s.payload["is_rejected"] for s in cycle
        )
        was_assisted = any(s.payload["mode"] == "intermediate" for s in cycle)
        if was_rejected:
            rejected += 1
        elif was_assisted:
            assisted += 1

    spans = lane_change_safety_audit(records, d_safe=d_safe, lane_tolerance=lane_tolerance)
    return EpisodeSummary(
        pipeline=header["pipeline"],
        seed=header["seed"],
        success=bool(end["success"]),
        travel=float(end["travel"]),
        planning_steps=len(plans),
        lane_change_decisions=len(lc_plans),
        assisted=assisted,
        rejected=rejected,
        spans=tuple(spans),
    )


def aggregate(
    episodes: Sequence[Sequence[TraceRecord]],
    d_safe: float = 10.0,
    lane_tolerance: float = 0.3,
) -> Metrics:
    """Metrics over one pipeline's traces; a pure function of their content."""
    if not episodes:
        raise ValueError("need at least one trace")
    summaries = [
        summarize_episode(r, d_safe=d_safe, lane_tolerance=lane_tolerance)
        for r in episodes
    ]
    completed = [s2 for s in summaries for s2 in s.spans if s2.completed]
    return Metrics(
        episodes=len(summaries),
        successes=sum(1 for s in summaries if s.success),
        planning_steps=sum(s.planning_steps for s in summaries),
        lane_change_decisions=sum(s.lane_change_decisions for s in summaries),
        completed_lane_changes=len(completed),
        safe_lane_changes=sum(1 for sp in completed if sp.safe),
        assisted_count=sum(s.assisted for s in summaries),
        rejected_count=sum(s.rejected for s in summaries),
        mean_travel_distance=float(np.mean([s.travel for s in summaries])),
    )


def run_suite(
    kind: PipelineKind,
    seeds: Sequence[int],
    app: AppConfig,
    planner_factory: Callable[[], object],
    out_dir: Optional[str | Path] = None,
    use_iocp: bool = True,
) -> list[list[TraceRecord]]:
    """Run one pipeline over several seeds, optionally persisting the traces."""
    all_records = []
    for seed in seeds:
        records = run_episode(
            kind, app.episode(seed), app, planner_factory(), use_iocp=use_iocp
        )
        if out_dir is not None:
            write_trace(trace_path(out_dir, kind.value, seed), records)
        all_records.append(records)
    return all_records


def _format_table(metrics_by_pipeline: dict[str, Metrics]) -> str:
    lines = []
    for pipeline, m in metrics_by_pipeline.items():
        lines.append(pipeline)
        lines.append("-" * len(pipeline))
        lines.append(f"planning steps          {m.planning_steps}")
        lines.append(f"lane change decisions   {m.lane_change_decisions}")
        if pipeline == PipelineKind.PROPOSED.value:
            lines.append(f"assisted lane changes   {m.assisted_count}")
            lines.append(f"rejected lane changes   {m.rejected_count}")
        lines.append(f"success rate            {m.successes}/{m.episodes}")
        if m.completed_lane_changes:
            rate = 100.0 * m.safe_lane_changes / m.completed_lane_changes
            lines.append(
                f"safe lane-change rate   {rate:.1f}% "
                f"({m.safe_lane_changes}/{m.completed_lane_changes})"
            )
        else:
            lines.append("safe lane-change rate   n/a (no completed lane changes)")
        lines.append(f"mean travel distance    {m.mean_travel_distance:.1f} m")
        lines.append("")
    return "\n".join(lines)


def report(run_dir: str | Path, d_safe: float = 10.0, lane_tolerance: float = 0.3) -> dict:
    """Re-aggregate a run directory and write the metrics files and plot."""
    run_dir = Path(run_dir)
    metrics_by_pipeline: dict[str, Metrics] = {}
    travel_by_pipeline: dict[str, list[float]] = {}
    for sub in sorted(p for p in run_dir.iterdir() if p.is_dir()):
        traces = []
        for path in sorted(sub.glob("*.trace"), key=lambda p: int(p.stem)):
            records, _ = read_trace(path)
            traces.append(records)
        if not traces:
            continue
        metrics_by_pipeline[sub.name] = aggregate(
            traces, d_safe=d_safe, lane_tolerance=lane_tolerance
        )
        travel_by_pipeline[sub.name] = [
            summarize_episode(t, d_safe=d_safe, lane_tolerance=lane_tolerance).travel
            for t in traces
        ]

    payload = {name: m.to_dict() for name, m in metrics_by_pipeline.items()}
    (run_dir / "metrics.json").write_text(
        json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    (run_dir / "metrics.txt").write_text(
        _format_table(metrics_by_pipeline), encoding="utf-8"
    )
    _travel_plot(travel_by_pipeline, run_dir / "travel_distance.png")
    return payload


def _travel_plot(travel_by_pipeline: dict[str, list[float]], path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    names = list(travel_by_pipeline)
    for i, name in enumerate(names):
        values = travel_by_pipeline[name]
        ax.scatter([i] * len(values), values, alpha=0.6, label=name)
        ax.hlines(np.mean(values), i - 0.25, i + 0.25, color="black")
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names)
    ax.set_ylabel("travel distance [m]")
    ax.set_title("per-episode travel distance (bar = mean)")
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)
