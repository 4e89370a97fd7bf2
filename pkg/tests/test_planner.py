from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from taskmpc.errors import ApiError, ParseError
from taskmpc.planner import (
    BevConfig,
    ChatApiPlanner,
    ChatPlannerConfig,
    ContextMemory,
    MemoryEntry,
    NEUTRAL_FEEDBACK,
    PlannerFeedback,
    RecklessPlanner,
    ReplayTransport,
    ScriptedPlanner,
    image_sha256,
    parse_command,
    render_bev,
    render_prompt,
)
from taskmpc.primitives import PvState
from taskmpc.world import (
    EgoState,
    LaneGeometry,
    MPC_COMMANDS,
    TaskCommand,
    Vehicle,
    WorldState,
)

FIXTURES = Path(__file__).parent / "fixtures"


def scene(ego_lane=1, vehicles=(), lanes=LaneGeometry(), t=0.0):
    ego = EgoState(x=50.0, y=lanes.center(ego_lane), theta=0.0, v=22.0)
    vs = tuple(
        Vehicle(vid=i, state=PvState(x, lanes.center(lane), v, 0.0), lane=lane, desired_speed=v)
        for i, (x, lane, v) in enumerate(vehicles)
    )
    return WorldState(ego=ego, vehicles=vs, lanes=lanes, t=t)


class TestParseCommand:
    def test_fixture_corpus_100_percent(self):
        labels = json.loads((FIXTURES / "responses" / "labels.json").read_text())
        assert len(labels) == 20
        hits = 0
        for name, expected in labels.items():
            text = (FIXTURES / "responses" / name).read_text()
            assert parse_command(text, MPC_COMMANDS).value == expected
            hits += 1
        assert hits == 20

    def test_last_token_wins(self):
        assert parse_command("LANE_LEFT no wait LANE_RIGHT") is TaskCommand.LANE_RIGHT

    def test_no_token_raises(self):
        with pytest.raises(ParseError):
            parse_command("I would idle.")  # lowercase is not a token

    def test_vocabulary_restriction(self):
        with pytest.raises(ParseError):
            parse_command("FASTER", MPC_COMMANDS)
        from taskmpc.world import PID_COMMANDS

        assert parse_command("FASTER", PID_COMMANDS) is TaskCommand.FASTER


class TestScripted:
    def test_plays_script_then_repeats_last(self):
        planner = ScriptedPlanner([TaskCommand.IDLE, TaskCommand.LANE_LEFT, TaskCommand.IDLE])
        world = scene()
        got = [planner.plan(world, NEUTRAL_FEEDBACK).command for _ in range(5)]
        assert got == [
            TaskCommand.IDLE, TaskCommand.LANE_LEFT, TaskCommand.IDLE,
            TaskCommand.IDLE, TaskCommand.IDLE,
        ]

    def test_reckless_picks_crowded_side(self):
        world = scene(ego_lane=1, vehicles=[(54.0, 0, 20.0), (90.0, 2, 20.0)])
        planner = RecklessPlanner()
        assert planner.plan(world, NEUTRAL_FEEDBACK).command is TaskCommand.LANE_LEFT

    def test_reckless_edge_lane_picks_existing_side(self):
        world = scene(ego_lane=0)
        planner = RecklessPlanner()
        assert planner.plan(world, NEUTRAL_FEEDBACK).command is TaskCommand.LANE_RIGHT


class TestContextMemory:
    def test_fifo_capacity(self):
        memory = ContextMemory(capacity=3)
        for i in range(7):
            memory.add(MemoryEntry(f"obs{i}", f"because {i}", TaskCommand.IDLE))
        assert len(memory) == 3
        assert [e.observation for e in memory.entries()] == ["obs4", "obs5", "obs6"]

    def test_zero_capacity_keeps_nothing(self):
        memory = ContextMemory(capacity=0)
        memory.add(MemoryEntry("x", "y", TaskCommand.IDLE))
        assert len(memory) == 0


class TestRenderPrompt:
    def test_deterministic_bytes(self):
        world = scene(vehicles=[(80.0, 0, 19.0), (20.0, 2, 24.0)])
        a = render_prompt(world, NEUTRAL_FEEDBACK)
        b = render_prompt(world, NEUTRAL_FEEDBACK)
        assert a.text == b.text
        assert np.array_equal(a.image, b.image)

    def test_safety_section_toggle(self):
        world = scene()
        with_safety = render_prompt(world, NEUTRAL_FEEDBACK, safety_instructions=True)
        without = render_prompt(world, NEUTRAL_FEEDBACK, safety_instructions=False)
        assert "Safety instructions" in with_safety.text
        assert "Safety instructions" not in without.text

    def test_rejection_notice_line(self):
        world = scene()
        feedback = PlannerFeedback(
            last_command=TaskCommand.LANE_LEFT, feasible=False, rejected=True,
            assist_mode="reverted",
        )
        bundle = render_prompt(world, feedback)
        assert "LANE_LEFT" in bundle.text and "rejected" in bundle.text

    def test_memory_rendered_oldest_first(self):
        world = scene()
        memory = ContextMemory(capacity=5)
        memory.add(MemoryEntry("o1", "first thought", TaskCommand.IDLE))
        memory.add(MemoryEntry("o2", "second thought", TaskCommand.LANE_LEFT))
        text = render_prompt(world, NEUTRAL_FEEDBACK, memory=memory).text
        assert text.index("first thought") < text.index("second thought")

    def test_observation_numbers_vehicles(self):
        world = scene(vehicles=[(80.0, 0, 19.0), (20.0, 2, 24.0)])
        text = render_prompt(world, NEUTRAL_FEEDBACK).text
        assert "1. vehicle 0" in text and "2. vehicle 1" in text
        assert "+30.0 m longitudinal" in text  # 80 - 50


class TestRenderBev:
    def test_empty_road_bitwise_stable(self):
        world = scene()
        a = render_bev(world)
        b = render_bev(world)
        assert np.array_equal(a, b)
        assert a.shape == (120, 400, 3)

    def test_vehicle_centroid_at_affine_pixel(self):
        cfg = BevConfig(show_ids=False)
        world = scene(vehicles=[(80.0, 0, 20.0)])
        img = render_bev(world, cfg)
        from taskmpc.planner.bev import VEHICLE_COLOR

        mask = np.all(img == VEHICLE_COLOR, axis=-1)
        rows, cols = np.nonzero(mask)
        # invert the affine map: world -> pixel
        sx = cfg.width_px / (cfg.ahead_m + cfg.behind_m)
        x0 = world.ego.x - cfg.behind_m
        y_top = world.lanes.y_min - cfg.margin_m
        sy = cfg.height_px / ((world.lanes.y_max + cfg.margin_m) - y_top)
        expected_col = (80.0 - x0) * sx
        expected_row = (0.0 - y_top) * sy
        assert cols.mean() == pytest.approx(expected_col, abs=1.5)
        assert rows.mean() == pytest.approx(expected_row, abs=1.5)

    def test_ego_crosses_lane_line_in_expected_frame(self):
        from taskmpc.planner.bev import EGO_COLOR

        cfg = BevConfig(show_ids=False)
        lanes = LaneGeometry()
        rows_per_frame = []
        for y in np.linspace(lanes.center(1), lanes.center(0), 9):
            world = WorldState(
                ego=EgoState(x=0.0, y=float(y), theta=0.0, v=20.0),
                vehicles=(), lanes=lanes, t=0.0,
            )
            img = render_bev(world, cfg)
            mask = np.all(img == EGO_COLOR, axis=-1)
            rows_per_frame.append(np.nonzero(mask)[0].mean())
        deltas = np.diff(rows_per_frame)
        assert np.all(deltas < 0)  # moves steadily toward lane 0 (upward)


class FlakyTransport:
    def __init__(self, failures, response):
        self.failures = failures
        self.response = response
        self.calls = 0

    def send(self, request):
        self.calls += 1
        if self.calls <= self.failures:
            raise ApiError("rate limited")
        return self.response


class TestChatApiPlanner:
    def cfg(self, **kw):
        return ChatPlannerConfig(memory_capacity=3, backoff_s=0.0, **kw)

    def test_replay_transport_runs_prompt_pipeline(self):
        planner = ChatApiPlanner(ReplayTransport(FIXTURES / "replay"), self.cfg())
        world = scene(vehicles=[(70.0, 0, 19.0)])
        result = planner.plan(world, NEUTRAL_FEEDBACK)
        assert result.command is TaskCommand.LANE_LEFT  # first fixture
        assert result.prompt_text and "Observation:" in result.prompt_text
        assert result.image_sha256 == image_sha256(render_bev(world, self.cfg().bev))
        assert result.request["messages"][0]["content"][1]["type"] == "image_sha256"

    def test_replay_wraps_around(self):
        planner = ChatApiPlanner(ReplayTransport(FIXTURES / "replay"), self.cfg())
        world = scene()
        first_pass = [planner.plan(world, NEUTRAL_FEEDBACK).command for _ in range(8)]
        second = planner.plan(world, NEUTRAL_FEEDBACK).command
        assert second == first_pass[0]

    def test_retry_then_success(self):
        transport = FlakyTransport(failures=2, response="Decision: LANE_RIGHT")
        planner = ChatApiPlanner(transport, self.cfg(retries=2))
        result = planner.plan(scene(), NEUTRAL_FEEDBACK)
        assert result.command is TaskCommand.LANE_RIGHT
        assert transport.calls == 3

    def test_api_failure_falls_back_to_idle(self):
        transport = FlakyTransport(failures=99, response="unused")
        planner = ChatApiPlanner(transport, self.cfg(retries=1))
        result = planner.plan(scene(), NEUTRAL_FEEDBACK)
        assert result.command is TaskCommand.IDLE
        assert result.parse_fallback

    def test_unparseable_reprompts_once_then_idle(self):
        class Unparseable:
            def __init__(self):
                self.calls = 0

            def send(self, request):
                self.calls += 1
                return "I would idle."  # never a valid token

        transport = Unparseable()
        planner = ChatApiPlanner(transport, self.cfg())
        result = planner.plan(scene(), NEUTRAL_FEEDBACK)
        assert result.command is TaskCommand.IDLE
        assert result.parse_fallback
        assert transport.calls == 2  # original + one re-prompt

    def test_reprompt_can_recover(self):
        class SecondTimeLucky:
            def __init__(self):
                self.calls = 0

            def send(self, request):
                self.calls += 1
                return "hmm." if self.calls == 1 else "Decision: LANE_LEFT"

        planner = ChatApiPlanner(SecondTimeLucky(), self.cfg())
        result = planner.plan(scene(), NEUTRAL_FEEDBACK)
        assert result.command is TaskCommand.LANE_LEFT
        assert not result.parse_fallback

    def test_memory_fills_and_rolls(self):
        planner = ChatApiPlanner(ReplayTransport(FIXTURES / "replay"), self.cfg())
        world = scene()
        for _ in range(5):
            planner.plan(world, NEUTRAL_FEEDBACK)
        assert len(planner.memory) == 3  # capacity
