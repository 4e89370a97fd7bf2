from __future__ import annotations

from pathlib import Path

import pytest

from taskmpc.config import AppConfig, load_config

REPO_DEFAULTS = Path(__file__).parent.parent / "configs" / "default.ini"


class TestDefaults:
    def test_shipped_file_matches_builtins(self):
        # The documented config is a faithful copy of the in-code defaults.
        assert load_config(REPO_DEFAULTS) == AppConfig()

    def test_digest_stable_and_sensitive(self):
        a, b = AppConfig(), AppConfig()
        assert a.digest() == b.digest()
        from dataclasses import replace

        c = replace(a, mppi=replace(a.mppi, samples=64))
        assert c.digest() != a.digest()

    def test_episode_carries_seed(self):
        app = AppConfig()
        assert app.episode(17).seed == 17
        assert app.episode(17).duration == app.sim.duration


class TestOverrides:
    def test_section_override(self, tmp_path):
        path = tmp_path / "c.ini"
        path.write_text("[mppi]\nsamples = 64\ntemperature = 5.0\n")
        app = load_config(path)
        assert app.mppi.samples == 64
        assert app.mppi.temperature == 5.0
        assert app.mppi.mu == 100.0  # untouched default

    def test_tuple_and_bool_coercion(self, tmp_path):
        path = tmp_path / "c.ini"
        path.write_text(
            "[task]\nq_cs = 2.0, 0.5, 0.25\n[planner]\nsafety_instructions = false\n"
        )
        app = load_config(path)
        assert app.task.q_cs == (2.0, 0.5, 0.25)
        assert app.planner.safety_instructions is False

    def test_lane_layout_recomputes_road_edges(self, tmp_path):
        path = tmp_path / "c.ini"
        path.write_text("[lanes]\ncount = 4\nwidth = 3.5\n")
        app = load_config(path)
        assert app.sim.lanes.count == 4
        assert app.ego.y_min == pytest.approx(-1.75)
        assert app.ego.y_max == pytest.approx(3.5 * 3.5)

    def test_explicit_road_edges_win(self, tmp_path):
        path = tmp_path / "c.ini"
        path.write_text("[lanes]\ncount = 4\n[ego]\ny_min = -3.0\ny_max = 15.0\n")
        app = load_config(path)
        assert app.ego.y_min == -3.0 and app.ego.y_max == 15.0

    def test_unknown_section_rejected(self, tmp_path):
        path = tmp_path / "c.ini"
        path.write_text("[mpppi]\nsamples = 4\n")
        with pytest.raises(ValueError, match="unknown config section"):
            load_config(path)

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "c.ini"
        path.write_text("[mppi]\nsample_count = 4\n")
        with pytest.raises(ValueError, match="unknown key"):
            load_config(path)

    def test_none_string_maps_to_none(self, tmp_path):
        path = tmp_path / "c.ini"
        path.write_text("[planner]\nreplay_dir = none\n")
        assert load_config(path).planner.replay_dir is None
