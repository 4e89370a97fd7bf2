from __future__ import annotations

from pathlib import Path

from click.testing import CliRunner

from taskmpc.cli import main
from taskmpc.trace import read_trace

FIXTURES = Path(__file__).parent / "fixtures"


def write_quick_config(path: Path, extra: str = "") -> Path:
    path.write_text(
        "[sim]\nduration = 2.0\nn_vehicles = 4\n"
        "[mppi]\nsamples = 64\n" + extra
    )
    return path


class TestRun:
    def test_run_scripted_writes_traces_and_report(self, tmp_path):
        cfg = write_quick_config(tmp_path / "quick.ini")
        out = tmp_path / "out"
        runner = CliRunner()
        result = runner.invoke(main, [
            "run", "--pipeline", "proposed", "--episodes", "2", "--seed", "5",
            "--config", str(cfg), "--planner", "scripted", "--script", "IDLE",
            "--out", str(out),
        ])
        assert result.exit_code == 0, result.output
        assert (out / "proposed" / "5.trace").exists()
        assert (out / "proposed" / "6.trace").exists()
        assert (out / "metrics.json").exists()
        assert (out / "metrics.txt").exists()
        assert (out / "travel_distance.png").exists()

    def test_run_reckless_keyword(self, tmp_path):
        cfg = write_quick_config(tmp_path / "quick.ini")
        out = tmp_path / "out"
        runner = CliRunner()
        result = runner.invoke(main, [
            "run", "--pipeline", "lvlm2pid", "--episodes", "1",
            "--config", str(cfg), "--planner", "scripted", "--script", "reckless",
            "--out", str(out),
        ])
        assert result.exit_code == 0, result.output

    def test_run_replay_planner(self, tmp_path):
        cfg = write_quick_config(
            tmp_path / "quick.ini",
            extra=f"[planner]\nreplay_dir = {FIXTURES / 'replay'}\n",
        )
        out = tmp_path / "out"
        runner = CliRunner()
        result = runner.invoke(main, [
            "run", "--pipeline", "proposed", "--episodes", "1",
            "--config", str(cfg), "--planner", "replay", "--out", str(out),
        ])
        assert result.exit_code == 0, result.output
        records, _ = read_trace(out / "proposed" / "0.trace")
        plan = next(r for r in records if r.kind == "plan")
        assert "prompt_text" in plan.payload  # the full prompt pipeline ran

    def test_no_iocp_and_no_safety_flags(self, tmp_path):
        cfg = write_quick_config(tmp_path / "quick.ini")
        out = tmp_path / "out"
        runner = CliRunner()
        result = runner.invoke(main, [
            "run", "--pipeline", "proposed", "--episodes", "1",
            "--config", str(cfg), "--planner", "scripted", "--script",
            "IDLE,LANE_LEFT", "--no-iocp", "--no-safety-instructions",
            "--out", str(out),
        ])
        assert result.exit_code == 0, result.output
        records, _ = read_trace(out / "proposed" / "0.trace")
        assert records[0].payload["use_iocp"] is False


class TestReportAndAudit:
    def test_report_rerun_is_stable(self, tmp_path):
        cfg = write_quick_config(tmp_path / "quick.ini")
        out = tmp_path / "out"
        runner = CliRunner()
        runner.invoke(main, [
            "run", "--pipeline", "proposed", "--episodes", "1",
            "--config", str(cfg), "--planner", "scripted", "--script", "IDLE",
            "--out", str(out),
        ], catch_exceptions=False)
        first = (out / "metrics.json").read_bytes()
        result = runner.invoke(main, ["report", "--in", str(out)])
        assert result.exit_code == 0, result.output
        assert (out / "metrics.json").read_bytes() == first

    def test_audit_prints_labels_or_none(self, tmp_path):
        cfg = write_quick_config(tmp_path / "quick.ini")
        out = tmp_path / "out"
        runner = CliRunner()
        runner.invoke(main, [
            "run", "--pipeline", "proposed", "--episodes", "1",
            "--config", str(cfg), "--planner", "scripted", "--script", "IDLE",
            "--out", str(out),
        ], catch_exceptions=False)
        result = runner.invoke(main, ["audit", "--trace", str(out / "proposed" / "0.trace")])
        assert result.exit_code == 0, result.output
        assert "lane" in result.output or "no lane changes" in result.output
