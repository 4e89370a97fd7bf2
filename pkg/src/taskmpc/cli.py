"""Command line front end: run benchmark suites, re-aggregate, audit traces."""

from __future__ import annotations

from dataclasses import replace
from pathlib import Path

import click

from .config import AppConfig, load_config
from .harness import PipelineKind, lane_change_safety_audit, report, run_suite
from .planner import (
    ChatApiPlanner,
    ChatPlannerConfig,
    HttpTransport,
    RecklessPlanner,
    ReplayTransport,
    ScriptedPlanner,
)
from .trace import read_trace, validate_trace
from .world import MPC_COMMANDS, PID_COMMANDS, TaskCommand


def _planner_factory(kind: PipelineKind, app: AppConfig, planner_kind: str, script):
    vocabulary = PID_COMMANDS if kind is PipelineKind.LVLM2PID else MPC_COMMANDS

    if planner_kind == "scripted":
        if script == "reckless":
            return RecklessPlanner
        commands = _load_script(script)
        return lambda: ScriptedPlanner(commands)
    if planner_kind == "replay":
        if app.planner.replay_dir is None:
            raise click.UsageError("replay planner needs planner.replay_dir in the config")
        cfg = ChatPlannerConfig(
            model=app.planner.model,
            vocabulary=vocabulary,
            safety_instructions=app.planner.safety_instructions,
            d_safe=app.task.d_safe_acc,
            memory_capacity=app.planner.memory_capacity,
            bev=app.bev,
        )
        return lambda: ChatApiPlanner(ReplayTransport(app.planner.replay_dir), cfg)
    if planner_kind == "api":
        cfg = ChatPlannerConfig(
            model=app.planner.model,
            vocabulary=vocabulary,
            safety_instructions=app.planner.safety_instructions,
            d_safe=app.task.d_safe_acc,
            memory_capacity=app.planner.memory_capacity,
            bev=app.bev,
        )
        transport = HttpTransport(
            app.planner.endpoint, app.planner.model, app.planner.timeout_s
        )
        return lambda: ChatApiPlanner(transport, cfg)
    raise click.UsageError(f"unknown planner kind {planner_kind!r}")


def _load_script(script) -> list[TaskCommand]:
    if script is None:
        return [TaskCommand.IDLE]
    path = Path(script)
    if path.exists():
        tokens = [
            line.strip()
            for line in path.read_text(encoding="utf-8").splitlines()
            if line.strip() and not line.startswith("#")
        ]
    else:
        tokens = [t.strip() for t in str(script).split(",") if t.strip()]
    try:
        return [TaskCommand(t) for t in tokens]
    except ValueError as exc:
        raise click.UsageError(f"bad script entry: {exc}") from exc


@click.group()
def main():
    """Task-scalable MPC benchmark harness."""


@main.command()
@click.option("--pipeline", type=click.Choice([k.value for k in PipelineKind]), default="proposed")
@click.option("--episodes", type=int, default=1, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True, help="first episode seed")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--no-safety-instructions", is_flag=True, help="prompt ablation")
@click.option("--no-iocp", is_flag=True, help="reject infeasible commands immediately")
@click.option("--planner", "planner_kind", type=click.Choice(["api", "scripted", "replay"]), default=None)
@click.option("--script", default=None, help="command file, comma list, or 'reckless'")
@click.option("--out", "out_dir", type=click.Path(), default="runs/latest", show_default=True)
def run(pipeline, episodes, seed, config_path, no_safety_instructions, no_iocp,
        planner_kind, script, out_dir):
    """Run a suite of seeded episodes and write traces plus a report."""
    app = load_config(config_path)
    if no_safety_instructions:
        app = replace(app, planner=replace(app.planner, safety_instructions=False))
    kind = PipelineKind(pipeline)
    planner_kind = planner_kind or app.planner.kind
    if planner_kind == "reckless":
        planner_kind, script = "scripted", "reckless"
    if app.planner.kind == "scripted" and script is None:
        script = ",".join(app.planner.script)
    factory = _planner_factory(kind, app, planner_kind, script)

    seeds = list(range(seed, seed + episodes))
    run_suite(kind, seeds, app, factory, out_dir=out_dir, use_iocp=not no_iocp)
    payload = report(out_dir, d_safe=app.task.d_safe_acc,
                     lane_tolerance=app.harness.lane_tolerance)
    click.echo(f"wrote {len(seeds)} trace(s) to {out_dir}")
    for name, metrics in payload.items():
        click.echo(f"{name}: success {metrics['successes']}/{metrics['episodes']}, "
                   f"lane changes {metrics['completed_lane_changes']} "
                   f"(safe {metrics['safe_lane_changes']})")


@main.command("report")
@click.option("--in", "run_dir", type=click.Path(exists=True), required=True)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
def report_cmd(run_dir, config_path):
    """Re-aggregate a run directory into metrics files and the travel plot."""
    app = load_config(config_path)
    payload = report(run_dir, d_safe=app.task.d_safe_acc,
                     lane_tolerance=app.harness.lane_tolerance)
    click.echo((Path(run_dir) / "metrics.txt").read_text())


@main.command()
@click.option("--trace", "trace_file", type=click.Path(exists=True), required=True)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
def audit(trace_file, config_path):
    """Validate a trace and print its lane-change safety labels."""
    app = load_config(config_path)
    check = validate_trace(trace_file)
    if not check.ok:
        for err in check.errors:
            click.echo(f"error: {err}", err=True)
        raise SystemExit(1)
    for warning in check.warnings:
        click.echo(f"warning: {warning}", err=True)
    records, warnings = read_trace(trace_file)
    for warning in warnings:
        click.echo(f"warning: {warning}", err=True)
    spans = lane_change_safety_audit(
        records, d_safe=app.task.d_safe_acc, lane_tolerance=app.harness.lane_tolerance
    )
    if not spans:
        click.echo("no lane changes in trace")
        return
    for span in spans:
        status = "safe" if span.safe else ("unsafe" if span.completed else "abandoned")
        click.echo(
            f"steps {span.start_step}-{span.end_step}: lane {span.target_lane} "
            f"{status} (min neighbor gap {span.min_gap:.1f} m)"
        )


if __name__ == "__main__":
    main()
