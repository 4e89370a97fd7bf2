"""Deterministic text-and-image prompt assembly.

The static wording lives in an editable template asset; this module generates
the observation and memory sections and stitches everything together in a
fixed order.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from typing import Optional, Sequence

import numpy as np

from ..world import TaskCommand, WorldState
from .base import ContextMemory, PlannerFeedback
from .bev import BevConfig, render_bev

SECTION_ORDER = (
    "system",
    "observation",
    "command_format",
    "safety_instructions",
    "user_instruction",
    "memory",
    "cot_cue",
)


@dataclass(frozen=True)
class PromptBundle:
    """One planner query: assembled text plus the rendered scene image."""

    text: str
    image: np.ndarray


def load_template(path: Optional[str] = None) -> dict[str, str]:
    """Parse '## name' delimited sections from the template asset or a file."""
    if path is None:
        source = (
            resources.files("taskmpc.planner").joinpath("templates/prompt.txt").read_text()
        )
    else:
        with open(path, encoding="utf-8") as fh:
            source = fh.read()
    sections: dict[str, list[str]] = {}
    current: Optional[str] = None
    for line in source.splitlines():
        if line.startswith("## "):
            current = line[3:].strip()
            sections[current] = []
        elif current is not None:
            sections[current].append(line)
    return {name: "\n".join(lines).strip() for name, lines in sections.items()}


def observation_text(world: WorldState, feedback: PlannerFeedback) -> str:
    """Numbered, fixed-precision scene description plus feasibility feedback."""
    ego = world.ego
    lines = [
        "Observation:",
        f"Ego: lane {world.ego_lane()} of {world.lanes.count - 1} (0 = leftmost), "
        f"speed {ego.v:.1f} m/s, lateral offset "
        f"{ego.y - world.lanes.center(world.ego_lane()):+.1f} m.",
    ]
    for i, veh in enumerate(sorted(world.vehicles, key=lambda v: v.vid), start=1):
        dx = veh.state.x - ego.x
        lines.append(
            f"{i}. vehicle {veh.vid}: lane {veh.lane}, {dx:+.1f} m longitudinal, "
            f"speed {veh.state.vx:.1f} m/s."
        )
    if feedback.last_command is not None:
        if feedback.rejected:
            lines.append(
                f"Feedback: your previous command {feedback.last_command.value} was "
                "infeasible and has been rejected."
            )
        elif not feedback.feasible:
            lines.append(
                f"Feedback: your previous command {feedback.last_command.value} was not "
                "immediately feasible and is being assisted."
            )
        else:
            lines.append(
                f"Feedback: your previous command {feedback.last_command.value} was feasible."
            )
    return "\n".join(lines)


def memory_text(memory: Optional[ContextMemory]) -> str:
    if memory is None or len(memory) == 0:
        return ""
    lines = ["Previous planning steps (oldest first):"]
    for i, entry in enumerate(memory.entries(), start=1):
        note = f" [{entry.feedback_note}]" if entry.feedback_note else ""
        lines.append(f"{i}. chose {entry.command.value}{note}: {entry.reasoning}".rstrip())
    return "\n".join(lines)


def render_prompt(
    world: WorldState,
    feedback: PlannerFeedback,
    memory: Optional[ContextMemory] = None,
    safety_instructions: bool = True,
    vocabulary: Sequence[TaskCommand] = None,
    d_safe: float = 10.0,
    template: Optional[dict[str, str]] = None,
    bev: BevConfig = BevConfig(),
) -> PromptBundle:
    """Assemble the full prompt; equal arguments give byte-equal output."""
    from ..world import MPC_COMMANDS

    vocabulary = MPC_COMMANDS if vocabulary is None else tuple(vocabulary)
    tpl = load_template() if template is None else template
    commands = ", ".join(c.value for c in vocabulary)

    parts = []
    for section in SECTION_ORDER:
        if section == "observation":
            parts.append(observation_text(world, feedback))
        elif section == "memory":
            text = memory_text(memory)
            if text:
                parts.append(text)
        elif section == "safety_instructions":
            if safety_instructions and section in tpl:
                parts.append(tpl[section].format(d_safe=d_safe))
        elif section in tpl:
            parts.append(tpl[section].format(commands=commands, d_safe=d_safe))
    text = "\n\n".join(p for p in parts if p)
    return PromptBundle(text=text, image=render_bev(world, bev))
