"""Planner-facing contracts: feedback, memory, command parsing."""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass
from typing import Optional, Protocol, Sequence

from ..errors import ParseError
from ..world import MPC_COMMANDS, TaskCommand, WorldState


@dataclass(frozen=True)
class PlannerFeedback:
    """What the control layer reports back about the last command."""

    last_command: Optional[TaskCommand] = None
    feasible: bool = True
    rejected: bool = False
    assist_mode: str = "direct"  # direct | intermediate | reverted

    def __post_init__(self):
        if self.rejected and self.feasible:
            raise ValueError("a rejected command cannot be feasible")


NEUTRAL_FEEDBACK = PlannerFeedback()


@dataclass(frozen=True)
class MemoryEntry:
    observation: str
    reasoning: str
    command: TaskCommand
    feedback_note: str = ""


class ContextMemory:
    """FIFO ring of past plans; capacity 0 keeps nothing."""

    def __init__(self, capacity: int = 5):
        if capacity < 0:
            raise ValueError("capacity must be >= 0")
        self.capacity = capacity
        self._entries: deque[MemoryEntry] = deque(maxlen=capacity if capacity else 1)
        if capacity == 0:
            self._entries = deque(maxlen=0)

    def add(self, entry: MemoryEntry) -> None:
        self._entries.append(entry)

    def entries(self) -> tuple[MemoryEntry, ...]:
        return tuple(self._entries)  # oldest first

    def __len__(self) -> int:
        return len(self._entries)


@dataclass(frozen=True)
class PlanResult:
    """A planner's answer plus everything worth auditing about how it was made."""

    command: TaskCommand
    reasoning: str = ""
    prompt_text: Optional[str] = None
    image_sha256: Optional[str] = None
    request: Optional[dict] = None
    response_text: Optional[str] = None
    parse_fallback: bool = False


class Planner(Protocol):
    def plan(self, world: WorldState, feedback: PlannerFeedback) -> PlanResult: ...


_TOKEN_PATTERNS = {cmd: re.compile(rf"\b{cmd.value}\b") for cmd in TaskCommand}


def parse_command(
    text: str, vocabulary: Sequence[TaskCommand] = MPC_COMMANDS
) -> TaskCommand:
    """Extract the decision token from a free-form response.

    Reasoning text precedes the decision, so the last valid token wins.
    """
    best: tuple[int, TaskCommand] | None = None
    for cmd in vocabulary:
        for m in _TOKEN_PATTERNS[cmd].finditer(text):
            if best is None or m.start() > best[0]:
                best = (m.start(), cmd)
    if best is None:
        raise ParseError(f"no command token in response: {text[:80]!r}")
    return best[1]
