from .base import (
    ContextMemory,
    MemoryEntry,
    NEUTRAL_FEEDBACK,
    Planner,
    PlannerFeedback,
    PlanResult,
    parse_command,
)
from .bev import BevConfig, image_sha256, png_bytes, render_bev
from .llm import API_KEY_ENV, ChatApiPlanner, ChatPlannerConfig, HttpTransport, ReplayTransport
from .prompt import PromptBundle, load_template, render_prompt
from .scripted import RecklessPlanner, ScriptedPlanner

__all__ = [
    "API_KEY_ENV",
    "BevConfig",
    "ChatApiPlanner",
    "ChatPlannerConfig",
    "ContextMemory",
    "HttpTransport",
    "MemoryEntry",
    "NEUTRAL_FEEDBACK",
    "Planner",
    "PlannerFeedback",
    "PlanResult",
    "PromptBundle",
    "RecklessPlanner",
    "ReplayTransport",
    "ScriptedPlanner",
    "image_sha256",
    "load_template",
    "parse_command",
    "png_bytes",
    "render_bev",
    "render_prompt",
]
