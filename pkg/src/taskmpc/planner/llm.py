"""Chat-completions planner: network transport, replay transport, parsing policy.

The planner renders the prompt bundle, sends it as a chat-completions request
with the scene image attached, and extracts the last command token from the
response. Transport failures retry with exponential backoff and then fall
back to IDLE; an unparseable response is re-prompted once before the same
fallback. Every request is preserved for the episode trace with the image
replaced by its digest.
"""

from __future__ import annotations

import base64
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Protocol, Sequence

from ..errors import ApiError, ParseError
from ..world import MPC_COMMANDS, TaskCommand, WorldState
from .base import ContextMemory, MemoryEntry, PlannerFeedback, PlanResult, parse_command
from .bev import BevConfig, image_sha256, png_bytes
from .prompt import PromptBundle, load_template, render_prompt

API_KEY_ENV = "TASKMPC_API_KEY"


class Transport(Protocol):
    def send(self, request: dict) -> str: ...


class HttpTransport:
    """POSTs chat-completions JSON to a configurable endpoint."""

    def __init__(self, endpoint: str, model: str, timeout_s: float = 30.0,
                 api_key: Optional[str] = None):
        self.endpoint = endpoint
        self.model = model
        self.timeout_s = timeout_s
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV, "")

    def send(self, request: dict) -> str:
        import httpx

        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            response = httpx.post(
                self.endpoint, json=request, headers=headers, timeout=self.timeout_s
            )
            response.raise_for_status()
            payload = response.json()
        except Exception as exc:  # timeout, auth, rate limit, malformed body
            raise ApiError(str(exc)) from exc
        try:
            return payload["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ApiError(f"unexpected response shape: {payload!r:.200}") from exc


class ReplayTransport:
    """Serves canned responses from a fixture directory, in sorted order.

    Each file is either a raw chat-completions JSON body or plain response
    text. The pointer wraps around when the fixtures run out, which keeps long
    episodes fully reproducible.
    """

    def __init__(self, replay_dir: str | Path):
        self.files = sorted(p for p in Path(replay_dir).iterdir() if p.is_file())
        if not self.files:
            raise ApiError(f"no replay fixtures in {replay_dir}")
        self._cursor = 0

    def send(self, request: dict) -> str:
        path = self.files[self._cursor % len(self.files)]
        self._cursor += 1
        text = path.read_text(encoding="utf-8")
        try:
            import json

            payload = json.loads(text)
            if isinstance(payload, dict) and "choices" in payload:
                return payload["choices"][0]["message"]["content"]
        except ValueError:
            pass
        return text


@dataclass
class ChatPlannerConfig:
    model: str = "gpt-4o"
    vocabulary: Sequence[TaskCommand] = MPC_COMMANDS
    safety_instructions: bool = True
    d_safe: float = 10.0
    memory_capacity: int = 5
    retries: int = 2
    backoff_s: float = 0.5
    template_path: Optional[str] = None
    bev: BevConfig = field(default_factory=BevConfig)


class ChatApiPlanner:
    """Prompt pipeline around any transport (live HTTP or fixture replay)."""

    def __init__(self, transport: Transport, cfg: ChatPlannerConfig = ChatPlannerConfig()):
        self.transport = transport
        self.cfg = cfg
        self.memory = ContextMemory(cfg.memory_capacity)
        self.template = load_template(cfg.template_path)

    def _build_request(self, bundle: PromptBundle) -> dict:
        image_b64 = base64.b64encode(png_bytes(bundle.image)).decode("ascii")
        return {
            "model": self.cfg.model,
            "messages": [
                {
                    "role": "user",
                    "content": [
                        {"type": "text", "text": bundle.text},
                        {
                            "type": "image_url",
                            "image_url": {"url": f"data:image/png;base64,{image_b64}"},
                        },
                    ],
                }
            ],
        }

    def _send(self, request: dict) -> str:
        delay = self.cfg.backoff_s
        for attempt in range(self.cfg.retries + 1):
            try:
                return self.transport.send(request)
            except ApiError:
                if attempt == self.cfg.retries:
                    raise
                time.sleep(delay)
                delay *= 2

    def plan(self, world: WorldState, feedback: PlannerFeedback) -> PlanResult:
        bundle = render_prompt(
            world,
            feedback,
            memory=self.memory,
            safety_instructions=self.cfg.safety_instructions,
            vocabulary=self.cfg.vocabulary,
            d_safe=self.cfg.d_safe,
            template=self.template,
            bev=self.cfg.bev,
        )
        request = self._build_request(bundle)
        # The trace keeps the request with the image replaced by its digest.
        sha = image_sha256(bundle.image)
        loggable = {
            "model": request["model"],
            "messages": [
                {"role": "user", "content": [{"type": "text", "text": bundle.text},
                                             {"type": "image_sha256", "value": sha}]}
            ],
        }

        fallback = False
        try:
            response = self._send(request)
        except ApiError as exc:
            return PlanResult(
                command=TaskCommand.IDLE,
                reasoning=f"(api error: {exc})",
                prompt_text=bundle.text,
                image_sha256=sha,
                request=loggable,
                response_text=None,
                parse_fallback=True,
            )
        try:
            command = parse_command(response, self.cfg.vocabulary)
        except ParseError:
            nudge = dict(request)
            nudge["messages"] = request["messages"] + [
                {"role": "assistant", "content": response},
                {
                    "role": "user",
                    "content": "Reply with exactly one command token from: "
                    + ", ".join(c.value for c in self.cfg.vocabulary),
                },
            ]
            try:
                response = self._send(nudge)
                command = parse_command(response, self.cfg.vocabulary)
            except (ApiError, ParseError):
                command, fallback = TaskCommand.IDLE, True

        note = ""
        if feedback.rejected:
            note = "previous command rejected"
        elif not feedback.feasible:
            note = "previous command assisted"
        self.memory.add(
            MemoryEntry(
                observation=f"t={world.t:.2f}s lane={world.ego_lane()}",
                reasoning=(response or "")[:200],
                command=command,
                feedback_note=note,
            )
        )
        return PlanResult(
            command=command,
            reasoning=response or "",
            prompt_text=bundle.text,
            image_sha256=sha,
            request=loggable,
            response_text=response,
            parse_fallback=fallback,
        )
