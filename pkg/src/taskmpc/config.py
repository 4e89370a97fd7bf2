"""One configuration document for the whole stack.

The file format is INI: a [section] per subsystem, key = value pairs,
# comments. Every default below can be overridden; unknown sections or keys
are rejected so typos fail loudly. See configs/default.ini for the documented
copy of the defaults.
"""

from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

from .iocp import IocpParams
from .mppi import MppiConfig
from .primitives import EgoParams, TaskParams
from .sim import EpisodeConfig, IdmParams, PidGains, VehicleGeometry
from .planner.bev import BevConfig
from .world import LaneGeometry


@dataclass(frozen=True)
class SwitcherConfig:
    """Tolerances for the warm-start feasibility test; the bridge budget
    (n_max) lives under [cadence]."""

    eps_g: float = 0.0
    eps_h: float = 1e-6


@dataclass(frozen=True)
class CadenceConfig:
    """Coupling between slow task planning and the fast control loop."""

    steps_per_plan: int = 30  # non-bridge control steps before the next plan
    pid_plan_hz: float = 1.0
    n_max: int = 50

    def __post_init__(self):
        if self.steps_per_plan < 1 or not self.pid_plan_hz > 0:
            raise ValueError("cadence values must be positive")


@dataclass(frozen=True)
class PlannerSettings:
    kind: str = "scripted"  # scripted | reckless | replay | api
    endpoint: str = "https://api.openai.com/v1/chat/completions"
    model: str = "gpt-4o"
    timeout_s: float = 30.0
    memory_capacity: int = 5
    safety_instructions: bool = True
    replay_dir: Optional[str] = None
    script: tuple[str, ...] = ("IDLE",)
    synchronous: bool = True
    latency_steps: int = 0  # asynchronous mode: steps before a plan lands


@dataclass(frozen=True)
class HarnessSettings:
    include_target_cost: bool = False  # bridge cost variant (see iocp module)
    lane_tolerance: float = 0.3  # |y - center| that counts as arrived [m]
    pid_speed_setpoint: float = 25.0


@dataclass(frozen=True)
class AppConfig:
    ego: EgoParams = field(default_factory=EgoParams)
    task: TaskParams = field(default_factory=TaskParams)
    mppi: MppiConfig = field(default_factory=MppiConfig)
    iocp: IocpParams = field(default_factory=IocpParams)
    switcher: SwitcherConfig = field(default_factory=SwitcherConfig)
    cadence: CadenceConfig = field(default_factory=CadenceConfig)
    planner: PlannerSettings = field(default_factory=PlannerSettings)
    harness: HarnessSettings = field(default_factory=HarnessSettings)
    sim: EpisodeConfig = field(default_factory=EpisodeConfig)
    idm: IdmParams = field(default_factory=IdmParams)
    pid: PidGains = field(default_factory=PidGains)
    bev: BevConfig = field(default_factory=BevConfig)

    def digest(self) -> str:
        """Stable content hash, recorded in trace headers."""
        def default(o):
            if hasattr(o, "__dict__") or hasattr(o, "__dataclass_fields__"):
                return asdict(o)
            return str(o)

        blob = json.dumps(asdict(self), sort_keys=True, default=default)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def episode(self, seed: int) -> EpisodeConfig:
        return replace(self.sim, seed=seed)


_SECTIONS = {
    "ego": EgoParams,
    "task": TaskParams,
    "mppi": MppiConfig,
    "iocp": IocpParams,
    "switcher": SwitcherConfig,
    "cadence": CadenceConfig,
    "planner": PlannerSettings,
    "harness": HarnessSettings,
    "sim": EpisodeConfig,
    "idm": IdmParams,
    "pid": PidGains,
    "bev": BevConfig,
    "lanes": LaneGeometry,
    "geometry": VehicleGeometry,
}


def _coerce(raw: str, current):
    if isinstance(current, bool):
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if isinstance(current, int) and not isinstance(current, bool):
        return int(raw)
    if isinstance(current, float):
        return float(raw)
    if isinstance(current, tuple):
        parts = tuple(p.strip() for p in raw.split(",") if p.strip())
        if current and isinstance(current[0], float):
            return tuple(float(p) for p in parts)
        if current and isinstance(current[0], int):
            return tuple(int(p) for p in parts)
        return parts
    if current is None or isinstance(current, str):
        return raw if raw.lower() != "none" else None
    raise ValueError(f"cannot coerce {raw!r}")


def load_config(path: Optional[str | Path] = None) -> AppConfig:
    """Defaults, overlaid with the given INI file when provided."""
    cfg = AppConfig()
    if path is None:
        return cfg
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    with open(path, encoding="utf-8") as fh:
        parser.read_file(fh)

    overrides: dict[str, object] = {}
    lanes = cfg.sim.lanes
    geometry = cfg.sim.geometry
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ValueError(f"unknown config section [{section}]")
        if section in ("lanes", "geometry"):
            base = lanes if section == "lanes" else geometry
            updated = _apply(base, parser[section], section)
            if section == "lanes":
                lanes = updated
            else:
                geometry = updated
            continue
        attr = section
        base = getattr(cfg, attr)
        overrides[attr] = _apply(base, parser[section], section)

    if "sim" in overrides:
        overrides["sim"] = replace(overrides["sim"], lanes=lanes, geometry=geometry)
    else:
        overrides["sim"] = replace(cfg.sim, lanes=lanes, geometry=geometry)
    merged = replace(cfg, **overrides)

    # Road edges follow the lane layout unless the file pinned them explicitly.
    explicit_y = "ego" in parser and (
        "y_min" in parser["ego"] or "y_max" in parser["ego"]
    )
    if not explicit_y:
        merged = replace(
            merged,
            ego=replace(merged.ego, y_min=lanes.y_min, y_max=lanes.y_max),
        )
    return merged


def _apply(base, section, name: str):
    known = {f.name: getattr(base, f.name) for f in fields(base)}
    updates = {}
    for key, raw in section.items():
        if key not in known:
            raise ValueError(f"unknown key {key!r} in section [{name}]")
        updates[key] = _coerce(raw, known[key])
    return replace(base, **updates)
