"""Composable task-scalable MPC with a highway benchmark harness."""

from .assigner import assign, initial_state, target_ocp
from .config import AppConfig, CadenceConfig, SwitcherConfig, load_config
from .errors import TaskMpcError
from .harness import (
    LaneChangeSpan,
    Metrics,
    PipelineKind,
    aggregate,
    lane_change_safety_audit,
    report,
    run_episode,
    run_suite,
    summarize_episode,
)
from .iocp import IocpParams, is_iocp, make_iocp
from .mppi import MppiConfig, SolveResult, penalized_stage_cost, solve
from .ocp import (
    ControlInput,
    InputBox,
    MpcPrimitive,
    Ocp,
    PrimitiveKind,
    Stage,
    Trajectory,
    build_ocp,
    compose,
    empty_primitive,
    eval_constraints,
    make_view,
    rollout,
    total_cost,
)
from .primitives import (
    EgoParams,
    PvState,
    TaskParams,
    make_acc,
    make_constant_speed,
    make_kbm,
    make_lane_change,
    make_lane_keep,
    make_pv_safety,
)
from .sim import (
    EpisodeConfig,
    PidController,
    VehicleGeometry,
    detect_collision,
    spawn_episode,
    step_world,
)
from .switcher import (
    FeasibilityReport,
    SwitchDecision,
    SwitcherState,
    SwitchMode,
    check_feasibility,
    switch,
)
from .world import (
    EgoState,
    LaneGeometry,
    TaskCommand,
    Vehicle,
    WorldState,
)

__version__ = "0.1.0"
