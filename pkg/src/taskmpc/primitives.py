"""The six concrete driving primitives and their parameter sets.

Factory summary (state block / cost terms / inequality count):

==========  ===========  ==========================================  ====
factory     state        cost terms                                  n_g
==========  ===========  ==========================================  ====
kbm         x,y,theta,v  none                                        0
lane keep   --           y, theta, theta_dot, delta, delta_dot       4
lane change --           y-y_ref, theta, theta_dot, delta, delta_dot 5
const speed --           v-v_ref, a, a_dot                           2
acc         --           gap-d_acc, a, a_dot                         3
pv safety   4 per pv     none                                        1
==========  ===========  ==========================================  ====

The stateless primitives read the components they need by name from the
assembled schema: ego pose and speed, and, for the vehicle-tracking ones, the
relevant clearance primitive's predicted state. That keeps every reference to
other traffic anchored to the live observation at each solve.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MissingTarget
from .ocp import Array, InputBox, MpcPrimitive, PrimitiveKind, Stage, StateView


@dataclass(frozen=True)
class EgoParams:
    """Ego geometry and actuator/road box bounds."""

    wheelbase: float = 2.5  # [m]
    a_min: float = -5.0  # [m/s^2]
    a_max: float = 5.0
    # +-0.15 rad caps lateral acceleration near 1 g at highway speed; wider
    # boxes let the sampling solver plan physically absurd swerves.
    delta_min: float = -0.15  # [rad]
    delta_max: float = 0.15
    y_min: float = -2.0  # road edges [m]
    y_max: float = 10.0

    def __post_init__(self):
        if not self.wheelbase > 0:
            raise ValueError("wheelbase must be positive")
        for lo, hi, what in (
            (self.a_min, self.a_max, "a"),
            (self.delta_min, self.delta_max, "delta"),
            (self.y_min, self.y_max, "y"),
        ):
            if not lo < hi:
                raise ValueError(f"{what} bounds must satisfy min < max")

    def input_box(self) -> InputBox:
        return InputBox(self.a_min, self.a_max, self.delta_min, self.delta_max)


@dataclass(frozen=True)
class TaskParams:
    """Task references, safety distances, and cost weights.

    Weight vectors pair with the cost-term order in the module docstring.
    """

    v_ref: float = 25.0  # [m/s]
    y_ref: float = 0.0  # target lane center [m]
    d_acc: float = 20.0  # ACC target gap [m]
    d_safe_lc: float = 10.0  # [m]
    d_safe_acc: float = 10.0  # [m]
    d_safe_pv: float = 6.0  # [m]
    # Weight scales are coupled to the solver's violation penalty: every term
    # must stay well under it across its realistic range, or the solver will
    # trade constraint violations for task progress. The heading weight keeps
    # lane changes at sane lateral speeds; the acceleration-rate weight is
    # small because the sampled acceleration noise is white and (da/dt)^2 at
    # dt = 0.05 would otherwise swamp everything else.
    q_lk: tuple[float, ...] = (1.0, 100.0, 3.0, 0.1, 0.1)
    q_lc: tuple[float, ...] = (1.0, 100.0, 3.0, 0.1, 0.1)
    q_cs: tuple[float, ...] = (0.25, 0.1, 0.001)
    q_acc: tuple[float, ...] = (0.2, 0.1, 0.001)

    def __post_init__(self):
        for d, what in (
            (self.d_acc, "d_acc"),
            (self.d_safe_lc, "d_safe_lc"),
            (self.d_safe_acc, "d_safe_acc"),
            (self.d_safe_pv, "d_safe_pv"),
        ):
            if not d > 0:
                raise ValueError(f"{what} must be positive")
        if len(self.q_lk) != 5 or len(self.q_lc) != 5:
            raise ValueError("lateral weight vectors carry 5 terms")
        if len(self.q_cs) != 3 or len(self.q_acc) != 3:
            raise ValueError("longitudinal weight vectors carry 3 terms")
        for q in (*self.q_lk, *self.q_lc, *self.q_cs, *self.q_acc):
            if q < 0:
                raise ValueError("weights must be nonnegative")


@dataclass(frozen=True)
class PvState:
    """Another vehicle's kinematic state: position and velocity."""

    x: float
    y: float
    vx: float
    vy: float

    def __post_init__(self):
        if not all(np.isfinite(v) for v in (self.x, self.y, self.vx, self.vy)):
            raise ValueError("vehicle state must be finite")

    def as_array(self) -> Array:
        return np.array([self.x, self.y, self.vx, self.vy])


def make_kbm(params: EgoParams) -> MpcPrimitive:
    """Ego motion: rear-axle kinematic bicycle over state (x, y, theta, v)."""
    wheelbase = params.wheelbase

    def f(x: Array, u: Array) -> Array:
        v = x[..., 3]
        theta = x[..., 2]
        return np.stack(
            [
                v * np.cos(theta),
                v * np.sin(theta),
                v / wheelbase * np.tan(u[..., 1]),
                u[..., 0],
            ],
            axis=-1,
        )

    return MpcPrimitive(
        name="kbm",
        kind=PrimitiveKind.EGO_DYNAMICS,
        input_space=params.input_box(),
        state_names=("x", "y", "theta", "v"),
        dynamics=f,
    )


def _lateral_cost(ego: EgoParams, weights, y_ref: float):
    q_y, q_th, q_thd, q_d, q_dd = weights
    wheelbase = ego.wheelbase

    def cost(view: StateView, u: Array, stage: Stage) -> Array:
        theta = view["theta"]
        delta = u[..., 1]
        theta_dot = view["v"] / wheelbase * np.tan(delta)
        delta_dot = (delta - stage.u_prev[..., 1]) / stage.dt
        return (
            q_y * (view["y"] - y_ref) ** 2
            + q_th * theta**2
            + q_thd * theta_dot**2
            + q_d * delta**2
            + q_dd * delta_dot**2
        )

    return cost


def _lateral_box(ego: EgoParams, prefix: str):
    y_min, y_max = ego.y_min, ego.y_max
    d_min, d_max = ego.delta_min, ego.delta_max

    def g(view: StateView, u: Array, stage: Stage) -> Array:
        y = view["y"]
        delta = u[..., 1]
        return np.stack([y_min - y, y - y_max, d_min - delta, delta - d_max], axis=-1)

    names = (f"{prefix}.y_min", f"{prefix}.y_max", f"{prefix}.delta_min", f"{prefix}.delta_max")
    return g, names


def make_lane_keep(ego: EgoParams, task: TaskParams, name: str = "lk") -> MpcPrimitive:
    """Hold the lane whose center is task.y_ref; box lateral motion and steering."""
    g, g_names = _lateral_box(ego, name)
    return MpcPrimitive(
        name=name,
        kind=PrimitiveKind.LATERAL,
        input_space=ego.input_box(),
        stage_cost=_lateral_cost(ego, task.q_lk, task.y_ref),
        cost_terms=("y", "theta", "theta_dot", "delta", "delta_dot"),
        ineq=g,
        ineq_names=g_names,
        reads=("y", "theta", "v"),
    )


def pv_block_names(label: str) -> tuple[str, str, str, str]:
    """State component names of one tracked vehicle's block."""
    return (f"pv{label}.x", f"pv{label}.y", f"pv{label}.vx", f"pv{label}.vy")


def make_lane_change(
    ego: EgoParams,
    task: TaskParams,
    gap_vehicle_label: str | None,
    with_gap: bool = True,
    name: str = "lc",
) -> MpcPrimitive:
    """Steer to task.y_ref while keeping d_safe_lc of longitudinal gap.

    The gap is measured against the predicted position of the vehicle whose
    clearance block carries ``gap_vehicle_label``, read from the assembled
    state, so it is re-anchored to the live observation at every solve.
    Passing with_gap=False drops the term for an empty target lane.
    """
    if with_gap and gap_vehicle_label is None:
        raise MissingTarget("lane change with gap constraint needs a vehicle to measure against")
    box, box_names = _lateral_box(ego, name)
    d_safe = task.d_safe_lc

    if with_gap:
        pv_x_name = pv_block_names(gap_vehicle_label)[0]

        def g(view: StateView, u: Array, stage: Stage) -> Array:
            base = box(view, u, stage)
            gap = d_safe - np.abs(view["x"] - view[pv_x_name])
            return np.concatenate([base, gap[..., None]], axis=-1)

        g_names = box_names + (f"{name}.gap",)
        reads = ("x", "y", "theta", "v", pv_x_name)
    else:
        g, g_names = box, box_names
        reads = ("y", "theta", "v")

    return MpcPrimitive(
        name=name,
        kind=PrimitiveKind.LATERAL,
        input_space=ego.input_box(),
        stage_cost=_lateral_cost(ego, task.q_lc, task.y_ref),
        cost_terms=("y", "theta", "theta_dot", "delta", "delta_dot"),
        ineq=g,
        ineq_names=g_names,
        reads=reads,
    )


def _accel_box(ego: EgoParams, prefix: str):
    a_min, a_max = ego.a_min, ego.a_max

    def g(view: StateView, u: Array, stage: Stage) -> Array:
        a = u[..., 0]
        return np.stack([a_min - a, a - a_max], axis=-1)

    return g, (f"{prefix}.a_min", f"{prefix}.a_max")


def make_constant_speed(ego: EgoParams, task: TaskParams, name: str = "cs") -> MpcPrimitive:
    """Track the reference speed with smooth acceleration."""
    q_v, q_a, q_ad = task.q_cs
    v_ref = task.v_ref

    def cost(view: StateView, u: Array, stage: Stage) -> Array:
        a = u[..., 0]
        a_dot = (a - stage.u_prev[..., 0]) / stage.dt
        return q_v * (view["v"] - v_ref) ** 2 + q_a * a**2 + q_ad * a_dot**2

    g, g_names = _accel_box(ego, name)
    return MpcPrimitive(
        name=name,
        kind=PrimitiveKind.LONGITUDINAL,
        input_space=ego.input_box(),
        stage_cost=cost,
        cost_terms=("v", "a", "a_dot"),
        ineq=g,
        ineq_names=g_names,
        reads=("v",),
    )


def make_acc(
    ego: EgoParams, task: TaskParams, lead_label: str | None, name: str = "acc"
) -> MpcPrimitive:
    """Follow the lead at gap d_acc; never get closer than d_safe_acc.

    Gaps are absolute longitudinal distances to the lead's predicted position,
    read from the clearance block labelled ``lead_label`` in the assembled
    state.
    """
    if lead_label is None:
        raise MissingTarget("adaptive cruise control needs a lead vehicle")
    q_gap, q_a, q_ad = task.q_acc
    d_acc, d_safe = task.d_acc, task.d_safe_acc
    lead_x_name = pv_block_names(lead_label)[0]

    def cost(view: StateView, u: Array, stage: Stage) -> Array:
        a = u[..., 0]
        a_dot = (a - stage.u_prev[..., 0]) / stage.dt
        gap_err = np.abs(view["x"] - view[lead_x_name]) - d_acc
        return q_gap * gap_err**2 + q_a * a**2 + q_ad * a_dot**2

    box, box_names = _accel_box(ego, name)

    def g(view: StateView, u: Array, stage: Stage) -> Array:
        base = box(view, u, stage)
        gap = d_safe - np.abs(view["x"] - view[lead_x_name])
        return np.concatenate([base, gap[..., None]], axis=-1)

    return MpcPrimitive(
        name=name,
        kind=PrimitiveKind.LONGITUDINAL,
        input_space=ego.input_box(),
        stage_cost=cost,
        cost_terms=("gap", "a", "a_dot"),
        ineq=g,
        ineq_names=box_names + (f"{name}.gap",),
        reads=("x", lead_x_name),
    )


def make_pv_safety(
    ego: EgoParams, task: TaskParams, pv0: PvState, label: str = "0"
) -> MpcPrimitive:
    """Keep a circular clearance around one predicted vehicle.

    The vehicle's four-component state joins the problem state and advances
    under a constant-velocity model; the keep-out radius is d_safe_pv.
    """
    name = f"pv{label}"
    names = pv_block_names(label)
    d_safe = task.d_safe_pv

    def f(x: Array, u: Array) -> Array:
        zeros = np.zeros_like(x[..., 0])
        return np.stack([x[..., 2], x[..., 3], zeros, zeros], axis=-1)

    def g(view: StateView, u: Array, stage: Stage) -> Array:
        dx = view["x"] - view[names[0]]
        dy = view["y"] - view[names[1]]
        dist = np.sqrt(dx**2 + dy**2)
        return (d_safe - dist)[..., None]

    return MpcPrimitive(
        name=name,
        kind=PrimitiveKind.SAFETY,
        input_space=ego.input_box(),
        state_names=names,
        dynamics=f,
        initial_state=pv0.as_array(),
        ineq=g,
        ineq_names=(f"{name}.keepout",),
        reads=("x", "y") + names[:2],
    )
