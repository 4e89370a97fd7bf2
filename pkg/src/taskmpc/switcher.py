"""Warm-start feasibility checking and the per-step problem switch.

The feasibility test rolls the candidate problem's dynamics from the measured
state under the tail of the previous step's optimized input sequence and
requires every constraint to hold at stages 0..N-2. It is a practical test on
the previous prediction, not a recursive-feasibility proof.

Each control step the switcher picks what to solve: the target problem when
the test passes, a bridge problem while the target stays infeasible, and the
previous problem (flagging a rejection) once the bridge budget is exhausted.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional

import numpy as np

from .errors import SchemaMismatch
from .iocp import IocpParams, make_iocp
from .ocp import INPUT_DIM, Array, Ocp, Stage, as_input_array


@dataclass(frozen=True)
class Violation:
    """One constraint component out of bounds at one stage of the test rollout."""

    stage: int
    kind: str  # "ineq" | "eq"
    index: int
    name: str
    value: float


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    violations: tuple[Violation, ...] = ()

    def violated_names(self) -> tuple[str, ...]:
        seen: list[str] = []
        for v in self.violations:
            if v.name not in seen:
                seen.append(v.name)
        return tuple(seen)


def check_feasibility(
    ocp: Ocp,
    x_t: Array,
    prev_inputs,
    eps_g: float = 0.0,
    eps_h: float = 1e-6,
) -> FeasibilityReport:
    """Roll the candidate problem under the shifted previous inputs and test it.

    ``prev_inputs`` is the previous step's optimized sequence; its last N-1
    entries act as the stage inputs here, so stages 0..N-2 are checked and
    integrated with the same input index.
    """
    x = ocp.check_state(np.asarray(x_t, dtype=float))
    u_all = as_input_array(prev_inputs)
    usable = ocp.horizon - 1
    if u_all.shape[0] < usable:
        raise SchemaMismatch(
            f"need at least {usable} previous inputs, got {u_all.shape[0]}"
        )
    shifted = u_all[-usable:] if usable > 0 else u_all[:0]

    violations: list[Violation] = []
    u_prev = np.zeros(INPUT_DIM)
    for k in range(usable):
        u = shifted[k]
        stage = Stage(k, ocp.dt, u_prev)
        g = ocp.ineq(x, u, stage)
        h = ocp.eq(x, u, stage)
        for i in np.flatnonzero(g > eps_g):
            violations.append(Violation(k, "ineq", int(i), ocp.ineq_names[i], float(g[i])))
        for i in np.flatnonzero(np.abs(h) > eps_h):
            violations.append(Violation(k, "eq", int(i), ocp.eq_names[i], float(h[i])))
        x = x + ocp.dynamics(x, u) * ocp.dt
        u_prev = u
    return FeasibilityReport(feasible=not violations, violations=tuple(violations))


class SwitchMode(str, Enum):
    DIRECT = "direct"
    INTERMEDIATE = "intermediate"
    REVERTED = "reverted"


@dataclass(frozen=True)
class SwitcherState:
    """Carried between control steps: the last accepted problem and bridge count."""

    prev_ocp: Ocp
    n_iocp: int = 0
    n_max: int = 50
    last_inputs: Optional[Array] = None  # previous step's optimized sequence

    def __post_init__(self):
        if not 0 <= self.n_iocp <= self.n_max:
            raise ValueError("bridge count out of range")


@dataclass(frozen=True)
class SwitchDecision:
    solve_ocp: Ocp
    is_rejected: bool
    mode: SwitchMode
    report: FeasibilityReport

    def __post_init__(self):
        if self.mode is SwitchMode.REVERTED and not self.is_rejected:
            raise ValueError("a reverted switch is always a rejection")


def switch(
    state: SwitcherState,
    target: Ocp,
    x_t: Array,
    iocp_params: IocpParams = IocpParams(),
    include_target_cost: bool = False,
    eps_g: float = 0.0,
    eps_h: float = 1e-6,
) -> tuple[SwitchDecision, SwitcherState]:
    """One switching step: feasible target, bridge, or reversion.

    Feasible target: solve it, remember it, reset the bridge count.
    Infeasible with budget left: solve a fresh bridge problem, count it.
    Infeasible with budget spent: solve the previous problem, flag rejection,
    reset the count.
    """
    prev_inputs = (
        state.last_inputs
        if state.last_inputs is not None
        else np.zeros((target.horizon, INPUT_DIM))
    )
    report = check_feasibility(target, x_t, prev_inputs, eps_g=eps_g, eps_h=eps_h)
    if report.feasible:
        decision = SwitchDecision(target, False, SwitchMode.DIRECT, report)
        return decision, replace(state, prev_ocp=target, n_iocp=0)
    if state.n_iocp < state.n_max:
        bridge = make_iocp(state.prev_ocp, target, iocp_params, include_target_cost)
        decision = SwitchDecision(bridge, False, SwitchMode.INTERMEDIATE, report)
        return decision, replace(state, n_iocp=state.n_iocp + 1)
    decision = SwitchDecision(state.prev_ocp, True, SwitchMode.REVERTED, report)
    return decision, replace(state, n_iocp=0)
