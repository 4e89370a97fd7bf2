"""Transitional problems that bridge two assembled OCPs during a task switch.

The bridge problem stacks both state spaces, keeps the outgoing problem's
constraints verbatim, and adds a squared-hinge penalty on the incoming
problem's constraints to its cost. Solving it steers the vehicle into the
incoming task's feasible region while never leaving the outgoing task's own
feasible set, so reverting is always possible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import IncompatibleInputSpace, SchemaMismatch
from .ocp import Array, Ocp, Stage

IOCP_TAG = "iocp["


@dataclass(frozen=True)
class IocpParams:
    """Penalty coefficients for violated inequality / equality components.

    Defaults keep the squared-hinge guidance below the solver's hard-violation
    penalty for gap-sized deficits (up to ~10 m), so a bridge problem can
    never out-bid a safety constraint.
    """

    rho_g: float = 0.5
    rho_h: float = 0.5

    def __post_init__(self):
        if not (self.rho_g > 0 and self.rho_h > 0):
            raise ValueError("penalty coefficients must be positive")


def make_iocp(
    prev: Ocp,
    target: Ocp,
    params: IocpParams = IocpParams(),
    include_target_cost: bool = False,
) -> Ocp:
    """Build the bridge problem from the outgoing and incoming problems.

    State blocks that exist in both (the ego copy, typically) are kept twice
    and driven by the same input; the stacked schema disambiguates them with
    prev:/target: prefixes. The penalty covers stages 0..N-1 only. The
    incoming problem's own stage cost joins the objective only when
    ``include_target_cost`` is set.
    """
    if prev.input_space != target.input_space:
        raise IncompatibleInputSpace("bridged problems must share the input box")
    if prev.horizon != target.horizon or prev.dt != target.dt:
        raise SchemaMismatch("bridged problems must share horizon and step size")

    n_prev = prev.n
    horizon = prev.horizon
    rho_g, rho_h = params.rho_g, params.rho_h
    state_names = tuple(f"prev:{s}" for s in prev.state_names) + tuple(
        f"target:{s}" for s in target.state_names
    )

    def dynamics(x: Array, u: Array) -> Array:
        return np.concatenate(
            [prev.dynamics(x[..., :n_prev], u), target.dynamics(x[..., n_prev:], u)],
            axis=-1,
        )

    def stage_cost(x: Array, u: Array, stage: Stage) -> Array:
        x_prev, x_target = x[..., :n_prev], x[..., n_prev:]
        cost = prev.stage_cost(x_prev, u, stage)
        if include_target_cost:
            cost = cost + target.stage_cost(x_target, u, stage)
        if stage.k < horizon:
            g = target.ineq(x_target, u, stage)
            h = target.eq(x_target, u, stage)
            cost = cost + rho_g * np.sum(np.maximum(g, 0.0) ** 2, axis=-1)
            cost = cost + rho_h * np.sum(h**2, axis=-1)
        return cost

    def ineq(x: Array, u: Array, stage: Stage) -> Array:
        return prev.ineq(x[..., :n_prev], u, stage)

    def eq(x: Array, u: Array, stage: Stage) -> Array:
        return prev.eq(x[..., :n_prev], u, stage)

    tag = f"{IOCP_TAG}{'+'.join(prev.provenance)}->{'+'.join(target.provenance)}]"
    return Ocp(
        input_space=prev.input_space,
        state_names=state_names,
        dynamics=dynamics,
        stage_cost=stage_cost,
        ineq=ineq,
        eq=eq,
        n_g=prev.n_g,
        n_h=prev.n_h,
        ineq_names=prev.ineq_names,
        eq_names=prev.eq_names,
        horizon=horizon,
        dt=prev.dt,
        provenance=(tag,),
        cost_terms=prev.cost_terms,
    )


def is_iocp(ocp: Ocp) -> bool:
    """True when the problem's provenance carries a bridge tag."""
    return any(p.startswith(IOCP_TAG) for p in ocp.provenance)


def is_iocp_provenance(provenance) -> bool:
    """Same test on a bare provenance tuple (as stored in traces)."""
    return any(str(p).startswith(IOCP_TAG) for p in provenance)
