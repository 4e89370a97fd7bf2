"""Optimal control problems assembled from reusable primitives.

A primitive bundles an (optionally empty) state block, its dynamics, stage
costs, and constraints. Primitives combine pairwise: state blocks concatenate,
costs add, constraint vectors stack. A full problem is the left fold of a
primitive list over a shared input box, plus a horizon and step size.

All stage functions are written against numpy arrays and broadcast over
leading batch dimensions, so a sampling solver can evaluate thousands of
rollouts without Python-level loops over samples.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import reduce
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import (
    DuplicateStateName,
    IncompatibleInputSpace,
    MissingDynamics,
    SchemaMismatch,
    UnresolvedRead,
)

Array = np.ndarray

# Input component order used throughout: u[..., 0] = a, u[..., 1] = delta.
INPUT_DIM = 2


@dataclass(frozen=True)
class InputBox:
    """Box bounds on the shared control input u = (a, delta)."""

    a_min: float
    a_max: float
    delta_min: float
    delta_max: float

    def __post_init__(self):
        if not (self.a_min < self.a_max and self.delta_min < self.delta_max):
            raise ValueError("input box bounds must satisfy min < max")

    @property
    def low(self) -> Array:
        return np.array([self.a_min, self.delta_min])

    @property
    def high(self) -> Array:
        return np.array([self.a_max, self.delta_max])

    def clip(self, u: Array) -> Array:
        return np.clip(u, self.low, self.high)

    def contains(self, u: Array, tol: float = 0.0) -> bool:
        u = np.asarray(u)
        return bool(np.all(u >= self.low - tol) and np.all(u <= self.high + tol))


@dataclass(frozen=True)
class ControlInput:
    """One control sample: longitudinal acceleration [m/s^2] and tire angle [rad]."""

    a: float
    delta: float

    def __post_init__(self):
        if not (np.isfinite(self.a) and np.isfinite(self.delta)):
            raise ValueError("control input must be finite")

    def as_array(self) -> Array:
        return np.array([self.a, self.delta])

    @classmethod
    def from_array(cls, u: Array) -> "ControlInput":
        return cls(float(u[0]), float(u[1]))


@dataclass(frozen=True)
class Stage:
    """Per-stage evaluation context.

    ``u_prev`` is the input of stage k-1 with the same leading shape as the
    stage input; at k = 0 it is the input applied before the horizon started.
    Rate terms (delta_dot, a_dot) are finite differences against it.
    """

    k: int
    dt: float
    u_prev: Array


class StateView:
    """Schema-checked, name-based access into a (possibly batched) state array."""

    __slots__ = ("_x", "_index")

    def __init__(self, x: Array, index: dict[str, int]):
        self._x = x
        self._index = index

    def __getitem__(self, name: str) -> Array:
        try:
            i = self._index[name]
        except KeyError:
            raise SchemaMismatch(f"state component {name!r} not in schema") from None
        return self._x[..., i]

    def __contains__(self, name: str) -> bool:
        return name in self._index


def schema_index(names: Sequence[str]) -> dict[str, int]:
    return {name: i for i, name in enumerate(names)}


def make_view(names: Sequence[str], x: Array) -> StateView:
    """Wrap a raw state array for evaluating a primitive outside an assembled problem."""
    return StateView(np.asarray(x, dtype=float), schema_index(names))


class PrimitiveKind(str, Enum):
    EGO_DYNAMICS = "ego-dynamics"
    LATERAL = "lateral-task"
    LONGITUDINAL = "longitudinal-task"
    SAFETY = "safety"


DynamicsFn = Callable[[Array, Array], Array]  # (x_own, u) -> dx/dt over own block
StageCostFn = Callable[[StateView, Array, Stage], Array]
ConstraintFn = Callable[[StateView, Array, Stage], Array]


@dataclass(frozen=True)
class MpcPrimitive:
    """A reusable problem fragment: state block, dynamics, costs, constraints.

    Stateless primitives (empty ``state_names``) have no dynamics and read the
    components they need from the assembled state by name; every name a
    primitive's functions touch must be listed in ``reads`` so assembly can
    reject unresolved references.
    """

    name: str
    kind: Optional[PrimitiveKind]
    input_space: InputBox
    state_names: tuple[str, ...] = ()
    dynamics: Optional[DynamicsFn] = None
    initial_state: Optional[Array] = None
    stage_cost: Optional[StageCostFn] = None
    cost_terms: tuple[str, ...] = ()
    ineq: Optional[ConstraintFn] = None
    ineq_names: tuple[str, ...] = ()
    eq: Optional[ConstraintFn] = None
    eq_names: tuple[str, ...] = ()
    reads: tuple[str, ...] = ()

    def __post_init__(self):
        if len(set(self.state_names)) != len(self.state_names):
            raise DuplicateStateName(f"{self.name}: repeated state component name")
        if (self.dynamics is None) != (len(self.state_names) == 0):
            raise ValueError(f"{self.name}: dynamics and state block must come together")
        if self.initial_state is not None and len(self.initial_state) != self.n:
            raise SchemaMismatch(f"{self.name}: initial state length != state block")
        if (self.ineq is None) != (len(self.ineq_names) == 0):
            raise ValueError(f"{self.name}: ineq function and names must come together")
        if (self.eq is None) != (len(self.eq_names) == 0):
            raise ValueError(f"{self.name}: eq function and names must come together")

    @property
    def n(self) -> int:
        return len(self.state_names)

    @property
    def n_g(self) -> int:
        return len(self.ineq_names)

    @property
    def n_h(self) -> int:
        return len(self.eq_names)


def empty_primitive(input_space: InputBox, name: str = "empty") -> MpcPrimitive:
    """The neutral element of composition: no state, zero cost, no constraints."""
    return MpcPrimitive(name=name, kind=None, input_space=input_space)


def _concat_initial(p1: MpcPrimitive, p2: MpcPrimitive) -> Optional[Array]:
    if p1.initial_state is None and p2.initial_state is None:
        return None
    a = p1.initial_state if p1.initial_state is not None else np.zeros(p1.n)
    b = p2.initial_state if p2.initial_state is not None else np.zeros(p2.n)
    return np.concatenate([a, b])


def compose(p1: MpcPrimitive, p2: MpcPrimitive) -> MpcPrimitive:
    """Combine two primitives: product state, summed cost, stacked constraints.

    State component names must be disjoint; a collision is an error rather
    than a rename. Costs sum in argument order so that repeated evaluation
    reproduces the same floating-point result bit for bit.
    """
    if p1.input_space != p2.input_space:
        raise IncompatibleInputSpace(f"{p1.name} and {p2.name} use different input boxes")
    overlap = set(p1.state_names) & set(p2.state_names)
    if overlap:
        raise DuplicateStateName(f"{p1.name} and {p2.name} both declare {sorted(overlap)}")

    f1, f2, n1 = p1.dynamics, p2.dynamics, p1.n
    if f1 is None and f2 is None:
        dyn = None
    elif f2 is None:
        dyn = f1
    elif f1 is None:
        dyn = f2
    else:
        def dyn(x: Array, u: Array) -> Array:
            return np.concatenate([f1(x[..., :n1], u), f2(x[..., n1:], u)], axis=-1)

    c1, c2 = p1.stage_cost, p2.stage_cost
    if c1 is None and c2 is None:
        cost = None
    elif c2 is None:
        cost = c1
    elif c1 is None:
        cost = c2
    else:
        def cost(view: StateView, u: Array, stage: Stage) -> Array:
            return c1(view, u, stage) + c2(view, u, stage)

    def _stack(a: Optional[ConstraintFn], b: Optional[ConstraintFn]) -> Optional[ConstraintFn]:
        if a is None:
            return b
        if b is None:
            return a

        def stacked(view: StateView, u: Array, stage: Stage) -> Array:
            return np.concatenate([a(view, u, stage), b(view, u, stage)], axis=-1)

        return stacked

    reads = p1.reads + tuple(r for r in p2.reads if r not in p1.reads)
    return MpcPrimitive(
        name=f"({p1.name}+{p2.name})",
        kind=None,
        input_space=p1.input_space,
        state_names=p1.state_names + p2.state_names,
        dynamics=dyn,
        initial_state=_concat_initial(p1, p2),
        stage_cost=cost,
        cost_terms=p1.cost_terms + p2.cost_terms,
        ineq=_stack(p1.ineq, p2.ineq),
        ineq_names=p1.ineq_names + p2.ineq_names,
        eq=_stack(p1.eq, p2.eq),
        eq_names=p1.eq_names + p2.eq_names,
        reads=reads,
    )


@dataclass(frozen=True)
class Ocp:
    """A fully assembled finite-horizon problem over the shared input box.

    ``dynamics``, ``stage_cost``, ``ineq``, and ``eq`` all take the raw state
    array of this problem (named access is resolved internally), an input array
    u[..., 0:2] = (a, delta), and a :class:`Stage`. Missing pieces evaluate to
    zero cost / zero-width constraint vectors so callers never branch on None.
    """

    input_space: InputBox
    state_names: tuple[str, ...]
    dynamics: Callable[[Array, Array], Array]
    stage_cost: Callable[[Array, Array, Stage], Array]
    ineq: Callable[[Array, Array, Stage], Array]
    eq: Callable[[Array, Array, Stage], Array]
    n_g: int
    n_h: int
    ineq_names: tuple[str, ...]
    eq_names: tuple[str, ...]
    horizon: int
    dt: float
    provenance: tuple[str, ...]
    cost_terms: tuple[str, ...] = ()

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.provenance:
            raise ValueError("provenance must name at least one primitive")
        if len(set(self.state_names)) != len(self.state_names):
            raise DuplicateStateName("assembled state schema has repeated names")

    @property
    def n(self) -> int:
        return len(self.state_names)

    def check_state(self, x: Array) -> Array:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.n:
            raise SchemaMismatch(f"state has {x.shape[-1]} components, schema has {self.n}")
        return x


def build_ocp(
    primitives: Sequence[MpcPrimitive],
    horizon: int,
    dt: float,
    input_space: InputBox,
) -> Ocp:
    """Left-fold a primitive list into one problem.

    Exactly one ego-dynamics primitive must be present; every name the
    primitives read must resolve against the concatenated state schema.
    """
    if not primitives:
        raise MissingDynamics("primitive list is empty")
    n_dyn = sum(1 for p in primitives if p.kind is PrimitiveKind.EGO_DYNAMICS)
    if n_dyn == 0:
        raise MissingDynamics("no ego-dynamics primitive in the set")
    for p in primitives:
        if p.input_space != input_space:
            raise IncompatibleInputSpace(f"{p.name} was built over a different input box")

    folded = reduce(compose, primitives)
    unresolved = [r for r in folded.reads if r not in folded.state_names]
    if unresolved:
        raise UnresolvedRead(f"unresolved state reads: {unresolved}")
    if folded.dynamics is None:
        raise MissingDynamics("assembled problem has no dynamics")

    index = schema_index(folded.state_names)
    fdyn = folded.dynamics
    fcost, fg, fh = folded.stage_cost, folded.ineq, folded.eq

    def dynamics(x: Array, u: Array) -> Array:
        return fdyn(x, u)

    if fcost is None:
        def stage_cost(x: Array, u: Array, stage: Stage) -> Array:
            return np.zeros(np.broadcast(x[..., 0], u[..., 0]).shape)
    else:
        def stage_cost(x: Array, u: Array, stage: Stage) -> Array:
            return fcost(StateView(x, index), u, stage)

    def _wrap_constraint(fn: Optional[ConstraintFn], width: int):
        if fn is None:
            def empty(x: Array, u: Array, stage: Stage) -> Array:
                return np.zeros(np.broadcast(x[..., 0], u[..., 0]).shape + (0,))
            return empty

        def wrapped(x: Array, u: Array, stage: Stage) -> Array:
            return fn(StateView(x, index), u, stage)

        return wrapped

    return Ocp(
        input_space=input_space,
        state_names=folded.state_names,
        dynamics=dynamics,
        stage_cost=stage_cost,
        ineq=_wrap_constraint(fg, folded.n_g),
        eq=_wrap_constraint(fh, folded.n_h),
        n_g=folded.n_g,
        n_h=folded.n_h,
        ineq_names=folded.ineq_names,
        eq_names=folded.eq_names,
        horizon=horizon,
        dt=dt,
        provenance=tuple(p.name for p in primitives),
        cost_terms=folded.cost_terms,
    )


@dataclass(frozen=True)
class Trajectory:
    """N+1 states and the N inputs that produced them under explicit Euler."""

    states: Array  # (N+1, n)
    inputs: Array  # (N, 2)

    def __post_init__(self):
        if self.states.shape[0] != self.inputs.shape[0] + 1:
            raise SchemaMismatch("trajectory needs one more state than inputs")

    @property
    def horizon(self) -> int:
        return self.inputs.shape[0]

    def state(self, k: int) -> Array:
        return self.states[k]

    def input(self, k: int) -> ControlInput:
        return ControlInput.from_array(self.inputs[k])


def as_input_array(inputs, horizon: Optional[int] = None) -> Array:
    """Normalize a list of ControlInput or an (N, 2) array to float64."""
    if isinstance(inputs, np.ndarray):
        u = np.asarray(inputs, dtype=float)
    else:
        u = np.array(
            [i.as_array() if isinstance(i, ControlInput) else np.asarray(i, dtype=float) for i in inputs]
        )
        if u.size == 0:
            u = u.reshape(0, INPUT_DIM)
    if u.ndim != 2 or u.shape[1] != INPUT_DIM:
        raise SchemaMismatch(f"input sequence must be (N, {INPUT_DIM}), got {u.shape}")
    if horizon is not None and u.shape[0] != horizon:
        raise SchemaMismatch(f"input sequence has {u.shape[0]} steps, expected {horizon}")
    return u


def rollout(ocp: Ocp, x0: Array, inputs) -> Trajectory:
    """Integrate the problem dynamics forward with explicit Euler steps.

    The input at index k acts between states k and k+1 (the shifted-sequence
    feasibility test indexes the previous solution differently; see switcher).
    """
    x0 = ocp.check_state(np.asarray(x0, dtype=float))
    if x0.ndim != 1:
        raise SchemaMismatch("rollout takes a single start state")
    u = as_input_array(inputs, ocp.horizon)
    states = np.empty((ocp.horizon + 1, ocp.n))
    states[0] = x0
    for k in range(ocp.horizon):
        states[k + 1] = states[k] + ocp.dynamics(states[k], u[k]) * ocp.dt
    return Trajectory(states=states, inputs=u)


def _stage_inputs(traj: Trajectory, u_before: Optional[Array]):
    """Yield (k, u_k, u_prev_k) for stages 0..N with u_N := u_{N-1}.

    ``u_before`` is the input applied before stage 0 (defaults to zero), so
    rate terms at k = 0 difference against something well defined.
    """
    n_steps = traj.horizon
    prev = np.zeros(INPUT_DIM) if u_before is None else np.asarray(u_before, dtype=float)
    for k in range(n_steps):
        u = traj.inputs[k]
        yield k, u, prev
        prev = u
    yield n_steps, traj.inputs[n_steps - 1], traj.inputs[n_steps - 1]


def total_cost(ocp: Ocp, traj: Trajectory, u_before: Optional[Array] = None) -> float:
    """Sum of stage costs over stages 0..N.

    Stage N reuses the final input, which zeroes all finite-difference rate
    terms there.
    """
    if traj.horizon != ocp.horizon or traj.states.shape[1] != ocp.n:
        raise SchemaMismatch("trajectory does not fit the problem")
    acc = 0.0
    for k, u, u_prev in _stage_inputs(traj, u_before):
        acc = acc + float(ocp.stage_cost(traj.states[k], u, Stage(k, ocp.dt, u_prev)))
    return acc


def eval_constraints(
    ocp: Ocp, traj: Trajectory, u_before: Optional[Array] = None
) -> tuple[Array, Array]:
    """Raw constraint values per stage: ((N+1, n_g), (N+1, n_h)).

    Values are returned unsigned-tested; callers interpret g <= 0 and h == 0.
    """
    if traj.horizon != ocp.horizon or traj.states.shape[1] != ocp.n:
        raise SchemaMismatch("trajectory does not fit the problem")
    g_vals = np.empty((ocp.horizon + 1, ocp.n_g))
    h_vals = np.empty((ocp.horizon + 1, ocp.n_h))
    for k, u, u_prev in _stage_inputs(traj, u_before):
        stage = Stage(k, ocp.dt, u_prev)
        g_vals[k] = ocp.ineq(traj.states[k], u, stage)
        h_vals[k] = ocp.eq(traj.states[k], u, stage)
    return g_vals, h_vals
