from __future__ import annotations

import numpy as np
import pytest

from taskmpc.ocp import InputBox, MpcPrimitive, PrimitiveKind, Stage
from taskmpc.primitives import EgoParams, TaskParams


@pytest.fixture
def ego():
    return EgoParams()


@pytest.fixture
def task():
    return TaskParams()


@pytest.fixture
def box(ego):
    return ego.input_box()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def stage(k: int = 0, dt: float = 0.05, u_prev=None) -> Stage:
    return Stage(k, dt, np.zeros(2) if u_prev is None else np.asarray(u_prev, float))


def double_integrator(box: InputBox, q: float = 1.0, r: float = 0.01) -> MpcPrimitive:
    """1-D point mass driven by the acceleration input; steering is ignored."""

    def f(x, u):
        return np.stack([x[..., 1], u[..., 0]], axis=-1)

    def cost(view, u, st):
        return q * (view["p"] ** 2 + view["vel"] ** 2) + r * u[..., 0] ** 2

    return MpcPrimitive(
        name="di",
        kind=PrimitiveKind.EGO_DYNAMICS,
        input_space=box,
        state_names=("p", "vel"),
        dynamics=f,
        stage_cost=cost,
        cost_terms=("p", "vel", "a"),
        reads=("p", "vel"),
    )


def box_constraint_primitive(box: InputBox, p_max: float = 2.0) -> MpcPrimitive:
    """Synthetic inequality p <= p_max on the double integrator's position."""

    def g(view, u, st):
        return (view["p"] - p_max)[..., None]

    return MpcPrimitive(
        name="pbox",
        kind=None,
        input_space=box,
        ineq=g,
        ineq_names=("pbox.p_max",),
        reads=("p",),
    )


def equality_primitive(box: InputBox, vel_ref: float = 0.0) -> MpcPrimitive:
    """Synthetic equality vel == vel_ref; the driving primitives have none."""

    def h(view, u, st):
        return (view["vel"] - vel_ref)[..., None]

    return MpcPrimitive(
        name="veq",
        kind=None,
        input_space=box,
        eq=h,
        eq_names=("veq.vel",),
        reads=("vel",),
    )
