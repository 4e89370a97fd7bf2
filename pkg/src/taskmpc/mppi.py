"""Sampling-based solver: path-integral updates with indicator constraint penalties.

Constraints enter the sampled cost as counted violations: each stage adds
mu * (number of positive inequality components + number of equality components
off zero beyond a tolerance). With mu large relative to the stage costs the
constraints behave as approximately hard.

Randomness comes from a counter-based Philox bit generator keyed by
(seed, stream), so results are reproducible bit for bit on a platform
regardless of how many solves ran before. Sample 0 always carries zero noise:
the unperturbed warm start competes with its own perturbations, and the update
is kept only when it does not lose to it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import NonFiniteCost, SchemaMismatch
from .ocp import (
    INPUT_DIM,
    Array,
    ControlInput,
    Ocp,
    Stage,
    Trajectory,
    as_input_array,
)


@dataclass(frozen=True)
class MppiConfig:
    """Solver knobs. Noise scales are standard deviations (variances 2.0 / 0.01)."""

    samples: int = 512
    temperature: float = 20.0
    sigma_a: float = float(np.sqrt(2.0))  # [m/s^2]
    sigma_delta: float = 0.1  # [rad]
    mu: float = 100.0
    horizon: int = 20
    dt: float = 0.05  # [s]
    seed: int = 0
    iterations: int = 1
    eps_h: float = 1e-6

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("need at least one sample")
        if not self.temperature > 0:
            raise ValueError("temperature must be positive")
        if not self.mu > 0:
            raise ValueError("penalty coefficient must be positive")
        if not (self.sigma_a > 0 and self.sigma_delta > 0):
            raise ValueError("noise scales must be positive")

    def rng(self, stream: int = 0) -> np.random.Generator:
        seq = np.random.SeedSequence(entropy=self.seed, spawn_key=(stream,))
        return np.random.Generator(np.random.Philox(seq))


@dataclass(frozen=True)
class SolveResult:
    """Chosen input sequence and bookkeeping for the next control step.

    ``planned`` is the rollout of the chosen sequence from the solve state;
    ``nominal_inputs`` is that sequence shifted one step with the last input
    repeated, ready to warm-start the next solve.
    """

    first_input: ControlInput
    planned: Trajectory
    nominal_inputs: Array
    cost: float


def penalized_stage_cost(
    ocp: Ocp,
    x: Array,
    u: Array,
    k: int,
    mu: float = 100.0,
    eps_h: float = 1e-6,
    u_prev: Optional[Array] = None,
) -> float:
    """Stage cost plus mu for every violated constraint component.

    Without a previous input the rate terms difference against the stage input
    itself and vanish.
    """
    x = ocp.check_state(x)
    u = np.asarray(u, dtype=float)
    stage = Stage(k, ocp.dt, u if u_prev is None else np.asarray(u_prev, dtype=float))
    cost = ocp.stage_cost(x, u, stage)
    g = ocp.ineq(x, u, stage)
    h = ocp.eq(x, u, stage)
    violations = np.sum(g > 0.0, axis=-1) + np.sum(np.abs(h) > eps_h, axis=-1)
    return float(cost + mu * violations)


def _batch_cost(ocp: Ocp, x0: Array, sequences: Array, cfg: MppiConfig, u_before: Array) -> Array:
    """Penalized trajectory cost of each candidate sequence; shape (K,).

    All K rollouts advance together; the terminal stage reuses the last input
    so its rate terms are zero, matching the scalar evaluation path.
    """
    n_samples, n_steps = sequences.shape[0], sequences.shape[1]
    x = np.broadcast_to(x0, (n_samples, ocp.n)).copy()
    total = np.zeros(n_samples)
    u_prev = np.broadcast_to(u_before, (n_samples, INPUT_DIM))
    for k in range(n_steps):
        u = sequences[:, k, :]
        stage = Stage(k, ocp.dt, u_prev)
        total += ocp.stage_cost(x, u, stage)
        g = ocp.ineq(x, u, stage)
        h = ocp.eq(x, u, stage)
        total += cfg.mu * (np.sum(g > 0.0, axis=-1) + np.sum(np.abs(h) > cfg.eps_h, axis=-1))
        x = x + ocp.dynamics(x, u) * ocp.dt
        u_prev = u
    u = sequences[:, n_steps - 1, :]
    stage = Stage(n_steps, ocp.dt, u)
    total += ocp.stage_cost(x, u, stage)
    g = ocp.ineq(x, u, stage)
    h = ocp.eq(x, u, stage)
    total += cfg.mu * (np.sum(g > 0.0, axis=-1) + np.sum(np.abs(h) > cfg.eps_h, axis=-1))
    return total


def solve(
    ocp: Ocp,
    x0: Array,
    warm_start,
    cfg: MppiConfig,
    rng: Optional[np.random.Generator] = None,
    u_before: Optional[Array] = None,
) -> SolveResult:
    """One (or cfg.iterations) path-integral update(s) around the warm start.

    K perturbed candidate sequences are rolled out, weighted by
    exp(-(cost - best)/temperature), and averaged; the weighted average
    replaces the nominal only if its penalized cost does not exceed the
    warm start's, so the returned cost never worsens. Candidates are clipped
    to the input box before evaluation, which keeps the average inside it.
    """
    if cfg.horizon != ocp.horizon:
        raise SchemaMismatch("solver horizon differs from the problem horizon")
    x0 = ocp.check_state(np.asarray(x0, dtype=float))
    nominal = ocp.input_space.clip(as_input_array(warm_start, ocp.horizon))
    u_before = np.zeros(INPUT_DIM) if u_before is None else np.asarray(u_before, dtype=float)
    rng = cfg.rng() if rng is None else rng
    scale = np.array([cfg.sigma_a, cfg.sigma_delta])

    nominal_cost = None
    for _ in range(max(1, cfg.iterations)):
        noise = rng.normal(size=(cfg.samples, ocp.horizon, INPUT_DIM)) * scale
        noise[0] = 0.0  # the warm start itself is sample 0
        candidates = ocp.input_space.clip(nominal[None, :, :] + noise)
        costs = _batch_cost(ocp, x0, candidates, cfg, u_before)
        if not np.all(np.isfinite(costs)):
            raise NonFiniteCost("sampled rollouts produced non-finite cost")
        weights = np.exp(-(costs - costs.min()) / cfg.temperature)
        weights /= weights.sum()
        updated = ocp.input_space.clip(
            np.sum(weights[:, None, None] * candidates, axis=0)
        )
        updated_cost = float(_batch_cost(ocp, x0, updated[None], cfg, u_before)[0])
        warm_cost = float(costs[0])
        if updated_cost <= warm_cost:
            nominal, nominal_cost = updated, updated_cost
        else:
            nominal_cost = warm_cost

    states = np.empty((ocp.horizon + 1, ocp.n))
    states[0] = x0
    for k in range(ocp.horizon):
        states[k + 1] = states[k] + ocp.dynamics(states[k], nominal[k]) * ocp.dt
    shifted = np.concatenate([nominal[1:], nominal[-1:]], axis=0)
    return SolveResult(
        first_input=ControlInput.from_array(nominal[0]),
        planned=Trajectory(states=states, inputs=nominal),
        nominal_inputs=shifted,
        cost=nominal_cost,
    )
