"""Desk-scale cooperative two-objective control environments.

Two families, both with local per-agent observations and a single shared
reward vector (fully cooperative):

* ``line_reach`` -- n point masses on a line steer their mean position
  toward a fixed goal. Objective 0 is goal proximity (negated distance),
  objective 1 is negated control energy. Observation lengths differ across
  agents for n >= 3, which exercises zero-padding.
* ``coop_push`` -- n agents apply planar forces to one damped unit-mass
  body. Objective 0 is the body's x velocity, objective 1 negated control
  energy.

Dynamics are exact semi-implicit Euler with rewards computed from the
post-integration state, so expected values in tests can be derived by hand.
Environments are undiscounted; discounting lives in learners and metrics.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

ENV_NAMES = ("line_reach", "coop_push")
LINE_REACH_GOAL = 1.0
COOP_PUSH_MASS = 1.0
COOP_PUSH_DRAG = 0.5

BRUTE_FORCE_PLAN_LIMIT = 10 ** 6

_SUPPORTED_AGENTS = {"line_reach": (1, 2, 3, 4), "coop_push": (1, 2, 4)}


@dataclass(frozen=True)
class EnvSpec:
    name: str
    n_agents: int
    horizon: int
    dt: float = 0.1
    d_objectives: int = 2

    def __post_init__(self):
        if self.name not in ENV_NAMES:
            raise ValueError(f"unknown environment {self.name!r}; expected one of {ENV_NAMES}")
        if self.n_agents not in _SUPPORTED_AGENTS[self.name]:
            raise ValueError(
                f"{self.name} supports n_agents in {_SUPPORTED_AGENTS[self.name]}, "
                f"got {self.n_agents}"
            )
        if self.horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.d_objectives != 2:
            raise ValueError("only two-objective environments are supported")

    @property
    def action_dims(self) -> tuple[int, ...]:
        per_agent = 1 if self.name == "line_reach" else 2
        return (per_agent,) * self.n_agents

    @property
    def obs_dims(self) -> tuple[int, ...]:
        """Raw (unpadded) observation length per agent."""
        if self.name == "line_reach":
            # own (x, v) plus (x, v) of each chain neighbour
            return tuple(2 + 2 * len(_neighbours(i, self.n_agents)) for i in range(self.n_agents))
        return (4,) * self.n_agents  # body velocity (2) + own previous action (2)

    @property
    def max_obs_dim(self) -> int:
        return max(self.obs_dims)


def _neighbours(i: int, n: int) -> tuple[int, ...]:
    return tuple(j for j in (i - 1, i + 1) if 0 <= j < n)


@dataclass
class LineReachState:
    positions: np.ndarray   # (n,) metres
    velocities: np.ndarray  # (n,) metres/second
    step_index: int


@dataclass
class CoopPushState:
    body_pos: np.ndarray      # (2,)
    body_vel: np.ndarray      # (2,)
    last_actions: np.ndarray  # (n, 2) action memory exposed in observations
    step_index: int


EnvState = LineReachState | CoopPushState


def observations(spec: EnvSpec, state: EnvState) -> list[np.ndarray]:
    """Local observation vectors, one per agent, possibly of unequal length."""
    if spec.name == "line_reach":
        assert isinstance(state, LineReachState)
        obs = []
        for i in range(spec.n_agents):
            parts = [state.positions[i], state.velocities[i]]
            for j in _neighbours(i, spec.n_agents):
                parts.extend((state.positions[j], state.velocities[j]))
            obs.append(np.array(parts))
        return obs
    assert isinstance(state, CoopPushState)
    return [
        np.concatenate([state.body_vel, state.last_actions[i]])
        for i in range(spec.n_agents)
    ]


def reset(spec: EnvSpec, seed: int) -> tuple[EnvState, list[np.ndarray]]:
    """Deterministic per seed. line_reach positions ~ uniform(-0.1, 0.1)."""
    rng = np.random.default_rng(seed)
    if spec.name == "line_reach":
        state: EnvState = LineReachState(
            positions=rng.uniform(-0.1, 0.1, size=spec.n_agents),
            velocities=np.zeros(spec.n_agents),
            step_index=0,
        )
    else:
        state = CoopPushState(
            body_pos=np.zeros(2),
            body_vel=np.zeros(2),
            last_actions=np.zeros((spec.n_agents, 2)),
            step_index=0,
        )
    return state, observations(spec, state)


def _validate_actions(spec: EnvSpec, joint_action) -> list[np.ndarray]:
    if len(joint_action) != spec.n_agents:
        raise ValueError(f"expected {spec.n_agents} agent actions, got {len(joint_action)}")
    out = []
    for i, (a, width) in enumerate(zip(joint_action, spec.action_dims)):
        a = np.asarray(a, dtype=np.float64).reshape(-1)
        if a.shape != (width,):
            raise ValueError(f"agent {i} action must have width {width}, got shape {a.shape}")
        if np.any(np.abs(a) > 1.0):
            raise ValueError(f"agent {i} action out of range [-1, 1]: {a}")
        out.append(a)
    return out


def step(
    spec: EnvSpec, state: EnvState, joint_action
) -> tuple[EnvState, list[np.ndarray], np.ndarray, bool]:
    """Apply one joint action; returns (state, observations, reward vector, done).

    Out-of-range actions are rejected, not clamped, and stepping a finished
    episode raises.
    """
    if state.step_index >= spec.horizon:
        raise ValueError("episode already done")
    actions = _validate_actions(spec, joint_action)

    if spec.name == "line_reach":
        assert isinstance(state, LineReachState)
        a = np.array([act[0] for act in actions])
        v = state.velocities + spec.dt * a
        x = state.positions + spec.dt * v
        payload = float(x.mean())
        r0 = -abs(payload - LINE_REACH_GOAL)
        r1 = -float((a * a).mean())
        new_state: EnvState = LineReachState(x, v, state.step_index + 1)
    else:
        assert isinstance(state, CoopPushState)
        forces = np.stack(actions)
        accel = (forces.sum(axis=0) - COOP_PUSH_DRAG * state.body_vel) / COOP_PUSH_MASS
        vel = state.body_vel + spec.dt * accel
        pos = state.body_pos + spec.dt * vel
        r0 = float(vel[0])
        r1 = -float((forces * forces).sum(axis=1).mean())
        new_state = CoopPushState(pos, vel, forces.copy(), state.step_index + 1)

    done = new_state.step_index >= spec.horizon
    return new_state, observations(spec, new_state), np.array([r0, r1]), done


def pad_observation(obs: np.ndarray, target_len: int) -> np.ndarray:
    """Zero-pad a local observation to a fixed maximum length."""
    obs = np.asarray(obs, dtype=np.float64).reshape(-1)
    if obs.size > target_len:
        raise ValueError(f"observation of length {obs.size} exceeds target {target_len}")
    if obs.size == target_len:
        return obs.copy()
    out = np.zeros(target_len)
    out[: obs.size] = obs
    return out


def _non_dominated(points: np.ndarray) -> np.ndarray:
    """Pairwise weak-dominance filter; local so the oracle stays independent
    of the metric module's filter."""
    unique = np.unique(points, axis=0)
    keep = []
    for i in range(unique.shape[0]):
        p = unique[i]
        dominated = False
        for j in range(unique.shape[0]):
            if j == i:
                continue
            q = unique[j]
            if np.all(q >= p) and np.any(q > p):
                dominated = True
                break
        if not dominated:
            keep.append(p)
    return np.array(keep) if keep else np.empty((0, points.shape[1]))


def brute_force_front(
    spec: EnvSpec, horizon_small: int, actions_per_axis: int, reset_seed: int = 0
) -> np.ndarray:
    """Oracle Pareto front over exhaustively enumerated open-loop plans.

    Every joint-action sequence on a per-axis grid of ``actions_per_axis``
    values in [-1, 1] is rolled out for ``horizon_small`` steps from the
    same reset seed; undiscounted return vectors are collected and the
    non-dominated subset returned. Refuses plan counts above 10^6.
    """
    if horizon_small < 1 or horizon_small > spec.horizon:
        raise ValueError(f"horizon_small must lie in [1, {spec.horizon}]")
    if actions_per_axis < 1:
        raise ValueError("actions_per_axis must be >= 1")
    dims_per_step = sum(spec.action_dims)
    total_dims = dims_per_step * horizon_small
    plan_count = actions_per_axis ** total_dims
    if plan_count > BRUTE_FORCE_PLAN_LIMIT:
        raise ValueError(
            f"{plan_count} open-loop plans exceed the enumeration bound of "
            f"{BRUTE_FORCE_PLAN_LIMIT}"
        )
    grid = np.linspace(-1.0, 1.0, actions_per_axis) if actions_per_axis > 1 else np.zeros(1)

    returns = np.empty((plan_count, spec.d_objectives))
    widths = spec.action_dims
    for p, combo in enumerate(itertools.product(range(actions_per_axis), repeat=total_dims)):
        values = grid[np.array(combo)].reshape(horizon_small, dims_per_step)
        state, _ = reset(spec, reset_seed)
        total = np.zeros(spec.d_objectives)
        for t in range(horizon_small):
            row = values[t]
            joint = []
            offset = 0
            for width in widths:
                joint.append(row[offset: offset + width])
                offset += width
            state, _, reward, _ = step(spec, state, joint)
            total += reward
        returns[p] = total
    return _non_dominated(returns)
