"""Per-agent ring buffers with timestep-synchronized batch sampling.

Each agent owns a buffer of equal capacity; writes happen in lockstep at a
shared cursor, so slot k holds the same timestep in every buffer. Reward,
done flag, and preference weight are stored per agent but must be identical
across agents (fully cooperative setting).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass
class Transition:
    """One agent's record of a single timestep.

    ``obs`` and ``next_obs`` must already be padded to the buffer's
    observation width.
    """

    obs: np.ndarray
    action: np.ndarray
    reward: np.ndarray
    next_obs: np.ndarray
    done: bool
    weight: np.ndarray


@dataclass
class Batch:
    """Aligned per-agent batches plus joint views in agent order."""

    obs: list[np.ndarray]          # per agent, (batch, obs_dim)
    actions: list[np.ndarray]      # per agent, (batch, act_dim_i)
    next_obs: list[np.ndarray]
    joint_obs: np.ndarray          # (batch, n_agents * obs_dim)
    joint_action: np.ndarray       # (batch, sum act_dims)
    joint_next_obs: np.ndarray
    reward: np.ndarray             # (batch, reward_dim)
    done: np.ndarray               # (batch,)
    weight: np.ndarray             # (batch, weight_dim)
    indices: np.ndarray            # sampled slots, identical for every agent

    @property
    def size(self) -> int:
        return self.reward.shape[0]


class ReplayBufferSet:
    """n_agents ring buffers written and sampled in lockstep."""

    def __init__(
        self,
        n_agents: int,
        capacity: int,
        obs_dim: int,
        action_dims: Sequence[int],
        reward_dim: int = 2,
        weight_dim: int = 2,
    ):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        if len(action_dims) != n_agents:
            raise ValueError("need one action width per agent")
        self.n_agents = n_agents
        self.capacity = capacity
        self.obs_dim = obs_dim
        self.action_dims = tuple(int(a) for a in action_dims)
        self.reward_dim = reward_dim
        self.weight_dim = weight_dim

        self._obs = [np.zeros((capacity, obs_dim)) for _ in range(n_agents)]
        self._next_obs = [np.zeros((capacity, obs_dim)) for _ in range(n_agents)]
        self._actions = [np.zeros((capacity, a)) for a in self.action_dims]
        self._rewards = [np.zeros((capacity, reward_dim)) for _ in range(n_agents)]
        self._dones = [np.zeros(capacity, dtype=bool) for _ in range(n_agents)]
        self._weights = [np.zeros((capacity, weight_dim)) for _ in range(n_agents)]
        self.cursor = 0
        self.size = 0

    def push(self, per_agent: Sequence[Transition]) -> None:
        """Write one synchronized timestep; oldest entries overwritten when full."""
        if len(per_agent) != self.n_agents:
            raise ValueError(f"expected {self.n_agents} transitions, got {len(per_agent)}")
        first = per_agent[0]
        for i, tr in enumerate(per_agent):
            if not np.array_equal(tr.reward, first.reward):
                raise ValueError("reward vectors differ across agents in one push")
            if tr.done != first.done:
                raise ValueError("done flags differ across agents in one push")
            if not np.array_equal(tr.weight, first.weight):
                raise ValueError("preference weights differ across agents in one push")
            if np.asarray(tr.obs).shape != (self.obs_dim,):
                raise ValueError(f"agent {i} obs must be padded to length {self.obs_dim}")
            if np.asarray(tr.next_obs).shape != (self.obs_dim,):
                raise ValueError(f"agent {i} next_obs must be padded to length {self.obs_dim}")
            if np.asarray(tr.action).shape != (self.action_dims[i],):
                raise ValueError(f"agent {i} action has wrong width")

        k = self.cursor
        for i, tr in enumerate(per_agent):
            self._obs[i][k] = tr.obs
            self._next_obs[i][k] = tr.next_obs
            self._actions[i][k] = tr.action
            self._rewards[i][k] = tr.reward
            self._dones[i][k] = tr.done
            self._weights[i][k] = tr.weight
        self.cursor = (k + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample_batch(self, batch_size: int, rng: np.random.Generator) -> Batch:
        """Uniform with replacement; one index draw applied to every agent buffer."""
        if batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.size < batch_size:
            raise ValueError(
                f"need at least {batch_size} stored transitions, have {self.size}"
            )
        idx = rng.integers(0, self.size, size=batch_size)
        obs = [self._obs[i][idx] for i in range(self.n_agents)]
        actions = [self._actions[i][idx] for i in range(self.n_agents)]
        next_obs = [self._next_obs[i][idx] for i in range(self.n_agents)]
        return Batch(
            obs=obs,
            actions=actions,
            next_obs=next_obs,
            joint_obs=np.hstack(obs),
            joint_action=np.hstack(actions),
            joint_next_obs=np.hstack(next_obs),
            reward=self._rewards[0][idx].copy(),
            done=self._dones[0][idx].astype(np.float64),
            weight=self._weights[0][idx].copy(),
            indices=idx,
        )
