"""Comparison systems: independent per-agent learners and fixed-weight outer loop.

* ``train_ind_mo_td3`` -- every agent trains a private weight-conditioned
  actor and private twin critics whose inputs are only that agent's padded
  observation, own action, and the preference weight. The loop otherwise
  matches the centralized trainer, so with a single agent the two produce
  identical updates under the same seed.
* ``train_outer_loop`` -- one multi-agent TD3 run per fixed grid weight,
  with rewards scalarised at storage time and no weight conditioning
  anywhere; the resulting policies' mean vector returns are assembled into
  a coverage set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import envs, nn
from .agents import (
    ActorOptState,
    AlgoConfig,
    MultiHeadPolicy,
    PerAgentPolicy,
    TrainResult,
    TrainSinks,
    _bootstrap_targets,
    _regress_critic_heads,
    _ROLE_ACTOR,
    _ROLE_CRITIC,
    _ROLE_SUBRUN,
    act,
    actor_update,
    build_actor,
    build_critic,
    derived_seed,
    run_training_loop,
    scalarised_critic_min,
    soft_update_actor,
    soft_update_critic,
    target_joint_action,
)
from .evaluation import (
    DEFAULT_HV_REF,
    EvalSummary,
    cardinality,
    deterministic_returns,
    evaluation_reset_seed,
    hypervolume_2d,
    pareto_filter,
    policy_set_eum,
    sparsity,
)
from .preferences import equally_spaced_weights, sample_simplex, validate_weight


class IndependentLearner:
    """Per-agent actors and critics with no shared parameters or joint inputs."""

    def __init__(self, env_spec: envs.EnvSpec, cfg: AlgoConfig, seed: int):
        self.env_spec = env_spec
        self.cfg = cfg
        d = env_spec.d_objectives
        self.reward_dim = d
        self.actors = []
        self.critics = []
        self.actor_opts = []
        self.critic_opts = []
        for i in range(env_spec.n_agents):
            actor = build_actor(
                env_spec.max_obs_dim, (env_spec.action_dims[i],), d, cfg,
                derived_seed(seed, _ROLE_ACTOR, i),
            )
            critic_in = env_spec.max_obs_dim + env_spec.action_dims[i] + d
            critic = build_critic(
                critic_in, d, cfg.n_critic_heads, cfg.critic_widths,
                derived_seed(seed, _ROLE_CRITIC, i),
            )
            self.actors.append(actor)
            self.critics.append(critic)
            self.actor_opts.append(
                ActorOptState(
                    trunk=nn.adam_init(actor.trunk, cfg.actor_lr),
                    heads=[nn.adam_init(h, cfg.actor_lr) for h in actor.heads],
                )
            )
            self.critic_opts.append([nn.adam_init(h, cfg.critic_lr) for h in critic.heads])

    def episode_weight(self, rng):
        return sample_simplex(rng, self.env_spec.d_objectives)

    def stored_reward(self, reward, w):
        return reward

    def explore_action(self, i, padded_obs, w, rng):
        return act(self.actors[i], 0, padded_obs, w, self.cfg.exploration_sigma, rng)

    def update(self, batch, rng, do_policy: bool, audit=None) -> dict:
        cfg = self.cfg
        critic_loss = 0.0
        actor_loss = 0.0
        for i in range(self.env_spec.n_agents):
            actor = self.actors[i]
            critic = self.critics[i]
            next_action = target_joint_action(actor, [batch.next_obs[i]], batch.weight, cfg, rng)[0]
            next_in = np.hstack([batch.next_obs[i], next_action, batch.weight])
            y, candidates = _bootstrap_targets(
                critic, next_in, batch.reward, batch.done, cfg.gamma, batch.weight
            )
            if audit is not None:
                audit((batch.weight * y).sum(axis=1), candidates)
            inputs = np.hstack([batch.obs[i], batch.actions[i], batch.weight])
            critic_loss += _regress_critic_heads(critic, self.critic_opts[i], inputs, y)
            if do_policy:
                actor_loss += actor_update(
                    actor, self.actor_opts[i], critic.heads[0],
                    [batch.obs[i]], batch.weight, batch.obs[i], batch.actions[i], batch.weight,
                )
                soft_update_actor(actor, cfg.tau)
                soft_update_critic(critic, cfg.tau)
        losses = {"critic_loss": critic_loss}
        if do_policy:
            losses["actor_loss"] = actor_loss
        return losses

    def policy(self) -> PerAgentPolicy:
        return PerAgentPolicy(
            [
                MultiHeadPolicy(a.trunk, a.heads, a.max_obs_dim, a.weight_dim)
                for a in self.actors
            ]
        )

    def network_files(self):
        files = []
        for i, (actor, critic) in enumerate(zip(self.actors, self.critics)):
            files.append((f"agent{i}_actor_trunk", actor.trunk))
            files.append((f"agent{i}_actor_head_0", actor.heads[0]))
            files += [(f"agent{i}_critic_{j + 1}", h) for j, h in enumerate(critic.heads)]
        return files


def train_ind_mo_td3(
    env_spec: envs.EnvSpec,
    cfg: AlgoConfig,
    total_steps: int,
    seed: int,
    sinks: TrainSinks | None = None,
    eval_every_episodes: int | None = None,
    hv_ref=DEFAULT_HV_REF,
) -> TrainResult:
    """Independent weight-conditioned learners sharing only the environment."""
    learner = IndependentLearner(env_spec, cfg, seed)
    steps, episodes = run_training_loop(
        env_spec, cfg, total_steps, seed, learner, sinks, eval_every_episodes, hv_ref
    )
    return TrainResult(policy=learner.policy(), learner=learner, steps=steps, episodes=episodes)


# --- outer loop -----------------------------------------------------------------


@dataclass(frozen=True)
class OuterLoopPlan:
    """A grid of fixed weights and the per-weight training budget.

    The total budget (grid size x per-weight steps) is what should be
    compared against a single conditioned run.
    """

    weight_grid: np.ndarray
    per_weight_steps: int
    cfg: AlgoConfig

    def __post_init__(self):
        grid = np.atleast_2d(np.asarray(self.weight_grid, dtype=np.float64))
        object.__setattr__(self, "weight_grid", grid)
        for row in grid:
            validate_weight(row)
        if self.per_weight_steps < 0:
            raise ValueError("per_weight_steps must be non-negative")
        if self.cfg.variant != "moma_td3":
            raise ValueError("the outer-loop baseline uses a TD3 backbone")

    @property
    def grid_size(self) -> int:
        return int(self.weight_grid.shape[0])

    @property
    def total_steps(self) -> int:
        return self.grid_size * self.per_weight_steps


def default_outer_plan(cfg: AlgoConfig, total_steps: int, grid_size: int = 5) -> OuterLoopPlan:
    """Equal split of a total budget over an equally spaced weight grid."""
    if grid_size < 1:
        raise ValueError("grid_size must be >= 1")
    if total_steps % grid_size != 0:
        raise ValueError(
            f"total_steps {total_steps} is not divisible by the grid size {grid_size}; "
            "equal per-weight budgets are required for fair comparisons"
        )
    grid = equally_spaced_weights(grid_size) if grid_size > 1 else np.array([[1.0, 0.0]])
    return OuterLoopPlan(grid, total_steps // grid_size, cfg)


class ScalarJointLearner:
    """Multi-agent TD3 on a fixed scalarisation: no weight conditioning anywhere."""

    def __init__(self, env_spec: envs.EnvSpec, cfg: AlgoConfig, seed: int,
                 fixed_weight: np.ndarray):
        self.env_spec = env_spec
        self.cfg = cfg
        self.fixed_weight = validate_weight(fixed_weight)
        self.reward_dim = 1
        self.actor = build_actor(
            env_spec.max_obs_dim, env_spec.action_dims, 0, cfg,
            derived_seed(seed, _ROLE_ACTOR, 0),
        )
        critic_in = env_spec.n_agents * env_spec.max_obs_dim + sum(env_spec.action_dims)
        self.critic = build_critic(
            critic_in, 1, cfg.n_critic_heads, cfg.critic_widths,
            derived_seed(seed, _ROLE_CRITIC, 0),
        )
        self.actor_opt = ActorOptState(
            trunk=nn.adam_init(self.actor.trunk, cfg.actor_lr),
            heads=[nn.adam_init(h, cfg.actor_lr) for h in self.actor.heads],
        )
        self.critic_opt = [nn.adam_init(h, cfg.critic_lr) for h in self.critic.heads]

    def episode_weight(self, rng):
        return self.fixed_weight

    def stored_reward(self, reward, w):
        return np.array([float(w @ reward)])

    def explore_action(self, i, padded_obs, w, rng):
        return act(self.actor, i, padded_obs, w, self.cfg.exploration_sigma, rng)

    def update(self, batch, rng, do_policy: bool, audit=None) -> dict:
        cfg = self.cfg
        ones = np.ones((batch.size, 1))
        next_actions = target_joint_action(self.actor, batch.next_obs, batch.weight, cfg, rng)
        next_in = np.hstack([batch.joint_next_obs, np.hstack(next_actions)])
        y, candidates = _bootstrap_targets(
            self.critic, next_in, batch.reward, batch.done, cfg.gamma, ones
        )
        if audit is not None:
            audit((ones * y).sum(axis=1), candidates)
        inputs = np.hstack([batch.joint_obs, batch.joint_action])
        losses = {"critic_loss": _regress_critic_heads(self.critic, self.critic_opt, inputs, y)}
        if do_policy:
            losses["actor_loss"] = actor_update(
                self.actor, self.actor_opt, self.critic.heads[0],
                batch.obs, batch.weight, batch.joint_obs, batch.joint_action, ones,
            )
            soft_update_actor(self.actor, cfg.tau)
            soft_update_critic(self.critic, cfg.tau)
        return losses

    def policy(self) -> MultiHeadPolicy:
        return MultiHeadPolicy(self.actor.trunk, self.actor.heads, self.actor.max_obs_dim, 0)

    def scalarised_critic(self):
        return scalarised_critic_min(self.critic, weight_conditioned=False)

    def network_files(self):
        files = [("actor_trunk", self.actor.trunk)]
        files += [(f"actor_head_{i}", h) for i, h in enumerate(self.actor.heads)]
        files += [(f"critic_{j + 1}", h) for j, h in enumerate(self.critic.heads)]
        return files


@dataclass
class OuterLoopResult:
    policies: list
    learners: list
    value_vectors: np.ndarray
    front: np.ndarray
    summary: EvalSummary
    steps: int
    episodes: int


def evaluate_fixed_policies(
    policies: list, env_spec: envs.EnvSpec, episodes_per_policy: int = 5
) -> np.ndarray:
    """Mean vector return of each fixed policy over deterministic episodes."""
    values = np.zeros((len(policies), env_spec.d_objectives))
    dummy_w = np.zeros((episodes_per_policy, env_spec.d_objectives))
    dummy_w[:, 0] = 1.0
    seeds = [evaluation_reset_seed(e) for e in range(episodes_per_policy)]
    for k, policy in enumerate(policies):
        values[k] = deterministic_returns(policy, env_spec, dummy_w, seeds).mean(axis=0)
    return values


def train_outer_loop(
    env_spec: envs.EnvSpec,
    plan: OuterLoopPlan,
    seed: int,
    sinks: TrainSinks | None = None,
    hv_ref=DEFAULT_HV_REF,
) -> OuterLoopResult:
    """Sequentially train one scalarised policy per grid weight and assemble
    the non-dominated set of their mean vector returns."""
    sinks = sinks or TrainSinks()
    learners = []
    total_steps = 0
    total_episodes = 0
    for k in range(plan.grid_size):
        sub_seed = derived_seed(seed, _ROLE_SUBRUN, k)
        learner = ScalarJointLearner(env_spec, plan.cfg, sub_seed, plan.weight_grid[k])
        steps, episodes = run_training_loop(
            env_spec, plan.cfg, plan.per_weight_steps, sub_seed, learner,
            TrainSinks(metric=sinks.metric, target_audit=sinks.target_audit),
            eval_every_episodes=None, step_offset=total_steps,
        )
        learners.append(learner)
        total_steps += steps
        total_episodes += episodes

    policies = [ln.policy() for ln in learners]
    values = evaluate_fixed_policies(policies, env_spec)
    front = pareto_filter(values)
    summary = EvalSummary(
        eum=policy_set_eum(values),
        hypervolume=hypervolume_2d(front, hv_ref),
        cardinality=cardinality(front),
        sparsity=sparsity(front),
        raw_points=values,
        front=front,
    )
    if sinks.metric is not None:
        sinks.metric(total_steps, total_episodes, "eum", summary.eum)
        sinks.metric(total_steps, total_episodes, "hypervolume", summary.hypervolume)
        sinks.metric(total_steps, total_episodes, "cardinality", float(summary.cardinality))
        sinks.metric(total_steps, total_episodes, "sparsity", summary.sparsity)
    if sinks.eval_result is not None:
        sinks.eval_result(total_steps, total_episodes, summary)
    return OuterLoopResult(
        policies=policies,
        learners=learners,
        value_vectors=values,
        front=front,
        summary=summary,
        steps=total_steps,
        episodes=total_episodes,
    )
