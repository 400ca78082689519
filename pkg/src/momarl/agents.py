"""Weight-conditioned multi-agent actor-critic learners (TD3/DDPG backbones).

One shared actor trunk with per-agent tanh heads maps (padded local
observation + preference weight) to actions; a centralised critic (twin
heads for the TD3 variant) maps (joint observation + joint action +
preference weight) to a vector of per-objective values. Training follows
the deterministic policy gradient recipe: clipped-noise target actions,
min-of-two scalarised bootstrap targets, delayed policy updates, and
Polyak-averaged target networks. The DDPG variant is the same code path
with a single critic head, no target noise, and policy updates every
critic update.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import envs, nn
from .evaluation import DEFAULT_HV_REF, EvalSummary, evaluation_summary
from .preferences import sample_simplex
from .replay import Batch, ReplayBufferSet, Transition

VARIANTS = ("moma_td3", "moma_ddpg")

# Loss rows are logged every this many environment steps.
METRIC_LOG_EVERY = 500

# Seed-derivation roles: every network and the runtime stream get a stable
# child seed of the run seed, so a single-agent centralized learner and an
# independent learner with one agent draw identical parameters.
_ROLE_ACTOR = 0
_ROLE_CRITIC = 1
_ROLE_RUNTIME = 2
_ROLE_SUBRUN = 3


def derived_seed(seed: int, role: int, index: int) -> int:
    return int(np.random.SeedSequence([int(seed), int(role), int(index)]).generate_state(1)[0])


class NumericalAbort(RuntimeError):
    """Raised when a loss or gradient goes non-finite; runs fail fast."""


@dataclass(frozen=True)
class AlgoConfig:
    """Hyperparameters of one learner; defaults follow TD3 conventions."""

    variant: str = "moma_td3"
    gamma: float = 0.99
    tau: float = 0.005
    exploration_sigma: float = 0.1
    target_noise_sigma: float = 0.2
    target_noise_clip: float = 0.5
    policy_freq: int = 2
    update_freq: int = 1
    batch_size: int = 128
    actor_lr: float = 3e-4
    critic_lr: float = 3e-4
    warmup_steps: int = 1000
    trunk_widths: tuple[int, ...] = (256, 256)
    head_widths: tuple[int, ...] = (64,)
    critic_widths: tuple[int, ...] = (256, 256)
    buffer_capacity: int = 100_000

    def __post_init__(self):
        for name in ("trunk_widths", "head_widths", "critic_widths"):
            object.__setattr__(self, name, tuple(int(w) for w in getattr(self, name)))
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"gamma must lie in [0, 1), got {self.gamma}")
        if not 0.0 < self.tau <= 1.0:
            raise ValueError(f"tau must lie in (0, 1], got {self.tau}")
        if self.exploration_sigma < 0 or self.target_noise_sigma < 0 or self.target_noise_clip < 0:
            raise ValueError("noise scales must be non-negative")
        if self.policy_freq < 1 or self.update_freq < 1 or self.batch_size < 1:
            raise ValueError("frequencies and batch size must be positive")
        if self.actor_lr <= 0 or self.critic_lr <= 0:
            raise ValueError("learning rates must be positive")
        if self.warmup_steps < 0:
            raise ValueError("warmup_steps must be non-negative")
        if self.buffer_capacity < self.batch_size:
            raise ValueError("buffer capacity must be at least the batch size")
        for name in ("trunk_widths", "head_widths", "critic_widths"):
            widths = getattr(self, name)
            if not widths or any(w < 1 for w in widths):
                raise ValueError(f"{name} must be a non-empty tuple of positive widths")
        if self.variant == "moma_ddpg":
            if self.policy_freq != 1:
                raise ValueError("moma_ddpg requires policy_freq = 1")
            if self.target_noise_sigma != 0.0:
                raise ValueError("moma_ddpg requires target_noise_sigma = 0")

    @property
    def n_critic_heads(self) -> int:
        return 2 if self.variant == "moma_td3" else 1


@dataclass
class ActorNet:
    """Shared trunk + per-agent tanh heads, with target copies.

    ``weight_dim`` is the width of the preference weight appended to the
    trunk input; 0 builds an unconditioned actor (used by the fixed-weight
    outer-loop baseline).
    """

    trunk: nn.MlpParams
    heads: list[nn.MlpParams]
    trunk_target: nn.MlpParams
    head_targets: list[nn.MlpParams]
    max_obs_dim: int
    weight_dim: int

    @property
    def n_agents(self) -> int:
        return len(self.heads)

    @property
    def action_dims(self) -> tuple[int, ...]:
        return tuple(h.spec.output_dim for h in self.heads)


@dataclass
class CriticNet:
    """One or two value heads (two iff TD3) plus target copies."""

    heads: list[nn.MlpParams]
    target_heads: list[nn.MlpParams]


def build_actor(
    max_obs_dim: int,
    action_dims,
    weight_dim: int,
    cfg: AlgoConfig,
    seed: int,
) -> ActorNet:
    rng = np.random.default_rng(seed)
    trunk_spec = nn.MlpSpec((max_obs_dim + weight_dim, *cfg.trunk_widths), "relu", "identity")
    trunk = nn.init_params_rng(trunk_spec, rng)
    feature_dim = cfg.trunk_widths[-1]
    heads = [
        nn.init_params_rng(nn.MlpSpec((feature_dim, *cfg.head_widths, int(a)), "relu", "tanh"), rng)
        for a in action_dims
    ]
    return ActorNet(
        trunk=trunk,
        heads=heads,
        trunk_target=nn.clone_params(trunk),
        head_targets=[nn.clone_params(h) for h in heads],
        max_obs_dim=max_obs_dim,
        weight_dim=weight_dim,
    )


def build_critic(input_dim: int, output_dim: int, n_heads: int, widths, seed: int) -> CriticNet:
    rng = np.random.default_rng(seed)
    spec = nn.MlpSpec((input_dim, *tuple(int(w) for w in widths), output_dim), "relu", "identity")
    heads = [nn.init_params_rng(spec, rng) for _ in range(n_heads)]
    return CriticNet(heads=heads, target_heads=[nn.clone_params(h) for h in heads])


def _actor_input(actor: ActorNet, obs: np.ndarray, w: np.ndarray) -> np.ndarray:
    if actor.weight_dim == 0:
        return obs
    return np.hstack([obs, w]) if obs.ndim > 1 else np.concatenate([obs, w])


def act(
    actor: ActorNet,
    agent_index: int,
    obs: np.ndarray,
    w: np.ndarray,
    noise_sigma: float = 0.0,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Decentralized action: head output plus exploration noise, clamped to [-1, 1].

    ``obs`` must already be padded to the actor's observation width. With
    noise_sigma = 0 no random numbers are consumed and the action is the
    deterministic policy output.
    """
    if not 0 <= agent_index < actor.n_agents:
        raise IndexError(f"agent index {agent_index} out of range 0..{actor.n_agents - 1}")
    obs = np.asarray(obs, dtype=np.float64).reshape(-1)
    if obs.size != actor.max_obs_dim:
        raise ValueError(f"observation must be padded to length {actor.max_obs_dim}")
    feature, _ = nn.forward(actor.trunk, _actor_input(actor, obs, np.asarray(w, dtype=np.float64)))
    action, _ = nn.forward(actor.heads[agent_index], feature)
    if noise_sigma > 0.0:
        if rng is None:
            raise ValueError("exploration noise requires an rng")
        action = action + rng.normal(0.0, noise_sigma, size=action.shape)
    return np.clip(action, -1.0, 1.0)


def target_joint_action(
    actor: ActorNet,
    next_obs: list,
    w: np.ndarray,
    cfg: AlgoConfig,
    rng: np.random.Generator,
) -> list:
    """Per-agent target-policy actions with clipped Gaussian smoothing noise.

    TD3 adds eps ~ clip(N(0, sigma^2), -c, c) per agent; DDPG adds nothing.
    No random numbers are consumed when the noise is identically zero
    (sigma = 0 or c = 0), so the TD3 code path with zeroed noise reproduces
    DDPG draw-for-draw.
    """
    noisy = (
        cfg.variant == "moma_td3"
        and cfg.target_noise_sigma > 0.0
        and cfg.target_noise_clip > 0.0
    )
    n = actor.n_agents
    batch = np.asarray(next_obs[0]).shape[0]
    stacked = np.vstack([
        _actor_input(actor, np.asarray(next_obs[i], dtype=np.float64), w) for i in range(n)
    ])
    features, _ = nn.forward(actor.trunk_target, stacked)
    actions = []
    for i in range(n):
        action, _ = nn.forward(actor.head_targets[i], features[i * batch:(i + 1) * batch])
        if noisy:
            eps = np.clip(
                rng.normal(0.0, cfg.target_noise_sigma, size=action.shape),
                -cfg.target_noise_clip,
                cfg.target_noise_clip,
            )
            action = action + eps
        actions.append(np.clip(action, -1.0, 1.0))
    return actions


def _bootstrap_targets(
    critic: CriticNet,
    next_inputs: np.ndarray,
    reward: np.ndarray,
    done: np.ndarray,
    gamma: float,
    scal_weight: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Min-of-two bootstrap: y = r + gamma (1 - done) Q_target of the head
    whose scalarised candidate is lowest.

    Candidates are scalarised on the full target vector r + gamma (1-d) Q;
    the added common term w.r preserves the argmin over w.Q, and computing
    them this way makes the conservatism audit exact in floating point
    (w . y recomputed elsewhere matches the selected candidate bitwise).
    Ties resolve to head 1. Returns (y, per-head candidates (batch, heads)).
    """
    mask = gamma * (1.0 - done)[:, None]
    targets = []
    candidates = []
    for head in critic.target_heads:
        q, _ = nn.forward(head, next_inputs)
        y_h = reward + mask * q
        targets.append(y_h)
        candidates.append((scal_weight * y_h).sum(axis=1))
    cand = np.column_stack(candidates)
    best = np.argmin(cand, axis=1)
    y = targets[0].copy()
    for h in range(1, len(targets)):
        rows = best == h
        y[rows] = targets[h][rows]
    return y, cand


def critic_target(
    critic: CriticNet,
    next_obs_joint: np.ndarray,
    next_action_joint: np.ndarray,
    w: np.ndarray,
    reward: np.ndarray,
    done,
    gamma: float,
) -> np.ndarray:
    """Bootstrap target vector(s) for weight-conditioned critics.

    Accepts a single transition (1-d arrays) or a batch (2-d arrays).
    """
    single = np.asarray(next_obs_joint).ndim == 1
    obs = np.atleast_2d(np.asarray(next_obs_joint, dtype=np.float64))
    acts = np.atleast_2d(np.asarray(next_action_joint, dtype=np.float64))
    wmat = np.atleast_2d(np.asarray(w, dtype=np.float64))
    if wmat.shape[0] == 1 and obs.shape[0] > 1:
        wmat = np.repeat(wmat, obs.shape[0], axis=0)
    rew = np.atleast_2d(np.asarray(reward, dtype=np.float64))
    done_arr = np.asarray(done, dtype=np.float64).reshape(-1)
    inputs = np.hstack([obs, acts, wmat])
    y, _ = _bootstrap_targets(critic, inputs, rew, done_arr, gamma, wmat)
    return y[0] if single else y


def _regress_critic_heads(
    critic: CriticNet, opt_states: list[nn.AdamState], inputs: np.ndarray, y: np.ndarray
) -> float:
    """One Adam step per head toward the fixed target y; returns the summed loss."""
    batch = inputs.shape[0]
    total = 0.0
    for h in range(len(critic.heads)):
        q, cache = nn.forward(critic.heads[h], inputs)
        diff = q - y
        loss = float((diff * diff).sum(axis=1).mean())
        if not np.isfinite(loss):
            raise NumericalAbort(f"non-finite critic loss (head {h + 1})")
        grads, _ = nn.backward(critic.heads[h], cache, 2.0 * diff / batch)
        critic.heads[h], opt_states[h] = nn.adam_step(critic.heads[h], grads, opt_states[h])
        total += loss
    return total


@dataclass
class ActorOptState:
    trunk: nn.AdamState
    heads: list[nn.AdamState]


def actor_gradients(
    actor: ActorNet,
    critic_head1: nn.MlpParams,
    obs_per_agent: list,
    weight: np.ndarray,
    joint_obs: np.ndarray,
    joint_action: np.ndarray,
    scal_weight: np.ndarray,
) -> tuple[float, nn.MlpParams, list[nn.MlpParams]]:
    """Loss and exact gradients of the deterministic policy objective.

    For each agent the stored joint action has that agent's component
    replaced by its current policy output; the loss is the negated mean
    scalarised value under critic head 1, summed over agents. Gradients
    flow through the replaced component only, into the agent's head and the
    shared trunk. Returns (loss, trunk gradients, per-head gradients).
    """
    batch = joint_obs.shape[0]
    n = actor.n_agents
    joint_width = joint_obs.shape[1]
    act_dims = actor.action_dims
    offsets = np.concatenate(([0], np.cumsum(act_dims)))[:-1]

    # one trunk pass and one critic pass cover all agents: rows i*batch to
    # (i+1)*batch belong to agent i's replaced-action evaluation
    stacked_x = np.vstack([
        _actor_input(actor, np.asarray(obs_per_agent[i], dtype=np.float64), weight)
        for i in range(n)
    ])
    features, trunk_cache = nn.forward(actor.trunk, stacked_x)

    head_caches = []
    critic_rows = []
    for i in range(n):
        action, head_cache = nn.forward(actor.heads[i], features[i * batch:(i + 1) * batch])
        head_caches.append(head_cache)
        modified = joint_action.copy()
        lo = int(offsets[i])
        modified[:, lo: lo + act_dims[i]] = action
        block = np.hstack([joint_obs, modified, weight]) if actor.weight_dim \
            else np.hstack([joint_obs, modified])
        critic_rows.append(block)
    q, critic_cache = nn.forward(critic_head1, np.vstack(critic_rows))
    utilities = (np.tile(scal_weight, (n, 1)) * q).sum(axis=1)
    total_loss = -float(utilities.sum()) / batch
    if not np.isfinite(total_loss):
        raise NumericalAbort("non-finite actor loss")

    _, input_grad = nn.backward(
        critic_head1, critic_cache, np.tile(-scal_weight / batch, (n, 1))
    )
    head_grads: list[nn.MlpParams] = []
    feature_grads = np.empty_like(features)
    for i in range(n):
        lo = int(offsets[i])
        action_grad = input_grad[
            i * batch:(i + 1) * batch, joint_width + lo: joint_width + lo + act_dims[i]
        ]
        hgrads, fgrad = nn.backward(actor.heads[i], head_caches[i], action_grad)
        head_grads.append(hgrads)
        feature_grads[i * batch:(i + 1) * batch] = fgrad
    trunk_grads, _ = nn.backward(actor.trunk, trunk_cache, feature_grads)
    return total_loss, trunk_grads, head_grads


def actor_update(
    actor: ActorNet,
    opt: ActorOptState,
    critic_head1: nn.MlpParams,
    obs_per_agent: list,
    weight: np.ndarray,
    joint_obs: np.ndarray,
    joint_action: np.ndarray,
    scal_weight: np.ndarray,
) -> float:
    """One Adam step on all actor parameters; the critic is read, never written."""
    total_loss, trunk_grads, head_grads = actor_gradients(
        actor, critic_head1, obs_per_agent, weight, joint_obs, joint_action, scal_weight
    )
    actor.trunk, opt.trunk = nn.adam_step(actor.trunk, trunk_grads, opt.trunk)
    for i in range(actor.n_agents):
        actor.heads[i], opt.heads[i] = nn.adam_step(actor.heads[i], head_grads[i], opt.heads[i])
    return total_loss


def soft_update_actor(actor: ActorNet, tau: float) -> None:
    actor.trunk_target = nn.soft_update(actor.trunk_target, actor.trunk, tau)
    actor.head_targets = [
        nn.soft_update(t, o, tau) for t, o in zip(actor.head_targets, actor.heads)
    ]


def soft_update_critic(critic: CriticNet, tau: float) -> None:
    critic.target_heads = [
        nn.soft_update(t, o, tau) for t, o in zip(critic.target_heads, critic.heads)
    ]


# --- policies -----------------------------------------------------------------


@dataclass
class MultiHeadPolicy:
    """Deterministic evaluation-time view of a (possibly weight-blind) actor.

    Callable as policy(padded_obs (batch, n, max_obs), weights (batch, d))
    -> list of per-agent action batches. Each agent's action depends only
    on its own observation row and the weight.
    """

    trunk: nn.MlpParams
    heads: list[nn.MlpParams]
    max_obs_dim: int
    weight_dim: int

    def __call__(self, padded_obs: np.ndarray, weights: np.ndarray) -> list:
        actions = []
        for i in range(len(self.heads)):
            x = padded_obs[:, i, :]
            if self.weight_dim:
                x = np.hstack([x, weights])
            feature, _ = nn.forward(self.trunk, x)
            action, _ = nn.forward(self.heads[i], feature)
            actions.append(action)
        return actions


@dataclass
class PerAgentPolicy:
    """Deterministic view over independent per-agent actors."""

    parts: list[MultiHeadPolicy]

    def __call__(self, padded_obs: np.ndarray, weights: np.ndarray) -> list:
        return [
            part(padded_obs[:, i: i + 1, :], weights)[0]
            for i, part in enumerate(self.parts)
        ]


def scalarised_critic_min(critic: CriticNet, weight_conditioned: bool = True):
    """Callable (joint_obs, joint_action, w) -> min over heads of w . Q(o, a, w)."""

    def estimate(joint_obs: np.ndarray, joint_action: np.ndarray, w: np.ndarray) -> float:
        x = np.concatenate([joint_obs, joint_action])
        if weight_conditioned:
            x = np.concatenate([x, w])
        best = np.inf
        for head in critic.heads:
            q, _ = nn.forward(head, x)
            best = min(best, float(w @ q))
        return best

    return estimate


# --- training loop --------------------------------------------------------------


@dataclass
class TrainSinks:
    """Optional callbacks fed during training.

    metric(step, episode, name, value) receives loss and evaluation rows;
    eval_result(step, episode, summary) additionally receives the raw
    coverage data; target_audit(scalar_targets, candidates) receives, for
    every critic update, the scalarised bootstrap targets and the per-head
    scalarised candidates of each batch row.
    """

    metric: Callable[[int, int, str, float], None] | None = None
    eval_result: Callable[[int, int, EvalSummary], None] | None = None
    target_audit: Callable[[np.ndarray, np.ndarray], None] | None = None


@dataclass
class TrainResult:
    policy: object
    learner: object
    steps: int
    episodes: int


class CentralizedLearner:
    """MOMA-TD3 / MOMA-DDPG: one multi-headed actor, one centralised critic."""

    def __init__(self, env_spec: envs.EnvSpec, cfg: AlgoConfig, seed: int,
                 n_critic_heads: int | None = None):
        self.env_spec = env_spec
        self.cfg = cfg
        d = env_spec.d_objectives
        self.reward_dim = d
        self.actor = build_actor(
            env_spec.max_obs_dim, env_spec.action_dims, d, cfg,
            derived_seed(seed, _ROLE_ACTOR, 0),
        )
        critic_in = (
            env_spec.n_agents * env_spec.max_obs_dim + sum(env_spec.action_dims) + d
        )
        heads = cfg.n_critic_heads if n_critic_heads is None else n_critic_heads
        self.critic = build_critic(
            critic_in, d, heads, cfg.critic_widths, derived_seed(seed, _ROLE_CRITIC, 0)
        )
        self.actor_opt = ActorOptState(
            trunk=nn.adam_init(self.actor.trunk, cfg.actor_lr),
            heads=[nn.adam_init(h, cfg.actor_lr) for h in self.actor.heads],
        )
        self.critic_opt = [nn.adam_init(h, cfg.critic_lr) for h in self.critic.heads]

    def episode_weight(self, rng: np.random.Generator) -> np.ndarray:
        return sample_simplex(rng, self.env_spec.d_objectives)

    def stored_reward(self, reward: np.ndarray, w: np.ndarray) -> np.ndarray:
        return reward

    def explore_action(self, i: int, padded_obs, w, rng) -> np.ndarray:
        return act(self.actor, i, padded_obs, w, self.cfg.exploration_sigma, rng)

    def update(self, batch: Batch, rng, do_policy: bool, audit=None) -> dict:
        cfg = self.cfg
        next_actions = target_joint_action(self.actor, batch.next_obs, batch.weight, cfg, rng)
        next_in = np.hstack([batch.joint_next_obs, np.hstack(next_actions), batch.weight])
        y, candidates = _bootstrap_targets(
            self.critic, next_in, batch.reward, batch.done, cfg.gamma, batch.weight
        )
        if audit is not None:
            audit((batch.weight * y).sum(axis=1), candidates)
        inputs = np.hstack([batch.joint_obs, batch.joint_action, batch.weight])
        losses = {"critic_loss": _regress_critic_heads(self.critic, self.critic_opt, inputs, y)}
        if do_policy:
            losses["actor_loss"] = actor_update(
                self.actor, self.actor_opt, self.critic.heads[0],
                batch.obs, batch.weight, batch.joint_obs, batch.joint_action, batch.weight,
            )
            soft_update_actor(self.actor, cfg.tau)
            soft_update_critic(self.critic, cfg.tau)
        return losses

    def policy(self) -> MultiHeadPolicy:
        return MultiHeadPolicy(
            self.actor.trunk, self.actor.heads, self.actor.max_obs_dim, self.actor.weight_dim
        )

    def scalarised_critic(self):
        return scalarised_critic_min(self.critic, weight_conditioned=True)

    def network_files(self) -> list[tuple[str, nn.MlpParams]]:
        files = [("actor_trunk", self.actor.trunk)]
        files += [(f"actor_head_{i}", h) for i, h in enumerate(self.actor.heads)]
        files += [(f"critic_{j + 1}", h) for j, h in enumerate(self.critic.heads)]
        return files


def _emit_eval(sinks: TrainSinks, step: int, episode: int, learner, env_spec, hv_ref) -> None:
    summary = evaluation_summary(learner.policy(), env_spec, hv_ref)
    if sinks.metric is not None:
        sinks.metric(step, episode, "eum", summary.eum)
        sinks.metric(step, episode, "hypervolume", summary.hypervolume)
        sinks.metric(step, episode, "cardinality", float(summary.cardinality))
        sinks.metric(step, episode, "sparsity", summary.sparsity)
    if sinks.eval_result is not None:
        sinks.eval_result(step, episode, summary)


def run_training_loop(
    env_spec: envs.EnvSpec,
    cfg: AlgoConfig,
    total_steps: int,
    seed: int,
    learner,
    sinks: TrainSinks | None = None,
    eval_every_episodes: int | None = None,
    hv_ref=DEFAULT_HV_REF,
    step_offset: int = 0,
) -> tuple[int, int]:
    """Episode loop shared by all learners; returns (steps run, episodes run).

    Per episode: sample (or fix) a preference weight, reset, act with
    exploration noise (uniform random during warmup), store synchronized
    transitions, and perform a critic update every ``update_freq`` steps
    once a full batch is available; every ``policy_freq`` critic updates
    the policy and all targets are updated. Episodes always run to their
    horizon, so the final episode may overshoot ``total_steps`` by less
    than one horizon.
    """
    if total_steps < 0:
        raise ValueError("total_steps must be non-negative")
    sinks = sinks or TrainSinks()
    rng = np.random.default_rng(derived_seed(seed, _ROLE_RUNTIME, 0))
    n = env_spec.n_agents
    max_obs = env_spec.max_obs_dim
    act_dims = env_spec.action_dims
    buffers = ReplayBufferSet(
        n, cfg.buffer_capacity, max_obs, act_dims,
        reward_dim=learner.reward_dim, weight_dim=env_spec.d_objectives,
    )
    step_count = 0
    episode = 0
    critic_updates = 0
    do_eval = eval_every_episodes is not None and eval_every_episodes > 0
    last_eval_episode = -1

    while step_count < total_steps:
        episode += 1
        w = learner.episode_weight(rng)
        state, obs = envs.reset(env_spec, int(rng.integers(0, 2 ** 31 - 1)))
        padded = [envs.pad_observation(obs[i], max_obs) for i in range(n)]
        done = False
        while not done:
            if step_count < cfg.warmup_steps:
                actions = [rng.uniform(-1.0, 1.0, size=dim) for dim in act_dims]
            else:
                actions = [learner.explore_action(i, padded[i], w, rng) for i in range(n)]
            state, obs, reward, done = envs.step(env_spec, state, actions)
            next_padded = [envs.pad_observation(obs[i], max_obs) for i in range(n)]
            stored = learner.stored_reward(reward, w)
            buffers.push(
                [
                    Transition(padded[i], actions[i], stored, next_padded[i], done, w)
                    for i in range(n)
                ]
            )
            padded = next_padded
            step_count += 1

            losses = None
            if step_count % cfg.update_freq == 0 and buffers.size >= cfg.batch_size:
                critic_updates += 1
                batch = buffers.sample_batch(cfg.batch_size, rng)
                try:
                    losses = learner.update(
                        batch, rng, critic_updates % cfg.policy_freq == 0, sinks.target_audit
                    )
                except NumericalAbort as exc:
                    raise NumericalAbort(
                        f"{exc} at global step {step_offset + step_count}, episode {episode}"
                    ) from exc
            if (
                sinks.metric is not None
                and losses is not None
                and step_count % METRIC_LOG_EVERY == 0
            ):
                for name, value in losses.items():
                    sinks.metric(step_offset + step_count, episode, name, value)

        if do_eval and episode % eval_every_episodes == 0 and step_count < total_steps:
            _emit_eval(sinks, step_offset + step_count, episode, learner, env_spec, hv_ref)
            last_eval_episode = episode

    if do_eval and last_eval_episode != episode:
        _emit_eval(sinks, step_offset + step_count, episode, learner, env_spec, hv_ref)
    return step_count, episode


def train(
    env_spec: envs.EnvSpec,
    cfg: AlgoConfig,
    total_steps: int,
    seed: int,
    sinks: TrainSinks | None = None,
    eval_every_episodes: int | None = None,
    hv_ref=DEFAULT_HV_REF,
) -> TrainResult:
    """Train a centralized weight-conditioned learner (MOMA-TD3 / MOMA-DDPG)."""
    learner = CentralizedLearner(env_spec, cfg, seed)
    steps, episodes = run_training_loop(
        env_spec, cfg, total_steps, seed, learner, sinks, eval_every_episodes, hv_ref
    )
    return TrainResult(policy=learner.policy(), learner=learner, steps=steps, episodes=episodes)
