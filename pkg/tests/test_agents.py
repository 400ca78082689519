"""Actors, critics, bootstrap targets, policy gradients, and the training loop."""

import numpy as np
import pytest

from momarl import agents, envs, nn
from momarl.agents import AlgoConfig, CentralizedLearner, TrainSinks

from conftest import relative_errors


def constant_head(input_dim: int, outputs) -> nn.MlpParams:
    """Single affine layer with zero weights: the network always emits ``outputs``."""
    outputs = np.asarray(outputs, dtype=np.float64)
    spec = nn.MlpSpec((input_dim, outputs.size))
    return nn.MlpParams(spec, [np.zeros((input_dim, outputs.size))], [outputs.copy()])


def constant_critic(input_dim: int, per_head_outputs) -> agents.CriticNet:
    heads = [constant_head(input_dim, out) for out in per_head_outputs]
    return agents.CriticNet(heads, [nn.clone_params(h) for h in heads])


@pytest.fixture
def line2():
    return envs.EnvSpec("line_reach", 2, 10)


# --- config -------------------------------------------------------------------


def test_config_enforces_ddpg_invariants():
    with pytest.raises(ValueError, match="policy_freq"):
        AlgoConfig(variant="moma_ddpg", policy_freq=2, target_noise_sigma=0.0)
    with pytest.raises(ValueError, match="target_noise_sigma"):
        AlgoConfig(variant="moma_ddpg", policy_freq=1, target_noise_sigma=0.1)
    ok = AlgoConfig(variant="moma_ddpg", policy_freq=1, target_noise_sigma=0.0)
    assert ok.n_critic_heads == 1
    assert AlgoConfig().n_critic_heads == 2


def test_config_rejects_bad_ranges():
    with pytest.raises(ValueError):
        AlgoConfig(gamma=1.0)
    with pytest.raises(ValueError):
        AlgoConfig(tau=0.0)
    with pytest.raises(ValueError):
        AlgoConfig(batch_size=0)
    with pytest.raises(ValueError):
        AlgoConfig(variant="sac")
    with pytest.raises(ValueError):
        AlgoConfig(trunk_widths=())


# --- act ----------------------------------------------------------------------


def test_act_deterministic_without_noise(line2, tiny_cfg):
    learner = CentralizedLearner(line2, tiny_cfg, seed=0)
    obs = np.zeros(line2.max_obs_dim)
    w = np.array([0.7, 0.3])
    a1 = agents.act(learner.actor, 0, obs, w)
    a2 = agents.act(learner.actor, 0, obs, w)
    assert np.array_equal(a1, a2)
    assert np.all(np.abs(a1) < 1.0)


def test_act_with_noise_stays_clamped(line2, tiny_cfg):
    learner = CentralizedLearner(line2, tiny_cfg, seed=0)
    obs = np.zeros(line2.max_obs_dim)
    w = np.array([0.5, 0.5])
    rng = np.random.default_rng(0)
    for _ in range(100):
        a = agents.act(learner.actor, 1, obs, w, noise_sigma=2.0, rng=rng)
        assert np.all(a >= -1.0) and np.all(a <= 1.0)


def test_act_heads_are_distinct_parameters(line2, tiny_cfg):
    learner = CentralizedLearner(line2, tiny_cfg, seed=0)
    obs = np.full(line2.max_obs_dim, 0.37)
    w = np.array([0.5, 0.5])
    a0 = agents.act(learner.actor, 0, obs, w)
    a1 = agents.act(learner.actor, 1, obs, w)
    assert not np.array_equal(a0, a1)


def test_act_validates_index_and_obs(line2, tiny_cfg):
    learner = CentralizedLearner(line2, tiny_cfg, seed=0)
    with pytest.raises(IndexError):
        agents.act(learner.actor, 2, np.zeros(line2.max_obs_dim), np.array([0.5, 0.5]))
    with pytest.raises(ValueError):
        agents.act(learner.actor, 0, np.zeros(2), np.array([0.5, 0.5]))


def test_weight_conditioning_is_live(line2, tiny_cfg):
    # a freshly initialized actor already responds to the weight input
    learner = CentralizedLearner(line2, tiny_cfg, seed=1)
    obs = np.full(line2.max_obs_dim, 0.2)
    actions = [
        agents.act(learner.actor, 0, obs, np.array([w0, 1.0 - w0]))
        for w0 in np.linspace(0, 1, 11)
    ]
    assert np.unique(np.array(actions), axis=0).shape[0] > 1


# --- target actions -------------------------------------------------------------


def test_target_joint_action_ddpg_is_exact_target_output(line2):
    cfg = AlgoConfig(
        variant="moma_ddpg", policy_freq=1, target_noise_sigma=0.0,
        trunk_widths=(16,), head_widths=(8,), critic_widths=(16,),
    )
    learner = CentralizedLearner(line2, cfg, seed=0)
    actor = learner.actor
    obs = [np.random.default_rng(i).normal(size=(4, line2.max_obs_dim)) for i in range(2)]
    w = np.tile([0.4, 0.6], (4, 1))
    rng = np.random.default_rng(0)
    out = agents.target_joint_action(actor, obs, w, cfg, rng)
    for i in range(2):
        x = np.hstack([obs[i], w])
        feature, _ = nn.forward(actor.trunk_target, x)
        expected, _ = nn.forward(actor.head_targets[i], feature)
        assert np.array_equal(out[i], np.clip(expected, -1, 1))


def test_target_joint_action_td3_clips_noise(line2, tiny_cfg):
    learner = CentralizedLearner(line2, tiny_cfg, seed=0)
    actor = learner.actor
    # zero the target heads so the output is exactly the clipped noise
    for head in actor.head_targets:
        for arr in head.arrays():
            arr[...] = 0.0
    cfg = AlgoConfig(
        target_noise_sigma=5.0, target_noise_clip=0.5,
        trunk_widths=(16, 16), head_widths=(8,), critic_widths=(16, 16),
    )
    obs = [np.zeros((64, line2.max_obs_dim)) for _ in range(2)]
    w = np.tile([0.5, 0.5], (64, 1))
    out = agents.target_joint_action(actor, obs, w, cfg, np.random.default_rng(3))
    for a in out:
        assert np.all(np.abs(a) <= 0.5)
        assert np.any(np.abs(a) == 0.5)  # sigma >> clip: most draws clip


def test_target_joint_action_zero_clip_matches_ddpg_path(line2, tiny_cfg):
    learner = CentralizedLearner(line2, tiny_cfg, seed=0)
    actor = learner.actor
    obs = [np.random.default_rng(9).normal(size=(3, line2.max_obs_dim))] * 2
    w = np.tile([0.5, 0.5], (3, 1))
    td3_zero_clip = AlgoConfig(
        target_noise_clip=0.0, trunk_widths=(16, 16), head_widths=(8,),
        critic_widths=(16, 16),
    )
    ddpg = AlgoConfig(
        variant="moma_ddpg", policy_freq=1, target_noise_sigma=0.0,
        trunk_widths=(16, 16), head_widths=(8,), critic_widths=(16, 16),
    )
    rng = np.random.default_rng(0)
    a = agents.target_joint_action(actor, obs, w, td3_zero_clip, rng)
    b = agents.target_joint_action(actor, obs, w, ddpg, rng)
    for x, y in zip(a, b):
        assert np.array_equal(x, y)


# --- bootstrap targets ------------------------------------------------------------


def test_critic_target_hand_cases():
    critic = constant_critic(5, [(1.0, 2.0), (2.0, 1.0)])
    obs = np.zeros(2)
    action = np.zeros(1)
    r = np.zeros(2)
    y = agents.critic_target(critic, obs, action, np.array([1.0, 0.0]), r, False, 0.9)
    assert np.allclose(y, [0.9, 1.8])  # head 1 scalarises lower under (1, 0)
    y = agents.critic_target(critic, obs, action, np.array([0.0, 1.0]), r, False, 0.9)
    assert np.allclose(y, [1.8, 0.9])  # symmetric weight flips the pick
    y = agents.critic_target(
        critic, obs, action, np.array([1.0, 0.0]), np.array([3.0, -1.0]), True, 0.9
    )
    assert np.array_equal(y, [3.0, -1.0])  # terminal: y = r exactly


def test_critic_target_tie_resolves_to_head_one():
    critic = constant_critic(5, [(1.0, 1.0), (1.0, 1.0)])
    # make the heads distinguishable through an off-diagonal entry that only
    # matters if head 2 were selected
    critic.target_heads[1].biases[0][:] = (1.0, 5.0)
    y = agents.critic_target(
        critic, np.zeros(2), np.zeros(1), np.array([1.0, 0.0]), np.zeros(2), False, 1e-9
    )
    # scalarised candidates are equal under (1, 0); head 1's vector is returned
    assert y[1] == pytest.approx(1e-9)


def test_min_of_two_conservatism_on_random_batches(line2, tiny_cfg):
    learner = CentralizedLearner(line2, tiny_cfg, seed=4)
    rng = np.random.default_rng(0)
    batch = 32
    dim = line2.n_agents * line2.max_obs_dim + sum(line2.action_dims) + 2
    next_in = rng.normal(size=(batch, dim))
    reward = rng.normal(size=(batch, 2))
    done = (rng.uniform(size=batch) < 0.2).astype(np.float64)
    w0 = rng.uniform(size=batch)
    w = np.column_stack([w0, 1 - w0])
    y, cand = agents._bootstrap_targets(learner.critic, next_in, reward, done, 0.99, w)
    scal_y = (w * y).sum(axis=1)
    # selected target never exceeds either per-head candidate, exactly
    assert np.all(scal_y <= cand[:, 0])
    assert np.all(scal_y <= cand[:, 1])
    assert np.all(scal_y == cand.min(axis=1))


# --- critic regression -------------------------------------------------------------


def test_critic_update_perfect_fit_keeps_params():
    critic = constant_critic(4, [(1.0, -1.0)])
    opts = [nn.adam_init(critic.heads[0], 1e-3)]
    inputs = np.random.default_rng(0).normal(size=(8, 4))
    y = np.tile([1.0, -1.0], (8, 1))
    before = [a.copy() for a in critic.heads[0].arrays()]
    loss = agents._regress_critic_heads(critic, opts, inputs, y)
    assert loss == 0.0
    for a, b in zip(critic.heads[0].arrays(), before):
        assert np.array_equal(a, b)


def test_critic_update_hand_loss():
    critic = constant_critic(4, [(0.0, 0.0)])
    opts = [nn.adam_init(critic.heads[0], 1e-3)]
    loss = agents._regress_critic_heads(
        critic, opts, np.zeros((1, 4)), np.array([[1.0, 1.0]])
    )
    assert loss == pytest.approx(2.0)


def test_td3_critic_loss_at_least_single_head(line2, tiny_cfg):
    rng = np.random.default_rng(1)
    inputs = rng.normal(size=(16, 14))
    y = rng.normal(size=(16, 2))
    twin = agents.build_critic(14, 2, 2, (16, 16), seed=3)
    single = agents.CriticNet([nn.clone_params(twin.heads[0])],
                              [nn.clone_params(twin.target_heads[0])])
    loss_twin = agents._regress_critic_heads(
        twin, [nn.adam_init(h, 1e-9) for h in twin.heads], inputs, y
    )
    loss_single = agents._regress_critic_heads(
        single, [nn.adam_init(single.heads[0], 1e-9)], inputs, y
    )
    assert loss_twin >= loss_single


# --- actor update -------------------------------------------------------------------


def test_actor_update_constant_critic_gives_zero_gradient(line2, tiny_cfg):
    learner = CentralizedLearner(line2, tiny_cfg, seed=0)
    critic_in = line2.n_agents * line2.max_obs_dim + sum(line2.action_dims) + 2
    flat_critic = constant_head(critic_in, (3.0, -2.0))
    rng = np.random.default_rng(0)
    obs = [rng.normal(size=(8, line2.max_obs_dim)) for _ in range(2)]
    w = np.tile([0.5, 0.5], (8, 1))
    joint_obs = np.hstack(obs)
    joint_action = rng.uniform(-1, 1, size=(8, 2))
    _, trunk_grads, head_grads = agents.actor_gradients(
        learner.actor, flat_critic, obs, w, joint_obs, joint_action, w
    )
    assert all(np.array_equal(a, np.zeros_like(a)) for a in trunk_grads.arrays())
    for hg in head_grads:
        assert all(np.array_equal(a, np.zeros_like(a)) for a in hg.arrays())


def test_actor_update_pushes_rewarded_action_up(line2, tiny_cfg):
    # critic returns (a_1, 0): under weight (1, 0) gradient ascent must
    # raise agent 1's mean action
    learner = CentralizedLearner(line2, tiny_cfg, seed=2)
    critic_in = line2.n_agents * line2.max_obs_dim + sum(line2.action_dims) + 2
    spec = nn.MlpSpec((critic_in, 2))
    weights = np.zeros((critic_in, 2))
    weights[2 * line2.max_obs_dim, 0] = 1.0  # objective 0 reads agent 1's action
    pick_a1 = nn.MlpParams(spec, [weights], [np.zeros(2)])

    rng = np.random.default_rng(0)
    obs = [rng.normal(size=(32, line2.max_obs_dim)) for _ in range(2)]
    w = np.tile([1.0, 0.0], (32, 1))
    joint_obs = np.hstack(obs)
    joint_action = rng.uniform(-1, 1, size=(32, 2))

    def mean_a1():
        x = np.hstack([obs[0], w])
        feature, _ = nn.forward(learner.actor.trunk, x)
        action, _ = nn.forward(learner.actor.heads[0], feature)
        return float(action.mean())

    before = mean_a1()
    loss = agents.actor_update(
        learner.actor, learner.actor_opt, pick_a1, obs, w, joint_obs, joint_action, w
    )
    assert mean_a1() > before
    # agent 2's pass reads agent 1's action from the buffer, adding a
    # policy-independent term to the summed loss
    assert loss == pytest.approx(-(before + joint_action[:, 0].mean()), abs=1e-12)


def test_actor_gradients_match_finite_differences(line2):
    cfg = AlgoConfig(trunk_widths=(6,), head_widths=(5,), critic_widths=(6,),
                     batch_size=4, warmup_steps=0, buffer_capacity=128)
    learner = CentralizedLearner(line2, cfg, seed=7)
    critic_head = learner.critic.heads[0]
    rng = np.random.default_rng(1)
    obs = [rng.normal(size=(4, line2.max_obs_dim)) * 0.5 for _ in range(2)]
    w0 = rng.uniform(size=4)
    w = np.column_stack([w0, 1 - w0])
    joint_obs = np.hstack(obs)
    joint_action = rng.uniform(-0.9, 0.9, size=(4, 2))

    loss, trunk_grads, head_grads = agents.actor_gradients(
        learner.actor, critic_head, obs, w, joint_obs, joint_action, w
    )

    def composite_loss() -> float:
        value, _, _ = agents.actor_gradients(
            learner.actor, critic_head, obs, w, joint_obs, joint_action, w
        )
        return value

    h = 1e-6
    for params, grads in [(learner.actor.trunk, trunk_grads),
                          (learner.actor.heads[0], head_grads[0]),
                          (learner.actor.heads[1], head_grads[1])]:
        for arr, garr in zip(params.arrays(), grads.arrays()):
            flat = arr.reshape(-1)
            gflat = garr.reshape(-1)
            for k in range(0, flat.size, max(1, flat.size // 5)):
                orig = flat[k]
                flat[k] = orig + h
                plus = composite_loss()
                flat[k] = orig - h
                minus = composite_loss()
                flat[k] = orig
                fd = (plus - minus) / (2 * h)
                assert relative_errors(np.array([gflat[k]]), np.array([fd]),
                                       floor=1e-3).max() <= 1e-3


def test_actor_loss_ignores_other_agents_current_policies(line2, tiny_cfg):
    # the joint action for agent i's pass takes other agents' actions from
    # the batch, so perturbing agent 2's parameters cannot change the loss
    # through a critic that only reads agent 1's action
    critic_in = line2.n_agents * line2.max_obs_dim + sum(line2.action_dims) + 2
    spec = nn.MlpSpec((critic_in, 2))
    weights = np.zeros((critic_in, 2))
    weights[2 * line2.max_obs_dim, 0] = 1.0
    pick_a1 = nn.MlpParams(spec, [weights], [np.zeros(2)])

    rng = np.random.default_rng(0)
    obs = [rng.normal(size=(16, line2.max_obs_dim)) for _ in range(2)]
    w = np.tile([1.0, 0.0], (16, 1))
    joint_obs = np.hstack(obs)
    joint_action = rng.uniform(-1, 1, size=(16, 2))

    learner = CentralizedLearner(line2, tiny_cfg, seed=0)
    loss_before, _, _ = agents.actor_gradients(
        learner.actor, pick_a1, obs, w, joint_obs, joint_action, w
    )
    for arr in learner.actor.heads[1].arrays():
        arr += 17.0
    loss_after, _, _ = agents.actor_gradients(
        learner.actor, pick_a1, obs, w, joint_obs, joint_action, w
    )
    assert loss_after == loss_before


# --- policies ------------------------------------------------------------------------


def test_policy_depends_only_on_own_observation(line2, tiny_cfg):
    learner = CentralizedLearner(line2, tiny_cfg, seed=0)
    policy = learner.policy()
    rng = np.random.default_rng(0)
    obs = rng.normal(size=(6, 2, line2.max_obs_dim))
    w = np.tile([0.3, 0.7], (6, 1))
    base = policy(obs, w)
    mutated = obs.copy()
    mutated[:, 1, :] = rng.normal(size=(6, line2.max_obs_dim))
    after = policy(mutated, w)
    assert np.array_equal(base[0], after[0])
    assert not np.array_equal(base[1], after[1])


def test_scalarised_critic_min_rule():
    critic = constant_critic(6, [(3.0, 0.0), (5.0, 0.0)])
    estimate = agents.scalarised_critic_min(critic)(
        np.zeros(3), np.zeros(1), np.array([1.0, 0.0])
    )
    assert estimate == 3.0


# --- target drift ----------------------------------------------------------------------


def test_target_drift_never_increases_when_online_frozen(line2, tiny_cfg):
    learner = CentralizedLearner(line2, tiny_cfg, seed=5)
    critic = learner.critic
    # push targets away from online nets, then repeatedly soft-update
    for arr in critic.target_heads[0].arrays():
        arr += 1.0
    def drift():
        return max(
            np.max(np.abs(t - o))
            for t, o in zip(critic.target_heads[0].arrays(), critic.heads[0].arrays())
        )
    previous = drift()
    for _ in range(5):
        agents.soft_update_critic(critic, tiny_cfg.tau)
        current = drift()
        assert current <= previous
        previous = current


# --- training loop -----------------------------------------------------------------------


def test_train_zero_steps_returns_untrained_policy(line2, tiny_cfg):
    rows = []
    result = agents.train(
        line2, tiny_cfg, 0, seed=0,
        sinks=TrainSinks(metric=lambda s, e, n, v: rows.append((s, e, n, v))),
    )
    assert result.steps == 0 and result.episodes == 0
    assert rows == []  # no updates, no evaluations requested
    fresh = CentralizedLearner(line2, tiny_cfg, seed=0)
    for a, b in zip(result.learner.actor.trunk.arrays(), fresh.actor.trunk.arrays()):
        assert np.array_equal(a, b)


def test_train_is_deterministic_per_seed(line2, tiny_cfg):
    logs = []
    for _ in range(2):
        rows = []
        agents.train(
            line2, tiny_cfg, 600, seed=11,
            sinks=TrainSinks(metric=lambda s, e, n, v: rows.append((s, e, n, repr(v)))),
            eval_every_episodes=30,
        )
        logs.append(rows)
    assert logs[0] == logs[1]
    assert any(name == "eum" for _, _, name, _ in logs[0])
    assert any(name == "critic_loss" for _, _, name, _ in logs[0])


def test_train_budget_accounting(line2, tiny_cfg):
    # episodes always complete: overshoot is bounded by one horizon
    result = agents.train(line2, tiny_cfg, 101, seed=0)
    assert 101 <= result.steps < 101 + line2.horizon
    assert result.steps == result.episodes * line2.horizon


def test_train_conservatism_audit_holds_everywhere(line2, tiny_cfg):
    violations = []

    def audit(scal_y, candidates):
        bad = scal_y > candidates.min(axis=1)
        if np.any(bad):
            violations.append(int(bad.sum()))

    agents.train(line2, tiny_cfg, 400, seed=3, sinks=TrainSinks(target_audit=audit))
    assert violations == []


def test_td3_reduction_equals_ddpg_path(line2):
    kwargs = dict(
        trunk_widths=(16, 16), head_widths=(8,), critic_widths=(16, 16),
        batch_size=16, warmup_steps=24, buffer_capacity=2000,
        policy_freq=1, target_noise_sigma=0.0, target_noise_clip=0.0,
    )
    td3 = AlgoConfig(variant="moma_td3", **kwargs)
    ddpg = AlgoConfig(variant="moma_ddpg", **kwargs)
    reduced = CentralizedLearner(line2, td3, seed=5, n_critic_heads=1)
    agents.run_training_loop(line2, td3, 400, 5, reduced)
    reference = CentralizedLearner(line2, ddpg, seed=5)
    agents.run_training_loop(line2, ddpg, 400, 5, reference)
    pairs = zip(
        reduced.actor.trunk.arrays() + reduced.critic.heads[0].arrays()
        + reduced.critic.target_heads[0].arrays(),
        reference.actor.trunk.arrays() + reference.critic.heads[0].arrays()
        + reference.critic.target_heads[0].arrays(),
    )
    assert all(np.array_equal(a, b) for a, b in pairs)


def test_numerical_abort_reports_step(line2, tiny_cfg):
    class PoisonedLearner(CentralizedLearner):
        def update(self, batch, rng, do_policy, audit=None):
            raise agents.NumericalAbort("poisoned")

    learner = PoisonedLearner(line2, tiny_cfg, seed=0)
    with pytest.raises(agents.NumericalAbort, match="global step"):
        agents.run_training_loop(line2, tiny_cfg, 100, 0, learner)
