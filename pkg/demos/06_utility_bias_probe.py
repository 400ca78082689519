"""Utility over- and under-estimation of the two critic designs.

After training, we repeatedly pick a random preference weight and episode
timestep, roll the deterministic policy there, read the critic's
scalarised estimate, and compare it with the discounted utility actually
collected from that point on. Twin critics taking the minimum tend to sit
below the truth (conservative); a single critic tends to sit above it
(optimistic). Expect a few minutes of training time.
"""

import numpy as np

from momarl import agents, envs, evaluation

spec = envs.EnvSpec("line_reach", 2, horizon=50)
shapes = dict(trunk_widths=(32, 32), head_widths=(16,), critic_widths=(32, 32))
budget = 30_000

for label, cfg in (
    ("twin critics (TD3 backbone)  ", agents.AlgoConfig(**shapes)),
    ("single critic (DDPG backbone)", agents.AlgoConfig(
        variant="moma_ddpg", policy_freq=1, target_noise_sigma=0.0, **shapes)),
):
    result = agents.train(spec, cfg, budget, seed=0)
    direction = "negative" if cfg.variant == "moma_td3" else "positive"
    samples, summary = evaluation.utility_bias_probe(
        result.policy, result.learner.scalarised_critic(), spec,
        n_samples=300, gamma=cfg.gamma, rng=np.random.default_rng(1),
        direction=direction,
    )
    print(f"{label}: mean error {summary.mean:8.3f}  std {summary.std:7.3f}  "
          f"one-sided p {summary.p_one_sided:.4f}")
print("negative mean = conservative estimates, positive = optimistic")
