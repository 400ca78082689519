"""Train a small weight-conditioned team and watch the trade-off appear.

A single TD3-backed run produces one actor that covers the whole
preference range: conditioning on (1, 0) chases the goal at any energy
cost, conditioning on (0, 1) sits still, and intermediate weights
interpolate. A few thousand steps on the line task are enough to see the
conditioning take hold (expect a couple of minutes on one core).
"""

import numpy as np

from momarl import agents, envs, evaluation

spec = envs.EnvSpec("line_reach", 2, horizon=50)
cfg = agents.AlgoConfig(
    trunk_widths=(32, 32), head_widths=(16,), critic_widths=(32, 32)
)

untrained = agents.train(spec, cfg, total_steps=0, seed=7)
print("untrained expected utility:", round(evaluation.eum(untrained.policy, spec), 2))

rows = []
result = agents.train(
    spec, cfg, total_steps=20_000, seed=7,
    sinks=agents.TrainSinks(metric=lambda s, e, n, v: rows.append((s, n, v))),
    eval_every_episodes=100,
)
for step, name, value in rows:
    if name == "eum":
        print(f"  step {step:6d}  expected utility {value:8.2f}")

# the trained actor responds to the preference weight
obs = np.zeros((1, 2, spec.max_obs_dim))
for w0 in (1.0, 0.5, 0.0):
    w = np.array([[w0, 1.0 - w0]])
    actions = result.policy(obs, w)
    print(f"weight ({w0:.1f}, {1 - w0:.1f}) -> first agent action "
          f"{actions[0][0][0]:+.3f}")
