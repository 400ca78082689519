"""Conditioned training vs the two baselines under one budget.

The same number of environment steps goes to (a) one weight-conditioned
centralized run, (b) independent per-agent learners, and (c) an outer loop
that splits the budget over five fixed scalarisations. Scores are compared
with Welch's unequal-variance t-test across seeds. Budgets here are small
to keep the demo quick; expect a few minutes.
"""

import numpy as np

from momarl import agents, baselines, envs, evaluation

spec = envs.EnvSpec("coop_push", 2, horizon=50)
cfg = agents.AlgoConfig(trunk_widths=(32, 32), head_widths=(16,), critic_widths=(32, 32))
budget = 20_000
seeds = (0, 1, 2)

central, independent, outer = [], [], []
for seed in seeds:
    result = agents.train(spec, cfg, budget, seed)
    central.append(evaluation.eum(result.policy, spec))
    result = baselines.train_ind_mo_td3(spec, cfg, budget, seed)
    independent.append(evaluation.eum(result.policy, spec))
    plan = baselines.default_outer_plan(cfg, budget, grid_size=5)
    outer.append(baselines.train_outer_loop(spec, plan, seed).summary.eum)
    print(f"seed {seed}: central {central[-1]:7.2f}  independent "
          f"{independent[-1]:7.2f}  outer {outer[-1]:7.2f}")


def report(name, a, b):
    t, dof, p = evaluation.welch_t_test(a, b)
    print(f"central vs {name}: {np.mean(a):7.2f} vs {np.mean(b):7.2f}  "
          f"t {t:6.2f}  dof {dof:4.1f}  p {p:.4f}")


print()
report("independent", central, independent)
report("outer loop ", central, outer)
