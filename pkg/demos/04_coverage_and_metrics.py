"""The coverage-set protocol and the four front metrics.

Evaluation sweeps 100 equally spaced preference weights, runs 5
deterministic episodes per weight from fixed seeds, averages the vector
returns, and keeps the non-dominated means. Expected utility uses its own
50-weight grid. Hypervolume is measured against the reference point
(-1000, -1000).
"""

import numpy as np

from momarl import agents, envs, evaluation

spec = envs.EnvSpec("line_reach", 2, horizon=50)
cfg = agents.AlgoConfig(trunk_widths=(32, 32), head_widths=(16,), critic_widths=(32, 32))
result = agents.train(spec, cfg, total_steps=15_000, seed=3)

raw, front = evaluation.evaluate_coverage(result.policy, spec)
print(f"coverage: {raw.shape[0]} per-weight means, {front.shape[0]} non-dominated")
print("front points (progress, energy):")
for row in front:
    print(f"  {row[0]:9.3f} {row[1]:9.3f}")

summary = evaluation.evaluation_summary(result.policy, spec)
print("\nexpected utility:", round(summary.eum, 3))
print("hypervolume:     ", round(summary.hypervolume, 1))
print("cardinality:     ", summary.cardinality)
print("sparsity:        ", round(summary.sparsity, 4))

evaluation.write_front("demo_front.tsv", front)
print("\nfront written to demo_front.tsv:")
with open("demo_front.tsv") as fh:
    print(fh.read().rstrip())
