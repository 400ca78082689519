"""The two desk environments and the brute-force planning oracle.

Both tasks pay a two-component reward shared by the whole team: objective 0
is task progress, objective 1 is negated control energy. Moving faster
always costs energy, so the achievable returns form a genuine trade-off
curve, which the open-loop enumeration oracle makes visible.
"""

import numpy as np

from momarl import envs

line = envs.EnvSpec("line_reach", 3, horizon=10)
state, obs = envs.reset(line, seed=0)
print("line_reach n=3 observation lengths:", [o.size for o in obs])
print("starting positions:", np.round(state.positions, 3))

# push everyone toward the goal at x = 1 for a few steps
for _ in range(5):
    state, obs, reward, done = envs.step(line, state, [np.ones(1)] * 3)
print("after 5 full-throttle steps: reward", np.round(reward, 3))

push = envs.EnvSpec("coop_push", 2, horizon=10)
state, _ = envs.reset(push, seed=0)
state, _, reward, _ = envs.step(push, state, [np.array([1.0, 0.0])] * 2)
print("coop_push first step: body x-velocity reward", reward[0], "energy", reward[1])

# Enumerate every 3-level open-loop plan for a short horizon and keep the
# non-dominated return vectors: the exact desk-scale Pareto front.
spec = envs.EnvSpec("line_reach", 2, horizon=5)
front = envs.brute_force_front(spec, horizon_small=5, actions_per_axis=3)
print(f"\noracle front over 3^10 = 59049 plans ({front.shape[0]} points):")
for progress, energy in front:
    print(f"  progress {progress:8.3f}   energy {energy:8.3f}")
