"""Coverage-set construction and multi-objective performance metrics.

Implements the evaluation protocol used throughout: deterministic rollouts
over an equally spaced preference grid (100 weights x 5 episodes for
fronts, 50 weights for expected utility), Pareto filtering, exact 2-d
hypervolume, cardinality, sparsity, Welch's unequal-variance t-test, and
the utility-bias probe that compares critic estimates against realized
discounted utility.

Episodic returns are undiscounted sums; the probe discounts because the
critic estimates a discounted quantity.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy import special

from . import envs
from .preferences import equally_spaced_weights, sample_simplex

DEFAULT_HV_REF = (-1000.0, -1000.0)

# Evaluation episode k always replays the same initial state, for every
# grid weight and every checkpoint: scores are comparable across runs, and
# a weight-blind policy earns exactly the same mean return at each weight.
_EVAL_SEED_BASE = 982_451_653


def evaluation_reset_seed(episode_index: int) -> int:
    return _EVAL_SEED_BASE + episode_index


# --- deterministic rollouts --------------------------------------------------
#
# A policy is a callable (padded_obs, weights) -> list of per-agent action
# batches, where padded_obs has shape (batch, n_agents, max_obs_dim) and
# weights (batch, d). Policies act deterministically; exploration noise
# never enters evaluation.

Policy = Callable[[np.ndarray, np.ndarray], list]


def deterministic_returns(
    policy: Policy,
    env_spec: envs.EnvSpec,
    weights: np.ndarray,
    reset_seeds: Sequence[int],
) -> np.ndarray:
    """Undiscounted vector returns of lockstep episodes, one per (weight, seed)."""
    weights = np.asarray(weights, dtype=np.float64)
    n_episodes = weights.shape[0]
    if len(reset_seeds) != n_episodes:
        raise ValueError("need one reset seed per episode")
    n = env_spec.n_agents
    max_obs = env_spec.max_obs_dim
    obs_dims = env_spec.obs_dims

    # observation lengths are fixed per agent, so the zero padding written
    # once at allocation time stays valid for the whole rollout
    states = []
    padded = np.zeros((n_episodes, n, max_obs))
    for e, seed in enumerate(reset_seeds):
        state, obs = envs.reset(env_spec, int(seed))
        states.append(state)
        for i in range(n):
            padded[e, i, : obs_dims[i]] = obs[i]

    returns = np.zeros((n_episodes, env_spec.d_objectives))
    for _ in range(env_spec.horizon):
        actions = policy(padded, weights)
        for e in range(n_episodes):
            joint = [actions[i][e] for i in range(n)]
            states[e], obs, reward, _ = envs.step(env_spec, states[e], joint)
            returns[e] += reward
            row = padded[e]
            for i in range(n):
                row[i, : obs_dims[i]] = obs[i]
    return returns


def _mean_returns_over_grid(
    policy: Policy, env_spec: envs.EnvSpec, grid: np.ndarray, episodes_per_weight: int
) -> np.ndarray:
    """Mean vector return per grid weight over fixed-seed deterministic episodes."""
    n_weights = grid.shape[0]
    weights = np.repeat(grid, episodes_per_weight, axis=0)
    seeds = [
        evaluation_reset_seed(ei)
        for _ in range(n_weights)
        for ei in range(episodes_per_weight)
    ]
    returns = deterministic_returns(policy, env_spec, weights, seeds)
    return returns.reshape(n_weights, episodes_per_weight, -1).mean(axis=1)


def evaluate_coverage(
    policy: Policy,
    env_spec: envs.EnvSpec,
    n_weights: int = 100,
    episodes_per_weight: int = 5,
) -> tuple[np.ndarray, np.ndarray]:
    """Approximate coverage set: mean returns over the weight grid, then filter.

    Returns (raw per-weight mean vectors, non-dominated front).
    """
    raw = _mean_returns_over_grid(
        policy, env_spec, equally_spaced_weights(n_weights), episodes_per_weight
    )
    return raw, pareto_filter(raw)


def eum(
    policy: Policy, env_spec: envs.EnvSpec, n: int = 50, episodes_per_weight: int = 5
) -> float:
    """Expected utility metric: mean of w . V(w) over n equally spaced weights."""
    grid = equally_spaced_weights(n)
    values = _mean_returns_over_grid(policy, env_spec, grid, episodes_per_weight)
    return float((grid * values).sum(axis=1).mean())


def policy_set_eum(value_vectors: np.ndarray, n: int = 50) -> float:
    """Expected utility of a set of fixed policies (outer-loop style).

    For each grid weight the best of the candidate value vectors under that
    weight is selected, mirroring how an outer-loop method picks its policy
    per preference.
    """
    values = np.atleast_2d(np.asarray(value_vectors, dtype=np.float64))
    if values.shape[0] == 0:
        raise ValueError("need at least one value vector")
    grid = equally_spaced_weights(n)
    utilities = grid @ values.T  # (n, k)
    return float(utilities.max(axis=1).mean())


# --- Pareto front machinery ---------------------------------------------------


def pareto_filter(points: np.ndarray) -> np.ndarray:
    """Non-dominated subset under weak dominance, duplicates collapsed.

    A point is dropped when some distinct point is >= componentwise. Output
    rows are unique and sorted lexicographically (deterministic order).
    """
    points = np.asarray(points, dtype=np.float64)
    if points.size == 0:
        return points.reshape(0, points.shape[-1] if points.ndim == 2 else 0)
    unique = np.unique(points, axis=0)
    # ge[i, j]: point j weakly dominates point i (rows are unique, so
    # componentwise >= with i != j implies domination).
    ge = np.all(unique[None, :, :] >= unique[:, None, :], axis=-1)
    np.fill_diagonal(ge, False)
    return unique[~ge.any(axis=1)]


def cardinality(front: np.ndarray) -> int:
    """Number of distinct points after duplicate collapse."""
    front = np.asarray(front, dtype=np.float64)
    if front.size == 0:
        return 0
    return int(np.unique(front, axis=0).shape[0])


def hypervolume_2d(front: np.ndarray, ref: Sequence[float] = DEFAULT_HV_REF) -> float:
    """Exact area weakly dominated by a 2-d front and bounded below by ref.

    Sweep: sort by objective 0 descending and accumulate the strip each
    point adds above the best objective-1 value seen so far. Points that do
    not weakly dominate ref are excluded with a warning; an empty effective
    front has hypervolume 0.
    """
    front = np.atleast_2d(np.asarray(front, dtype=np.float64))
    if front.size == 0:
        return 0.0
    if front.shape[1] != 2:
        raise ValueError("hypervolume_2d expects two objectives")
    ref = np.asarray(ref, dtype=np.float64)
    valid = np.all(front >= ref, axis=1)
    if not valid.all():
        warnings.warn(
            f"excluding {int((~valid).sum())} front point(s) below the "
            f"hypervolume reference {tuple(ref)}",
            stacklevel=2,
        )
    pts = front[valid]
    if pts.shape[0] == 0:
        return 0.0
    order = np.lexsort((-pts[:, 1], -pts[:, 0]))  # objective 0 desc, ties 1 desc
    pts = pts[order]
    best_y = ref[1]
    area = 0.0
    for x, y in pts:
        if y > best_y:
            area += (x - ref[0]) * (y - best_y)
            best_y = y
    return float(area)


def sparsity(front: np.ndarray) -> float:
    """Mean squared gap between adjacent front values per objective.

    S = (1/(n-1)) * sum_d sum_i (sorted_d[i] - sorted_d[i-1])^2 over the
    deduplicated front; defined as 0 when the front has at most one point.
    """
    front = np.atleast_2d(np.asarray(front, dtype=np.float64))
    if front.size == 0:
        return 0.0
    pts = np.unique(front, axis=0)
    n = pts.shape[0]
    if n <= 1:
        return 0.0
    total = 0.0
    for d in range(pts.shape[1]):
        gaps = np.diff(np.sort(pts[:, d]))
        total += float((gaps * gaps).sum())
    return total / (n - 1)


@dataclass
class EvalSummary:
    """One evaluation point: the four coverage metrics plus the raw data."""

    eum: float
    hypervolume: float
    cardinality: int
    sparsity: float
    raw_points: np.ndarray
    front: np.ndarray


def evaluation_summary(
    policy: Policy, env_spec: envs.EnvSpec, hv_ref: Sequence[float] = DEFAULT_HV_REF
) -> EvalSummary:
    """Full protocol: 100x5 coverage front plus 50-weight expected utility."""
    raw, front = evaluate_coverage(policy, env_spec)
    return EvalSummary(
        eum=eum(policy, env_spec),
        hypervolume=hypervolume_2d(front, hv_ref),
        cardinality=cardinality(front),
        sparsity=sparsity(front),
        raw_points=raw,
        front=front,
    )


# --- Welch's t-test and the Student-t CDF -------------------------------------


class WelchResult(NamedTuple):
    t: float
    dof: float
    p_two_sided: float


def student_t_cdf(t: float, dof: float) -> float:
    """P(T <= t) for Student's t, via the regularized incomplete beta function."""
    if dof <= 0:
        raise ValueError("degrees of freedom must be positive")
    if not np.isfinite(t):
        return 0.0 if t < 0 else 1.0
    x = dof / (dof + t * t)
    tail = 0.5 * float(special.betainc(dof / 2.0, 0.5, x))
    return tail if t < 0 else 1.0 - tail


def welch_t_test(a: Sequence[float], b: Sequence[float]) -> WelchResult:
    """Welch's unequal-variance two-sample t-test with Satterthwaite dof.

    Degenerate input (zero variance on both sides) yields p = 1 when the
    means agree and p = 0 otherwise, by convention.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise ValueError("each sample needs at least two observations")
    na, nb = a.size, b.size
    ma, mb = float(a.mean()), float(b.mean())
    va, vb = float(a.var(ddof=1)), float(b.var(ddof=1))
    se2 = va / na + vb / nb
    if se2 == 0.0:
        dof = float(na + nb - 2)
        if ma == mb:
            return WelchResult(0.0, dof, 1.0)
        return WelchResult(float(np.sign(ma - mb)) * np.inf, dof, 0.0)
    t = (ma - mb) / np.sqrt(se2)
    dof = se2 * se2 / ((va / na) ** 2 / (na - 1) + (vb / nb) ** 2 / (nb - 1))
    p = float(special.betainc(dof / 2.0, 0.5, dof / (dof + t * t)))
    return WelchResult(float(t), float(dof), p)


# --- utility-bias probe --------------------------------------------------------


@dataclass
class UtilityErrorSample:
    """One probe draw: critic estimate vs realized discounted utility-to-go."""

    weight: np.ndarray
    timestep: int
    estimate: float
    realized: float
    error: float


@dataclass
class ProbeSummary:
    mean: float
    std: float
    p_one_sided: float
    direction: str
    n_samples: int


# A scalarised critic maps (joint padded obs, joint action, weight) -> the
# minimum over critic heads of w . Q(o, a, w).
ScalarisedCritic = Callable[[np.ndarray, np.ndarray, np.ndarray], float]


def utility_bias_probe(
    policy: Policy,
    scalarised_critic: ScalarisedCritic,
    env_spec: envs.EnvSpec,
    n_samples: int,
    gamma: float,
    rng: np.random.Generator,
    direction: str = "negative",
) -> tuple[list[UtilityErrorSample], ProbeSummary]:
    """Sample (weight, timestep) pairs and measure e = U_hat - U.

    The deterministic policy is rolled to the probed timestep, the critic's
    scalarised estimate is taken there, and the episode is then continued
    with the same policy while realized utility is accumulated with
    discount ``gamma``. ``direction`` names the hypothesized sign of the
    mean error ("negative" for min-of-two critics, "positive" for a single
    critic); the one-sided t-test is run against a zero-mean null in that
    direction.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if direction not in ("negative", "positive"):
        raise ValueError("direction must be 'negative' or 'positive'")
    n = env_spec.n_agents
    max_obs = env_spec.max_obs_dim

    samples: list[UtilityErrorSample] = []
    for _ in range(n_samples):
        w = sample_simplex(rng, env_spec.d_objectives)
        probe_t = int(rng.integers(0, env_spec.horizon))
        reset_seed = int(rng.integers(0, 2 ** 31 - 1))

        state, obs = envs.reset(env_spec, reset_seed)
        stacked = np.zeros((1, n, max_obs))
        for i in range(n):
            stacked[0, i] = envs.pad_observation(obs[i], max_obs)
        wrow = w[None, :]

        estimate = None
        realized = 0.0
        disc = 1.0
        for t in range(env_spec.horizon):
            actions = policy(stacked, wrow)
            joint = [actions[i][0] for i in range(n)]
            if t == probe_t:
                estimate = scalarised_critic(
                    stacked[0].reshape(-1), np.concatenate(joint), w
                )
            state, obs, reward, _ = envs.step(env_spec, state, joint)
            if t >= probe_t:
                realized += disc * float(w @ reward)
                disc *= gamma
            for i in range(n):
                stacked[0, i] = envs.pad_observation(obs[i], max_obs)
        assert estimate is not None
        samples.append(
            UtilityErrorSample(w, probe_t, float(estimate), realized, float(estimate) - realized)
        )

    errors = np.array([s.error for s in samples])
    mean = float(errors.mean())
    std = float(errors.std(ddof=1)) if errors.size > 1 else 0.0
    if std == 0.0:
        p = 1.0 if mean == 0.0 else (0.0 if (mean < 0) == (direction == "negative") else 1.0)
    else:
        t_stat = mean / (std / np.sqrt(errors.size))
        cdf = student_t_cdf(t_stat, errors.size - 1)
        p = cdf if direction == "negative" else 1.0 - cdf
    return samples, ProbeSummary(mean, std, float(p), direction, int(errors.size))


# --- front files ---------------------------------------------------------------

FRONT_OBJECTIVE_NAMES = ("task_progress", "neg_energy_cost")


def write_front(path, points: np.ndarray, names: Sequence[str] = FRONT_OBJECTIVE_NAMES) -> None:
    """Text front file: one header line naming objectives, then tab-separated rows."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    lines = ["\t".join(names)]
    for row in points:
        lines.append("\t".join(repr(float(v)) for v in row))
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def read_front(path) -> np.ndarray:
    with open(path, "r", encoding="ascii") as fh:
        lines = [ln for ln in fh.read().splitlines() if ln]
    rows = [[float(v) for v in ln.split("\t")] for ln in lines[1:]]
    if not rows:
        return np.empty((0, len(lines[0].split("\t"))))
    return np.array(rows)
