"""Run orchestration: training runs, comparisons, bias probes, oracles, plots.

Layout of a run directory:

    <out>/
      config.txt                resolved configuration (canonical form)
      seed_<s>/
        log.csv                 append-only rows: step,episode,seed,metric,value
        fronts/front_<step>.tsv coverage front at each evaluation point
        front_final.tsv         final coverage front
        checkpoints/
          manifest.txt          variant, env, algorithm, step count, network list
          <name>.mlp            one checkpoint file per network

Every file is a pure function of (config, seed): reruns are byte-identical.
"""

from __future__ import annotations

import shutil
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import agents, baselines, envs, evaluation, nn
from .config import RunConfig, format_run_config, load_run_config, parse_key_value_text
from .evaluation import DEFAULT_HV_REF

EVAL_METRICS = ("eum", "hypervolume", "cardinality", "sparsity")

LOG_HEADER = "step,episode,seed,metric,value"


class RunLogWriter:
    """Append-only CSV log; float values use repr for lossless round-trips."""

    def __init__(self, path, seed: int):
        self.path = Path(path)
        self.seed = seed
        self._fh = open(self.path, "w", encoding="ascii")
        self._fh.write(LOG_HEADER + "\n")
        self._last_step = 0

    def write(self, step: int, episode: int, metric: str, value: float) -> None:
        if step < self._last_step:
            raise ValueError("log steps must be non-decreasing within a seed")
        self._last_step = step
        self._fh.write(f"{step},{episode},{self.seed},{metric},{value!r}\n")

    def close(self) -> None:
        self._fh.close()


def read_log(path) -> list[tuple[int, int, int, str, float]]:
    rows = []
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().strip()
        if header != LOG_HEADER:
            raise ValueError(f"{path}: unexpected log header {header!r}")
        for line in fh:
            step, episode, seed, metric, value = line.rstrip("\n").split(",")
            rows.append((int(step), int(episode), int(seed), metric, float(value)))
    return rows


def final_metric_values(run_dir, metric: str) -> dict[int, float]:
    """Last logged value of a metric for every seed directory of a run."""
    run_dir = Path(run_dir)
    seed_dirs = sorted(run_dir.glob("seed_*"), key=lambda p: int(p.name.split("_")[1]))
    if not seed_dirs:
        raise ValueError(f"{run_dir} contains no seed_* directories")
    values: dict[int, float] = {}
    available: set[str] = set()
    for seed_dir in seed_dirs:
        rows = read_log(seed_dir / "log.csv")
        available.update(r[3] for r in rows)
        matching = [r for r in rows if r[3] == metric]
        if matching:
            seed = int(seed_dir.name.split("_")[1])
            values[seed] = matching[-1][4]
    if not values:
        raise ValueError(
            f"metric {metric!r} not found in {run_dir}; available metrics: "
            f"{sorted(available)}"
        )
    return values


# --- checkpoints ------------------------------------------------------------------


def _write_manifest(path, run_cfg: RunConfig, seed: int, steps: int, episodes: int,
                    networks: list[str], extra: list[str] | None = None) -> None:
    lines = [
        "format momarl-run-v1",
        f"variant {run_cfg.variant}",
        f"seed {seed}",
        f"steps {steps}",
        f"episodes {episodes}",
        f"env.name {run_cfg.env.name}",
        f"env.n_agents {run_cfg.env.n_agents}",
        f"env.horizon {run_cfg.env.horizon}",
        f"env.dt {run_cfg.env.dt!r}",
        f"algorithm.variant {run_cfg.algo.variant}",
        f"algorithm.gamma {run_cfg.algo.gamma!r}",
        "networks " + ",".join(networks),
    ]
    if extra:
        lines += extra
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def _save_networks(ckpt_dir: Path, files: list[tuple[str, nn.MlpParams]]) -> list[str]:
    names = []
    for name, params in files:
        nn.save_params(ckpt_dir / f"{name}.mlp", params)
        names.append(name)
    return names


@dataclass
class LoadedRun:
    variant: str
    env_spec: envs.EnvSpec
    gamma: float
    policy: object
    critic: agents.CriticNet | None


def load_checkpoint(seed_dir) -> LoadedRun:
    """Rebuild the policy (and critic, for the conditioned variants) of one seed."""
    seed_dir = Path(seed_dir)
    manifest_path = seed_dir / "checkpoints" / "manifest.txt"
    if not manifest_path.exists():
        raise FileNotFoundError(f"no checkpoint manifest at {manifest_path}")
    with open(manifest_path, "r", encoding="ascii") as fh:
        fields = parse_key_value_text(fh.read())
    variant = fields["variant"]
    env_spec = envs.EnvSpec(
        name=fields["env.name"],
        n_agents=int(fields["env.n_agents"]),
        horizon=int(fields["env.horizon"]),
        dt=float(fields["env.dt"]),
    )
    gamma = float(fields["algorithm.gamma"])
    ckpt = seed_dir / "checkpoints"
    names = fields["networks"].split(",")

    def load(name: str) -> nn.MlpParams:
        return nn.load_params(ckpt / f"{name}.mlp")

    if variant in ("moma_td3", "moma_ddpg"):
        trunk = load("actor_trunk")
        heads = [load(n) for n in names if n.startswith("actor_head_")]
        critic_heads = [load(n) for n in names if n.startswith("critic_")]
        policy = agents.MultiHeadPolicy(
            trunk, heads, env_spec.max_obs_dim, env_spec.d_objectives
        )
        critic = agents.CriticNet(
            critic_heads, [nn.clone_params(h) for h in critic_heads]
        )
        return LoadedRun(variant, env_spec, gamma, policy, critic)
    if variant == "ind_mo_td3":
        parts = []
        for i in range(env_spec.n_agents):
            trunk = load(f"agent{i}_actor_trunk")
            head = load(f"agent{i}_actor_head_0")
            parts.append(
                agents.MultiHeadPolicy(
                    trunk, [head], env_spec.max_obs_dim, env_spec.d_objectives
                )
            )
        return LoadedRun(variant, env_spec, gamma, agents.PerAgentPolicy(parts), None)
    raise ValueError(f"checkpoints of variant {variant!r} cannot be loaded into a policy")


# --- training command ---------------------------------------------------------------


def _run_seed(run_cfg: RunConfig, seed: int, seed_dir: Path, hv_ref) -> None:
    seed_dir.mkdir(parents=True)
    fronts_dir = seed_dir / "fronts"
    fronts_dir.mkdir()
    log = RunLogWriter(seed_dir / "log.csv", seed)

    def eval_sink(step: int, episode: int, summary: evaluation.EvalSummary) -> None:
        evaluation.write_front(fronts_dir / f"front_{step}.tsv", summary.front)

    sinks = agents.TrainSinks(metric=log.write, eval_result=eval_sink)
    try:
        if run_cfg.variant in ("moma_td3", "moma_ddpg"):
            result = agents.train(
                run_cfg.env, run_cfg.algo, run_cfg.total_steps, seed, sinks,
                eval_every_episodes=run_cfg.eval_every_episodes, hv_ref=hv_ref,
            )
            learner = result.learner
        elif run_cfg.variant == "ind_mo_td3":
            result = baselines.train_ind_mo_td3(
                run_cfg.env, run_cfg.algo, run_cfg.total_steps, seed, sinks,
                eval_every_episodes=run_cfg.eval_every_episodes, hv_ref=hv_ref,
            )
            learner = result.learner
        else:
            plan = baselines.default_outer_plan(
                run_cfg.algo, run_cfg.total_steps, run_cfg.outer_grid_size
            )
            result = baselines.train_outer_loop(run_cfg.env, plan, seed, sinks, hv_ref=hv_ref)
            learner = None
    finally:
        log.close()

    ckpt_dir = seed_dir / "checkpoints"
    ckpt_dir.mkdir()
    if learner is not None:
        names = _save_networks(ckpt_dir, learner.network_files())
        _write_manifest(
            ckpt_dir / "manifest.txt", run_cfg, seed, result.steps, result.episodes, names
        )
        summary = evaluation.evaluation_summary(result.policy, run_cfg.env, hv_ref)
        evaluation.write_front(seed_dir / "front_final.tsv", summary.front)
    else:
        names = []
        extra = []
        for k, sub in enumerate(result.learners):
            sub_dir = ckpt_dir / f"weight_{k}"
            sub_dir.mkdir()
            names += [
                f"weight_{k}/{name}"
                for name in _save_networks(sub_dir, sub.network_files())
            ]
            extra.append(
                f"outer.weight_{k} "
                + ",".join(repr(float(v)) for v in sub.fixed_weight)
            )
        _write_manifest(
            ckpt_dir / "manifest.txt", run_cfg, seed, result.steps, result.episodes,
            names, extra,
        )
        evaluation.write_front(seed_dir / "front_final.tsv", result.front)


def cmd_train(config_path, seeds=None, out=None, hv_ref=None) -> Path:
    """Run one training job per seed; returns the run directory."""
    run_cfg = load_run_config(config_path)
    if seeds is not None:
        run_cfg = RunConfig(
            env=run_cfg.env, variant=run_cfg.variant, algo=run_cfg.algo,
            total_steps=run_cfg.total_steps, seeds=tuple(seeds), out=run_cfg.out,
            eval_every_episodes=run_cfg.eval_every_episodes,
            outer_grid_size=run_cfg.outer_grid_size,
        )
    if out is not None:
        run_cfg = RunConfig(
            env=run_cfg.env, variant=run_cfg.variant, algo=run_cfg.algo,
            total_steps=run_cfg.total_steps, seeds=run_cfg.seeds, out=str(out),
            eval_every_episodes=run_cfg.eval_every_episodes,
            outer_grid_size=run_cfg.outer_grid_size,
        )
    ref = tuple(hv_ref) if hv_ref is not None else DEFAULT_HV_REF

    run_dir = Path(run_cfg.out)
    run_dir.mkdir(parents=True, exist_ok=True)
    with open(run_dir / "config.txt", "w", encoding="ascii") as fh:
        fh.write(format_run_config(run_cfg))
    for seed in run_cfg.seeds:
        seed_dir = run_dir / f"seed_{seed}"
        if seed_dir.exists():
            shutil.rmtree(seed_dir)
        _run_seed(run_cfg, seed, seed_dir, ref)
    return run_dir


# --- comparison and reports -----------------------------------------------------------


def cmd_compare(run_a, run_b, metric: str | None = None) -> str:
    """Welch-test final per-seed scores of two runs; returns the report text."""
    metrics = [metric] if metric else list(EVAL_METRICS)
    name_a = Path(run_a).name or str(run_a)
    name_b = Path(run_b).name or str(run_b)
    lines = [
        f"comparison {name_a} vs {name_b}",
        f"{'metric':<12} {'A mean (std)':>24} {'B mean (std)':>24} "
        f"{'t':>10} {'dof':>8} {'p':>12}",
    ]
    for m in metrics:
        a = np.array(list(final_metric_values(run_a, m).values()))
        b = np.array(list(final_metric_values(run_b, m).values()))
        if a.size < 2 or b.size < 2:
            raise ValueError("cmd_compare needs at least two seeds per run")
        result = evaluation.welch_t_test(a, b)
        lines.append(
            f"{m:<12} {a.mean():>14.4f} ({a.std(ddof=1):.4f}) "
            f"{b.mean():>14.4f} ({b.std(ddof=1):.4f}) "
            f"{result.t:>10.4f} {result.dof:>8.3f} {result.p_two_sided:>12.6g}"
        )
    return "\n".join(lines)


def cmd_probe_bias(run_dir, n_samples: int, seed: int = 0) -> str:
    """Utility-bias probe on a trained seed directory; writes and returns the report.

    ``run_dir`` may be a run directory (the first seed is probed) or a
    single seed directory.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    run_dir = Path(run_dir)
    seed_dir = run_dir
    if not (run_dir / "checkpoints").exists():
        candidates = sorted(run_dir.glob("seed_*"), key=lambda p: int(p.name.split("_")[1]))
        if not candidates:
            raise FileNotFoundError(f"{run_dir} holds neither checkpoints nor seed_* dirs")
        seed_dir = candidates[0]
    loaded = load_checkpoint(seed_dir)
    if loaded.critic is None:
        raise ValueError(
            f"variant {loaded.variant!r} has no centralized critic checkpoint to probe"
        )
    direction = "negative" if loaded.variant == "moma_td3" else "positive"
    rng = np.random.default_rng(seed)
    samples, summary = evaluation.utility_bias_probe(
        loaded.policy,
        agents.scalarised_critic_min(loaded.critic),
        loaded.env_spec,
        n_samples,
        loaded.gamma,
        rng,
        direction=direction,
    )

    table_path = seed_dir / "probe_bias_samples.tsv"
    with open(table_path, "w", encoding="ascii") as fh:
        fh.write("weight_0\tweight_1\ttimestep\testimate\trealized\terror\n")
        for s in samples:
            fh.write(
                f"{s.weight[0]!r}\t{s.weight[1]!r}\t{s.timestep}\t"
                f"{s.estimate!r}\t{s.realized!r}\t{s.error!r}\n"
            )
    report = "\n".join(
        [
            f"configuration {loaded.variant} {loaded.env_spec.name} n={loaded.env_spec.n_agents}",
            f"n_samples {summary.n_samples}",
            f"mean {summary.mean!r}",
            f"std_dev {summary.std!r}",
            f"direction {summary.direction}",
            f"p_one_sided {summary.p_one_sided!r}",
        ]
    )
    with open(seed_dir / "probe_bias.txt", "w", encoding="ascii") as fh:
        fh.write(report + "\n")
    return report


def cmd_oracle(env_spec: envs.EnvSpec, horizon_small: int, actions_per_axis: int,
               out_path) -> Path:
    """Write the brute-force front of small open-loop plans to a front file."""
    front = envs.brute_force_front(env_spec, horizon_small, actions_per_axis)
    out_path = Path(out_path)
    if out_path.parent != Path(""):
        out_path.parent.mkdir(parents=True, exist_ok=True)
    evaluation.write_front(out_path, front)
    return out_path


# --- plotting ---------------------------------------------------------------------------


def _series_across_seeds(run_dir, metric: str) -> list[tuple[int, float, float]]:
    """Per-step mean and std of a metric across seed logs, sorted by step."""
    run_dir = Path(run_dir)
    seed_dirs = sorted(run_dir.glob("seed_*"), key=lambda p: int(p.name.split("_")[1]))
    if not seed_dirs:
        raise ValueError(f"{run_dir} contains no seed_* directories")
    by_step: dict[int, list[float]] = {}
    found = False
    for seed_dir in seed_dirs:
        for step, _, _, name, value in read_log(seed_dir / "log.csv"):
            if name == metric:
                by_step.setdefault(step, []).append(value)
                found = True
    if not found:
        raise ValueError(f"metric {metric!r} not present in {run_dir}")
    series = []
    for step in sorted(by_step):
        vals = np.array(by_step[step])
        std = float(vals.std(ddof=1)) if vals.size > 1 else 0.0
        series.append((step, float(vals.mean()), std))
    return series


def _rolling_mean(values: list[float], window: int) -> list[float]:
    """Centered rolling mean; shorter windows at the edges."""
    out = []
    half = window // 2
    for i in range(len(values)):
        lo = max(0, i - half)
        hi = min(len(values), i + half + 1)
        out.append(float(np.mean(values[lo:hi])))
    return out


_SVG_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _svg_chart(series_by_run: dict[str, list[tuple[int, float, float]]], metric: str) -> str:
    width, height, margin = 800, 480, 60
    xs = [s for series in series_by_run.values() for s, _, _ in series]
    los = [m - sd for series in series_by_run.values() for _, m, sd in series]
    his = [m + sd for series in series_by_run.values() for _, m, sd in series]
    x_min, x_max = min(xs), max(xs)
    y_min, y_max = min(los), max(his)
    if x_max == x_min:
        x_max = x_min + 1
    if y_max == y_min:
        y_max = y_min + 1.0

    def sx(x):
        return margin + (x - x_min) / (x_max - x_min) * (width - 2 * margin)

    def sy(y):
        return height - margin - (y - y_min) / (y_max - y_min) * (height - 2 * margin)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
        f'y2="{height - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" y2="{height - margin}" '
        f'stroke="black"/>',
        f'<text x="{width / 2:.1f}" y="{height - 16}" text-anchor="middle" '
        f'font-size="14">environment steps</text>',
        f'<text x="18" y="{height / 2:.1f}" text-anchor="middle" font-size="14" '
        f'transform="rotate(-90 18 {height / 2:.1f})">{metric}</text>',
        f'<text x="{margin}" y="{height - margin + 18}" font-size="11" '
        f'text-anchor="middle">{x_min}</text>',
        f'<text x="{width - margin}" y="{height - margin + 18}" font-size="11" '
        f'text-anchor="middle">{x_max}</text>',
        f'<text x="{margin - 6}" y="{sy(y_min):.1f}" font-size="11" '
        f'text-anchor="end">{y_min:.4g}</text>',
        f'<text x="{margin - 6}" y="{sy(y_max):.1f}" font-size="11" '
        f'text-anchor="end">{y_max:.4g}</text>',
    ]
    for idx, (name, series) in enumerate(series_by_run.items()):
        color = _SVG_COLORS[idx % len(_SVG_COLORS)]
        upper = [(sx(s), sy(m + sd)) for s, m, sd in series]
        lower = [(sx(s), sy(m - sd)) for s, m, sd in reversed(series)]
        band = " ".join(f"{x:.2f},{y:.2f}" for x, y in upper + lower)
        parts.append(f'<polygon points="{band}" fill="{color}" opacity="0.15"/>')
        line = " ".join(f"{sx(s):.2f},{sy(m):.2f}" for s, m, _ in series)
        parts.append(
            f'<polyline points="{line}" fill="none" stroke="{color}" stroke-width="1.5"/>'
        )
        parts.append(
            f'<text x="{width - margin - 4}" y="{margin + 16 * (idx + 1)}" '
            f'text-anchor="end" font-size="12" fill="{color}">{name}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def cmd_plot(run_dirs, metric: str, out_dir, smooth: int | None = None) -> list[Path]:
    """Write per-run CSVs (raw) and one SVG chart (optionally smoothed)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    series_by_run: dict[str, list[tuple[int, float, float]]] = {}
    for run_dir in run_dirs:
        name = Path(run_dir).name or str(run_dir)
        series = _series_across_seeds(run_dir, metric)
        series_by_run[name] = series
        csv_path = out_dir / f"{metric}_{name}.csv"
        with open(csv_path, "w", encoding="ascii") as fh:
            fh.write("step,mean,std\n")
            for step, mean, std in series:
                fh.write(f"{step},{mean!r},{std!r}\n")
        written.append(csv_path)

    if smooth is not None and smooth > 1:
        smoothed = {}
        for name, series in series_by_run.items():
            means = _rolling_mean([m for _, m, _ in series], smooth)
            stds = _rolling_mean([sd for _, _, sd in series], smooth)
            smoothed[name] = [
                (step, mean, std)
                for (step, _, _), mean, std in zip(series, means, stds)
            ]
        series_by_run = smoothed

    svg_path = out_dir / f"{metric}.svg"
    with open(svg_path, "w", encoding="ascii") as fh:
        fh.write(_svg_chart(series_by_run, metric))
    written.append(svg_path)
    return written
