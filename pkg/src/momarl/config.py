"""Run configuration: a strict nested key-value text file.

One ``key value`` pair per line, ``#`` starts a comment, dots express
nesting. Unknown keys are rejected. Schema:

    env.name                       line_reach | coop_push          (required)
    env.n_agents                   int                             (required)
    env.horizon                    int                             (required)
    env.dt                         float            (default 0.1)
    algorithm.variant              moma_td3 | moma_ddpg | ind_mo_td3 | outer_loop  (required)
    algorithm.gamma                float            (default 0.99)
    algorithm.tau                  float            (default 0.005)
    algorithm.exploration_sigma    float            (default 0.1)
    algorithm.target_noise_sigma   float            (default 0.2; forced 0 for moma_ddpg)
    algorithm.target_noise_clip    float            (default 0.5)
    algorithm.policy_freq          int              (default 2; forced 1 for moma_ddpg)
    algorithm.update_freq          int              (default 1)
    algorithm.batch_size           int              (default 128)
    algorithm.actor_lr             float            (default 3e-4)
    algorithm.critic_lr            float            (default 3e-4)
    algorithm.warmup_steps         int              (default 1000)
    algorithm.trunk_widths         comma ints       (default 256,256)
    algorithm.head_widths          comma ints       (default 64)
    algorithm.critic_widths        comma ints       (default 256,256)
    algorithm.buffer_capacity      int              (default 100000)
    outer.grid_size                int              (default 5; outer_loop only)
    total_steps                    int                             (required)
    eval_every_episodes            int              (default 100)
    seeds                          comma ints                      (required)
    out                            path                            (required)
"""

from __future__ import annotations

from dataclasses import dataclass, fields as dataclass_fields

from .agents import AlgoConfig
from .envs import EnvSpec

RUN_VARIANTS = ("moma_td3", "moma_ddpg", "ind_mo_td3", "outer_loop")


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


@dataclass(frozen=True)
class RunConfig:
    env: EnvSpec
    variant: str
    algo: AlgoConfig
    total_steps: int
    seeds: tuple[int, ...]
    out: str
    eval_every_episodes: int = 100
    outer_grid_size: int = 5

    def __post_init__(self):
        if self.variant not in RUN_VARIANTS:
            raise ConfigError(f"variant must be one of {RUN_VARIANTS}, got {self.variant!r}")
        if self.total_steps < 0:
            raise ConfigError("total_steps must be non-negative")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if self.eval_every_episodes < 1:
            raise ConfigError("eval_every_episodes must be >= 1")
        if self.outer_grid_size < 1:
            raise ConfigError("outer.grid_size must be >= 1")


def _parse_int(text: str) -> int:
    try:
        return int(text)
    except ValueError as exc:
        raise ConfigError(f"expected an integer, got {text!r}") from exc


def _parse_float(text: str) -> float:
    try:
        return float(text)
    except ValueError as exc:
        raise ConfigError(f"expected a number, got {text!r}") from exc


def _parse_int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(",") if part != "")
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated integers, got {text!r}") from exc


_ALGO_FIELD_PARSERS = {
    "gamma": _parse_float,
    "tau": _parse_float,
    "exploration_sigma": _parse_float,
    "target_noise_sigma": _parse_float,
    "target_noise_clip": _parse_float,
    "policy_freq": _parse_int,
    "update_freq": _parse_int,
    "batch_size": _parse_int,
    "actor_lr": _parse_float,
    "critic_lr": _parse_float,
    "warmup_steps": _parse_int,
    "trunk_widths": _parse_int_list,
    "head_widths": _parse_int_list,
    "critic_widths": _parse_int_list,
    "buffer_capacity": _parse_int,
}


def parse_key_value_text(text: str) -> dict[str, str]:
    """Split a key-value file into a dict; later duplicates are rejected."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, value = line.partition(" ")
        value = value.strip()
        if not value:
            raise ConfigError(f"line {lineno}: key {key!r} has no value")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def parse_run_config(text: str) -> RunConfig:
    pairs = parse_key_value_text(text)

    def take(key: str, default: str | None = None) -> str:
        if key in pairs:
            return pairs.pop(key)
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return default

    try:
        env = EnvSpec(
            name=take("env.name"),
            n_agents=_parse_int(take("env.n_agents")),
            horizon=_parse_int(take("env.horizon")),
            dt=_parse_float(take("env.dt", "0.1")),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    variant = take("algorithm.variant")
    if variant not in RUN_VARIANTS:
        raise ConfigError(f"algorithm.variant must be one of {RUN_VARIANTS}, got {variant!r}")
    backbone = "moma_ddpg" if variant == "moma_ddpg" else "moma_td3"

    algo_kwargs = {"variant": backbone}
    if backbone == "moma_ddpg":
        algo_kwargs["policy_freq"] = 1
        algo_kwargs["target_noise_sigma"] = 0.0
    for name, parser in _ALGO_FIELD_PARSERS.items():
        key = f"algorithm.{name}"
        if key in pairs:
            algo_kwargs[name] = parser(pairs.pop(key))
    try:
        algo = AlgoConfig(**algo_kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    run = dict(
        env=env,
        variant=variant,
        algo=algo,
        total_steps=_parse_int(take("total_steps")),
        seeds=_parse_int_list(take("seeds")),
        out=take("out"),
        eval_every_episodes=_parse_int(take("eval_every_episodes", "100")),
        outer_grid_size=_parse_int(take("outer.grid_size", "5")),
    )
    if pairs:
        raise ConfigError(f"unknown configuration keys: {sorted(pairs)}")
    cfg = RunConfig(**run)
    if cfg.variant == "outer_loop" and cfg.total_steps % cfg.outer_grid_size != 0:
        raise ConfigError(
            f"total_steps {cfg.total_steps} must divide evenly over the outer-loop "
            f"grid of {cfg.outer_grid_size} weights"
        )
    return cfg


def load_run_config(path) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return parse_run_config(text)


def format_run_config(cfg: RunConfig) -> str:
    """Canonical text form; parsing it back reproduces the same RunConfig."""
    lines = [
        f"env.name {cfg.env.name}",
        f"env.n_agents {cfg.env.n_agents}",
        f"env.horizon {cfg.env.horizon}",
        f"env.dt {cfg.env.dt!r}",
        f"algorithm.variant {cfg.variant}",
    ]
    for f in dataclass_fields(AlgoConfig):
        if f.name == "variant":
            continue
        value = getattr(cfg.algo, f.name)
        if isinstance(value, tuple):
            text = ",".join(str(v) for v in value)
        elif isinstance(value, float):
            text = repr(value)
        else:
            text = str(value)
        lines.append(f"algorithm.{f.name} {text}")
    lines.append(f"outer.grid_size {cfg.outer_grid_size}")
    lines.append(f"total_steps {cfg.total_steps}")
    lines.append(f"eval_every_episodes {cfg.eval_every_episodes}")
    lines.append("seeds " + ",".join(str(s) for s in cfg.seeds))
    lines.append(f"out {cfg.out}")
    return "\n".join(lines) + "\n"
