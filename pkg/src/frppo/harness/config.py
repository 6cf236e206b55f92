from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace

from ..envs import EnvSpec
from ..fr_ppo import SolverConfig

ALGORITHMS = ("fr-ppo", "kl-md", "ppo-clip", "parametrized-fr")
SUITES = ("identity", "bounds", "improvement", "convergence", "prox", "geometry")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    env: EnvSpec = field(default_factory=EnvSpec)
    algorithm: str = "fr-ppo"
    solver: SolverConfig = field(default_factory=lambda: SolverConfig(max_iters=50))
    output_path: str = "results.csv"
    trials: int = 1
    algorithms: tuple[str, ...] = ("fr-ppo", "kl-md")
    eps_clip: float = 0.2
    inner_iters: int = 50
    jobs: int = 1

    def validate(self) -> "RunConfig":
        for alg in (self.algorithm, *self.algorithms):
            if alg not in ALGORITHMS:
                raise ConfigError(f"unknown algorithm {alg!r}; choose from {', '.join(ALGORITHMS)}")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.solver.max_iters < 0:
            raise ConfigError("iters must be >= 0")
        if not 0.0 < self.eps_clip < 1.0:
            raise ConfigError("eps-clip must lie in (0, 1)")
        if self.solver.tau_mode not in ("auto", "explicit"):
            raise ConfigError("tau_mode must be 'auto' or 'explicit'")
        return self

    def to_dict(self) -> dict:
        d = asdict(self)
        d["env"] = self.env.to_dict()
        d["algorithms"] = list(self.algorithms)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        if "env" in d:
            d["env"] = EnvSpec.from_dict(d["env"])
        if "solver" in d:
            d["solver"] = SolverConfig(**d["solver"])
        if "algorithms" in d:
            d["algorithms"] = tuple(d["algorithms"])
        unknown = set(d) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        return cls(**d)


def load_config(path) -> RunConfig:
    with open(path) as fh:
        return RunConfig.from_dict(json.load(fh))


def apply_overrides(cfg: RunConfig, args) -> RunConfig:
    """Apply CLI flags on top of a config; flags left as None keep the config value."""
    env, solver = cfg.env, cfg.solver
    env_kw, solver_kw, top = {}, {}, {}
    if getattr(args, "env", None) is not None:
        env_kw["kind"] = args.env
    if getattr(args, "states", None) is not None:
        env_kw["n_states"] = args.states
    if getattr(args, "actions", None) is not None:
        env_kw["n_actions"] = args.actions
    if getattr(args, "gamma", None) is not None:
        env_kw["gamma"] = args.gamma
    if getattr(args, "seed", None) is not None:
        env_kw["seed"] = args.seed
        solver_kw["seed"] = args.seed
    if getattr(args, "tau", None) is not None:
        if args.tau == "auto":
            solver_kw["tau_mode"] = "auto"
        else:
            try:
                solver_kw["tau"] = float(args.tau)
            except ValueError:
                raise ConfigError(f"--tau must be a number or 'auto', got {args.tau!r}") from None
            solver_kw["tau_mode"] = "explicit"
    if getattr(args, "iters", None) is not None:
        solver_kw["max_iters"] = args.iters
    if getattr(args, "trials", None) is not None:
        top["trials"] = args.trials
    if getattr(args, "out", None) is not None:
        top["output_path"] = args.out
    if getattr(args, "algs", None) is not None:
        algs = tuple(a.strip() for a in args.algs.split(",") if a.strip())
        top["algorithms"] = algs
        if len(algs) == 1:
            top["algorithm"] = algs[0]
    if getattr(args, "eps_clip", None) is not None:
        top["eps_clip"] = args.eps_clip
    if getattr(args, "jobs", None) is not None:
        top["jobs"] = args.jobs
    return replace(cfg, env=replace(env, **env_kw), solver=replace(solver, **solver_kw), **top).validate()
