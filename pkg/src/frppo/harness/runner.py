"""Experiment orchestration: per-trial runs, CSV output and algorithm comparison."""
from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from functools import partial

import numpy as np

from .. import fr_ppo, surrogates
from ..envs import generate
from ..mdp import SoftmaxPolicy, softmax_to_policy, uniform_policy
from ..rng import derive_seed
from .config import RunConfig

log = logging.getLogger(__name__)

CSV_FIELDS = ("trial", "iter", "value_at_rho", "improvement", "integrated_fr2_step",
              "bound_rhs", "gap_to_opt", "wallclock_us")


def trial_env(cfg: RunConfig, trial: int):
    return replace(cfg.env, seed=derive_seed(cfg.env.seed, trial))


def run_trial(cfg: RunConfig, algorithm: str, trial: int) -> fr_ppo.IterateLog:
    mdp = generate(trial_env(cfg, trial))
    pi0 = uniform_policy(mdp)
    solver = cfg.solver
    tau = solver.resolve_tau(mdp)
    if algorithm == "fr-ppo":
        return fr_ppo.run_fr_ppo(mdp, pi0, solver)

    if algorithm == "kl-md":
        def step(pi, bundle):
            return surrogates.kl_md_step(mdp, pi, tau, bundle)
        certify = False
    elif algorithm == "ppo-clip":
        def step(pi, bundle):
            return surrogates.ppo_clip_ascent(mdp, pi, eps=cfg.eps_clip,
                                              inner_iters=cfg.inner_iters, bundle=bundle)
        certify = False
    elif algorithm == "parametrized-fr":
        state = {"sp": SoftmaxPolicy(np.zeros((mdp.n_states, mdp.n_actions)), pi0.reference)}

        def step(pi, bundle):
            out = fr_ppo.parametrized_surrogate_step(mdp, state["sp"], solver)
            state["sp"] = out.policy
            return softmax_to_policy(out.policy)
        certify = True
    else:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    return fr_ppo.run_iterates(mdp, pi0, step, solver.max_iters, tau,
                               certify_improvement=certify,
                               improvement_tol=solver.improvement_tol)


def run_trials(cfg: RunConfig, algorithm: str) -> list[fr_ppo.IterateLog]:
    """All trials of one algorithm, ordered by trial index whatever the worker count."""
    trials = range(cfg.trials)
    if cfg.jobs <= 1 or cfg.trials == 1:
        return [run_trial(cfg, algorithm, t) for t in trials]
    with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
        return list(pool.map(partial(run_trial, cfg, algorithm), trials))


def fmt(x) -> str:
    """Shortest exact-round-trip text for a double (17 significant digits)."""
    return format(float(x), ".17g")


def write_csv(path, logs: list[fr_ppo.IterateLog]) -> int:
    rows = 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        for trial, lg in enumerate(logs):
            for n in range(1, lg.n_iters + 1):
                w.writerow([
                    trial, n,
                    fmt(lg.value_at_rho[n]), fmt(lg.improvement[n]),
                    fmt(lg.integrated_fr2_step[n]), fmt(lg.bound_rhs[n]),
                    fmt(lg.gap_to_target[n]), lg.wallclock_us[n],
                ])
                rows += 1
    return rows


def cmd_run(cfg: RunConfig) -> int:
    logs = run_trials(cfg, cfg.algorithm)
    rows = write_csv(cfg.output_path, logs)
    failures = sum(not lg.ok() for lg in logs)
    if failures:
        log.warning("%d trial(s) recorded certificate failures", failures)
    log.info("wrote %d rows to %s", rows, cfg.output_path)
    return 0


def compare_report(cfg: RunConfig) -> dict:
    entries = []
    for alg in cfg.algorithms:
        logs = run_trials(cfg, alg)
        gaps = np.array([lg.gap_to_target for lg in logs])
        q25, med, q75 = np.percentile(gaps, [25, 50, 75], axis=0)
        series = [{"iter": n, "gap_median": float(med[n]), "gap_iqr": float(q75[n] - q25[n])}
                  for n in range(gaps.shape[1])]
        entry = {"name": alg, "series": series}
        if alg == "fr-ppo" and cfg.solver.max_iters > 0:
            entry["final_bound_ok"] = all(
                lg.gap_to_target[-1] <= lg.bound_rhs[-1] + 1e-9 for lg in logs)
        entries.append(entry)
    return {"algorithms": entries, "env": cfg.env.to_dict(), "seed": cfg.env.seed}


def cmd_compare(cfg: RunConfig) -> int:
    if len(cfg.algorithms) < 2:
        raise ValueError("compare needs at least two algorithms")
    report = compare_report(cfg)
    with open(cfg.output_path, "w") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    return 0
