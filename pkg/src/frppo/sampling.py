"""Seeded random instances for property sweeps."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .envs import EnvSpec, generate
from .mdp import Policy, ReferenceMeasure, TabularMdp
from .rng import derive_seed


@dataclass(frozen=True)
class Instance:
    seed: int
    mdp: TabularMdp
    reference: ReferenceMeasure
    rng: np.random.Generator


def random_reference(rng: np.random.Generator, n_actions: int) -> ReferenceMeasure:
    """Random reference measure bounded below by 1/(2A)."""
    w = 0.5 * rng.dirichlet(np.ones(n_actions)) + 0.5 / n_actions
    return ReferenceMeasure(w / w.sum())


def random_policy(rng: np.random.Generator, n_states: int, n_actions: int,
                  reference: ReferenceMeasure | None = None, alpha: float = 1.0) -> Policy:
    probs = rng.dirichlet(np.full(n_actions, alpha), size=n_states)
    return Policy(probs / probs.sum(axis=1, keepdims=True), reference)


def random_instance(base_seed: int, index: int, max_states: int = 30, max_actions: int = 10,
                    gamma_max: float = 0.95, uniform_reference: bool = False,
                    min_states: int = 1, min_actions: int = 1, gamma_min: float = 0.0) -> Instance:
    """Random-kind MDP with sizes, discount and Dirichlet concentration drawn from the seed."""
    seed = derive_seed(base_seed, index)
    rng = np.random.default_rng(seed)
    S = int(rng.integers(min_states, max_states + 1))
    A = int(rng.integers(min_actions, max_actions + 1))
    gamma = float(rng.uniform(gamma_min, gamma_max))
    alpha = float(rng.choice([0.2, 1.0, 5.0]))
    spec = EnvSpec(kind="random", n_states=S, n_actions=A, reward_range=(-1.0, 1.0),
                   gamma=gamma, dirichlet_alpha=alpha, seed=seed)
    mdp = generate(spec)
    ref = ReferenceMeasure.uniform(A) if uniform_reference else random_reference(rng, A)
    return Instance(seed, mdp, ref, rng)
