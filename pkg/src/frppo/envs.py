"""Seeded generators for random, chain and grid MDPs."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Literal

import numpy as np

from .mdp import TabularMdp
from .rng import Xoshiro256


class InvalidSpec(ValueError):
    pass


CHAIN_ACTIONS = ("left", "right", "stay")
GRID_ACTIONS = ("up", "down", "left", "right")


@dataclass(frozen=True)
class EnvSpec:
    kind: Literal["random", "chain", "grid"] = "random"
    n_states: int = 10
    n_actions: int | None = None
    reward_range: tuple[float, float] = (0.0, 1.0)
    gamma: float = 0.9
    dirichlet_alpha: float = 1.0
    seed: int = 0
    slip: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "reward_range", tuple(float(x) for x in self.reward_range))

    @property
    def actions(self) -> int:
        if self.kind == "chain":
            return len(CHAIN_ACTIONS)
        if self.kind == "grid":
            return len(GRID_ACTIONS)
        return 4 if self.n_actions is None else self.n_actions

    def to_dict(self) -> dict:
        d = asdict(self)
        d["reward_range"] = list(self.reward_range)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "EnvSpec":
        return cls(**d)


def _check(spec: EnvSpec) -> None:
    if spec.kind not in ("random", "chain", "grid"):
        raise InvalidSpec(f"unknown env kind {spec.kind!r}")
    if spec.n_states < 1:
        raise InvalidSpec("n_states must be positive")
    fixed = {"chain": len(CHAIN_ACTIONS), "grid": len(GRID_ACTIONS)}.get(spec.kind)
    if fixed is not None and spec.n_actions not in (None, fixed):
        raise InvalidSpec(f"{spec.kind} envs have exactly {fixed} actions, got {spec.n_actions}")
    if spec.actions < 1:
        raise InvalidSpec("n_actions must be positive")
    if not 0.0 <= spec.gamma < 1.0:
        raise InvalidSpec("gamma must lie in [0, 1)")
    if spec.dirichlet_alpha <= 0:
        raise InvalidSpec("dirichlet_alpha must be positive")
    lo, hi = spec.reward_range
    if not lo <= hi:
        raise InvalidSpec("reward_range must satisfy lo <= hi")
    if not 0.0 <= spec.slip <= 1.0:
        raise InvalidSpec("slip must lie in [0, 1]")
    if spec.seed < 0 or spec.seed >= 1 << 64:
        raise InvalidSpec("seed must be a 64-bit unsigned integer")


def generate(spec: EnvSpec) -> TabularMdp:
    """Build the MDP described by ``spec``; a pure function of the spec."""
    _check(spec)
    if spec.kind == "random":
        return _random(spec)
    if spec.kind == "chain":
        return _chain(spec)
    return _grid(spec)


def _random(spec: EnvSpec) -> TabularMdp:
    # Draw order: every transition row (s, a) in row-major order, then rewards.
    rng = Xoshiro256(spec.seed)
    S, A = spec.n_states, spec.actions
    P = np.empty((S, A, S))
    for s in range(S):
        for a in range(A):
            P[s, a] = rng.dirichlet(spec.dirichlet_alpha, S)
    lo, hi = spec.reward_range
    r = np.array([[rng.uniform(lo, hi) for _ in range(A)] for _ in range(S)])
    return TabularMdp(P, r, spec.gamma, np.full(S, 1.0 / S))


def _chain(spec: EnvSpec) -> TabularMdp:
    """Line of states; the last one pays reward 1.  A slip leaves the agent in place."""
    S = spec.n_states
    P = np.zeros((S, 3, S))
    for s in range(S):
        for a, move in enumerate((-1, 1, 0)):
            target = min(max(s + move, 0), S - 1)
            P[s, a, target] += 1.0 - spec.slip
            P[s, a, s] += spec.slip
    r = np.zeros((S, 3))
    r[S - 1, :] = 1.0
    return TabularMdp(P, r, spec.gamma, np.full(S, 1.0 / S))


def _grid(spec: EnvSpec) -> TabularMdp:
    """Square 4-connected grid, goal in the last cell; moves into a wall bounce back."""
    side = math.isqrt(spec.n_states)
    if side * side != spec.n_states:
        raise InvalidSpec(f"grid needs a square number of states, got {spec.n_states}")
    S = spec.n_states
    P = np.zeros((S, 4, S))
    moves = ((-1, 0), (1, 0), (0, -1), (0, 1))
    for s in range(S):
        row, col = divmod(s, side)
        for a, (dr, dc) in enumerate(moves):
            nr, nc = row + dr, col + dc
            target = nr * side + nc if 0 <= nr < side and 0 <= nc < side else s
            P[s, a, target] = 1.0
    r = np.zeros((S, 4))
    r[S - 1, :] = 1.0
    return TabularMdp(P, r, spec.gamma, np.full(S, 1.0 / S))
