"""Finite MDP, reference measure and policy data model."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

ROW_TOL = 1e-12


class InvalidParameter(ValueError):
    """Raised for non-finite or otherwise unusable parameters."""


class InvalidInput(ValueError):
    """Raised when array shapes or values do not fit the MDP."""


class NumericBreakdown(ArithmeticError):
    """Raised when a linear solve fails (should not happen for gamma < 1)."""


def _frozen(x, dtype=float) -> np.ndarray:
    arr = np.array(x, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TabularMdp:
    """Finite discounted MDP with dense transition tensor ``transition[s, a, s']``."""

    transition: np.ndarray
    reward: np.ndarray
    gamma: float
    rho: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "transition", _frozen(self.transition))
        object.__setattr__(self, "reward", _frozen(self.reward))
        object.__setattr__(self, "rho", _frozen(self.rho))
        object.__setattr__(self, "gamma", float(self.gamma))
        if self.transition.ndim != 3 or self.reward.ndim != 2 or self.rho.ndim != 1:
            raise InvalidInput("transition must be (S, A, S), reward (S, A), rho (S,)")
        S, A, S2 = self.transition.shape
        if S2 != S or self.reward.shape != (S, A) or self.rho.shape != (S,):
            raise InvalidInput(
                f"inconsistent shapes: transition {self.transition.shape}, "
                f"reward {self.reward.shape}, rho {self.rho.shape}"
            )

    @property
    def n_states(self) -> int:
        return self.transition.shape[0]

    @property
    def n_actions(self) -> int:
        return self.transition.shape[1]

    @property
    def reward_sup(self) -> float:
        """Sup norm of the reward, ``max |r(s, a)|``."""
        return float(np.max(np.abs(self.reward)))

    def with_rho(self, rho) -> "TabularMdp":
        return TabularMdp(self.transition, self.reward, self.gamma, rho)


@dataclass(frozen=True)
class ReferenceMeasure:
    """Strictly positive probability vector over actions."""

    weights: np.ndarray

    def __post_init__(self):
        w = _frozen(self.weights)
        if w.ndim != 1 or w.size == 0:
            raise InvalidInput("reference measure must be a non-empty vector")
        if not np.all(np.isfinite(w)) or np.any(w <= 0.0):
            raise InvalidParameter("reference measure must be strictly positive")
        if abs(w.sum() - 1.0) > ROW_TOL:
            raise InvalidParameter(f"reference measure sums to {w.sum()!r}, not 1")
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, n_actions: int) -> "ReferenceMeasure":
        return cls(np.full(n_actions, 1.0 / n_actions))

    @property
    def n_actions(self) -> int:
        return self.weights.size


@dataclass(frozen=True)
class Policy:
    """Row-stochastic matrix ``probs[s, a]``; rows may touch the simplex boundary."""

    probs: np.ndarray
    reference: ReferenceMeasure = field(default=None)

    def __post_init__(self):
        p = _frozen(self.probs)
        if p.ndim != 2:
            raise InvalidInput("policy must be a (S, A) matrix")
        if not np.all(np.isfinite(p)) or np.any(p < 0.0):
            raise InvalidParameter("policy entries must be finite and nonnegative")
        bad = np.flatnonzero(np.abs(p.sum(axis=1) - 1.0) > ROW_TOL)
        if bad.size:
            raise InvalidParameter(f"policy rows {bad.tolist()} do not sum to 1")
        ref = self.reference
        if ref is None:
            ref = ReferenceMeasure.uniform(p.shape[1])
        if ref.n_actions != p.shape[1]:
            raise InvalidInput("reference measure and policy disagree on n_actions")
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "reference", ref)

    @property
    def density(self) -> np.ndarray:
        """Density with respect to the reference measure, ``probs / lambda``."""
        return self.probs / self.reference.weights

    def replace(self, probs) -> "Policy":
        return Policy(probs, self.reference)


@dataclass(frozen=True)
class SoftmaxPolicy:
    """Tabular logits; the induced policy is ``lambda(a) exp(theta[s, a])`` normalized."""

    theta: np.ndarray
    reference: ReferenceMeasure = field(default=None)

    def __post_init__(self):
        t = _frozen(self.theta)
        if t.ndim != 2:
            raise InvalidInput("theta must be a (S, A) matrix")
        ref = self.reference or ReferenceMeasure.uniform(t.shape[1])
        if ref.n_actions != t.shape[1]:
            raise InvalidInput("reference measure and theta disagree on n_actions")
        object.__setattr__(self, "theta", t)
        object.__setattr__(self, "reference", ref)


def normalize_rows(probs: np.ndarray) -> np.ndarray:
    """Renormalize rows so they sum to 1 up to a few ulps."""
    probs = np.clip(probs, 0.0, None)
    return probs / probs.sum(axis=1, keepdims=True)


def validate_mdp(mdp: TabularMdp) -> list[str]:
    """Return human-readable invariant violations; empty when the MDP is valid."""
    out = []
    P, r = mdp.transition, mdp.reward
    for s, a in zip(*np.nonzero(np.any(P < 0.0, axis=2) | ~np.all(np.isfinite(P), axis=2))):
        out.append(f"transition[{s}][{a}] has negative or non-finite entries")
    sums = P.sum(axis=2)
    for s, a in zip(*np.nonzero(np.abs(sums - 1.0) > ROW_TOL)):
        out.append(f"transition[{s}][{a}] sums to {sums[s, a]!r}")
    if not np.all(np.isfinite(r)):
        for s, a in zip(*np.nonzero(~np.isfinite(r))):
            out.append(f"reward[{s}][{a}] is not finite")
    if not (0.0 <= mdp.gamma < 1.0):
        out.append(f"gamma out of range: {mdp.gamma!r} not in [0, 1)")
    if np.any(mdp.rho < 0.0) or not np.all(np.isfinite(mdp.rho)):
        out.append("rho has negative or non-finite entries")
    if abs(mdp.rho.sum() - 1.0) > ROW_TOL:
        out.append(f"rho sums to {mdp.rho.sum()!r}")
    return out


def uniform_policy(mdp: TabularMdp, reference: ReferenceMeasure | None = None) -> Policy:
    S, A = mdp.n_states, mdp.n_actions
    return Policy(np.full((S, A), 1.0 / A), reference)


def softmax_rows(theta: np.ndarray, lam: np.ndarray) -> np.ndarray:
    z = theta - theta.max(axis=1, keepdims=True)
    w = lam * np.exp(z)
    return w / w.sum(axis=1, keepdims=True)


def softmax_to_policy(sp: SoftmaxPolicy) -> Policy:
    if not np.all(np.isfinite(sp.theta)):
        raise InvalidParameter("non-finite logits")
    return Policy(softmax_rows(sp.theta, sp.reference.weights), sp.reference)


def mdp_to_dict(mdp: TabularMdp, reference: ReferenceMeasure | None = None) -> dict:
    ref = reference or ReferenceMeasure.uniform(mdp.n_actions)
    return {
        "n_states": mdp.n_states,
        "n_actions": mdp.n_actions,
        "gamma": mdp.gamma,
        "rho": mdp.rho.tolist(),
        "reward": mdp.reward.tolist(),
        "transition": mdp.transition.tolist(),
        "lambda": ref.weights.tolist(),
    }


def mdp_from_dict(doc: dict) -> tuple[TabularMdp, ReferenceMeasure]:
    mdp = TabularMdp(doc["transition"], doc["reward"], doc["gamma"], doc["rho"])
    if (mdp.n_states, mdp.n_actions) != (doc["n_states"], doc["n_actions"]):
        raise InvalidInput("declared sizes do not match the arrays")
    lam = doc.get("lambda")
    ref = ReferenceMeasure(lam) if lam is not None else ReferenceMeasure.uniform(mdp.n_actions)
    return mdp, ref


def dump_mdp(mdp: TabularMdp, path, reference: ReferenceMeasure | None = None) -> None:
    with open(path, "w") as fh:
        json.dump(mdp_to_dict(mdp, reference), fh)


def load_mdp(path) -> tuple[TabularMdp, ReferenceMeasure]:
    with open(path) as fh:
        return mdp_from_dict(json.load(fh))
