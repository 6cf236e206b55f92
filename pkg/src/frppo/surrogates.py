"""Surrogate lower bounds on policy improvement, the PPO clipped objective, and baseline updates."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import dp, geometry
from .mdp import InvalidParameter, Policy, TabularMdp, normalize_rows

VARIANTS = ("max_tv2", "int_tv", "sqrt_kl", "int_tv2", "fr2")


@dataclass(frozen=True)
class BoundReport:
    lhs: float
    surrogate_linear: float
    penalty_max_tv2: float
    penalty_int_tv: float
    penalty_sqrt_kl: float
    penalty_int_tv2: float
    penalty_fr2: float

    def rhs(self, variant: str) -> float:
        return self.surrogate_linear - getattr(self, f"penalty_{variant}")

    @property
    def rhs_max_tv2(self) -> float:
        return self.rhs("max_tv2")

    @property
    def rhs_int_tv(self) -> float:
        return self.rhs("int_tv")

    @property
    def rhs_sqrt_kl(self) -> float:
        return self.rhs("sqrt_kl")

    @property
    def rhs_int_tv2(self) -> float:
        return self.rhs("int_tv2")

    @property
    def rhs_fr2(self) -> float:
        return self.rhs("fr2")

    def slacks(self) -> dict[str, float]:
        return {v: self.lhs - self.rhs(v) for v in VARIANTS}

    def violations(self, tol: float = 1e-9, order_tol: float = 1e-12) -> list[str]:
        """Names of the bounds (and tightness orderings) that fail on this pair."""
        out = [v for v, s in self.slacks().items() if s < -tol]
        if self.rhs_int_tv2 < self.rhs_max_tv2 - order_tol:
            out.append("order:int_tv2>=max_tv2")
        if self.rhs_int_tv2 < self.rhs_fr2 - order_tol:
            out.append("order:int_tv2>=fr2")
        return out


def bound_report(mdp: TabularMdp, pi_new: Policy, pi_old: Policy, rho=None) -> BoundReport:
    """Evaluate the true improvement and five lower bounds built from the old policy only.

    Penalty coefficients, with R = ||r||_inf and c = 1 / (1 - gamma)^3:
        max_s TV^2 times 8Rc, int TV times 4Rc, sqrt(int KL) times 2 sqrt(2) Rc,
        int TV^2 times 8Rc, int FR^2(squared densities) times Rc / 2.
    """
    rho = mdp.rho if rho is None else np.asarray(rho, float)
    new, old = pi_new.probs, pi_old.probs
    lam = pi_old.reference.weights
    gamma = mdp.gamma
    old_bundle = dp.evaluate(mdp.with_rho(rho), old)
    d = old_bundle.occupancy
    lhs = float(rho @ dp.policy_eval(mdp, new) - rho @ old_bundle.v)
    # sum_a A pi_old = 0, so subtracting it changes nothing but keeps the identical-policy case exact
    lin = float(d @ np.sum(old_bundle.adv * (new - old), axis=1)) / (1.0 - gamma)

    coef = mdp.reward_sup / (1.0 - gamma) ** 3
    tv_s = geometry.tv(new, old)
    kl_s = geometry.kl(new, old)
    fr_s = geometry.fr2_squared_densities(new, old, lam)
    int_kl = float(d @ np.where(d > 0, kl_s, 0.0))
    if math.isinf(int_kl):
        sqrt_kl = math.inf
    else:
        sqrt_kl = 2.0 * math.sqrt(2.0) * coef * math.sqrt(max(int_kl, 0.0))
    return BoundReport(
        lhs=lhs,
        surrogate_linear=lin,
        penalty_max_tv2=8.0 * coef * float(np.max(tv_s ** 2)),
        penalty_int_tv=4.0 * coef * float(d @ tv_s),
        penalty_sqrt_kl=sqrt_kl,
        penalty_int_tv2=8.0 * coef * float(d @ tv_s ** 2),
        penalty_fr2=0.5 * coef * float(d @ fr_s),
    )


def surrogate_linear_ratio(mdp: TabularMdp, pi_new: Policy, pi_old: Policy, rho=None) -> float:
    """The linear surrogate in ratio form, sum_s d(s) sum_a pi(a|s) (pi'/pi) A; needs pi > 0."""
    rho = mdp.rho if rho is None else np.asarray(rho, float)
    old = pi_old.probs
    bundle = dp.evaluate(mdp.with_rho(rho), old)
    ratio = pi_new.probs / old
    return float(bundle.occupancy @ np.sum(old * ratio * bundle.adv, axis=1)) / (1.0 - mdp.gamma)


def _ratio(new, old):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(old > 0.0, new / np.where(old > 0.0, old, 1.0), 1.0)


def clip_objective_rows(new, old, adv, eps) -> np.ndarray:
    ratio = _ratio(new, old)
    clipped = np.clip(ratio, 1.0 - eps, 1.0 + eps)
    return np.sum(old * np.minimum(ratio * adv, clipped * adv), axis=1)


def ppo_clip_objective(mdp: TabularMdp, pi_new: Policy, pi_old: Policy, rho=None, eps: float = 0.2,
                       bundle: dp.ValueBundle | None = None) -> float:
    """PPO clipped surrogate under the old policy's occupancy; zero at ``pi_new == pi_old``."""
    if not 0.0 < eps < 1.0:
        raise InvalidParameter("eps must lie in (0, 1)")
    rho = mdp.rho if rho is None else np.asarray(rho, float)
    if bundle is None:
        bundle = dp.evaluate(mdp.with_rho(rho), pi_old)
    rows = clip_objective_rows(pi_new.probs, pi_old.probs, bundle.adv, eps)
    return float(bundle.occupancy @ rows)


def kl_md_step(mdp: TabularMdp, pi: Policy, tau_kl: float, bundle: dp.ValueBundle | None = None) -> Policy:
    """KL mirror-descent step: pi'(a|s) proportional to pi(a|s) exp(tau_kl A(s, a))."""
    if np.any(pi.probs <= 0.0):
        raise InvalidParameter("KL mirror descent needs strictly positive policy rows")
    if bundle is None:
        bundle = dp.evaluate(mdp, pi)
    z = tau_kl * bundle.adv
    z = z - z.max(axis=1, keepdims=True)
    w = pi.probs * np.exp(z)
    return pi.replace(w / w.sum(axis=1, keepdims=True))


def simplex_projection(y: np.ndarray) -> np.ndarray:
    """Row-wise Euclidean projection onto the probability simplex (sort-based)."""
    y = np.atleast_2d(np.asarray(y, float))
    n = y.shape[1]
    u = -np.sort(-y, axis=1)
    css = np.cumsum(u, axis=1) - 1.0
    idx = np.arange(1, n + 1)
    cond = u - css / idx > 0
    k = n - np.argmax(cond[:, ::-1], axis=1)
    theta = css[np.arange(y.shape[0]), k - 1] / k
    return np.maximum(y - theta[:, None], 0.0)


def ppo_clip_ascent(mdp: TabularMdp, pi_old: Policy, rho=None, eps: float = 0.2, inner_iters: int = 50,
                    lr: float | None = None, bundle: dp.ValueBundle | None = None) -> Policy:
    """Projected (super)gradient ascent on the clipped objective over tabular policies.

    Returns the best iterate by objective value, so the result never scores
    below ``pi_old`` (objective 0).
    """
    rho = mdp.rho if rho is None else np.asarray(rho, float)
    if bundle is None:
        bundle = dp.evaluate(mdp.with_rho(rho), pi_old)
    adv, d = bundle.adv, bundle.occupancy
    old = pi_old.probs
    if lr is None:
        scale = float(np.max(np.abs(adv)) * np.max(d))
        lr = 0.5 / scale if scale > 0 else 1.0

    def objective(x):
        return float(d @ clip_objective_rows(x, old, adv, eps))

    best, best_val = old, 0.0
    x = old.copy()
    for _ in range(inner_iters):
        ratio = _ratio(x, old)
        # the unclipped branch is active when the ratio has not passed the clip
        # boundary in the direction the advantage pushes it
        live = np.where(adv > 0, ratio < 1.0 + eps, ratio > 1.0 - eps)
        grad = d[:, None] * np.where(live & (old > 0), adv, 0.0)
        if not np.any(grad):
            break
        x = simplex_projection(x + lr * grad)
        val = objective(x)
        if val > best_val:
            best, best_val = x, val
    if best is old:
        return pi_old
    return pi_old.replace(normalize_rows(best))
