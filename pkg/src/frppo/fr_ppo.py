"""Fisher-Rao proximal policy updates on tabular MDPs.

Per state the update maximizes

    sum_a A(s, a) m(a) - (1 / 2 tau) FR^2(m^2, pi_n(.|s)^2)

over distributions m.  Writing p = m / lambda and q = pi_n / lambda + tau A / 4
the objective is -(2 / tau) sum_a lambda(a) (p(a) - q(a))^2 + const, so the
maximizer is the lambda-weighted Euclidean projection of q onto
{p >= 0, sum lambda p = 1}, which a sort-and-threshold pass solves exactly.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np

from . import dp, geometry
from .mdp import InvalidInput, InvalidParameter, Policy, SoftmaxPolicy, TabularMdp, softmax_rows

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverConfig:
    tau: float = 1.0
    max_iters: int = 100
    improvement_tol: float = 1e-12
    seed: int = 0
    tau_mode: Literal["explicit", "auto"] = "auto"

    def resolve_tau(self, mdp: TabularMdp) -> float:
        """Step size actually used: in auto mode the largest one the improvement theory allows."""
        if self.tau_mode == "auto":
            return auto_tau(mdp)
        if not self.tau > 0:
            raise InvalidParameter("tau must be positive")
        return float(self.tau)


def auto_tau(mdp: TabularMdp) -> float:
    r = mdp.reward_sup
    if r == 0.0:
        # Advantages vanish identically; any step is admissible.
        return 1.0
    return (1.0 - mdp.gamma) ** 2 / r


def tau_condition(mdp: TabularMdp, tau: float) -> bool:
    """``1 / tau >= ||r||_inf / (1 - gamma)^2``, with a few ulps of slack for the auto value."""
    return 1.0 / tau >= mdp.reward_sup / (1.0 - mdp.gamma) ** 2 * (1.0 - 1e-14)


# -- per-state prox ---------------------------------------------------------

def weighted_simplex_projection(q, lam):
    """Project rows of ``q`` onto {p >= 0, sum_a lam[a] p[a] = 1} in the lam-weighted L2 norm.

    The solution is p = max(q - theta, 0) with the threshold theta fixed by the
    constraint.  Sorting q in decreasing order, theta is the running estimate
    (sum_{j<=k} lam_j q_j - 1) / sum_{j<=k} lam_j at the largest k whose k-th
    sorted entry still exceeds it.
    """
    q = np.asarray(q, float)
    lam = np.broadcast_to(np.asarray(lam, float), q.shape)
    order = np.argsort(-q, axis=-1, kind="stable")
    qs = np.take_along_axis(q, order, axis=-1)
    ls = np.take_along_axis(lam, order, axis=-1)
    cum_w = np.cumsum(ls, axis=-1)
    cum_wq = np.cumsum(ls * qs, axis=-1)
    thetas = (cum_wq - 1.0) / cum_w
    active = qs > thetas
    # active is true on a prefix; the first entry is always active.
    k = np.sum(active, axis=-1, keepdims=True) - 1
    theta = np.take_along_axis(thetas, k, axis=-1)
    return np.maximum(q - theta, 0.0)


def prox_target(adv_row, pi_row, lam, tau):
    """Unconstrained maximizer in density coordinates, ``pi/lam + tau A / 4``."""
    return np.asarray(pi_row, float) / lam + 0.25 * tau * np.asarray(adv_row, float)


def prox_rows(adv, pi, lam, tau) -> np.ndarray:
    """Vectorized prox over a stack of states; returns probabilities."""
    adv = np.asarray(adv, float)
    if not np.all(np.isfinite(adv)):
        raise InvalidInput("non-finite advantage entries")
    if not tau > 0:
        raise InvalidParameter("tau must be positive")
    lam = np.asarray(lam, float)
    p = weighted_simplex_projection(prox_target(adv, pi, lam, tau), lam)
    m = lam * p
    # The projection is exact up to rounding; renormalize the last ulps.
    return m / np.sum(m, axis=-1, keepdims=True)


def prox_step_state(adv_row, pi_row, lam, tau) -> np.ndarray:
    """Exact maximizer of the FR-penalized linear objective at a single state."""
    return prox_rows(np.atleast_2d(adv_row), np.atleast_2d(pi_row), lam, tau)[0]


def prox_objective(m, adv_row, pi_row, lam, tau):
    """``sum A m - FR^2(m^2, pi^2) / (2 tau)``; broadcasts over leading axes of ``m``."""
    m = np.asarray(m, float)
    return m @ np.asarray(adv_row, float) - geometry.fr2_squared_densities(m, pi_row, lam) / (2.0 * tau)


def kkt_residual(m, adv_row, pi_row, lam, tau) -> tuple[float, float]:
    """Stationarity and complementary-sign residuals of the prox solution.

    On the support, -(4/tau)(p - q) must be the same scalar nu for every
    action; off the support (4/tau) q must not exceed nu.
    """
    lam = np.asarray(lam, float)
    p = np.asarray(m, float) / lam
    q = prox_target(adv_row, pi_row, lam, tau)
    g = -(4.0 / tau) * (p - q)
    support = p > 0.0
    nu = float(np.sum(lam[support] * g[support]) / np.sum(lam[support]))
    stat = float(np.max(np.abs(g[support] - nu)))
    off = (4.0 / tau) * q[~support]
    sign = float(np.max(off - nu)) if off.size else -np.inf
    return stat, max(sign, 0.0)


# -- full iteration ---------------------------------------------------------

def fr_ppo_iterate(mdp: TabularMdp, pi: Policy, config: SolverConfig, bundle: dp.ValueBundle | None = None) -> Policy:
    """One FR-PPO step: the per-state prox with the exact advantage of ``pi``."""
    tau = config.resolve_tau(mdp)
    if bundle is None:
        bundle = dp.evaluate(mdp, pi)
    new = prox_rows(bundle.adv, pi.probs, pi.reference.weights, tau)
    return pi.replace(new)


@dataclass
class IterateLog:
    """Per-iteration record; index n holds quantities for the n-th iterate.

    Step quantities (improvement, integrated_fr2_step, surrogate_gain) describe
    the transition from iterate n-1 to n and are NaN at n = 0; ``bound_rhs`` is
    +inf at n = 0.
    """

    tau: float
    tau_condition: bool
    value_at_rho: list = field(default_factory=list)
    improvement: list = field(default_factory=list)
    integrated_fr2_step: list = field(default_factory=list)
    surrogate_gain: list = field(default_factory=list)
    bound_rhs: list = field(default_factory=list)
    gap_to_target: list = field(default_factory=list)
    # comparator constants (comparator = an optimal deterministic policy)
    v_star_at_rho: float = float("nan")
    alpha: float = float("nan")
    alpha_statement: float = float("nan")
    integrated_fr2_initial: float = float("nan")
    y0: float = float("nan")
    # (1/tau int FR^2 + alpha)/(1 - gamma) and (alpha + y0/tau)/(1 - gamma)
    bound_constant: float = float("nan")
    proof_constant: float = float("nan")
    improvement_violations: list = field(default_factory=list)
    bound_violations: list = field(default_factory=list)
    policies: list = field(default_factory=list)
    wallclock_us: list = field(default_factory=list)

    @property
    def n_iters(self) -> int:
        return len(self.value_at_rho) - 1

    def ok(self) -> bool:
        return not self.improvement_violations and not self.bound_violations


def _step_record(lam, tau, old: dp.ValueBundle, pi_old, pi_new):
    fr = geometry.fr2_squared_densities(pi_new, pi_old, lam)
    gain_rows = np.sum(old.adv * (pi_new - pi_old), axis=1) - fr / (2.0 * tau)
    return float(old.occupancy @ fr), float(old.occupancy @ gain_rows)


def run_iterates(mdp: TabularMdp, pi0: Policy, step: Callable[[Policy, dp.ValueBundle], Policy],
                 n_iters: int, tau: float, rho=None, certify_improvement: bool = False,
                 certify_bound: bool = False, improvement_tol: float = 1e-12,
                 keep_policies: bool = False, optimal: dp.OptimalBundle | None = None) -> IterateLog:
    """Drive ``step`` for ``n_iters`` iterations and log exact per-iterate quantities.

    ``step(pi, bundle)`` returns the next policy given the current one and its
    exact value bundle.  ``tau`` only enters the FR quantities that are logged.
    """
    rho = mdp.rho if rho is None else np.asarray(rho, float)
    mdp_rho = mdp.with_rho(rho)
    lam = pi0.reference.weights
    gamma = mdp.gamma

    opt = optimal or dp.optimal_values(mdp, tol=1e-12)
    star = opt.pi_star.probs
    v_star = opt.v_star
    d_star = dp.occupancy(mdp, star, rho)

    out = IterateLog(tau=tau, tau_condition=tau_condition(mdp, tau))
    pi = pi0
    bundle = dp.evaluate(mdp_rho, pi)
    v0 = bundle.v
    out.v_star_at_rho = float(rho @ v_star)
    out.alpha = float(d_star @ (v_star - v0))
    out.alpha_statement = float(d_star @ (v0 - v_star))
    out.integrated_fr2_initial = float(d_star @ geometry.fr2_squared_densities(star, pi0.probs, lam))
    out.y0 = float(d_star @ geometry.bregman_chi2(star, pi0.probs, lam))
    out.proof_constant = (out.alpha + out.y0 / tau) / (1.0 - gamma)
    out.bound_constant = (out.integrated_fr2_initial / tau + out.alpha) / (1.0 - gamma)

    value = float(rho @ bundle.v)
    out.value_at_rho.append(value)
    out.improvement.append(float("nan"))
    out.integrated_fr2_step.append(float("nan"))
    out.surrogate_gain.append(float("nan"))
    out.bound_rhs.append(float("inf"))
    out.gap_to_target.append(out.v_star_at_rho - value)
    out.wallclock_us.append(0)
    if keep_policies:
        out.policies.append(pi)

    for n in range(1, n_iters + 1):
        t0 = time.perf_counter_ns()
        new = step(pi, bundle)
        new_bundle = dp.evaluate(mdp_rho, new)
        elapsed = (time.perf_counter_ns() - t0) // 1000
        fr_int, gain = _step_record(lam, tau, bundle, pi.probs, new.probs)
        new_value = float(rho @ new_bundle.v)
        imp = new_value - value
        gap = out.v_star_at_rho - new_value
        bound = out.bound_constant / n if certify_bound else float("nan")
        out.value_at_rho.append(new_value)
        out.improvement.append(imp)
        out.integrated_fr2_step.append(fr_int)
        out.surrogate_gain.append(gain)
        out.bound_rhs.append(bound)
        out.gap_to_target.append(gap)
        out.wallclock_us.append(int(elapsed))
        if certify_improvement and out.tau_condition and imp < -improvement_tol:
            out.improvement_violations.append((n, imp))
        if certify_bound and out.tau_condition and gap > bound + 1e-9:
            out.bound_violations.append((n, gap, bound))
        if keep_policies:
            out.policies.append(new)
        pi, bundle, value = new, new_bundle, new_value

    if out.improvement_violations or out.bound_violations:
        log.warning("certificate failures: %d improvement, %d bound",
                    len(out.improvement_violations), len(out.bound_violations))
    return out


def run_fr_ppo(mdp: TabularMdp, pi0: Policy, config: SolverConfig, rho=None,
               keep_policies: bool = False, optimal: dp.OptimalBundle | None = None) -> IterateLog:
    """Run ``config.max_iters`` FR-PPO steps and certify improvement and the O(1/n) gap bound.

    The gap bound uses an optimal deterministic policy as comparator:

        (V* - V^n)(rho) <= [ (1/tau) int FR^2(pi*^2, pi0^2) d^{pi*} + alpha ] / (n (1 - gamma))

    with alpha = int (V* - V^0) d^{pi*}.  Violations are recorded, not raised.
    """
    tau = config.resolve_tau(mdp)
    lam = pi0.reference.weights

    def step(pi, bundle):
        return pi.replace(prox_rows(bundle.adv, pi.probs, lam, tau))

    return run_iterates(mdp, pi0, step, config.max_iters, tau, rho,
                        certify_improvement=True, certify_bound=True,
                        improvement_tol=config.improvement_tol,
                        keep_policies=keep_policies, optimal=optimal)


# -- theorem checks ----------------------------------------------------------

def pointwise_estimate_check(mdp: TabularMdp, pi_n: Policy, pi_next: Policy, tau: float) -> np.ndarray:
    """Per-state slack of (V^{n+1} - V^n)(s) >= sum_a A_n (pi_{n+1} - pi_n) - D_h(pi_{n+1} | pi_n) / tau."""
    lam = pi_n.reference.weights
    v_n = dp.policy_eval(mdp, pi_n)
    v_next = dp.policy_eval(mdp, pi_next)
    _, adv = dp.q_and_advantage(mdp, pi_n, v_n)
    lin = np.sum(adv * (pi_next.probs - pi_n.probs), axis=1)
    breg = geometry.bregman_chi2(pi_next.probs, pi_n.probs, lam)
    return (v_next - v_n) - (lin - breg / tau)


def three_point_check(adv_row, pi_n_row, probe_row, lam, tau, m_bar=None):
    """Slack of the Bregman three-point inequality at the prox solution.

    With G(m) = tau sum_a A(a) (m - pi_n)(a) and m_bar the prox output:
        G(m') - D(m'|pi_n) <= G(m_bar) - D(m'|m_bar) - D(m_bar|pi_n).
    ``probe_row`` may be a stack of probes.
    """
    adv_row = np.asarray(adv_row, float)
    pi_n_row = np.asarray(pi_n_row, float)
    if m_bar is None:
        m_bar = prox_step_state(adv_row, pi_n_row, lam, tau)
    probe = np.asarray(probe_row, float)

    def G(m):
        return tau * ((m - pi_n_row) @ adv_row)

    lhs = G(probe) - geometry.bregman_chi2(probe, pi_n_row, lam)
    rhs = G(m_bar) - geometry.bregman_chi2(probe, m_bar, lam) - geometry.bregman_chi2(m_bar, pi_n_row, lam)
    return rhs - lhs


# -- parametrized variant -----------------------------------------------------

def softmax_surrogate(theta, theta_n, adv_n, d_n, lam, tau) -> float:
    """State-weighted FR surrogate of the softmax policy at ``theta`` around ``theta_n``."""
    pi = softmax_rows(theta, lam)
    pi_n = softmax_rows(theta_n, lam)
    rows = np.sum(adv_n * pi, axis=1) - geometry.fr2_squared_densities(pi, pi_n, lam) / (2.0 * tau)
    return float(d_n @ rows)


def softmax_surrogate_grad(theta, theta_n, adv_n, d_n, lam, tau) -> np.ndarray:
    pi = softmax_rows(theta, lam)
    pi_n = softmax_rows(theta_n, lam)
    u = adv_n - (4.0 / tau) * (pi - pi_n) / lam
    # softmax Jacobian: d pi_b / d theta_c = pi_b (delta_bc - pi_c)
    g = pi * (u - np.sum(pi * u, axis=1, keepdims=True))
    return d_n[:, None] * g


@dataclass(frozen=True)
class ParametrizedStep:
    policy: SoftmaxPolicy
    surrogate: float
    inner_steps: int


def parametrized_surrogate_step(mdp: TabularMdp, sp: SoftmaxPolicy, config: SolverConfig,
                                rho=None, max_inner: int = 200, stop_tol: float = 1e-10,
                                armijo_c: float = 1e-4, init_step: float = 1.0) -> ParametrizedStep:
    """Gradient ascent with Armijo backtracking on the FR surrogate in logit space.

    The surrogate is zero at the current logits, so every accepted step keeps
    it nonnegative.
    """
    rho = mdp.rho if rho is None else np.asarray(rho, float)
    tau = config.resolve_tau(mdp)
    lam = sp.reference.weights
    theta_n = np.array(sp.theta)
    pi_n = softmax_rows(theta_n, lam)
    bundle = dp.evaluate(mdp.with_rho(rho), pi_n)
    adv, d_n = bundle.adv, bundle.occupancy

    def f(t):
        return softmax_surrogate(t, theta_n, adv, d_n, lam, tau)

    theta = theta_n.copy()
    val = f(theta)
    step = init_step
    steps = 0
    for steps in range(1, max_inner + 1):
        g = softmax_surrogate_grad(theta, theta_n, adv, d_n, lam, tau)
        if not np.all(np.isfinite(g)):
            raise InvalidParameter("non-finite surrogate gradient")
        gg = float(np.sum(g * g))
        if gg == 0.0:
            break
        t = step
        while True:
            cand = theta + t * g
            cand_val = f(cand) if np.all(np.isfinite(cand)) else -np.inf
            if np.isfinite(cand_val) and cand_val >= val + armijo_c * t * gg:
                break
            t *= 0.5
            if t < 1e-20:
                cand = None
                break
        if cand is None:
            break
        gain = cand_val - val
        theta, val = cand, cand_val
        # Let the step grow back after a successful line search.
        step = min(2.0 * t, 1e6)
        if gain <= stop_tol:
            break
    return ParametrizedStep(SoftmaxPolicy(theta, sp.reference), val, steps)
