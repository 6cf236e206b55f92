"""Exact dynamic programming for tabular MDPs.

Everything here is computed with dense direct solves, so results are exact up
to floating point and serve as the oracle for the optimizers built on top.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mdp import InvalidInput, NumericBreakdown, Policy, TabularMdp


@dataclass(frozen=True)
class ValueBundle:
    v: np.ndarray
    q: np.ndarray
    adv: np.ndarray
    occupancy: np.ndarray
    induced_kernel: np.ndarray

    def value_at(self, rho) -> float:
        return float(np.dot(rho, self.v))


@dataclass(frozen=True)
class OptimalBundle:
    v_star: np.ndarray
    q_star: np.ndarray
    selector: np.ndarray
    pi_star: Policy


def _probs(mdp: TabularMdp, pi) -> np.ndarray:
    probs = pi.probs if isinstance(pi, Policy) else np.asarray(pi, dtype=float)
    if probs.shape != (mdp.n_states, mdp.n_actions):
        raise InvalidInput(
            f"policy shape {probs.shape} does not match MDP ({mdp.n_states}, {mdp.n_actions})"
        )
    return probs


def induced_kernel(mdp: TabularMdp, pi) -> np.ndarray:
    """State-to-state kernel ``P_pi[s, s'] = sum_a pi(a|s) P(s'|s, a)``."""
    probs = _probs(mdp, pi)
    return np.einsum("sa,sat->st", probs, mdp.transition)


def _solve(mat: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    try:
        out = np.linalg.solve(mat, rhs)
    except np.linalg.LinAlgError as exc:
        raise NumericBreakdown(str(exc)) from exc
    if not np.all(np.isfinite(out)):
        raise NumericBreakdown("non-finite solution")
    return out


def policy_eval(mdp: TabularMdp, pi) -> np.ndarray:
    """Solve ``(I - gamma P_pi) V = r_pi``."""
    probs = _probs(mdp, pi)
    r_pi = np.sum(mdp.reward * probs, axis=1)
    if mdp.gamma == 0.0:
        return r_pi
    p_pi = induced_kernel(mdp, probs)
    return _solve(np.eye(mdp.n_states) - mdp.gamma * p_pi, r_pi)


def q_and_advantage(mdp: TabularMdp, pi, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    probs = _probs(mdp, pi)
    v = np.asarray(v, dtype=float)
    if v.shape != (mdp.n_states,):
        raise InvalidInput("value vector has the wrong length")
    q = mdp.reward + mdp.gamma * (mdp.transition @ v)
    # Subtract sum_a pi Q rather than V itself so the advantage is centred to
    # rounding even when V carries solver error.
    adv = q - np.sum(q * probs, axis=1, keepdims=True)
    return q, adv


def occupancy(mdp: TabularMdp, pi, rho=None) -> np.ndarray:
    """Normalized discounted visitation ``d^T = (1 - gamma) rho^T (I - gamma P_pi)^-1``."""
    rho = mdp.rho if rho is None else np.asarray(rho, dtype=float)
    if mdp.gamma == 0.0:
        return rho.copy()
    p_pi = induced_kernel(mdp, pi)
    d = _solve((np.eye(mdp.n_states) - mdp.gamma * p_pi).T, (1.0 - mdp.gamma) * rho)
    # Clip tiny negative rounding; the exact solution is nonnegative.
    return np.clip(d, 0.0, None)


def evaluate(mdp: TabularMdp, pi, rho=None) -> ValueBundle:
    """All exact quantities for one policy in one pass."""
    probs = _probs(mdp, pi)
    v = policy_eval(mdp, probs)
    q, adv = q_and_advantage(mdp, probs, v)
    return ValueBundle(
        v=v,
        q=q,
        adv=adv,
        occupancy=occupancy(mdp, probs, rho),
        induced_kernel=induced_kernel(mdp, probs),
    )


def optimal_values(mdp: TabularMdp, tol: float = 1e-10, max_iter: int = 1_000_000) -> OptimalBundle:
    """Value iteration to within ``tol`` of V*, then a policy-iteration polish.

    The polish evaluates the greedy policy exactly and repeats the greedy step
    until the policy is stable, so the returned ``v_star`` is V* to machine
    precision whenever the loop terminates.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    gamma, r, P = mdp.gamma, mdp.reward, mdp.transition
    v = np.zeros(mdp.n_states)
    if gamma == 0.0:
        v = r.max(axis=1)
    else:
        stop = tol * (1.0 - gamma) / (2.0 * gamma)
        for _ in range(max_iter):
            v_new = (r + gamma * (P @ v)).max(axis=1)
            delta = np.max(np.abs(v_new - v))
            v = v_new
            if delta <= stop:
                break

    selector = np.argmax(r + gamma * (P @ v), axis=1)
    for _ in range(10 * mdp.n_states * mdp.n_actions + 10):
        pi = np.zeros((mdp.n_states, mdp.n_actions))
        pi[np.arange(mdp.n_states), selector] = 1.0
        v_pi = policy_eval(mdp, pi)
        q = r + gamma * (P @ v_pi)
        best = q.max(axis=1)
        # Keep the incumbent action unless another one is strictly better, so
        # floating-point ties cannot make the loop cycle.
        incumbent = q[np.arange(mdp.n_states), selector]
        improve = best > incumbent + 1e-12 * (1.0 + np.abs(best))
        if not np.any(improve):
            break
        selector = np.where(improve, np.argmax(q, axis=1), selector)
    # Lowest-index tie-breaking on the final Q*.
    ties = q >= best[:, None] - 1e-12 * (1.0 + np.abs(best[:, None]))
    selector = np.argmax(ties, axis=1)
    pi = np.zeros((mdp.n_states, mdp.n_actions))
    pi[np.arange(mdp.n_states), selector] = 1.0
    v_star = policy_eval(mdp, pi)
    q_star = r + gamma * (P @ v_star)
    return OptimalBundle(v_star=v_star, q_star=q_star, selector=selector, pi_star=Policy(pi))


def performance_difference(mdp: TabularMdp, pi_new, pi_old, rho=None) -> tuple[float, float]:
    """Both sides of the performance-difference identity.

    ``lhs`` subtracts two independent policy evaluations; ``rhs`` integrates the
    old policy's advantage against the new policy's occupancy.
    """
    rho = mdp.rho if rho is None else np.asarray(rho, dtype=float)
    new, old = _probs(mdp, pi_new), _probs(mdp, pi_old)
    lhs = float(rho @ policy_eval(mdp, new) - rho @ policy_eval(mdp, old))
    v_old = policy_eval(mdp, old)
    _, adv = q_and_advantage(mdp, old, v_old)
    d_new = occupancy(mdp, new, rho)
    rhs = float(d_new @ np.sum(adv * (new - old), axis=1)) / (1.0 - mdp.gamma)
    return lhs, rhs


def flat_derivative_check(mdp: TabularMdp, pi, pi_prime, rho=None, eps: float = 1e-4) -> tuple[float, float]:
    """Directional finite difference of ``V(rho)`` toward ``pi_prime`` versus the advantage formula."""
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    rho = mdp.rho if rho is None else np.asarray(rho, dtype=float)
    base, other = _probs(mdp, pi), _probs(mdp, pi_prime)
    mixed = base + eps * (other - base)
    # V_mixed - V_base solves (I - gamma P_mixed) dV = r_mixed - r_base + gamma (P_mixed - P_base) V_base,
    # and both differences are eps times a direction; solving for dV / eps avoids the cancellation
    # of subtracting two nearly equal values, which swamps the O(eps) remainder below eps ~ 1e-5.
    v_base = policy_eval(mdp, base)
    direction = np.sum(mdp.reward * (other - base), axis=1)
    direction = direction + mdp.gamma * np.einsum("sa,sat,t->s", other - base, mdp.transition, v_base)
    lhs = np.eye(mdp.n_states) - mdp.gamma * induced_kernel(mdp, mixed)
    fd = float(rho @ _solve(lhs, direction))
    bundle = evaluate(mdp, base, rho)
    analytic = float(bundle.occupancy @ np.sum(bundle.adv * (other - base), axis=1)) / (1.0 - mdp.gamma)
    return fd, analytic
