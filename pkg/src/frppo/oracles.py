"""Independent reference computations used to cross-check the exact solvers.

None of these share code paths with the quantities they check: values and
occupancies come from truncated power series instead of linear solves, and
the prox oracle runs accelerated projected gradient in probability space
instead of the closed-form weighted projection in density space.
"""
from __future__ import annotations

import math

import numpy as np

from .mdp import TabularMdp


def _horizon(gamma: float, scale: float, tol: float) -> int:
    if gamma == 0.0:
        return 1
    if scale == 0.0:
        return 1
    # gamma^N * scale / (1 - gamma) < tol
    return max(1, int(math.ceil(math.log(tol * (1.0 - gamma) / scale) / math.log(gamma))) + 1)


def series_value(mdp: TabularMdp, probs, tol: float = 1e-13) -> np.ndarray:
    """V = sum_n gamma^n P_pi^n r_pi, truncated once the tail is below ``tol``."""
    probs = np.asarray(probs, float)
    r_pi = np.sum(mdp.reward * probs, axis=1)
    p_pi = np.einsum("sa,sat->st", probs, mdp.transition)
    n = _horizon(mdp.gamma, float(np.max(np.abs(r_pi), initial=0.0)), tol)
    v = np.zeros(mdp.n_states)
    term = r_pi.copy()
    for _ in range(n):
        v += term
        term = mdp.gamma * (p_pi @ term)
    return v


def series_occupancy(mdp: TabularMdp, probs, rho=None, tol: float = 1e-13) -> np.ndarray:
    """d = (1 - gamma) sum_n gamma^n rho^T P_pi^n, truncated."""
    probs = np.asarray(probs, float)
    rho = mdp.rho if rho is None else np.asarray(rho, float)
    p_pi = np.einsum("sa,sat->st", probs, mdp.transition)
    n = _horizon(mdp.gamma, 1.0, tol)
    d = np.zeros(mdp.n_states)
    term = (1.0 - mdp.gamma) * rho
    for _ in range(n):
        d += term
        term = mdp.gamma * (term @ p_pi)
    return d


def _project_simplex(y: np.ndarray) -> np.ndarray:
    # Michelot-style fixed point: repeatedly drop negative coordinates.
    active = np.ones(y.size, dtype=bool)
    while True:
        theta = (np.sum(y[active]) - 1.0) / np.count_nonzero(active)
        x = np.where(active, y - theta, 0.0)
        neg = active & (x < 0.0)
        if not np.any(neg):
            return np.maximum(x, 0.0)
        active &= ~neg


def prox_projected_gradient(adv_row, pi_row, lam, tau, max_iter: int = 200_000, tol: float = 1e-15):
    """Maximize ``A.m - (2/tau) sum (m - pi)^2 / lam`` over the simplex by FISTA with restarts."""
    adv = np.asarray(adv_row, float)
    pi = np.asarray(pi_row, float)
    lam = np.asarray(lam, float)
    curv = 4.0 / (tau * lam)
    step = 1.0 / np.max(curv)

    def obj(m):
        return float(adv @ m - 0.5 * np.sum(curv * (m - pi) ** 2))

    x = pi.copy()
    y = x.copy()
    t = 1.0
    f_prev = obj(x)
    for _ in range(max_iter):
        grad = adv - curv * (y - pi)
        x_new = _project_simplex(y + step * grad)
        f_new = obj(x_new)
        if f_new < f_prev:
            # adaptive restart: drop momentum, retake a plain projected step from x
            t = 1.0
            grad = adv - curv * (x - pi)
            x_new = _project_simplex(x + step * grad)
            f_new = obj(x_new)
        t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        y = x_new + ((t - 1.0) / t_new) * (x_new - x)
        x, t, f_prev = x_new, t_new, f_new
        # stop on the projected-gradient residual at x; a small x step alone can come
        # from an extrapolated point stuck on a vertex
        plain = _project_simplex(x + step * (adv - curv * (x - pi)))
        if np.max(np.abs(plain - x)) < tol:
            break
    return x


def prox_grid_search_2(adv_row, pi_row, lam, tau, resolution: float = 1e-4) -> np.ndarray:
    """Brute-force maximizer over the 2-action simplex on a uniform grid."""
    adv = np.asarray(adv_row, float)
    pi = np.asarray(pi_row, float)
    lam = np.asarray(lam, float)
    n = int(round(1.0 / resolution))
    first = np.linspace(0.0, 1.0, n + 1)
    m = np.stack([first, 1.0 - first], axis=1)
    dens = (m - pi) / lam
    vals = m @ adv - (2.0 / tau) * np.sum(lam * dens * dens, axis=1)
    return m[int(np.argmax(vals))]
