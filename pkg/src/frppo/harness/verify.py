"""Seeded property sweeps that certify the identities and theorems numerically.

Every sweep draws instance ``i`` from ``derive_seed(seed, i)`` so a failure can be
replayed from the printed seed alone.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import dp, fr_ppo, geometry, oracles, surrogates
from ..mdp import SoftmaxPolicy, softmax_rows, uniform_policy
from ..rng import derive_seed
from ..sampling import random_instance, random_policy, random_reference


@dataclass
class SuiteResult:
    name: str
    checks: int = 0
    max_violation: float = 0.0
    tolerance: float = 0.0
    failing_seeds: list = field(default_factory=list)
    notes: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.failing_seeds

    def record(self, seed: int, error: float, ok: bool) -> None:
        self.checks += 1
        if np.isfinite(error):
            self.max_violation = max(self.max_violation, float(error))
        if not ok and seed not in self.failing_seeds:
            self.failing_seeds.append(seed)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        out = f"{self.name:<16} checks={self.checks:<8d} max_err={self.max_violation:.3e} tol={self.tolerance:.0e} {status}"
        if self.failing_seeds:
            out += f" first_failing_seed={self.failing_seeds[0]}"
        return out


def _pair(inst):
    S, A = inst.mdp.n_states, inst.mdp.n_actions
    pi = random_policy(inst.rng, S, A, inst.reference)
    pi2 = random_policy(inst.rng, S, A, inst.reference)
    return pi, pi2


def identity(trials: int, seed: int, tol: float = 1e-9) -> SuiteResult:
    res = SuiteResult("identity", tolerance=tol)
    for i in range(trials):
        inst = random_instance(seed, i)
        pi, pi2 = _pair(inst)
        lhs, rhs = dp.performance_difference(inst.mdp, pi2, pi)
        err = abs(lhs - rhs) / (1.0 + abs(lhs))
        res.record(inst.seed, err, err <= tol)
    return res


def bounds(trials: int, seed: int, tol: float = 1e-9, order_tol: float = 1e-12) -> SuiteResult:
    """Same triples as ``identity``; error is the worst bound shortfall rhs - lhs."""
    res = SuiteResult("bounds", tolerance=tol)
    res.notes["vacuous_fr2"] = 0
    for i in range(trials):
        inst = random_instance(seed, i)
        pi, pi2 = _pair(inst)
        rep = surrogates.bound_report(inst.mdp, pi2, pi)
        shortfall = max(-s for s in rep.slacks().values())
        order = max(rep.rhs_max_tv2 - rep.rhs_int_tv2, rep.rhs_fr2 - rep.rhs_int_tv2)
        res.record(inst.seed, max(shortfall, order), not rep.violations(tol, order_tol))
        res.notes["vacuous_fr2"] += rep.rhs_fr2 < -2.0 * inst.mdp.reward_sup / (1.0 - inst.mdp.gamma)
    return res


def fr_ppo_sweep(trials: int, seed: int, iters: int = 100, keep_policies: bool = False):
    """FR-PPO runs with automatic step on random MDPs (<= 20 states, <= 6 actions)."""
    out = []
    for i in range(trials):
        inst = random_instance(seed, i, max_states=20, max_actions=6)
        pi0 = uniform_policy(inst.mdp, inst.reference)
        cfg = fr_ppo.SolverConfig(max_iters=iters, tau_mode="auto")
        out.append((inst, fr_ppo.run_fr_ppo(inst.mdp, pi0, cfg, keep_policies=keep_policies)))
    return out


def improvement(trials: int, seed: int, iters: int = 100, tol: float = 1e-12, runs=None) -> SuiteResult:
    res = SuiteResult("improvement", tolerance=tol)
    for inst, lg in runs if runs is not None else fr_ppo_sweep(trials, seed, iters):
        imps = np.array(lg.improvement[1:])
        for imp in imps:
            res.record(inst.seed, max(-imp, 0.0), imp >= -tol)
        res.notes["min_improvement"] = min(res.notes.get("min_improvement", np.inf), float(imps.min(initial=np.inf)))
    return res


def convergence(trials: int, seed: int, iters: int = 100, tol: float = 1e-9, runs=None) -> SuiteResult:
    """gap_n <= bound_rhs(n) and n * gap_n <= (alpha + y0 / tau) / (1 - gamma) for n >= 1."""
    res = SuiteResult("convergence", tolerance=tol)
    for inst, lg in runs if runs is not None else fr_ppo_sweep(trials, seed, iters):
        for n in range(1, lg.n_iters + 1):
            gap = lg.gap_to_target[n]
            e1 = gap - lg.bound_rhs[n]
            e2 = n * gap - lg.proof_constant
            err = max(e1, e2)
            res.record(inst.seed, max(err, 0.0), err <= tol)
    return res


def pointwise(trials: int, seed: int, iters: int = 100, tol: float = 1e-9, runs=None) -> SuiteResult:
    res = SuiteResult("pointwise", tolerance=tol)
    if runs is None:
        runs = fr_ppo_sweep(trials, seed, iters, keep_policies=True)
    for inst, lg in runs:
        for a, b in zip(lg.policies[:-1], lg.policies[1:]):
            slack = fr_ppo.pointwise_estimate_check(inst.mdp, a, b, lg.tau)
            worst = float(slack.min())
            res.record(inst.seed, max(-worst, 0.0), worst >= -tol)
    return res


def _prox_case(seed: int):
    rng = np.random.default_rng(seed)
    A = int(rng.integers(1, 7))
    lam = random_reference(rng, A).weights
    pi = rng.dirichlet(np.full(A, float(rng.choice([0.3, 1.0, 3.0]))))
    if A > 1 and rng.random() < 0.3:
        # put some rows on the boundary of the simplex
        pi[rng.integers(A)] = 0.0
        pi = pi / pi.sum()
    adv = rng.normal(size=A) * float(rng.choice([0.1, 1.0, 10.0]))
    adv -= adv @ pi
    tau = float(rng.choice([0.01, 0.1, 1.0, 10.0]))
    return rng, A, lam, pi, adv, tau


def _probes(rng, A, n):
    probes = rng.dirichlet(np.ones(A), size=n)
    probes[: min(A, n)] = np.eye(A)[: min(A, n)]
    return probes


def prox(trials: int, seed: int, tol: float = 1e-8, n_probes: int = 10_000) -> SuiteResult:
    res = SuiteResult("prox", tolerance=tol)
    res.notes.update(max_kkt=0.0, max_oracle_gap=0.0)
    for i in range(trials):
        s = derive_seed(seed, i)
        rng, A, lam, pi, adv, tau = _prox_case(s)
        m = fr_ppo.prox_step_state(adv, pi, lam, tau)
        ref = oracles.prox_projected_gradient(adv, pi, lam, tau)
        gap = float(np.max(np.abs(m - ref)))
        stat, sign = fr_ppo.kkt_residual(m, adv, pi, lam, tau)
        f_m = float(fr_ppo.prox_objective(m, adv, pi, lam, tau))
        f_ref = float(fr_ppo.prox_objective(ref, adv, pi, lam, tau))
        f_probe = float(np.max(fr_ppo.prox_objective(_probes(rng, A, n_probes), adv, pi, lam, tau)))
        probe_excess = f_probe - f_m - 1e-12 * (1.0 + abs(f_m))
        ok = gap <= tol and stat <= tol and sign <= tol and f_m >= f_ref - tol and probe_excess <= 0.0
        res.notes["max_kkt"] = max(res.notes["max_kkt"], stat, sign)
        res.notes["max_oracle_gap"] = max(res.notes["max_oracle_gap"], gap)
        res.record(s, max(gap, stat, sign, probe_excess, 0.0), ok)
    return res


def three_point(trials: int, seed: int, tol: float = 1e-10, n_probes: int = 1000) -> SuiteResult:
    res = SuiteResult("three-point", tolerance=tol)
    for i in range(trials):
        s = derive_seed(seed, i)
        rng, A, lam, pi, adv, tau = _prox_case(s)
        slack = fr_ppo.three_point_check(adv, pi, _probes(rng, A, n_probes), lam, tau)
        worst = float(np.min(slack))
        res.record(s, max(-worst, 0.0), worst >= -tol)
    return res


def geometry_suite(trials: int, seed: int, tol: float = 1e-12) -> SuiteResult:
    res = SuiteResult("geometry", tolerance=tol)
    rng = np.random.default_rng(derive_seed(seed, 0))
    # all random pairs drawn at once, grouped by action count
    per_a = np.bincount(rng.integers(1, 7, size=trials), minlength=7)
    for A, count in enumerate(per_a):
        if count == 0:
            continue
        lam = np.stack([random_reference(rng, A).weights for _ in range(count)])
        mu = rng.dirichlet(np.ones(A), size=count)
        nu = rng.dirichlet(np.ones(A), size=count)
        if A > 1:
            # zero out one coordinate of mu in a third of the pairs
            hole = rng.random(count) < 1 / 3
            mu[hole, rng.integers(A, size=hole.sum())] = 0.0
            mu /= mu.sum(axis=1, keepdims=True)
        frs = geometry.fr2_squared_densities(mu, nu, lam)
        breg = geometry.bregman_chi2(mu, nu, lam)
        t2 = geometry.tv(mu, nu) ** 2
        kl = geometry.kl(mu, nu)
        e_id = np.abs(breg - 0.5 * frs)
        e_cs = t2 - frs / 16.0
        e_pk = np.where(np.isfinite(kl), t2 - 0.5 * kl, -np.inf)
        for k in range(count):
            err = max(e_id[k], e_cs[k], e_pk[k])
            res.record(seed, max(err, 0.0), err <= tol)
    # equality case: disjoint supports on two actions, uniform reference
    t2 = float(geometry.tv([1.0, 0.0], [0.0, 1.0])) ** 2
    fr16 = float(geometry.fr2_squared_densities([1.0, 0.0], [0.0, 1.0], [0.5, 0.5])) / 16.0
    res.record(seed, abs(t2 - fr16), t2 == 1.0 and fr16 == 1.0)
    return res


def flat_derivative(trials: int, seed: int, eps0: float = 1e-3, eps_min: float = 1e-6,
                    lo: float = 1.8, hi: float = 2.2) -> SuiteResult:
    """Halve eps from ``eps0`` down to ``eps_min``; the finite-difference error must halve too."""
    res = SuiteResult("flat-derivative", tolerance=0.2)
    ratios = []
    for i in range(trials):
        # V is affine in pi with one state, one action or gamma = 0; the
        # first-order remainder then vanishes and the ratio is undefined.
        inst = random_instance(seed, i, max_states=10, max_actions=5, gamma_max=0.9,
                               min_states=2, min_actions=2, gamma_min=0.3)
        pi, pi2 = _pair(inst)
        eps, gaps = eps0, []
        while eps >= eps_min:
            fd, an = dp.flat_derivative_check(inst.mdp, pi, pi2, eps=eps)
            gaps.append(fd - an)
            eps *= 0.5
        for a, b in zip(gaps[:-1], gaps[1:]):
            ratio = a / b if b != 0.0 else np.inf
            ratios.append(ratio)
            res.record(inst.seed, abs(ratio - 2.0), lo <= ratio <= hi)
    res.notes["ratio_range"] = (min(ratios, default=np.nan), max(ratios, default=np.nan))
    return res


def parametrized(trials: int, seed: int, tol: float = 1e-10, grad_tol: float = 1e-5,
                 h: float = 1e-5, n_grad: int = 20) -> SuiteResult:
    """Softmax FR steps never lose value; the analytic surrogate gradient matches central differences."""
    res = SuiteResult("parametrized", tolerance=tol)
    res.notes["max_grad_rel_err"] = 0.0
    for i in range(trials):
        inst = random_instance(seed, i, max_states=12, max_actions=5)
        mdp, ref = inst.mdp, inst.reference
        theta = inst.rng.normal(size=(mdp.n_states, mdp.n_actions))
        sp = SoftmaxPolicy(theta, ref)
        cfg = fr_ppo.SolverConfig(tau_mode="auto")
        step = fr_ppo.parametrized_surrogate_step(mdp, sp, cfg)
        v_old = float(mdp.rho @ dp.policy_eval(mdp, softmax_rows(theta, ref.weights)))
        v_new = float(mdp.rho @ dp.policy_eval(mdp, softmax_rows(step.policy.theta, ref.weights)))
        ok = v_new >= v_old - tol and step.surrogate >= 0.0
        err = max(v_old - v_new, 0.0)
        if i < n_grad:
            rel = _grad_rel_error(inst, h)
            res.notes["max_grad_rel_err"] = max(res.notes["max_grad_rel_err"], rel)
            ok = ok and rel <= grad_tol
        res.record(inst.seed, err, ok)
    return res


def _grad_rel_error(inst, h: float) -> float:
    mdp, lam = inst.mdp, inst.reference.weights
    S, A = mdp.n_states, mdp.n_actions
    theta_n = inst.rng.normal(size=(S, A))
    theta = theta_n + inst.rng.normal(size=(S, A))
    bundle = dp.evaluate(mdp, softmax_rows(theta_n, lam))
    tau = fr_ppo.auto_tau(mdp)
    args = (theta_n, bundle.adv, bundle.occupancy, lam, tau)
    g = fr_ppo.softmax_surrogate_grad(theta, *args)
    fd = np.zeros_like(theta)
    for idx in np.ndindex(S, A):
        e = np.zeros_like(theta)
        e[idx] = h
        fd[idx] = (fr_ppo.softmax_surrogate(theta + e, *args) - fr_ppo.softmax_surrogate(theta - e, *args)) / (2 * h)
    norm = np.linalg.norm(g)
    if norm == 0.0:
        return float(np.linalg.norm(fd))
    return float(np.linalg.norm(fd - g) / norm)


SUITE_FUNCS = {
    "identity": identity,
    "bounds": bounds,
    "improvement": improvement,
    "convergence": convergence,
    "prox": prox,
    "geometry": geometry_suite,
    "pointwise": pointwise,
    "three-point": three_point,
    "flat-derivative": flat_derivative,
    "parametrized": parametrized,
}


def run_suite(name: str, trials: int, seed: int) -> SuiteResult:
    try:
        fn = SUITE_FUNCS[name]
    except KeyError:
        raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITE_FUNCS)}") from None
    return fn(trials, seed)
