import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frppo import dp, fr_ppo, oracles
from frppo.mdp import (
    InvalidInput,
    InvalidParameter,
    Policy,
    ReferenceMeasure,
    SoftmaxPolicy,
    TabularMdp,
    softmax_rows,
    uniform_policy,
)

from conftest import one_state, random_mdp


@st.composite
def prox_inputs(draw):
    A = draw(st.integers(1, 6))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    lam = 0.5 * rng.dirichlet(np.ones(A)) + 0.5 / A
    lam /= lam.sum()
    pi = rng.dirichlet(np.full(A, 0.5))
    adv = rng.normal(size=A) * draw(st.sampled_from([0.01, 1.0, 30.0]))
    tau = draw(st.sampled_from([1e-3, 0.1, 1.0, 10.0]))
    return adv, pi, lam, tau


def test_auto_tau():
    mdp = one_state([[2.0, -4.0]], 0.5)
    assert fr_ppo.auto_tau(mdp) == 0.25 / 4.0
    assert fr_ppo.tau_condition(mdp, fr_ppo.auto_tau(mdp))
    assert not fr_ppo.tau_condition(mdp, 1.0)
    assert fr_ppo.auto_tau(one_state([[0.0, 0.0]], 0.5)) == 1.0


def test_explicit_tau_must_be_positive():
    with pytest.raises(InvalidParameter):
        fr_ppo.SolverConfig(tau=0.0, tau_mode="explicit").resolve_tau(one_state([1.0], 0.5))


def test_prox_zero_or_constant_advantage_is_identity():
    lam = np.array([0.2, 0.3, 0.5])
    pi = np.array([0.1, 0.6, 0.3])
    assert np.allclose(fr_ppo.prox_step_state(np.zeros(3), pi, lam, 1.0), pi, atol=1e-15)
    assert np.allclose(fr_ppo.prox_step_state(np.full(3, 7.0), pi, lam, 1.0), pi, atol=1e-15)


def test_prox_worked_example():
    lam = np.array([0.5, 0.5])
    m = fr_ppo.prox_step_state(np.array([1.0, -1.0]), np.array([0.5, 0.5]), lam, 1.0)
    assert np.allclose(m, [0.625, 0.375], atol=1e-15)
    grid = oracles.prox_grid_search_2(np.array([1.0, -1.0]), np.array([0.5, 0.5]), lam, 1.0)
    assert np.max(np.abs(m - grid)) <= 1e-4


def test_prox_hits_boundary():
    lam = np.array([0.5, 0.5])
    m = fr_ppo.prox_step_state(np.array([10.0, -10.0]), np.array([0.5, 0.5]), lam, 1.0)
    assert m.tolist() == [1.0, 0.0]


def test_prox_rejects_bad_input():
    lam = np.array([0.5, 0.5])
    with pytest.raises(InvalidInput):
        fr_ppo.prox_step_state(np.array([np.nan, 0.0]), np.array([0.5, 0.5]), lam, 1.0)
    with pytest.raises(InvalidParameter):
        fr_ppo.prox_step_state(np.array([1.0, 0.0]), np.array([0.5, 0.5]), lam, 0.0)


@settings(max_examples=200, deadline=None)
@given(prox_inputs())
def test_prox_matches_oracle_and_kkt(inp):
    adv, pi, lam, tau = inp
    m = fr_ppo.prox_step_state(adv, pi, lam, tau)
    assert np.all(m >= 0.0) and abs(m.sum() - 1.0) <= 1e-12
    ref = oracles.prox_projected_gradient(adv, pi, lam, tau)
    assert np.max(np.abs(m - ref)) <= 1e-8
    stat, sign = fr_ppo.kkt_residual(m, adv, pi, lam, tau)
    scale = 1.0 + np.max(np.abs(fr_ppo.prox_target(adv, pi, lam, tau))) / tau
    assert stat <= 1e-10 * scale and sign <= 1e-10 * scale


@settings(max_examples=100, deadline=None)
@given(prox_inputs())
def test_three_point_holds(inp):
    adv, pi, lam, tau = inp
    rng = np.random.default_rng(0)
    probes = rng.dirichlet(np.ones(adv.size), size=200)
    assert np.min(fr_ppo.three_point_check(adv, pi, probes, lam, tau)) >= -1e-10


def test_three_point_at_solution_and_at_start():
    adv, pi, lam, tau = np.array([0.4, -0.1, 0.2]), np.array([0.2, 0.5, 0.3]), np.ones(3) / 3, 0.5
    m = fr_ppo.prox_step_state(adv, pi, lam, tau)
    assert fr_ppo.three_point_check(adv, pi, m, lam, tau) >= -1e-14
    assert fr_ppo.three_point_check(adv, pi, pi, lam, tau) >= -1e-14


def test_iterate_optimal_policy_fixed():
    # action 0 strictly dominant in both states
    P = np.zeros((2, 2, 2))
    P[:, 0, 0] = 1.0
    P[:, 1, 1] = 1.0
    r = np.array([[1.0, 0.0], [1.0, 0.0]])
    mdp = TabularMdp(P, r, 0.9, np.array([0.5, 0.5]))
    pi = Policy(np.array([[1.0, 0.0], [1.0, 0.0]]))
    out = fr_ppo.fr_ppo_iterate(mdp, pi, fr_ppo.SolverConfig(tau=1e-3, tau_mode="explicit"))
    assert np.max(np.abs(out.probs - pi.probs)) <= 1e-12


def test_iterate_zero_reward_unchanged(rng):
    mdp = random_mdp(rng, 4, 3)
    mdp = TabularMdp(mdp.transition, np.zeros((4, 3)), 0.9, mdp.rho)
    pi = Policy(rng.dirichlet(np.ones(3), size=4))
    assert np.allclose(fr_ppo.fr_ppo_iterate(mdp, pi, fr_ppo.SolverConfig()).probs, pi.probs, atol=1e-15)


def test_bandit_run(bandit):
    lg = fr_ppo.run_fr_ppo(bandit, uniform_policy(bandit), fr_ppo.SolverConfig(max_iters=30))
    assert lg.v_star_at_rho == pytest.approx(2.0)
    gaps = np.array(lg.gap_to_target)
    assert gaps[0] == pytest.approx(1.0)
    assert np.all(np.diff(gaps) <= 1e-15)
    assert gaps[-1] < gaps[0]
    assert lg.ok()


def test_zero_iterations(bandit):
    lg = fr_ppo.run_fr_ppo(bandit, uniform_policy(bandit), fr_ppo.SolverConfig(max_iters=0))
    assert lg.n_iters == 0
    assert lg.value_at_rho == [pytest.approx(1.0)]


@pytest.mark.parametrize("seed", range(10))
def test_run_certificates(seed):
    rng = np.random.default_rng(seed)
    mdp = random_mdp(rng, int(rng.integers(2, 12)), int(rng.integers(2, 5)), gamma=float(rng.uniform(0.1, 0.95)))
    lam = ReferenceMeasure(np.full(mdp.n_actions, 1.0 / mdp.n_actions))
    lg = fr_ppo.run_fr_ppo(mdp, uniform_policy(mdp, lam), fr_ppo.SolverConfig(max_iters=40), keep_policies=True)
    assert lg.tau_condition and lg.ok()
    assert np.min(lg.improvement[1:]) >= -1e-12
    # constants: the proof constant never exceeds the stated bound's numerator
    assert lg.proof_constant <= lg.bound_constant + 1e-12
    assert lg.alpha_statement == pytest.approx(-lg.alpha)
    for a, b in zip(lg.policies[:-1], lg.policies[1:]):
        assert np.min(fr_ppo.pointwise_estimate_check(mdp, a, b, lg.tau)) >= -1e-9


def test_pointwise_identical_policies(rng):
    mdp = random_mdp(rng, 3, 2)
    pi = uniform_policy(mdp)
    assert np.allclose(fr_ppo.pointwise_estimate_check(mdp, pi, pi, 1.0), 0.0, atol=1e-14)


def test_pointwise_one_state_by_hand(bandit):
    pi0 = uniform_policy(bandit)
    tau = fr_ppo.auto_tau(bandit)
    pi1 = fr_ppo.fr_ppo_iterate(bandit, pi0, fr_ppo.SolverConfig())
    slack = fr_ppo.pointwise_estimate_check(bandit, pi0, pi1, tau)[0]
    m = pi1.probs[0]
    # V = (m0 r0) / (1 - gamma) on one state; A = (0.5, -0.5); D = 2 sum lam (m/lam - 1/2 /lam)^2
    dv = 2.0 * m[0] - 1.0
    lin = 0.5 * (m[0] - 0.5) - 0.5 * (m[1] - 0.5)
    breg = 4.0 * np.sum(0.5 * ((m - 0.5) / 0.5) ** 2) / 2.0
    assert slack == pytest.approx(dv - (lin - breg / tau), abs=1e-13)
    assert slack >= 0.0


def test_softmax_gradient_matches_finite_differences(rng):
    mdp = random_mdp(rng, 4, 3, gamma=0.7)
    lam = np.array([0.2, 0.3, 0.5])
    theta_n = rng.normal(size=(4, 3))
    theta = theta_n + 0.3 * rng.normal(size=(4, 3))
    b = dp.evaluate(mdp, softmax_rows(theta_n, lam))
    tau = fr_ppo.auto_tau(mdp)
    g = fr_ppo.softmax_surrogate_grad(theta, theta_n, b.adv, b.occupancy, lam, tau)
    h = 1e-5
    fd = np.zeros_like(theta)
    for idx in np.ndindex(*theta.shape):
        e = np.zeros_like(theta)
        e[idx] = h
        fd[idx] = (fr_ppo.softmax_surrogate(theta + e, theta_n, b.adv, b.occupancy, lam, tau)
                   - fr_ppo.softmax_surrogate(theta - e, theta_n, b.adv, b.occupancy, lam, tau)) / (2 * h)
    assert np.linalg.norm(g - fd) <= 1e-5 * np.linalg.norm(fd)


def test_parametrized_step_zero_reward_keeps_theta(rng):
    mdp = random_mdp(rng, 3, 2)
    mdp = TabularMdp(mdp.transition, np.zeros((3, 2)), 0.9, mdp.rho)
    theta = rng.normal(size=(3, 2))
    out = fr_ppo.parametrized_surrogate_step(mdp, SoftmaxPolicy(theta), fr_ppo.SolverConfig())
    assert np.array_equal(out.policy.theta, theta)
    assert out.surrogate == 0.0


def test_parametrized_step_improves(rng):
    mdp = random_mdp(rng, 6, 3)
    sp = SoftmaxPolicy(rng.normal(size=(6, 3)))
    out = fr_ppo.parametrized_surrogate_step(mdp, sp, fr_ppo.SolverConfig())
    lam = sp.reference.weights
    v0 = mdp.rho @ dp.policy_eval(mdp, softmax_rows(sp.theta, lam))
    v1 = mdp.rho @ dp.policy_eval(mdp, softmax_rows(out.policy.theta, lam))
    assert out.surrogate > 0.0
    assert v1 >= v0 - 1e-10


def test_update_does_not_depend_on_rho(rng):
    mdp = random_mdp(rng, 6, 3)
    other = mdp.with_rho(rng.dirichlet(np.ones(6)))
    cfg = fr_ppo.SolverConfig(max_iters=15)
    a = fr_ppo.run_fr_ppo(mdp, uniform_policy(mdp), cfg, keep_policies=True)
    b = fr_ppo.run_fr_ppo(other, uniform_policy(other), cfg, keep_policies=True)
    for p, q in zip(a.policies, b.policies):
        assert np.array_equal(p.probs, q.probs)
