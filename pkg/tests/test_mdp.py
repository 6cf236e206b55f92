import json

import numpy as np
import pytest

from frppo.mdp import (
    InvalidInput,
    InvalidParameter,
    Policy,
    ReferenceMeasure,
    SoftmaxPolicy,
    TabularMdp,
    dump_mdp,
    load_mdp,
    softmax_to_policy,
    uniform_policy,
    validate_mdp,
)

from conftest import random_mdp


def two_by_two():
    P = np.array([[[1.0, 0.0], [0.0, 1.0]], [[0.5, 0.5], [0.2, 0.8]]])
    return TabularMdp(P, np.ones((2, 2)), 0.9, np.array([0.5, 0.5]))


def test_valid_mdp_has_no_violations():
    assert validate_mdp(two_by_two()) == []


def test_row_sum_violation_names_the_pair():
    m = two_by_two()
    P = m.transition.copy()
    P[1, 0] = [0.49, 0.49]
    out = validate_mdp(TabularMdp(P, m.reward, m.gamma, m.rho))
    assert len(out) == 1
    assert "transition[1][0]" in out[0]


def test_gamma_one_rejected():
    m = two_by_two()
    out = validate_mdp(TabularMdp(m.transition, m.reward, 1.0, m.rho))
    assert any("gamma out of range" in v for v in out)


def test_shape_mismatch_raises():
    with pytest.raises(InvalidInput):
        TabularMdp(np.ones((2, 2, 2)) / 2, np.ones((3, 2)), 0.5, np.ones(2) / 2)


def test_mdp_arrays_are_read_only():
    m = two_by_two()
    with pytest.raises(ValueError):
        m.reward[0, 0] = 5.0


@pytest.mark.parametrize("A, value", [(4, 0.25), (1, 1.0)])
def test_uniform_policy(A, value):
    mdp = TabularMdp(np.ones((3, A, 3)) / 3, np.zeros((3, A)), 0.5, np.ones(3) / 3)
    pi = uniform_policy(mdp)
    assert np.all(pi.probs == value)
    assert np.all(pi.probs.sum(axis=1) == 1.0)


def test_policy_rejects_bad_rows():
    with pytest.raises(InvalidParameter):
        Policy(np.array([[0.6, 0.6]]))
    with pytest.raises(InvalidParameter):
        Policy(np.array([[1.5, -0.5]]))


def test_policy_allows_boundary_rows():
    pi = Policy(np.array([[1.0, 0.0]]))
    assert np.allclose(pi.density, [[2.0, 0.0]])


def test_reference_measure_must_be_positive():
    with pytest.raises(InvalidParameter):
        ReferenceMeasure(np.array([1.0, 0.0]))


def test_softmax_uniform_and_shift_invariance():
    lam = ReferenceMeasure.uniform(3)
    assert np.allclose(softmax_to_policy(SoftmaxPolicy(np.zeros((2, 3)), lam)).probs, 1 / 3)
    theta = np.array([[0.3, -1.0, 2.0]])
    a = softmax_to_policy(SoftmaxPolicy(theta, lam)).probs
    b = softmax_to_policy(SoftmaxPolicy(theta + 17.0, lam)).probs
    assert np.allclose(a, b, atol=1e-15)


def test_softmax_log3():
    sp = SoftmaxPolicy(np.array([[np.log(3.0), 0.0]]), ReferenceMeasure(np.array([0.5, 0.5])))
    assert np.allclose(softmax_to_policy(sp).probs, [[0.75, 0.25]], atol=1e-15)


def test_softmax_large_logits_stay_finite():
    sp = SoftmaxPolicy(np.array([[800.0, 0.0, -800.0]]))
    assert np.allclose(softmax_to_policy(sp).probs, [[1.0, 0.0, 0.0]])


def test_softmax_nonfinite_logits_rejected():
    with pytest.raises(InvalidParameter):
        softmax_to_policy(SoftmaxPolicy(np.array([[np.nan, 0.0]])))


def test_json_round_trip(tmp_path, rng):
    mdp = random_mdp(rng, 4, 3)
    lam = ReferenceMeasure(np.array([0.2, 0.3, 0.5]))
    path = tmp_path / "m.json"
    dump_mdp(mdp, path, lam)
    back, lam2 = load_mdp(path)
    assert np.array_equal(back.transition, mdp.transition)
    assert np.array_equal(back.reward, mdp.reward)
    assert np.array_equal(back.rho, mdp.rho)
    assert back.gamma == mdp.gamma
    assert np.array_equal(lam2.weights, lam.weights)
    keys = list(json.loads(path.read_text()))
    assert keys == ["n_states", "n_actions", "gamma", "rho", "reward", "transition", "lambda"]
