import numpy as np
import pytest

from frppo.mdp import TabularMdp


def one_state(reward, gamma):
    """Single self-looping state with one reward per action."""
    r = np.atleast_2d(np.asarray(reward, dtype=float))
    A = r.shape[1]
    return TabularMdp(np.ones((1, A, 1)), r, gamma, np.ones(1))


def random_mdp(rng, S, A, gamma=0.9):
    P = rng.dirichlet(np.ones(S), size=(S, A))
    r = rng.uniform(-1.0, 1.0, size=(S, A))
    return TabularMdp(P, r, gamma, rng.dirichlet(np.ones(S)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def bandit():
    # 1 state, 2 actions, r = (1, 0), gamma = 0.5
    return one_state([1.0, 0.0], 0.5)
