"""Tabular policy optimization in the Fisher-Rao geometry, with exact-DP certification."""
from .dp import OptimalBundle, ValueBundle, evaluate, optimal_values, performance_difference, policy_eval
from .envs import EnvSpec, generate
from .fr_ppo import IterateLog, SolverConfig, fr_ppo_iterate, prox_step_state, run_fr_ppo
from .mdp import (
    Policy,
    ReferenceMeasure,
    SoftmaxPolicy,
    TabularMdp,
    softmax_to_policy,
    uniform_policy,
    validate_mdp,
)

__all__ = [
    "EnvSpec", "IterateLog", "OptimalBundle", "Policy", "ReferenceMeasure", "SoftmaxPolicy",
    "SolverConfig", "TabularMdp", "ValueBundle", "evaluate", "fr_ppo_iterate", "generate",
    "optimal_values", "performance_difference", "policy_eval", "prox_step_state", "run_fr_ppo",
    "softmax_to_policy", "uniform_policy", "validate_mdp",
]
