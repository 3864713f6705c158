"""Age-aware channel probing for a finite-state Markov channel.

Model a hidden Markov channel, track the age of the last channel
measurement, solve the resulting average-reward belief MDP with relative
value iteration, and benchmark policies exactly and by simulation.
"""

from aocsi.belief import (
    AgeCurveTable,
    AgedObservation,
    age_curves,
    expected_reliability,
    reliability_mse,
    state_distribution,
)
from aocsi.channel import ChannelModel, StepMatrixCache, n_step_matrix, steady_state, validate_model
from aocsi.mdp import (
    Policy,
    PolicyKind,
    SolveReport,
    SolverConfig,
    TruncatedMdp,
    brute_force_optimal,
    build_mdp,
    evaluate_policy_exact,
    greedy_policy,
    randomized_policy,
    solve_rvi,
    threshold_summary,
)
from aocsi.reward import ActionKind, RewardParams, channel_penalty, total_reward, transmit_reward
from aocsi.simulator import Accounting, SimConfig, SimReport, compare_policies, run_simulation

__version__ = "0.1.0"

__all__ = [
    "Accounting",
    "ActionKind",
    "AgeCurveTable",
    "AgedObservation",
    "ChannelModel",
    "Policy",
    "PolicyKind",
    "RewardParams",
    "SimConfig",
    "SimReport",
    "SolveReport",
    "SolverConfig",
    "StepMatrixCache",
    "TruncatedMdp",
    "age_curves",
    "brute_force_optimal",
    "build_mdp",
    "channel_penalty",
    "compare_policies",
    "evaluate_policy_exact",
    "expected_reliability",
    "greedy_policy",
    "n_step_matrix",
    "randomized_policy",
    "reliability_mse",
    "run_simulation",
    "solve_rvi",
    "state_distribution",
    "steady_state",
    "threshold_summary",
    "total_reward",
    "transmit_reward",
    "validate_model",
]
