"""Joint transmit-antenna selection and power allocation toolkit.

Alternating-direction optimization of a mixed-Boolean power-minimization
problem: a log-barrier NLP solver handles the continuous power allocation,
and a penalty-homotopy sequential Boolean QP handles the antenna switches.
"""

__version__ = "0.1.0"

from .channel import ChannelMatrix, ScenarioConfig, generate_channel, make_rng, path_loss, sample_user_positions
from .rate import (
    EsrProblem,
    build_esr_problem,
    economic_objective,
    grad_rate_wrt_power,
    grad_rate_wrt_switch,
    hess_rate_wrt_switch,
    snr_user,
    sum_rate,
    uniform_power,
)
from .qp import QpProblem, QpSolution, kkt_residual, solve_qp
from .nlp import InfeasibleProblemError, NlpProblem, NlpSolution, find_strictly_feasible, solve_barrier
from .bqp import BqpConfig, BqpResult, penalty_phi, solve_bqp
from .driver import AdConfig, AdTrace, Solution, ad1, build_ad2_subproblem, full_activation_allocation, solve
from .baselines import MethodReport, enumerate_selections, solve_ad_nspen, solve_ad_spen

__all__ = [
    "ChannelMatrix",
    "ScenarioConfig",
    "generate_channel",
    "make_rng",
    "path_loss",
    "sample_user_positions",
    "EsrProblem",
    "build_esr_problem",
    "economic_objective",
    "grad_rate_wrt_power",
    "grad_rate_wrt_switch",
    "hess_rate_wrt_switch",
    "snr_user",
    "sum_rate",
    "uniform_power",
    "QpProblem",
    "QpSolution",
    "kkt_residual",
    "solve_qp",
    "InfeasibleProblemError",
    "NlpProblem",
    "NlpSolution",
    "find_strictly_feasible",
    "solve_barrier",
    "BqpConfig",
    "BqpResult",
    "penalty_phi",
    "solve_bqp",
    "AdConfig",
    "AdTrace",
    "Solution",
    "ad1",
    "build_ad2_subproblem",
    "full_activation_allocation",
    "solve",
    "MethodReport",
    "enumerate_selections",
    "solve_ad_nspen",
    "solve_ad_spen",
]
