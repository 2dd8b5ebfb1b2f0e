"""Worst-case robust adaptive beamforming by successive SOCP restriction."""

from .beamformer import (BeamformerResult, IterationTrace, RobustParams, derive_params,
                         factorize_presumed, initial_point, rescale_13_to_14,
                         rescale_14_to_13, solve_direct_form, solve_inner_socp,
                         worst_case_denominator, worst_case_objective_13,
                         worst_case_signal_power)
from .errors import (DegenerateLinearizationError, InfeasibleProblemError, NotPSDError,
                     SubproblemFailure, ValidationError)
from .oracle import OracleReport, multistart_minimize, ratio_objective, sampled_worst_case
from .experiment import ExperimentConfig, emit_csv, run_experiment
from .scenario import (ArrayGeometry, AngularDensity, ScenarioConfig, evaluate_output_sinr,
                       simulate_run)
from .socp import ConicProblem, ConicSolution, NonNeg, SecondOrder, Status, solve_conic

__all__ = [
    "AngularDensity", "ArrayGeometry", "BeamformerResult", "ConicProblem", "ConicSolution",
    "DegenerateLinearizationError", "ExperimentConfig", "InfeasibleProblemError", "IterationTrace", "NonNeg",
    "NotPSDError", "OracleReport", "RobustParams", "ScenarioConfig", "SecondOrder",
    "Status", "SubproblemFailure", "ValidationError", "derive_params", "emit_csv",
    "evaluate_output_sinr",
    "factorize_presumed", "initial_point", "multistart_minimize", "ratio_objective",
    "rescale_13_to_14", "rescale_14_to_13", "run_experiment", "sampled_worst_case",
    "simulate_run", "solve_conic",
    "solve_direct_form", "solve_inner_socp", "worst_case_denominator",
    "worst_case_objective_13", "worst_case_signal_power",
]
