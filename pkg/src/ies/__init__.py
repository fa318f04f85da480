"""Day-ahead dispatch of a coupled electricity-gas system in a coal district."""
from .conic import ConicProgram, SolveOptions, SolveResult, branch_and_bound, solve_relaxation
from .dispatch import DispatchSolution, assemble, report, run, sweep, sweep_penalty
from .model import Scenario, ScenarioError, bundled, load_scenario

__all__ = [
    "ConicProgram", "SolveOptions", "SolveResult", "branch_and_bound", "solve_relaxation",
    "DispatchSolution", "assemble", "report", "run", "sweep", "sweep_penalty",
    "Scenario", "ScenarioError", "bundled", "load_scenario",
]
