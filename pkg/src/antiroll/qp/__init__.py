from .io import dump_problem, load_problem
from .problem import QpProblem, QpSolution, SolverSettings
from .solver import DenseQpSolver, kkt_residuals, solve

__all__ = [
    "DenseQpSolver",
    "QpProblem",
    "QpSolution",
    "SolverSettings",
    "dump_problem",
    "kkt_residuals",
    "load_problem",
    "solve",
]
