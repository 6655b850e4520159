"""FastAST: a primal-dual interior-point solver for atomic norm soft thresholding.

Modules
-------
toeplitz
    Levinson-Durbin / Gohberg-Semencul algebra for Hermitian Toeplitz ``T(u)``.
cones
    Membership tests and the log-det barrier for the primal and dual cones.
objective
    The reduced barrier objective and its gradient and Hessians.
solver
    The interior-point driver with Newton and L-BFGS search directions.
lse
    Line spectral estimation: tau selection, frequency extraction, debiasing, metrics.
harness, cli
    Synthetic experiments and the ``fastast`` command line tool.
"""

from .objective import NotPositiveDefinite, ObjectiveContext
from .solver import SolverConfig, SolverResult, Status, solve

__version__ = "0.1.0"

__all__ = ["NotPositiveDefinite", "ObjectiveContext", "SolverConfig", "SolverResult", "Status", "solve"]
