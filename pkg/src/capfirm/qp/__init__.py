"""Convex quadratic programming core: canonical form, solver, KKT checks.

All planner problems in this package are separable convex QPs

    minimize    sum_i d_i x_i^2 + c . x + const
    subject to  A_eq x  = b_eq
                A_in x <= ub_in
                lb <= x <= ub

with d >= 0 elementwise.  ``quad_diag`` holds the coefficient of x_i^2
(so a cost of ``x^2`` is ``quad_diag = 1``, not the half-Hessian).
"""

from .model import CanonicalQP, QpModel, QpSolution, SolveStatus
from .residuals import KktResiduals, kkt_residuals
from .solver import solve_qp

__all__ = [
    "CanonicalQP",
    "QpModel",
    "QpSolution",
    "SolveStatus",
    "KktResiduals",
    "kkt_residuals",
    "solve_qp",
]
