"""First-order optimality residuals, computed from problem data only.

These checks are deliberately independent of the solver's internals: they
take a :class:`CanonicalQP` plus a candidate primal/dual point and measure
how far the point is from satisfying the KKT conditions

    stationarity       2 d x + c + A_eq' y + A_in' z - z_lb + z_ub = 0
    primal feasibility A_eq x = b,  A_in x <= ub_in,  lb <= x <= ub
    dual feasibility   z >= 0, z_lb >= 0, z_ub >= 0
    complementarity    (ub_in - A_in x) z = 0 and bound analogues

All three reported numbers are normalized:

- ``primal_infeasibility``: worst violation divided by (1 + B) where B is
  the largest finite magnitude among rhs values and bounds;
- ``stationarity``: max-norm of the gradient residual (plus any negative
  dual, which is a dual-feasibility violation) divided by (1 + D) where D
  is the largest magnitude among the gradient's additive terms;
- ``complementarity``: worst slack-times-dual product divided by
  (1 + |objective|); duals attached to infinite bounds count at face
  value since they must be exactly zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DimensionMismatch
from .model import CanonicalQP, QpSolution


@dataclass(frozen=True)
class KktResiduals:
    primal_infeasibility: float
    stationarity: float
    complementarity: float

    def max(self) -> float:
        return max(self.primal_infeasibility, self.stationarity,
                   self.complementarity)

    def within(self, tol: float) -> bool:
        return self.max() <= tol


def _inf_norm(v: np.ndarray) -> float:
    return float(np.max(np.abs(v))) if v.size else 0.0


def rhs_scale(qp: CanonicalQP) -> float:
    """Largest finite magnitude among right-hand sides and bounds."""
    parts = [
        _inf_norm(qp.b_eq),
        _inf_norm(qp.ub_in),
    ]
    for bound in (qp.lb, qp.ub):
        finite = bound[np.isfinite(bound)]
        parts.append(_inf_norm(finite))
    return max(parts) if parts else 0.0


def kkt_residuals(qp: CanonicalQP, solution: QpSolution) -> KktResiduals:
    """Normalized KKT residuals of ``solution`` for ``qp``."""
    x = np.asarray(solution.primal, dtype=float)
    y = np.asarray(solution.dual_eq, dtype=float)
    z = np.asarray(solution.dual_in, dtype=float)
    zl = np.asarray(solution.dual_lb, dtype=float)
    zu = np.asarray(solution.dual_ub, dtype=float)
    if x.shape != (qp.n,) or zl.shape != (qp.n,) or zu.shape != (qp.n,):
        raise DimensionMismatch(
            f"primal/bound-dual length must be {qp.n}, got "
            f"{x.shape}/{zl.shape}/{zu.shape}"
        )
    if y.shape != (qp.n_eq,) or z.shape != (qp.n_in,):
        raise DimensionMismatch(
            f"dual lengths must be ({qp.n_eq}, {qp.n_in}), got "
            f"({y.shape}, {z.shape})"
        )

    # primal feasibility
    violations = [0.0]
    if qp.n_eq:
        violations.append(_inf_norm(qp.a_eq @ x - qp.b_eq))
    if qp.n_in:
        violations.append(float(np.max(qp.a_in @ x - qp.ub_in, initial=0.0)))
    violations.append(float(np.max(qp.lb - x, initial=0.0)))
    violations.append(float(np.max(x - qp.ub, initial=0.0)))
    primal = max(violations) / (1.0 + rhs_scale(qp))

    # stationarity (+ dual feasibility folded in)
    grad_q = 2.0 * qp.quad_diag * x
    at_y = qp.a_eq.T @ y if qp.n_eq else np.zeros(qp.n)
    gt_z = qp.a_in.T @ z if qp.n_in else np.zeros(qp.n)
    r_dual = grad_q + qp.lin_cost + at_y + gt_z - zl + zu
    neg_dual = max(
        float(np.max(-z, initial=0.0)),
        float(np.max(-zl, initial=0.0)),
        float(np.max(-zu, initial=0.0)),
    )
    d_scale = max(_inf_norm(grad_q), _inf_norm(qp.lin_cost), _inf_norm(at_y),
                  _inf_norm(gt_z), _inf_norm(zl), _inf_norm(zu))
    stationarity = max(_inf_norm(r_dual), neg_dual) / (1.0 + d_scale)

    # complementarity
    products = [0.0]
    if qp.n_in:
        slack = qp.ub_in - qp.a_in @ x
        products.append(_inf_norm(slack * z))
    finite_l = np.isfinite(qp.lb)
    finite_u = np.isfinite(qp.ub)
    products.append(_inf_norm((x[finite_l] - qp.lb[finite_l]) * zl[finite_l]))
    products.append(_inf_norm((qp.ub[finite_u] - x[finite_u]) * zu[finite_u]))
    # duals on infinite bounds must vanish
    products.append(_inf_norm(zl[~finite_l]))
    products.append(_inf_norm(zu[~finite_u]))
    comp = max(products) / (1.0 + abs(qp.objective_value(x)))

    return KktResiduals(primal_infeasibility=primal, stationarity=stationarity,
                        complementarity=comp)
