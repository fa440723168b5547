"""Sparse convex-QP solver with a verified accuracy contract.

The algorithm is a primal-dual interior-point method (Mehrotra
predictor-corrector) on the canonical form, preceded by a presolve that
eliminates variables whose bounds pin them to a single value (this is how
fixed nominations and zero-capacity storage cases are handled).  Each
iteration factorizes one quasi-definite KKT system with SuperLU.

The contract is normative, the algorithm is not: a solution returned with
``status == OPTIMAL`` satisfies :func:`capfirm.qp.kkt_residuals` at the
requested tolerance; this is re-checked after every solve on the original
(unreduced) problem data.

Everything here is deterministic: identical problems and settings produce
bit-identical iterates.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from ..errors import InfeasibleProblem
from .model import CanonicalQP, QpSolution, SolveStatus
from .residuals import kkt_residuals, rhs_scale

_REG_PRIMAL = 1e-9
_REG_DUAL = 1e-9
_STEP_FRACTION = 0.995
_STALL_WINDOW = 40
_DUAL_BLOWUP = 1e10


@dataclass
class _Reduced:
    """Problem after eliminating variables fixed by their bounds."""

    d: np.ndarray
    c: np.ndarray
    a_eq: sparse.csr_matrix
    b_eq: np.ndarray
    a_in: sparse.csr_matrix
    ub_in: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    const: float
    keep_cols: np.ndarray
    fixed_cols: np.ndarray
    fixed_vals: np.ndarray
    keep_eq: np.ndarray
    keep_in: np.ndarray


def _presolve(qp: CanonicalQP, feastol: float) -> tuple[_Reduced | None, str | None]:
    """Eliminate fixed variables and empty rows.

    Returns (reduced, None) or (None, reason) when presolve already proves
    infeasibility.
    """
    lb, ub = qp.lb, qp.ub
    scale = np.maximum(1.0, np.maximum(np.where(np.isfinite(lb), np.abs(lb), 0.0),
                                       np.where(np.isfinite(ub), np.abs(ub), 0.0)))
    span = ub - lb
    bad = span < -1e-12 * scale
    if bad.any():
        j = int(np.argmax(bad))
        return None, f"bound({qp.var_names[j]}): lb {lb[j]} > ub {ub[j]}"
    fixed = np.isfinite(span) & (span <= 1e-12 * scale)
    keep = ~fixed
    fixed_idx = np.flatnonzero(fixed)
    keep_idx = np.flatnonzero(keep)
    vals = 0.5 * (lb[fixed_idx] + ub[fixed_idx])

    a_eq = qp.a_eq.tocsc()
    a_in = qp.a_in.tocsc()
    b_eq = qp.b_eq - (a_eq[:, fixed_idx] @ vals if fixed_idx.size else 0.0)
    ub_in = qp.ub_in - (a_in[:, fixed_idx] @ vals if fixed_idx.size else 0.0)
    a_eq = a_eq[:, keep_idx].tocsr()
    a_in = a_in[:, keep_idx].tocsr()
    const = qp.const + float(qp.quad_diag[fixed_idx] @ (vals * vals)
                             + qp.lin_cost[fixed_idx] @ vals)

    slack = feastol * (1.0 + rhs_scale(qp))
    empty_eq = np.asarray(a_eq.getnnz(axis=1) == 0)
    if empty_eq.any():
        worst = np.abs(np.asarray(b_eq)[empty_eq])
        if worst.size and worst.max() > slack:
            r = np.flatnonzero(empty_eq)[int(np.argmax(worst))]
            return None, f"{qp.eq_names[r]}: fixed terms leave residual {qp.b_eq[r]!r}"
    empty_in = np.asarray(a_in.getnnz(axis=1) == 0)
    if empty_in.any():
        worst = -np.asarray(ub_in)[empty_in]
        if worst.size and worst.max() > slack:
            r = np.flatnonzero(empty_in)[int(np.argmax(worst))]
            return None, f"{qp.in_names[r]}: fixed terms violate upper bound"

    keep_eq = np.flatnonzero(~empty_eq)
    keep_in = np.flatnonzero(~empty_in)
    reduced = _Reduced(
        d=qp.quad_diag[keep_idx],
        c=qp.lin_cost[keep_idx],
        a_eq=a_eq[keep_eq] if keep_eq.size != a_eq.shape[0] else a_eq,
        b_eq=np.asarray(b_eq)[keep_eq],
        a_in=a_in[keep_in] if keep_in.size != a_in.shape[0] else a_in,
        ub_in=np.asarray(ub_in)[keep_in],
        lb=lb[keep_idx],
        ub=ub[keep_idx],
        const=const,
        keep_cols=keep_idx,
        fixed_cols=fixed_idx,
        fixed_vals=vals,
        keep_eq=keep_eq,
        keep_in=keep_in,
    )
    return reduced, None


def _row_scale(mat: sparse.csr_matrix, w: np.ndarray) -> sparse.csr_matrix:
    out = mat.copy()
    out.data *= np.repeat(w, np.diff(mat.indptr))
    return out


def _factorize(k: sparse.csc_matrix):
    # the KKT matrix is regularized quasi-definite: factor it in symmetric
    # mode with near-diagonal pivoting so the A'+A ordering survives the
    # extreme barrier weights (free row pivoting destroys the sparsity of
    # the scenario-block arrow pattern and costs two orders of magnitude);
    # accuracy is restored by iterative refinement on each solve
    return splu(k, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=1e-4,
                options={"SymmetricMode": True})


class _Interior:
    """State and linear algebra for one interior-point solve."""

    def __init__(self, red: _Reduced, tol: float):
        self.red = red
        self.tol = tol
        self.n = red.d.size
        self.m_e = red.a_eq.shape[0]
        self.m_i = red.a_in.shape[0]
        self.idx_l = np.flatnonzero(np.isfinite(red.lb))
        self.idx_u = np.flatnonzero(np.isfinite(red.ub))
        self.b_scale = 1.0 + rhs_scale_reduced(red)
        self.eye_e = sparse.identity(self.m_e, format="csr") if self.m_e else None

    # -- residual metrics (same normalization as kkt_residuals) ----------

    def metrics(self, x, y, z, zl, zu, s):
        red = self.red
        at_y = red.a_eq.T @ y if self.m_e else np.zeros(self.n)
        gt_z = red.a_in.T @ z if self.m_i else np.zeros(self.n)
        grad_q = 2.0 * red.d * x
        zl_full = np.zeros(self.n)
        zl_full[self.idx_l] = zl
        zu_full = np.zeros(self.n)
        zu_full[self.idx_u] = zu
        r_d = grad_q + red.c + at_y + gt_z - zl_full + zu_full

        pinf = 0.0
        if self.m_e:
            pinf = max(pinf, float(np.max(np.abs(red.a_eq @ x - red.b_eq))))
        if self.m_i:
            pinf = max(pinf, float(np.max(red.a_in @ x - red.ub_in, initial=0.0)))
        pinf = max(pinf, float(np.max(red.lb - x, initial=0.0)))
        pinf = max(pinf, float(np.max(x - red.ub, initial=0.0)))
        pinf /= self.b_scale

        d_scale = 1.0 + max(
            _amax(grad_q), _amax(red.c), _amax(at_y), _amax(gt_z),
            _amax(zl), _amax(zu),
        )
        dinf = _amax(r_d) / d_scale

        obj = float(red.d @ (x * x) + red.c @ x + red.const)
        comp = 0.0
        if self.m_i:
            comp = max(comp, _amax((red.ub_in - red.a_in @ x) * z))
        if self.idx_l.size:
            comp = max(comp, _amax((x[self.idx_l] - red.lb[self.idx_l]) * zl))
        if self.idx_u.size:
            comp = max(comp, _amax((red.ub[self.idx_u] - x[self.idx_u]) * zu))
        comp /= 1.0 + abs(obj)
        return pinf, dinf, comp

    def solve(self, max_iter: int) -> tuple:
        red = self.red
        n, m_e, m_i = self.n, self.m_e, self.m_i
        idx_l, idx_u = self.idx_l, self.idx_u
        n_comp = m_i + idx_l.size + idx_u.size

        if n_comp == 0:
            return self._solve_equality_only(max_iter)

        # strictly interior start
        x = np.zeros(n)
        has_l = np.isfinite(red.lb)
        has_u = np.isfinite(red.ub)
        both = has_l & has_u
        x[both] = 0.5 * (red.lb[both] + red.ub[both])
        only_l = has_l & ~has_u
        x[only_l] = red.lb[only_l] + 1.0
        only_u = has_u & ~has_l
        x[only_u] = red.ub[only_u] - 1.0
        s = np.maximum(red.ub_in - red.a_in @ x, 1.0) if m_i else np.zeros(0)
        z = np.ones(m_i)
        zl = np.ones(idx_l.size)
        zu = np.ones(idx_u.size)
        y = np.zeros(m_e)

        best = None
        best_res = np.inf
        best_pinf = np.inf
        stalled = 0
        status = SolveStatus.MAX_ITERATIONS
        it = 0
        reg_p, reg_d = _REG_PRIMAL, _REG_DUAL

        for it in range(1, max_iter + 1):
            pinf, dinf, comp = self.metrics(x, y, z, zl, zu, s)
            res = max(pinf, dinf, comp)
            if res < best_res * 0.99:
                stalled = 0
            else:
                stalled += 1
            if res < best_res:
                best_res = res
                best_pinf = pinf
                best = (x.copy(), y.copy(), z.copy(), zl.copy(), zu.copy())
            if res <= self.tol:
                status = SolveStatus.OPTIMAL
                best = (x, y, z, zl, zu)
                break
            dual_mag = max(_amax(z), _amax(zl), _amax(zu))
            if pinf > 100.0 * self.tol and dual_mag > _DUAL_BLOWUP:
                status = SolveStatus.INFEASIBLE
                break
            if stalled > _STALL_WINDOW:
                break

            xl = x[idx_l] - red.lb[idx_l]
            xu = red.ub[idx_u] - x[idx_u]
            mu = (float(s @ z) + float(xl @ zl) + float(xu @ zu)) / n_comp

            w = z / s if m_i else np.zeros(0)
            dl = zl / xl
            du = zu / xu
            h_diag = 2.0 * red.d + reg_p
            np.add.at(h_diag, idx_l, dl)
            np.add.at(h_diag, idx_u, du)
            h_mat = sparse.diags(h_diag, format="csr")
            if m_i:
                h_mat = h_mat + red.a_in.T @ _row_scale(red.a_in, w)
            if m_e:
                k_mat = sparse.bmat(
                    [[h_mat, red.a_eq.T], [red.a_eq, -reg_d * self.eye_e]],
                    format="csc")
            else:
                k_mat = h_mat.tocsc()
            try:
                lu = _factorize(k_mat)
            except RuntimeError:
                reg_p *= 100.0
                reg_d *= 100.0
                continue

            zl_full = np.zeros(n)
            zl_full[idx_l] = zl
            zu_full = np.zeros(n)
            zu_full[idx_u] = zu
            r_d = (2.0 * red.d * x + red.c
                   + (red.a_eq.T @ y if m_e else 0.0)
                   + (red.a_in.T @ z if m_i else 0.0)
                   - zl_full + zu_full)
            r_p = red.a_eq @ x - red.b_eq if m_e else np.zeros(0)
            r_g = red.a_in @ x + s - red.ub_in if m_i else np.zeros(0)

            def newton(r_sz, r_l, r_u):
                rhs_x = -r_d.copy()
                if m_i:
                    rhs_x += red.a_in.T @ (r_sz / s - w * r_g)
                np.subtract.at(rhs_x, idx_l, r_l / xl)
                np.add.at(rhs_x, idx_u, r_u / xu)
                if m_e:
                    rhs = np.concatenate([rhs_x, -r_p])
                else:
                    rhs = rhs_x
                sol = lu.solve(rhs)
                resid = k_mat @ sol - rhs
                if _amax(resid) > 1e-11 * (1.0 + _amax(rhs)):
                    sol = sol - lu.solve(resid)
                dx = sol[:n]
                dy = sol[n:] if m_e else np.zeros(0)
                if m_i:
                    g_dx = red.a_in @ dx
                    ds = -r_g - g_dx
                    dz = w * (g_dx + r_g) - r_sz / s
                else:
                    ds = np.zeros(0)
                    dz = np.zeros(0)
                dzl = -r_l / xl - dl * dx[idx_l]
                dzu = -r_u / xu + du * dx[idx_u]
                return dx, dy, ds, dz, dzl, dzu

            # predictor
            dx, dy, ds, dz, dzl, dzu = newton(s * z, xl * zl, xu * zu)
            ap = _step_length(1.0, (s, ds), (xl, dx[idx_l]), (xu, -dx[idx_u]))
            ad = _step_length(1.0, (z, dz), (zl, dzl), (zu, dzu))
            mu_aff = ((s + ap * ds) @ (z + ad * dz)
                      + (xl + ap * dx[idx_l]) @ (zl + ad * dzl)
                      + (xu - ap * dx[idx_u]) @ (zu + ad * dzu)) / n_comp
            sigma = min(max((max(mu_aff, 0.0) / mu) ** 3, 1e-8), 1.0 - 1e-8)

            # corrector
            tgt = sigma * mu
            dx, dy, ds, dz, dzl, dzu = newton(
                s * z + ds * dz - tgt,
                xl * zl + dx[idx_l] * dzl - tgt,
                xu * zu - dx[idx_u] * dzu - tgt,
            )
            ap = _step_length(_STEP_FRACTION, (s, ds), (xl, dx[idx_l]),
                              (xu, -dx[idx_u]))
            ad = _step_length(_STEP_FRACTION, (z, dz), (zl, dzl), (zu, dzu))

            x = x + ap * dx
            y = y + ad * dy
            if m_i:
                s = np.maximum(s + ap * ds, 1e-300)
                z = np.maximum(z + ad * dz, 1e-300)
            zl = np.maximum(zl + ad * dzl, 1e-300)
            zu = np.maximum(zu + ad * dzu, 1e-300)

        x, y, z, zl, zu = best if best is not None else (x, y, z, zl, zu)
        if status == SolveStatus.MAX_ITERATIONS and best_pinf > 50.0 * self.tol:
            # stalled far from feasibility: treat as an infeasibility
            # certificate rather than a slow solve
            status = SolveStatus.INFEASIBLE
        return x, y, z, zl, zu, status, it

    def _solve_equality_only(self, max_iter: int) -> tuple:
        """No inequalities and no finite bounds: one KKT solve."""
        red = self.red
        n, m_e = self.n, self.m_e
        h_diag = sparse.diags(2.0 * red.d + _REG_PRIMAL, format="csr")
        if m_e:
            k_mat = sparse.bmat(
                [[h_diag, red.a_eq.T], [red.a_eq, -_REG_DUAL * self.eye_e]],
                format="csc")
            rhs = np.concatenate([-red.c, red.b_eq])
        else:
            k_mat = h_diag.tocsc()
            rhs = -red.c
        lu = _factorize(k_mat)
        sol = lu.solve(rhs)
        for _ in range(3):
            resid = k_mat @ sol - rhs
            if _amax(resid) <= 1e-13 * (1.0 + _amax(rhs)):
                break
            sol = sol - lu.solve(resid)
        x = sol[:n]
        y = sol[n:] if m_e else np.zeros(0)
        empty = np.zeros(0)
        pinf, dinf, comp = self.metrics(x, y, empty, empty, empty, empty)
        if max(pinf, dinf, comp) <= self.tol:
            status = SolveStatus.OPTIMAL
        elif pinf > 10.0 * self.tol:
            status = SolveStatus.INFEASIBLE
        else:
            status = SolveStatus.MAX_ITERATIONS
        return x, y, empty, empty, empty, status, 1


def _amax(v: np.ndarray) -> float:
    return float(np.max(np.abs(v))) if np.size(v) else 0.0


def _step_length(fraction: float, *pairs: tuple) -> float:
    """Largest step <= 1 keeping every (value, delta) pair positive."""
    alpha = 1.0
    for value, delta in pairs:
        if np.size(value) == 0:
            continue
        shrink = delta < 0
        if np.any(shrink):
            alpha = min(alpha, fraction * float(np.min(-value[shrink] / delta[shrink])))
    return min(alpha, 1.0)


def rhs_scale_reduced(red: _Reduced) -> float:
    parts = [_amax(red.b_eq), _amax(red.ub_in)]
    for bound in (red.lb, red.ub):
        finite = bound[np.isfinite(bound)]
        parts.append(_amax(finite))
    return max(parts) if parts else 0.0


def _worst_violations(qp: CanonicalQP, x: np.ndarray, k: int = 10) -> tuple[str, ...]:
    entries: list[tuple[float, str]] = []
    if qp.n_eq:
        v = np.abs(qp.a_eq @ x - qp.b_eq)
        entries += [(float(v[i]), qp.eq_names[i]) for i in np.argsort(-v)[:k]]
    if qp.n_in:
        v = np.maximum(qp.a_in @ x - qp.ub_in, 0.0)
        entries += [(float(v[i]), qp.in_names[i]) for i in np.argsort(-v)[:k]]
    v_lb = np.maximum(qp.lb - x, 0.0)
    v_ub = np.maximum(x - qp.ub, 0.0)
    for j in np.argsort(-(v_lb + v_ub))[:k]:
        viol = float(v_lb[j] + v_ub[j])
        if viol > 0.0:
            entries.append((viol, f"bound({qp.var_names[j]})"))
    entries.sort(key=lambda t: -t[0])
    return tuple(f"{name}: violated by {viol:.6g}"
                 for viol, name in entries[:k] if viol > 0.0)


def solve_qp(qp: CanonicalQP, tol: float = 1e-6, max_iter: int = 20000) -> QpSolution:
    """Solve a canonical convex QP to the stated KKT tolerance.

    ``status == OPTIMAL`` guarantees that :func:`kkt_residuals` on the
    returned solution is within ``tol`` (this is asserted before
    returning).  ``INFEASIBLE`` solutions carry the most-violated
    constraint names in ``worst_violations``; ``MAX_ITERATIONS`` returns
    the best iterate found.
    """
    start = time.perf_counter()
    reduced, reason = _presolve(qp, tol)
    if reduced is None:
        x = np.where(np.isfinite(qp.lb), qp.lb, 0.0)
        return QpSolution(
            primal=x, objective=qp.objective_value(x),
            status=SolveStatus.INFEASIBLE, iterations=0,
            solve_time_s=time.perf_counter() - start,
            dual_eq=np.zeros(qp.n_eq), dual_in=np.zeros(qp.n_in),
            dual_lb=np.zeros(qp.n), dual_ub=np.zeros(qp.n),
            worst_violations=(reason or "",),
        )

    if reduced.d.size == 0:
        x_r = np.zeros(0)
        y_r = np.zeros(reduced.a_eq.shape[0])
        z_r = np.zeros(reduced.a_in.shape[0])
        zl_r = np.zeros(0)
        zu_r = np.zeros(0)
        status = SolveStatus.OPTIMAL
        iters = 0
    else:
        interior = _Interior(reduced, tol * 0.9)
        x_r, y_r, z_r, zl_r, zu_r, status, iters = interior.solve(max_iter)
        zl_tmp = np.zeros(reduced.d.size)
        zl_tmp[interior.idx_l] = zl_r
        zu_tmp = np.zeros(reduced.d.size)
        zu_tmp[interior.idx_u] = zu_r
        zl_r, zu_r = zl_tmp, zu_tmp

    # scatter back to the original column/row space
    x = np.empty(qp.n)
    x[reduced.keep_cols] = x_r
    x[reduced.fixed_cols] = reduced.fixed_vals
    dual_eq = np.zeros(qp.n_eq)
    dual_eq[reduced.keep_eq] = y_r
    dual_in = np.zeros(qp.n_in)
    dual_in[reduced.keep_in] = z_r
    dual_lb = np.zeros(qp.n)
    dual_lb[reduced.keep_cols] = zl_r
    dual_ub = np.zeros(qp.n)
    dual_ub[reduced.keep_cols] = zu_r
    if reduced.fixed_cols.size:
        grad = (2.0 * qp.quad_diag * x + qp.lin_cost
                + (qp.a_eq.T @ dual_eq if qp.n_eq else 0.0)
                + (qp.a_in.T @ dual_in if qp.n_in else 0.0))
        g_fix = grad[reduced.fixed_cols]
        dual_lb[reduced.fixed_cols] = np.maximum(g_fix, 0.0)
        dual_ub[reduced.fixed_cols] = np.maximum(-g_fix, 0.0)

    solution = QpSolution(
        primal=x,
        objective=qp.objective_value(x),
        status=status,
        iterations=iters,
        solve_time_s=time.perf_counter() - start,
        dual_eq=dual_eq,
        dual_in=dual_in,
        dual_lb=dual_lb,
        dual_ub=dual_ub,
        worst_violations=(_worst_violations(qp, x)
                          if status != SolveStatus.OPTIMAL else ()),
    )
    if status == SolveStatus.OPTIMAL:
        check = kkt_residuals(qp, solution)
        if not check.within(tol):
            raise AssertionError(
                f"solver self-check failed: residuals {check} exceed tol {tol}"
            )
    return solution


def require_optimal(qp: CanonicalQP, solution: QpSolution) -> QpSolution:
    """Raise :class:`InfeasibleProblem` unless the solve reached optimality."""
    if solution.status != SolveStatus.OPTIMAL:
        detail = "; ".join(solution.worst_violations[:3])
        raise InfeasibleProblem(
            f"solve ended with status {solution.status.value}"
            + (f" ({detail})" if detail else "")
        )
    return solution
