"""Canonical QP container and the variable/constraint registry used to
assemble planner problems.

Column ordering is the registration order, so two builds of the same
model produce bit-identical matrices.  Variable and constraint names map
back to model symbols for debugging and infeasibility reports.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from enum import Enum
from typing import TextIO, Union

import numpy as np
from scipy import sparse

from ..errors import DuplicateName, UnknownVariable

TermRef = Union[int, str]
Terms = Union[Mapping[TermRef, float], Iterable[tuple[TermRef, float]]]


@dataclass(frozen=True)
class CanonicalQP:
    """Separable convex QP in canonical form (see package docstring)."""

    n: int
    quad_diag: np.ndarray
    lin_cost: np.ndarray
    a_eq: sparse.csr_matrix
    b_eq: np.ndarray
    a_in: sparse.csr_matrix
    ub_in: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    var_names: tuple[str, ...]
    eq_names: tuple[str, ...]
    in_names: tuple[str, ...]
    const: float = 0.0

    @property
    def n_eq(self) -> int:
        return self.a_eq.shape[0]

    @property
    def n_in(self) -> int:
        return self.a_in.shape[0]

    @property
    def n_rows(self) -> int:
        """Constraint rows, excluding variable bounds."""
        return self.n_eq + self.n_in

    @property
    def n_bounds(self) -> int:
        """Number of finite lower/upper variable bounds."""
        return int(np.isfinite(self.lb).sum() + np.isfinite(self.ub).sum())

    def objective_value(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float)
        return float(self.quad_diag @ (x * x) + self.lin_cost @ x + self.const)

    def column(self, name: str) -> int:
        try:
            return self.var_names.index(name)
        except ValueError:
            raise UnknownVariable(f"no variable named {name!r}") from None

    def dump_text(self, out: TextIO) -> None:
        """Write a one-constraint-per-line debug dump for diffing."""
        out.write(f"# variables {self.n}  eq {self.n_eq}  in {self.n_in}\n")
        for j, name in enumerate(self.var_names):
            out.write(
                f"var {name} lb:{self.lb[j]:g} ub:{self.ub[j]:g} "
                f"lin:{self.lin_cost[j]:g} quad:{self.quad_diag[j]:g}\n"
            )
        for label, mat, rhs, names, sense in (
            ("eq", self.a_eq, self.b_eq, self.eq_names, "="),
            ("in", self.a_in, self.ub_in, self.in_names, "<="),
        ):
            csr = mat.tocsr()
            for r in range(csr.shape[0]):
                lo, hi = csr.indptr[r], csr.indptr[r + 1]
                terms = " ".join(
                    f"{self.var_names[j]}:{v:g}"
                    for j, v in zip(csr.indices[lo:hi], csr.data[lo:hi])
                )
                out.write(f"{names[r]} {terms} {sense} {rhs[r]:g}\n")


class SolveStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    MAX_ITERATIONS = "max_iterations"


@dataclass(frozen=True)
class QpSolution:
    """Primal/dual solution returned by :func:`capfirm.qp.solve_qp`.

    Dual signs: ``dual_eq`` is free, ``dual_in`` >= 0 for ``A_in x <= ub_in``,
    ``dual_lb``/``dual_ub`` >= 0 for the variable bounds.  Entries for rows
    or bounds that are absent (infinite) are zero.
    """

    primal: np.ndarray
    objective: float
    status: SolveStatus
    iterations: int
    solve_time_s: float
    dual_eq: np.ndarray
    dual_in: np.ndarray
    dual_lb: np.ndarray
    dual_ub: np.ndarray
    worst_violations: tuple[str, ...] = field(default=())


class QpModel:
    """Incremental registry of variables and constraints.

    >>> m = QpModel()
    >>> x = m.add_variable("x", lb=1.0, quad_cost=1.0)
    >>> qp = m.build()
    >>> qp.n
    1
    """

    def __init__(self) -> None:
        self._var_names: list[str] = []
        self._var_index: dict[str, int] = {}
        self._lb: list[float] = []
        self._ub: list[float] = []
        self._lin: list[float] = []
        self._quad: list[float] = []
        self._eq_names: list[str] = []
        self._in_names: list[str] = []
        self._row_names: set[str] = set()
        # COO triplets per constraint family
        self._eq_rows: list[int] = []
        self._eq_cols: list[int] = []
        self._eq_vals: list[float] = []
        self._eq_rhs: list[float] = []
        self._in_rows: list[int] = []
        self._in_cols: list[int] = []
        self._in_vals: list[float] = []
        self._in_rhs: list[float] = []

    @property
    def n_variables(self) -> int:
        return len(self._var_names)

    def add_variable(self, name: str, lb: float = 0.0, ub: float = math.inf,
                     lin_cost: float = 0.0, quad_cost: float = 0.0) -> int:
        if name in self._var_index:
            raise DuplicateName(f"variable {name!r} registered twice")
        if quad_cost < 0:
            raise ValueError(f"negative quadratic cost on {name!r} breaks convexity")
        if lb > ub:
            raise ValueError(f"variable {name!r} has lb {lb} > ub {ub}")
        idx = len(self._var_names)
        self._var_names.append(name)
        self._var_index[name] = idx
        self._lb.append(float(lb))
        self._ub.append(float(ub))
        self._lin.append(float(lin_cost))
        self._quad.append(float(quad_cost))
        return idx

    def add_linear_cost(self, ref: TermRef, cost: float) -> None:
        self._lin[self._resolve(ref)] += float(cost)

    def _resolve(self, ref: TermRef) -> int:
        if isinstance(ref, str):
            try:
                return self._var_index[ref]
            except KeyError:
                raise UnknownVariable(f"no variable named {ref!r}") from None
        idx = int(ref)
        if not (0 <= idx < len(self._var_names)):
            raise UnknownVariable(f"variable index {idx} out of range")
        return idx

    def _terms(self, terms: Terms) -> list[tuple[int, float]]:
        pairs = terms.items() if isinstance(terms, Mapping) else terms
        return [(self._resolve(ref), float(coef)) for ref, coef in pairs]

    def _register_row(self, name: str) -> None:
        if name in self._row_names:
            raise DuplicateName(f"constraint {name!r} registered twice")
        self._row_names.add(name)

    def add_equality(self, name: str, terms: Terms, rhs: float) -> int:
        self._register_row(name)
        row = len(self._eq_names)
        self._eq_names.append(name)
        for col, val in self._terms(terms):
            self._eq_rows.append(row)
            self._eq_cols.append(col)
            self._eq_vals.append(val)
        self._eq_rhs.append(float(rhs))
        return row

    def add_inequality(self, name: str, terms: Terms, upper: float) -> int:
        """Register ``terms . x <= upper``."""
        self._register_row(name)
        row = len(self._in_names)
        self._in_names.append(name)
        for col, val in self._terms(terms):
            self._in_rows.append(row)
            self._in_cols.append(col)
            self._in_vals.append(val)
        self._in_rhs.append(float(upper))
        return row

    def build(self, const: float = 0.0) -> CanonicalQP:
        n = len(self._var_names)
        a_eq = sparse.csr_matrix(
            (self._eq_vals, (self._eq_rows, self._eq_cols)),
            shape=(len(self._eq_names), n),
        )
        a_in = sparse.csr_matrix(
            (self._in_vals, (self._in_rows, self._in_cols)),
            shape=(len(self._in_names), n),
        )
        return CanonicalQP(
            n=n,
            quad_diag=np.asarray(self._quad, dtype=float),
            lin_cost=np.asarray(self._lin, dtype=float),
            a_eq=a_eq,
            b_eq=np.asarray(self._eq_rhs, dtype=float),
            a_in=a_in,
            ub_in=np.asarray(self._in_rhs, dtype=float),
            lb=np.asarray(self._lb, dtype=float),
            ub=np.asarray(self._ub, dtype=float),
            var_names=tuple(self._var_names),
            eq_names=tuple(self._eq_names),
            in_names=tuple(self._in_names),
            const=float(const),
        )
