"""Day-ahead nomination planners.

Three problem flavours share one builder:

- deterministic: plan against a point forecast;
- perfect: plan against the measured profile (hindsight oracle, the lower
  bound every other plan is judged against);
- stochastic: one shared nomination vector, per-scenario copies of every
  other variable, scenario-probability-weighted objective.

Decision variables per day (energies in kWh, powers in kW):

    e_star[t]         nominated export energy (shared across scenarios)
    e[t,w]            realized export energy
    dev_pos/dev_neg   deviation beyond the deadband, split by sign
    p[t,w]            dispatched PV power (curtailment is p < profile)
    p_cha/p_dis       storage charge/discharge power
    soc[t,w]          state of charge at the end of period t

The objective is sum_w prob_w * sum_t (-price * e + slack * (dev_pos^2 +
dev_neg^2)).  A 1e-9 linear tie-break on charge/discharge power keeps
dispatch clean (simultaneous charge/discharge is never profitable with
unit efficiencies but can be degenerate); reported objectives exclude it.

The first-period ramp constraint is dropped and the end-of-day state of
charge is pinned, so consecutive days decouple and can be solved
independently.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict

from .domain import BessSpec, MarketDay, ScenarioSet, TenderParams, TraceKind
from .errors import InvalidNominations, LengthMismatch, NotOptimal, RampViolation
from .metrics import penalty
from .qp import CanonicalQP, QpModel, QpSolution, SolveStatus

#: linear tie-break cost on charge/discharge power, excluded from reports
MICRO_TIE_PENALTY = 1e-9

#: repairs larger than this (in kWh) are treated as assembly/solver bugs
MAX_FEASIBILITY_REPAIR_KWH = 1e-3

PER_SCENARIO_SYMBOLS = ("e", "dev_pos", "dev_neg", "p", "p_cha", "p_dis", "soc")


class PlannerKind(str, Enum):
    DETERMINISTIC = "d"
    PERFECT = "dstar"
    STOCHASTIC = "s"


@dataclass(frozen=True)
class SolverOptions:
    """Tolerance/iteration settings used for planner and evaluator solves."""

    tol: float = 1e-8
    max_iter: int = 20000


@dataclass(frozen=True)
class DayProblem:
    """Assembled QP for one market day plus the symbol-to-column map."""

    kind: PlannerKind
    qp: CanonicalQP
    tender: TenderParams
    bess: BessSpec
    day_index: int
    probabilities: tuple[float, ...]
    estar_cols: np.ndarray = field(repr=False)
    scenario_cols: dict = field(repr=False)  # symbol -> (n_scenarios, T) array

    @property
    def n_scenarios(self) -> int:
        return len(self.probabilities)

    @property
    def n_variables(self) -> int:
        return self.qp.n

    @property
    def n_constraints(self) -> int:
        return self.qp.n_rows

    def column(self, symbol: str, period: int, scenario: int | None = None) -> int:
        """Column index of ``symbol`` at 1-based ``period`` (and scenario)."""
        if symbol == "e_star":
            return int(self.estar_cols[period - 1])
        w = 0 if scenario is None else scenario
        return int(self.scenario_cols[symbol][w, period - 1])

    def nominations(self, primal: np.ndarray) -> np.ndarray:
        return np.asarray(primal)[self.estar_cols]

    def trajectory(self, primal: np.ndarray, scenario: int = 0) -> dict[str, np.ndarray]:
        x = np.asarray(primal)
        return {sym: x[self.scenario_cols[sym][scenario]]
                for sym in PER_SCENARIO_SYMBOLS}

    def report_objective(self, primal: np.ndarray) -> float:
        """Planning objective recomputed from nominations and exports.

        Uses the exact deadband-penalty formula instead of the solver's
        deviation variables: the quadratic penalty has a flat bottom, so
        at finite tolerance the solver can leave the deviation slacks a
        hair above their true values.  This also excludes the
        charge/discharge tie-break term.
        """
        x = np.asarray(primal)
        price = self.tender.selling_price
        estar = x[self.estar_cols]
        total = 0.0
        for w, prob in enumerate(self.probabilities):
            e = x[self.scenario_cols["e"][w]]
            pen = penalty(estar, e, self.tender.deadband_kwh,
                          self.tender.slack_price)
            total += prob * float(-price * np.sum(e) + np.sum(pen))
        return total


class NominationSchedule(BaseModel):
    """Per-day nomination vector with solve metadata."""

    model_config = ConfigDict(frozen=True)

    day_index: int
    planner: PlannerKind
    nominations_kwh: tuple[float, ...]
    objective: float
    status: str
    solve_time_s: float
    iterations: int


def _build(kind: PlannerKind,
           profiles: np.ndarray,
           probabilities: np.ndarray,
           tender: TenderParams,
           bess: BessSpec,
           day_index: int,
           fixed_nominations: np.ndarray | None = None) -> DayProblem:
    t_periods = tender.periods
    n_scen = profiles.shape[0]
    if profiles.shape[1] != t_periods:
        raise LengthMismatch(
            f"profiles have {profiles.shape[1]} periods, tender day has {t_periods}"
        )
    dt = tender.period_hours
    cap_kwh = tender.export_cap_kwh
    ramp_kwh = tender.ramp_limit_kwh
    tag = (lambda t, w: f"{t},w{w}") if kind == PlannerKind.STOCHASTIC \
        else (lambda t, w: f"{t}")

    m = QpModel()
    estar_cols = np.empty(t_periods, dtype=int)
    for t in range(1, t_periods + 1):
        if fixed_nominations is None:
            lo, hi = 0.0, cap_kwh
        else:
            lo = hi = float(fixed_nominations[t - 1])
        estar_cols[t - 1] = m.add_variable(f"e_star[{t}]", lb=lo, ub=hi)

    cols = {sym: np.empty((n_scen, t_periods), dtype=int)
            for sym in PER_SCENARIO_SYMBOLS}
    for w in range(n_scen):
        prob = float(probabilities[w])
        for t in range(1, t_periods + 1):
            sfx = tag(t, w)
            soc_lo, soc_hi = bess.capacity_min_kwh, bess.capacity_kwh
            if t == t_periods:
                soc_lo = soc_hi = bess.soc_end_kwh
            i = t - 1
            cols["e"][w, i] = m.add_variable(
                f"e[{sfx}]", lb=0.0, ub=cap_kwh,
                lin_cost=-prob * tender.selling_price)
            cols["dev_pos"][w, i] = m.add_variable(
                f"dev_pos[{sfx}]", lb=0.0, quad_cost=prob * tender.slack_price)
            cols["dev_neg"][w, i] = m.add_variable(
                f"dev_neg[{sfx}]", lb=0.0, quad_cost=prob * tender.slack_price)
            cols["p"][w, i] = m.add_variable(
                f"p[{sfx}]", lb=0.0, ub=float(profiles[w, i]))
            cols["p_cha"][w, i] = m.add_variable(
                f"p_cha[{sfx}]", lb=0.0, ub=bess.charge_power_kw,
                lin_cost=prob * MICRO_TIE_PENALTY)
            cols["p_dis"][w, i] = m.add_variable(
                f"p_dis[{sfx}]", lb=0.0, ub=bess.discharge_power_kw,
                lin_cost=prob * MICRO_TIE_PENALTY)
            cols["soc"][w, i] = m.add_variable(
                f"soc[{sfx}]", lb=soc_lo, ub=soc_hi)

    # deviation linking: dev_pos >= e - e_star - deadband and mirrored
    deadband = tender.deadband_kwh
    for w in range(n_scen):
        for t in range(1, t_periods + 1):
            i = t - 1
            sfx = tag(t, w)
            m.add_inequality(
                f"dev_pos[{sfx}]>=",
                [(int(cols["e"][w, i]), 1.0), (int(estar_cols[i]), -1.0),
                 (int(cols["dev_pos"][w, i]), -1.0)],
                deadband)
            m.add_inequality(
                f"dev_neg[{sfx}]>=",
                [(int(estar_cols[i]), 1.0), (int(cols["e"][w, i]), -1.0),
                 (int(cols["dev_neg"][w, i]), -1.0)],
                deadband)

    # power balance and storage dynamics
    eta_c = bess.eta_charge
    inv_eta_d = 1.0 / bess.eta_discharge
    for w in range(n_scen):
        for t in range(1, t_periods + 1):
            i = t - 1
            sfx = tag(t, w)
            m.add_equality(
                f"balance[{sfx}]",
                [(int(cols["e"][w, i]), 1.0 / dt),
                 (int(cols["p"][w, i]), -1.0),
                 (int(cols["p_dis"][w, i]), -1.0),
                 (int(cols["p_cha"][w, i]), 1.0)],
                0.0)
            terms = [(int(cols["soc"][w, i]), 1.0),
                     (int(cols["p_cha"][w, i]), -dt * eta_c),
                     (int(cols["p_dis"][w, i]), dt * inv_eta_d)]
            if t == 1:
                m.add_equality(f"soc[{sfx}]", terms, bess.soc_init_kwh)
            else:
                terms.append((int(cols["soc"][w, i - 1]), -1.0))
                m.add_equality(f"soc[{sfx}]", terms, 0.0)

    # nomination ramp chain; first period deactivated to decouple days
    for t in range(2, t_periods + 1):
        i = t - 1
        m.add_inequality(f"ramp_up[{t}]",
                         [(int(estar_cols[i]), 1.0), (int(estar_cols[i - 1]), -1.0)],
                         ramp_kwh)
        m.add_inequality(f"ramp_dn[{t}]",
                         [(int(estar_cols[i - 1]), 1.0), (int(estar_cols[i]), -1.0)],
                         ramp_kwh)

    return DayProblem(
        kind=kind, qp=m.build(), tender=tender, bess=bess,
        day_index=day_index,
        probabilities=tuple(float(p) for p in probabilities),
        estar_cols=estar_cols, scenario_cols=cols,
    )


def build_deterministic(forecast_day: MarketDay, tender: TenderParams,
                        bess: BessSpec) -> DayProblem:
    """Planner on a point forecast."""
    profile = np.asarray(forecast_day.values, dtype=float)[None, :]
    return _build(PlannerKind.DETERMINISTIC, profile, np.array([1.0]),
                  tender, bess, forecast_day.day_index)


def build_perfect(measured_day: MarketDay, tender: TenderParams,
                  bess: BessSpec,
                  fixed_nominations: np.ndarray | None = None) -> DayProblem:
    """Planner with hindsight: the point forecast is the measured profile."""
    if measured_day.kind != TraceKind.MEASURED:
        raise InvalidNominations(
            "perfect planner needs a measured day, got "
            f"{measured_day.kind.value}"
        )
    profile = np.asarray(measured_day.values, dtype=float)[None, :]
    return _build(PlannerKind.PERFECT, profile, np.array([1.0]),
                  tender, bess, measured_day.day_index,
                  fixed_nominations=fixed_nominations)


def build_stochastic(scenarios: ScenarioSet, tender: TenderParams,
                     bess: BessSpec, day_index: int = 0) -> DayProblem:
    """Scenario-based planner with one shared nomination vector."""
    scenarios.validate_against(tender)
    profiles = np.asarray(scenarios.scenarios, dtype=float)
    probs = np.asarray(scenarios.probabilities, dtype=float)
    return _build(PlannerKind.STOCHASTIC, profiles, probs, tender, bess,
                  day_index)


def validate_nominations(nominations: np.ndarray, tender: TenderParams,
                         tol: float = 1e-6) -> None:
    """Check the acceptance rules for a nomination vector.

    Raises :class:`RampViolation` (naming the period) or
    :class:`InvalidNominations`.  ``tol`` is in kW for the ramp check and
    kWh for the bound checks.
    """
    noms = np.asarray(nominations, dtype=float)
    if noms.size != tender.periods:
        raise LengthMismatch(
            f"schedule has {noms.size} periods, expected {tender.periods}"
        )
    if np.any(noms < -tol):
        t = int(np.argmin(noms)) + 1
        raise InvalidNominations(f"negative nomination at period {t}")
    cap = tender.export_cap_kwh
    if np.any(noms > cap + tol):
        t = int(np.argmax(noms)) + 1
        raise InvalidNominations(
            f"nomination at period {t} exceeds the export cap "
            f"({noms[t - 1]:.6f} > {cap:.6f} kWh)"
        )
    if noms.size > 1:
        ramp_kw = np.abs(np.diff(noms)) / tender.period_hours
        worst = int(np.argmax(ramp_kw))
        if ramp_kw[worst] > tender.ramp_limit_kw + tol:
            raise RampViolation(
                f"ramp {ramp_kw[worst]:.6f} kW between periods {worst + 1} "
                f"and {worst + 2} exceeds limit {tender.ramp_limit_kw} kW"
            )


def _repair_nominations(noms: np.ndarray, tender: TenderParams) -> np.ndarray:
    """Project solver output onto the exactly-feasible nomination set.

    The projection magnitude is bounded by the solver feasibility
    tolerance; anything larger than MAX_FEASIBILITY_REPAIR_KWH raises
    because it would indicate an assembly bug rather than roundoff.
    """
    cap = tender.export_cap_kwh
    ramp = tender.ramp_limit_kwh
    repaired = np.clip(noms, 0.0, cap)
    for i in range(1, repaired.size):
        lo = max(0.0, repaired[i - 1] - ramp)
        hi = min(cap, repaired[i - 1] + ramp)
        repaired[i] = min(max(repaired[i], lo), hi)
    worst = float(np.max(np.abs(repaired - noms), initial=0.0))
    if worst > MAX_FEASIBILITY_REPAIR_KWH:
        raise RampViolation(
            f"nominations violate their constraints by {worst:.6g} kWh; "
            "this indicates a solver or assembly bug"
        )
    return repaired


def extract_nominations(problem: DayProblem, solution: QpSolution) -> NominationSchedule:
    """Read the nomination vector out of an optimal solution.

    The vector is projected onto the feasible set (roundoff-sized moves
    only) and re-validated, so downstream consumers can rely on the
    acceptance rules holding exactly.
    """
    if solution.status != SolveStatus.OPTIMAL:
        raise NotOptimal(
            f"cannot extract nominations from a {solution.status.value} solve"
        )
    noms = _repair_nominations(problem.nominations(solution.primal),
                               problem.tender)
    validate_nominations(noms, problem.tender)
    return NominationSchedule(
        day_index=problem.day_index,
        planner=problem.kind,
        nominations_kwh=tuple(float(v) for v in noms),
        objective=problem.report_objective(solution.primal),
        status=solution.status.value,
        solve_time_s=solution.solve_time_s,
        iterations=solution.iterations,
    )
