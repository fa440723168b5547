"""Assessment of fixed nominations with the ideal real-time controller,
and the multi-day simulation loop.

Once nominations are fixed, the best the plant can still do against the
realized PV is itself a convex QP: the deterministic day problem with the
measured profile as the forecast and the nomination variables pinned to
their committed values.  ``evaluate_nominations`` solves exactly that and
reports the realized dispatch and its objective.

``simulate_dataset`` runs the plan-then-evaluate cycle day by day over a
whole trace.  Days are decoupled by construction (no first-period ramp,
pinned end-of-day state of charge), so they can be solved in parallel;
per-day scenario seeds are derived from ``(seed, day_index)``, which makes
results independent of the worker count and of the order of completion.
"""

from __future__ import annotations

import time
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor

import numpy as np
from pydantic import BaseModel, ConfigDict

from .domain import BessSpec, MarketDay, PvTrace, TenderParams, TraceKind
from .errors import NegativeParameter
from .metrics import penalty
from .planners import (
    NominationSchedule,
    PlannerKind,
    SolverOptions,
    build_deterministic,
    build_perfect,
    build_stochastic,
    extract_nominations,
    validate_nominations,
)
from .qp import solve_qp
from .qp.solver import require_optimal
from .scenariogen import ErrorModelParams, generate_scenarios


class DispatchResult(BaseModel):
    """Realized dispatch of one day under fixed nominations.

    Deviations are reported as the exact hinge values implied by
    nominations and exports, so ``objective_eval`` always equals
    ``sum(-price * e + slack * (dev_pos^2 + dev_neg^2))`` recomputed from
    the stored fields.
    """

    model_config = ConfigDict(frozen=True)

    day_index: int
    nominations_kwh: tuple[float, ...]
    exports_kwh: tuple[float, ...]
    dev_pos_kwh: tuple[float, ...]
    dev_neg_kwh: tuple[float, ...]
    production_kw: tuple[float, ...]
    charge_kw: tuple[float, ...]
    discharge_kw: tuple[float, ...]
    soc_kwh: tuple[float, ...]
    objective_eval: float
    solve_time_s: float


class SimulatedDay(BaseModel):
    model_config = ConfigDict(frozen=True)

    schedule: NominationSchedule
    dispatch: DispatchResult
    wall_time_s: float


class SimulationReport(BaseModel):
    """Plan-and-evaluate results for every day of a dataset."""

    model_config = ConfigDict(frozen=True)

    planner: PlannerKind
    tender: TenderParams
    bess: BessSpec
    seed: int
    n_scenarios: int | None
    scenario_params: ErrorModelParams | None
    days: tuple[SimulatedDay, ...]
    aggregate_objective: float


def evaluate_nominations(nominations: NominationSchedule | Sequence[float],
                         measured_day: MarketDay,
                         tender: TenderParams,
                         bess: BessSpec,
                         options: SolverOptions = SolverOptions()) -> DispatchResult:
    """Ideal real-time dispatch of a day under committed nominations."""
    if isinstance(nominations, NominationSchedule):
        noms = np.asarray(nominations.nominations_kwh, dtype=float)
    else:
        noms = np.asarray(nominations, dtype=float)
    validate_nominations(noms, tender)
    problem = build_perfect(measured_day, tender, bess, fixed_nominations=noms)
    solution = require_optimal(
        problem.qp, solve_qp(problem.qp, tol=options.tol,
                             max_iter=options.max_iter))
    traj = problem.trajectory(solution.primal)
    exports = traj["e"]
    dev_pos = np.maximum(0.0, exports - noms - tender.deadband_kwh)
    dev_neg = np.maximum(0.0, noms - exports - tender.deadband_kwh)
    objective = float(-tender.selling_price * np.sum(exports)
                      + np.sum(penalty(noms, exports, tender.deadband_kwh,
                                       tender.slack_price)))
    as_tuple = lambda arr: tuple(float(v) for v in arr)  # noqa: E731
    return DispatchResult(
        day_index=measured_day.day_index,
        nominations_kwh=as_tuple(noms),
        exports_kwh=as_tuple(exports),
        dev_pos_kwh=as_tuple(dev_pos),
        dev_neg_kwh=as_tuple(dev_neg),
        production_kw=as_tuple(traj["p"]),
        charge_kw=as_tuple(traj["p_cha"]),
        discharge_kw=as_tuple(traj["p_dis"]),
        soc_kwh=as_tuple(traj["soc"]),
        objective_eval=objective,
        solve_time_s=solution.solve_time_s,
    )


def build_day_problem(truth_day: MarketDay,
                      planner: PlannerKind,
                      tender: TenderParams,
                      bess: BessSpec,
                      seed: int,
                      n_scenarios: int,
                      scenario_params: ErrorModelParams | None):
    """Assemble one day's planning problem for the requested planner.

    Planner ``d`` plans on a single sampled forecast path, ``s`` on a full
    scenario set, ``dstar`` directly on the truth.  Scenario randomness is
    keyed by ``(seed, day_index)``.
    """
    day_seed = (int(seed), int(truth_day.day_index))
    if planner == PlannerKind.PERFECT:
        return build_perfect(truth_day, tender, bess)
    if planner == PlannerKind.STOCHASTIC:
        if scenario_params is None:
            raise NegativeParameter("stochastic planner needs error-model params")
        scen = generate_scenarios(truth_day, scenario_params, n_scenarios,
                                  day_seed, tender.capacity_kwp)
        return build_stochastic(scen, tender, bess,
                                day_index=truth_day.day_index)
    if planner == PlannerKind.DETERMINISTIC:
        if scenario_params is None:
            raise NegativeParameter(
                "deterministic planner needs error-model params to sample "
                "its point forecast"
            )
        scen = generate_scenarios(truth_day, scenario_params, 1, day_seed,
                                  tender.capacity_kwp)
        forecast = MarketDay(day_index=truth_day.day_index,
                             period_hours=truth_day.period_hours,
                             values=scen.scenarios[0],
                             kind=TraceKind.POINT_FORECAST)
        return build_deterministic(forecast, tender, bess)
    raise NegativeParameter(f"unknown planner {planner}")  # pragma: no cover


def plan_day(truth_day: MarketDay,
             planner: PlannerKind,
             tender: TenderParams,
             bess: BessSpec,
             seed: int,
             n_scenarios: int,
             scenario_params: ErrorModelParams | None,
             options: SolverOptions = SolverOptions()) -> NominationSchedule:
    """Compute one day's nominations with the requested planner."""
    problem = build_day_problem(truth_day, planner, tender, bess, seed,
                                n_scenarios, scenario_params)
    solution = require_optimal(
        problem.qp, solve_qp(problem.qp, tol=options.tol,
                             max_iter=options.max_iter))
    return extract_nominations(problem, solution)


def _simulate_one(args) -> SimulatedDay:
    (values, day_index, period_hours, planner, tender, bess, seed,
     n_scenarios, scenario_params, options) = args
    started = time.perf_counter()
    truth = MarketDay(day_index=day_index, period_hours=period_hours,
                      values=values, kind=TraceKind.MEASURED)
    schedule = plan_day(truth, planner, tender, bess, seed, n_scenarios,
                        scenario_params, options)
    dispatch = evaluate_nominations(schedule, truth, tender, bess, options)
    return SimulatedDay(schedule=schedule, dispatch=dispatch,
                        wall_time_s=time.perf_counter() - started)


def simulate_dataset(trace: PvTrace,
                     planner: PlannerKind,
                     tender: TenderParams,
                     bess: BessSpec,
                     seed: int = 0,
                     n_scenarios: int = 100,
                     scenario_params: ErrorModelParams | None = None,
                     options: SolverOptions = SolverOptions(),
                     jobs: int = 1) -> SimulationReport:
    """Plan and evaluate every day of a measured trace.

    The input trace is treated as the measured truth; planners that need
    forecasts sample them around it through the error model.  ``jobs``
    only controls worker processes, never the results.
    """
    trace.validate_against(tender)
    tasks = [
        (trace.day(i).values, i, trace.period_hours, planner, tender, bess,
         seed, n_scenarios, scenario_params, options)
        for i in range(trace.n_days)
    ]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            days = list(pool.map(_simulate_one, tasks))
    else:
        days = [_simulate_one(t) for t in tasks]
    return SimulationReport(
        planner=planner,
        tender=tender,
        bess=bess,
        seed=seed,
        n_scenarios=n_scenarios if planner != PlannerKind.PERFECT else None,
        scenario_params=(scenario_params
                         if planner != PlannerKind.PERFECT else None),
        days=tuple(days),
        aggregate_objective=float(sum(d.dispatch.objective_eval for d in days)),
    )
