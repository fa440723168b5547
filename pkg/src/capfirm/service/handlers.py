"""Schema-to-schema handlers behind the HTTP endpoints.

Kept free of FastAPI imports so the CLI can run them in-process.
"""

from __future__ import annotations

from .. import __version__
from ..evaluator import (
    build_day_problem,
    evaluate_nominations,
    simulate_dataset,
)
from ..metrics import bess_sweep, compute_indicators, optimal_bess_size
from ..planners import PlannerKind, SolverOptions, extract_nominations
from ..qp import solve_qp
from ..qp.solver import require_optimal
from ..scenariogen import generate_scenarios
from ..dataio import synth_pv_trace
from .schemas import (
    EvaluateRequest,
    EvaluateResponse,
    HealthResponse,
    PlannedDay,
    PlanRequest,
    PlanResponse,
    ScenariosRequest,
    ScenariosResponse,
    SimulateRequest,
    SimulateResponse,
    SizingSummary,
    SweepRequest,
    SweepResponse,
    SynthRequest,
    SynthResponse,
)


def _options(req) -> SolverOptions:
    return SolverOptions(tol=req.solver.tol, max_iter=req.solver.max_iter)


def _scenario_params(req):
    return req.scenario.to_params() if req.scenario is not None else None


def handle_health() -> HealthResponse:
    return HealthResponse(status="ok", version=__version__)


def handle_plan(req: PlanRequest) -> PlanResponse:
    req.trace.validate_against(req.tender)
    params = _scenario_params(req)
    options = _options(req)
    days = []
    for day in req.trace.days():
        problem = build_day_problem(day, req.planner, req.tender, req.bess,
                                    req.seed, req.n_scenarios, params)
        solution = require_optimal(
            problem.qp, solve_qp(problem.qp, tol=options.tol,
                                 max_iter=options.max_iter))
        schedule = extract_nominations(problem, solution)
        days.append(PlannedDay(schedule=schedule,
                               n_variables=problem.n_variables,
                               n_constraints=problem.n_constraints))
    return PlanResponse(
        days=tuple(days),
        total_objective=float(sum(d.schedule.objective for d in days)),
    )


def handle_evaluate(req: EvaluateRequest) -> EvaluateResponse:
    req.measured.validate_against(req.tender)
    by_day = {d.day_index: d.nominations_kwh for d in req.nominations}
    options = _options(req)
    days = []
    for day in req.measured.days():
        if day.day_index not in by_day:
            continue
        days.append(evaluate_nominations(by_day[day.day_index], day,
                                         req.tender, req.bess, options))
    return EvaluateResponse(
        days=tuple(days),
        aggregate_objective=float(sum(d.objective_eval for d in days)),
    )


def handle_simulate(req: SimulateRequest) -> SimulateResponse:
    report = simulate_dataset(
        req.trace, req.planner, req.tender, req.bess, seed=req.seed,
        n_scenarios=req.n_scenarios, scenario_params=_scenario_params(req),
        options=_options(req), jobs=req.jobs)
    indicators = compute_indicators(report, req.trace, req.tender)
    return SimulateResponse(report=report, indicators=indicators)


def handle_sweep(req: SweepRequest) -> SweepResponse:
    rows = bess_sweep(
        req.trace, list(req.cases), req.planner, req.tender, seed=req.seed,
        n_scenarios=req.n_scenarios, scenario_params=_scenario_params(req),
        horizon_months=req.horizon_months, jobs=req.jobs,
        options=_options(req))
    sizing = None
    if req.capex_keur_per_kwh is not None:
        result = optimal_bess_size(rows, req.capex_keur_per_kwh)
        sizing = SizingSummary(
            optimal_kwh=result.optimal_kwh,
            breakeven_capex_keur_per_kwh=result.breakeven_capex_keur_per_kwh,
            fit_a=result.fit.a, fit_b=result.fit.b, fit_c=result.fit.c)
    return SweepResponse(rows=tuple(rows), sizing=sizing)


def handle_scenarios(req: ScenariosRequest) -> ScenariosResponse:
    params = req.scenario.to_params()
    day = req.trace.day(req.day_index)
    scenarios = generate_scenarios(day, params, req.n_scenarios,
                                   (req.seed, req.day_index),
                                   req.tender.capacity_kwp)
    return ScenariosResponse(scenarios=scenarios, params=params, seed=req.seed)


def handle_synth(req: SynthRequest) -> SynthResponse:
    trace = synth_pv_trace(req.days, req.capacity_kwp, req.peak_fraction,
                           req.seed, start=req.start,
                           period_minutes=req.period_minutes)
    return SynthResponse(trace=trace)
