"""Evaluator tests: fixed-nomination dispatch and the simulation loop."""

from datetime import datetime

import numpy as np
import pytest

from capfirm.domain import (
    BessSpec,
    MarketDay,
    PvTrace,
    TenderParams,
    TraceKind,
)
from capfirm.errors import RampViolation
from capfirm.evaluator import evaluate_nominations, simulate_dataset
from capfirm.planners import PlannerKind, build_perfect, extract_nominations
from capfirm.qp import solve_qp
from capfirm.scenariogen import ErrorModelParams

TENDER = TenderParams()
BESS = BessSpec()
NO_BESS = BessSpec(capacity_kwh=0.0, charge_power_kw=0.0, discharge_power_kw=0.0)


def bell_values(amplitude: float, periods: int = 96) -> tuple[float, ...]:
    hours = np.arange(periods) * (24.0 / periods)
    shape = np.sin(np.pi * np.clip((hours - 6.0) / 12.0, 0.0, 1.0)) ** 2
    return tuple(float(v) for v in amplitude * shape)


def measured_day(values, day_index: int = 0) -> MarketDay:
    return MarketDay(day_index=day_index, period_hours=0.25,
                     values=tuple(values), kind=TraceKind.MEASURED)


class TestEvaluateNominations:
    def test_zero_everything(self):
        day = measured_day([0.0] * 96)
        result = evaluate_nominations(np.zeros(96), day, TENDER, NO_BESS)
        assert result.objective_eval == pytest.approx(0.0, abs=1e-9)
        assert max(result.exports_kwh) <= 1e-6

    def test_perfect_plan_feeds_back_exactly(self):
        day = measured_day(bell_values(1200.0))
        problem = build_perfect(day, TENDER, BESS)
        schedule = extract_nominations(problem, solve_qp(problem.qp, tol=1e-8))
        result = evaluate_nominations(schedule, day, TENDER, BESS)
        assert result.objective_eval == pytest.approx(
            schedule.objective, rel=1e-6, abs=1e-6)

    def test_single_period_stationarity(self):
        # zero nominations, abundant PV: the optimal export solves
        # price = 2 * slack * (e - deadband)  ->  e = 30 kWh per period
        day = measured_day([600.0] * 96)  # 150 kWh available per period
        result = evaluate_nominations(np.zeros(96), day, TENDER, NO_BESS)
        exports = np.asarray(result.exports_kwh)
        assert exports == pytest.approx(np.full(96, 30.0), abs=1e-3)
        per_period = -0.045 * 30.0 + 0.0045 * (30.0 - 25.0) ** 2
        assert per_period == pytest.approx(-1.2375)
        assert result.objective_eval == pytest.approx(per_period * 96, rel=1e-6)

    def test_objective_recomputable_from_fields(self):
        day = measured_day(bell_values(900.0))
        noms = np.minimum(np.asarray(bell_values(900.0)) * 0.25, 500.0)
        # smooth the nomination ramp so the schedule is accepted
        for i in range(1, noms.size):
            noms[i] = np.clip(noms[i], noms[i - 1] - 50.0, noms[i - 1] + 50.0)
        result = evaluate_nominations(noms, day, TENDER, BESS)
        dev_pos = np.asarray(result.dev_pos_kwh)
        dev_neg = np.asarray(result.dev_neg_kwh)
        again = float(-TENDER.selling_price * np.sum(result.exports_kwh)
                      + TENDER.slack_price * (dev_pos @ dev_pos + dev_neg @ dev_neg))
        assert result.objective_eval == pytest.approx(again, abs=1e-8)

    def test_evaluation_never_alters_nominations(self):
        day = measured_day(bell_values(800.0))
        noms = np.full(96, 20.0)
        result = evaluate_nominations(noms, day, TENDER, BESS)
        assert np.array_equal(np.asarray(result.nominations_kwh), noms)

    def test_deadband_neutrality(self):
        # exports within the deadband of nominations incur zero penalty
        day = measured_day([100.0] * 96)  # 25 kWh available per period
        noms = np.full(96, 45.0)  # 20 kWh above what is achievable
        result = evaluate_nominations(noms, day, TENDER, NO_BESS)
        assert max(result.dev_pos_kwh) == 0.0
        assert max(result.dev_neg_kwh) == 0.0
        assert result.objective_eval == pytest.approx(-0.045 * 25.0 * 96, rel=1e-6)

    def test_ramp_violation_rejected(self):
        day = measured_day(bell_values(500.0))
        noms = np.zeros(96)
        noms[10] = 400.0
        with pytest.raises(RampViolation, match="11"):
            evaluate_nominations(noms, day, TENDER, BESS)

    def test_lower_bound_dominance(self):
        # any feasible schedule evaluates no better than the hindsight plan
        day = measured_day(bell_values(1000.0))
        problem = build_perfect(day, TENDER, BESS)
        j_star = extract_nominations(problem, solve_qp(problem.qp, tol=1e-8)).objective
        rng = np.random.default_rng(3)
        noms = np.zeros(96)
        for i in range(1, 96):
            noms[i] = np.clip(noms[i - 1] + rng.uniform(-50.0, 50.0), 0.0, 500.0)
        result = evaluate_nominations(noms, day, TENDER, BESS)
        assert result.objective_eval >= j_star - 1e-6 * (1.0 + abs(j_star))


class TestSimulateDataset:
    def trace(self, days: int, amplitude: float = 1000.0) -> PvTrace:
        values = []
        for d in range(days):
            values.extend(bell_values(amplitude * (0.6 + 0.1 * d)))
        return PvTrace(start=datetime(2019, 2, 1), period_hours=0.25,
                       values=tuple(values), kind=TraceKind.MEASURED)

    def test_single_day_report(self):
        report = simulate_dataset(self.trace(1), PlannerKind.PERFECT,
                                  TENDER, BESS, seed=1)
        assert len(report.days) == 1
        assert report.aggregate_objective == pytest.approx(
            report.days[0].dispatch.objective_eval)

    def test_perfect_planner_evaluates_to_its_own_objective(self):
        report = simulate_dataset(self.trace(3), PlannerKind.PERFECT,
                                  TENDER, BESS, seed=1)
        planned = sum(d.schedule.objective for d in report.days)
        assert report.aggregate_objective == pytest.approx(planned, rel=1e-6)

    def test_zero_noise_stochastic_equals_perfect(self):
        trace = self.trace(2)
        perfect = simulate_dataset(trace, PlannerKind.PERFECT, TENDER, BESS)
        params = ErrorModelParams(p=0.9, sigma=0.0)
        stoch = simulate_dataset(trace, PlannerKind.STOCHASTIC, TENDER, BESS,
                                 seed=5, n_scenarios=3, scenario_params=params)
        assert stoch.aggregate_objective == pytest.approx(
            perfect.aggregate_objective, rel=1e-6)

    def test_parallel_jobs_identical(self):
        trace = self.trace(2)
        params = ErrorModelParams.from_eps_max(0.25)
        seq = simulate_dataset(trace, PlannerKind.STOCHASTIC, TENDER, BESS,
                               seed=2, n_scenarios=4, scenario_params=params)
        par = simulate_dataset(trace, PlannerKind.STOCHASTIC, TENDER, BESS,
                               seed=2, n_scenarios=4, scenario_params=params,
                               jobs=2)
        for a, b in zip(seq.days, par.days):
            assert a.schedule.nominations_kwh == b.schedule.nominations_kwh
            assert a.dispatch.exports_kwh == b.dispatch.exports_kwh
        assert seq.aggregate_objective == par.aggregate_objective

    def test_deterministic_planner_runs(self):
        params = ErrorModelParams.from_eps_max(0.5)
        report = simulate_dataset(self.trace(1), PlannerKind.DETERMINISTIC,
                                  TENDER, BESS, seed=4, n_scenarios=1,
                                  scenario_params=params)
        assert report.days[0].schedule.planner == PlannerKind.DETERMINISTIC
        # imperfect forecast can do no better than hindsight
        perfect = simulate_dataset(self.trace(1), PlannerKind.PERFECT,
                                   TENDER, BESS)
        assert (report.aggregate_objective
                >= perfect.aggregate_objective - 1e-6 *
                (1.0 + abs(perfect.aggregate_objective)))
