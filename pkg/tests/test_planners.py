"""Planner assembly and optimality tests.

The T=2 deterministic case is cross-checked against a brute-force grid
oracle that evaluates the raw deadband-penalty formula on the reduced
(nomination, export) space; it shares no code with the QP route.
"""

import numpy as np
import pytest

from capfirm.domain import BessSpec, MarketDay, ScenarioSet, TenderParams, TraceKind
from capfirm.errors import InvalidNominations, NotOptimal, RampViolation
from capfirm.planners import (
    PlannerKind,
    build_deterministic,
    build_perfect,
    build_stochastic,
    extract_nominations,
    validate_nominations,
)
from capfirm.qp import SolveStatus, solve_qp


TENDER = TenderParams()
NO_BESS = BessSpec(capacity_kwh=0.0, capacity_min_kwh=0.0,
                   charge_power_kw=0.0, discharge_power_kw=0.0,
                   soc_init_kwh=0.0, soc_end_kwh=0.0)
BESS = BessSpec()


def bell_day(amplitude: float, periods: int = 96, day_index: int = 0,
             kind: TraceKind = TraceKind.MEASURED) -> MarketDay:
    hours = np.arange(periods) * (24.0 / periods)
    shape = np.sin(np.pi * np.clip((hours - 6.0) / 12.0, 0.0, 1.0)) ** 2
    return MarketDay(day_index=day_index, period_hours=24.0 / periods,
                     values=tuple(float(v) for v in amplitude * shape),
                     kind=kind)


def forecast_like(day: MarketDay) -> MarketDay:
    return MarketDay(day_index=day.day_index, period_hours=day.period_hours,
                     values=day.values, kind=TraceKind.POINT_FORECAST)


class TestProblemShapes:
    def test_deterministic_variable_count(self):
        problem = build_deterministic(forecast_like(bell_day(900.0)), TENDER, BESS)
        t = TENDER.periods
        assert 8 * t <= problem.n_variables <= 8 * t + 2
        assert problem.n_variables == 8 * t

    def test_stochastic_variable_counts(self):
        day = bell_day(900.0)
        t = TENDER.periods
        for n_scen in (1, 5, 10):
            ss = ScenarioSet(
                scenarios=tuple(day.values for _ in range(n_scen)),
                probabilities=tuple([1.0 / n_scen] * n_scen))
            problem = build_stochastic(ss, TENDER, BESS)
            assert problem.n_variables == t + 7 * t * n_scen

    def test_column_lookup(self):
        problem = build_deterministic(forecast_like(bell_day(500.0)), TENDER, BESS)
        col = problem.column("e_star", 10)
        assert problem.qp.var_names[col] == "e_star[10]"
        col = problem.column("soc", 96)
        assert problem.qp.var_names[col] == "soc[96]"

    def test_perfect_matches_deterministic_matrices(self):
        day = bell_day(700.0)
        perfect = build_perfect(day, TENDER, BESS)
        determin = build_deterministic(forecast_like(day), TENDER, BESS)
        assert (perfect.qp.a_eq != determin.qp.a_eq).nnz == 0
        assert (perfect.qp.a_in != determin.qp.a_in).nnz == 0
        assert np.array_equal(perfect.qp.lin_cost, determin.qp.lin_cost)
        assert np.array_equal(perfect.qp.lb, determin.qp.lb)
        assert np.array_equal(perfect.qp.ub, determin.qp.ub)

    def test_perfect_requires_measured_day(self):
        with pytest.raises(InvalidNominations):
            build_perfect(forecast_like(bell_day(500.0)), TENDER, BESS)


class TestDeterministicOptima:
    def test_zero_forecast_gives_zero_plan(self):
        day = forecast_like(bell_day(0.0))
        problem = build_deterministic(day, TENDER, NO_BESS)
        sol = solve_qp(problem.qp, tol=1e-8)
        schedule = extract_nominations(problem, sol)
        assert schedule.objective == pytest.approx(0.0, abs=1e-7)
        exports = problem.trajectory(sol.primal)["e"]
        assert np.allclose(exports, 0.0, atol=1e-5)

    def test_constant_forecast_no_bess(self):
        # 100 kW for every period, no storage: export the full 25 kWh
        day = MarketDay(day_index=0, period_hours=0.25,
                        values=tuple([100.0] * 96),
                        kind=TraceKind.POINT_FORECAST)
        problem = build_deterministic(day, TENDER, NO_BESS)
        sol = solve_qp(problem.qp, tol=1e-8)
        schedule = extract_nominations(problem, sol)
        assert schedule.objective == pytest.approx(-0.045 * 25.0 * 96, rel=1e-6)
        exports = problem.trajectory(sol.primal)["e"]
        assert exports == pytest.approx(np.full(96, 25.0), abs=1e-4)

    def test_two_period_matches_penalty_grid_oracle(self):
        # tight deadband and ramp so the optimum trades penalty for revenue
        tender = TenderParams(period_hours=12.0, deadband_kwh=2.0,
                              ramp_limit_kw=0.5, export_cap_kw=100.0,
                              slack_price=0.01, capacity_kwp=10.0)
        # 12 h periods -> T = 2; available energy 20 kWh then 5 kWh
        day = MarketDay(day_index=0, period_hours=12.0, values=(20.0 / 12.0, 5.0 / 12.0),
                        kind=TraceKind.POINT_FORECAST)
        problem = build_deterministic(day, tender, NO_BESS)
        sol = solve_qp(problem.qp, tol=1e-9)
        got = problem.report_objective(sol.primal)

        def objective(es1, es2, e1, e2):
            pen = 0.0
            for es, e in ((es1, e1), (es2, e2)):
                pen += 0.01 * np.maximum(0.0, np.abs(es - e) - 2.0) ** 2
            return -0.045 * (e1 + e2) + pen

        # brute-force refinement on the reduced 4-d space with the ramp rule
        lo = np.zeros(4)
        hi = np.array([25.0, 25.0, 20.0, 5.0])
        best_f = np.inf
        for _ in range(8):
            axes = [np.linspace(lo[i], hi[i], 21) for i in range(4)]
            g = np.meshgrid(*axes, indexing="ij")
            f = objective(g[0], g[1], g[2], g[3])
            f = np.where(np.abs(g[0] - g[1]) <= 0.5 * 12.0, f, np.inf)
            k = np.unravel_index(np.argmin(f), f.shape)
            best_f = min(best_f, float(f[k]))
            center = np.array([g[i][k] for i in range(4)])
            step = (hi - lo) / 20.0
            lo = np.maximum(center - 2 * step, 0.0)
            hi_orig = np.array([25.0, 25.0, 20.0, 5.0])
            hi = np.minimum(center + 2 * step, hi_orig)
        assert got == pytest.approx(best_f, abs=5e-4)


class TestStochasticCollapse:
    def test_single_scenario_equals_deterministic(self):
        day = bell_day(800.0)
        ss = ScenarioSet(scenarios=(day.values,), probabilities=(1.0,))
        stoch = build_stochastic(ss, TENDER, BESS)
        det = build_deterministic(forecast_like(day), TENDER, BESS)
        j_s = extract_nominations(stoch, solve_qp(stoch.qp, tol=1e-8)).objective
        j_d = extract_nominations(det, solve_qp(det.qp, tol=1e-8)).objective
        assert j_s == pytest.approx(j_d, rel=1e-6, abs=1e-8)

    def test_identical_scenarios_equal_deterministic(self):
        day = bell_day(600.0)
        ss = ScenarioSet(scenarios=tuple(day.values for _ in range(4)),
                         probabilities=tuple([0.25] * 4))
        stoch = build_stochastic(ss, TENDER, BESS)
        det = build_deterministic(forecast_like(day), TENDER, BESS)
        j_s = extract_nominations(stoch, solve_qp(stoch.qp, tol=1e-8)).objective
        j_d = extract_nominations(det, solve_qp(det.qp, tol=1e-8)).objective
        assert j_s == pytest.approx(j_d, rel=1e-6, abs=1e-8)


@pytest.fixture(scope="module")
def solved():
    day = bell_day(1100.0)
    ss = ScenarioSet(
        scenarios=(day.values,
                   tuple(0.8 * v for v in day.values),
                   tuple(min(1.15 * v, 2000.0) for v in day.values)),
        probabilities=(0.5, 0.3, 0.2))
    problem = build_stochastic(ss, TENDER, BESS)
    return problem, solve_qp(problem.qp, tol=1e-10)


class TestSolutionInvariants:

    def test_power_balance(self, solved):
        problem, sol = solved
        dt = TENDER.period_hours
        for w in range(problem.n_scenarios):
            traj = problem.trajectory(sol.primal, w)
            residual = (traj["e"] / dt - traj["p"] - traj["p_dis"]
                        + traj["p_cha"])
            assert np.max(np.abs(residual)) < 1e-5

    def test_soc_telescoping_with_unit_efficiency(self, solved):
        problem, sol = solved
        dt = TENDER.period_hours
        for w in range(problem.n_scenarios):
            traj = problem.trajectory(sol.primal, w)
            lhs = traj["soc"][-1] - BESS.soc_init_kwh
            rhs = dt * float(np.sum(traj["p_cha"] - traj["p_dis"]))
            assert lhs == pytest.approx(rhs, abs=1e-5)

    def test_curtailment_bound(self, solved):
        problem, sol = solved
        profiles = np.asarray([problem.qp.ub[problem.scenario_cols["p"][w]]
                               for w in range(problem.n_scenarios)])
        for w in range(problem.n_scenarios):
            traj = problem.trajectory(sol.primal, w)
            assert np.all(traj["p"] <= profiles[w] + 1e-6)

    def test_deviation_linkage(self, solved):
        # the quadratic penalty is flat at zero deviation, so the slack can
        # sit sqrt(tol * scale / slack_price) above the exact hinge value
        problem, sol = solved
        estar = problem.nominations(sol.primal)
        for w in range(problem.n_scenarios):
            traj = problem.trajectory(sol.primal, w)
            want_pos = np.maximum(0.0, traj["e"] - estar - TENDER.deadband_kwh)
            want_neg = np.maximum(0.0, estar - traj["e"] - TENDER.deadband_kwh)
            assert np.all(traj["dev_pos"] >= want_pos - 1e-6)
            assert np.all(traj["dev_neg"] >= want_neg - 1e-6)
            assert traj["dev_pos"] == pytest.approx(want_pos, abs=5e-3)
            assert traj["dev_neg"] == pytest.approx(want_neg, abs=5e-3)

    def test_ramp_and_cap_echo(self, solved):
        problem, sol = solved
        schedule = extract_nominations(problem, sol)
        noms = np.asarray(schedule.nominations_kwh)
        dt = TENDER.period_hours
        assert np.max(np.abs(np.diff(noms)) / dt) <= TENDER.ramp_limit_kw + 1e-6
        assert np.max(noms / dt) <= TENDER.export_cap_kw + 1e-6
        assert np.min(noms) >= -1e-9


class TestNominationValidation:
    def test_extract_requires_optimal(self):
        problem = build_deterministic(forecast_like(bell_day(500.0)), TENDER, BESS)
        sol = solve_qp(problem.qp, tol=1e-8)
        bad = sol.__class__(**{**sol.__dict__, "status": SolveStatus.MAX_ITERATIONS})
        with pytest.raises(NotOptimal):
            extract_nominations(problem, bad)

    def test_ramp_violation_named(self):
        noms = np.zeros(96)
        noms[40] = 400.0  # jump of 1600 kW across one 15-min period
        with pytest.raises(RampViolation, match="41"):
            validate_nominations(noms, TENDER)

    def test_cap_violation(self):
        noms = np.full(96, 600.0)  # cap is 500 kWh per period
        with pytest.raises(InvalidNominations):
            validate_nominations(noms, TENDER)

    def test_valid_schedule_passes(self):
        noms = np.full(96, 100.0)
        validate_nominations(noms, TENDER)
