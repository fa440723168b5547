"""Tests for remuneration arithmetic, indicators, and storage sizing."""

from datetime import datetime

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from capfirm.domain import BessSpec, PvTrace, TenderParams, TraceKind
from capfirm.errors import DayMismatch, DegenerateFit, MissingBaseline
from capfirm.evaluator import simulate_dataset
from capfirm.metrics import (
    bess_sweep,
    compute_indicators,
    delta_net_revenue,
    net_remuneration,
    optimal_bess_size,
    penalty,
)
from capfirm.planners import PlannerKind

#: capacity / projected-gain points from the reference sweep, kWh / kEUR
SWEEP_POINTS = [(2000.0, 128.0), (1000.0, 94.0), (500.0, 72.0),
                (250.0, 49.0), (0.0, 0.0)]


class TestPenalty:
    def test_zero_at_deadband_boundary(self):
        assert penalty(100.0, 75.0, 25.0, 0.0045) == 0.0
        assert penalty(75.0, 100.0, 25.0, 0.0045) == 0.0

    def test_worked_example(self):
        assert penalty(200.0, 100.0, 25.0, 0.0045) == pytest.approx(25.3125)

    @given(st.floats(-500, 500), st.floats(-500, 500))
    @settings(max_examples=60, deadline=None)
    def test_symmetry_under_swap(self, a, b):
        assert penalty(a, b, 25.0, 0.0045) == penalty(b, a, 25.0, 0.0045)

    def test_zero_inside_deadband_positive_outside(self):
        gaps = np.linspace(-80.0, 80.0, 161)
        values = penalty(gaps, np.zeros_like(gaps), 25.0, 0.0045)
        inside = np.abs(gaps) <= 25.0
        assert np.all(values[inside] == 0.0)
        assert np.all(values[~inside] > 0.0)

    def test_convex_in_gap_by_finite_differences(self):
        gaps = np.linspace(-100.0, 100.0, 401)
        values = penalty(gaps, np.zeros_like(gaps), 25.0, 0.0045)
        second = values[2:] - 2.0 * values[1:-1] + values[:-2]
        assert np.min(second) >= -1e-12


class TestNetRemuneration:
    def test_full_match(self):
        assert net_remuneration(100.0, 100.0, 0.045, 25.0, 0.0045) == pytest.approx(4.5)

    def test_zero_case(self):
        assert net_remuneration(0.0, 0.0, 0.045, 25.0, 0.0045) == 0.0

    def test_penalty_only_case(self):
        assert net_remuneration(100.0, 0.0, 0.045, 25.0, 0.0045) == pytest.approx(-25.3125)


def small_trace(days: int = 2) -> PvTrace:
    # 6-hour periods -> T = 4; tiny numbers keep the arithmetic checkable
    values = []
    for d in range(days):
        values.extend([0.0, 6.0 + 2.0 * d, 4.0, 0.0])
    return PvTrace(start=datetime(2019, 2, 1), period_hours=6.0,
                   values=tuple(values), kind=TraceKind.MEASURED)


SMALL_TENDER = TenderParams(period_hours=6.0, export_cap_kw=10.0,
                            capacity_kwp=10.0, ramp_limit_kw=5.0,
                            deadband_kwh=2.0)
SMALL_BESS = BessSpec(capacity_kwh=5.0, charge_power_kw=5.0,
                      discharge_power_kw=5.0)


@pytest.fixture(scope="module")
def report():
    return simulate_dataset(small_trace(), PlannerKind.PERFECT,
                            SMALL_TENDER, SMALL_BESS, seed=1)


class TestIndicators:

    def test_r_max_from_measured_energy(self, report):
        table = compute_indicators(report, small_trace(), SMALL_TENDER)
        measured_kwh = sum(small_trace().values) * 6.0
        assert table.r_max_keur == pytest.approx(0.045 * measured_kwh / 1000.0)

    def test_net_revenue_identity(self, report):
        table = compute_indicators(report, small_trace(), SMALL_TENDER)
        assert table.net_revenue_keur == pytest.approx(
            table.gross_revenue_keur - table.penalty_keur, abs=1e-9)

    def test_revenue_ratio_identity(self, report):
        table = compute_indicators(report, small_trace(), SMALL_TENDER)
        assert table.revenue_ratio_pct == pytest.approx(
            100.0 * table.gross_revenue_keur / table.r_max_keur)

    def test_ratios_within_range(self, report):
        table = compute_indicators(report, small_trace(), SMALL_TENDER)
        for name in ("production_pct", "charge_pct", "full_bess_days_pct",
                     "export_pct"):
            value = getattr(table, name)
            assert 0.0 <= value <= 100.0 + 1e-9

    def test_net_revenue_matches_negated_objective(self, report):
        # with hindsight planning, R_net = -J_eval
        table = compute_indicators(report, small_trace(), SMALL_TENDER)
        assert table.net_revenue_keur == pytest.approx(
            -report.aggregate_objective / 1000.0, abs=1e-9)

    def test_day_mismatch_rejected(self, report):
        with pytest.raises(DayMismatch):
            compute_indicators(report, small_trace(days=3), SMALL_TENDER)


class TestDeltaNetRevenue:
    def test_reference_pairs(self):
        # 15 years x 12 months on the published net-revenue pairs
        assert delta_net_revenue(2.96, 2.44) == pytest.approx(93.6)
        assert delta_net_revenue(3.15, 2.44) == pytest.approx(127.8)

    def test_baseline_is_exactly_zero(self):
        assert delta_net_revenue(2.44, 2.44) == 0.0


class TestBessSweep:
    def cases(self):
        return [
            BessSpec(capacity_kwh=c, charge_power_kw=c, discharge_power_kw=c)
            for c in (10.0, 5.0, 0.0)
        ]

    def test_baseline_required(self):
        with pytest.raises(MissingBaseline):
            bess_sweep(small_trace(), [SMALL_BESS], PlannerKind.PERFECT,
                       SMALL_TENDER, seed=1)

    def test_sweep_rows(self):
        rows = bess_sweep(small_trace(), self.cases(), PlannerKind.PERFECT,
                          SMALL_TENDER, seed=1)
        assert [r.case_id for r in rows] == [1, 2, 3]
        baseline = [r for r in rows if r.bess.capacity_kwh == 0.0][0]
        assert baseline.delta_net_revenue_keur == 0.0
        # relaxing the storage constraints cannot reduce hindsight revenue
        by_capacity = sorted(rows, key=lambda r: r.bess.capacity_kwh)
        net = [r.indicators.net_revenue_keur for r in by_capacity]
        assert net[0] <= net[1] + 1e-9 <= net[2] + 2e-9


class TestOptimalSizing:
    def test_reference_points_give_three_fifty(self):
        result = optimal_bess_size(SWEEP_POINTS, capex_keur_per_kwh=0.1)
        assert 300.0 <= result.optimal_kwh <= 400.0
        assert result.optimal_kwh == pytest.approx(355.8, abs=2.0)

    def test_breakeven_capex_reported(self):
        result = optimal_bess_size(SWEEP_POINTS, capex_keur_per_kwh=0.1)
        # marginal value at zero capacity from the first interpolation triple
        assert result.breakeven_capex_keur_per_kwh == pytest.approx(0.248, abs=1e-3)

    def test_capex_above_breakeven_gives_zero(self):
        result = optimal_bess_size(SWEEP_POINTS, capex_keur_per_kwh=0.3)
        assert result.optimal_kwh == 0.0

    def test_free_storage_gives_max_swept(self):
        result = optimal_bess_size(SWEEP_POINTS, capex_keur_per_kwh=0.0)
        assert result.optimal_kwh == pytest.approx(2000.0)

    def test_degenerate_fit_detected(self):
        convex_up = [(0.0, 0.0), (500.0, 10.0), (1000.0, 40.0), (2000.0, 160.0)]
        with pytest.raises(DegenerateFit):
            optimal_bess_size(convex_up, capex_keur_per_kwh=0.1)

    def test_too_few_points_rejected(self):
        with pytest.raises(DegenerateFit):
            optimal_bess_size([(0.0, 0.0), (100.0, 1.0)], capex_keur_per_kwh=0.1)
