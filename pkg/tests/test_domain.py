"""Tests for domain types, unit handling, and configuration validation."""

from datetime import datetime

import pytest

from capfirm.domain import (
    BessSpec,
    PvTrace,
    ScenarioSet,
    TenderParams,
    TraceKind,
    periods_per_day,
    validate_tender_params,
)
from capfirm.errors import (
    EmptyScenarioSet,
    LengthMismatch,
    NegativeParameter,
    NegativePower,
    NonPositivePeriod,
    PartialDay,
    PeriodNotDividingDay,
)


class TestPeriodsPerDay:
    def test_fifteen_minutes(self):
        assert periods_per_day(0.25) == 96

    def test_one_hour(self):
        assert periods_per_day(1.0) == 24

    def test_seven_minutes_rejected(self):
        with pytest.raises(PeriodNotDividingDay):
            periods_per_day(7.0 / 60.0)

    def test_zero_rejected(self):
        with pytest.raises(NonPositivePeriod):
            periods_per_day(0.0)


class TestTenderParams:
    def test_case_study_record(self):
        # ramp limit given as a percentage of installed capacity
        params = validate_tender_params({
            "selling_price": 0.045,
            "slack_price": 0.0045,
            "period_minutes": 15,
            "ramp_limit_pct": 10,
            "export_cap_kw": 2000,
            "deadband_kwh": 25,
            "capacity_kwp": 2000,
        })
        assert params.ramp_limit_kw == pytest.approx(200.0)
        assert params.periods == 96
        assert params.export_cap_kwh == pytest.approx(500.0)

    def test_absolute_ramp_passthrough(self):
        params = validate_tender_params({"ramp_limit_kw": 150.0})
        assert params.ramp_limit_kw == 150.0

    def test_both_ramp_forms_rejected(self):
        with pytest.raises(NegativeParameter):
            validate_tender_params({"ramp_limit_kw": 1.0, "ramp_limit_pct": 1.0})

    def test_zero_period_rejected(self):
        with pytest.raises((NonPositivePeriod, PeriodNotDividingDay)):
            validate_tender_params({"period_minutes": 0})

    def test_negative_deadband_rejected(self):
        with pytest.raises(NegativeParameter):
            validate_tender_params({"deadband_kwh": -1.0})

    def test_revalidation_is_idempotent(self):
        params = validate_tender_params({"period_minutes": 15})
        again = validate_tender_params(params)
        assert again == params
        assert TenderParams(**params.model_dump()) == params


class TestBessSpec:
    def test_defaults_valid(self):
        spec = BessSpec()
        assert spec.capacity_kwh == 1000.0

    def test_soc_outside_capacity_rejected(self):
        with pytest.raises(NegativeParameter):
            BessSpec(capacity_kwh=100.0, soc_init_kwh=200.0)

    def test_bad_efficiency_rejected(self):
        with pytest.raises(NegativeParameter):
            BessSpec(eta_charge=0.0)

    def test_negative_power_rejected(self):
        with pytest.raises(NegativeParameter):
            BessSpec(charge_power_kw=-5.0)


class TestPvTrace:
    def test_whole_days_required(self):
        with pytest.raises(PartialDay):
            PvTrace(start=datetime(2019, 2, 1), period_hours=0.25,
                    values=tuple([0.0] * 95))

    def test_negative_power_rejected(self):
        values = [0.0] * 96
        values[40] = -5.0
        with pytest.raises(NegativePower):
            PvTrace(start=datetime(2019, 2, 1), period_hours=0.25,
                    values=tuple(values))

    def test_day_slicing(self):
        values = tuple(float(i) for i in range(192))
        trace = PvTrace(start=datetime(2019, 2, 1), period_hours=0.25,
                        values=values)
        assert trace.n_days == 2
        day = trace.day(1)
        assert day.values[0] == 96.0
        assert len(day.values) == 96

    def test_capacity_check(self):
        trace = PvTrace(start=datetime(2019, 2, 1), period_hours=0.25,
                        values=tuple([2500.0] * 96))
        with pytest.raises(NegativeParameter):
            trace.validate_against(TenderParams())

    def test_kind(self):
        trace = PvTrace(start=datetime(2019, 2, 1), period_hours=0.25,
                        values=tuple([0.0] * 96), kind=TraceKind.POINT_FORECAST)
        assert trace.day(0).kind == TraceKind.POINT_FORECAST


class TestScenarioSet:
    def test_probabilities_must_sum_to_one(self):
        with pytest.raises(NegativeParameter):
            ScenarioSet(scenarios=((1.0, 2.0), (3.0, 4.0)),
                        probabilities=(0.5, 0.6))

    def test_empty_rejected(self):
        with pytest.raises(EmptyScenarioSet):
            ScenarioSet(scenarios=(), probabilities=())

    def test_ragged_rejected(self):
        with pytest.raises(LengthMismatch):
            ScenarioSet(scenarios=((1.0, 2.0), (3.0,)),
                        probabilities=(0.5, 0.5))

    def test_valid_roundtrip(self):
        ss = ScenarioSet(scenarios=((1.0, 2.0), (3.0, 4.0)),
                         probabilities=(0.5, 0.5))
        assert ss.n_scenarios == 2
        assert ss.periods == 2
