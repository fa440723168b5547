"""Core domain types and unit conventions.

Unit conventions used across the whole package:

- power in kW, energy in kWh, state of charge in kWh;
- the market period duration is carried in **hours** so that
  ``energy / period_hours`` is a power in kW;
- money in EUR for prices (EUR/kWh for the selling price, EUR/kWh^2 for
  the quadratic slack price); aggregated revenue indicators are reported
  in kEUR by the metrics module.

All types are immutable after validation and safe to share between
threads or worker processes.
"""

from __future__ import annotations

from collections.abc import Iterator, Mapping, Sequence
from datetime import datetime
from enum import Enum
from typing import Any

from pydantic import BaseModel, ConfigDict, model_validator

from .errors import (
    EmptyScenarioSet,
    LengthMismatch,
    NegativeParameter,
    NegativePower,
    NonPositivePeriod,
    PartialDay,
    PeriodNotDividingDay,
)

HOURS_PER_DAY = 24.0

#: Default market-day splitting: how close 24/period_hours must be to an
#: integer before we call the period "not dividing the day".
_DIVISION_TOL = 1e-9


def periods_per_day(period_hours: float) -> int:
    """Number of market periods in one day for the given period duration.

    Raises :class:`NonPositivePeriod` or :class:`PeriodNotDividingDay`
    when the duration is degenerate or does not divide 24 h exactly.
    """
    if period_hours <= 0:
        raise NonPositivePeriod(f"period duration must be > 0 h, got {period_hours}")
    ratio = HOURS_PER_DAY / period_hours
    t = round(ratio)
    if t < 1 or abs(ratio - t) > _DIVISION_TOL * max(1.0, ratio):
        raise PeriodNotDividingDay(
            f"period of {period_hours} h does not divide 24 h into whole periods"
        )
    return t


class TenderParams(BaseModel):
    """Market and contract constants of the capacity-firming tender.

    ``ramp_limit_kw`` is stored resolved in kW; use
    :func:`validate_tender_params` to build an instance from a raw record
    where the ramp limit may be given as a percentage of the installed
    capacity instead.
    """

    model_config = ConfigDict(frozen=True)

    selling_price: float = 0.045       # EUR/kWh
    slack_price: float = 0.0045        # EUR/kWh^2
    period_hours: float = 0.25
    ramp_limit_kw: float = 200.0
    export_cap_kw: float = 2000.0
    deadband_kwh: float = 25.0
    capacity_kwp: float = 2000.0

    @model_validator(mode="after")
    def _check(self) -> "TenderParams":
        # periods_per_day raises for degenerate durations
        periods_per_day(self.period_hours)
        if self.capacity_kwp <= 0:
            raise NegativeParameter("installed capacity must be > 0 kWp")
        for name in ("selling_price", "slack_price", "ramp_limit_kw",
                     "export_cap_kw", "deadband_kwh"):
            if getattr(self, name) < 0:
                raise NegativeParameter(f"{name} must be >= 0, got {getattr(self, name)}")
        return self

    @property
    def periods(self) -> int:
        return periods_per_day(self.period_hours)

    @property
    def export_cap_kwh(self) -> float:
        """Per-period export cap expressed in energy units."""
        return self.export_cap_kw * self.period_hours

    @property
    def ramp_limit_kwh(self) -> float:
        """Maximum nomination step between consecutive periods, in kWh."""
        return self.ramp_limit_kw * self.period_hours


def validate_tender_params(raw: Mapping[str, Any] | TenderParams) -> TenderParams:
    """Validate a raw tender record into :class:`TenderParams`.

    Accepted keys mirror the model fields, with two ingestion conveniences:

    - the period may be given as ``period_minutes`` instead of
      ``period_hours``;
    - the ramp limit may be given either as ``ramp_limit_kw`` (absolute)
      or ``ramp_limit_pct`` (percent of installed capacity).  Passing both
      is rejected.
    """
    if isinstance(raw, TenderParams):
        return raw
    data = dict(raw)
    if "period_minutes" in data:
        if "period_hours" in data:
            raise NonPositivePeriod("give period_minutes or period_hours, not both")
        data["period_hours"] = float(data.pop("period_minutes")) / 60.0
    if "ramp_limit_pct" in data:
        if "ramp_limit_kw" in data:
            raise NegativeParameter("give ramp_limit_kw or ramp_limit_pct, not both")
        pct = float(data.pop("ramp_limit_pct"))
        if pct < 0:
            raise NegativeParameter(f"ramp_limit_pct must be >= 0, got {pct}")
        capacity = float(data.get("capacity_kwp", TenderParams.model_fields["capacity_kwp"].default))
        data["ramp_limit_kw"] = pct / 100.0 * capacity
    return TenderParams(**data)


class BessSpec(BaseModel):
    """Battery storage ratings, efficiencies, and boundary states of charge."""

    model_config = ConfigDict(frozen=True)

    capacity_kwh: float = 1000.0
    capacity_min_kwh: float = 0.0
    charge_power_kw: float = 1000.0
    discharge_power_kw: float = 1000.0
    eta_charge: float = 1.0
    eta_discharge: float = 1.0
    soc_init_kwh: float = 0.0
    soc_end_kwh: float = 0.0

    @model_validator(mode="after")
    def _check(self) -> "BessSpec":
        if self.charge_power_kw < 0 or self.discharge_power_kw < 0:
            raise NegativeParameter("storage power limits must be >= 0 kW")
        if not (0.0 <= self.capacity_min_kwh <= self.capacity_kwh):
            raise NegativeParameter(
                f"need 0 <= min capacity <= capacity, got "
                f"[{self.capacity_min_kwh}, {self.capacity_kwh}]"
            )
        for name in ("soc_init_kwh", "soc_end_kwh"):
            soc = getattr(self, name)
            if not (self.capacity_min_kwh <= soc <= self.capacity_kwh):
                raise NegativeParameter(
                    f"{name}={soc} outside [{self.capacity_min_kwh}, {self.capacity_kwh}]"
                )
        for name in ("eta_charge", "eta_discharge"):
            eta = getattr(self, name)
            if not (0.0 < eta <= 1.0):
                raise NegativeParameter(f"{name} must be in (0, 1], got {eta}")
        return self


class TraceKind(str, Enum):
    MEASURED = "measured"
    POINT_FORECAST = "point_forecast"


class MarketDay(BaseModel):
    """One market day of per-period PV power values (kW)."""

    model_config = ConfigDict(frozen=True)

    day_index: int
    period_hours: float
    values: tuple[float, ...]
    kind: TraceKind = TraceKind.MEASURED

    @model_validator(mode="after")
    def _check(self) -> "MarketDay":
        t = periods_per_day(self.period_hours)
        if len(self.values) != t:
            raise LengthMismatch(
                f"market day needs exactly {t} values, got {len(self.values)}"
            )
        return self


class PvTrace(BaseModel):
    """Timestamped per-period PV power series covering whole market days."""

    model_config = ConfigDict(frozen=True)

    start: datetime
    period_hours: float
    values: tuple[float, ...]
    kind: TraceKind = TraceKind.MEASURED

    @model_validator(mode="after")
    def _check(self) -> "PvTrace":
        t = periods_per_day(self.period_hours)
        if len(self.values) == 0 or len(self.values) % t != 0:
            raise PartialDay(
                f"trace length {len(self.values)} is not a positive multiple of T={t}"
            )
        for i, v in enumerate(self.values):
            if v < 0:
                raise NegativePower(f"negative PV power {v} kW at period index {i}")
        return self

    @property
    def periods(self) -> int:
        return periods_per_day(self.period_hours)

    @property
    def n_days(self) -> int:
        return len(self.values) // self.periods

    def day(self, day_index: int) -> MarketDay:
        t = self.periods
        if not (0 <= day_index < self.n_days):
            raise LengthMismatch(
                f"day {day_index} outside trace with {self.n_days} day(s)"
            )
        chunk = self.values[day_index * t:(day_index + 1) * t]
        return MarketDay(day_index=day_index, period_hours=self.period_hours,
                         values=chunk, kind=self.kind)

    def days(self) -> Iterator[MarketDay]:
        for i in range(self.n_days):
            yield self.day(i)

    def validate_against(self, tender: TenderParams) -> "PvTrace":
        """Check the trace against the tender limits; returns self."""
        if abs(self.period_hours - tender.period_hours) > _DIVISION_TOL:
            raise PeriodNotDividingDay(
                f"trace period {self.period_hours} h != tender period "
                f"{tender.period_hours} h"
            )
        worst = max(self.values)
        if worst > tender.capacity_kwp * (1 + 1e-9):
            raise NegativeParameter(
                f"PV power {worst} kW exceeds installed capacity "
                f"{tender.capacity_kwp} kWp"
            )
        return self


class ScenarioSet(BaseModel):
    """Equally indexed per-period PV power paths with probabilities."""

    model_config = ConfigDict(frozen=True)

    scenarios: tuple[tuple[float, ...], ...]
    probabilities: tuple[float, ...]

    @model_validator(mode="after")
    def _check(self) -> "ScenarioSet":
        if len(self.scenarios) == 0:
            raise EmptyScenarioSet("scenario set has no scenarios")
        if len(self.probabilities) != len(self.scenarios):
            raise LengthMismatch(
                f"{len(self.scenarios)} scenarios but "
                f"{len(self.probabilities)} probabilities"
            )
        t = len(self.scenarios[0])
        for i, path in enumerate(self.scenarios):
            if len(path) != t:
                raise LengthMismatch(f"scenario {i} has {len(path)} periods, expected {t}")
        for p in self.probabilities:
            if p < 0:
                raise NegativeParameter(f"scenario probability {p} < 0")
        total = sum(self.probabilities)
        if abs(total - 1.0) > 1e-12 * len(self.probabilities) + 1e-12:
            raise NegativeParameter(f"scenario probabilities sum to {total}, not 1")
        return self

    @property
    def n_scenarios(self) -> int:
        return len(self.scenarios)

    @property
    def periods(self) -> int:
        return len(self.scenarios[0])

    def validate_against(self, tender: TenderParams) -> "ScenarioSet":
        if self.periods != tender.periods:
            raise LengthMismatch(
                f"scenarios have {self.periods} periods, tender day has {tender.periods}"
            )
        for i, path in enumerate(self.scenarios):
            for v in path:
                if v < 0 or v > tender.capacity_kwp * (1 + 1e-9):
                    raise NegativeParameter(
                        f"scenario {i} value {v} kW outside [0, {tender.capacity_kwp}]"
                    )
        return self


def day_from_values(values: Sequence[float], period_hours: float,
                    day_index: int = 0,
                    kind: TraceKind = TraceKind.MEASURED) -> MarketDay:
    """Convenience constructor for a single market day."""
    return MarketDay(day_index=day_index, period_hours=period_hours,
                     values=tuple(float(v) for v in values), kind=kind)
