"""File formats, synthetic PV data, and run configuration.

All CSV files use LF line endings and 9-decimal fixed-point floats (fine
enough that indicators recomputed from serialized trajectories agree with
in-memory values to 1e-9, and that re-validation of ramp limits never
trips on roundoff).  Config files and run manifests share one INI grammar
(two levels: section and key), so a manifest can be fed back as the
config of a rerun.

CSV schemas:

- PV trace:      ``timestamp,power_kw`` (ISO-8601, uniform steps, whole
  calendar days starting at midnight)
- nominations:   ``day,period,e_star_kwh``
- dispatch:      ``day,period,e_star_kwh,e_kwh,dev_pos_kwh,dev_neg_kwh,
  p_kw,p_cha_kw,p_dis_kw,soc_kwh``
- scenarios:     ``scenario_id,period,power_kw`` plus an INI sidecar with
  the generator parameters
- indicators:    one column per indicator (solve timing excluded so
  reruns stay byte-identical)

Days are 0-based, periods 1-based.
"""

from __future__ import annotations

import configparser
import csv
import hashlib
import io
from collections.abc import Mapping, Sequence
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np

from .domain import PvTrace, ScenarioSet, TenderParams, TraceKind, periods_per_day
from .errors import (
    LengthMismatch,
    NegativePower,
    NonUniformTimestep,
    PartialDay,
    TraceParseError,
)
from .evaluator import DispatchResult, SimulatedDay, SimulationReport
from .metrics import INDICATOR_COLUMNS, BessSweepRow, IndicatorTable, SizingResult
from .planners import NominationSchedule, PlannerKind

FLOAT_FORMAT = "{:.9f}"


def _fmt(value: float) -> str:
    return FLOAT_FORMAT.format(float(value))


def sha256_digest(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


# --------------------------------------------------------------------------
# PV traces
# --------------------------------------------------------------------------

def load_pv_csv(path: str | Path,
                kind: TraceKind = TraceKind.MEASURED) -> PvTrace:
    """Parse a ``timestamp,power_kw`` file into a validated trace."""
    rows: list[tuple[datetime, float]] = []
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or [c.strip() for c in header[:2]] != ["timestamp", "power_kw"]:
            raise TraceParseError(f"{path}: expected header 'timestamp,power_kw'")
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) < 2:
                raise TraceParseError(f"{path}:{lineno}: expected 2 columns")
            try:
                stamp = datetime.fromisoformat(row[0].strip())
                power = float(row[1])
            except ValueError as exc:
                raise TraceParseError(f"{path}:{lineno}: {exc}") from None
            if power < 0.0:
                raise NegativePower(
                    f"{path}:{lineno}: negative PV power {power} kW"
                )
            rows.append((stamp, power))
    if len(rows) < 2:
        raise TraceParseError(f"{path}: need at least two data rows")

    step = rows[1][0] - rows[0][0]
    if step <= timedelta(0):
        raise NonUniformTimestep(f"{path}:3: timestamps must be increasing")
    for i in range(1, len(rows)):
        if rows[i][0] - rows[i - 1][0] != step:
            raise NonUniformTimestep(
                f"{path}:{i + 2}: timestep differs from {step}"
            )
    start = rows[0][0]
    if (start.hour, start.minute, start.second, start.microsecond) != (0, 0, 0, 0):
        raise PartialDay(f"{path}: trace must start at midnight, got {start}")
    period_hours = step.total_seconds() / 3600.0
    return PvTrace(start=start, period_hours=period_hours,
                   values=tuple(p for _, p in rows), kind=kind)


def write_pv_csv(path: str | Path, trace: PvTrace) -> None:
    step = timedelta(hours=trace.period_hours)
    with open(path, "w", newline="\n") as f:
        f.write("timestamp,power_kw\n")
        for i, value in enumerate(trace.values):
            stamp = trace.start + i * step
            f.write(f"{stamp.isoformat()},{_fmt(value)}\n")


def synth_pv_trace(days: int, capacity_kwp: float, peak_fraction: float,
                   seed: int, start: datetime | None = None,
                   period_minutes: float = 15.0,
                   sunrise_hour: float = 6.0,
                   sunset_hour: float = 18.0) -> PvTrace:
    """Deterministic clear-sky-like PV profile with day-to-day jitter.

    The best day's midday peak hits ``capacity_kwp * peak_fraction``
    exactly (solar noon falls on a period boundary for the default
    15-minute grid); other days are scaled down by a random factor, and a
    per-day shape exponent varies the bell width.
    """
    if days < 1:
        raise LengthMismatch(f"need at least one day, got {days}")
    period_hours = period_minutes / 60.0
    t = periods_per_day(period_hours)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))
    scale = rng.uniform(0.35, 1.0, size=days)
    scale /= scale.max()
    sharpness = rng.uniform(1.3, 2.6, size=days)

    hours = np.arange(t) * period_hours
    daylight = (hours > sunrise_hour) & (hours < sunset_hour)
    phase = np.zeros(t)
    phase[daylight] = np.sin(
        np.pi * (hours[daylight] - sunrise_hour) / (sunset_hour - sunrise_hour))

    values: list[float] = []
    amp = capacity_kwp * peak_fraction
    for d in range(days):
        profile = amp * scale[d] * phase ** sharpness[d]
        values.extend(float(v) for v in profile)
    return PvTrace(start=start or datetime(2019, 2, 1),
                   period_hours=period_hours, values=tuple(values),
                   kind=TraceKind.MEASURED)


# --------------------------------------------------------------------------
# nominations / dispatch / scenarios
# --------------------------------------------------------------------------

def write_nominations_csv(path: str | Path,
                          schedules: Sequence[NominationSchedule]) -> None:
    with open(path, "w", newline="\n") as f:
        f.write("day,period,e_star_kwh\n")
        for schedule in schedules:
            for t, value in enumerate(schedule.nominations_kwh, start=1):
                f.write(f"{schedule.day_index},{t},{_fmt(value)}\n")


def load_nominations_csv(path: str | Path) -> list[tuple[int, tuple[float, ...]]]:
    """Read nominations grouped per day, periods checked contiguous."""
    per_day: dict[int, dict[int, float]] = {}
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or [c.strip() for c in header[:3]] != ["day", "period", "e_star_kwh"]:
            raise TraceParseError(f"{path}: expected header 'day,period,e_star_kwh'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                day, period, value = int(row[0]), int(row[1]), float(row[2])
            except (ValueError, IndexError) as exc:
                raise TraceParseError(f"{path}:{lineno}: {exc}") from None
            per_day.setdefault(day, {})[period] = value
    out: list[tuple[int, tuple[float, ...]]] = []
    for day in sorted(per_day):
        periods = per_day[day]
        t = len(periods)
        if sorted(periods) != list(range(1, t + 1)):
            raise LengthMismatch(f"{path}: day {day} has gaps in its periods")
        out.append((day, tuple(periods[i] for i in range(1, t + 1))))
    return out


DISPATCH_HEADER = ("day,period,e_star_kwh,e_kwh,dev_pos_kwh,dev_neg_kwh,"
                   "p_kw,p_cha_kw,p_dis_kw,soc_kwh")


def write_dispatch_csv(path: str | Path,
                       dispatches: Sequence[DispatchResult]) -> None:
    with open(path, "w", newline="\n") as f:
        f.write(DISPATCH_HEADER + "\n")
        for d in dispatches:
            for i in range(len(d.exports_kwh)):
                f.write(",".join([
                    str(d.day_index), str(i + 1),
                    _fmt(d.nominations_kwh[i]), _fmt(d.exports_kwh[i]),
                    _fmt(d.dev_pos_kwh[i]), _fmt(d.dev_neg_kwh[i]),
                    _fmt(d.production_kw[i]), _fmt(d.charge_kw[i]),
                    _fmt(d.discharge_kw[i]), _fmt(d.soc_kwh[i]),
                ]) + "\n")


def load_dispatch_csv(path: str | Path, tender: TenderParams) -> list[DispatchResult]:
    """Rebuild dispatch records from CSV; objectives are recomputed."""
    from .metrics import penalty

    per_day: dict[int, dict[int, list[float]]] = {}
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or ",".join(c.strip() for c in header) != DISPATCH_HEADER:
            raise TraceParseError(f"{path}: unexpected dispatch header")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                day, period = int(row[0]), int(row[1])
                fields = [float(v) for v in row[2:10]]
            except (ValueError, IndexError) as exc:
                raise TraceParseError(f"{path}:{lineno}: {exc}") from None
            per_day.setdefault(day, {})[period] = fields

    out = []
    for day in sorted(per_day):
        periods = per_day[day]
        t = len(periods)
        if sorted(periods) != list(range(1, t + 1)):
            raise LengthMismatch(f"{path}: day {day} has gaps in its periods")
        cols = np.array([periods[i] for i in range(1, t + 1)])
        noms, exports = cols[:, 0], cols[:, 1]
        objective = float(-tender.selling_price * exports.sum()
                          + np.sum(penalty(noms, exports, tender.deadband_kwh,
                                           tender.slack_price)))
        out.append(DispatchResult(
            day_index=day,
            nominations_kwh=tuple(noms),
            exports_kwh=tuple(exports),
            dev_pos_kwh=tuple(cols[:, 2]),
            dev_neg_kwh=tuple(cols[:, 3]),
            production_kw=tuple(cols[:, 4]),
            charge_kw=tuple(cols[:, 5]),
            discharge_kw=tuple(cols[:, 6]),
            soc_kwh=tuple(cols[:, 7]),
            objective_eval=objective,
            solve_time_s=0.0,
        ))
    return out


def report_from_dispatch(dispatches: Sequence[DispatchResult],
                         tender: TenderParams, bess, planner=PlannerKind.PERFECT,
                         ) -> SimulationReport:
    """Wrap loaded dispatch rows into a report so indicators can be
    recomputed from serialized trajectories (solve metadata is absent)."""
    days = tuple(
        SimulatedDay(
            schedule=NominationSchedule(
                day_index=d.day_index, planner=planner,
                nominations_kwh=d.nominations_kwh,
                objective=d.objective_eval, status="optimal",
                solve_time_s=0.0, iterations=0),
            dispatch=d,
            wall_time_s=0.0,
        )
        for d in dispatches
    )
    return SimulationReport(
        planner=planner, tender=tender, bess=bess, seed=0,
        n_scenarios=None, scenario_params=None, days=days,
        aggregate_objective=float(sum(d.objective_eval for d in dispatches)),
    )


def write_scenarios_csv(path: str | Path, scenarios: ScenarioSet) -> None:
    with open(path, "w", newline="\n") as f:
        f.write("scenario_id,period,power_kw\n")
        for w, row in enumerate(scenarios.scenarios):
            for t, value in enumerate(row, start=1):
                f.write(f"{w},{t},{_fmt(value)}\n")


def load_scenarios_csv(path: str | Path) -> ScenarioSet:
    per_scenario: dict[int, dict[int, float]] = {}
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or [c.strip() for c in header[:3]] != ["scenario_id", "period", "power_kw"]:
            raise TraceParseError(f"{path}: expected header 'scenario_id,period,power_kw'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                w, t, value = int(row[0]), int(row[1]), float(row[2])
            except (ValueError, IndexError) as exc:
                raise TraceParseError(f"{path}:{lineno}: {exc}") from None
            per_scenario.setdefault(w, {})[t] = value
    paths = []
    for w in sorted(per_scenario):
        periods = per_scenario[w]
        t = len(periods)
        if sorted(periods) != list(range(1, t + 1)):
            raise LengthMismatch(f"{path}: scenario {w} has gaps in its periods")
        paths.append(tuple(periods[i] for i in range(1, t + 1)))
    n = len(paths)
    return ScenarioSet(scenarios=tuple(paths),
                       probabilities=tuple([1.0 / n] * n))


# --------------------------------------------------------------------------
# indicators / sweep tables
# --------------------------------------------------------------------------

def write_indicators_csv(path: str | Path, table: IndicatorTable) -> None:
    with open(path, "w", newline="\n") as f:
        f.write(",".join(INDICATOR_COLUMNS) + "\n")
        f.write(",".join(_fmt(getattr(table, c)) for c in INDICATOR_COLUMNS) + "\n")


def render_indicators_text(table: IndicatorTable) -> str:
    rows = [(c, _fmt(getattr(table, c))) for c in INDICATOR_COLUMNS]
    width = max(len(name) for name, _ in rows)
    lines = [f"{name.ljust(width)}  {value}" for name, value in rows]
    if table.mean_cpu_time_s is not None:
        lines.append(f"{'mean_cpu_time_s'.ljust(width)}  "
                     f"{table.mean_cpu_time_s:.3f}")
    return "\n".join(lines) + "\n"


SWEEP_HEADER = ("case_id,capacity_kwh," + ",".join(INDICATOR_COLUMNS)
                + ",delta_net_revenue_keur")


def write_sweep_csv(path: str | Path, rows: Sequence[BessSweepRow]) -> None:
    with open(path, "w", newline="\n") as f:
        f.write(SWEEP_HEADER + "\n")
        for row in rows:
            cells = [str(row.case_id), _fmt(row.bess.capacity_kwh)]
            cells += [_fmt(getattr(row.indicators, c)) for c in INDICATOR_COLUMNS]
            cells.append(_fmt(row.delta_net_revenue_keur))
            f.write(",".join(cells) + "\n")


def render_sweep_text(rows: Sequence[BessSweepRow],
                      sizing: SizingResult | None = None) -> str:
    headers = ["case", "cap_kwh", "prod_mwh", "prod_%", "cha_%", "full_%",
               "exp_%", "R_e", "C_e", "R_net", "dR_net"]
    lines = ["  ".join(h.rjust(9) for h in headers)]
    for row in rows:
        t = row.indicators
        cells = [str(row.case_id), f"{row.bess.capacity_kwh:.0f}",
                 f"{t.production_mwh:.3f}", f"{t.production_pct:.1f}",
                 f"{t.charge_pct:.1f}", f"{t.full_bess_days_pct:.1f}",
                 f"{t.export_pct:.1f}", f"{t.gross_revenue_keur:.3f}",
                 f"{t.penalty_keur:.3f}", f"{t.net_revenue_keur:.3f}",
                 f"{row.delta_net_revenue_keur:.1f}"]
        lines.append("  ".join(c.rjust(9) for c in cells))
    if sizing:
        lines.append("")
        lines.append(f"marginal-value fit: a={sizing.fit.a:.6g} "
                     f"b={sizing.fit.b:.6g} c={sizing.fit.c:.6g}")
        lines.append("breakeven capex: "
                     f"{sizing.breakeven_capex_keur_per_kwh:.4f} kEUR/kWh")
        lines.append(f"optimal capacity: {sizing.optimal_kwh:.1f} kWh")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# config and manifests (shared INI grammar)
# --------------------------------------------------------------------------

ConfigDict2 = dict[str, dict[str, str]]


def parse_config_file(path: str | Path) -> ConfigDict2:
    parser = configparser.ConfigParser()
    with open(path) as f:
        parser.read_file(f)
    return {section: dict(parser.items(section))
            for section in parser.sections()}


def merge_config(base: ConfigDict2, override: Mapping[str, Mapping[str, str]]) -> ConfigDict2:
    out = {section: dict(values) for section, values in base.items()}
    for section, values in override.items():
        out.setdefault(section, {})
        for key, value in values.items():
            if value is not None:
                out[section][key] = str(value)
    return out


def dump_config(resolved: ConfigDict2) -> str:
    buf = io.StringIO()
    for section in sorted(resolved):
        if not resolved[section]:
            continue
        buf.write(f"[{section}]\n")
        for key in sorted(resolved[section]):
            buf.write(f"{key} = {resolved[section][key]}\n")
        buf.write("\n")
    return buf.getvalue()


def write_manifest(path: str | Path, resolved: ConfigDict2) -> None:
    with open(path, "w", newline="\n") as f:
        f.write(dump_config(resolved))
