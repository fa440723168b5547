"""Remuneration arithmetic, indicator tables, and storage-sizing analysis.

Monetary conventions: prices come in EUR/kWh (or EUR/kWh^2 for the slack
price); aggregated indicators are reported in kEUR.  Objective values `J`
are costs (negative revenue plus penalty), so a net revenue of 2.96 kEUR
corresponds to J = -2.96 kEUR.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict

from .domain import BessSpec, PvTrace, TenderParams
from .errors import DayMismatch, DegenerateFit, MissingBaseline

if TYPE_CHECKING:  # pragma: no cover
    from .evaluator import SimulationReport

#: kEUR per EUR
KEUR = 1e-3

#: months in the storage payback horizon: 15 years of monthly gains
DEFAULT_HORIZON_MONTHS = 15 * 12

#: a day counts as "storage full" when max SoC reaches capacity minus this
FULL_SOC_SLACK_KWH = 1e-6


def penalty(e_star_kwh: float | np.ndarray, e_kwh: float | np.ndarray,
            deadband_kwh: float, slack_price: float) -> float | np.ndarray:
    """Quadratic deadband penalty on the nomination/export mismatch.

    Zero whenever ``|e_star - e| <= deadband``; grows as
    ``slack_price * (|e_star - e| - deadband)^2`` beyond it.
    """
    gap = np.maximum(0.0, np.abs(np.asarray(e_star_kwh) - np.asarray(e_kwh))
                     - deadband_kwh)
    out = slack_price * gap * gap
    return float(out) if np.ndim(out) == 0 else out


def net_remuneration(e_star_kwh: float, e_measured_kwh: float, price: float,
                     deadband_kwh: float, slack_price: float) -> float:
    """Per-period net remuneration: revenue on exports minus the penalty."""
    return (price * e_measured_kwh
            - penalty(e_star_kwh, e_measured_kwh, deadband_kwh, slack_price))


class IndicatorTable(BaseModel):
    """Aggregate indicators over a simulated dataset.

    Ratios are percentages; energies MWh; money kEUR.  ``mean_cpu_time_s``
    is the average planner solve time per day and is excluded from CSV
    serialization so reruns stay byte-identical.
    """

    model_config = ConfigDict(frozen=True)

    production_mwh: float
    production_pct: float
    charge_pct: float
    full_bess_days_pct: float
    export_pct: float
    r_max_keur: float
    gross_revenue_keur: float
    revenue_ratio_pct: float
    penalty_keur: float
    net_revenue_keur: float
    mean_cpu_time_s: float | None = None


#: column order used by CSV/text renderings (cpu time deliberately absent)
INDICATOR_COLUMNS = (
    "production_mwh", "production_pct", "charge_pct", "full_bess_days_pct",
    "export_pct", "r_max_keur", "gross_revenue_keur", "revenue_ratio_pct",
    "penalty_keur", "net_revenue_keur",
)


def compute_indicators(report: "SimulationReport", trace: PvTrace,
                       tender: TenderParams) -> IndicatorTable:
    """Indicator suite for a finished simulation against its measured trace."""
    if trace.n_days != len(report.days):
        raise DayMismatch(
            f"report has {len(report.days)} day(s), trace has {trace.n_days}"
        )
    dt = tender.period_hours
    measured_kwh = float(np.sum(trace.values)) * dt
    cap = report.bess.capacity_kwh
    min_cap = report.bess.capacity_min_kwh

    produced_kwh = 0.0
    charged_kwh = 0.0
    exported_kwh = 0.0
    nominated_kwh = 0.0
    penalty_eur = 0.0
    full_days = 0
    solve_times = []
    for day in report.days:
        dispatch = day.dispatch
        produced_kwh += sum(dispatch.production_kw) * dt
        charged_kwh += sum(dispatch.charge_kw) * dt
        exported_kwh += sum(dispatch.exports_kwh)
        nominated_kwh += sum(day.schedule.nominations_kwh)
        pen = penalty(np.asarray(day.schedule.nominations_kwh),
                      np.asarray(dispatch.exports_kwh),
                      tender.deadband_kwh, tender.slack_price)
        penalty_eur += float(np.sum(pen))
        if cap - FULL_SOC_SLACK_KWH > min_cap and \
                max(dispatch.soc_kwh) >= cap - FULL_SOC_SLACK_KWH:
            full_days += 1
        solve_times.append(day.schedule.solve_time_s)

    r_max = tender.selling_price * measured_kwh * KEUR
    gross = tender.selling_price * exported_kwh * KEUR
    pen_keur = penalty_eur * KEUR
    return IndicatorTable(
        production_mwh=produced_kwh / 1000.0,
        production_pct=_pct(produced_kwh, measured_kwh),
        charge_pct=_pct(charged_kwh, produced_kwh),
        full_bess_days_pct=_pct(float(full_days), float(len(report.days))),
        export_pct=_pct(exported_kwh, nominated_kwh),
        r_max_keur=r_max,
        gross_revenue_keur=gross,
        revenue_ratio_pct=_pct(gross, r_max),
        penalty_keur=pen_keur,
        net_revenue_keur=gross - pen_keur,
        mean_cpu_time_s=float(np.mean(solve_times)) if solve_times else None,
    )


def _pct(num: float, den: float) -> float:
    return 100.0 * num / den if den > 0.0 else 0.0


class BessSweepRow(BaseModel):
    """One storage case of a capacity sweep with its indicators."""

    model_config = ConfigDict(frozen=True)

    case_id: int
    bess: BessSpec
    indicators: IndicatorTable
    delta_net_revenue_keur: float


def delta_net_revenue(net_revenue_keur: float, baseline_keur: float,
                      horizon_months: int = DEFAULT_HORIZON_MONTHS) -> float:
    """Projected storage gain over the payback horizon, in kEUR.

    Scales one simulated month's net-revenue improvement over the no
    storage baseline by the number of months in the horizon.
    """
    return horizon_months * (net_revenue_keur - baseline_keur)


def bess_sweep(trace: PvTrace,
               cases: Sequence[BessSpec],
               planner,
               tender: TenderParams,
               seed: int = 0,
               n_scenarios: int = 100,
               scenario_params=None,
               horizon_months: int = DEFAULT_HORIZON_MONTHS,
               jobs: int = 1,
               options=None) -> list["BessSweepRow"]:
    """Run the same simulation for every storage case and difference the
    net revenues against the zero-capacity baseline.

    All cases share the seed, so scenario draws are identical across the
    sweep and rows differ only through the storage parameters.
    """
    from .evaluator import simulate_dataset  # local import, avoids cycle
    from .planners import SolverOptions

    if not any(case.capacity_kwh == 0.0 for case in cases):
        raise MissingBaseline("sweep cases must include a zero-capacity baseline")
    options = options or SolverOptions()
    reports = [
        simulate_dataset(trace, planner, tender, case, seed=seed,
                         n_scenarios=n_scenarios,
                         scenario_params=scenario_params, options=options,
                         jobs=jobs)
        for case in cases
    ]
    tables = [compute_indicators(rep, trace, tender) for rep in reports]
    baseline = next(t.net_revenue_keur for case, t in zip(cases, tables)
                    if case.capacity_kwh == 0.0)
    return [
        BessSweepRow(
            case_id=i,
            bess=case,
            indicators=table,
            delta_net_revenue_keur=delta_net_revenue(
                table.net_revenue_keur, baseline, horizon_months),
        )
        for i, (case, table) in enumerate(zip(cases, tables), start=1)
    ]


@dataclass(frozen=True)
class QuadraticFit:
    """delta_r ~ a * capacity^2 + b * capacity + c (kEUR, kWh)."""

    a: float
    b: float
    c: float

    def value(self, capacity_kwh: float) -> float:
        return (self.a * capacity_kwh + self.b) * capacity_kwh + self.c

    def slope(self, capacity_kwh: float) -> float:
        return 2.0 * self.a * capacity_kwh + self.b


@dataclass(frozen=True)
class SizingResult:
    """Outcome of the marginal-value sizing analysis."""

    optimal_kwh: float
    breakeven_capex_keur_per_kwh: float
    fit: QuadraticFit
    global_fit: QuadraticFit


def _exact_quadratic(pts: np.ndarray) -> QuadraticFit:
    coef = np.polyfit(pts[:, 0], pts[:, 1], 2)
    return QuadraticFit(a=float(coef[0]), b=float(coef[1]), c=float(coef[2]))


def _nearest_triple(xs: np.ndarray, center: float) -> np.ndarray:
    order = np.argsort(np.abs(xs - center), kind="stable")
    return np.sort(order[:3])


def optimal_bess_size(sweep: Sequence["BessSweepRow"] | Sequence[tuple[float, float]],
                      capex_keur_per_kwh: float) -> SizingResult:
    """Storage size where the marginal projected gain meets the CAPEX.

    The gain curve is fit with quadratics and the size solves
    ``d(gain)/d(capacity) = capex``, clamped to the swept range.  A global
    least-squares fit screens for diminishing returns (treated as
    :class:`DegenerateFit` when absent); the root itself is refined on
    local three-point interpolants so the answer tracks the curvature near
    the solution instead of averaging it over the whole sweep, which on
    wide sweeps biases the size badly.
    """
    pts = []
    for row in sweep:
        if isinstance(row, BessSweepRow):
            pts.append((row.bess.capacity_kwh, row.delta_net_revenue_keur))
        else:
            cap, val = row
            pts.append((float(cap), float(val)))
    arr = np.asarray(sorted(set(pts)), dtype=float)
    if arr.shape[0] < 3:
        raise DegenerateFit(
            f"need at least 3 distinct capacities, got {arr.shape[0]}"
        )
    xs = arr[:, 0]
    x_max = float(xs.max())

    coef = np.polyfit(xs, arr[:, 1], 2)
    global_fit = QuadraticFit(a=float(coef[0]), b=float(coef[1]), c=float(coef[2]))
    if global_fit.a >= 0.0:
        raise DegenerateFit(
            f"no diminishing returns detected (curvature {global_fit.a:.3g} >= 0)"
        )
    breakeven = _exact_quadratic(arr[_nearest_triple(xs, float(xs.min()))]).slope(
        float(xs.min()))

    # iterate local three-point interpolation around the candidate size
    candidate = (capex_keur_per_kwh - global_fit.b) / (2.0 * global_fit.a)
    candidate = float(np.clip(candidate, 0.0, x_max))
    fit = global_fit
    seen: set[tuple[int, ...]] = set()
    for _ in range(32):
        triple = _nearest_triple(xs, candidate)
        key = tuple(int(i) for i in triple)
        local = _exact_quadratic(arr[triple])
        if local.a >= 0.0:
            break
        fit = local
        candidate = float(np.clip(
            (capex_keur_per_kwh - local.b) / (2.0 * local.a), 0.0, x_max))
        if key in seen:
            break
        seen.add(key)

    return SizingResult(
        optimal_kwh=candidate,
        breakeven_capex_keur_per_kwh=float(breakeven),
        fit=fit,
        global_fit=global_fit,
    )
