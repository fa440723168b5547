"""Command-line client for the capfirm service.

Every subcommand resolves its parameters from package defaults, then an
optional INI config file, then explicit flags; builds a request model;
and sends it either to the in-process handlers (default) or to a running
server (``--server`` or ``CAPFIRM_SERVER``).  Responses are written as
CSV files plus a ``manifest.txt`` that doubles as a config file: feeding
a manifest to ``capfirm rerun`` reproduces the run byte for byte (solve
timings go to ``timings.txt``, which is the one output that may differ).
"""

from __future__ import annotations

import sys
from datetime import datetime
from pathlib import Path

import click
import httpx

from . import __version__
from .dataio import (
    load_nominations_csv,
    load_pv_csv,
    merge_config,
    parse_config_file,
    render_indicators_text,
    render_sweep_text,
    sha256_digest,
    synth_pv_trace,  # noqa: F401  (re-exported for library users of the CLI module)
    write_dispatch_csv,
    write_indicators_csv,
    write_manifest,
    write_nominations_csv,
    write_pv_csv,
    write_scenarios_csv,
    write_sweep_csv,
)
from .domain import BessSpec, TenderParams, validate_tender_params
from .errors import CapacityFirmingError
from .planners import PlannerKind
from .service import handlers
from .service.schemas import (
    DayNominations,
    EvaluateRequest,
    EvaluateResponse,
    PlanRequest,
    PlanResponse,
    ScenarioConfig,
    ScenariosRequest,
    ScenariosResponse,
    SimulateRequest,
    SimulateResponse,
    SolverSettings,
    SweepRequest,
    SweepResponse,
    SynthRequest,
    SynthResponse,
)

_LOCAL = {
    "/api/plan": (handlers.handle_plan, PlanResponse),
    "/api/evaluate": (handlers.handle_evaluate, EvaluateResponse),
    "/api/simulate": (handlers.handle_simulate, SimulateResponse),
    "/api/sweep-bess": (handlers.handle_sweep, SweepResponse),
    "/api/scenarios": (handlers.handle_scenarios, ScenariosResponse),
    "/api/synth-data": (handlers.handle_synth, SynthResponse),
}

#: default storage ladder for the capacity sweep (kWh; powers follow)
DEFAULT_SWEEP_CAPACITIES = (2000.0, 1000.0, 500.0, 250.0, 0.0)


class ServiceClient:
    """Dispatches requests in-process or to a remote server."""

    def __init__(self, server: str | None):
        self.server = server.rstrip("/") if server else None

    def call(self, path: str, request):
        handler, response_model = _LOCAL[path]
        if self.server is None:
            return handler(request)
        resp = httpx.post(self.server + path,
                          json=request.model_dump(mode="json"), timeout=None)
        if resp.status_code == 422:
            body = resp.json()
            if "error" in body:
                raise CapacityFirmingError(f"{body['error']}: {body['detail']}")
        resp.raise_for_status()
        return response_model.model_validate(resp.json())


# --------------------------------------------------------------------------
# parameter resolution: defaults <- config file <- flags
# --------------------------------------------------------------------------

def _base_sections() -> dict:
    tender = TenderParams()
    bess = BessSpec()
    return {
        "tender": {
            "selling_price": repr(tender.selling_price),
            "slack_price": repr(tender.slack_price),
            "period_minutes": repr(tender.period_hours * 60.0),
            "ramp_limit_kw": repr(tender.ramp_limit_kw),
            "export_cap_kw": repr(tender.export_cap_kw),
            "deadband_kwh": repr(tender.deadband_kwh),
            "capacity_kwp": repr(tender.capacity_kwp),
        },
        "bess": {
            "capacity_kwh": repr(bess.capacity_kwh),
            "capacity_min_kwh": repr(bess.capacity_min_kwh),
            "charge_power_kw": repr(bess.charge_power_kw),
            "discharge_power_kw": repr(bess.discharge_power_kw),
            "eta_charge": repr(bess.eta_charge),
            "eta_discharge": repr(bess.eta_discharge),
            "soc_init_kwh": repr(bess.soc_init_kwh),
            "soc_end_kwh": repr(bess.soc_end_kwh),
        },
        "scenario": {
            "p": "0.9",
            "eps_max": "0.25",
            "max_lead": "128",
            "lead_offset": "33",
            "n_scenarios": "100",
            "seed": "0",
        },
        "solver": {"tol": "1e-08", "max_iter": "20000"},
        "run": {"jobs": "1"},
    }


def resolve_sections(config: str | None, overrides: dict) -> dict:
    """Defaults <- config file <- flags, with sigma/eps_max exclusivity.

    ``sigma`` and ``eps_max`` both calibrate the error model; when they
    end up set at different precedence layers, the higher layer wins and
    the other key is dropped.  Setting both at the same layer is a user
    error surfaced when the scenario config is built.
    """
    resolved = _base_sections()
    layer = {"sigma": -1, "eps_max": 0}
    if config:
        file_cfg = parse_config_file(config)
        for key in ("sigma", "eps_max"):
            if key in file_cfg.get("scenario", {}):
                layer[key] = 1
        resolved = merge_config(resolved, file_cfg)
    for key in ("sigma", "eps_max"):
        if key in overrides.get("scenario", {}):
            layer[key] = 2
    resolved = merge_config(resolved, overrides)
    scenario = resolved["scenario"]
    if "sigma" in scenario and "eps_max" in scenario:
        if layer["sigma"] > layer["eps_max"]:
            scenario.pop("eps_max")
        elif layer["eps_max"] > layer["sigma"]:
            scenario.pop("sigma")
    return resolved


def _tender_of(resolved: dict) -> TenderParams:
    sec = resolved["tender"]
    record: dict = {
        "selling_price": float(sec["selling_price"]),
        "slack_price": float(sec["slack_price"]),
        "period_minutes": float(sec["period_minutes"]),
        "export_cap_kw": float(sec["export_cap_kw"]),
        "deadband_kwh": float(sec["deadband_kwh"]),
        "capacity_kwp": float(sec["capacity_kwp"]),
    }
    if "ramp_limit_pct" in sec:
        record["ramp_limit_pct"] = float(sec["ramp_limit_pct"])
    else:
        record["ramp_limit_kw"] = float(sec["ramp_limit_kw"])
    return validate_tender_params(record)


def _bess_of(resolved: dict) -> BessSpec:
    sec = resolved["bess"]
    return BessSpec(**{key: float(value) for key, value in sec.items()})


def _scenario_of(resolved: dict) -> ScenarioConfig:
    sec = resolved["scenario"]
    kwargs: dict = {"p": float(sec["p"]),
                    "max_lead": int(sec["max_lead"]),
                    "lead_offset": int(sec["lead_offset"])}
    if "sigma" in sec:
        kwargs["sigma"] = float(sec["sigma"])
    else:
        kwargs["eps_max"] = float(sec["eps_max"])
    return ScenarioConfig(**kwargs)


def _solver_of(resolved: dict) -> SolverSettings:
    sec = resolved["solver"]
    return SolverSettings(tol=float(sec["tol"]), max_iter=int(sec["max_iter"]))


def _canonical_scenario(resolved: dict, scenario: ScenarioConfig) -> None:
    """Record the resolved sigma in the manifest scenario section."""
    params = scenario.to_params()
    sec = resolved["scenario"]
    sec.pop("eps_max", None)
    sec["sigma"] = repr(params.sigma)
    sec["p"] = repr(params.p)


def _record_input(resolved: dict, name: str, path: str) -> None:
    resolved.setdefault("inputs", {})
    resolved["inputs"][name] = str(path)
    resolved["inputs"][f"{name}_sha256"] = sha256_digest(path)


def _finish(resolved: dict, command: str, out: Path) -> None:
    resolved["run"]["command"] = command
    resolved["run"]["version"] = __version__
    out.mkdir(parents=True, exist_ok=True)
    write_manifest(out / "manifest.txt", resolved)


# --------------------------------------------------------------------------
# command implementations (shared with rerun)
# --------------------------------------------------------------------------

def _run_synth(client: ServiceClient, resolved: dict, out: Path) -> None:
    run = resolved["run"]
    req = SynthRequest(
        days=int(run["days"]),
        capacity_kwp=float(run.get("capacity_kwp",
                                   resolved["tender"]["capacity_kwp"])),
        peak_fraction=float(run["peak_fraction"]),
        seed=int(run["seed"]),
        period_minutes=float(resolved["tender"]["period_minutes"]),
        start=datetime.fromisoformat(run["start"]),
    )
    resp = client.call("/api/synth-data", req)
    _finish(resolved, "synth-data", out)
    write_pv_csv(out / "pv.csv", resp.trace)
    click.echo(f"wrote {resp.trace.n_days} day(s) to {out / 'pv.csv'}")


def _run_gen_scenarios(client: ServiceClient, resolved: dict, out: Path) -> None:
    trace = load_pv_csv(resolved["inputs"]["input"])
    scenario = _scenario_of(resolved)
    req = ScenariosRequest(
        trace=trace,
        day_index=int(resolved["run"].get("day", "0")),
        scenario=scenario,
        n_scenarios=int(resolved["scenario"]["n_scenarios"]),
        seed=int(resolved["scenario"]["seed"]),
        tender=_tender_of(resolved),
    )
    resp = client.call("/api/scenarios", req)
    _canonical_scenario(resolved, scenario)
    _finish(resolved, "gen-scenarios", out)
    write_scenarios_csv(out / "scenarios.csv", resp.scenarios)
    meta = {
        "scenario_meta": {
            "p": repr(resp.params.p),
            "sigma": repr(resp.params.sigma),
            "seed": str(resp.seed),
            "lead_offset": str(resp.params.lead_offset),
            "max_lead": str(resp.params.max_lead),
            "n_scenarios": str(resp.scenarios.n_scenarios),
            "day": resolved["run"].get("day", "0"),
        }
    }
    write_manifest(out / "scenarios_meta.txt", meta)
    click.echo(f"wrote {resp.scenarios.n_scenarios} scenario(s) to "
               f"{out / 'scenarios.csv'}")


def _planner_of(resolved: dict) -> PlannerKind:
    return PlannerKind(resolved["run"]["planner"])


def _run_plan(client: ServiceClient, resolved: dict, out: Path) -> None:
    trace = load_pv_csv(resolved["inputs"]["input"])
    planner = _planner_of(resolved)
    scenario = _scenario_of(resolved)
    req = PlanRequest(
        planner=planner,
        trace=trace,
        tender=_tender_of(resolved),
        bess=_bess_of(resolved),
        scenario=None if planner == PlannerKind.PERFECT else scenario,
        n_scenarios=int(resolved["scenario"]["n_scenarios"]),
        seed=int(resolved["scenario"]["seed"]),
        solver=_solver_of(resolved),
    )
    resp = client.call("/api/plan", req)
    _canonical_scenario(resolved, scenario)
    _finish(resolved, "plan", out)
    write_nominations_csv(out / "nominations.csv",
                          [d.schedule for d in resp.days])
    for day in resp.days:
        click.echo(
            f"day {day.schedule.day_index}: J = {day.schedule.objective:.6f} "
            f"({day.n_variables} variables, {day.n_constraints} constraints, "
            f"{day.schedule.solve_time_s:.3f} s)"
        )
    click.echo(f"total planning objective: {resp.total_objective:.6f}")


def _run_evaluate(client: ServiceClient, resolved: dict, out: Path) -> None:
    trace = load_pv_csv(resolved["inputs"]["measured"])
    nominations = load_nominations_csv(resolved["inputs"]["nominations"])
    req = EvaluateRequest(
        nominations=tuple(
            DayNominations(day_index=day, nominations_kwh=values)
            for day, values in nominations),
        measured=trace,
        tender=_tender_of(resolved),
        bess=_bess_of(resolved),
        solver=_solver_of(resolved),
    )
    resp = client.call("/api/evaluate", req)
    _finish(resolved, "evaluate", out)
    write_dispatch_csv(out / "dispatch.csv", resp.days)
    for day in resp.days:
        click.echo(f"day {day.day_index}: J_eval = {day.objective_eval:.6f}")
    click.echo(f"aggregate J_eval: {resp.aggregate_objective:.6f}")


def _run_simulate(client: ServiceClient, resolved: dict, out: Path) -> None:
    trace = load_pv_csv(resolved["inputs"]["input"])
    planner = _planner_of(resolved)
    scenario = _scenario_of(resolved)
    req = SimulateRequest(
        planner=planner,
        trace=trace,
        tender=_tender_of(resolved),
        bess=_bess_of(resolved),
        scenario=None if planner == PlannerKind.PERFECT else scenario,
        n_scenarios=int(resolved["scenario"]["n_scenarios"]),
        seed=int(resolved["scenario"]["seed"]),
        solver=_solver_of(resolved),
        jobs=int(resolved["run"]["jobs"]),
    )
    resp = client.call("/api/simulate", req)
    _canonical_scenario(resolved, scenario)
    _finish(resolved, "simulate", out)
    report = resp.report
    write_nominations_csv(out / "nominations.csv",
                          [d.schedule for d in report.days])
    write_dispatch_csv(out / "dispatch.csv", [d.dispatch for d in report.days])
    write_indicators_csv(out / "indicators.csv", resp.indicators)
    text = render_indicators_text(resp.indicators)
    (out / "indicators.txt").write_text(text)
    with open(out / "timings.txt", "w", newline="\n") as f:
        f.write("day,wall_s,plan_solve_s,eval_solve_s\n")
        for day in report.days:
            f.write(f"{day.schedule.day_index},{day.wall_time_s:.3f},"
                    f"{day.schedule.solve_time_s:.3f},"
                    f"{day.dispatch.solve_time_s:.3f}\n")
    click.echo(text.rstrip())
    click.echo(f"aggregate J_eval: {report.aggregate_objective:.6f}")


def _sweep_cases(resolved: dict) -> tuple[BessSpec, ...]:
    base = _bess_of(resolved)
    if "cases" in resolved.get("inputs", {}):
        import csv as _csv

        cases = []
        with open(resolved["inputs"]["cases"], newline="") as f:
            for row in _csv.DictReader(f):
                cap = float(row["capacity_kwh"])
                cases.append(BessSpec(
                    capacity_kwh=cap,
                    capacity_min_kwh=float(row.get("capacity_min_kwh", 0.0)),
                    charge_power_kw=float(row.get("charge_power_kw", cap)),
                    discharge_power_kw=float(row.get("discharge_power_kw", cap)),
                    eta_charge=base.eta_charge,
                    eta_discharge=base.eta_discharge,
                ))
        return tuple(cases)
    return tuple(
        BessSpec(capacity_kwh=c, charge_power_kw=c, discharge_power_kw=c,
                 eta_charge=base.eta_charge, eta_discharge=base.eta_discharge)
        for c in DEFAULT_SWEEP_CAPACITIES
    )


def _run_sweep(client: ServiceClient, resolved: dict, out: Path) -> None:
    trace = load_pv_csv(resolved["inputs"]["input"])
    planner = _planner_of(resolved)
    scenario = _scenario_of(resolved)
    run = resolved["run"]
    capex = float(run["capex"]) if "capex" in run else None
    req = SweepRequest(
        trace=trace,
        cases=_sweep_cases(resolved),
        planner=planner,
        tender=_tender_of(resolved),
        scenario=None if planner == PlannerKind.PERFECT else scenario,
        n_scenarios=int(resolved["scenario"]["n_scenarios"]),
        seed=int(resolved["scenario"]["seed"]),
        solver=_solver_of(resolved),
        capex_keur_per_kwh=capex,
        horizon_months=int(run.get("horizon_months", "180")),
        jobs=int(run["jobs"]),
    )
    resp = client.call("/api/sweep-bess", req)
    _canonical_scenario(resolved, scenario)
    if resp.sizing is not None:
        resolved["sizing"] = {
            "fit_a": repr(resp.sizing.fit_a),
            "fit_b": repr(resp.sizing.fit_b),
            "fit_c": repr(resp.sizing.fit_c),
            "breakeven_capex_keur_per_kwh":
                repr(resp.sizing.breakeven_capex_keur_per_kwh),
            "optimal_kwh": repr(resp.sizing.optimal_kwh),
        }
    _finish(resolved, "sweep-bess", out)
    write_sweep_csv(out / "sweep.csv", resp.rows)
    sizing = None
    if resp.sizing is not None:
        from .metrics import QuadraticFit, SizingResult

        fit = QuadraticFit(a=resp.sizing.fit_a, b=resp.sizing.fit_b,
                           c=resp.sizing.fit_c)
        sizing = SizingResult(
            optimal_kwh=resp.sizing.optimal_kwh,
            breakeven_capex_keur_per_kwh=resp.sizing.breakeven_capex_keur_per_kwh,
            fit=fit, global_fit=fit)
    text = render_sweep_text(resp.rows, sizing)
    (out / "sweep.txt").write_text(text)
    click.echo(text.rstrip())


_RUNNERS = {
    "synth-data": _run_synth,
    "gen-scenarios": _run_gen_scenarios,
    "plan": _run_plan,
    "evaluate": _run_evaluate,
    "simulate": _run_simulate,
    "sweep-bess": _run_sweep,
}


# --------------------------------------------------------------------------
# click surface
# --------------------------------------------------------------------------

@click.group()
@click.version_option(version=__version__, prog_name="capfirm")
@click.option("--server", envvar="CAPFIRM_SERVER", default=None,
              help="Base URL of a running capfirm service; defaults to "
                   "in-process execution.")
@click.pass_context
def main(ctx, server):
    """Day-ahead capacity-firming nominations for a PV + storage plant."""
    ctx.obj = ServiceClient(server)


def _execute(client: ServiceClient, command: str, resolved: dict,
             out: str) -> None:
    try:
        _RUNNERS[command](client, resolved, Path(out))
    except CapacityFirmingError as exc:
        click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
        sys.exit(2)


def _common(f):
    f = click.option("--config", type=click.Path(exists=True, dir_okay=False),
                     default=None, help="INI config file.")(f)
    f = click.option("--out", default="out", show_default=True,
                     help="Output directory.")(f)
    return f


def _scenario_flags(f):
    f = click.option("--n-scenarios", type=int, default=None)(f)
    f = click.option("--seed", type=int, default=None)(f)
    f = click.option("--sigma", type=float, default=None,
                     help="Error std of the innovation term.")(f)
    f = click.option("--eps-max", type=float, default=None,
                     help="Error cap mapped to sigma (3-sigma rule).")(f)
    f = click.option("--p", "p_coef", type=float, default=None,
                     help="Moving-average decay coefficient.")(f)
    return f


def _scenario_overrides(n_scenarios, seed, sigma, eps_max, p_coef) -> dict:
    section: dict = {}
    if n_scenarios is not None:
        section["n_scenarios"] = str(n_scenarios)
    if seed is not None:
        section["seed"] = str(seed)
    if sigma is not None:
        section["sigma"] = repr(sigma)
    if eps_max is not None:
        section["eps_max"] = repr(eps_max)
    if p_coef is not None:
        section["p"] = repr(p_coef)
    return section


def _solver_flags(f):
    f = click.option("--tol", type=float, default=None,
                     help="Solver KKT tolerance.")(f)
    f = click.option("--max-iter", type=int, default=None)(f)
    return f


def _solver_overrides(tol, max_iter) -> dict:
    section: dict = {}
    if tol is not None:
        section["tol"] = repr(tol)
    if max_iter is not None:
        section["max_iter"] = str(max_iter)
    return section


@main.command("synth-data")
@click.option("--days", type=int, default=28, show_default=True)
@click.option("--capacity-kwp", type=float, default=None,
              help="Defaults to the tender installed capacity.")
@click.option("--peak-fraction", type=float, default=0.494, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--start", default="2019-02-01T00:00:00", show_default=True)
@_common
@click.pass_obj
def synth_data(client, days, capacity_kwp, peak_fraction, seed, start,
               config, out):
    """Generate a synthetic measured PV trace."""
    run = {"days": str(days), "peak_fraction": repr(peak_fraction),
           "seed": str(seed), "start": start}
    if capacity_kwp is not None:
        run["capacity_kwp"] = repr(capacity_kwp)
    resolved = resolve_sections(config, {"run": run})
    _execute(client, "synth-data", resolved, out)


@main.command("gen-scenarios")
@click.option("--input", "input_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Measured PV CSV; the selected day is the truth.")
@click.option("--day", type=int, default=0, show_default=True)
@_scenario_flags
@_common
@click.pass_obj
def gen_scenarios(client, input_path, day, n_scenarios, seed, sigma, eps_max,
                  p_coef, config, out):
    """Generate unbiased PV scenarios around one measured day."""
    overrides = {
        "run": {"day": str(day)},
        "scenario": _scenario_overrides(n_scenarios, seed, sigma, eps_max, p_coef),
    }
    resolved = resolve_sections(config, overrides)
    _record_input(resolved, "input", input_path)
    _execute(client, "gen-scenarios", resolved, out)


_PLANNER_CHOICE = click.Choice([k.value for k in PlannerKind])


@main.command("plan")
@click.option("--planner", type=_PLANNER_CHOICE, required=True)
@click.option("--input", "input_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@_scenario_flags
@_solver_flags
@_common
@click.pass_obj
def plan(client, planner, input_path, n_scenarios, seed, sigma, eps_max,
         p_coef, tol, max_iter, config, out):
    """Compute day-ahead nominations for every day of a dataset."""
    overrides = {
        "run": {"planner": planner},
        "scenario": _scenario_overrides(n_scenarios, seed, sigma, eps_max, p_coef),
        "solver": _solver_overrides(tol, max_iter),
    }
    resolved = resolve_sections(config, overrides)
    _record_input(resolved, "input", input_path)
    _execute(client, "plan", resolved, out)


@main.command("evaluate")
@click.option("--nominations", "nominations_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--measured", "measured_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@_solver_flags
@_common
@click.pass_obj
def evaluate(client, nominations_path, measured_path, tol, max_iter, config,
             out):
    """Evaluate fixed nominations against measured PV."""
    resolved = resolve_sections(config, {"solver": _solver_overrides(tol, max_iter)})
    _record_input(resolved, "nominations", nominations_path)
    _record_input(resolved, "measured", measured_path)
    _execute(client, "evaluate", resolved, out)


@main.command("simulate")
@click.option("--planner", type=_PLANNER_CHOICE, required=True)
@click.option("--input", "input_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--jobs", type=int, default=None, help="Worker processes.")
@_scenario_flags
@_solver_flags
@_common
@click.pass_obj
def simulate(client, planner, input_path, jobs, n_scenarios, seed, sigma,
             eps_max, p_coef, tol, max_iter, config, out):
    """Plan and evaluate every day of a dataset; write indicators."""
    run = {"planner": planner}
    if jobs is not None:
        run["jobs"] = str(jobs)
    overrides = {
        "run": run,
        "scenario": _scenario_overrides(n_scenarios, seed, sigma, eps_max, p_coef),
        "solver": _solver_overrides(tol, max_iter),
    }
    resolved = resolve_sections(config, overrides)
    _record_input(resolved, "input", input_path)
    _execute(client, "simulate", resolved, out)


@main.command("sweep-bess")
@click.option("--planner", type=_PLANNER_CHOICE, default=PlannerKind.PERFECT.value,
              show_default=True)
@click.option("--input", "input_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--cases", "cases_path", default=None,
              type=click.Path(exists=True, dir_okay=False),
              help="CSV of storage cases (capacity_kwh[,capacity_min_kwh,"
                   "charge_power_kw,discharge_power_kw]); default ladder "
                   "2000/1000/500/250/0 kWh.")
@click.option("--capex", type=float, default=None,
              help="Storage CAPEX in kEUR/kWh; enables the sizing analysis.")
@click.option("--horizon-months", type=int, default=None,
              help="Payback horizon for the projected gain (default 180).")
@click.option("--jobs", type=int, default=None)
@_scenario_flags
@_solver_flags
@_common
@click.pass_obj
def sweep_bess(client, planner, input_path, cases_path, capex, horizon_months,
               jobs, n_scenarios, seed, sigma, eps_max, p_coef, tol, max_iter,
               config, out):
    """Sweep storage capacities and size the battery against its CAPEX."""
    run = {"planner": planner}
    if capex is not None:
        run["capex"] = repr(capex)
    if horizon_months is not None:
        run["horizon_months"] = str(horizon_months)
    if jobs is not None:
        run["jobs"] = str(jobs)
    overrides = {
        "run": run,
        "scenario": _scenario_overrides(n_scenarios, seed, sigma, eps_max, p_coef),
        "solver": _solver_overrides(tol, max_iter),
    }
    resolved = resolve_sections(config, overrides)
    _record_input(resolved, "input", input_path)
    if cases_path is not None:
        _record_input(resolved, "cases", cases_path)
    _execute(client, "sweep-bess", resolved, out)


@main.command("rerun")
@click.argument("manifest", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", default="out-rerun", show_default=True)
@click.pass_obj
def rerun(client, manifest, out):
    """Re-execute a previous run from its manifest."""
    resolved = parse_config_file(manifest)
    try:
        command = resolved["run"]["command"]
    except KeyError:
        raise click.UsageError(f"{manifest} has no [run] command entry")
    if command not in _RUNNERS:
        raise click.UsageError(f"unknown command {command!r} in manifest")
    _execute(client, command, resolved, out)


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    from .service.app import app

    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
