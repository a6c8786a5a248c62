"""Experiment orchestration: run scenarios, evaluate checks, persist results.

Each experiment kind wires the library modules together, writes CSV
artifacts, evaluates the scenario's declared checks to PASS/FAIL, and
returns a RunReport.  Module errors become FAIL entries rather than
crashes, so a suite keeps going when one scenario breaks.
"""

from __future__ import annotations

import os
import concurrent.futures
from dataclasses import dataclass, field

import numpy as np

from . import bridge as bridge_mod
from .dynamics import (catch_up, catch_up_pullback, check_alpha_monotone,
                       length_study, ode_orbit, verify_state_dependent_inclusion)
from .errors import ScenarioError, SweepError
from .geometry import Sublevel
from .scenario import Scenario, load_scenario
from .tableio import fmt, write_csv
from .timefns import TimePoly
from .variational import (desingularize, talweg_profile, verify_desingularized,
                          verify_monotone_bound, verify_speed_bound)

OUTPUT_ROOT_ENV = "SWEEPSIM_OUTPUT_ROOT"


@dataclass
class RunReport:
    """Outcome of one scenario: one status per declared check, plus metrics."""

    scenario: str
    experiment: str
    statuses: dict = field(default_factory=dict)
    metrics: dict = field(default_factory=dict)
    artifacts: dict = field(default_factory=dict)
    messages: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(s != "FAIL" for s in self.statuses.values())

    @property
    def overall(self) -> str:
        if any(s == "FAIL" for s in self.statuses.values()):
            return "FAIL"
        if any(s == "WARN" for s in self.statuses.values()):
            return "WARN"
        return "PASS"

    def record(self, name: str, ok: bool, message: str = ""):
        self.statuses[name] = "PASS" if ok else "FAIL"
        if message:
            self.messages[name] = message

    def to_text(self) -> str:
        lines = [f"scenario: {self.scenario}",
                 f"experiment: {self.experiment}",
                 f"status: {self.overall}",
                 "checks:"]
        for name in sorted(self.statuses):
            lines.append(f"  {name}: {self.statuses[name]}")
        lines.append("metrics:")
        for name in sorted(self.metrics):
            lines.append(f"  {name}: {fmt(self.metrics[name])}")
        lines.append("artifacts:")
        for name in sorted(self.artifacts):
            lines.append(f"  {name}: {self.artifacts[name]}")
        for name in sorted(self.messages):
            lines.append(f"note[{name}]: {self.messages[name]}")
        return "\n".join(lines) + "\n"

    def write(self, out_dir: str) -> str:
        path = os.path.join(out_dir, "report.txt")
        os.makedirs(out_dir, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_text())
        return path


def _resolve_out_dir(scn: Scenario, output_root: str | None) -> str:
    env_root = os.environ.get(OUTPUT_ROOT_ENV)
    if env_root:
        return os.path.join(env_root, scn.name)
    if output_root:
        return os.path.join(output_root, scn.name)
    if scn.output_dir:
        return scn.output_dir
    return os.path.join("sweepsim_out", scn.name)


# ---------------------------------------------------------------------------
# Check helpers
# ---------------------------------------------------------------------------

def _check_speed_bound(report, rep, params):
    slack = float(params.get("slack", 0.05))
    ok = rep.max_ratio <= 1.0 + slack and not rep.violations
    report.metrics["max_ratio"] = rep.max_ratio
    report.record("speed_bound", ok,
                  "" if ok else f"max ratio {rep.max_ratio} over 1+{slack}")


def _check_no_breakpoints(report, traj, params):
    ok = len(traj.breakpoints) == 0
    report.metrics["breakpoints"] = float(len(traj.breakpoints))
    report.record("no_breakpoints", ok,
                  "" if ok else f"breakpoints at nodes {traj.breakpoints}")


def _check_lipschitz_steps(report, traj, params):
    L = float(params["L"])
    slack = float(params.get("slack", 0.05))
    dts = np.diff(traj.times)
    norms = traj.step_speeds * dts
    bound = L * dts * (1.0 + slack)
    worst = float(np.max(norms - bound)) if norms.size else 0.0
    ok = worst <= 0.0 and not traj.breakpoints
    report.metrics["lipschitz_excess"] = worst
    report.record("lipschitz_steps", ok,
                  "" if ok else f"step exceeds L*h*(1+slack) by {worst}")


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------

def _run_sweep(scn: Scenario, report: RunReport, out_dir: str):
    traj = catch_up(scn.family, scn.x0, scn.t0, scn.t_end, scn.h,
                    seed=scn.seed, starts=scn.starts)
    report.artifacts["trajectory"] = traj.to_csv(os.path.join(out_dir, "trajectory.csv"))
    report.metrics["total_length"] = traj.total_length
    report.metrics["steps"] = float(traj.step_speeds.size)
    if traj.status != "ok":
        report.record("integration", False, f"terminal status {traj.status}")
    rep = None
    for name, params in scn.checks.items():
        if name == "speed_bound":
            rep = verify_speed_bound(traj, scn.family, seed=scn.seed,
                                     samples=int(params.get("samples", 16)))
            _check_speed_bound(report, rep, params)
        elif name == "no_breakpoints":
            _check_no_breakpoints(report, traj, params)
        elif name == "lipschitz_steps":
            _check_lipschitz_steps(report, traj, params)
        else:
            report.record(name, False, f"unknown check '{name}' for sweep")
    return traj


def _run_length_study(scn: Scenario, report: RunReport, out_dir: str):
    study = length_study(scn.family, scn.x0, scn.t0, scn.t_end, scn.h_list,
                         seed=scn.seed, starts=scn.starts)
    report.artifacts["lengths"] = study.to_csv(os.path.join(out_dir, "lengths.csv"))
    report.metrics["final_length"] = float(study.lengths[-1])
    for name, params in scn.checks.items():
        if name == "length_target":
            target = float(params["target"])
            rel_tol = float(params.get("rel_tol", 0.01))
            err = abs(study.lengths[-1] - target) / abs(target)
            report.metrics["length_rel_error"] = float(err)
            report.record("length_target", err <= rel_tol,
                          "" if err <= rel_tol else
                          f"final length off target by {err:.3%}")
        elif name == "cauchy_gaps":
            floor = float(params.get("floor", 1e-9))
            gaps = study.gaps
            ok = all(gaps[i + 1] < gaps[i] or gaps[i + 1] <= floor
                     for i in range(gaps.size - 1))
            report.metrics["largest_gap"] = float(gaps.max()) if gaps.size else 0.0
            report.record("cauchy_gaps", ok,
                          "" if ok else f"gaps not decreasing: {gaps.tolist()}")
        else:
            report.record(name, False, f"unknown check '{name}' for length_study")
    return study


def _power_law_errors(grid, values, coeff, exponent):
    ref = coeff * np.power(grid, exponent)
    return np.abs(values - ref) / np.abs(ref)


def _run_talweg(scn: Scenario, report: RunReport, out_dir: str):
    prof = talweg_profile(scn.family, scn.region, scn.r_grid,
                          samples=scn.samples, seed=scn.seed)
    report.artifacts["talweg"] = prof.to_csv(os.path.join(out_dir, "talweg.csv"))
    report.metrics["empty_knots"] = float(np.sum(prof.empty))
    for name, params in scn.checks.items():
        if name == "power_law":
            keep = ~np.isnan(prof.phi)
            errs = _power_law_errors(prof.r_grid[keep], prof.phi[keep],
                                     float(params["coeff"]), float(params["exponent"]))
            rel_tol = float(params.get("rel_tol", 0.05))
            worst = float(errs.max()) if errs.size else np.inf
            report.metrics["max_phi_rel_error"] = worst
            report.record("power_law", worst <= rel_tol,
                          "" if worst <= rel_tol else f"worst knot error {worst:.3%}")
        else:
            report.record(name, False, f"unknown check '{name}' for talweg")
    return prof


def _run_desingularize(scn: Scenario, report: RunReport, out_dir: str):
    prof = bridge_mod.level_talweg(scn.f, scn.region, scn.r_grid,
                                   samples=scn.samples, seed=scn.seed)
    report.artifacts["talweg"] = prof.to_csv(os.path.join(out_dir, "talweg.csv"))
    dmap = desingularize(prof, scn.a)
    report.artifacts["desing"] = dmap.to_csv(os.path.join(out_dir, "desing.csv"))
    report.metrics["quadrature_gap"] = dmap.quadrature_gap
    family = Sublevel(scn.f, TimePoly.polynomial([0.0, 1.0]))
    chk = None
    for name, params in scn.checks.items():
        if name == "quadrature_power_law":
            interior = slice(1, dmap.knots.size - 1)
            errs = _power_law_errors(dmap.knots[interior], dmap.Phi[interior],
                                     float(params["coeff"]), float(params["exponent"]))
            rel_tol = float(params.get("rel_tol", 0.02))
            worst = float(errs.max())
            report.metrics["max_Phi_rel_error"] = worst
            report.record("quadrature_power_law", worst <= rel_tol,
                          "" if worst <= rel_tol else f"worst knot error {worst:.3%}")
        elif name in ("composed_lip", "chain_ratio"):
            if chk is None:
                chk = verify_desingularized(family, dmap, scn.region,
                                            probes=scn.probes, seed=scn.seed)
                report.metrics["max_composed_lip"] = chk.max_composed_lip
                report.metrics["max_chain_ratio_error"] = chk.max_ratio_error
            slack = float(params.get("slack", 0.05))
            if name == "composed_lip":
                ok = chk.max_composed_lip <= 1.0 + slack
                report.record(name, ok, "" if ok else
                              f"composed modulus {chk.max_composed_lip}")
            else:
                ok = chk.max_ratio_error <= slack
                report.record(name, ok, "" if ok else
                              f"chain ratio off by {chk.max_ratio_error}")
        else:
            report.record(name, False, f"unknown check '{name}' for desingularize")
    return dmap


def _run_bridge(scn: Scenario, report: RunReport, out_dir: str):
    result = bridge_mod.run_bridge(scn.f, scn.x0, scn.t_end, scn.h)
    report.artifacts["bridge"] = result.to_csv(os.path.join(out_dir, "bridge.csv"))
    swept_traj = result.swept.as_trajectory()
    report.metrics["flow_length"] = result.flow.total_length
    report.metrics["swept_length"] = swept_traj.total_length
    for name, params in scn.checks.items():
        if name == "sqrt_norm_profile":
            # closed form for f = |x|^2/2 started on the unit sphere
            s_max = float(params.get("s_max", 0.45))
            rel_tol = float(params.get("rel_tol", 0.01))
            s = result.swept.s_grid
            keep = s <= s_max
            ref = np.sqrt(np.maximum(1.0 - 2.0 * s[keep], 1e-300))
            err = np.abs(np.linalg.norm(result.swept.points[keep], axis=1) - ref) / ref
            worst = float(err.max())
            report.metrics["max_norm_rel_error"] = worst
            report.record(name, worst <= rel_tol,
                          "" if worst <= rel_tol else f"profile error {worst:.3%}")
        elif name == "inclusion_residual":
            cap = float(params.get("max", 1e-2))
            val = result.max_inclusion_residual
            report.metrics["max_inclusion_residual"] = val
            report.record(name, val <= cap,
                          "" if val <= cap else f"angle {val} over {cap}")
        elif name == "value_residual":
            cap = float(params.get("max", 1e-6))
            val = result.max_value_residual
            report.metrics["max_value_residual"] = val
            report.record(name, val <= cap,
                          "" if val <= cap else f"residual {val} over {cap}")
        elif name == "length_match":
            rel_tol = float(params.get("rel_tol", 1e-6))
            gap = abs(result.flow.total_length - swept_traj.total_length)
            rel = gap / max(result.flow.total_length, 1e-300)
            report.metrics["length_match_rel"] = float(rel)
            report.record(name, rel <= rel_tol,
                          "" if rel <= rel_tol else f"lengths differ by {rel}")
        else:
            report.record(name, False, f"unknown check '{name}' for bridge")
    return result


def _run_statedep(scn: Scenario, report: RunReport, out_dir: str):
    traj = ode_orbit(scn.ffield, scn.x0, scn.t_end, scn.h)
    report.artifacts["orbit"] = traj.to_csv(os.path.join(out_dir, "orbit.csv"))
    report.metrics["total_length"] = traj.total_length
    if traj.status != "ok":
        report.record("integration", False, f"terminal status {traj.status}")
    for name, params in scn.checks.items():
        if name == "bounded_orbit":
            limit = float(params["limit"])
            sup = float(np.max(np.linalg.norm(traj.points, axis=1)))
            report.metrics["sup_norm"] = sup
            report.record(name, sup <= limit,
                          "" if sup <= limit else f"sup norm {sup} over {limit}")
        elif name == "length_rate":
            times = [float(v) for v in params.get("times", [scn.t_end])]
            target = float(params.get("target", 1.0))
            rel_tol = float(params.get("rel_tol", 0.01))
            worst = 0.0
            for T in times:
                rate = traj.length_at(T) / T
                worst = max(worst, abs(rate - target) / abs(target))
                report.metrics[f"length_rate_T{fmt(T)}"] = float(rate)
            report.record(name, worst <= rel_tol,
                          "" if worst <= rel_tol else f"rate off by {worst:.3%}")
        elif name == "inclusion_residual":
            cap = float(params.get("max", 1e-3))
            rep = verify_state_dependent_inclusion(traj, scn.ffield)
            report.metrics["max_inclusion_residual"] = rep.max_residual
            report.metrics["skipped_nodes"] = float(rep.skipped)
            report.record(name, rep.max_residual <= cap,
                          "" if rep.max_residual <= cap else
                          f"residual {rep.max_residual} over {cap}")
        else:
            report.record(name, False, f"unknown check '{name}' for statedep")
    return traj


def _run_monotone(scn: Scenario, report: RunReport, out_dir: str):
    alpha = scn.ffield.monotonicity_alpha
    sampled = check_alpha_monotone(scn.ffield, scn.region, seed=scn.seed)
    report.metrics["sampled_alpha"] = sampled
    report.record("alpha_declared", sampled >= alpha - 1e-9,
                  "" if sampled >= alpha - 1e-9 else
                  f"sampled monotonicity {sampled} below declared {alpha}")
    traj = catch_up_pullback(scn.family, scn.ffield, scn.x0, scn.t0, scn.t_end,
                             scn.h, seed=scn.seed, starts=scn.starts)
    report.artifacts["trajectory"] = traj.to_csv(os.path.join(out_dir, "trajectory.csv"))
    report.metrics["total_length"] = traj.total_length
    for name, params in scn.checks.items():
        if name == "speed_value":
            target = float(params["target"])
            tol = float(params.get("abs_tol", 1e-3))
            worst = float(np.max(np.abs(traj.step_speeds - target)))
            report.metrics["max_speed_deviation"] = worst
            report.record(name, worst <= tol,
                          "" if worst <= tol else f"speed off target by {worst}")
        elif name == "monotone_bound":
            rep = verify_monotone_bound(traj, scn.ffield, scn.family,
                                        seed=scn.seed)
            slack = float(params.get("slack", 0.05))
            ok = rep.max_ratio <= 1.0 + slack and not rep.violations
            report.metrics["max_monotone_ratio"] = rep.max_ratio
            report.record(name, ok,
                          "" if ok else f"ratio {rep.max_ratio} over 1+{slack}")
        else:
            report.record(name, False, f"unknown check '{name}' for monotone")
    return traj


_RUNNERS = {
    "sweep": _run_sweep,
    "length_study": _run_length_study,
    "talweg": _run_talweg,
    "desingularize": _run_desingularize,
    "bridge": _run_bridge,
    "statedep": _run_statedep,
    "monotone": _run_monotone,
}


def run(scn: Scenario, output_root: str | None = None) -> RunReport:
    """Execute a scenario, write artifacts and the report file."""
    report = RunReport(scenario=scn.name, experiment=scn.experiment)
    out_dir = _resolve_out_dir(scn, output_root)
    os.makedirs(out_dir, exist_ok=True)
    try:
        _RUNNERS[scn.experiment](scn, report, out_dir)
    except SweepError as exc:
        report.record("run", False, f"{type(exc).__name__}: {exc}")
    if not report.statuses:
        report.statuses["run"] = "PASS"
    report.artifacts["report"] = report.write(out_dir)
    return report


def run_file(path, output_root: str | None = None) -> RunReport:
    return run(load_scenario(path), output_root=output_root)


def run_suite(directory, jobs: int = 1, output_root: str | None = None):
    """Run every scenario file in a directory; one failure does not stop the rest.

    Returns (reports, aggregate_path).  Duplicate scenario names are an error
    (artifact paths would collide); an empty directory yields an empty report.
    """
    directory = os.fspath(directory)
    paths = sorted(os.path.join(directory, p) for p in os.listdir(directory)
                   if p.endswith((".yaml", ".yml")))
    scenarios = [load_scenario(p) for p in paths]
    names = [s.name for s in scenarios]
    dupes = {n for n in names if names.count(n) > 1}
    if dupes:
        raise ScenarioError(f"duplicate scenario names: {sorted(dupes)}")

    reports: list[RunReport] = []
    if scenarios:
        with concurrent.futures.ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
            futures = [pool.submit(run, s, output_root) for s in scenarios]
            reports = [f.result() for f in futures]

    root = os.environ.get(OUTPUT_ROOT_ENV) or output_root or "sweepsim_out"
    os.makedirs(root, exist_ok=True)
    agg_path = os.path.join(root, "suite_report.txt")
    with open(agg_path, "w", encoding="utf-8", newline="\n") as fh:
        if not reports:
            fh.write("warning: no scenario files found\n")
        for rep in reports:
            fh.write(f"{rep.scenario}: {rep.overall}\n")
        total = sum(1 for r in reports if r.passed)
        fh.write(f"passed {total} of {len(reports)}\n")
    return reports, agg_path
