"""Scenario execution: runs checks, writes reports, tables, and figures.

``run_suite`` executes every check of a validated scenario through the
verification layer and writes four kinds of artifacts into the output
directory:

* ``checks/<id>.json``   one report per check, with the resolved
  parameters echoed for reproducibility;
* ``aggregate.csv``      one row per convergence level per check plus a
  final summary row (level -1), header
  ``scenario,check_id,theorem_id,level,value,gap,tolerance,status``;
* ``summary.txt``        human-readable table and status counts;
* ``figures/*.png``      convergence and summary figures (optional).

Checks run concurrently up to a job limit; artifact assembly is ordered
by check index, and two runs with the same scenario and seed produce
byte-identical CSV output (no timestamps, repr float formatting).
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .errors import (
    FaceUndefinedError,
    InputError,
    NoSelectionError,
    ScenarioError,
    SolverFailError,
)
from .limits import (
    FACE_TOL,
    FACE_TOL_EXACT,
    REP_TOL,
    REP_TOL_EXACT,
    SF_TOL,
    STATUS_FAIL,
    STATUS_HYPOTHESIS,
    STATUS_PASS,
    VerificationReport,
    default_radius_schedule,
    default_t_levels,
    lower_bound_check,
    operator_equality_test,
    support_formula_estimate,
    verify_face_inclusion,
    verify_representation,
)
from .operators import default_lambda_schedule, yosida_trajectory

TRAJ_TOL = 1e-3

_STATUS_ORDER = (
    "PASS",
    "FAIL",
    "INCONCLUSIVE",
    "DEGENERATE_DOMAIN",
    "HYPOTHESIS_VIOLATION",
)


def _json_value(v):
    if isinstance(v, float) and math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def _csv_cell(v):
    if isinstance(v, str):
        return v
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return str(v)


def _trajectory_report(A, check, space, tol_traj, schedule):
    traj = yosida_trajectory(
        A, check.point, space, schedule=schedule, tol_traj=tol_traj, strict=False
    )
    table = []
    margins = []
    for k, rec in enumerate(traj.records):
        gap = float(np.linalg.norm(rec.yosida - traj.limit_selection, ord=space.q))
        table.append((k, rec.lam, rec.yosida_norm, gap))
        if math.isfinite(rec.bound_rhs):
            margins.append(rec.bound_rhs - rec.step_norm / rec.lam)
    ok = traj.converged and all(rec.bound_ok for rec in traj.records)
    return VerificationReport(
        theorem_id="trajectory",
        status=STATUS_PASS if ok else STATUS_FAIL,
        max_gap=traj.terminal_gap,
        tolerance=tol_traj,
        convergence_table=tuple(table),
        details={
            "limit_norm": traj.limit_norm,
            "bounds_ok": [bool(rec.bound_ok) for rec in traj.records],
            "min_bound_margin": min(margins) if margins else "inf",
            "converged": bool(traj.converged),
        },
    )


def _check_expected(report, expected, sf_tol):
    """Compare the verifier's support value against the fixture oracle."""
    details = dict(report.details)
    details["expected"] = _json_value(expected)
    if report.status != STATUS_PASS:
        return dataclasses.replace(report, details=details)
    sv = details.get("support_value")
    if math.isinf(expected):
        matches = sv == ("inf" if expected > 0 else "-inf")
        mismatch_gap = math.inf
    else:
        matches = isinstance(sv, float) and abs(sv - expected) <= sf_tol
        mismatch_gap = (
            abs(sv - expected) if isinstance(sv, float) else math.inf
        )
    if matches:
        return dataclasses.replace(report, details=details)
    details["reason"] = "expected_mismatch"
    return dataclasses.replace(
        report,
        status=STATUS_FAIL,
        max_gap=max(report.max_gap, mismatch_gap),
        details=details,
    )


def _execute_check(scenario, check, base_seed, tol_scale, force_exact):
    """Run one check; returns (params_echo, report). Never raises on
    solver failure or precondition violations: those become FAIL and
    HYPOTHESIS_VIOLATION rows respectively."""
    space = scenario.space
    A = scenario.operators[check.operator]
    ov = check.overrides
    seed = base_seed + 1000 * check.index
    exact = force_exact or check.exact
    theorem = check.theorem

    if theorem == "representation":
        tol = ov.get("rep_tol", REP_TOL_EXACT if exact else REP_TOL) * tol_scale
        params = {
            "mode": "exact" if exact else "sampled",
            "rep_tol": tol,
            "radii": list(ov.get("radii", default_radius_schedule())),
            "samples_per_radius": ov.get("samples_per_radius", 64),
            "seed": seed,
        }
        run = lambda: verify_representation(
            A,
            check.point,
            space,
            exact=exact,
            seed=seed,
            rep_tol=tol,
            radii=ov.get("radii"),
            samples_per_radius=params["samples_per_radius"],
        )
    elif theorem == "face_inclusion":
        tol = ov.get("face_tol", FACE_TOL_EXACT if exact else FACE_TOL) * tol_scale
        params = {
            "mode": "exact" if exact else "sampled",
            "face_tol": tol,
            "radii": list(ov.get("radii", default_radius_schedule())),
            "samples_per_radius": ov.get("samples_per_radius", 64),
            "seed": seed,
        }
        run = lambda: verify_face_inclusion(
            A,
            check.point,
            check.direction,
            space,
            exact=exact,
            seed=seed,
            face_tol=tol,
            radii=ov.get("radii"),
            samples_per_radius=params["samples_per_radius"],
        )
    elif theorem == "support_formula":
        tol = ov.get("sf_tol", SF_TOL) * tol_scale
        t_levels = list(ov.get("t_levels", default_t_levels()))
        params = {
            "sf_tol": tol,
            "t_levels": t_levels,
            "w_budget": ov.get("w_budget", 32),
            "seed": seed,
        }
        if check.expected is not None:
            params["expected"] = _json_value(check.expected)
        run = lambda: support_formula_estimate(
            A,
            check.point,
            check.direction,
            space,
            t_levels=t_levels,
            w_budget=params["w_budget"],
            seed=seed,
            sf_tol=tol,
        )
    elif theorem == "lower_bound":
        tol = 1e-9 * tol_scale
        params = {"samples": ov.get("samples", 200), "seed": seed, "margin_slack": tol}
        run = lambda: lower_bound_check(
            A,
            check.point,
            check.direction,
            check.dual_point,
            space,
            samples=params["samples"],
            seed=seed,
        )
    elif theorem == "operator_equality":
        B = scenario.operators[check.operator2]
        params = {"samples": ov.get("samples", 25), "seed": seed}
        pts = check.sample_points
        run = lambda: operator_equality_test(
            A, B, space, sample_points=pts, seed=seed, samples=params["samples"]
        )
    elif theorem == "trajectory":
        tol = ov.get("tol_traj", TRAJ_TOL) * tol_scale
        schedule = list(ov.get("lambda_schedule", default_lambda_schedule()))
        params = {"tol_traj": tol, "lambda_schedule": schedule, "seed": seed}
        run = lambda: _trajectory_report(A, check, space, tol, schedule)
    else:
        raise ScenarioError(f"checks[{check.index}].theorem: unknown '{theorem}'")

    tolerance = params.get(
        "rep_tol",
        params.get("face_tol", params.get("sf_tol", params.get("tol_traj", 1e-9))),
    )
    try:
        report = run()
    except NoSelectionError as exc:
        report = VerificationReport(
            theorem_id=theorem,
            status=STATUS_HYPOTHESIS,
            max_gap=math.inf,
            tolerance=tolerance,
            details={"error": str(exc)},
        )
    except SolverFailError as exc:
        report = VerificationReport(
            theorem_id=theorem,
            status=STATUS_FAIL,
            max_gap=math.inf,
            tolerance=tolerance,
            details={"error": str(exc)},
        )
    except (FaceUndefinedError, InputError) as exc:
        # the check's premises do not hold at this instance (point outside
        # the domain, unbounded face direction, dual point not a value):
        # reported, listed, but distinct from a theorem failure
        report = VerificationReport(
            theorem_id=theorem,
            status=STATUS_HYPOTHESIS,
            max_gap=math.inf,
            tolerance=tolerance,
            details={"error": str(exc)},
        )
    if theorem == "support_formula" and check.expected is not None:
        report = _check_expected(report, check.expected, params["sf_tol"])
    return params, report


def _primary_value(report):
    if report.theorem_id == "support_formula" and "estimate" in report.details:
        return report.details["estimate"]
    if report.theorem_id == "lower_bound" and "min_margin" in report.details:
        return report.details["min_margin"]
    return report.max_gap


def _write_check_json(path, scenario, check, seed, params, report):
    doc = {
        "scenario": scenario.name,
        "check_id": check.check_id,
        "theorem_id": check.theorem,
        "operator": check.operator,
        "seed": seed,
        "params": params,
        "report": report.to_json(),
    }
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_aggregate(path, scenario, results):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            [
                "scenario",
                "check_id",
                "theorem_id",
                "level",
                "value",
                "gap",
                "tolerance",
                "status",
            ]
        )
        for check, _params, report in results:
            common = [scenario.name, check.check_id, check.theorem]
            for row in report.convergence_table:
                level, _t, value, gap = row
                writer.writerow(
                    common
                    + [
                        _csv_cell(int(level)),
                        _csv_cell(float(value)),
                        _csv_cell(float(gap)),
                        _csv_cell(report.tolerance),
                        report.status,
                    ]
                )
            writer.writerow(
                common
                + [
                    "-1",
                    _csv_cell(_primary_value(report)),
                    _csv_cell(report.max_gap),
                    _csv_cell(report.tolerance),
                    report.status,
                ]
            )


def _fmt_gap(g):
    if isinstance(g, str):
        return g
    if math.isinf(g):
        return "inf"
    return format(g, ".6e")


def _write_summary(path, scenario, results, counts, exit_code, seed, tol_scale, exact):
    lines = [
        f"scenario: {scenario.name}",
        f"space: n={scenario.space.n} p={scenario.space.p}",
        f"seed: {seed}  tol-scale: {tol_scale}  exact: {str(exact).lower()}",
        "",
        f"{'check_id':<18} {'theorem':<18} {'point':<22} {'max_gap':<14} "
        f"{'tolerance':<12} status",
        "-" * 100,
    ]
    for check, _params, report in results:
        point = (
            json.dumps(list(map(float, check.point)))
            if check.point is not None
            else "-"
        )
        lines.append(
            f"{check.check_id:<18} {check.theorem:<18} {point:<22} "
            f"{_fmt_gap(report.max_gap):<14} {_csv_cell(report.tolerance):<12} "
            f"{report.status}"
        )
    lines.append("-" * 100)
    lines.append(
        "counts: " + " ".join(f"{s}={counts[s]}" for s in _STATUS_ORDER)
    )
    lines.append(f"exit: {exit_code}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def run_suite(
    scenario,
    out_dir=None,
    seed=None,
    tol_scale=1.0,
    exact=False,
    jobs=1,
    plots=True,
):
    """Execute every check of a scenario and write the artifact set.

    Parameters
    ----------
    scenario : Scenario
        Validated scenario from :func:`monotonelab.scenario.load_scenario`.
    out_dir : str or pathlib.Path, optional
        Output directory; defaults to the scenario's ``output_dir``.
    seed : int, optional
        Overrides the scenario's seed.  Each check runs with
        ``seed + 1000 * index`` so checks stay independent.
    tol_scale : float
        Uniform multiplier applied to the tolerances of every check.
    exact : bool
        Force exact polyhedral mode for representation and face checks.
    jobs : int
        Concurrent check executions; artifact writes stay serialized and
        ordered by check index.
    plots : bool
        Render PNG figures next to the tables.

    Returns
    -------
    int
        0 iff no check reported FAIL; 1 otherwise.
    """
    if tol_scale <= 0.0:
        raise ScenarioError(f"tol_scale must be positive, got {tol_scale}")
    if jobs < 1:
        raise ScenarioError(f"jobs must be at least 1, got {jobs}")
    out = Path(out_dir) if out_dir is not None else (
        Path(scenario.output_dir) if scenario.output_dir else None
    )
    if out is None:
        raise ScenarioError("no output directory: pass out_dir or set output_dir")
    base_seed = scenario.seed if seed is None else int(seed)

    checks_dir = out / "checks"
    checks_dir.mkdir(parents=True, exist_ok=True)

    if not scenario.checks:
        print(
            f"warning: scenario '{scenario.name}' has no checks", file=sys.stderr
        )

    def job(check):
        return _execute_check(scenario, check, base_seed, tol_scale, exact)

    if jobs > 1 and len(scenario.checks) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(job, scenario.checks))
    else:
        outcomes = [job(c) for c in scenario.checks]

    results = [
        (check, params, report)
        for check, (params, report) in zip(scenario.checks, outcomes)
    ]

    counts = {s: 0 for s in _STATUS_ORDER}
    for _check, _params, report in results:
        counts[report.status] += 1
    exit_code = 1 if counts[STATUS_FAIL] else 0

    for check, params, report in results:
        _write_check_json(
            checks_dir / f"{check.check_id}.json",
            scenario,
            check,
            base_seed + 1000 * check.index,
            params,
            report,
        )
    _write_aggregate(out / "aggregate.csv", scenario, results)
    _write_summary(
        out / "summary.txt",
        scenario,
        results,
        counts,
        exit_code,
        base_seed,
        tol_scale,
        exact,
    )

    if plots and results:
        from . import plots as plotmod

        fig_dir = out / "figures"
        fig_dir.mkdir(parents=True, exist_ok=True)
        for check, _params, report in results:
            if report.convergence_table:
                plotmod.render_check_figure(
                    scenario.name, check.check_id, report, fig_dir / f"{check.check_id}.png"
                )
        plotmod.render_summary_figure(
            scenario.name,
            [(c.check_id, r.max_gap, r.tolerance, r.status) for c, _p, r in results],
            fig_dir / "summary.png",
        )

    return exit_code
