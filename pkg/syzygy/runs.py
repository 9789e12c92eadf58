"""Run pipelines behind the command-line subcommands.

Each pipeline takes a validated ``RunConfig`` and an ``OutputSink``, writes its
artifacts and returns ``(summary, exit_code)``. Nothing here parses flags or
prints.
"""

from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from typing import Any, NamedTuple, Optional

import numpy as np

from syzygy.config import settings
from syzygy.eclipse_symbolics import sequence
from syzygy.errors import SyzygyError
from syzygy.nbody_dynamics import (
    EVENTS_HEADER,
    TRAJECTORY_HEADER,
    Trajectory,
    characteristic_time,
    integrate,
    lagrange_circular_ic,
    lagrange_homothety_ic,
    random_zero_j_ic,
)
from syzygy.outputs import OutputSink, write_csv, write_json
from syzygy.run_log import get_run_logger
from syzygy.schemas import IntegratorConfig, RunConfig
from syzygy.shape_geometry import (
    ShapePoint,
    conformal_ratio_check,
    cone_residuals,
    intertwiner,
)
from syzygy.theorem_lab import (
    SCAN_HEADER,
    check_corollary,
    check_fzdot_monotone,
    check_recurrence,
    ode_residual,
    q_series,
    scan_inequalities,
    scan_q,
)
from syzygy.triangle_core import (
    BodyState,
    MassTriple,
    heron_defect,
    jacobi_vectors,
)
from syzygy.varfinder import LoopPath, find_eight, refine_to_orbit

logger = get_run_logger("runs")

FAILED_TERMINATIONS = ("collision", "triple_collision")

CONFORMAL_TOL = 1e-6
CONE_TOL = 1e-12
INTERTWINER_TOL = 1e-12
HOMOTHETY_Q_TOL = 1e-9
LAGRANGE_Z_TOL = 1e-6
LAGRANGE_DRIFT_TOL = 1e-8
MIN_RANDOM_ECLIPSES = 10


class PreparedRun(NamedTuple):
    state: BodyState
    t_end: float
    periods: Optional[int]


def eight_phase(loop: LoopPath) -> float:
    """Extraction time of the eight pipeline; eclipses sit at multiples of T/6."""
    return -loop.period / 12.0 if loop.tag == "eight" else 0.0


def prepare(cfg: RunConfig) -> PreparedRun:
    """Initial state and run length for the configured source."""
    m = MassTriple(*cfg.masses)
    ic = cfg.initial
    t_end = cfg.integrator.t_end
    if ic.source == "explicit":
        v = ic.velocities if ic.velocities is not None else np.zeros((3, 2))
        return PreparedRun(BodyState(x=np.array(ic.positions), v=np.array(v)), t_end, None)
    if ic.source == "lagrange-homothety":
        return PreparedRun(lagrange_homothety_ic(m, ic.size, ic.rate), t_end, None)
    if ic.source == "lagrange-circular":
        return PreparedRun(lagrange_circular_ic(m, ic.side), t_end, None)
    if ic.source == "random-zero-j":
        state = random_zero_j_ic(m, ic.seed, kinetic_fraction=ic.kinetic_fraction)
        return PreparedRun(state, t_end, None)
    loop = LoopPath.load(ic.loop_path)
    refined = refine_to_orbit(m, loop, phase=eight_phase(loop), cfg=cfg.integrator)
    periods = int(ic.periods) if float(ic.periods).is_integer() else None
    return PreparedRun(refined.state, ic.periods * loop.period, periods)


def _run(cfg: RunConfig) -> tuple[MassTriple, Trajectory, PreparedRun]:
    m = MassTriple(*cfg.masses)
    prepared = prepare(cfg)
    run_cfg = cfg.integrator.model_copy(update={"t_end": prepared.t_end})
    return m, integrate(m, prepared.state, run_cfg), prepared


def _exit_code(traj: Trajectory) -> int:
    return 3 if traj.termination in FAILED_TERMINATIONS else 0


def simulate(cfg: RunConfig, sink: OutputSink) -> tuple[dict[str, Any], int]:
    """Trajectory CSV, events CSV and summary JSON for one run."""
    _, traj, prepared = _run(cfg)
    seq = sequence(traj, prepared.periods)
    write_csv(sink, "trajectory.csv", TRAJECTORY_HEADER, traj.rows())
    write_csv(sink, "events.csv", EVENTS_HEADER, traj.event_rows())
    transversal = seq.transversal()
    summary = {
        "masses": cfg.masses,
        "source": cfg.initial.source,
        "termination": traj.termination,
        "t_final": traj.t_final,
        "steps": len(traj.t) - 1,
        "eclipse_count": len(transversal),
        "grazing_count": len(seq) - len(transversal),
        "sequence": transversal.to_json(),
        "energy_drift": traj.energy_drift,
        "j_drift": traj.j_drift,
        "conserved": max(traj.energy_drift, traj.j_drift) <= cfg.integrator.conservation_tol,
    }
    write_json(sink, "summary.json", summary)
    code = _exit_code(traj)
    return summary, code if code or summary["conserved"] else 1


def eclipses(cfg: RunConfig, sink: OutputSink) -> tuple[dict[str, Any], int]:
    """Events CSV and the eclipse sequence of one run."""
    _, traj, prepared = _run(cfg)
    seq = sequence(traj, prepared.periods)
    write_csv(sink, "events.csv", EVENTS_HEADER, traj.event_rows())
    transversal = seq.transversal()
    summary = {
        "termination": traj.termination,
        "text": transversal.text(),
        **transversal.to_json(),
    }
    write_json(sink, "eclipses.json", summary)
    return summary, _exit_code(traj)


def scan(cfg: RunConfig, sink: OutputSink) -> tuple[dict[str, Any], int]:
    """INEQ1/INEQ2 grid CSV plus scan minima, including the q summands."""
    m = MassTriple(*cfg.masses)
    result = scan_inequalities(m, cfg.scan.grid)
    write_csv(sink, "scan.csv", SCAN_HEADER, result.rows())
    q = scan_q(m, cfg.scan.grid, cfg.scan.directions)
    summary = {
        "inequalities": result.summary(),
        "q": q.summary(),
        "passed": result.passed and q.passed,
    }
    write_json(sink, "scan_summary.json", summary)
    return summary, 0 if summary["passed"] else 1


def eight(
    cfg: RunConfig, sink: OutputSink, name: str = "loop.json"
) -> tuple[dict[str, Any], int]:
    """Figure-eight search, refined to periodic initial conditions."""
    m = MassTriple(*cfg.masses)
    loop, report = find_eight(m, cfg.harmonics)
    sink.write_text(name, loop.model_dump_json(indent=2) + "\n")
    summary: dict[str, Any] = {"report": report.model_dump(), "loop": name}
    refined = refine_to_orbit(m, loop, phase=eight_phase(loop), cfg=cfg.integrator)
    summary["mismatch"] = refined.mismatch
    summary["initial_state"] = refined.state.record()
    write_json(sink, "find_eight.json", summary)
    return summary, 0 if report.converged else 1


def conformal_check(cfg: RunConfig, sink: OutputSink) -> tuple[dict[str, Any], int]:
    """Numeric against closed-form conformal ratios, plus the intertwiner identities."""
    m = MassTriple(*cfg.masses)
    ref = MassTriple.equal()
    rng = np.random.default_rng(cfg.initial.seed)
    count = cfg.verify.samples
    phi = rng.uniform(-1.3, 1.3, count)
    theta = rng.uniform(-np.pi, np.pi, count)
    direction = rng.uniform(0.0, 2 * np.pi, count)
    rows = []
    for a, b, d in zip(phi, theta, direction):
        numeric, closed = conformal_ratio_check(m, ref, ShapePoint(I=1.0, phi=a, theta=b), d)
        rows.append((float(a), float(b), float(d), numeric, closed, abs(numeric / closed - 1.0)))
    write_csv(
        sink,
        "conformal.csv",
        ("phi", "theta", "direction", "numeric", "closed_form", "deviation"),
        rows,
    )

    L = intertwiner(m, ref)
    det_error = abs(abs(L.det) ** 2 - ref.c / m.c) / (ref.c / m.c)
    x = rng.normal(size=(count, 3, 2))
    z1, z2 = jacobi_vectors(m, x)
    r1, r2 = jacobi_vectors(ref, x)
    scale = np.sqrt(np.abs(r1) ** 2 + np.abs(r2) ** 2)
    mapped = np.maximum(np.abs(L.alpha * z1 - r1), np.abs(L.beta * z1 + L.gamma * z2 - r2))
    intertwining_error = float(np.max(mapped / scale))

    max_dev = max(r[-1] for r in rows)
    summary = {
        "masses": m.as_list(),
        "reference": ref.as_list(),
        "samples": count,
        "max_deviation": max_dev,
        "det_error": det_error,
        "intertwining_error": intertwining_error,
        "passed": bool(
            max_dev < CONFORMAL_TOL
            and det_error < INTERTWINER_TOL
            and intertwining_error < INTERTWINER_TOL
        ),
    }
    logger.log_check("conformal", summary["passed"], max_deviation=max_dev)
    write_json(sink, "conformal_summary.json", summary)
    return summary, 0 if summary["passed"] else 1


def cone_check(cfg: RunConfig, sink: OutputSink) -> tuple[dict[str, Any], int]:
    """Hopf cone and Heron residuals on random triangles."""
    rng = np.random.default_rng(cfg.initial.seed)
    x = rng.normal(size=(cfg.verify.triangles, 3, 2))
    cone, heron = cone_residuals(x)
    pythagorean = float(heron_defect(np.array([25.0, 9.0, 16.0]), 6.0))
    summary = {
        "triangles": cfg.verify.triangles,
        "max_cone_residual": float(np.max(np.abs(cone))),
        "max_heron_residual": float(np.max(np.abs(heron))),
        "heron_345": 16.0 * 6.0**2 - pythagorean,
    }
    summary["passed"] = bool(
        summary["max_cone_residual"] < CONE_TOL
        and summary["max_heron_residual"] < CONE_TOL
        and pythagorean == 0.0
    )
    logger.log_check("cone", summary["passed"], max_cone=summary["max_cone_residual"])
    write_json(sink, "cone_summary.json", summary)
    return summary, 0 if summary["passed"] else 1


# --- verification suite --------------------------------------------------


def _criterion(passed: bool, **data: Any) -> dict[str, Any]:
    return {"passed": bool(passed), **data}


def random_run(
    masses: list[float],
    seed: int,
    span: float,
    integrator: dict[str, Any],
    residual_tol: float,
) -> dict[str, Any]:
    """One random zero-J trajectory through the trajectory checks.

    Runs that escape or collide are outside the hypothesis and only reported.
    """
    m = MassTriple(*masses)
    state = random_zero_j_ic(m, seed)
    tau = characteristic_time(m, state)
    cfg = IntegratorConfig(**{**integrator, "t_end": span * tau})
    result: dict[str, Any] = {"seed": seed, "span": span * tau}
    try:
        traj = integrate(m, state, cfg)
    except SyzygyError as exc:
        return {**result, "in_hypothesis": False, "error": exc.code}
    result["termination"] = traj.termination
    if traj.termination != "time_end":
        return {**result, "in_hypothesis": False}
    residual = ode_residual(m, traj, tolerance=residual_tol)
    monotone = check_fzdot_monotone(m, traj)
    corollary = check_corollary(m, traj)
    recurrence = check_recurrence(m, traj, min_eclipses=MIN_RANDOM_ECLIPSES)
    return {
        **result,
        "in_hypothesis": True,
        "residual": residual.model_dump(),
        "monotone": monotone.model_dump(),
        "corollary": corollary.model_dump(),
        "recurrence": recurrence.model_dump(),
    }


def _random_runs(cfg: RunConfig) -> tuple[list[dict[str, Any]], list[dict[str, Any]]]:
    """Draw seeds upward from ``initial.seed`` until ``random_runs`` stay in hypothesis.

    Returns ``(accepted, rejected)``, each in seed order. Drawing stops after
    ``random_max_attempts`` seeds even when fewer runs were accepted.
    """
    count = cfg.verify.random_runs
    if count == 0:
        return [], []
    integrator = cfg.integrator.model_dump()
    limit = cfg.initial.seed + cfg.verify.random_max_attempts
    accepted: list[dict[str, Any]] = []
    rejected: list[dict[str, Any]] = []
    next_seed = cfg.initial.seed
    with ProcessPoolExecutor(max_workers=settings.worker_count(count)) as pool:
        while len(accepted) < count and next_seed < limit:
            batch = range(next_seed, min(next_seed + count - len(accepted), limit))
            next_seed = batch.stop
            futures = [
                pool.submit(
                    random_run,
                    cfg.masses,
                    seed,
                    cfg.verify.random_span,
                    integrator,
                    cfg.verify.residual_tol,
                )
                for seed in batch
            ]
            for future in futures:
                result = future.result()
                if result["in_hypothesis"]:
                    accepted.append(result)
                    continue
                rejected.append(result)
                logger.log_random_run_rejected(
                    result["seed"], result.get("error") or result["termination"]
                )
    return accepted, rejected


def _random_tally(
    count: int, accepted: list[dict[str, Any]], rejected: list[dict[str, Any]]
) -> dict[str, Any]:
    reasons = Counter(r.get("error") or r["termination"] for r in rejected)
    return {
        "requested": count,
        "accepted": len(accepted),
        "rejected": len(rejected),
        "rejected_seeds": [r["seed"] for r in rejected],
        "rejections": dict(reasons),
    }


def _eight_trajectory(cfg: RunConfig) -> Trajectory:
    m = MassTriple.equal()
    if cfg.verify.eight_loop is not None:
        loop = LoopPath.load(cfg.verify.eight_loop)
    else:
        loop, _ = find_eight(m, cfg.harmonics)
    refined = refine_to_orbit(m, loop, phase=eight_phase(loop))
    run_cfg = cfg.integrator.model_copy(update={"t_end": refined.period})
    return integrate(m, refined.state, run_cfg)


def _lagrange(cfg: RunConfig) -> dict[str, Any]:
    m = MassTriple(1.0, 2.0, 3.0)
    state = lagrange_circular_ic(m)
    period = 2 * np.pi / np.sqrt(m.M)
    run_cfg = cfg.integrator.model_copy(
        update={"t_end": cfg.verify.lagrange_periods * period}
    )
    traj = integrate(m, state, run_cfg)
    z_dev = float(np.max(np.abs(traj.z - traj.z[0])))
    circular = _criterion(
        len(traj.events) == 0
        and z_dev < LAGRANGE_Z_TOL
        and traj.energy_drift < LAGRANGE_DRIFT_TOL
        and traj.j_drift < LAGRANGE_DRIFT_TOL,
        periods=cfg.verify.lagrange_periods,
        events=len(traj.events),
        z_deviation=z_dev,
        energy_drift=traj.energy_drift,
        j_drift=traj.j_drift,
    )

    homothety = integrate(m, lagrange_homothety_ic(m), cfg.integrator, detect=False)
    parts = q_series(m, homothety)
    q_rel = float(np.max(np.abs(parts["q"]) / parts["scale"]))
    return {
        "lagrange_circular": circular,
        "lagrange_homothety_q": _criterion(
            q_rel < HOMOTHETY_Q_TOL, max_relative_q=q_rel, termination=homothety.termination
        ),
    }


def verify(cfg: RunConfig, sink: OutputSink) -> tuple[dict[str, Any], int]:
    """Run the enabled acceptance criteria; exit 1 if any fails."""
    toggles = cfg.verify
    criteria: dict[str, Any] = {}
    diagnostics: dict[str, Any] = {}

    if toggles.theorem2 or toggles.corollary or toggles.recurrence:
        m = MassTriple.equal()
        traj = _eight_trajectory(cfg)
        if toggles.theorem2:
            report = ode_residual(m, traj, tolerance=toggles.residual_tol)
            criteria["theorem2_eight"] = _criterion(report.tolerance_pass, **report.model_dump())
            if toggles.negated_q_diagnostic:
                negated = ode_residual(
                    m, traj, h=report.h_used, tolerance=toggles.residual_tol, q_sign=-1.0
                )
                diagnostics["negated_q"] = _criterion(
                    negated.tolerance_pass, **negated.model_dump()
                )
        if toggles.corollary:
            monotone = check_fzdot_monotone(m, traj)
            corollary = check_corollary(m, traj)
            criteria["monotone_eight"] = monotone.model_dump()
            criteria["corollary_eight"] = corollary.model_dump()
        if toggles.recurrence:
            recurrence = check_recurrence(m, traj)
            criteria["recurrence_eight"] = recurrence.model_dump()

    valid, rejected = _random_runs(cfg)
    if toggles.random_runs:
        complete = len(valid) == toggles.random_runs
        diagnostics["random_runs"] = _random_tally(toggles.random_runs, valid, rejected)
        if toggles.theorem2:
            worst = max((r["residual"]["max_residual"] for r in valid), default=None)
            criteria["theorem2_random"] = _criterion(
                complete and all(r["residual"]["tolerance_pass"] for r in valid),
                runs=len(valid),
                max_residual=worst,
            )
        if toggles.corollary:
            criteria["corollary_random"] = _criterion(
                complete
                and all(r["monotone"]["passed"] and r["corollary"]["passed"] for r in valid),
                runs=len(valid),
            )
        if toggles.recurrence:
            criteria["recurrence_random"] = _criterion(
                complete and all(r["recurrence"]["passed"] for r in valid),
                runs=len(valid),
                min_eclipses=min((r["recurrence"]["eclipses"] for r in valid), default=0),
                max_gap=max(
                    (r["recurrence"]["max_gap"] or 0.0 for r in valid), default=None
                ),
            )

    triples = [MassTriple(*t) for t in cfg.scan.extra_masses]
    if toggles.q_scan:
        scans = [scan_q(t, cfg.scan.grid, cfg.scan.directions) for t in triples]
        criteria["q_nonnegative"] = _criterion(
            all(s.passed for s in scans), scans=[s.summary() for s in scans]
        )
    if toggles.inequalities:
        scans = [scan_inequalities(t, cfg.scan.grid) for t in triples]
        criteria["inequalities"] = _criterion(
            all(s.passed for s in scans), scans=[s.summary() for s in scans]
        )
    if toggles.conformal:
        check_cfg = cfg.model_copy(update={"masses": [1.0, 2.0, 3.0]})
        summary, _ = conformal_check(check_cfg, sink)
        criteria["conformal"] = summary
    if toggles.cone:
        summary, _ = cone_check(cfg, sink)
        criteria["cone"] = summary
    if toggles.lagrange:
        criteria.update(_lagrange(cfg))

    passed = all(c["passed"] for c in criteria.values())
    result = {"passed": passed, "criteria": criteria, "diagnostics": diagnostics}
    write_json(sink, "verification.json", result)
    return result, 0 if passed else 1
