"""Named invariant audits over completed control runs."""

import numpy as np

from ..bco_base import Schedule
from ..bco_memory import drift_budget, drift_sums
from ..controller import RegretTrace

RECOVERY_TOL = 1e-12
FEASIBILITY_SLACK = 1e-9


def audit_trace(trace: RegretTrace, schedule: Schedule = None) -> dict:
    """Check every runtime invariant of a finished run.

    Returns a dict mapping check name to {passed, observed, bound}. The
    drift check needs the perturbation schedule and is skipped when one is
    not supplied.
    """
    a = trace.audit
    checks = {}

    def add(name, observed, bound, passed=None):
        if passed is None:
            passed = bool(observed <= bound)
        checks[name] = {
            "passed": bool(passed),
            "observed": float(observed),
            "bound": float(bound),
        }

    add("state_norm_bound", a["max_x_norm"], a["D_xu"])
    add("action_norm_bound", a["max_u_norm"], a["D_xu"])
    add("cost_bound", a["max_cost"], a["cost_bound"])
    add("noise_recovery", a["max_recovery_err"], RECOVERY_TOL)
    add("played_policy_feasible", a["max_play_ratio"],
        1.0 + FEASIBILITY_SLACK)
    add("center_policy_feasible", a["max_center_ratio"],
        1.0 + FEASIBILITY_SLACK)

    fire_times = np.asarray(trace.fire_times, dtype=int)
    if fire_times.size == 0:
        add("update_spacing", 0.0, float(trace.H_eff), passed=True)
        add("first_update_delay", 0.0, float(trace.H_eff), passed=True)
    else:
        min_gap = (float(np.diff(fire_times).min())
                   if fire_times.size > 1 else float(trace.H_eff))
        add("update_spacing", min_gap, float(trace.H_eff),
            passed=min_gap >= trace.H_eff)
        add("first_update_delay", float(fire_times[0]), float(trace.H_eff),
            passed=fire_times[0] >= trace.H_eff)

    if schedule is not None:
        plays = trace.plays_per_round()
        observed = drift_sums(plays, trace.H_eff)
        budget = drift_budget(schedule, trace.T, trace.H_eff)
        add("drift_budget", observed, budget * (1.0 + FEASIBILITY_SLACK))

    return checks


def run_audits(traces, schedules=None) -> dict:
    """Aggregate audit_trace over many runs; lists every failing check."""
    if schedules is None:
        schedules = [None] * len(traces)
    failures = []
    for i, (trace, sched) in enumerate(zip(traces, schedules)):
        for name, result in audit_trace(trace, sched).items():
            if not result["passed"]:
                failures.append({
                    "run": i,
                    "seed": trace.seed,
                    "check": name,
                    "observed": result["observed"],
                    "bound": result["bound"],
                })
    return {"passed": not failures, "failures": failures,
            "runs": len(traces)}
