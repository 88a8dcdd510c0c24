"""Bandit controller: gated one-point policy optimization on a live plant.

Each round plays the disturbance-action policy currently in force, observes
only the scalar cost, and recovers the disturbance exactly from the known
dynamics. Because the per-round loss depends on the last H+1 policies and
2(H+1) disturbances, updates are gated at effective memory 2(H+1): a
Bernoulli(1 / (2H+2)) coin fires an update only after 2H+1 quiet rounds, so
the consumed window was fixed before the feedback it is charged with.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bco_base import Schedule, base_round, init_state
from .bco_memory import UpdateSchedule, effective_memory
from .costs import CostOracle, bandit_observe
from .dap import ControlConstants
from .errors import ConfigError, InputError
from .numerics import BlockMatrix, sample_unit_sphere, spectral_norm
from .plant import LinearPlant, NoiseProcess, generate_noise
from .stability import StabilityCertificate


@dataclass(frozen=True, eq=False)
class ControlRun:
    """Everything one controlled run needs."""

    plant: LinearPlant
    noise: NoiseProcess
    oracle: CostOracle
    K0: np.ndarray
    cert: StabilityCertificate
    constants: ControlConstants
    schedule: Schedule
    T: int
    seed: int
    epsilon: float = 0.0
    perturber: object = None


@dataclass
class RegretTrace:
    """Per-round record of a controlled run plus run-level audit digests."""

    T: int
    H: int
    H_eff: int
    seed: int
    costs: np.ndarray
    update_flags: np.ndarray
    taus: np.ndarray
    x_norms: np.ndarray
    u_norms: np.ndarray
    fire_times: list
    segment_starts: np.ndarray
    segment_plays: np.ndarray
    noise: np.ndarray
    audit: dict
    cert_summary: dict
    J: float
    J_star: float | None = None
    pseudo_regret: float | None = None

    def cumulative_costs(self) -> np.ndarray:
        return np.cumsum(self.costs)

    def plays_per_round(self) -> np.ndarray:
        """Flattened played policy per round, reconstructed from segments."""
        out = np.empty((self.T, self.segment_plays.shape[1]))
        starts = list(self.segment_starts) + [self.T + 1]
        for s in range(len(self.segment_starts)):
            out[starts[s] - 1 : starts[s + 1] - 1] = self.segment_plays[s]
        return out


def _validate_regime(run: ControlRun):
    regime = run.schedule.regime
    fam = run.oracle.family
    if regime == "strongly_convex_smooth":
        if run.constants.alpha <= 0 or run.constants.sigma <= 0:
            raise ConfigError(
                "strongly_convex_smooth requires strongly convex costs and "
                f"a stochastic noise floor; got alpha={run.constants.alpha} "
                f"sigma={run.constants.sigma}"
            )
    if regime == "convex_smooth" and fam == "nonsmooth":
        raise ConfigError("convex_smooth schedule cannot run on nonsmooth costs")


def run_bandit_control(run: ControlRun) -> RegretTrace:
    plant, T = run.plant, run.T
    d, k, H = plant.d, plant.k, run.constants.H
    if run.K0.shape != (k, d):
        raise InputError(f"K0 shape {run.K0.shape}, expected ({k}, {d})")
    if T != run.constants.T:
        raise ConfigError(f"run T={T} disagrees with constants derived for T={run.constants.T}")
    _validate_regime(run)

    rng = np.random.default_rng(np.random.SeedSequence((run.seed, 0xC0)))
    noise = generate_noise(run.noise, T, d)
    H_eff = effective_memory(H)
    gate = UpdateSchedule(H_eff)
    state = init_state(run.schedule, sample_unit_sphere(rng, H, k, d))
    played = state.played

    costs = np.empty(T)
    update_flags = np.zeros(T, dtype=bool)
    taus = np.empty(T, dtype=int)
    x_norms = np.empty(T)
    u_norms = np.empty(T)
    fire_times: list[int] = []
    segment_starts = [1]
    segment_plays = [played.flatten()]

    # Audit accumulators. Feasibility is checked once per segment since the
    # played policy is constant between updates.
    r0 = run.constants.r0
    doubled = 2.0 * r0
    max_play_ratio = _feasibility_ratio(played, doubled)
    max_center_ratio = _feasibility_ratio(state.center, r0)
    max_recovery_err = 0.0
    max_cost = 0.0

    wrec = np.zeros((T + H, d))  # rows H-1+s hold recovered w_s; first H-1 rows stay zero
    M2d = _action_matrix(played)
    x = np.zeros(d)
    for r in range(T):
        t = r + 1
        w_hist = wrec[r : r + H][::-1]  # w_{t-1} .. w_{t-H}, most recent first
        u = -(run.K0 @ x) + M2d @ np.ascontiguousarray(w_hist).reshape(-1)
        drive = plant.A @ x + plant.B @ u
        x_next = drive + noise[r]
        recovered = x_next - drive
        wrec[r + H] = recovered
        err = float(np.linalg.norm(recovered - noise[r]))
        if err > max_recovery_err:
            max_recovery_err = err

        fb = bandit_observe(run.oracle, t, x, u, run.epsilon, run.perturber)
        costs[r] = fb.value
        taus[r] = state.tau
        x_norms[r] = np.linalg.norm(x)
        u_norms[r] = np.linalg.norm(u)
        if abs(fb.value) > max_cost:
            max_cost = abs(fb.value)

        if gate.step(rng):
            state, played = base_round(state, sample_unit_sphere(rng, H, k, d), fb.value)
            update_flags[r] = True
            fire_times.append(t)
            segment_starts.append(t + 1)
            segment_plays.append(played.flatten())
            M2d = _action_matrix(played)
            ratio = _feasibility_ratio(played, doubled)
            if ratio > max_play_ratio:
                max_play_ratio = ratio
            ratio = _feasibility_ratio(state.center, r0)
            if ratio > max_center_ratio:
                max_center_ratio = ratio
        x = x_next

    D_xu = run.constants.D_xu
    audit = {
        "max_x_norm": float(np.max(x_norms)),
        "max_u_norm": float(np.max(u_norms)),
        "max_cost": max_cost,
        "D_xu": D_xu,
        "cost_bound": run.constants.C * D_xu**2,
        "max_recovery_err": max_recovery_err,
        "max_play_ratio": max_play_ratio,
        "max_center_ratio": max_center_ratio,
        "min_gap": int(np.min(np.diff(fire_times))) if len(fire_times) > 1 else None,
    }
    return RegretTrace(
        T=T,
        H=H,
        H_eff=H_eff,
        seed=run.seed,
        costs=costs,
        update_flags=update_flags,
        taus=taus,
        x_norms=x_norms,
        u_norms=u_norms,
        fire_times=fire_times,
        segment_starts=np.asarray(segment_starts, dtype=int),
        segment_plays=np.asarray(segment_plays),
        noise=noise,
        audit=audit,
        cert_summary=run.cert.summary(),
        J=float(np.sum(costs)),
    )


def _action_matrix(M: BlockMatrix) -> np.ndarray:
    """Reshape blocks so the action's policy term is one (k, H*d) matvec."""
    return np.ascontiguousarray(M.blocks.transpose(1, 0, 2).reshape(M.k, M.H * M.d))


def _feasibility_ratio(M: BlockMatrix, radii: np.ndarray) -> float:
    """max_i ||block_i|| / radius_i; <= 1 means inside the class."""
    norms = np.array([spectral_norm(b) for b in M.blocks])
    return float(np.max(norms / radii))
