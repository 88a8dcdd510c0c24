"""Base bandit convex optimizer over the policy class.

One copy of the classic loop: keep a feasible center M-bar, play the center
plus a preconditioned sphere perturbation, turn the single observed scalar
into a gradient estimate, and take a projected mirror-descent step whose
preconditioner is the (diagonal, per-block) square of the exploration radii.
Block i explores at radius r_tau_i and is projected back into its own
spectral ball of radius r0_i, so every played point stays inside the doubled
policy class.

Three schedule regimes are supported. With curvature available the radii
shrink like 1/sqrt(tau); without it they are constant in tau and only shrink
with the planning horizon. "theorem" mode evaluates the published parameter
formulas verbatim; "tuned" mode keeps each formula's functional form in T and
tau but swaps the astronomically conservative constants for unit-scale knobs,
which is what makes desk-scale experiments move.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dap import ControlConstants
from .errors import DegenerateScheduleError, InputError, ParameterError
from .numerics import BlockMatrix, project_spectral_ball

REGIMES = ("strongly_convex_smooth", "convex_smooth", "convex_nonsmooth")
MODES = ("theorem", "tuned")
RADIUS_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class Schedule:
    """Step size, exploration radii, and the drift/perturbation envelopes.

    delta(tau) bounds the center's movement at update tau and rho(tau) bounds
    the distance between the played point and the center, both in Frobenius
    norm; audits and the reduction's regret accounting consume them.
    """

    regime: str
    mode: str
    eta: float
    horizon: int
    C_hat: float
    d_M: int
    H: int
    D: float
    r0: np.ndarray
    projection_radii: np.ndarray
    curvature: float = 0.0  # alpha_f in theorem mode, knob in tuned mode
    reg: float = 0.0  # constant radius regularizer for the convex regimes
    alpha_f: float = 0.0

    def radius(self, tau: int) -> np.ndarray:
        if tau < 0:
            raise ParameterError(f"update counter must be >= 0, got {tau}")
        inv_sq = self.r0**-2
        if self.regime == "strongly_convex_smooth":
            # Theorem mode couples the decay to the step size (the analysis
            # accumulates curvature weight alpha_f * eta per update). Tuned
            # mode decays per update directly so the radius trajectory does
            # not flatten as eta scales down with the horizon.
            rate = self.curvature if self.mode == "tuned" else self.curvature * self.eta
            inv_sq = inv_sq + 0.5 * rate * tau
        else:
            inv_sq = inv_sq + self.reg
        r = inv_sq**-0.5
        if np.min(r) < RADIUS_FLOOR:
            raise DegenerateScheduleError(
                f"exploration radius underflow at tau={tau}: min {np.min(r):.3g}"
            )
        return r

    def delta(self, tau: int) -> float:
        if tau < 1:
            raise ParameterError(f"delta is defined for tau >= 1, got {tau}")
        if self.mode == "tuned":
            return self.eta * self.d_M * self.C_hat * float(np.max(self.radius(tau)))
        if self.regime == "strongly_convex_smooth":
            return self.d_M * self.C_hat * math.sqrt(2.0 * self.eta / (self.alpha_f * tau))
        return self.D * math.sqrt((self.H + 1.0) / self.horizon)

    def rho(self, tau: int) -> float:
        if tau < 1:
            raise ParameterError(f"rho is defined for tau >= 1, got {tau}")
        if self.mode == "tuned":
            return float(np.max(self.radius(tau)))
        if self.regime == "strongly_convex_smooth":
            return math.sqrt(2.0 / (self.alpha_f * self.eta * tau))
        return self.reg**-0.5


def make_schedule(
    regime: str,
    constants: ControlConstants,
    T: int | None = None,
    C_hat: float | None = None,
    mode: str = "theorem",
    eta_scale: float = 1.0,
    curvature: float | None = None,
    reg_scale: float = 1.0,
    projection_inflate: float = 1.0,
) -> Schedule:
    """Build the exploration schedule for one run.

    T defaults to the horizon the constants were derived for and C_hat to the
    feedback bound C * D_xu^2. projection_inflate scales the projection radii
    only (a fault-injection hook for audit tests; leave at 1.0 otherwise).
    """
    if regime not in REGIMES:
        raise ParameterError(f"unknown regime {regime!r}, want one of {REGIMES}")
    if mode not in MODES:
        raise ParameterError(f"unknown mode {mode!r}, want one of {MODES}")
    T = int(T if T is not None else constants.T)
    if T < 1:
        raise ParameterError(f"schedule horizon must be >= 1, got {T}")
    C_hat = float(C_hat if C_hat is not None else constants.C_hat)
    if C_hat <= 0:
        raise ParameterError(f"feedback bound C_hat must be positive, got {C_hat}")
    if eta_scale <= 0 or reg_scale <= 0 or projection_inflate <= 0:
        raise ParameterError("schedule scale knobs must be positive")
    r0 = constants.feasible_radii()
    if np.min(r0) < RADIUS_FLOOR:
        raise DegenerateScheduleError(
            f"feasible radii underflow (min {np.min(r0):.3g}); gamma too close to 1"
        )
    d_M, H = constants.d_M, constants.H
    D = math.sqrt(constants.D_sq)
    common = dict(
        regime=regime,
        mode=mode,
        horizon=T,
        C_hat=C_hat,
        d_M=d_M,
        H=H,
        D=D,
        r0=r0,
        projection_radii=r0 * projection_inflate,
        alpha_f=constants.alpha_f,
    )

    if regime == "strongly_convex_smooth":
        if mode == "theorem":
            if constants.alpha_f <= 0:
                raise ParameterError(
                    "strongly_convex_smooth needs alpha_f > 0 "
                    "(strongly convex costs and a stochastic noise floor)"
                )
            if not math.isfinite(constants.beta_f):
                raise ParameterError("strongly_convex_smooth needs finite beta_f")
            num = 3.0 * constants.n**2 + 15.0 * (constants.beta_f / constants.alpha_f) * math.log(T)
            eta = math.sqrt(num / (T * constants.d**2 * constants.k**2 * C_hat**2))
            curv = constants.alpha_f
        else:
            eta = eta_scale / math.sqrt(T)
            curv = 1.0 if curvature is None else float(curvature)
            if curv <= 0:
                raise ParameterError(f"tuned curvature knob must be positive, got {curv}")
        sched = Schedule(eta=eta, curvature=curv, **common)
    elif regime == "convex_smooth":
        if not (math.isfinite(constants.beta_f) and constants.beta_f > 0):
            raise ParameterError("convex_smooth needs finite beta_f > 0 (smooth costs)")
        if mode == "theorem":
            eta = (2.0 * (H + 1) * constants.beta_f * D**2 / (d_M**4 * C_hat**4 * T)) ** (1.0 / 3.0)
            reg = (4.0 * constants.beta_f**2 * T / ((H + 1) * d_M**2 * C_hat**2 * D**2)) ** (
                1.0 / 3.0
            )
        else:
            eta = eta_scale / T ** (1.0 / 3.0)
            reg = reg_scale * T ** (1.0 / 3.0)
        sched = Schedule(eta=eta, reg=reg, **common)
    else:
        if not (math.isfinite(constants.L_f) and constants.L_f > 0):
            raise ParameterError("convex_nonsmooth needs L_f > 0")
        if mode == "theorem":
            eta = 2.0 * ((H + 1) ** 3 * constants.L_f**2 * D**2 / (d_M**6 * C_hat**6 * T)) ** 0.25
            reg = 4.0 * constants.L_f * math.sqrt((H + 1) * T) / (d_M * C_hat * D)
        else:
            eta = eta_scale / T**0.25
            reg = reg_scale * math.sqrt(T)
        sched = Schedule(eta=eta, reg=reg, **common)

    sched.radius(1)  # abort now if parameters are already degenerate
    return sched


@dataclass
class BcoState:
    """Mutable optimizer state: feasible center, live perturbation, counter."""

    schedule: Schedule
    center: BlockMatrix
    direction: BlockMatrix
    tau: int

    @property
    def radii(self) -> np.ndarray:
        return self.schedule.radius(self.tau)

    @property
    def played(self) -> BlockMatrix:
        return self.center + self.direction.scale_blocks(self.radii)


def init_state(schedule: Schedule, direction: BlockMatrix) -> BcoState:
    """Fresh state at tau = 1 with a zero center, as the algorithm starts."""
    H = schedule.r0.shape[0]
    if direction.H != H:
        raise InputError(f"direction has {direction.H} blocks, schedule expects {H}")
    center = BlockMatrix.zeros(H, direction.k, direction.d)
    return BcoState(schedule=schedule, center=center, direction=direction, tau=1)


def one_point_gradient(
    feedback: float, direction: BlockMatrix, radii: np.ndarray, d_M: int
) -> BlockMatrix:
    """Single-evaluation gradient estimate g_i = (d_M / r_i) * feedback * U_i."""
    radii = np.asarray(radii, dtype=float)
    if radii.shape != (direction.H,):
        raise InputError(f"need {direction.H} radii, got shape {radii.shape}")
    if np.min(radii) < RADIUS_FLOOR:
        raise DegenerateScheduleError(f"gradient radius underflow: min {np.min(radii):.3g}")
    return direction.scale_blocks(d_M * float(feedback) / radii)


def omd_step(
    center: BlockMatrix,
    grad: BlockMatrix,
    eta: float,
    radii: np.ndarray,
    projection_radii: np.ndarray,
) -> BlockMatrix:
    """Preconditioned projected step, blockwise.

    Block i moves by eta * r_i^2 * g_i and is projected back onto its
    spectral ball; with the one-point estimate plugged in, the move is
    eta * d_M * feedback * r_i * U_i.
    """
    radii = np.asarray(radii, dtype=float)
    projection_radii = np.asarray(projection_radii, dtype=float)
    if radii.shape != (center.H,) or projection_radii.shape != (center.H,):
        raise InputError("radii arrays must have one entry per block")
    stepped = center.blocks - eta * (radii**2)[:, None, None] * grad.blocks
    out = np.empty_like(stepped)
    for i in range(center.H):
        out[i] = project_spectral_ball(stepped[i], float(projection_radii[i]))
    return BlockMatrix(out)


def base_round(state: BcoState, direction_next: BlockMatrix, feedback: float):
    """One full update: estimate, step, advance the counter, re-perturb.

    feedback is the scalar observed at the currently played point. The
    gradient uses the radii the point was played under; the fresh played
    point uses the post-increment radii. Returns (new_state, played point).
    """
    sched = state.schedule
    radii = sched.radius(state.tau)
    grad = one_point_gradient(feedback, state.direction, radii, sched.d_M)
    center = omd_step(state.center, grad, sched.eta, radii, sched.projection_radii)
    tau = state.tau + 1
    new_state = BcoState(schedule=sched, center=center, direction=direction_next, tau=tau)
    return new_state, new_state.played
