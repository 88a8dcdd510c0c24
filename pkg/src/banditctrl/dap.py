"""Disturbance-action policies and their stationary-trajectory surrogate.

A policy M is a block stack (H, k, d) acting on the last H disturbances on
top of a stabilizing baseline K:

    u_t = -K x_t + sum_{i=1..H} M^{[i]} w_{t-i},   w_j = 0 for j <= 0.

The feasible class bounds block i by r0_i = 2 kappa_B kappa^3 (1-gamma)^i in
spectral norm; exploration plays points in the doubled class.

The surrogate (ideal) trajectory replays the last H policies on a plant
started from the zero state H steps back, which makes the per-round loss a
function of finitely many recent policies and disturbances. Coefficients come
from the truncated unroll of the closed loop

    y_t = sum_{i=0..2H} Psi_i w_{t-1-i},
    Psi_i = Atil^i 1{i<=H}
          + sum_{j=0..H-1} Atil^j B M_(t-1-j)^{[i-j]} 1{1 <= i-j <= H},

where Atil = A - B K and M_(s) is the policy in force at round s. The j = 0
term carries the most recent policy's direct effect, so y_t tracks the real
state up to geometrically small truncation error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .costs import CostOracle
from .errors import InputError, ParameterError
from .numerics import BlockMatrix, project_spectral_ball
from .plant import LinearPlant, NoiseProcess, sample_noise
from .stability import StabilityCertificate, closed_loop


@dataclass(frozen=True, eq=False)
class ControlConstants:
    """Everything the schedules and audits need, derived once per run."""

    kappa: float
    gamma: float
    kappa_B: float
    W: float
    sigma: float
    T: int
    d: int
    k: int
    H: int
    D_xu: float
    C: float
    G: float
    alpha: float
    beta: float
    L_f: float
    beta_f: float
    alpha_f: float
    d_M: int
    n: int
    D_sq: float
    C_hat: float
    r0: np.ndarray

    def feasible_radii(self) -> np.ndarray:
        return self.r0.copy()


def horizon_and_radius(kappa: float, gamma: float, kappa_B: float, W: float, T: int):
    """Memory length H and the state/action envelope D_xu.

    H = ceil(log(2 kappa^3 T) / gamma), natural log;
    D_xu = 8 kappa_B kappa^3 W (H kappa_B + 1) / gamma.
    """
    if T < 3:
        raise ParameterError(f"horizon T={T} is too short for a meaningful memory length")
    if not 0 < gamma <= 1:
        raise ParameterError(f"gamma must lie in (0, 1], got {gamma}")
    if kappa < 1 or kappa_B < 1:
        raise ParameterError("kappa and kappa_B are normalized to be >= 1")
    if W <= 0:
        raise ParameterError(f"W must be positive, got {W}")
    H = int(math.ceil(math.log(2.0 * kappa**3 * T) / gamma))
    D_xu = 8.0 * kappa_B * kappa**3 * W * (H * kappa_B + 1.0) / gamma
    return H, D_xu


def block_radii(kappa: float, gamma: float, kappa_B: float, H: int) -> np.ndarray:
    """Spectral-norm bounds r0_i = 2 kappa_B kappa^3 (1-gamma)^i, i = 1..H."""
    i = np.arange(1, H + 1, dtype=float)
    return 2.0 * kappa_B * kappa**3 * (1.0 - gamma) ** i


def compute_constants(
    cert: StabilityCertificate,
    kappa_B: float,
    W: float,
    sigma: float,
    oracle: CostOracle,
    T: int,
    d: int,
    k: int,
) -> ControlConstants:
    """Derive the full constant bundle for one run.

    sigma is the disturbance covariance floor (0 for adversarial noise, which
    zeroes the surrogate strong-convexity modulus alpha_f). Cost scale
    constants are registered on the ball of radius D_xu. Pure function of its
    inputs; recomputing returns identical values.
    """
    H, D_xu = horizon_and_radius(cert.kappa, cert.gamma, kappa_B, W, T)
    cc = oracle.constants(D_xu)
    kap, gam = cert.kappa, cert.gamma
    L_f = 2.0 * kappa_B * kap**3 * cc.G * D_xu * W / gam
    beta_f = 25.0 * cc.beta * kappa_B**2 * kap**6 * W**2 * H / gam**2
    alpha_f = cc.alpha * sigma**2 * gam**2 / (36.0 * kap**10)
    n = min(d, k)
    return ControlConstants(
        kappa=kap,
        gamma=gam,
        kappa_B=kappa_B,
        W=W,
        sigma=sigma,
        T=T,
        d=d,
        k=k,
        H=H,
        D_xu=D_xu,
        C=cc.C,
        G=cc.G,
        alpha=cc.alpha,
        beta=cc.beta,
        L_f=L_f,
        beta_f=beta_f,
        alpha_f=alpha_f,
        d_M=d * k * H,
        n=n,
        D_sq=4.0 * n**2 * kappa_B**2 * kap**6 / gam,
        C_hat=cc.C * D_xu**2,
        r0=block_radii(kap, gam, kappa_B, H),
    )


def dap_action(M: BlockMatrix, K0: np.ndarray, x: np.ndarray, w_hist: np.ndarray) -> np.ndarray:
    """u = -K0 x + sum_i M^{[i]} w_hist[i-1], w_hist most-recent-first (H, d)."""
    w_hist = np.asarray(w_hist, dtype=float)
    if w_hist.shape != (M.H, M.d):
        raise InputError(f"w_hist shape {w_hist.shape}, expected ({M.H}, {M.d})")
    return -(K0 @ np.asarray(x, dtype=float)) + np.einsum("hkd,hd->k", M.blocks, w_hist)


def project_M(M: BlockMatrix, radii: np.ndarray) -> BlockMatrix:
    """Blockwise spectral projection onto the feasible class given by radii."""
    radii = np.asarray(radii, dtype=float)
    if radii.shape != (M.H,):
        raise InputError(f"need {M.H} radii, got shape {radii.shape}")
    out = np.empty_like(M.blocks)
    for i in range(M.H):
        out[i] = project_spectral_ball(M.blocks[i], float(radii[i]))
    return BlockMatrix(out)


def in_class(M: BlockMatrix, radii: np.ndarray, slack: float = 1e-9) -> bool:
    norms = M.block_spectral_norms()
    return bool(np.all(norms <= np.asarray(radii) * (1.0 + slack) + slack))


def psi(plant: LinearPlant, K: np.ndarray, M_seq: list[BlockMatrix], i: int) -> np.ndarray:
    """Coefficient Psi_i of w_{t-1-i} in the surrogate state, shape (d, d).

    M_seq holds the H policies before the current round, oldest first:
    M_seq[s] was in force at round t - H + s.
    """
    H = len(M_seq)
    if not 0 <= i <= 2 * H:
        raise InputError(f"delay index i={i} outside 0..{2 * H}")
    Atil = closed_loop(plant, K)
    d = plant.d
    out = np.zeros((d, d))
    Apow = np.eye(d)
    for j in range(H + 1):
        # Apow is Atil^j here.
        if j == i:
            out += Apow
        ell = i - j
        if 1 <= ell <= H and j <= H - 1:
            out += Apow @ plant.B @ M_seq[H - 1 - j].blocks[ell - 1]
        Apow = Apow @ Atil
    return out


def psi_stack(plant: LinearPlant, K: np.ndarray, M_seq: list[BlockMatrix]) -> np.ndarray:
    """All coefficients at once, shape (2H+1, d, d); row i is psi(..., i)."""
    H = len(M_seq)
    if H < 1:
        raise InputError("need at least one policy in M_seq")
    d, k = plant.d, plant.k
    for M in M_seq:
        if (M.H, M.k, M.d) != (H, k, d):
            raise InputError("policy stack shapes disagree with the plant")
    Atil = closed_loop(plant, K)
    out = np.zeros((2 * H + 1, d, d))
    Apow = np.eye(d)
    for j in range(H + 1):
        out[j] += Apow
        if j <= H - 1:
            AjB = Apow @ plant.B
            blocks = M_seq[H - 1 - j].blocks
            for ell in range(1, H + 1):
                out[j + ell] += AjB @ blocks[ell - 1]
        Apow = Apow @ Atil
    return out


def ideal_state_action(
    plant: LinearPlant,
    K: np.ndarray,
    M_seq: list[BlockMatrix],
    w_window: np.ndarray,
):
    """Surrogate state and action for one round.

    M_seq holds H+1 policies oldest first; M_seq[-1] is the current round's.
    w_window is (2H+1, d) most-recent-first: w_window[i] = w_{t-1-i}.
    Returns (y, v) with v = -K y + sum_i M_seq[-1]^{[i]} w_{t-i}.
    """
    if len(M_seq) < 2:
        raise InputError("M_seq must hold H+1 >= 2 policies")
    H = len(M_seq) - 1
    w_window = np.asarray(w_window, dtype=float)
    if w_window.shape != (2 * H + 1, plant.d):
        raise InputError(f"w_window shape {w_window.shape}, expected ({2 * H + 1}, {plant.d})")
    coeffs = psi_stack(plant, K, M_seq[:H])
    y = np.einsum("ide,ie->d", coeffs, w_window)
    v = -(K @ y) + np.einsum("hkd,hd->k", M_seq[H].blocks, w_window[:H])
    return y, v


def surrogate_cost(
    oracle: CostOracle,
    t: int,
    plant: LinearPlant,
    K: np.ndarray,
    M_seq: list[BlockMatrix],
    w_window: np.ndarray,
) -> float:
    """Per-round loss evaluated on the surrogate trajectory."""
    y, v = ideal_state_action(plant, K, M_seq, w_window)
    return oracle.value(t, y, v)


def expected_surrogate(
    oracle: CostOracle,
    t: int,
    plant: LinearPlant,
    K: np.ndarray,
    M_seq: list[BlockMatrix],
    noise_law: NoiseProcess,
    n_mc: int,
    rng: np.random.Generator,
):
    """Monte Carlo estimate of the disturbance-averaged surrogate loss.

    Only stochastic noise laws have a meaningful average. Returns
    (mean, standard_error).
    """
    if n_mc < 2:
        raise ParameterError(f"n_mc must be >= 2, got {n_mc}")
    if noise_law.sigma_floor(plant.d) <= 0 and noise_law.kind not in (
        "truncated_gaussian",
        "scaled_rademacher",
    ):
        raise ParameterError(f"noise kind {noise_law.kind!r} has no sampling law to average over")
    H = len(M_seq) - 1
    rows = 2 * H + 1
    draws = sample_noise(noise_law, n_mc * rows, plant.d, rng).reshape(n_mc, rows, plant.d)
    vals = np.empty(n_mc)
    coeffs = psi_stack(plant, K, M_seq[:H])
    Mcur = M_seq[H].blocks
    for m in range(n_mc):
        w = draws[m]
        y = np.einsum("ide,ie->d", coeffs, w)
        v = -(K @ y) + np.einsum("hkd,hd->k", Mcur, w[:H])
        vals[m] = oracle.value(t, y, v)
    mean = float(np.mean(vals))
    se = float(np.std(vals, ddof=1) / math.sqrt(n_mc))
    return mean, se
