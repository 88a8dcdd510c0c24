"""Adversarial cost sequences and the bandit feedback channel.

Cost families share one shape: a per-round loss c_t(x, u) built around
drifting targets (x*_t, u*_t) that follow a bounded seeded random walk fixed
before the run starts, so the sequence is oblivious to the player.

    quadratic          (x - x*_t)^T Qx (x - x*_t) + (u - u*_t)^T Qu (u - u*_t)
    smooth_convex      same form with possibly singular Qx, Qu (zero curvature floor)
    nonsmooth          a ||x - x*_t|| + b ||u - u*_t||

Each oracle registers scale constants against a query radius D:
    |c| <= C D^2 and ||grad c|| <= G D whenever ||x||, ||u|| <= D,
plus a strong convexity modulus alpha and smoothness beta of the (x, u)
Hessian (beta is inf for the nonsmooth family).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import FeedbackContractError, InputError, ParameterError

COST_FAMILIES = ("quadratic", "smooth_convex", "nonsmooth")


@dataclass(frozen=True)
class CostConstants:
    """Scale constants valid on the ball ||x||, ||u|| <= D."""

    C: float
    G: float
    alpha: float
    beta: float
    D: float


@dataclass(frozen=True)
class BanditFeedback:
    value: float
    epsilon: float


def make_targets(T: int, dim: int, radius: float, step: float, seed: int) -> np.ndarray:
    """Bounded random walk of target points, shape (T, dim), ||row|| <= radius.

    radius = 0 pins the targets at the origin.
    """
    if radius < 0 or step < 0:
        raise ParameterError("target radius and step must be nonnegative")
    if radius == 0 or step == 0:
        return np.zeros((T, dim))
    rng = np.random.default_rng(seed)
    out = np.zeros((T, dim))
    pos = rng.normal(0.0, radius / 2, size=dim)
    pos = _clip_norm(pos, radius)
    for t in range(T):
        out[t] = pos
        pos = _clip_norm(pos + rng.normal(0.0, step, size=dim), radius)
    return out


def _clip_norm(v: np.ndarray, radius: float) -> np.ndarray:
    n = np.linalg.norm(v)
    if n > radius:
        return v * (radius / n)
    return v


class CostOracle:
    """Base class; subclasses implement the family-specific pieces.

    x_targets, u_targets have shapes (T, d) and (T, k); round t uses row t-1.
    """

    family: str

    def __init__(self, d: int, k: int, x_targets: np.ndarray, u_targets: np.ndarray):
        self.d = d
        self.k = k
        self.x_targets = np.asarray(x_targets, dtype=float)
        self.u_targets = np.asarray(u_targets, dtype=float)
        if self.x_targets.ndim != 2 or self.x_targets.shape[1] != d:
            raise InputError(f"x_targets shape {self.x_targets.shape} vs d={d}")
        if self.u_targets.ndim != 2 or self.u_targets.shape[1] != k:
            raise InputError(f"u_targets shape {self.u_targets.shape} vs k={k}")
        if self.x_targets.shape[0] != self.u_targets.shape[0]:
            raise InputError("x and u target tables must cover the same horizon")
        self.T = self.x_targets.shape[0]

    def _targets(self, t: int):
        if not 1 <= t <= self.T:
            raise InputError(f"round t={t} outside 1..{self.T}")
        return self.x_targets[t - 1], self.u_targets[t - 1]

    def target_radii(self):
        rx = float(np.max(np.linalg.norm(self.x_targets, axis=1), initial=0.0))
        ru = float(np.max(np.linalg.norm(self.u_targets, axis=1), initial=0.0))
        return rx, ru

    def value(self, t: int, x: np.ndarray, u: np.ndarray) -> float:
        raise NotImplementedError

    def gradient(self, t: int, x: np.ndarray, u: np.ndarray):
        raise NotImplementedError

    def value_batch(self, X: np.ndarray, U: np.ndarray) -> np.ndarray:
        """Losses for a whole run at once: X (T, d), U (T, k) -> (T,).

        Row r is scored against round r+1 targets. Extra leading axes are
        broadcast, so (B, T, d) inputs score B candidate runs in one call.
        """
        raise NotImplementedError

    def constants(self, D: float) -> CostConstants:
        raise NotImplementedError


class QuadraticCost(CostOracle):
    """Strongly convex quadratic around drifting targets."""

    family = "quadratic"

    def __init__(self, Qx: np.ndarray, Qu: np.ndarray, x_targets, u_targets):
        Qx = np.atleast_2d(np.asarray(Qx, dtype=float))
        Qu = np.atleast_2d(np.asarray(Qu, dtype=float))
        super().__init__(Qx.shape[0], Qu.shape[0], x_targets, u_targets)
        for name, Q in (("Qx", Qx), ("Qu", Qu)):
            if not np.allclose(Q, Q.T, atol=1e-12):
                raise InputError(f"{name} must be symmetric")
            if np.min(np.linalg.eigvalsh(Q)) < -1e-12:
                raise InputError(f"{name} must be positive semidefinite")
        self.Qx = Qx
        self.Qu = Qu
        self._eigs_x = np.linalg.eigvalsh(Qx)
        self._eigs_u = np.linalg.eigvalsh(Qu)

    def value(self, t, x, u):
        xt, ut = self._targets(t)
        dx = np.asarray(x, dtype=float) - xt
        du = np.asarray(u, dtype=float) - ut
        return float(dx @ self.Qx @ dx + du @ self.Qu @ du)

    def gradient(self, t, x, u):
        xt, ut = self._targets(t)
        dx = np.asarray(x, dtype=float) - xt
        du = np.asarray(u, dtype=float) - ut
        return 2.0 * (self.Qx @ dx), 2.0 * (self.Qu @ du)

    def value_batch(self, X, U):
        DX = np.asarray(X, dtype=float) - self.x_targets
        DU = np.asarray(U, dtype=float) - self.u_targets
        return np.einsum("...ti,ij,...tj->...t", DX, self.Qx, DX) + np.einsum(
            "...ti,ij,...tj->...t", DU, self.Qu, DU
        )

    def constants(self, D):
        if D <= 0:
            raise ParameterError(f"query radius D must be positive, got {D}")
        rx, ru = self.target_radii()
        lx, lu = float(self._eigs_x[-1]), float(self._eigs_u[-1])
        C = (lx * (D + rx) ** 2 + lu * (D + ru) ** 2) / D**2
        G = 2.0 * max(lx * (D + rx), lu * (D + ru)) / D
        alpha = 2.0 * min(float(self._eigs_x[0]), float(self._eigs_u[0]))
        beta = 2.0 * max(lx, lu)
        return CostConstants(C=C, G=G, alpha=alpha, beta=beta, D=D)


class SmoothConvexCost(QuadraticCost):
    """Quadratic form with the curvature floor dropped to zero.

    Registered alpha is 0 regardless of the spectra, so schedules must not
    rely on strong convexity for this family.
    """

    family = "smooth_convex"

    def constants(self, D):
        base = super().constants(D)
        return CostConstants(C=base.C, G=base.G, alpha=0.0, beta=base.beta, D=D)


class NonsmoothCost(CostOracle):
    """Norm cost a ||x - x*_t|| + b ||u - u*_t||; Lipschitz, not smooth."""

    family = "nonsmooth"

    def __init__(self, a: float, b: float, x_targets, u_targets, d: int, k: int):
        if a < 0 or b < 0 or (a == 0 and b == 0):
            raise ParameterError("nonsmooth cost needs a, b >= 0, not both zero")
        super().__init__(d, k, x_targets, u_targets)
        self.a = float(a)
        self.b = float(b)

    def value(self, t, x, u):
        xt, ut = self._targets(t)
        return float(
            self.a * np.linalg.norm(np.asarray(x, dtype=float) - xt)
            + self.b * np.linalg.norm(np.asarray(u, dtype=float) - ut)
        )

    def gradient(self, t, x, u):
        # Subgradient; 0 is chosen at a kink.
        xt, ut = self._targets(t)
        dx = np.asarray(x, dtype=float) - xt
        du = np.asarray(u, dtype=float) - ut
        nx, nu = np.linalg.norm(dx), np.linalg.norm(du)
        gx = self.a * dx / nx if nx > 0 else np.zeros(self.d)
        gu = self.b * du / nu if nu > 0 else np.zeros(self.k)
        return gx, gu

    def value_batch(self, X, U):
        DX = np.asarray(X, dtype=float) - self.x_targets
        DU = np.asarray(U, dtype=float) - self.u_targets
        return self.a * np.linalg.norm(DX, axis=-1) + self.b * np.linalg.norm(DU, axis=-1)

    def constants(self, D):
        if D <= 0:
            raise ParameterError(f"query radius D must be positive, got {D}")
        rx, ru = self.target_radii()
        C = (self.a * (D + rx) + self.b * (D + ru)) / D**2
        G = max(self.a, self.b) / D
        return CostConstants(C=C, G=G, alpha=0.0, beta=math.inf, D=D)


def make_cost(
    family: str,
    d: int,
    k: int,
    T: int,
    seed: int,
    target_radius: float = 0.0,
    target_step: float = 0.0,
    **params,
) -> CostOracle:
    """Build an oracle with freshly drawn target walks.

    quadratic / smooth_convex accept qx, qu (scalars scaling the identity, or
    full matrices); nonsmooth accepts a, b.
    """
    if family not in COST_FAMILIES:
        raise ParameterError(f"unknown family {family!r}, want one of {COST_FAMILIES}")
    xt = make_targets(T, d, target_radius, target_step, seed)
    ut = make_targets(T, k, target_radius, target_step, seed + 1)
    if family in ("quadratic", "smooth_convex"):
        Qx = _as_psd(params.get("qx", 1.0), d)
        Qu = _as_psd(params.get("qu", 1.0), k)
        cls = QuadraticCost if family == "quadratic" else SmoothConvexCost
        return cls(Qx, Qu, xt, ut)
    return NonsmoothCost(params.get("a", 1.0), params.get("b", 1.0), xt, ut, d, k)


def _as_psd(q, dim: int) -> np.ndarray:
    if np.isscalar(q):
        return float(q) * np.eye(dim)
    return np.atleast_2d(np.asarray(q, dtype=float))


def bandit_observe(
    oracle: CostOracle,
    t: int,
    x: np.ndarray,
    u: np.ndarray,
    epsilon: float = 0.0,
    perturber=None,
) -> BanditFeedback:
    """Scalar cost observation, optionally corrupted within +-epsilon.

    perturber(t, value) -> delta lets tests model a bounded adversary on the
    feedback channel; a delta outside the declared bound is a contract
    violation and raises.
    """
    if epsilon < 0:
        raise ParameterError(f"epsilon must be nonnegative, got {epsilon}")
    value = oracle.value(t, x, u)
    delta = 0.0
    if perturber is not None:
        delta = float(perturber(t, value))
        if abs(delta) > epsilon + 1e-15:
            raise FeedbackContractError(
                f"feedback perturbation {delta} exceeds declared epsilon {epsilon}"
            )
    return BanditFeedback(value=value + delta, epsilon=epsilon)
