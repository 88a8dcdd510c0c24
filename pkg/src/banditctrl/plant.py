"""Linear plant simulation and disturbance generation.

Dynamics: x_{t+1} = A x_t + B u_t + w_t with the state fully observed and the
run started from x_1 = 0. Rounds are numbered 1..T; internally arrays are
zero-based, so row r of a noise array is the disturbance injected at round
r+1 (it shows up in the state at round r+2).

Disturbances are generated up front for a whole horizon. Every supported
process respects a hard norm bound W per step. Stochastic processes also
carry a guaranteed covariance floor sigma_floor with E[w w^T] >= sigma_floor^2 I,
which downstream curvature constants rely on; purely adversarial processes
report a floor of zero.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import InputError, ParameterError

NOISE_KINDS = ("truncated_gaussian", "scaled_rademacher", "sinusoidal", "file")


@dataclass(frozen=True)
class LinearPlant:
    """Known system matrices plus the disturbance norm bound W."""

    A: np.ndarray
    B: np.ndarray
    W: float

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        if A.shape[0] != A.shape[1]:
            raise InputError(f"A must be square, got {A.shape}")
        if B.shape[0] != A.shape[0]:
            raise InputError(f"B rows {B.shape[0]} must match state dim {A.shape[0]}")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(B))):
            raise InputError("plant matrices contain non-finite entries")
        if self.W <= 0:
            raise ParameterError(f"noise bound W must be positive, got {self.W}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def d(self) -> int:
        return self.A.shape[0]

    @property
    def k(self) -> int:
        return self.B.shape[1]


def step(plant: LinearPlant, x: np.ndarray, u: np.ndarray, w: np.ndarray) -> np.ndarray:
    """One transition x' = A x + B u + w."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    if x.shape != (plant.d,) or u.shape != (plant.k,) or w.shape != (plant.d,):
        raise InputError(
            f"step shapes x{x.shape} u{u.shape} w{w.shape} "
            f"vs d={plant.d} k={plant.k}"
        )
    return plant.A @ x + plant.B @ u + w


@dataclass(frozen=True)
class NoiseProcess:
    """Disturbance generator specification.

    kind: one of NOISE_KINDS.
    W: hard per-step norm bound, must match the plant's W.
    params: kind-specific settings,
        truncated_gaussian: sigma (per-coordinate std before truncation)
        scaled_rademacher: none
        sinusoidal: amplitude, frequency (cycles per round)
        file: path to a CSV with header t,w1,...,wd
    seed: generator seed for the stochastic kinds.
    """

    kind: str
    W: float
    params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ParameterError(f"unknown noise kind {self.kind!r}, want one of {NOISE_KINDS}")
        if self.W <= 0:
            raise ParameterError(f"noise bound W must be positive, got {self.W}")
        if self.kind == "truncated_gaussian":
            sigma = self.params.get("sigma")
            if sigma is None or sigma <= 0:
                raise ParameterError("truncated_gaussian needs sigma > 0")
        if self.kind == "sinusoidal":
            amp = self.params.get("amplitude")
            if amp is None or amp <= 0:
                raise ParameterError("sinusoidal needs amplitude > 0")
            if self.params.get("frequency", 0) <= 0:
                raise ParameterError("sinusoidal needs frequency > 0")
        if self.kind == "file" and "path" not in self.params:
            raise ParameterError("file noise needs a path")

    def sigma_floor(self, d: int) -> float:
        """Guaranteed sqrt of the covariance floor: E[w w^T] >= floor^2 I.

        truncated_gaussian: exact per-coordinate variance after conditioning
        on ||w|| <= W, via the chi-square identity
        E[w_j^2 | ||w||^2 <= W^2] = sigma^2 P(chi2_{d+2} <= W^2/sigma^2) / P(chi2_d <= W^2/sigma^2).
        scaled_rademacher: coordinates are +-W/sqrt(d) exactly.
        Adversarial kinds carry no stochastic floor.
        """
        if self.kind == "truncated_gaussian":
            sigma = float(self.params["sigma"])
            q = (self.W / sigma) ** 2
            denom = stats.chi2.cdf(q, d)
            if denom <= 0:
                return 0.0
            shrink = stats.chi2.cdf(q, d + 2) / denom
            return sigma * float(np.sqrt(shrink))
        if self.kind == "scaled_rademacher":
            return self.W / float(np.sqrt(d))
        return 0.0


def generate_noise(process: NoiseProcess, T: int, d: int) -> np.ndarray:
    """Pregenerate the full disturbance table, shape (T, d), ||row|| <= W."""
    if T < 1:
        raise ParameterError(f"horizon T must be >= 1, got {T}")
    if d < 1:
        raise ParameterError(f"state dimension must be >= 1, got {d}")
    if process.kind in ("truncated_gaussian", "scaled_rademacher"):
        return sample_noise(process, T, d, np.random.default_rng(process.seed))
    if process.kind == "sinusoidal":
        amp = float(process.params["amplitude"])
        freq = float(process.params["frequency"])
        if amp * np.sqrt(d) > process.W + 1e-12:
            raise ParameterError(
                f"sinusoidal amplitude {amp} * sqrt(d) exceeds the bound W={process.W}"
            )
        t = np.arange(1, T + 1)[:, None]
        phase = 2 * np.pi * np.arange(d)[None, :] / d
        return amp * np.sin(2 * np.pi * freq * t + phase)
    if process.kind == "file":
        return _read_noise_csv(process.params["path"], T, d, process.W)
    raise ParameterError(f"unknown noise kind {process.kind!r}")


def sample_noise(process: NoiseProcess, n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """n fresh draws from a stochastic noise law using an external generator.

    Only the stochastic kinds have a sampling law; the deterministic kinds
    (sinusoidal, file) are sequences, not distributions.
    """
    if process.kind == "scaled_rademacher":
        signs = rng.integers(0, 2, size=(n, d)) * 2 - 1
        return signs * (process.W / np.sqrt(d))
    if process.kind != "truncated_gaussian":
        raise ParameterError(f"noise kind {process.kind!r} is not a sampling law")
    sigma = float(process.params["sigma"])
    out = np.empty((n, d))
    need = np.arange(n)
    # Rejection sampling; at sane W/sigma nearly everything is accepted.
    for _ in range(1000):
        draw = rng.normal(0.0, sigma, size=(need.size, d))
        ok = np.linalg.norm(draw, axis=1) <= process.W
        out[need[ok]] = draw[ok]
        need = need[~ok]
        if need.size == 0:
            return out
    raise ParameterError(
        f"truncated_gaussian rejection did not terminate: W={process.W} sigma={sigma}"
    )


def _read_noise_csv(path: str, T: int, d: int, W: float) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        expected = ["t"] + [f"w{j}" for j in range(1, d + 1)]
        if header is None or [h.strip() for h in header] != expected:
            raise InputError(f"noise CSV header {header} does not match {expected}")
        rows = list(reader)
    if len(rows) < T:
        raise InputError(f"noise CSV holds {len(rows)} rows, need {T}")
    out = np.empty((T, d))
    for r, row in enumerate(rows[:T]):
        if int(row[0]) != r + 1:
            raise InputError(f"noise CSV row {r} has t={row[0]}, expected {r + 1}")
        out[r] = [float(v) for v in row[1:]]
    norms = np.linalg.norm(out, axis=1)
    if np.any(norms > W + 1e-9):
        bad = int(np.argmax(norms))
        raise InputError(f"noise CSV row t={bad + 1} violates ||w||={norms[bad]:.3g} <= W={W}")
    return out


def write_noise_csv(path: str, noise: np.ndarray):
    """Companion writer for the file-backed noise format."""
    noise = np.asarray(noise, dtype=float)
    T, d = noise.shape
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t"] + [f"w{j}" for j in range(1, d + 1)])
        for r in range(T):
            writer.writerow([r + 1] + [f"{v:.17g}" for v in noise[r]])


@dataclass(frozen=True)
class Trajectory:
    """Recorded closed-loop run over rounds 1..T.

    states[r] is x_{r+1} (so states[0] = x_1 = 0 and there are T+1 states,
    the last being the post-horizon state), actions[r] = u_{r+1},
    noise[r] = w_{r+1}, costs[r] = c_{r+1}(x_{r+1}, u_{r+1}).
    """

    states: np.ndarray
    actions: np.ndarray
    noise: np.ndarray
    costs: np.ndarray

    @property
    def T(self) -> int:
        return self.actions.shape[0]

    def total_cost(self) -> float:
        return float(np.sum(self.costs))


def rollout_fixed_K(plant: LinearPlant, K: np.ndarray, noise: np.ndarray, cost_fn) -> Trajectory:
    """Simulate u_t = -K x_t from x_1 = 0 under a given disturbance table.

    cost_fn(t, x, u) is evaluated at each round t = 1..T.
    """
    K = np.atleast_2d(np.asarray(K, dtype=float))
    if K.shape != (plant.k, plant.d):
        raise InputError(f"K shape {K.shape}, expected ({plant.k}, {plant.d})")
    noise = np.asarray(noise, dtype=float)
    if noise.ndim != 2 or noise.shape[1] != plant.d:
        raise InputError(f"noise shape {noise.shape} incompatible with d={plant.d}")
    T = noise.shape[0]
    states = np.zeros((T + 1, plant.d))
    actions = np.zeros((T, plant.k))
    costs = np.zeros(T)
    x = np.zeros(plant.d)
    for r in range(T):
        u = -K @ x
        actions[r] = u
        costs[r] = cost_fn(r + 1, x, u)
        x = plant.A @ x + plant.B @ u + noise[r]
        states[r + 1] = x
    return Trajectory(states=states, actions=actions, noise=noise, costs=costs)
