"""Reduction from bandit optimization with memory to a memoryless base.

The adversary's loss at round t depends on the last H plays. The wrapper
keeps the play frozen except at sparsely randomized update rounds: each round
draws a Bernoulli(1/H) coin and an update fires only when the current coin is
1 and the previous H-1 coins were all 0, which structurally spaces updates at
least H apart. At a fire round the window of consumed plays is constant and
was fixed before the round's loss was drawn, so the scalar feedback is a
legitimate one-point observation for the base optimizer.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, ParameterError


class UpdateSchedule:
    """Coin-gated update times at target rate 1/H_eff.

    step(rng) advances one round and reports whether an update fires. Coins
    are drawn every round, fired or not, so the trace of coins is a plain
    iid sequence.
    """

    def __init__(self, H_eff: int):
        if H_eff < 1:
            raise ParameterError(f"effective memory must be >= 1, got {H_eff}")
        self.H_eff = H_eff
        self.p = 1.0 / H_eff
        self.t = 0
        self._recent = deque(maxlen=max(H_eff - 1, 1))

    def step(self, rng: np.random.Generator) -> bool:
        self.t += 1
        coin = bool(rng.random() < self.p)
        blocked = self.t < self.H_eff or (self.H_eff > 1 and any(self._recent))
        fire = coin and not blocked and len(self._recent) >= self.H_eff - 1
        self._recent.append(coin)
        return fire


def effective_memory(H: int) -> int:
    """Window length the controller's gate must respect: 2 (H + 1)."""
    if H < 1:
        raise ParameterError(f"policy memory must be >= 1, got {H}")
    return 2 * (H + 1)


@dataclass
class ReductionTrace:
    """Recorded run of the wrapper.

    plays[r] is the point in force at round r+1 (flattened); fire_times are
    1-based rounds where the base updated; fix_times[r] is the round from
    which plays[r] has been in force.
    """

    plays: np.ndarray
    fire_times: list
    fix_times: np.ndarray
    feedbacks: list
    T: int
    H_eff: int


def run_reduction(base, loss_oracle, T: int, H_eff: int, rng: np.random.Generator) -> ReductionTrace:
    """Drive a memoryless base optimizer against a loss with memory H_eff.

    base must expose start(rng) -> point and update(feedback, rng) -> point,
    points being 1-d float arrays. loss_oracle(t, window) -> float receives
    the H_eff plays consumed at round t, oldest first.
    """
    if T < 1:
        raise ParameterError(f"T must be >= 1, got {T}")
    sched = UpdateSchedule(H_eff)
    point = np.asarray(base.start(rng), dtype=float)
    plays = np.empty((T, point.size))
    fix_times = np.empty(T, dtype=int)
    fire_times: list[int] = []
    feedbacks: list[float] = []
    fixed_at = 1
    for r in range(T):
        t = r + 1
        plays[r] = point
        fix_times[r] = fixed_at
        if sched.step(rng):
            window = plays[max(0, t - H_eff) : t]
            if window.shape[0] < H_eff:
                raise InputError("gate fired before a full window existed")
            # The plays in the window were fixed before it began.
            assert fixed_at <= t + 1 - H_eff, (fixed_at, t, H_eff)
            fb = float(loss_oracle(t, window))
            feedbacks.append(fb)
            point = np.asarray(base.update(fb, rng), dtype=float)
            fire_times.append(t)
            fixed_at = t + 1
    return ReductionTrace(
        plays=plays,
        fire_times=fire_times,
        fix_times=fix_times,
        feedbacks=feedbacks,
        T=T,
        H_eff=H_eff,
    )


def schedule_stats(fire_times, T: int, H_eff: int):
    """(update count, mean gap, min gap) over consecutive fire times.

    Gaps are measured between consecutive updates; with fewer than two
    updates both gap statistics are None.
    """
    S = sorted(int(t) for t in fire_times)
    if any(t < 1 or t > T for t in S):
        raise InputError("fire times must lie in 1..T")
    count = len(S)
    if count < 2:
        return count, None, None
    gaps = np.diff(S)
    if np.min(gaps) < H_eff:
        raise InputError(f"fire times violate the minimum spacing {H_eff}")
    return count, float(np.mean(gaps)), int(np.min(gaps))


def stationary_fire_rate(H_eff: int) -> float:
    """Per-round update probability in steady state: (1/H)(1 - 1/H)^(H-1)."""
    if H_eff < 1:
        raise ParameterError(f"effective memory must be >= 1, got {H_eff}")
    return (1.0 / H_eff) * (1.0 - 1.0 / H_eff) ** (H_eff - 1)


def policy_regret(traces, loss_oracle, comparator, feasible=None) -> float:
    """Mean realized regret against a fixed comparator point.

    Sums loss_oracle(t, window) - loss_oracle(t, comparator window) over all
    rounds t >= H_eff with a full window, averaged over the given traces.
    """
    if not isinstance(traces, (list, tuple)):
        traces = [traces]
    if not traces:
        raise InputError("need at least one trace")
    comparator = np.asarray(comparator, dtype=float)
    if feasible is not None and not feasible(comparator):
        raise InputError("comparator lies outside the feasible set")
    totals = []
    for trace in traces:
        H = trace.H_eff
        if trace.T < H:
            raise InputError(f"trace of length {trace.T} is shorter than the window {H}")
        comp_window = np.tile(comparator, (H, 1))
        total = 0.0
        for t in range(H, trace.T + 1):
            window = trace.plays[t - H : t]
            total += float(loss_oracle(t, window)) - float(loss_oracle(t, comp_window))
        totals.append(total)
    return float(np.mean(totals))


def drift_sums(plays: np.ndarray, H_eff: int):
    """Realized window dispersion sum_{t>=H} sum_{i=2..H} ||x_{t+i-H} - x_{t+1-H}||.

    plays has one row per round. This is the quantity the reduction's regret
    accounting charges to update motion. Equivalent pair form: over window
    starts a = 1..T-H+1 and offsets j = 1..H-1, sum ||p_{a+j} - p_a||.
    """
    plays = np.asarray(plays, dtype=float)
    T = plays.shape[0]
    if T < H_eff or H_eff < 2:
        return 0.0
    L = T - H_eff + 1
    total = 0.0
    for j in range(1, H_eff):
        total += float(np.sum(np.linalg.norm(plays[j : j + L] - plays[:L], axis=1)))
    return total


def drift_budget(schedule, T: int, H_eff: int) -> float:
    """Scheduled bound on drift_sums: (H^2 / 2) sum_tau (delta_tau + 2 rho_tau).

    The sum runs over tau = 1 .. floor(T / H_eff), the most updates the gate
    can fire.
    """
    n_updates = T // H_eff
    total = 0.0
    for tau in range(1, n_updates + 1):
        total += schedule.delta(tau) + 2.0 * schedule.rho(tau)
    return 0.5 * H_eff**2 * total
