"""Coin-gated reduction from losses with memory to the memoryless base."""

import numpy as np
import pytest

import banditctrl as bc

from helpers import synthetic_constants


class ScriptedRng:
    """Feeds a fixed coin script into the gate; 0.0 lands heads."""

    def __init__(self, coins):
        self.vals = [0.0 if c else 0.999999 for c in coins]
        self.i = 0

    def random(self):
        v = self.vals[self.i]
        self.i += 1
        return v


class RecordingRng:
    """Real generator that remembers every uniform it hands out."""

    def __init__(self, seed):
        self.rng = np.random.default_rng(seed)
        self.draws = []

    def random(self):
        v = float(self.rng.random())
        self.draws.append(v)
        return v


class FrozenBase:
    """Base optimizer that never moves."""

    def __init__(self, point):
        self.point = np.asarray(point, dtype=float)
        self.updates = 0

    def start(self, rng):
        return self.point

    def update(self, feedback, rng):
        self.updates += 1
        return self.point


class WalkingBase:
    """Base optimizer that shifts deterministically at each update."""

    def __init__(self, dim):
        self.point = np.zeros(dim)

    def start(self, rng):
        return self.point.copy()

    def update(self, feedback, rng):
        self.point = self.point + 1.0
        return self.point.copy()


class SchedBase:
    """Adapter driving the real one-point optimizer under the gate."""

    def __init__(self, schedule):
        self.schedule = schedule
        self.state = None

    def _direction(self, rng):
        H = self.schedule.r0.size
        return bc.sample_unit_sphere(rng, H, 1, 1)

    def start(self, rng):
        self.state = bc.init_state(self.schedule, self._direction(rng))
        return self.state.played.flatten()

    def update(self, feedback, rng):
        self.state, played = bc.base_round(self.state, self._direction(rng),
                                           feedback)
        return played.flatten()


# ---------------------------------------------------------------------------
# gate mechanics


def test_unit_memory_fires_every_round():
    sched = bc.UpdateSchedule(1)
    rng = np.random.default_rng(0)
    assert all(sched.step(rng) for _ in range(100))


def test_scripted_coins_follow_the_blocking_rule():
    sched = bc.UpdateSchedule(3)
    rng = ScriptedRng([0, 0, 1, 1, 0, 0, 1])
    fired = [t for t in range(1, 8) if sched.step(rng)]
    # t=3 fires; t=4's head is blocked by t=3's; t=7 is clear again.
    assert fired == [3, 7]


def test_gate_matches_structural_rule():
    for H_eff in (2, 3, 5):
        sched = bc.UpdateSchedule(H_eff)
        rng = RecordingRng(seed=H_eff)
        fired = [sched.step(rng) for _ in range(2000)]
        coins = [v < 1.0 / H_eff for v in rng.draws]
        for t in range(1, 2001):
            want = (coins[t - 1] and t >= H_eff
                    and not any(coins[t - H_eff : t - 1]))
            assert fired[t - 1] == want


def test_gate_rejects_bad_memory():
    with pytest.raises(bc.ParameterError):
        bc.UpdateSchedule(0)


def test_effective_memory_formula():
    assert bc.effective_memory(1) == 4
    assert bc.effective_memory(16) == 34
    with pytest.raises(bc.ParameterError):
        bc.effective_memory(0)


def test_stationary_fire_rate_formula_and_empirics():
    assert bc.stationary_fire_rate(1) == 1.0
    assert bc.stationary_fire_rate(2) == 0.25
    assert bc.stationary_fire_rate(4) == pytest.approx(
        0.25 * 0.75**3, abs=1e-15)
    with pytest.raises(bc.ParameterError):
        bc.stationary_fire_rate(0)
    sched = bc.UpdateSchedule(2)
    rng = np.random.default_rng(2)
    rate = sum(sched.step(rng) for _ in range(400_000)) / 400_000
    assert abs(rate - 0.25) <= 0.01


def test_renewal_gap_mean_matches_kac_formula():
    # The gate is a renewal process; the mean recurrence time of the fire
    # pattern at H = 4 is 4 / (3/4)^3 = 256 / 27.
    sched = bc.UpdateSchedule(4)
    rng = np.random.default_rng(4)
    fires = [t for t in range(1, 100_001) if sched.step(rng)]
    gaps = np.diff(fires)
    want = 256.0 / 27.0
    se = gaps.std(ddof=1) / np.sqrt(len(gaps))
    assert abs(gaps.mean() - want) <= 3 * se
    assert gaps.mean() <= 12.0
    assert gaps.min() == 4


# ---------------------------------------------------------------------------
# running the reduction


def _window_loss(t, window):
    return float(np.sum(window[-1] ** 2))


def test_reduction_with_frozen_base_plays_constant():
    base = FrozenBase([0.5, -0.25])
    trace = bc.run_reduction(base, _window_loss, 10_000, 4,
                             np.random.default_rng(7))
    assert np.all(trace.plays == np.array([0.5, -0.25]))
    assert base.updates == len(trace.fire_times)
    assert len(trace.fire_times) <= 10_000 // 4
    count, mean_gap, min_gap = bc.schedule_stats(trace.fire_times, 10_000, 4)
    assert count == len(trace.fire_times)
    assert min_gap >= 4


def test_reduction_spacing_and_fix_times():
    for seed in (0, 1, 2):
        trace = bc.run_reduction(WalkingBase(2), _window_loss, 10_000, 5,
                                 np.random.default_rng(seed))
        fires = trace.fire_times
        assert fires[0] >= 5
        assert np.all(np.diff(fires) >= 5)
        for t in fires:
            assert trace.fix_times[t - 1] <= t + 1 - 5
        # Plays are frozen strictly between updates.
        bounds = [0] + list(fires) + [10_000]
        for lo, hi in zip(bounds[:-1], bounds[1:]):
            seg = trace.plays[lo:hi]
            assert np.all(seg == seg[0])


def test_reduction_hands_the_oracle_the_live_window():
    seen = []

    def spy(t, window):
        seen.append((t, window.copy()))
        return 0.0

    trace = bc.run_reduction(WalkingBase(1), spy, 3000, 4,
                             np.random.default_rng(11))
    assert [t for t, _ in seen] == trace.fire_times
    for t, window in seen:
        assert window.shape == (4, 1)
        assert np.array_equal(window, trace.plays[t - 4 : t])


def test_reduction_rejects_short_horizons():
    with pytest.raises(bc.ParameterError):
        bc.run_reduction(FrozenBase([0.0]), _window_loss, 0, 2,
                         np.random.default_rng(0))


# ---------------------------------------------------------------------------
# statistics over fire times


def test_schedule_stats_frozen_example():
    assert bc.schedule_stats([3, 6, 9], 12, 3) == (3, 3.0, 3)


def test_schedule_stats_degenerate_counts():
    assert bc.schedule_stats([], 10, 2) == (0, None, None)
    assert bc.schedule_stats([4], 10, 2) == (1, None, None)


def test_schedule_stats_validates():
    with pytest.raises(bc.InputError):
        bc.schedule_stats([2, 3], 10, 2)
    with pytest.raises(bc.InputError):
        bc.schedule_stats([0, 4], 10, 2)
    with pytest.raises(bc.InputError):
        bc.schedule_stats([4, 20], 10, 2)


# ---------------------------------------------------------------------------
# regret accounting


def test_policy_regret_is_zero_at_the_comparator():
    trace = bc.run_reduction(FrozenBase([0.7]), _window_loss, 500, 3,
                             np.random.default_rng(13))
    assert bc.policy_regret(trace, _window_loss, np.array([0.7])) == 0.0


def test_policy_regret_frozen_example():
    trace = bc.ReductionTrace(plays=np.ones((12, 1)), fire_times=[],
                              fix_times=np.ones(12, dtype=int), feedbacks=[],
                              T=12, H_eff=3)
    # Rounds 3..12 each pay 1 against a comparator paying 0.
    reg = bc.policy_regret(trace, _window_loss, np.array([0.0]))
    assert reg == 10.0


def test_policy_regret_matches_double_loop_oracle():
    rng = np.random.default_rng(17)
    plays = rng.uniform(-1, 1, size=(40, 2))
    trace = bc.ReductionTrace(plays=plays, fire_times=[],
                              fix_times=np.ones(40, dtype=int), feedbacks=[],
                              T=40, H_eff=4)

    def loss(t, window):
        return float(np.sum(window**2)) + 0.1 * t

    comp = np.array([0.2, -0.1])
    want = 0.0
    for t in range(4, 41):
        want += loss(t, plays[t - 4 : t]) - loss(t, np.tile(comp, (4, 1)))
    got = bc.policy_regret(trace, loss, comp)
    assert got == pytest.approx(want, rel=1e-12)
    both = bc.policy_regret([trace, trace], loss, comp)
    assert both == pytest.approx(want, rel=1e-12)


def test_policy_regret_validates():
    trace = bc.ReductionTrace(plays=np.ones((12, 1)), fire_times=[],
                              fix_times=np.ones(12, dtype=int), feedbacks=[],
                              T=12, H_eff=3)
    with pytest.raises(bc.InputError):
        bc.policy_regret(trace, _window_loss, np.array([5.0]),
                         feasible=lambda c: bool(np.all(np.abs(c) <= 1.0)))
    short = bc.ReductionTrace(plays=np.ones((2, 1)), fire_times=[],
                              fix_times=np.ones(2, dtype=int), feedbacks=[],
                              T=2, H_eff=3)
    with pytest.raises(bc.InputError):
        bc.policy_regret(short, _window_loss, np.array([0.0]))
    with pytest.raises(bc.InputError):
        bc.policy_regret([], _window_loss, np.array([0.0]))


# ---------------------------------------------------------------------------
# drift accounting


def test_drift_sums_matches_naive_pair_oracle():
    rng = np.random.default_rng(19)
    plays = rng.uniform(-1, 1, size=(40, 3))
    H_eff = 4
    want = 0.0
    for a in range(40 - H_eff + 1):
        for j in range(1, H_eff):
            want += float(np.linalg.norm(plays[a + j] - plays[a]))
    assert bc.drift_sums(plays, H_eff) == pytest.approx(want, rel=1e-12)
    assert bc.drift_sums(plays[:3], H_eff) == 0.0
    assert bc.drift_sums(plays, 1) == 0.0


def test_drift_budget_dominates_realized_drift():
    for mode in ("theorem", "tuned"):
        cc = synthetic_constants(T=2000, H=2, r0=np.array([1.0, 0.5]))
        sched = bc.make_schedule("strongly_convex_smooth", cc, mode=mode,
                                 eta_scale=0.5)
        H_eff = bc.effective_memory(cc.H)

        def loss(t, window):
            return min(float(np.sum(window[-1] ** 2)), cc.C_hat)

        trace = bc.run_reduction(SchedBase(sched), loss, 2000, H_eff,
                                 np.random.default_rng(3))
        assert len(trace.fire_times) > 50
        realized = bc.drift_sums(trace.plays, H_eff)
        budget = bc.drift_budget(sched, 2000, H_eff)
        assert realized <= budget * (1 + 1e-9)
