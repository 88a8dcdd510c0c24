"""Shared builders and independent oracles for the test suite.

Everything here is deliberately naive: loops instead of einsums, matrix
powers instead of incremental products, generic solvers instead of closed
forms. The point is that these implementations share no code path with the
library, so agreement is evidence.
"""

import numpy as np

import banditctrl as bc


# ---------------------------------------------------------------------------
# independent numerical oracles


def power_iteration_norm(mat, iters=2000, seed=0):
    """Largest singular value via power iteration on M^T M."""
    m = np.asarray(mat, dtype=float)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(m.shape[1])
    v /= np.linalg.norm(v)
    gram = m.T @ m
    lam = 0.0
    for _ in range(iters):
        w = gram @ v
        lam = float(v @ w)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
    return float(np.sqrt(max(lam, 0.0)))


def solver_project_spectral(mat, radius):
    """Projection onto the spectral-norm ball via a generic convex solver.

    The interior-point solver occasionally stalls short of full accuracy on
    instances with a singular value close to the radius and says so through
    its status; those cases re-solve with a first-order solver at tight
    tolerance, which certifies optimality on exactly the instances the
    interior-point method finds degenerate.
    """
    import cvxpy as cp

    m = np.asarray(mat, dtype=float)
    X = cp.Variable(m.shape)
    prob = cp.Problem(
        cp.Minimize(cp.sum_squares(X - m)), [cp.sigma_max(X) <= radius]
    )
    prob.solve(
        solver=cp.CLARABEL, tol_gap_abs=1e-12, tol_gap_rel=1e-12, tol_feas=1e-12
    )
    if prob.status != "optimal":
        prob.solve(solver=cp.SCS, eps=1e-11, max_iters=200_000)
    return np.asarray(X.value)


def naive_psi(plant, K, M_seq, i):
    """State coefficient of w_{t-1-i}, written straight from its definition."""
    H = len(M_seq)
    K = np.atleast_2d(np.asarray(K, dtype=float))
    Atil = plant.A - plant.B @ K
    out = np.zeros((plant.d, plant.d))
    if 0 <= i <= H:
        out += np.linalg.matrix_power(Atil, i)
    for j in range(H):
        ell = i - j
        if 1 <= ell <= H:
            out += (
                np.linalg.matrix_power(Atil, j)
                @ plant.B
                @ M_seq[H - 1 - j].blocks[ell - 1]
            )
    return out


def resimulated_ideal_pair(plant, K, M_seq, w_window):
    """(y, v) via an explicit zero-start simulation of the last H rounds.

    The surrogate is defined as the state a plant reaches when the last H
    policies act on the recorded disturbances from a zero state H steps
    back; this replays that definition literally with plant.step.
    """
    H = len(M_seq) - 1
    K = np.atleast_2d(np.asarray(K, dtype=float))
    w_window = np.asarray(w_window, dtype=float)

    def w(m):
        # w_window[m] = w_{t-1-m}; anything older than the window is zero.
        if 0 <= m <= 2 * H:
            return w_window[m]
        return np.zeros(plant.d)

    x = np.zeros(plant.d)
    # Rounds tau = t-H .. t-1; offset s = tau - (t - H) picks the policy.
    for s in range(H):
        M = M_seq[s]
        hist = np.stack([w(H - 1 - s + i) for i in range(1, H + 1)])
        u = bc.dap_action(M, K, x, hist)
        x = bc.step(plant, x, u, w(H - 1 - s))
    hist = np.stack([w(i - 1) for i in range(1, H + 1)])
    v = bc.dap_action(M_seq[H], K, x, hist)
    return x, v


def pgd_minimize_1d(loss, lo, hi, x0=0.0, step=0.05, iters=4000):
    """Projected gradient descent on a scalar interval, FD gradients."""
    h = 1e-7
    x = float(np.clip(x0, lo, hi))
    for _ in range(iters):
        g = (loss(x + h) - loss(x - h)) / (2 * h)
        x = float(np.clip(x - step * g, lo, hi))
    return x


# ---------------------------------------------------------------------------
# synthetic constant bundles and cells


def synthetic_constants(T=1000, alpha_f=2.0, r0=None, L_f=1.0, beta_f=2.0,
                        C_hat=8.0, H=1, d=1, k=1):
    """Hand-assembled bundle for driving the base optimizer in isolation."""
    if r0 is None:
        r0 = np.ones(H)
    return bc.ControlConstants(
        kappa=1.0, gamma=0.5, kappa_B=1.0, W=1.0, sigma=1.0,
        T=T, d=d, k=k, H=H, D_xu=10.0, C=1.0, G=1.0, alpha=2.0, beta=2.0,
        L_f=L_f, beta_f=beta_f, alpha_f=alpha_f, d_M=d * k * H, n=min(d, k),
        D_sq=4.0, C_hat=C_hat, r0=np.asarray(r0, dtype=float),
    )


def scalar_cell(T, seed=0, qx=1.0, qu=1.0, noise_kind="scaled_rademacher",
                noise_params=None, target_radius=0.5, target_step=0.05,
                regime="strongly_convex_smooth", mode="tuned", eta_scale=0.3,
                curvature=1.0, reg_scale=1.0, projection_inflate=1.0,
                cost_family="quadratic", cost_params=None, W=0.3,
                epsilon=0.0, perturber=None):
    """Fully wired scalar run: a=0.9, b=1, K0=0.6, certified gamma 0.7."""
    plant = bc.LinearPlant(A=[[0.9]], B=[[1.0]], W=W)
    K0 = np.array([[0.6]])
    cert = bc.certify(plant, K0)
    noise = bc.NoiseProcess(kind=noise_kind, W=W,
                            params=dict(noise_params or {}), seed=seed + 1)
    params = dict(cost_params or {})
    if cost_family in ("quadratic", "smooth_convex"):
        params.setdefault("qx", qx)
        params.setdefault("qu", qu)
    oracle = bc.make_cost(cost_family, 1, 1, T, seed=seed + 2,
                          target_radius=target_radius,
                          target_step=target_step, **params)
    constants = bc.compute_constants(cert, 1.0, W, noise.sigma_floor(1),
                                     oracle, T, 1, 1)
    schedule = bc.make_schedule(regime, constants, mode=mode,
                                eta_scale=eta_scale, curvature=curvature,
                                reg_scale=reg_scale,
                                projection_inflate=projection_inflate)
    return bc.ControlRun(plant=plant, noise=noise, oracle=oracle, K0=K0,
                         cert=cert, constants=constants, schedule=schedule,
                         T=T, seed=seed, epsilon=epsilon, perturber=perturber)


def drive_base(schedule, loss, T, seed, target=None):
    """Run the base optimizer alone on a scalar loss.

    loss maps the played scalar to feedback. Returns (final state, mean
    played loss over the run).
    """
    rng = np.random.default_rng(seed)
    state = bc.init_state(schedule, bc.sample_unit_sphere(rng, schedule.r0.size, 1, 1))
    total = 0.0
    for _ in range(T):
        v = float(state.played.blocks[0, 0, 0])
        fb = loss(v)
        total += fb
        state, _ = bc.base_round(
            state, bc.sample_unit_sphere(rng, schedule.r0.size, 1, 1), fb)
    return state, total / T


def random_feasible_policy(rng, radii, k, d, scale=1.0):
    """Random block stack with block i spectral norm <= scale * radii[i]."""
    H = len(radii)
    blocks = rng.standard_normal((H, k, d))
    for i in range(H):
        s = bc.spectral_norm(blocks[i])
        blocks[i] *= scale * radii[i] * rng.uniform(0.3, 1.0) / max(s, 1e-300)
    return bc.BlockMatrix(blocks)


def surrogate_vs_realized_gaps(run, trace):
    """|c_t - f_t| for every round t >= 2H+2 of a finished run."""
    H = run.constants.H
    plays = trace.plays_per_round()
    noise = trace.noise
    k, d = run.plant.k, run.plant.d
    gaps = []
    for t in range(2 * H + 2, run.T + 1):
        M_seq = [bc.BlockMatrix.from_flat(plays[t - H + s - 1], H, k, d)
                 for s in range(H + 1)]
        window = noise[t - 2 - 2 * H : t - 1][::-1]
        f_t = bc.surrogate_cost(run.oracle, t, run.plant, run.K0, M_seq, window)
        gaps.append(abs(trace.costs[t - 1] - f_t))
    return np.asarray(gaps)
