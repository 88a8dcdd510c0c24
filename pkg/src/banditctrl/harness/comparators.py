"""Offline comparators evaluated on recorded disturbance sequences.

The search objective for the fixed-policy comparator is the sum over rounds
of the stationary surrogate cost: each round is scored at the ideal
state/action pair a constant disturbance-feedback policy would produce on
the recorded noise, with disturbances before the start zero-padded. The
minimizer is found by projected descent with finite-difference gradients;
no analytic gradient of the surrogate is used anywhere in the search, so
the result is an independent check on the online learner.
"""

import warnings

import numpy as np

from ..costs import CostOracle
from ..dap import ControlConstants
from ..errors import InputError, UnsupportedSystemError
from ..numerics import BlockMatrix, project_spectral_ball_stack
from ..plant import LinearPlant
from ..stability import closed_loop

_CHUNK = 128  # candidate batch rows per evaluation, caps peak memory


class ConstantPolicyObjective:
    """Batched evaluator of M -> sum_t f_t(M, ..., M) on recorded noise."""

    def __init__(self, plant: LinearPlant, K0: np.ndarray, H: int,
                 noise: np.ndarray, oracle: CostOracle):
        noise = np.asarray(noise, dtype=float)
        if noise.ndim != 2 or noise.shape[1] != plant.d:
            raise InputError(f"noise shape {noise.shape} does not match plant")
        self.plant = plant
        self.K0 = np.asarray(K0, dtype=float)
        self.H = int(H)
        self.oracle = oracle
        self.T = noise.shape[0]
        d, k = plant.d, plant.k
        self.d, self.k = d, k
        self.n_flat = self.H * k * d

        pad = 2 * self.H + 1
        wp = np.zeros((pad + self.T, d))
        wp[pad:pad + self.T] = noise
        # sw[i, r] = w_{(r+1)-1-i}, the disturbance i steps before round r+1.
        sw = np.stack([wp[pad - i - 1:pad - i - 1 + self.T]
                       for i in range(pad)])
        self._sw2 = np.ascontiguousarray(
            sw.transpose(1, 0, 2).reshape(self.T, pad * d))
        self._swh2 = np.ascontiguousarray(
            sw[:self.H].transpose(1, 0, 2).reshape(self.T, self.H * d))

        atil = closed_loop(plant, self.K0)
        apow = np.eye(d)
        psi0 = np.zeros((pad, d, d))
        ajb = np.zeros((self.H, d, k))
        for j in range(self.H + 1):
            psi0[j] = apow
            if j < self.H:
                ajb[j] = apow @ plant.B
            apow = atil @ apow
        self._ajb = ajb
        # Noise-only part of the ideal state, shared by every candidate.
        self._y0 = self._sw2 @ psi0.transpose(0, 2, 1).reshape(pad * d, d)
        self._pad = pad

    def values(self, flats: np.ndarray) -> np.ndarray:
        """Objective totals for a (B, H*k*d) batch of policy candidates."""
        flats = np.atleast_2d(np.asarray(flats, dtype=float))
        if flats.shape[1] != self.n_flat:
            raise InputError(
                f"candidate width {flats.shape[1]} != {self.n_flat}")
        out = np.empty(flats.shape[0])
        for lo in range(0, flats.shape[0], _CHUNK):
            out[lo:lo + _CHUNK] = self._values_chunk(flats[lo:lo + _CHUNK])
        return out

    def value(self, flat: np.ndarray) -> float:
        return float(self.values(np.asarray(flat, dtype=float)[None])[0])

    def _values_chunk(self, flats: np.ndarray) -> np.ndarray:
        B = flats.shape[0]
        H, d, k, pad, T = self.H, self.d, self.k, self._pad, self.T
        mb = flats.reshape(B, H, k, d)

        psi_pol = np.zeros((B, pad, d, d))
        for j in range(H):
            contrib = np.einsum("ek,blkd->bled", self._ajb[j], mb)
            psi_pol[:, j + 1:j + 1 + H] += contrib
        pp = psi_pol.transpose(1, 3, 0, 2).reshape(pad * d, B * d)
        y = self._y0[:, None, :] + (self._sw2 @ pp).reshape(T, B, d)
        y = y.transpose(1, 0, 2)

        mm = mb.transpose(1, 3, 0, 2).reshape(H * d, B * k)
        u_pol = (self._swh2 @ mm).reshape(T, B, k).transpose(1, 0, 2)
        u = u_pol - y @ self.K0.T

        return self.oracle.value_batch(y, u).sum(axis=-1)


def _project_flat(flat, radii, H, k, d):
    blocks = flat.reshape(H, k, d)
    return project_spectral_ball_stack(blocks, radii).reshape(-1)


def _random_feasible(rng, radii, H, k, d):
    blocks = rng.standard_normal((H, k, d))
    norms = np.linalg.norm(blocks, axis=(1, 2))
    scale = radii * rng.uniform(0.0, 1.0, size=H) / np.maximum(norms, 1e-300)
    return (blocks * scale[:, None, None]).reshape(-1)


def _assemble_quadratic_model(obj, h):
    """Central-difference gradient and Hessian of the objective at zero.

    Central differences are exact on quadratic objectives up to rounding,
    which is what makes the model path legitimate: iterating on the model
    is then identical to rerunning finite differences at every iterate.
    """
    n = obj.n_flat
    eye = np.eye(n)
    probes = [np.zeros(n)]
    for j in range(n):
        probes.append(h * eye[j])
        probes.append(-h * eye[j])
    pair_index = {}
    for i in range(n):
        for j in range(i + 1, n):
            pair_index[(i, j)] = len(probes)
            probes.append(h * (eye[i] + eye[j]))
            probes.append(h * (eye[i] - eye[j]))
            probes.append(-h * (eye[i] - eye[j]))
            probes.append(-h * (eye[i] + eye[j]))
    vals = obj.values(np.asarray(probes))
    j0 = vals[0]
    plus = vals[1:1 + 2 * n:2]
    minus = vals[2:2 + 2 * n:2]
    grad = (plus - minus) / (2.0 * h)
    hess = np.zeros((n, n))
    np.fill_diagonal(hess, (plus - 2.0 * j0 + minus) / h ** 2)
    for (i, j), base in pair_index.items():
        pp, pm, mp, mm = vals[base:base + 4]
        hess[i, j] = hess[j, i] = (pp - pm - mp + mm) / (4.0 * h ** 2)
    return j0, grad, hess


def _fista_on_model(j0, grad, hess, init, radii, H, k, d,
                    max_iters=10000, tol=1e-11):
    lam_max = float(np.linalg.eigvalsh(hess)[-1]) if hess.size else 0.0
    if lam_max <= 0.0:
        return _project_flat(init, radii, H, k, d), 0
    step = 1.0 / lam_max
    x = _project_flat(init, radii, H, k, d)
    z = x.copy()
    t_acc = 1.0
    for it in range(max_iters):
        g = grad + hess @ z
        x_new = _project_flat(z - step * g, radii, H, k, d)
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_acc ** 2))
        z = x_new + ((t_acc - 1.0) / t_new) * (x_new - x)
        moved = np.linalg.norm(x_new - x)
        x, t_acc = x_new, t_new
        if moved <= tol * (1.0 + np.linalg.norm(x)):
            return x, it + 1
    return x, max_iters


def _subgradient_search(obj, inits, radii, H, k, d, max_iters, seed):
    """Projected descent with central-difference subgradients, best-iterate.

    The step length anneals geometrically: each level runs a fixed number of
    normalized steps, then the length halves. On the piecewise-smooth sums
    this comparator sees, halving localizes the best iterate at roughly one
    binary digit per level, which converges far faster than a 1/sqrt(it)
    length at equal budget.
    """
    n = obj.n_flat
    R = len(inits)
    xs = np.asarray([_project_flat(x, radii, H, k, d) for x in inits])
    best_x = xs.copy()
    best_j = obj.values(xs)
    scale = float(np.linalg.norm(radii))
    h = 1e-6
    eye = np.eye(n)
    per_level = max(10, max_iters // 14)
    history = [best_j.min()]
    for it in range(1, max_iters + 1):
        probes = np.concatenate(
            [np.concatenate([xs + h * eye[j][None], xs - h * eye[j][None]])
             for j in range(n)])
        vals = obj.values(probes).reshape(n, 2, R)
        grads = ((vals[:, 0] - vals[:, 1]) / (2.0 * h)).T
        norms = np.linalg.norm(grads, axis=1, keepdims=True)
        step = 0.25 * scale * 0.5 ** ((it - 1) // per_level)
        xs = np.asarray([
            _project_flat(xs[r] - step * grads[r] / max(norms[r, 0], 1e-300),
                          radii, H, k, d)
            for r in range(R)])
        js = obj.values(xs)
        improved = js < best_j
        best_j = np.where(improved, js, best_j)
        best_x[improved] = xs[improved]
        # Restart each level from the incumbent so levels refine, not wander.
        if it % per_level == 0:
            xs = best_x.copy()
        history.append(best_j.min())
    tail = history[max(0, len(history) - per_level):]
    converged = tail[-1] >= tail[0] - 1e-7 * (1.0 + abs(tail[-1]))
    if not converged:
        warnings.warn("fixed-policy search still improving at the iteration "
                      "cap; returning best iterate found", RuntimeWarning)
    r_best = int(np.argmin(best_j))
    return best_x[r_best], float(best_j[r_best]), converged


def best_fixed_M(plant: LinearPlant, K0: np.ndarray,
                 constants: ControlConstants, noise: np.ndarray,
                 oracle: CostOracle, restarts: int = 10, seed: int = 0,
                 max_iters: int = 300):
    """Best constant disturbance-feedback policy on a recorded noise path.

    Returns (policy, objective_total, info). The first restart always starts
    from the zero policy so that a noiseless run returns exactly zero.
    """
    H, d, k = constants.H, plant.d, plant.k
    radii = constants.feasible_radii()
    obj = ConstantPolicyObjective(plant, K0, H, noise, oracle)
    rng = np.random.default_rng(np.random.SeedSequence((int(seed), 0xBF)))
    inits = [np.zeros(obj.n_flat)]
    for _ in range(max(0, restarts - 1)):
        inits.append(_random_feasible(rng, radii, H, k, d))

    info = {"restarts": restarts}
    h = 1e-3 * (1.0 + float(np.max(radii)))
    j0, grad, hess = _assemble_quadratic_model(obj, h)

    # Trust the model only if it reproduces the true objective off-axis.
    # Piecewise-linear objectives can agree with an affine model at a few
    # sampled points by luck, so nonsmooth costs never take the model path.
    check = np.asarray([_random_feasible(rng, radii, H, k, d)
                        for _ in range(5)])
    model_vals = (j0 + check @ grad
                  + 0.5 * np.einsum("bi,ij,bj->b", check, hess, check))
    true_vals = obj.values(check)
    model_ok = oracle.family != "nonsmooth" and bool(
        np.all(np.abs(model_vals - true_vals)
               <= 1e-6 * (1.0 + np.abs(true_vals))))

    if model_ok:
        cands = []
        iters = []
        for init in inits:
            x, used = _fista_on_model(j0, grad, hess, init, radii, H, k, d)
            cands.append(x)
            iters.append(used)
        vals = obj.values(np.asarray(cands))
        # The starting points are feasible, so the result must never be
        # worse than the best of them even if the model misled the solver.
        pool = cands + inits
        pool_vals = np.concatenate([vals, obj.values(np.asarray(inits))])
        idx = int(np.argmin(pool_vals))
        flat, j_star = pool[idx], float(pool_vals[idx])
        info.update(path="quadratic_model", iters=max(iters),
                    restart_spread=float(vals.max() - vals.min()),
                    converged=True)
    else:
        flat, j_star, converged = _subgradient_search(
            obj, inits, radii, H, k, d, max_iters, seed)
        info.update(path="subgradient", iters=max_iters,
                    restart_spread=0.0, converged=bool(converged))

    policy = BlockMatrix(flat.reshape(H, k, d).copy())
    return policy, j_star, info


def best_fixed_K(plant: LinearPlant, noise: np.ndarray, oracle: CostOracle,
                 lo: float = -2.0, hi: float = 2.0, num: int = 801):
    """Grid search over stable scalar linear feedbacks u = -K x."""
    if plant.d != 1 or plant.k != 1:
        raise UnsupportedSystemError(
            "fixed-gain grid search is implemented for scalar plants only")
    noise = np.asarray(noise, dtype=float)
    T = noise.shape[0]
    a = float(plant.A[0, 0])
    b = float(plant.B[0, 0])
    grid = np.linspace(lo, hi, num)
    clf = a - b * grid
    keep = np.abs(clf) <= 1.0 - 1e-9
    if not np.any(keep):
        raise InputError("no stabilizing gain in the search interval")
    grid, clf = grid[keep], clf[keep]
    J = grid.shape[0]
    X = np.zeros((J, T))
    x = np.zeros(J)
    w = noise[:, 0]
    for t in range(T):
        X[:, t] = x
        x = clf * x + w[t]
    U = -grid[:, None] * X
    totals = oracle.value_batch(X[:, :, None], U[:, :, None]).sum(axis=1)
    idx = int(np.argmin(totals))
    return float(grid[idx]), float(totals[idx])
