"""Post-run analysis: regret-rate slope fits and tracked lower bounds."""

import math
import warnings

import numpy as np

from ..dap import ControlConstants
from ..errors import InputError


def fit_slope(horizons, regrets):
    """Least-squares slope of log(regret) against log(horizon).

    Returns (slope, intercept, r_squared). Nonpositive regret values carry
    no rate information on a log scale; they are dropped with a warning. At
    least three usable points are required for the fit to mean anything.
    """
    horizons = np.asarray(horizons, dtype=float)
    regrets = np.asarray(regrets, dtype=float)
    if horizons.shape != regrets.shape or horizons.ndim != 1:
        raise InputError("horizons and regrets must be 1-d and equal length")
    keep = regrets > 0.0
    if not np.all(keep):
        warnings.warn(
            f"dropping {int((~keep).sum())} nonpositive regret value(s) "
            "from the slope fit", RuntimeWarning)
    horizons, regrets = horizons[keep], regrets[keep]
    if horizons.shape[0] < 3:
        raise InputError("slope fit needs at least three positive points")
    lx, ly = np.log(horizons), np.log(regrets)
    coeffs = np.polyfit(lx, ly, 1)
    resid = ly - np.polyval(coeffs, lx)
    total = ly - ly.mean()
    denom = float(total @ total)
    r_squared = 1.0 if denom == 0.0 else 1.0 - float(resid @ resid) / denom
    return float(coeffs[0]), float(coeffs[1]), float(r_squared)


def lower_bound_report(constants: ControlConstants, eta: float) -> dict:
    """Accounting terms that lower-bound achievable pseudo-regret for the
    strongly convex schedule; reported for context, never asserted.
    """
    c = constants
    if c.alpha_f <= 0.0:
        raise InputError("lower-bound report needs strictly positive "
                         "effective strong convexity")
    H, T, d, k = c.H, c.T, c.d, c.k
    D2 = c.D_xu ** 2
    term1 = 2.0 * D2 * (c.G + H * c.C)
    term2 = (2.0 * c.L_f * d * k * c.C * D2
             * math.sqrt(eta * H * T / c.alpha_f)
             + 2.0 * c.beta_f * d ** 2 * k ** 2 * H ** 2 * c.C ** 2 * D2 ** 2
             * eta * math.log(T) / c.alpha_f)
    kb_kappa = c.n ** 2 * c.kappa_B ** 2 * c.kappa ** 6
    term3 = (2.0 * kb_kappa * c.alpha_f / c.gamma
             + d ** 2 * k ** 2 * H ** 2 * c.G * D2
             * (math.sqrt(H) * c.n
                + math.sqrt(2.0 * c.alpha_f * eta * kb_kappa * T
                            / (c.gamma * (H + 1)))))
    total = term1 + 2.0 * (H + 1) ** 2 * term2 + 6.0 * (H + 1) * term3
    return {
        "comparator_gap": term1,
        "estimation_drift": term2,
        "exploration_floor": term3,
        "total": total,
    }
