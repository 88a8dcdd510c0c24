"""Strong stability certificates for linear state feedback.

A controller K is strongly stable with parameters (kappa, gamma) when the
closed loop A - B K factors as Q L Q^{-1} with ||L|| <= 1 - gamma and
||K||, ||Q||, ||Q^{-1}|| <= kappa. Certification goes through the
eigendecomposition of the closed loop: eigenvector columns are balanced to
unit norm (with a deterministic phase fix), L is the diagonal of eigenvalues,
and kappa is read off the factors. Defective closed loops, detected by a bad
reconstruction residual, are rejected; this certifier only covers the
diagonalizable case.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError, StabilizationError, UnsupportedSystemError
from .plant import LinearPlant

RECONSTRUCTION_TOL = 1e-8


@dataclass(frozen=True)
class StabilityCertificate:
    kappa: float
    gamma: float
    Q: np.ndarray
    L: np.ndarray

    @property
    def spectral_radius(self) -> float:
        return 1.0 - self.gamma

    def summary(self) -> dict:
        """JSON-ready block for experiment reports."""
        return {
            "kappa": self.kappa,
            "gamma": self.gamma,
            "spectral_radius": self.spectral_radius,
        }


def closed_loop(plant: LinearPlant, K: np.ndarray) -> np.ndarray:
    """A - B K for the control law u = -K x."""
    K = np.atleast_2d(np.asarray(K, dtype=float))
    if K.shape != (plant.k, plant.d):
        raise InputError(f"K shape {K.shape}, expected ({plant.k}, {plant.d})")
    return plant.A - plant.B @ K


def certify(plant: LinearPlant, K: np.ndarray) -> StabilityCertificate:
    """Certificate for K, or StabilizationError if none exists at our tolerance."""
    K = np.atleast_2d(np.asarray(K, dtype=float))
    Atil = closed_loop(plant, K)
    eigvals, eigvecs = np.linalg.eig(Atil)
    rho = float(np.max(np.abs(eigvals)))
    if rho >= 1.0:
        raise StabilizationError(f"closed-loop spectral radius {rho:.6g} >= 1")
    # Balance columns to unit norm and pin the phase of the largest entry so
    # the certificate is deterministic across LAPACK variants.
    Q = np.array(eigvecs, dtype=complex)
    for j in range(Q.shape[1]):
        col = Q[:, j]
        norm = np.linalg.norm(col)
        if norm < 1e-14:
            raise StabilizationError("degenerate eigenvector column")
        col = col / norm
        pivot = col[np.argmax(np.abs(col))]
        col = col * (np.conj(pivot) / abs(pivot))
        Q[:, j] = col
    cond = np.linalg.cond(Q)
    if not np.isfinite(cond) or cond > 1e12:
        raise StabilizationError(f"eigenvector matrix is near-singular (cond {cond:.3g})")
    L = np.diag(eigvals)
    Qinv = np.linalg.inv(Q)
    residual = np.linalg.norm(Q @ L @ Qinv - Atil, 2)
    if residual > RECONSTRUCTION_TOL:
        raise StabilizationError(
            f"closed loop is defective or ill-conditioned: residual {residual:.3g}"
        )
    kappa = max(
        1.0,
        float(np.linalg.norm(K, 2)),
        float(np.linalg.norm(Q, 2)),
        float(np.linalg.norm(Qinv, 2)),
    )
    return StabilityCertificate(kappa=kappa, gamma=1.0 - rho, Q=Q, L=L)


def synthesize_K0(plant: LinearPlant, target_gamma: float) -> np.ndarray:
    """Pole placement for the two system classes we synthesize for.

    Scalar systems and diagonal-A square-invertible-B systems get each pole
    clipped into [-(1 - target_gamma), 1 - target_gamma]; poles already inside
    are left alone, so no control effort is spent where none is needed.
    Anything else must supply K0 by hand.
    """
    if not 0 < target_gamma <= 1:
        raise StabilizationError(f"target gamma must lie in (0, 1], got {target_gamma}")
    bound = 1.0 - target_gamma
    if plant.d == 1 and plant.k == 1:
        a = float(plant.A[0, 0])
        b = float(plant.B[0, 0])
        if abs(b) < 1e-12:
            raise UnsupportedSystemError("scalar plant with b = 0 is uncontrollable")
        pole = np.clip(a, -bound, bound)
        return np.array([[(a - pole) / b]])
    if plant.d == plant.k:
        offdiag = plant.A - np.diag(np.diag(plant.A))
        if np.max(np.abs(offdiag)) < 1e-12:
            if abs(np.linalg.det(plant.B)) < 1e-12:
                raise UnsupportedSystemError("diagonal-A plant needs invertible B")
            poles = np.clip(np.diag(plant.A), -bound, bound)
            return np.linalg.solve(plant.B, plant.A - np.diag(poles))
    raise UnsupportedSystemError(
        "synthesis covers scalar and diagonal-A square-B systems only; supply K0 manually"
    )
