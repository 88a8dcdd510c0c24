"""Block-matrix containers and shared numerical primitives.

A disturbance-feedback policy is a stack of H matrices of identical shape
(k, d), block i acting on the disturbance observed i+1 steps ago. The stack
is stored as one ndarray of shape (H, k, d); the Frobenius norm of the stack
is the Euclidean norm of the flattened array, so sphere/ball sampling over
the whole stack reduces to sampling in dimension H*k*d.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError, ParameterError


@dataclass(frozen=True)
class BlockMatrix:
    """Immutable stack of H equally shaped (k, d) blocks."""

    blocks: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.blocks, dtype=float)
        if arr.ndim != 3:
            raise InputError(f"block stack must be 3-d (H, k, d), got shape {arr.shape}")
        if arr.shape[0] < 1:
            raise InputError("block stack needs at least one block")
        if not np.all(np.isfinite(arr)):
            raise InputError("block stack contains non-finite entries")
        object.__setattr__(self, "blocks", arr)

    @property
    def H(self) -> int:
        return self.blocks.shape[0]

    @property
    def k(self) -> int:
        return self.blocks.shape[1]

    @property
    def d(self) -> int:
        return self.blocks.shape[2]

    @classmethod
    def zeros(cls, H: int, k: int, d: int) -> "BlockMatrix":
        return cls(np.zeros((H, k, d)))

    def block(self, i: int) -> np.ndarray:
        """Block i as a (k, d) array, zero-indexed."""
        return self.blocks[i]

    def frobenius_norm(self) -> float:
        return float(np.linalg.norm(self.blocks))

    def block_spectral_norms(self) -> np.ndarray:
        return np.array([spectral_norm(b) for b in self.blocks])

    def scale_blocks(self, factors: np.ndarray) -> "BlockMatrix":
        """Multiply block i by factors[i]."""
        f = np.asarray(factors, dtype=float)
        if f.shape != (self.H,):
            raise InputError(f"need {self.H} block factors, got shape {f.shape}")
        return BlockMatrix(self.blocks * f[:, None, None])

    def flatten(self) -> np.ndarray:
        return self.blocks.reshape(-1)

    @classmethod
    def from_flat(cls, flat: np.ndarray, H: int, k: int, d: int) -> "BlockMatrix":
        arr = np.asarray(flat, dtype=float)
        if arr.size != H * k * d:
            raise InputError(f"flat size {arr.size} does not match ({H},{k},{d})")
        return cls(arr.reshape(H, k, d))

    def __add__(self, other: "BlockMatrix") -> "BlockMatrix":
        self._check_same_shape(other)
        return BlockMatrix(self.blocks + other.blocks)

    def __sub__(self, other: "BlockMatrix") -> "BlockMatrix":
        self._check_same_shape(other)
        return BlockMatrix(self.blocks - other.blocks)

    def __mul__(self, scalar: float) -> "BlockMatrix":
        return BlockMatrix(self.blocks * float(scalar))

    __rmul__ = __mul__

    def _check_same_shape(self, other: "BlockMatrix"):
        if self.blocks.shape != other.blocks.shape:
            raise InputError(
                f"block shape mismatch: {self.blocks.shape} vs {other.blocks.shape}"
            )


def spectral_norm(mat: np.ndarray) -> float:
    """Largest singular value of a 2-d matrix."""
    m = np.asarray(mat, dtype=float)
    if m.ndim != 2:
        raise InputError(f"spectral_norm expects a 2-d matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InputError("spectral_norm: non-finite entries")
    return float(np.linalg.norm(m, 2))


def project_spectral_ball(mat: np.ndarray, radius: float) -> np.ndarray:
    """Nearest matrix in Frobenius distance with spectral norm <= radius.

    Computed by clipping singular values at the radius, which solves the
    constrained least-squares projection exactly.
    """
    if radius <= 0:
        raise ParameterError(f"projection radius must be positive, got {radius}")
    m = np.asarray(mat, dtype=float)
    if m.ndim != 2:
        raise InputError(f"project_spectral_ball expects 2-d, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InputError("project_spectral_ball: non-finite entries")
    # Cheap sufficient check: Frobenius bounds the spectral norm.
    if np.linalg.norm(m) <= radius:
        return m.copy()
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    if s[0] <= radius:
        return m.copy()
    return (u * np.minimum(s, radius)) @ vt


def project_spectral_ball_stack(blocks: np.ndarray, radii: np.ndarray) -> np.ndarray:
    """Blockwise spectral projection of a (H, k, d) stack via one batched SVD.

    Same math as project_spectral_ball applied per block; kept separate so
    hot loops avoid H python-level SVD calls.
    """
    blocks = np.asarray(blocks, dtype=float)
    radii = np.asarray(radii, dtype=float)
    if blocks.ndim != 3 or radii.shape != (blocks.shape[0],):
        raise InputError(f"stack {blocks.shape} and radii {radii.shape} disagree")
    if np.any(radii <= 0):
        raise ParameterError("projection radii must be positive")
    if blocks.shape[1] == 1 or blocks.shape[2] == 1:
        # Rank-one blocks: spectral norm is the Euclidean norm.
        norms = np.linalg.norm(blocks, axis=(1, 2))
        scale = np.minimum(1.0, radii / np.maximum(norms, 1e-300))
        return blocks * scale[:, None, None]
    u, s, vt = np.linalg.svd(blocks, full_matrices=False)
    s = np.minimum(s, radii[:, None])
    return np.einsum("hij,hj,hjk->hik", u, s, vt)


def sample_unit_sphere(rng: np.random.Generator, H: int, k: int, d: int) -> BlockMatrix:
    """Uniform draw from the unit sphere in the flattened (H*k*d)-space.

    The stack as a whole has Frobenius norm exactly 1; individual blocks have
    norm at most 1.
    """
    n = H * k * d
    while True:
        g = rng.standard_normal(n)
        norm = np.linalg.norm(g)
        if norm > 1e-12:
            break
    return BlockMatrix((g / norm).reshape(H, k, d))


def sample_unit_ball(rng: np.random.Generator, n: int) -> np.ndarray:
    """Uniform draw from the unit ball in R^n."""
    if n < 1:
        raise ParameterError(f"ball dimension must be >= 1, got {n}")
    while True:
        g = rng.standard_normal(n)
        norm = np.linalg.norm(g)
        if norm > 1e-12:
            break
    radius = rng.random() ** (1.0 / n)
    return g * (radius / norm)
