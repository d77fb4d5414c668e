"""Uniform periodic mesh on the unit square and Gaussian source evaluation.

The mesh is the periodic lattice {0, h, ..., 1-h}^2 with h = 1/n, stored in
row-major node order with x varying fastest: node index k = iy*n + ix maps to
(x, y) = (ix*h, iy*h). The duplicate x=1 / y=1 lines are excluded so that FFT
modes downstream are exact; the x=1-h / y=1-h lines act as the far boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Mesh:
    """Uniform n x n periodic lattice over [0,1)^2."""

    n: int
    coords: np.ndarray = field(repr=False)  # (n*n, 2), row-major, x fastest

    @property
    def h(self) -> float:
        return 1.0 / self.n

    @property
    def num_nodes(self) -> int:
        return self.n * self.n

    def boundary_mask(self) -> np.ndarray:
        """Boolean mask over nodes: True on the lattice frame (4n-4 nodes)."""
        n = self.n
        ix = np.arange(n * n) % n
        iy = np.arange(n * n) // n
        return (ix == 0) | (ix == n - 1) | (iy == 0) | (iy == n - 1)

    def interior_indices(self) -> np.ndarray:
        """Node indices not on the boundary frame, ascending."""
        return np.flatnonzero(~self.boundary_mask())


@dataclass(frozen=True)
class SourceSpec:
    """Isotropic Gaussian bump used as the forcing term."""

    sigma_f: float
    center: tuple[float, float] = (0.5, 0.5)
    amplitude: float = 1.0

    def __post_init__(self):
        if not self.sigma_f > 0:
            raise ValueError(f"sigma_f must be positive, got {self.sigma_f}")
        cx, cy = self.center
        if not (0.0 <= cx <= 1.0 and 0.0 <= cy <= 1.0):
            raise ValueError(f"source center {self.center} outside the unit square")


def make_uniform_mesh(n: int) -> Mesh:
    """Build the n x n periodic mesh, spacing 1/n.

    n must be a power of two and at least 4 (the spectral reference solver
    requires power-of-two sizes).
    """
    if not isinstance(n, (int, np.integer)):
        raise ValueError(f"mesh size must be an integer, got {n!r}")
    n = int(n)
    if n < 4 or not _is_power_of_two(n):
        raise ValueError(f"mesh size must be a power of two >= 4, got {n}")
    h = 1.0 / n
    axis = np.arange(n) * h
    xx, yy = np.meshgrid(axis, axis, indexing="xy")  # xx varies along columns
    coords = np.column_stack([xx.ravel(), yy.ravel()])
    return Mesh(n=n, coords=coords)


def boundary_nodes(mesh: Mesh) -> np.ndarray:
    """Coordinates of the 4n-4 frame nodes (x or y in {0, 1-h}), no duplicates."""
    return mesh.coords[mesh.boundary_mask()]


def interior_nodes(mesh: Mesh) -> np.ndarray:
    """Coordinates of the (n-2)^2 nodes off the boundary frame."""
    return mesh.coords[mesh.interior_indices()]


def gaussian_source(points: np.ndarray, spec: SourceSpec) -> np.ndarray:
    """Evaluate amplitude * exp(-|p - center|^2 / (2 sigma_f^2)) at each point."""
    pts = np.asarray(points, dtype=float)
    squeeze = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if pts.shape[1] != 2:
        raise ValueError(f"points must have shape (m, 2), got {pts.shape}")
    d2 = (pts[:, 0] - spec.center[0]) ** 2 + (pts[:, 1] - spec.center[1]) ** 2
    vals = spec.amplitude * np.exp(-d2 / (2.0 * spec.sigma_f**2))
    return vals[0] if squeeze else vals
