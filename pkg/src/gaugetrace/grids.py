"""Domain boxes, quadrature layout, and the truncated half-space grid.

The working domain is the box [-L, L]^n x [0, H].  Lateral cells are uniform;
the vertical mesh is graded as z_j = H * (j / N_vert)**g so that weights
z^alpha with alpha near -1 are resolved.  Midpoint rules never touch z = 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import OutOfDomain


def mesh_points(axes) -> np.ndarray:
    """Cartesian product of 1d coordinate arrays, row-major, shape (K, len(axes))."""
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=-1)


@dataclass(frozen=True)
class Box:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("box bounds must be 1d arrays of equal length")
        if np.any(hi < lo):
            raise ValueError("box has hi < lo")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return self.lo.shape[0]

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.hi - self.lo))

    def contains(self, pts: np.ndarray, pad: float = 0.0) -> bool:
        pts = np.atleast_2d(pts)
        return bool(np.all(pts >= self.lo - pad) and np.all(pts <= self.hi + pad))

    def require(self, pts: np.ndarray, pad: float = 0.0, what: str = "point"):
        if not self.contains(pts, pad=pad):
            raise OutOfDomain(f"{what} leaves the domain box [{self.lo}, {self.hi}]")

    def sample(self, rng: np.random.Generator, k: int) -> np.ndarray:
        u = rng.random((k, self.dim))
        return self.lo + u * (self.hi - self.lo)

    def shrink(self, margin: float) -> "Box":
        return Box(self.lo + margin, self.hi - margin)


@dataclass(frozen=True)
class QuadratureSpec:
    """Grid resolution: lateral cells per axis, vertical cells, vertical
    grading exponent, and the diagonal-exclusion radius in cells."""

    n_lat: int
    n_vert: int
    grading: float = 2.0
    r_excl: float = 1.0

    def __post_init__(self):
        if self.n_lat < 8 or self.n_vert < 8:
            raise ValueError("n_lat and n_vert must both be >= 8")
        if self.grading < 1.0:
            raise ValueError("vertical grading exponent must be >= 1")
        if self.r_excl < 1.0:
            raise ValueError("diagonal-exclusion radius must be >= 1 cell")


@dataclass(frozen=True)
class HalfSpaceGrid:
    """Truncated half-space [-L, L]^n x [0, H] with graded vertical mesh."""

    n: int
    half_width: float
    height: float
    spec: QuadratureSpec

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("boundary dimension n must be >= 1")
        if self.half_width <= 0 or self.height <= 0:
            raise ValueError("half_width and height must be positive")

    @property
    def dim(self) -> int:
        return self.n + 1

    @cached_property
    def dx(self) -> float:
        return 2.0 * self.half_width / self.spec.n_lat

    @cached_property
    def lateral_nodes(self) -> np.ndarray:
        return np.linspace(-self.half_width, self.half_width, self.spec.n_lat + 1)

    @cached_property
    def lateral_centers(self) -> np.ndarray:
        nodes = self.lateral_nodes
        return 0.5 * (nodes[:-1] + nodes[1:])

    @cached_property
    def z_nodes(self) -> np.ndarray:
        j = np.arange(self.spec.n_vert + 1, dtype=float)
        return self.height * (j / self.spec.n_vert) ** self.spec.grading

    @cached_property
    def z_centers(self) -> np.ndarray:
        z = self.z_nodes
        return 0.5 * (z[:-1] + z[1:])

    @cached_property
    def z_weights(self) -> np.ndarray:
        return np.diff(self.z_nodes)

    @property
    def box(self) -> Box:
        lo = np.append(np.full(self.n, -self.half_width), 0.0)
        hi = np.append(np.full(self.n, self.half_width), self.height)
        return Box(lo, hi)

    @property
    def boundary_box(self) -> Box:
        return Box(np.full(self.n, -self.half_width), np.full(self.n, self.half_width))

    def boundary_centers(self) -> np.ndarray:
        return mesh_points([self.lateral_centers] * self.n)

    def boundary_nodes(self) -> np.ndarray:
        return mesh_points([self.lateral_nodes] * self.n)

    def bulk_centers_and_weights(self):
        """Cell centers of the full grid and their volumes, row-major."""
        pts = mesh_points([self.lateral_centers] * self.n + [self.z_centers])
        w_lat = self.dx**self.n
        w = np.tile(self.z_weights, self.spec.n_lat**self.n) * w_lat
        return pts, w

    def with_spec(self, spec: QuadratureSpec) -> "HalfSpaceGrid":
        return HalfSpaceGrid(self.n, self.half_width, self.height, spec)

    def node_shape(self):
        return (self.spec.n_lat + 1,) * self.n + (self.spec.n_vert + 1,)


def embed_boundary(x: np.ndarray) -> np.ndarray:
    """Append a zero vertical coordinate: R^n -> R^(n+1)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    return np.concatenate([x, np.zeros((x.shape[0], 1))], axis=1)
