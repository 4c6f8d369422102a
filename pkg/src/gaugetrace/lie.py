"""Small-matrix kernels for the orthogonal group O(m) and its Lie algebra so(m).

Fiber dimensions are tiny here (m <= 4), so closed forms (planar rotation,
Rodrigues) and dense SVD beat any general-purpose machinery.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, SingularInput

SKEW_TOL = 1e-12
# One order above accumulated RK4 retraction drift at <= 1e3 steps.
ORTHO_TOL = 1e-10


def _as_matrix(a) -> np.ndarray:
    return np.asarray(getattr(a, "entries", a), dtype=float)


def skew_defect(a) -> float:
    a = _as_matrix(a)
    return float(np.abs(a + a.T).max(initial=0.0))


def orthogonality_defect(q) -> float:
    q = _as_matrix(q)
    return float(np.abs(q.T @ q - np.eye(q.shape[0])).max())


@dataclass(frozen=True)
class SkewMap:
    """Skew-symmetric m x m matrix, an element of so(m)."""

    entries: np.ndarray

    def __post_init__(self):
        a = np.array(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
        defect = float(np.abs(a + a.T).max(initial=0.0))
        if defect > SKEW_TOL * max(1.0, np.abs(a).max(initial=0.0)):
            raise ValueError(f"matrix is not skew-symmetric (defect {defect:.3e})")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class OrthoOp:
    """Orthogonal m x m operator with its stored orthogonality tolerance."""

    entries: np.ndarray
    tol: float = ORTHO_TOL

    def __post_init__(self):
        q = np.array(self.entries, dtype=float)
        if q.ndim != 2 or q.shape[0] != q.shape[1]:
            raise DimensionMismatch(f"expected a square matrix, got shape {q.shape}")
        defect = float(np.abs(q.T @ q - np.eye(q.shape[0])).max())
        if defect > self.tol:
            raise ValueError(f"matrix is not orthogonal (defect {defect:.3e} > {self.tol:.1e})")
        q.setflags(write=False)
        object.__setattr__(self, "entries", q)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def ortho_defect(self) -> float:
        return orthogonality_defect(self.entries)


def _rotation2(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def _rodrigues(a: np.ndarray) -> np.ndarray:
    theta = np.sqrt(a[2, 1] ** 2 + a[0, 2] ** 2 + a[1, 0] ** 2)
    if theta < 1e-8:
        # Truncated series; remainder is O(theta^3) < 1e-24 here.
        return np.eye(3) + a + 0.5 * (a @ a)
    a2 = a @ a
    return np.eye(3) + (np.sin(theta) / theta) * a + ((1.0 - np.cos(theta)) / theta**2) * a2


# Degree-6 diagonal Pade coefficients of exp.
_PADE6 = np.array(
    [1.0, 1 / 2, 5 / 44, 1 / 66, 1 / 792, 1 / 15840, 1 / 665280]
)


def _expm_pade(a: np.ndarray) -> np.ndarray:
    m = a.shape[0]
    norm = np.abs(a).sum(axis=1).max(initial=0.0)
    n_sq = max(0, int(np.ceil(np.log2(norm / 0.5))) if norm > 0.5 else 0)
    x = a / 2.0**n_sq
    x2 = x @ x
    x4 = x2 @ x2
    even = _PADE6[0] * np.eye(m) + _PADE6[2] * x2 + _PADE6[4] * x4 + _PADE6[6] * (x4 @ x2)
    odd = x @ (_PADE6[1] * np.eye(m) + _PADE6[3] * x2 + _PADE6[5] * x4)
    q = np.linalg.solve(even - odd, even + odd)
    for _ in range(n_sq):
        q = q @ q
    return q


def expm(a: SkewMap) -> OrthoOp:
    """Matrix exponential of a skew map; exp of skew is orthogonal."""
    e = a.entries
    m = a.dim
    if m == 1:
        q = np.eye(1)
    elif m == 2:
        q = _rotation2(e[1, 0])
    elif m == 3:
        q = _rodrigues(e)
    else:
        q = _expm_pade(e)
    return OrthoOp(q)


def polar_retract(a) -> OrthoOp:
    """Orthogonal polar factor of a near-orthogonal matrix.

    Among orthogonal matrices the polar factor minimizes the Frobenius
    distance to the input.  Raises SingularInput when a singular value
    drops to 0.5 or below (the iterate has left the retraction basin).
    """
    a = _as_matrix(a)
    u, s, vt = np.linalg.svd(a)
    if s.min(initial=np.inf) <= 0.5:
        raise SingularInput(f"singular value {s.min():.3e} <= 0.5; retraction not reliable")
    return OrthoOp(u @ vt)


def commutator(a: SkewMap, b: SkewMap) -> SkewMap:
    if a.dim != b.dim:
        raise DimensionMismatch(f"dimensions differ: {a.dim} vs {b.dim}")
    c = a.entries @ b.entries - b.entries @ a.entries
    return SkewMap(c)


def op_norm(a) -> float:
    """Operator norm (largest singular value)."""
    a = _as_matrix(a)
    if a.size == 0:
        return 0.0
    return float(np.linalg.svd(a, compute_uv=False)[0])


def hs_norm(a) -> float:
    """Hilbert-Schmidt (Frobenius) norm."""
    a = _as_matrix(a)
    return float(np.sqrt((a * a).sum()))


def op_norm_many(mats: np.ndarray) -> np.ndarray:
    """Operator norms of a stack of matrices (..., m, m)."""
    s = np.linalg.svd(mats, compute_uv=False)
    return s[..., 0]


def so3_generators():
    """Standard so(3) basis L1, L2, L3 with [L1, L2] = L3 (cyclically)."""
    l1 = np.array([[0.0, 0, 0], [0, 0, -1], [0, 1, 0]])
    l2 = np.array([[0.0, 0, 1], [0, 0, 0], [-1, 0, 0]])
    l3 = np.array([[0.0, -1, 0], [1, 0, 0], [0, 0, 0]])
    return l1, l2, l3


def random_skew(rng: np.random.Generator, m: int, scale: float = 1.0) -> np.ndarray:
    g = rng.normal(scale=scale, size=(m, m))
    return (g - g.T) / 2.0


def random_orthogonal(rng: np.random.Generator, m: int) -> np.ndarray:
    return expm(SkewMap(random_skew(rng, m, scale=np.pi / 2))).entries
