"""Fiber-valued fields on the truncated half-space and on its boundary.

Analytic fields carry vectorized evaluation and, when available, an analytic
Jacobian; otherwise 4th-order central differences are used.  Sampled fields
live on the half-space grid, interpolate multilinearly, and must vanish on the
outermost two lateral node layers and the top layer (emulated compact support).
"""

from __future__ import annotations

import numpy as np

from .errors import StencilOutOfRange, UnsupportedField
from .grids import HalfSpaceGrid


# ---------------------------------------------------------------------------
# Smooth cutoff machinery (C-infinity, flat near the core, zero outside).

def _bump_piece(t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 1e-12
    with np.errstate(over="ignore"):
        out[pos] = np.exp(-1.0 / t[pos])
    return out


def _bump_piece_deriv(t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 1e-12
    out[pos] = np.exp(-1.0 / t[pos]) / t[pos] ** 2
    return out


def smooth_step(t):
    """Monotone C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    t = np.asarray(t, dtype=float)
    f, g = _bump_piece(t), _bump_piece(1.0 - t)
    return np.where(t <= 0.0, 0.0, np.where(t >= 1.0, 1.0, f / np.where(f + g > 0, f + g, 1.0)))


def smooth_step_deriv(t):
    t = np.asarray(t, dtype=float)
    f, g = _bump_piece(t), _bump_piece(1.0 - t)
    fp, gp = _bump_piece_deriv(t), _bump_piece_deriv(1.0 - t)
    denom = np.where(f + g > 0, (f + g) ** 2, 1.0)
    inside = (t > 0.0) & (t < 1.0)
    return np.where(inside, (fp * g + f * gp) / denom, 0.0)


def radial_window(r, core: float, outer: float):
    """1 for r <= core, 0 for r >= outer, C-infinity in between."""
    return smooth_step((outer - np.asarray(r, dtype=float)) / (outer - core))


def radial_window_deriv(r, core: float, outer: float):
    tau = (outer - np.asarray(r, dtype=float)) / (outer - core)
    return -smooth_step_deriv(tau) / (outer - core)


# ---------------------------------------------------------------------------
# Field classes.

class AnalyticField:
    """Closed-form field: func_many maps points (k, d) to values (k, m)."""

    def __init__(self, dim_fiber, func_many, jac_many=None,
                 support_center=None, support_radius=None):
        self.dim_fiber = dim_fiber
        self._func = func_many
        self._jac = jac_many
        self.support_center = None if support_center is None else np.asarray(support_center, float)
        self.support_radius = support_radius

    def values_many(self, pts: np.ndarray) -> np.ndarray:
        return np.asarray(self._func(np.atleast_2d(pts)), dtype=float)

    def value(self, x) -> np.ndarray:
        return self.values_many(np.atleast_2d(x))[0]

    def jacobian_many(self, pts: np.ndarray, h: float | None = None) -> np.ndarray:
        pts = np.atleast_2d(pts)
        if self._jac is not None:
            return np.asarray(self._jac(pts), dtype=float)
        if h is None:
            raise ValueError("finite-difference step h required without an analytic Jacobian")
        return fd_jacobian(self.values_many, pts, h)

    def jacobian(self, x, h: float | None = None) -> np.ndarray:
        return self.jacobian_many(np.atleast_2d(x), h)[0]


def fd_jacobian(func_many, pts: np.ndarray, h: float) -> np.ndarray:
    """4th-order central differences of func_many along each coordinate."""
    pts = np.atleast_2d(pts)
    k, d = pts.shape
    f0 = np.asarray(func_many(pts))
    m = f0.shape[1]
    jac = np.empty((k, m, d))
    for j in range(d):
        e = np.zeros(d)
        e[j] = 1.0
        fp1 = np.asarray(func_many(pts + h * e))
        fm1 = np.asarray(func_many(pts - h * e))
        fp2 = np.asarray(func_many(pts + 2 * h * e))
        fm2 = np.asarray(func_many(pts - 2 * h * e))
        jac[:, :, j] = (-fp2 + 8.0 * fp1 - 8.0 * fm1 + fm2) / (12.0 * h)
    return jac


class _Interpolant:
    """Multilinear interpolation over a tensor grid with per-axis node arrays."""

    def __init__(self, axes, values: np.ndarray):
        self.axes = [np.asarray(a, dtype=float) for a in axes]
        self.values = np.asarray(values, dtype=float)
        self.d = len(self.axes)
        self.node_shape = tuple(len(a) for a in self.axes)
        if self.values.shape[: self.d] != self.node_shape:
            raise UnsupportedField(
                f"value array shape {self.values.shape} does not match grid {self.node_shape}")
        self.m = self.values.shape[-1]
        self._flat = self.values.reshape(-1, self.m)

    def _locate(self, pts: np.ndarray):
        pts = np.atleast_2d(pts)
        k = pts.shape[0]
        idx = np.empty((k, self.d), dtype=np.intp)
        frac = np.empty((k, self.d))
        spacing = np.empty((k, self.d))
        for a, nodes in enumerate(self.axes):
            x = pts[:, a]
            tol = 1e-9 * max(1.0, abs(nodes[-1] - nodes[0]))
            if np.any(x < nodes[0] - tol) or np.any(x > nodes[-1] + tol):
                raise StencilOutOfRange("point outside the sampled grid")
            i = np.clip(np.searchsorted(nodes, x, side="right") - 1, 0, len(nodes) - 2)
            lo = nodes[i]
            dxs = nodes[i + 1] - lo
            idx[:, a] = i
            spacing[:, a] = dxs
            frac[:, a] = np.clip((x - lo) / dxs, 0.0, 1.0)
        return idx, frac, spacing

    def values_many(self, pts: np.ndarray) -> np.ndarray:
        idx, frac, _ = self._locate(pts)
        out = np.zeros((idx.shape[0], self.m))
        for corner in range(2**self.d):
            bits = [(corner >> a) & 1 for a in range(self.d)]
            w = np.ones(idx.shape[0])
            for a, bit in enumerate(bits):
                w = w * (frac[:, a] if bit else 1.0 - frac[:, a])
            flat = np.ravel_multi_index(
                tuple(idx[:, a] + bits[a] for a in range(self.d)), self.node_shape)
            out += w[:, None] * self._flat[flat]
        return out

    def jacobian_many(self, pts: np.ndarray) -> np.ndarray:
        idx, frac, spacing = self._locate(pts)
        k = idx.shape[0]
        out = np.zeros((k, self.m, self.d))
        for corner in range(2**self.d):
            bits = [(corner >> a) & 1 for a in range(self.d)]
            flat = np.ravel_multi_index(
                tuple(idx[:, a] + bits[a] for a in range(self.d)), self.node_shape)
            vals = self._flat[flat]
            for a in range(self.d):
                w = np.ones(k)
                for bb in range(self.d):
                    if bb == a:
                        continue
                    w = w * (frac[:, bb] if bits[bb] else 1.0 - frac[:, bb])
                sign = 1.0 if bits[a] else -1.0
                out[:, :, a] += (sign * w / spacing[:, a])[:, None] * vals
        return out


def _check_zero_collar(values: np.ndarray, lateral_axes: int, top_axis: int | None):
    """Outermost two node layers per lateral axis (and the top layer) must vanish."""
    for a in range(lateral_axes):
        sl = [slice(None)] * values.ndim
        for layer in (0, 1, -2, -1):
            sl[a] = layer
            if np.any(values[tuple(sl)] != 0.0):
                raise UnsupportedField(
                    "sampled field does not vanish on the outer two lateral layers")
    if top_axis is not None:
        sl = [slice(None)] * values.ndim
        sl[top_axis] = -1
        if np.any(values[tuple(sl)] != 0.0):
            raise UnsupportedField("sampled field does not vanish on the top layer")


class SampledField:
    """Field sampled on the nodes of a half-space grid, values (..., m)."""

    def __init__(self, grid: HalfSpaceGrid, values: np.ndarray):
        values = np.asarray(values, dtype=float)
        expected = grid.node_shape()
        if values.shape[:-1] != expected:
            raise UnsupportedField(
                f"value array shape {values.shape[:-1]} does not match grid {expected}")
        _check_zero_collar(values, lateral_axes=grid.n, top_axis=grid.n)
        self.grid = grid
        self.values = values
        self.dim_fiber = values.shape[-1]
        axes = [grid.lateral_nodes] * grid.n + [grid.z_nodes]
        self._interp = _Interpolant(axes, values)
        self.support_center = None
        self.support_radius = None

    def values_many(self, pts: np.ndarray) -> np.ndarray:
        return self._interp.values_many(pts)

    def value(self, x) -> np.ndarray:
        return self.values_many(np.atleast_2d(x))[0]

    def jacobian_many(self, pts: np.ndarray, h: float | None = None) -> np.ndarray:
        # Exact gradient of the multilinear interpolant; h is ignored.
        return self._interp.jacobian_many(pts)

    def jacobian(self, x, h: float | None = None) -> np.ndarray:
        return self.jacobian_many(np.atleast_2d(x))[0]


class AnalyticBoundaryField(AnalyticField):
    """Closed-form boundary field on R^n."""


class SampledBoundaryField:
    """Boundary field sampled on the lateral node lattice, values (..., m)."""

    def __init__(self, n: int, half_width: float, values: np.ndarray):
        values = np.asarray(values, dtype=float)
        n_nodes = values.shape[0]
        if values.ndim != n + 1 or any(s != n_nodes for s in values.shape[:-1]):
            raise UnsupportedField("boundary value array must be (N+1,)*n + (m,)")
        _check_zero_collar(values, lateral_axes=n, top_axis=None)
        self.n = n
        self.half_width = half_width
        self.values = values
        self.dim_fiber = values.shape[-1]
        nodes = np.linspace(-half_width, half_width, n_nodes)
        self._interp = _Interpolant([nodes] * n, values)
        dx = 2.0 * half_width / (n_nodes - 1)
        self.support_center = np.zeros(n)
        self.support_radius = half_width - 2.0 * dx

    def values_many(self, pts: np.ndarray) -> np.ndarray:
        return self._interp.values_many(pts)

    def value(self, x) -> np.ndarray:
        return self.values_many(np.atleast_2d(x))[0]

    def jacobian_many(self, pts: np.ndarray, h: float | None = None) -> np.ndarray:
        return self._interp.jacobian_many(pts)

    def jacobian(self, x, h: float | None = None) -> np.ndarray:
        return self.jacobian_many(np.atleast_2d(x))[0]
