"""Parallel transport along paths and segments, parameter derivatives,
holonomy bounds, and the gauge-covariant fundamental theorem of calculus.

Transport solves the final-value problem P' + form(path(t))[velocity(t)] P = 0,
P(1) = identity, backwards from t = 1 by classical 4th-order one-step
integration with a polar retraction after every step; transporting along the
segment from y to x therefore returns P(0) as the operator moving fiber
values at y to x.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import transport_stack
from .connection import ConnectionForm, curvature_many, curvature_sup_norm
from .errors import IntegrationDiverged, PropertyViolation, StencilOutOfRange
from .grids import Box
from .lie import OrthoOp, op_norm, op_norm_many

# Slack on inequality assertions that involve quadrature or differencing.
EPS_DISC = 0.05
# Absolute floor for degenerate cases where the analytic bound vanishes.
HOLONOMY_FLOOR = 1e-9
PARAM_DERIV_FLOOR = 1e-6
MIN_STEPS = 8


@dataclass(frozen=True)
class Segment:
    """Affine path t -> (1-t) start + t end."""

    start: np.ndarray
    end: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "start", np.asarray(self.start, dtype=float))
        object.__setattr__(self, "end", np.asarray(self.end, dtype=float))

    def points(self, ts: np.ndarray) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)[:, None]
        return (1.0 - ts) * self.start + ts * self.end

    def velocities(self, ts: np.ndarray) -> np.ndarray:
        k = np.asarray(ts).shape[0]
        return np.broadcast_to(self.end - self.start, (k, self.start.shape[0])).copy()


class AnalyticPath:
    """Path given by vectorized position and velocity maps on [0, 1]."""

    def __init__(self, points_many, velocities_many):
        self._points = points_many
        self._velocities = velocities_many

    def points(self, ts: np.ndarray) -> np.ndarray:
        return np.asarray(self._points(np.asarray(ts, dtype=float)), dtype=float)

    def velocities(self, ts: np.ndarray) -> np.ndarray:
        return np.asarray(self._velocities(np.asarray(ts, dtype=float)), dtype=float)


class PiecewiseLinearPath:
    """Polyline through the given nodes, uniform parameter speed per leg."""

    def __init__(self, nodes: np.ndarray):
        nodes = np.asarray(nodes, dtype=float)
        if nodes.ndim != 2 or nodes.shape[0] < 2:
            raise ValueError("need at least two nodes")
        self.nodes = nodes
        self.legs = nodes.shape[0] - 1

    def points(self, ts: np.ndarray) -> np.ndarray:
        ts = np.clip(np.asarray(ts, dtype=float), 0.0, 1.0)
        scaled = ts * self.legs
        i = np.clip(scaled.astype(int), 0, self.legs - 1)
        frac = scaled - i
        return (1.0 - frac)[:, None] * self.nodes[i] + frac[:, None] * self.nodes[i + 1]

    def velocities(self, ts: np.ndarray) -> np.ndarray:
        ts = np.clip(np.asarray(ts, dtype=float), 0.0, 1.0)
        i = np.clip((ts * self.legs).astype(int), 0, self.legs - 1)
        return self.legs * (self.nodes[i + 1] - self.nodes[i])


class Homotopy:
    """Parameterized family of paths H(t, s), C^1 in both arguments.

    points_many(ts, s) -> (k, d); velocities_many(ts, s) -> (k, d) is the
    t-derivative; ds_many(ts, s) -> (k, d), when given, is the analytic
    s-derivative, else central differences in s are used.
    """

    def __init__(self, points_many, velocities_many, s_range, ds_many=None):
        self._points = points_many
        self._velocities = velocities_many
        self._ds = ds_many
        self.s_range = (float(s_range[0]), float(s_range[1]))

    def path(self, s: float) -> AnalyticPath:
        return AnalyticPath(lambda ts: self._points(ts, s),
                            lambda ts: self._velocities(ts, s))

    def ds_points(self, ts: np.ndarray, s: float, h_s: float) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        if self._ds is not None:
            return np.asarray(self._ds(ts, s), dtype=float)
        fp = np.asarray(self._points(ts, s + h_s), dtype=float)
        fm = np.asarray(self._points(ts, s - h_s), dtype=float)
        return (fp - fm) / (2.0 * h_s)


@dataclass(frozen=True)
class TransportResult:
    """Transport samples on the step grid, ascending in t; the final sample
    is the identity by construction."""

    ts: np.ndarray
    matrices: np.ndarray
    steps: int
    ortho_defect: float

    @property
    def initial(self) -> np.ndarray:
        return self.matrices[0]

    @property
    def samples(self):
        return [(float(t), OrthoOp(m)) for t, m in zip(self.ts, self.matrices)]


def _half_grid(steps: int) -> np.ndarray:
    # Descending from t = 1 to t = 0 in half steps, matching the kernel layout.
    return 1.0 - np.arange(2 * steps + 1, dtype=float) / (2 * steps)


def _require_steps(steps: int):
    if steps < MIN_STEPS:
        raise ValueError(f"steps must be >= {MIN_STEPS}")


def transport_path(form: ConnectionForm, path, steps: int) -> TransportResult:
    """Solve the transport problem along a path, retaining all step samples."""
    _require_steps(steps)
    ts = _half_grid(steps)
    pts = path.points(ts)
    vels = path.velocities(ts)
    coeffs = -form.eval_along(pts, vels)[None]
    samples, smin = transport_stack(coeffs, keep_samples=True)
    if smin <= 0.5:
        raise IntegrationDiverged(f"retraction left its basin (min singular value {smin:.3e})")
    mats = samples[0]
    eye = np.eye(form.dim_fiber)
    defect = float(op_norm_many(np.swapaxes(mats, -1, -2) @ mats - eye).max())
    return TransportResult(np.linspace(0.0, 1.0, steps + 1), mats, steps, defect)


def segment_transports(form: ConnectionForm, starts: np.ndarray, ends: np.ndarray,
                       steps: int, chunk: int = 2048) -> np.ndarray:
    """Batched segment transports: row b is the operator moving fiber values
    at ends[b] to starts[b].  Deterministic chunked evaluation."""
    _require_steps(steps)
    starts = np.atleast_2d(np.asarray(starts, dtype=float))
    ends = np.atleast_2d(np.asarray(ends, dtype=float))
    b, d = starts.shape
    m = form.dim_fiber
    ts = _half_grid(steps)
    out = np.empty((b, m, m))
    for lo in range(0, b, chunk):
        hi = min(lo + chunk, b)
        s_chunk = starts[lo:hi]
        e_chunk = ends[lo:hi]
        pts = (1.0 - ts)[None, :, None] * s_chunk[:, None, :] + ts[None, :, None] * e_chunk[:, None, :]
        vels = np.broadcast_to((e_chunk - s_chunk)[:, None, :], pts.shape)
        coeffs = -form.eval_along(pts.reshape(-1, d), vels.reshape(-1, d))
        coeffs = coeffs.reshape(hi - lo, 2 * steps + 1, m, m)
        res, smin = transport_stack(coeffs, keep_samples=False)
        if smin <= 0.5:
            raise IntegrationDiverged(
                f"retraction left its basin (min singular value {smin:.3e})")
        out[lo:hi] = res[:, 0]
    return out


def transport_segment(form: ConnectionForm, x, y, steps: int) -> OrthoOp:
    """Transport along the affine path from y to x, returning P(0)."""
    mat = segment_transports(form, np.atleast_2d(x), np.atleast_2d(y), steps)[0]
    return OrthoOp(mat)


def simpson_weights(intervals: int) -> np.ndarray:
    """Composite Simpson weights on a uniform grid over [0, 1]."""
    if intervals % 2 != 0:
        raise ValueError("composite Simpson needs an even number of intervals")
    w = np.ones(intervals + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w / (3.0 * intervals)


def ftc_reconstruct(form: ConnectionForm, field, path, steps: int):
    """Reconstruct the endpoint value from the start value plus the
    transported covariant-derivative integral.

    Returns (value, defect): value is P(0)^{-1} U(path(0)) + the composite
    Simpson integral of P(t)^{-1} D U(path(t))[velocity(t)], and defect is
    its distance to U(path(1)).
    """
    from .connection import covariant_derivative_many

    if steps % 2 != 0:
        raise ValueError("ftc_reconstruct needs an even step count for Simpson")
    result = transport_path(form, path, steps)
    ts = result.ts
    pts = path.points(ts)
    vels = path.velocities(ts)
    dmat = covariant_derivative_many(field, form, pts)
    integrand = np.einsum("kba,kbj,kj->ka", result.matrices, dmat, vels)
    w = simpson_weights(steps)
    integral = np.einsum("k,ka->a", w, integrand)
    value = result.matrices[0].T @ field.value(pts[0]) + integral
    defect = float(np.linalg.norm(value - field.value(pts[-1])))
    return value, defect


def transport_parameter_derivative(form: ConnectionForm, homotopy: Homotopy, s: float,
                                   steps: int, h_s: float | None = None):
    """Differentiate the transport endpoint with respect to the family
    parameter and compare with the curvature integral that controls it.

    Returns (lhs, rhs, bound): lhs is the assembled derivative expression with
    d/ds taken by central differences, rhs is the Simpson evaluation of the
    transported curvature integrand, and bound its scalar majorant.  Raises
    PropertyViolation when ||lhs|| exceeds bound within the discretization
    slack.
    """
    if steps % 2 != 0:
        raise ValueError("parameter derivative needs an even step count for Simpson")
    lo, hi = homotopy.s_range
    if h_s is None:
        h_s = 1e-4 * (hi - lo)
    if not (lo < s < hi):
        raise StencilOutOfRange("parameter value must be interior to the family range")

    res_mid = transport_path(form, homotopy.path(s), steps)
    p_plus = transport_path(form, homotopy.path(s + h_s), steps).initial
    p_minus = transport_path(form, homotopy.path(s - h_s), steps).initial
    dp_ds = (p_plus - p_minus) / (2.0 * h_s)

    ts = res_mid.ts
    pts = homotopy.path(s).points(ts)
    vels = homotopy.path(s).velocities(ts)
    ds_pts = homotopy.ds_points(ts, s, h_s)

    gamma_start = form.eval_along(pts[:1], ds_pts[:1])[0]
    gamma_end = form.eval_along(pts[-1:], ds_pts[-1:])[0]
    p0 = res_mid.initial
    lhs = dp_ds + gamma_start @ p0 - p0 @ gamma_end

    kmats = curvature_many(form, pts, ds_pts, vels)
    inv = np.swapaxes(res_mid.matrices, -1, -2)
    integrand = np.einsum("ab,kbc,kcd,kde->kae", p0, inv, kmats, res_mid.matrices)
    w = simpson_weights(steps)
    rhs = np.einsum("k,kab->ab", w, integrand)
    bound = float(w @ op_norm_many(kmats))

    lhs_norm = op_norm(lhs)
    if lhs_norm > bound * (1.0 + EPS_DISC) + PARAM_DERIV_FLOOR:
        raise PropertyViolation(
            "parameter-derivative norm exceeds its curvature bound: "
            f"{lhs_norm:.6e} > {bound:.6e} * (1 + {EPS_DISC})")
    return lhs, rhs, bound


def triangle_area(x, y, z) -> float:
    a = np.asarray(y, dtype=float) - np.asarray(x, dtype=float)
    b = np.asarray(z, dtype=float) - np.asarray(x, dtype=float)
    g = (a @ a) * (b @ b) - (a @ b) ** 2
    return 0.5 * float(np.sqrt(max(g, 0.0)))


def _bounding_box(points) -> Box:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    return Box(pts.min(axis=0), pts.max(axis=0))


def holonomy_triangle(form: ConnectionForm, x, y, z, steps: int,
                      sup_samples: int = 64, seed: int = 0):
    """Holonomy defect around the triangle (x, y, z) and its curvature bound.

    defect = op_norm(identity - R(x,y) R(y,z) R(z,x)); the bound is the
    sampled curvature sup over the triangle's bounding box times the triangle
    area.  Raises PropertyViolation when the defect exceeds the bound beyond
    the discretization slack.
    """
    pts = np.asarray([x, y, z], dtype=float)
    mats = segment_transports(form, pts, np.roll(pts, -1, axis=0), steps)
    loop = mats[0] @ mats[1] @ mats[2]
    defect = op_norm(np.eye(form.dim_fiber) - loop)
    k_sup = curvature_sup_norm(form, _bounding_box(pts), samples=sup_samples, seed=seed)
    bound = k_sup * triangle_area(x, y, z)
    if defect > bound * (1.0 + EPS_DISC) + HOLONOMY_FLOOR:
        raise PropertyViolation(
            "holonomy defect exceeds its curvature-area bound: "
            f"{defect:.6e} > {bound:.6e} * (1 + {EPS_DISC})")
    return defect, bound


def triangle_difference_bound(form: ConnectionForm, field, x, y, z, steps: int,
                              sup_samples: int = 64, seed: int = 0):
    """Two-path comparison through a third point.

    lhs = ||U(x) - R(x,y) U(y)||; rhs routes through z and pays the holonomy
    price ||U(z)|| min(2, K_sup |triangle|).  Raises PropertyViolation when
    lhs exceeds rhs beyond the discretization slack.
    """
    pts = np.asarray([x, y, z], dtype=float)
    ux, uy, uz = (field.value(p) for p in pts)
    r_xy, r_xz, r_yz = segment_transports(
        form, np.asarray([x, x, y], dtype=float), np.asarray([y, z, z], dtype=float), steps)
    lhs = float(np.linalg.norm(ux - r_xy @ uy))
    k_sup = curvature_sup_norm(form, _bounding_box(pts), samples=sup_samples, seed=seed)
    holonomy_price = min(2.0, k_sup * triangle_area(x, y, z))
    rhs = (float(np.linalg.norm(ux - r_xz @ uz))
           + float(np.linalg.norm(uy - r_yz @ uz))
           + float(np.linalg.norm(uz)) * holonomy_price)
    if lhs > rhs * (1.0 + EPS_DISC) + HOLONOMY_FLOOR:
        raise PropertyViolation(
            f"two-path difference bound violated: {lhs:.6e} > {rhs:.6e} * (1 + {EPS_DISC})")
    return lhs, rhs
