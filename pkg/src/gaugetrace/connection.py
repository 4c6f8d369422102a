"""Connection forms on domains in R^d, covariant derivatives, curvature,
gauge transforms, and pullbacks.

A connection form assigns to each point x a linear map from directions
v in R^d to skew-symmetric endomorphisms of the fiber R^m.  Every concrete
kind is stored through its coefficient stack C_j(x) = form(x)[e_j], which
makes linearity in the direction argument structural.
"""

from __future__ import annotations

import numpy as np

from .errors import (
    DimensionMismatch,
    NonOrthogonalGauge,
    OutOfDomain,
    SingularInput,
    StencilOutOfRange,
)
from .fields import _Interpolant
from .grids import Box, HalfSpaceGrid, embed_boundary
from .lie import SkewMap, op_norm, op_norm_many

# Complex unit acting on R^2.
J2 = np.array([[0.0, -1.0], [1.0, 0.0]])

# Default finite-difference step: 1e-3 of the box diameter.
FD_STEP_FRACTION = 1e-3

GAUGE_ORTHO_TOL = 1e-10
EVAL_SKEW_TOL = 1e-12


def _default_step(box: Box) -> float:
    return FD_STEP_FRACTION * box.diameter


class ConnectionForm:
    """Base class.  Subclasses implement _coeffs_many (and, when cheap,
    an analytic directional derivative _d_coeffs_many)."""

    def __init__(self, dim_domain: int, dim_fiber: int, box: Box):
        if box.dim != dim_domain:
            raise DimensionMismatch("box dimension does not match the connection domain")
        self.dim_domain = dim_domain
        self.dim_fiber = dim_fiber
        self.box = box

    # -- subclass hooks ----------------------------------------------------
    def _coeffs_many(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _d_coeffs_many(self, pts: np.ndarray, v: np.ndarray):
        """Directional derivative of the coefficient stack, or None for FD."""
        return None

    # -- public evaluation ---------------------------------------------------
    def coeffs_many(self, pts: np.ndarray, pad: float = 0.0) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        self.box.require(pts, pad=pad, what="evaluation point")
        return self._coeffs_many(pts)

    def coeffs(self, x, pad: float = 0.0) -> np.ndarray:
        return self.coeffs_many(np.atleast_2d(x), pad=pad)[0]

    def eval(self, x, v) -> SkewMap:
        c = self.coeffs(x)
        return SkewMap(np.tensordot(np.asarray(v, dtype=float), c, axes=(0, 0)))

    def eval_along(self, pts: np.ndarray, vels: np.ndarray, pad: float = 0.0) -> np.ndarray:
        """Raw stack form(x_k)[v_k], shape (k, m, m)."""
        c = self.coeffs_many(pts, pad=pad)
        return np.einsum("kj,kjab->kab", np.atleast_2d(vels), c)

    def fd_step(self) -> float:
        return _default_step(self.box)

    def d_coeffs_many(self, pts: np.ndarray, v: np.ndarray, h: float | None = None) -> np.ndarray:
        """Directional derivative of x -> coefficient stack along v.

        v may be a single direction (d,) or one direction per point (k, d).
        Analytic when the subclass provides it, else 4th-order central
        differences with step h (default 1e-3 of the box diameter).
        """
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        v = np.asarray(v, dtype=float)
        if v.ndim == 1:
            v = np.broadcast_to(v, pts.shape)
        out = self._d_coeffs_many(pts, v)
        if out is not None:
            return out
        if h is None:
            h = self.fd_step()
        fp1 = self.coeffs_many(pts + h * v, pad=2.5 * h)
        fm1 = self.coeffs_many(pts - h * v, pad=2.5 * h)
        fp2 = self.coeffs_many(pts + 2 * h * v, pad=2.5 * h)
        fm2 = self.coeffs_many(pts - 2 * h * v, pad=2.5 * h)
        return (-fp2 + 8.0 * fp1 - 8.0 * fm1 + fm2) / (12.0 * h)


def eval_connection(form: ConnectionForm, x, v) -> SkewMap:
    """The skew map form(x)[v]; linear in v."""
    return form.eval(x, v)


class ZeroConnection(ConnectionForm):
    def _coeffs_many(self, pts):
        k = pts.shape[0]
        return np.zeros((k, self.dim_domain, self.dim_fiber, self.dim_fiber))

    def _d_coeffs_many(self, pts, v):
        return np.zeros((pts.shape[0], self.dim_domain, self.dim_fiber, self.dim_fiber))


class ConstantConnection(ConnectionForm):
    """Constant coefficient matrices G_1 .. G_d."""

    def __init__(self, mats: np.ndarray, box: Box):
        mats = np.asarray(mats, dtype=float)
        d, m = mats.shape[0], mats.shape[1]
        for g in mats:
            SkewMap(g)  # validates skewness
        super().__init__(d, m, box)
        self.mats = mats

    def _coeffs_many(self, pts):
        return np.broadcast_to(self.mats, (pts.shape[0],) + self.mats.shape).copy()

    def _d_coeffs_many(self, pts, v):
        return np.zeros((pts.shape[0],) + self.mats.shape)


class AbelianMagneticConnection(ConnectionForm):
    """Fiber R^2 ~ C with form = i A for a vector potential A: R^d -> R^d.

    potential_many maps (k, d) points to (k, d) values; jacobian_many, when
    given, maps points to (k, d, d) arrays J[p, i, j] = dA_i/dx_j.
    """

    def __init__(self, potential_many, box: Box, jacobian_many=None):
        super().__init__(box.dim, 2, box)
        self._potential = potential_many
        self._jacobian = jacobian_many

    def potential(self, pts: np.ndarray) -> np.ndarray:
        return np.asarray(self._potential(np.atleast_2d(pts)), dtype=float)

    def _coeffs_many(self, pts):
        a = self.potential(pts)
        return a[:, :, None, None] * J2

    def _d_coeffs_many(self, pts, v):
        if self._jacobian is None:
            return None
        jac = np.asarray(self._jacobian(np.atleast_2d(pts)), dtype=float)
        da = np.einsum("pij,pj->pi", jac, v)  # directional derivative of A along v
        return da[:, :, None, None] * J2


class AffineConnection(ConnectionForm):
    """Coefficients affine in position: C_j(x) = base_j + sum_k x_k lin[j, k]."""

    def __init__(self, base: np.ndarray, linear: np.ndarray, box: Box):
        base = np.asarray(base, dtype=float)
        linear = np.asarray(linear, dtype=float)
        d, m = base.shape[0], base.shape[1]
        if linear.shape[:2] != (d, d) or linear.shape[2:] != (m, m):
            raise DimensionMismatch("linear part must have shape (d, d, m, m)")
        for g in base:
            SkewMap(g)
        for row in linear:
            for g in row:
                SkewMap(g)
        super().__init__(d, m, box)
        self.base = base
        self.linear = linear

    def _coeffs_many(self, pts):
        return self.base + np.einsum("pk,jkab->pjab", pts, self.linear)

    def _d_coeffs_many(self, pts, v):
        return np.einsum("pk,jkab->pjab", v, self.linear)


class SampledConnection(ConnectionForm):
    """Coefficient matrices sampled on the half-space grid nodes.

    Each of the d coefficient matrices is interpolated multilinearly and the
    result re-skewed by (a - a^T)/2; interpolation preserves skewness only
    approximately at matrix level.  Smoothness is only piecewise, so
    curvature and holonomy checks on sampled forms carry an extra
    O(grid spacing) error term.
    """

    def __init__(self, grid: HalfSpaceGrid, values: np.ndarray):
        values = np.asarray(values, dtype=float)
        expected = grid.node_shape()
        if values.shape[: grid.n + 1] != expected:
            raise DimensionMismatch(
                f"node array shape {values.shape} does not match grid {expected}")
        d = values.shape[grid.n + 1]
        m = values.shape[-1]
        if d != grid.dim or values.shape[-2] != m:
            raise DimensionMismatch("expected node values of shape grid + (d, m, m)")
        super().__init__(grid.dim, m, grid.box)
        self.grid = grid
        self.values = values
        axes = [grid.lateral_nodes] * grid.n + [grid.z_nodes]
        flat = values.reshape(expected + (d * m * m,))
        self._interp = _Interpolant(axes, flat)

    def _coeffs_many(self, pts):
        try:
            raw = self._interp.values_many(pts)
        except StencilOutOfRange:
            raise OutOfDomain("point outside the sampled connection grid") from None
        k = pts.shape[0]
        c = raw.reshape(k, self.dim_domain, self.dim_fiber, self.dim_fiber)
        return 0.5 * (c - np.swapaxes(c, -1, -2))


class GaugeField:
    """Pointwise orthogonal change of fiber frame x -> phi(x).

    matrices_many maps points (k, d) to (k, m, m); derivative_many, when
    given, maps (points, direction) to (k, m, m) analytic directional
    derivatives, else central differences with step h_gauge are used.
    """

    def __init__(self, dim_fiber: int, matrices_many, derivative_many=None):
        self.dim_fiber = dim_fiber
        self._mats = matrices_many
        self._deriv = derivative_many

    @property
    def has_analytic_derivative(self) -> bool:
        return self._deriv is not None

    def matrices(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        phi = np.asarray(self._mats(pts), dtype=float)
        eye = np.eye(self.dim_fiber)
        defect = np.abs(np.swapaxes(phi, -1, -2) @ phi - eye).max()
        if defect > GAUGE_ORTHO_TOL:
            raise NonOrthogonalGauge(f"gauge matrix defect {defect:.3e} exceeds {GAUGE_ORTHO_TOL:.1e}")
        return phi

    def derivative(self, pts: np.ndarray, v: np.ndarray, h: float) -> np.ndarray:
        pts = np.atleast_2d(pts)
        v = np.asarray(v, dtype=float)
        if self._deriv is not None:
            return np.asarray(self._deriv(pts, v), dtype=float)
        fp1 = np.asarray(self._mats(pts + h * v), dtype=float)
        fm1 = np.asarray(self._mats(pts - h * v), dtype=float)
        fp2 = np.asarray(self._mats(pts + 2 * h * v), dtype=float)
        fm2 = np.asarray(self._mats(pts - 2 * h * v), dtype=float)
        return (-fp2 + 8.0 * fp1 - 8.0 * fm1 + fm2) / (12.0 * h)


class GaugeTransformedConnection(ConnectionForm):
    """form'(x)[v] = -(Dphi(x)[v]) phi(x)^T + phi(x) form(x)[v] phi(x)^T."""

    def __init__(self, inner: ConnectionForm, gauge: GaugeField, h_gauge: float | None = None):
        if gauge.dim_fiber != inner.dim_fiber:
            raise DimensionMismatch("gauge fiber dimension does not match the connection")
        super().__init__(inner.dim_domain, inner.dim_fiber, inner.box)
        self.inner = inner
        self.gauge = gauge
        self.h_gauge = h_gauge if h_gauge is not None else _default_step(inner.box)

    def _coeffs_many(self, pts):
        k, d, m = pts.shape[0], self.dim_domain, self.dim_fiber
        phi = self.gauge.matrices(pts)
        phi_t = np.swapaxes(phi, -1, -2)
        inner_c = self.inner._coeffs_many(pts)
        out = np.empty((k, d, m, m))
        for j in range(d):
            e = np.zeros(d)
            e[j] = 1.0
            dphi = self.gauge.derivative(pts, e, self.h_gauge)
            out[:, j] = -dphi @ phi_t + phi @ inner_c[:, j] @ phi_t
        # Exact in the continuum; finite differencing of phi leaves an O(h^2)
        # skew defect that is projected away after a sanity check.
        defect = np.abs(out + np.swapaxes(out, -1, -2)).max(initial=0.0)
        tol = EVAL_SKEW_TOL * 100 if self.gauge.has_analytic_derivative else 50.0 * self.h_gauge**2
        if defect > max(tol, GAUGE_ORTHO_TOL):
            raise NonOrthogonalGauge(
                f"gauge-transformed coefficients skew defect {defect:.3e} exceeds tolerance")
        return 0.5 * (out - np.swapaxes(out, -1, -2))


class Chart:
    """Diffeomorphism psi with Jacobian, used to pull connections back.

    map_many: (k, d) -> (k, d); jac_many: (k, d) -> (k, d, d) with
    jac[p, a, b] = d psi_a / d x_b.
    """

    MAX_CONDITION = 1e6

    def __init__(self, map_many, jac_many, inverse_many=None):
        self._map = map_many
        self._jac = jac_many
        self._inv = inverse_many

    def map_points(self, pts: np.ndarray) -> np.ndarray:
        return np.asarray(self._map(np.atleast_2d(pts)), dtype=float)

    def jacobians(self, pts: np.ndarray) -> np.ndarray:
        jac = np.asarray(self._jac(np.atleast_2d(pts)), dtype=float)
        cond = np.linalg.cond(jac).max()
        if not np.isfinite(cond) or cond >= self.MAX_CONDITION:
            raise SingularInput(f"chart Jacobian condition number {cond:.3e} too large")
        return jac

    def inverse_points(self, pts: np.ndarray) -> np.ndarray:
        if self._inv is None:
            raise ValueError("chart has no inverse")
        return np.asarray(self._inv(np.atleast_2d(pts)), dtype=float)


class PullbackConnection(ConnectionForm):
    """(psi* form)(x)[v] = form(psi(x))[Dpsi(x) v]."""

    def __init__(self, inner: ConnectionForm, chart: Chart, box: Box):
        super().__init__(inner.dim_domain, inner.dim_fiber, box)
        self.inner = inner
        self.chart = chart

    def _coeffs_many(self, pts):
        mapped = self.chart.map_points(pts)
        self.inner.box.require(mapped, pad=1e-9 * self.inner.box.diameter,
                               what="chart image")
        jac = self.chart.jacobians(pts)
        inner_c = self.inner._coeffs_many(mapped)
        return np.einsum("pab,paij->pbij", jac, inner_c)


class BoundaryRestriction(ConnectionForm):
    """Restriction of a half-space connection to the boundary hyperplane:
    form_par(x)[v] = form((x, 0))[(v, 0)]."""

    def __init__(self, inner: ConnectionForm):
        n = inner.dim_domain - 1
        box = Box(inner.box.lo[:n], inner.box.hi[:n])
        super().__init__(n, inner.dim_fiber, box)
        self.inner = inner

    def _coeffs_many(self, pts):
        c = self.inner._coeffs_many(embed_boundary(pts))
        return c[:, : self.dim_domain]


def gauge_transform(form: ConnectionForm, gauge: GaugeField,
                    h_gauge: float | None = None) -> GaugeTransformedConnection:
    """Connection form induced by a pointwise orthogonal frame change."""
    return GaugeTransformedConnection(form, gauge, h_gauge)


def pullback(form: ConnectionForm, chart: Chart, box: Box | None = None) -> PullbackConnection:
    """Connection form induced on a chart domain by composing with the Jacobian."""
    return PullbackConnection(form, chart, box if box is not None else form.box)


def boundary_restriction(form: ConnectionForm) -> BoundaryRestriction:
    return BoundaryRestriction(form)


# ---------------------------------------------------------------------------
# Covariant derivative, curvature, and their defect checks.

def covariant_derivative(field, form: ConnectionForm, x, h: float | None = None) -> np.ndarray:
    """The matrix of h -> DU(x)[h] + form(x)[h] U(x), shape (m, d)."""
    return covariant_derivative_many(field, form, np.atleast_2d(x), h)[0]


def covariant_derivative_many(field, form: ConnectionForm, pts: np.ndarray,
                              h: float | None = None) -> np.ndarray:
    pts = np.atleast_2d(pts)
    if h is None:
        h = form.fd_step()
    vals = field.values_many(pts)
    jac = field.jacobian_many(pts, h)
    c = form.coeffs_many(pts, pad=2.5 * h)
    gamma_term = np.einsum("pjab,pb->paj", c, vals)
    return jac + gamma_term


def curvature_many(form: ConnectionForm, pts: np.ndarray, v, w,
                   h: float | None = None) -> np.ndarray:
    """Curvature two-form entries at a batch of points, shape (k, m, m).

    K(x)[v, w] = Dform(x)[v, w] - Dform(x)[w, v]
               + form(x)[v] form(x)[w] - form(x)[w] form(x)[v].

    v and w may be single directions (d,) or per-point stacks (k, d).
    """
    pts = np.atleast_2d(pts)
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    if v.ndim == 1:
        v = np.broadcast_to(v, pts.shape)
    if w.ndim == 1:
        w = np.broadcast_to(w, pts.shape)
    dv = form.d_coeffs_many(pts, v, h)
    dw = form.d_coeffs_many(pts, w, h)
    d_vw = np.einsum("pjab,pj->pab", dv, w)
    d_wv = np.einsum("pjab,pj->pab", dw, v)
    c = form.coeffs_many(pts)
    gv = np.einsum("pjab,pj->pab", c, v)
    gw = np.einsum("pjab,pj->pab", c, w)
    return d_vw - d_wv + gv @ gw - gw @ gv


def curvature(form: ConnectionForm, x, v, w, h: float | None = None) -> SkewMap:
    return SkewMap(curvature_many(form, np.atleast_2d(x), v, w, h)[0])


def _orthonormal_pairs(rng: np.random.Generator, d: int, count: int) -> np.ndarray:
    """Random orthonormal direction pairs, shape (count, 2, d)."""
    out = np.empty((count, 2, d))
    for i in range(count):
        v = rng.normal(size=d)
        v /= np.linalg.norm(v)
        w = rng.normal(size=d)
        w -= (w @ v) * v
        norm = np.linalg.norm(w)
        while norm < 1e-9:  # essentially impossible, but keep it total
            w = rng.normal(size=d)
            w -= (w @ v) * v
            norm = np.linalg.norm(w)
        out[i, 0] = v
        out[i, 1] = w / norm
    return out


def curvature_sup_norm(form: ConnectionForm, box: Box | None = None, samples: int = 128,
                       h: float | None = None, seed: int = 0, extra_pairs: int = 8) -> float:
    """Sampled sup over x and orthonormal (v, w) of op_norm(K(x)[v, w]).

    Sample points are drawn from a fixed seeded stream, so enlarging the
    sample count refines a nested point set and the estimate is monotone
    nondecreasing along it.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if box is None:
        box = form.box
    d = form.dim_domain
    rng = np.random.default_rng(seed)
    pts = np.vstack([0.5 * (box.lo + box.hi), box.sample(rng, samples)])
    pairs = [(np.eye(d)[i], np.eye(d)[j]) for i in range(d) for j in range(i + 1, d)]
    pairs += [(p[0], p[1]) for p in _orthonormal_pairs(rng, d, extra_pairs)]
    best = 0.0
    for v, w in pairs:
        k = curvature_many(form, pts, v, w, h)
        best = max(best, float(op_norm_many(k).max()))
    return best


def commutator_defect(field, form: ConnectionForm, x, v, w, h: float) -> float:
    """Defect of the second-covariant-derivative commutation identity.

    The left-hand side nests two covariant derivatives, the outer one taken
    with 2nd-order central differences of step h; the reference curvature
    term is computed independently of h.  Expected O(h^2).
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)

    def cov_dir(pts, direction):
        dmat = covariant_derivative_many(field, form, pts)
        return np.einsum("paj,j->pa", dmat, direction)

    def outer(direction_outer, direction_inner):
        pts = np.vstack([x + h * direction_outer, x - h * direction_outer, x])
        g = cov_dir(pts, direction_inner)
        fd = (g[0] - g[1]) / (2.0 * h)
        gamma_v = np.tensordot(direction_outer, form.coeffs(x, pad=2.5 * h), axes=(0, 0))
        return fd + gamma_v @ g[2]

    lhs = outer(v, w) - outer(w, v)
    rhs = curvature_many(form, x[None], v, w)[0] @ field.value(x)
    return float(np.linalg.norm(lhs - rhs))


def wedge_norm(v, w) -> float:
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    g = (v @ v) * (w @ w) - (v @ w) ** 2
    return float(np.sqrt(max(g, 0.0)))
