"""Trace restriction, the transported mollification extension operator, and
empirical reports for the trace/extension inequalities.

The extension averages transported boundary values against a scaled smooth
bump over the ball of radius equal to the height, transports the average up
the vertical segment, and damps by exp(-beta z^2) with beta at least the
measured curvature sup.  The boundary row is set to the boundary field
exactly, so composing with the trace is the identity there.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .connection import ConnectionForm, boundary_restriction, curvature_sup_norm
from .errors import ConfigError, OutOfDomain
from .fields import (
    AnalyticBoundaryField,
    AnalyticField,
    SampledBoundaryField,
    SampledField,
)
from .grids import HalfSpaceGrid, mesh_points
from .sobolev import (
    GagliardoParams,
    boundary_lp_energy,
    gagliardo_report,
    weighted_w1p_energy,
)
from .transport import segment_transports

_GAUSS_POINTS = 96


class Mollifier:
    """Standard smooth bump scaled to unit mass.

    profile(y) = exp(-1/(1 - |y|^2)) inside the open unit ball, zero outside;
    the normalization constant is fixed numerically so the integral over R^n
    is 1 within 1e-8.
    """

    _cache: dict[int, "Mollifier"] = {}

    def __init__(self, n: int, normalization: float):
        self.n = n
        self.normalization = normalization

    @staticmethod
    def profile(y: np.ndarray) -> np.ndarray:
        """Unnormalized bump at points (k, n) or radii (k,)."""
        y = np.asarray(y, dtype=float)
        r2 = y * y if y.ndim == 1 else np.sum(y * y, axis=-1)
        out = np.zeros_like(r2)
        inside = r2 < 1.0
        out[inside] = np.exp(-1.0 / (1.0 - r2[inside]))
        return out

    @classmethod
    def standard(cls, n: int) -> "Mollifier":
        if n not in cls._cache:
            # Radial reduction: integral = |S^(n-1)| * int_0^1 r^(n-1) b(r) dr,
            # evaluated by Gauss-Legendre (the integrand is smooth and flat
            # at both ends).
            from math import gamma, pi

            x, w = np.polynomial.legendre.leggauss(_GAUSS_POINTS)
            r = 0.5 * (x + 1.0)
            ww = 0.5 * w
            radial = float(np.sum(ww * r ** (n - 1) * cls.profile(r)))
            sphere = 2.0 * pi ** (n / 2.0) / gamma(n / 2.0)
            cls._cache[n] = cls(n, 1.0 / (sphere * radial))
        return cls._cache[n]

    def values(self, y: np.ndarray) -> np.ndarray:
        return self.normalization * self.profile(y)

    def scaled_values(self, y: np.ndarray, t: float) -> np.ndarray:
        """phi_t(y) = t^-n * phi(y / t)."""
        return self.values(np.asarray(y, dtype=float) / t) / t**self.n


@dataclass(frozen=True)
class ExtensionConfig:
    """Extension parameters: curvature budget beta, exponents, grid, and the
    transport step count.  beta must dominate the measured curvature sup of
    the supplied connection (plus 1/height^2 under the local convention)."""

    beta: float
    s: float
    p: float
    grid: HalfSpaceGrid
    steps: int
    local_variant: bool = False

    def __post_init__(self):
        GagliardoParams(self.s, self.p)
        if self.beta < 0.0:
            raise ConfigError("beta must be nonnegative")

    def required_beta(self, form: ConnectionForm) -> float:
        measured = curvature_sup_norm(form, self.grid.box)
        if self.local_variant:
            measured += 1.0 / self.grid.height**2
        return measured

    def validate_for(self, form: ConnectionForm):
        required = self.required_beta(form)
        if self.beta < required * (1.0 - 1e-9):
            raise ConfigError(
                f"beta={self.beta} below the curvature requirement {required:.6e}")

    @classmethod
    def auto(cls, form: ConnectionForm, s: float, p: float, grid: HalfSpaceGrid,
             steps: int, local_variant: bool = False) -> "ExtensionConfig":
        # 1.05 x measured sup absorbs the sampling slack of the sup estimate.
        beta = 1.05 * curvature_sup_norm(form, grid.box)
        if local_variant:
            beta = max(1.0, beta + 1.0 / grid.height**2)
        return cls(beta=beta, s=s, p=p, grid=grid, steps=steps, local_variant=local_variant)


def trace(field):
    """Restriction to the boundary hyperplane z = 0."""
    if isinstance(field, SampledField):
        grid = field.grid
        return SampledBoundaryField(grid.n, grid.half_width, field.values[..., 0, :])

    def func(x):
        x = np.atleast_2d(x)
        z = np.concatenate([x, np.zeros((x.shape[0], 1))], axis=1)
        return field.values_many(z)

    jac = None
    if getattr(field, "_jac", None) is not None:
        def jac(x):
            x = np.atleast_2d(x)
            z = np.concatenate([x, np.zeros((x.shape[0], 1))], axis=1)
            return field.jacobian_many(z)[:, :, : x.shape[1]]

    return AnalyticBoundaryField(
        field.dim_fiber, func, jac,
        support_center=None if field.support_center is None else field.support_center[:-1],
        support_radius=field.support_radius)


def _support_reach(u, centers: np.ndarray, values: np.ndarray, dx: float) -> float:
    """Max coordinate reach of the support, from metadata or sampled values."""
    if u.support_radius is not None:
        center = u.support_center if u.support_center is not None else 0.0
        return float(np.abs(center).max(initial=0.0) + u.support_radius)
    norms = np.linalg.norm(values, axis=1)
    live = norms > 0.0
    if not np.any(live):
        return 0.0
    return float(np.abs(centers[live]).max()) + dx


# Vertical taper: flat up to this fraction of the grid height, then a smooth
# descent to zero at the top, so the sampled extension honestly satisfies the
# emulated compact support without a jump at the top layer.
TAPER_START = 0.75
# Layers thinner than this many boundary cells refine the ball quadrature.
FINE_LAYER_CELLS = 4.0
MAX_BALL_REFINEMENT = 8


def _vertical_taper(z, height: float):
    from .fields import radial_window

    return radial_window(np.asarray(z, dtype=float), TAPER_START * height, height)


def _fine_ball_lattice(grid, q: int):
    """Boundary cell centers subdivided q times per axis."""
    n = grid.n
    n_fine = grid.spec.n_lat * q
    delta = grid.dx / q
    axis = -grid.half_width + (np.arange(n_fine) + 0.5) * delta
    return mesh_points([axis] * n), delta


def extend(u, form: ConnectionForm, cfg: ExtensionConfig) -> SampledField:
    """Transported mollification extension of a boundary field.

    For each interior node (x, z): average the boundary values transported to
    x against the bump scaled to width z over the ball |x - y| <= z (midpoint
    weights on the boundary lattice, subdivided where the ball spans only a
    few cells), transport the average up the vertical segment, and damp by
    exp(-beta z^2) times a fixed smooth vertical taper.  Heights below one
    boundary cell skip the mollification (the ball is sub-cell) but keep the
    vertical transport and damping, so gauge equivariance holds to integrator
    accuracy; the boundary row is the boundary field exactly.  The result is
    linear in u node by node.
    """
    cfg.validate_for(form)
    grid = cfg.grid
    n, m = grid.n, u.dim_fiber
    dx = grid.dx
    z_nodes = grid.z_nodes
    nodes = grid.boundary_nodes()
    centers = grid.boundary_centers()

    u_nodes = u.values_many(nodes)
    u_cells = u.values_many(centers)

    reach = _support_reach(u, centers, u_cells, dx)
    # The transported ball at height z pushes support out by z; everything
    # must stay clear of the two-cell lateral collar.
    if reach + z_nodes[-1] > grid.half_width - 2.0 * dx + 1e-12:
        raise OutOfDomain(
            "boundary support plus the mollification reach at the top height "
            f"({reach + z_nodes[-1]:.4f}) does not clear the lateral collar "
            f"({grid.half_width - 2.0 * dx:.4f})")

    moll = Mollifier.standard(n)
    form_par = boundary_restriction(form)

    def layer_scale(z):
        return float(np.exp(-cfg.beta * z**2) * _vertical_taper(z, grid.height))

    n_nodes = nodes.shape[0]
    n_layers = z_nodes.shape[0]
    flat = np.zeros((n_nodes, n_layers, m))
    flat[:, 0] = u_nodes

    coarse_layers, fine_layers = [], []
    conv_vals = {}
    for j in range(1, n_layers):
        z = float(z_nodes[j])
        if z < dx:
            conv_vals[j] = u_nodes  # sub-cell ball: plain value, still lifted
        elif z < FINE_LAYER_CELLS * dx:
            fine_layers.append(j)
        else:
            coarse_layers.append(j)

    live = np.linalg.norm(u_cells, axis=1) > 0.0
    sup_idx = np.where(live)[0]
    if sup_idx.size and coarse_layers:
        diff = nodes[:, None, :] - centers[sup_idx][None, :, :]  # (Nn, S, n)
        dist = np.linalg.norm(diff, axis=2)
        pair_node, pair_cell = np.nonzero(dist < float(z_nodes[-1]))
        if pair_node.size:
            mats = segment_transports(
                form_par, nodes[pair_node], centers[sup_idx][pair_cell], cfg.steps)
            transported = np.einsum("kab,kb->ka", mats, u_cells[sup_idx][pair_cell])
            pair_diff = diff[pair_node, pair_cell]
            vol = dx**n
            for j in coarse_layers:
                w = moll.scaled_values(pair_diff, float(z_nodes[j])) * vol
                contrib = w[:, None] * transported
                vals = np.zeros((n_nodes, m))
                for a in range(m):
                    vals[:, a] = np.bincount(pair_node, weights=contrib[:, a],
                                             minlength=n_nodes)
                conv_vals[j] = vals

    for j in fine_layers:
        z = float(z_nodes[j])
        q = min(MAX_BALL_REFINEMENT, int(np.ceil(FINE_LAYER_CELLS * dx / z)))
        fine_pts, delta = _fine_ball_lattice(grid, q)
        fine_u = u.values_many(fine_pts)
        fine_live = np.linalg.norm(fine_u, axis=1) > 0.0
        vals = np.zeros((n_nodes, m))
        if np.any(fine_live):
            pts = fine_pts[fine_live]
            uv = fine_u[fine_live]
            diff = nodes[:, None, :] - pts[None, :, :]
            pair_node, pair_pt = np.nonzero(np.linalg.norm(diff, axis=2) < z)
            if pair_node.size:
                mats = segment_transports(form_par, nodes[pair_node], pts[pair_pt],
                                          cfg.steps)
                moved = np.einsum("kab,kb->ka", mats, uv[pair_pt])
                w = moll.scaled_values(diff[pair_node, pair_pt], z) * delta**n
                contrib = w[:, None] * moved
                for a in range(m):
                    vals[:, a] = np.bincount(pair_node, weights=contrib[:, a],
                                             minlength=n_nodes)
        conv_vals[j] = vals

    conv_layers = sorted(conv_vals)
    if conv_layers:
        active = np.where(np.any([np.linalg.norm(conv_vals[j], axis=1) > 0.0
                                  for j in conv_layers], axis=0))[0]
        if active.size:
            starts, ends = [], []
            for j in conv_layers:
                top = np.concatenate(
                    [nodes[active], np.full((active.size, 1), z_nodes[j])], axis=1)
                bottom = np.concatenate([nodes[active], np.zeros((active.size, 1))],
                                        axis=1)
                starts.append(top)
                ends.append(bottom)
            vmats = segment_transports(
                form, np.concatenate(starts), np.concatenate(ends), cfg.steps)
            vmats = vmats.reshape(len(conv_layers), active.size, m, m)
            for row, j in enumerate(conv_layers):
                flat[active, j] = layer_scale(float(z_nodes[j])) * np.einsum(
                    "kab,kb->ka", vmats[row], conv_vals[j][active])

    flat[:, -1] = 0.0  # the taper vanishes at the top; make it exact
    values = flat.reshape(grid.node_shape() + (m,))
    return SampledField(grid, values)


def extend_pointwise(u, form: ConnectionForm, beta: float, points: np.ndarray,
                     steps: int, ball_resolution: int = 64,
                     taper_height: float | None = None) -> np.ndarray:
    """Evaluate the extension formula at arbitrary half-space points with a
    fine midpoint quadrature of the mollification ball (reference evaluation,
    independent of the output grid).  When taper_height is given the smooth
    vertical taper used by the grid-based operator is applied as well."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    n = points.shape[1] - 1
    m = u.dim_fiber
    moll = Mollifier.standard(n)
    form_par = boundary_restriction(form)
    out = np.zeros((points.shape[0], m))
    for row, z in enumerate(points):
        zp, t = z[:n], z[n]
        if t <= 0.0:
            out[row] = u.value(zp)
            continue
        axes = [np.linspace(c - t, c + t, ball_resolution + 1) for c in zp]
        axes = [0.5 * (a[:-1] + a[1:]) for a in axes]
        ball = mesh_points(axes)
        w = (2.0 * t / ball_resolution) ** n
        phi = moll.scaled_values(zp - ball, t)
        uv = u.values_many(ball)
        keep = (phi > 0.0) & (np.linalg.norm(uv, axis=1) > 0.0)
        if np.any(keep):
            mats = segment_transports(
                form_par, np.broadcast_to(zp, ball[keep].shape), ball[keep], steps)
            moved = np.einsum("kab,kb->ka", mats, uv[keep])
            v0 = w * np.einsum("k,ka->a", phi[keep], moved)
        else:
            v0 = np.zeros(m)
        vmat = segment_transports(form, z[None], np.append(zp, 0.0)[None], steps)[0]
        scale = np.exp(-beta * t**2)
        if taper_height is not None:
            scale *= float(_vertical_taper(t, taper_height))
        out[row] = scale * (vmat @ v0)
    return out


@dataclass
class InequalityReport:
    """One tested inequality: both sides, their ratio, and grid metadata."""

    name: str
    lhs: float
    rhs: float
    meta: dict = dc_field(default_factory=dict)
    series: list | None = None

    @property
    def ratio(self) -> float:
        if self.lhs == 0.0:
            return 0.0
        if not np.isfinite(self.rhs):
            return 0.0
        if self.rhs == 0.0:
            return float("inf")
        return self.lhs / self.rhs

    def to_dict(self) -> dict:
        out = {"name": self.name, "lhs": self.lhs, "rhs": self.rhs, "ratio": self.ratio}
        out.update(self.meta)
        return out


def trace_inequality_report(field, form: ConnectionForm, s: float, p: float,
                            beta: float, grid: HalfSpaceGrid, steps: int):
    """Both trace estimates for a half-space field.

    Report 1 compares the boundary seminorm (p-th power) against the weighted
    bulk energy with the beta^(p/2) mass term; report 2 compares the boundary
    mass against the product of the two bulk integrals with exponents
    (1-s, s).  No constant is asserted; ratios are recorded.
    """
    params = GagliardoParams(s, p)
    alpha = params.alpha
    u = trace(field)
    form_par = boundary_restriction(form)
    sem = gagliardo_report(u, form_par, s, p, grid, steps)
    grad_term, mass_term = weighted_w1p_energy(field, form, p, alpha, grid)
    meta = {"n_lat": grid.spec.n_lat, "n_vert": grid.spec.n_vert, "s": s, "p": p,
            "beta": beta, "steps": steps}
    report1 = InequalityReport(
        "trace-seminorm", sem.p_power, grad_term + beta ** (p / 2.0) * mass_term, dict(meta))
    report2 = InequalityReport(
        "trace-mass-interpolation", boundary_lp_energy(u, grid, p),
        grad_term ** (1.0 - s) * mass_term**s, dict(meta))
    return report1, report2


def extension_inequality_report(u, form: ConnectionForm, s: float, p: float,
                                beta: float, grid: HalfSpaceGrid, steps: int):
    """Both extension estimates for a boundary field.

    Builds the extension, then compares its weighted gradient energy against
    the boundary seminorm plus the beta^(sp/2) mass term, and its weighted
    mass against the boundary mass scaled by beta^(-(1-s)p/2).
    """
    params = GagliardoParams(s, p)
    alpha = params.alpha
    cfg = ExtensionConfig(beta=beta, s=s, p=p, grid=grid, steps=steps)
    ext = extend(u, form, cfg)
    grad_term, mass_term = weighted_w1p_energy(ext, form, p, alpha, grid)
    sem = gagliardo_report(u, boundary_restriction(form), s, p, grid, steps)
    lp_u = boundary_lp_energy(u, grid, p)
    meta = {"n_lat": grid.spec.n_lat, "n_vert": grid.spec.n_vert, "s": s, "p": p,
            "beta": beta, "steps": steps}
    report1 = InequalityReport(
        "extension-gradient", grad_term, sem.p_power + beta ** (s * p / 2.0) * lp_u, dict(meta))
    rhs2 = lp_u / beta ** ((1.0 - s) * p / 2.0) if beta > 0 else float("inf")
    report2 = InequalityReport("extension-mass", mass_term, rhs2, dict(meta))
    return report1, report2
