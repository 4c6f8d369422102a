"""Named analytic families used by the CLI and the verification suites.

Connection families
    zero                 flat connection
    constant-abelian     fiber R^2, constant vector potential A
    flux-abelian         fiber R^2, A(x) = B/2 (-x2, x1, 0, ...): constant flux B
    constant-so3         fiber R^3, constant coefficient combinations of L1..L3
    affine-so3           fiber R^3, coefficients affine in position
    gauge-wrapped        any inner family conjugated by a named gauge

Every family's curvature has a closed form: zero for the flat and the
constant-potential case, the constant flux B for flux-abelian, the
coefficient commutators for constant-so3, and an affine-plus-commutator
expression for affine-so3; suites use these as oracles.

Field families: gaussian-bump, windowed-linear, windowed-constant, all
multiplied by a flat-core smooth radial cutoff so supports are compact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .connection import (
    AbelianMagneticConnection,
    AffineConnection,
    Chart,
    ConnectionForm,
    ConstantConnection,
    GaugeField,
    GaugeTransformedConnection,
    ZeroConnection,
)
from .errors import ConfigError
from .fields import (
    AnalyticBoundaryField,
    AnalyticField,
    radial_window,
    radial_window_deriv,
)
from .grids import Box, HalfSpaceGrid, QuadratureSpec
from .lie import so3_generators

J2 = np.array([[0.0, -1.0], [1.0, 0.0]])


def _require(spec: dict, key: str, context: str):
    if key not in spec:
        raise ConfigError(f"missing key '{key}' in {context}")
    return spec[key]


# ---------------------------------------------------------------------------
# Connections.

def make_connection(spec: dict, dim_domain: int, box: Box) -> ConnectionForm:
    family = _require(spec, "family", "connection spec")
    if family == "zero":
        m = int(spec.get("m", 2))
        return ZeroConnection(dim_domain, m, box)

    if family == "constant-abelian":
        a = np.asarray(_require(spec, "A", "constant-abelian"), dtype=float)
        if a.shape != (dim_domain,):
            raise ConfigError(f"constant-abelian potential must have {dim_domain} entries")

        def potential(pts, _a=a):
            return np.broadcast_to(_a, pts.shape).copy()

        def jac(pts, _d=dim_domain):
            return np.zeros((pts.shape[0], _d, _d))

        return AbelianMagneticConnection(potential, box, jacobian_many=jac)

    if family == "flux-abelian":
        b = float(_require(spec, "B", "flux-abelian"))
        d = dim_domain

        def potential(pts, _b=b):
            out = np.zeros_like(pts)
            out[:, 0] = -0.5 * _b * pts[:, 1]
            out[:, 1] = 0.5 * _b * pts[:, 0]
            return out

        jmat = np.zeros((d, d))
        jmat[0, 1] = -0.5 * b
        jmat[1, 0] = 0.5 * b

        def jac(pts, _j=jmat):
            return np.broadcast_to(_j, (pts.shape[0], d, d)).copy()

        return AbelianMagneticConnection(potential, box, jacobian_many=jac)

    if family == "constant-so3":
        coeffs = np.asarray(_require(spec, "coeffs", "constant-so3"), dtype=float)
        if coeffs.shape != (dim_domain, 3):
            raise ConfigError(f"constant-so3 coeffs must have shape ({dim_domain}, 3)")
        gens = np.stack(so3_generators())
        mats = np.einsum("jk,kab->jab", coeffs, gens)
        return ConstantConnection(mats, box)

    if family == "affine-so3":
        base = np.asarray(_require(spec, "base", "affine-so3"), dtype=float)
        lin = np.asarray(_require(spec, "linear", "affine-so3"), dtype=float)
        if base.shape != (dim_domain, 3) or lin.shape != (dim_domain, dim_domain, 3):
            raise ConfigError("affine-so3 needs base (d, 3) and linear (d, d, 3) combos")
        gens = np.stack(so3_generators())
        return AffineConnection(np.einsum("jk,kab->jab", base, gens),
                                np.einsum("jlk,kab->jlab", lin, gens), box)

    if family == "gauge-wrapped":
        inner = make_connection(_require(spec, "inner", "gauge-wrapped"), dim_domain, box)
        gauge = make_gauge(_require(spec, "gauge", "gauge-wrapped"), inner.dim_fiber)
        return GaugeTransformedConnection(inner, gauge)

    raise ConfigError(f"unknown connection family '{family}'")


# ---------------------------------------------------------------------------
# Gauges.  Both kinds exponentiate a fixed unit generator against a scalar
# phase theta(x) = amplitude * sin(wave . x), so the derivative is exact.

def _phase_closures(amplitude: float, wave: np.ndarray):
    def theta(pts):
        return amplitude * np.sin(pts @ wave)

    def dtheta(pts, v):
        return amplitude * np.cos(pts @ wave) * (np.asarray(v, dtype=float) @ wave)

    return theta, dtheta


def make_gauge(spec: dict, dim_fiber: int) -> GaugeField:
    kind = _require(spec, "kind", "gauge spec")
    amplitude = float(spec.get("amplitude", 0.5))
    wave = np.asarray(_require(spec, "wave", "gauge spec"), dtype=float)
    theta, dtheta = _phase_closures(amplitude, wave)

    if kind == "abelian-phase":
        if dim_fiber != 2:
            raise ConfigError("abelian-phase gauge needs fiber dimension 2")

        def mats(pts):
            t = theta(pts)
            c, s = np.cos(t), np.sin(t)
            out = np.empty((pts.shape[0], 2, 2))
            out[:, 0, 0] = c
            out[:, 0, 1] = -s
            out[:, 1, 0] = s
            out[:, 1, 1] = c
            return out

        def deriv(pts, v):
            return dtheta(pts, v)[:, None, None] * np.einsum("ab,kbc->kac", J2, mats(pts))

        return GaugeField(2, mats, deriv)

    if kind == "so3-axis":
        if dim_fiber != 3:
            raise ConfigError("so3-axis gauge needs fiber dimension 3")
        axis = np.asarray(_require(spec, "axis", "so3-axis gauge"), dtype=float)
        axis = axis / np.linalg.norm(axis)
        l1, l2, l3 = so3_generators()
        gen = axis[0] * l1 + axis[1] * l2 + axis[2] * l3
        gen2 = gen @ gen

        def mats(pts, _g=gen, _g2=gen2):
            t = theta(pts)
            return (np.eye(3) + np.sin(t)[:, None, None] * _g
                    + (1.0 - np.cos(t))[:, None, None] * _g2)

        def deriv(pts, v, _g=gen):
            return dtheta(pts, v)[:, None, None] * np.einsum("ab,kbc->kac", _g, mats(pts))

        return GaugeField(3, mats, deriv)

    raise ConfigError(f"unknown gauge kind '{kind}'")


# ---------------------------------------------------------------------------
# Fields.

def _windowed_family(spec: dict, dim: int, boundary: bool):
    family = _require(spec, "family", "field spec")
    center = np.asarray(_require(spec, "center", family), dtype=float)
    if center.shape != (dim,):
        raise ConfigError(f"field center must have {dim} entries")
    core = float(_require(spec, "core", family))
    outer = float(_require(spec, "outer", family))
    if not (0.0 < core < outer):
        raise ConfigError("field window needs 0 < core < outer")

    def radii(pts):
        diff = pts - center
        return diff, np.linalg.norm(diff, axis=1)

    def window_and_slope(r):
        w = radial_window(r, core, outer)
        dw = radial_window_deriv(r, core, outer)
        return w, dw

    if family == "gaussian-bump":
        amp = np.asarray(_require(spec, "amplitude", family), dtype=float)
        width = float(_require(spec, "width", family))

        def func(pts):
            diff, r = radii(pts)
            g = np.exp(-(r / width) ** 2) * radial_window(r, core, outer)
            return g[:, None] * amp

        def jac(pts):
            diff, r = radii(pts)
            e = np.exp(-(r / width) ** 2)
            w, dw = window_and_slope(r)
            radial_part = e * dw  # d/dr of the window factor
            # d/dr of the gaussian factor, times the window
            radial_part = radial_part + (-2.0 * r / width**2) * e * w
            with np.errstate(invalid="ignore", divide="ignore"):
                unit = np.where(r[:, None] > 1e-12, diff / r[:, None], 0.0)
            grad_g = radial_part[:, None] * unit
            return amp[None, :, None] * grad_g[:, None, :]

        m = amp.shape[0]
    elif family == "windowed-linear":
        mat = np.asarray(_require(spec, "matrix", family), dtype=float)
        offset = np.asarray(_require(spec, "offset", family), dtype=float)
        if mat.shape[1] != dim or offset.shape[0] != mat.shape[0]:
            raise ConfigError("windowed-linear needs matrix (m, d) and offset (m,)")

        def func(pts):
            diff, r = radii(pts)
            w = radial_window(r, core, outer)
            return (diff @ mat.T + offset) * w[:, None]

        def jac(pts):
            diff, r = radii(pts)
            w, dw = window_and_slope(r)
            vals = diff @ mat.T + offset
            with np.errstate(invalid="ignore", divide="ignore"):
                unit = np.where(r[:, None] > 1e-12, diff / r[:, None], 0.0)
            return (w[:, None, None] * mat[None, :, :]
                    + vals[:, :, None] * (dw[:, None] * unit)[:, None, :])

        m = mat.shape[0]
    elif family == "windowed-constant":
        value = np.asarray(_require(spec, "value", family), dtype=float)

        def func(pts):
            _, r = radii(pts)
            return radial_window(r, core, outer)[:, None] * value

        def jac(pts):
            diff, r = radii(pts)
            _, dw = window_and_slope(r)
            with np.errstate(invalid="ignore", divide="ignore"):
                unit = np.where(r[:, None] > 1e-12, diff / r[:, None], 0.0)
            return value[None, :, None] * (dw[:, None] * unit)[:, None, :]

        m = value.shape[0]
    else:
        raise ConfigError(f"unknown field family '{family}'")

    cls = AnalyticBoundaryField if boundary else AnalyticField
    return cls(m, func, jac, support_center=center, support_radius=outer)


def make_field(spec: dict, dim_domain: int) -> AnalyticField:
    return _windowed_family(spec, dim_domain, boundary=False)


def make_boundary_field(spec: dict, n: int) -> AnalyticBoundaryField:
    return _windowed_family(spec, n, boundary=True)


def gauge_apply_field(gauge: GaugeField, u, embed: bool = False):
    """Pointwise frame change x -> phi(x) u(x) with the chain-rule Jacobian.

    With embed=True the input is a boundary field and the gauge is evaluated
    on the boundary hyperplane (phi restricted to z = 0, lateral derivatives
    only).
    """
    from .grids import embed_boundary

    lift = embed_boundary if embed else (lambda pts: pts)

    def func(pts):
        pts = np.atleast_2d(pts)
        return np.einsum("kab,kb->ka", gauge.matrices(lift(pts)), u.values_many(pts))

    has_jac = getattr(u, "_jac", None) is not None or hasattr(u, "_interp")
    jac = None
    if has_jac and gauge.has_analytic_derivative:
        def jac(pts):
            pts = np.atleast_2d(pts)
            k, dim = pts.shape
            lifted = lift(pts)
            phis = gauge.matrices(lifted)
            vals = u.values_many(pts)
            out = np.einsum("kab,kbj->kaj", phis, u.jacobian_many(pts))
            for j in range(dim):
                e = np.zeros(lifted.shape[1])
                e[j] = 1.0
                dphi = gauge.derivative(lifted, e, 1e-3)
                out[:, :, j] += np.einsum("kab,kb->ka", dphi, vals)
            return out

    cls = AnalyticBoundaryField if embed else AnalyticField
    return cls(u.dim_fiber, func, jac,
               support_center=getattr(u, "support_center", None),
               support_radius=getattr(u, "support_radius", None))


# ---------------------------------------------------------------------------
# Charts.

def make_chart(spec: dict, dim: int) -> Chart:
    kind = _require(spec, "kind", "chart spec")
    if kind == "identity":
        return Chart(lambda pts: pts.copy(),
                     lambda pts: np.broadcast_to(np.eye(dim), (pts.shape[0], dim, dim)).copy(),
                     inverse_many=lambda pts: pts.copy())
    if kind == "dilation":
        factor = float(_require(spec, "factor", "dilation chart"))

        return Chart(lambda pts: factor * pts,
                     lambda pts: np.broadcast_to(factor * np.eye(dim),
                                                 (pts.shape[0], dim, dim)).copy(),
                     inverse_many=lambda pts: pts / factor)
    if kind == "rotation":
        angle = float(_require(spec, "angle", "rotation chart"))
        i, j = spec.get("axes", (0, 1))
        q = np.eye(dim)
        c, s = np.cos(angle), np.sin(angle)
        q[i, i] = c
        q[i, j] = -s
        q[j, i] = s
        q[j, j] = c

        return Chart(lambda pts: pts @ q.T,
                     lambda pts: np.broadcast_to(q, (pts.shape[0], dim, dim)).copy(),
                     inverse_many=lambda pts: pts @ q)
    if kind == "shear":
        eps = np.asarray(_require(spec, "eps", "shear chart"), dtype=float)
        wave = np.asarray(_require(spec, "wave", "shear chart"), dtype=float)
        if eps.shape != (dim,) or wave.shape != (dim,):
            raise ConfigError("shear chart needs eps (d,) and wave (d,)")

        def mapper(pts):
            return pts + np.sin(pts @ wave)[:, None] * eps

        def jac(pts):
            base = np.broadcast_to(np.eye(dim), (pts.shape[0], dim, dim)).copy()
            return base + np.cos(pts @ wave)[:, None, None] * np.outer(eps, wave)

        return Chart(mapper, jac)
    raise ConfigError(f"unknown chart kind '{kind}'")


# ---------------------------------------------------------------------------
# Scenario assembly.

@dataclass
class Scenario:
    name: str
    n: int
    m: int
    grid: HalfSpaceGrid
    form: ConnectionForm
    field: AnalyticField | None
    boundary_field: AnalyticBoundaryField | None
    gauge: GaugeField | None
    s: float
    p: float
    beta: float | str
    steps: int
    seed: int
    config: dict

    @property
    def dim(self) -> int:
        return self.n + 1

    def gauged_form(self) -> ConnectionForm:
        if self.gauge is None:
            raise ConfigError(f"scenario '{self.name}' declares no gauge")
        return GaugeTransformedConnection(self.form, self.gauge)

    def resolve_beta(self) -> float:
        from .connection import curvature_sup_norm

        if self.beta == "auto":
            return 1.05 * curvature_sup_norm(self.form, self.grid.box)
        return float(self.beta)


def build_scenario(config: dict) -> Scenario:
    dims = _require(config, "dims", "config")
    n = int(_require(dims, "n", "dims"))
    m = int(_require(dims, "m", "dims"))
    box_spec = _require(config, "box", "config")
    quad = _require(config, "quadrature", "config")
    try:
        spec = QuadratureSpec(
            n_lat=int(_require(quad, "n_lat", "quadrature")),
            n_vert=int(_require(quad, "n_vert", "quadrature")),
            grading=float(quad.get("grading", 2.0)),
            r_excl=float(quad.get("r_excl", 1.0)),
        )
        grid = HalfSpaceGrid(n, float(_require(box_spec, "half_width", "box")),
                             float(_require(box_spec, "height", "box")), spec)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    form = make_connection(_require(config, "connection", "config"), n + 1, grid.box)
    if form.dim_fiber != m:
        raise ConfigError(
            f"connection fiber dimension {form.dim_fiber} does not match dims.m={m}")

    field = None
    if config.get("field") is not None:
        field = make_field(config["field"], n + 1)
        if field.dim_fiber != m:
            raise ConfigError("field fiber dimension does not match dims.m")
    boundary_field = None
    if config.get("boundary_field") is not None:
        boundary_field = make_boundary_field(config["boundary_field"], n)
        if boundary_field.dim_fiber != m:
            raise ConfigError("boundary field fiber dimension does not match dims.m")
    gauge = None
    if config.get("gauge") is not None:
        gauge = make_gauge(config["gauge"], m)

    analysis = config.get("analysis", {})
    p = float(analysis.get("p", 2.0))
    s_raw = analysis.get("s", "auto")
    s = 1.0 - 1.0 / p if s_raw == "auto" else float(s_raw)
    beta = analysis.get("beta", "auto")
    if beta != "auto":
        beta = float(beta)

    return Scenario(
        name=str(config.get("name", "scenario")),
        n=n,
        m=m,
        grid=grid,
        form=form,
        field=field,
        boundary_field=boundary_field,
        gauge=gauge,
        s=s,
        p=p,
        beta=beta,
        steps=int(config.get("steps", 128)),
        seed=int(_require(config, "seed", "config")),
        config=config,
    )


def load_preset(name: str) -> dict:
    """Load a packaged preset configuration by name."""
    from importlib import resources

    import yaml

    try:
        text = resources.files("gaugetrace.presets").joinpath(f"{name}.yaml").read_text()
    except FileNotFoundError:
        raise ConfigError(f"unknown preset '{name}'") from None
    return yaml.safe_load(text)
