import numpy as np
import pytest

from gaugetrace.connection import ZeroConnection, gauge_transform
from gaugetrace.errors import ConfigError, OutOfDomain
from gaugetrace.fields import AnalyticBoundaryField, AnalyticField, SampledField
from gaugetrace.grids import HalfSpaceGrid, QuadratureSpec, mesh_points
from gaugetrace.registry import (
    build_scenario,
    gauge_apply_field,
    load_preset,
    make_boundary_field,
    make_connection,
    make_field,
    make_gauge,
)
from gaugetrace.trace_ext import (
    ExtensionConfig,
    Mollifier,
    extend,
    extend_pointwise,
    extension_inequality_report,
    trace,
    trace_inequality_report,
)

GRID = HalfSpaceGrid(1, 2.0, 0.6, QuadratureSpec(32, 16))


def flux_abelian(b=1.0, box=None):
    return make_connection({"family": "flux-abelian", "B": b}, 2,
                           box if box is not None else GRID.box)


def bump_boundary():
    return make_boundary_field({"family": "gaussian-bump", "amplitude": [0.9, -0.4],
                                "width": 0.5, "center": [0.0], "core": 0.55,
                                "outer": 0.95}, 1)


def zero_boundary(m=2):
    return AnalyticBoundaryField(m, lambda pts: np.zeros((pts.shape[0], m)),
                                 support_center=np.zeros(1), support_radius=0.5)


# ---------------------------------------------------------------------------
# Mollifier.

def test_mollifier_unit_mass_independent_rule():
    # Normalized by Gauss-Legendre; verified here with a plain midpoint
    # lattice (the bump is smooth and flat at its support edge, so midpoint
    # converges superalgebraically).
    for n in (1, 2):
        moll = Mollifier.standard(n)
        res = 400
        axes = [np.linspace(-1.0, 1.0, res + 1)] * n
        axes = [0.5 * (a[:-1] + a[1:]) for a in axes]
        pts = mesh_points(axes)
        mass = (2.0 / res) ** n * moll.values(pts).sum()
        assert abs(mass - 1.0) < 1e-8


def test_mollifier_support_and_scaling():
    moll = Mollifier.standard(1)
    assert moll.values(np.array([[1.0], [-1.2], [2.0]])).max() == 0.0
    assert moll.values(np.array([[0.0]]))[0] > 0.0
    t = 0.3
    ys = np.linspace(-t, t, 2001)[:, None]
    mass = (ys[1, 0] - ys[0, 0]) * moll.scaled_values(ys, t).sum()
    assert abs(mass - 1.0) < 1e-6


# ---------------------------------------------------------------------------
# Trace.

def test_trace_zero_and_profile():
    zero_u = AnalyticField(2, lambda pts: np.zeros((pts.shape[0], 2)))
    assert np.abs(trace(zero_u).values_many(GRID.boundary_centers())).max() == 0.0

    u = bump_boundary()
    profiled = AnalyticField(
        2, lambda pts: u.values_many(pts[:, :1]) * np.exp(-pts[:, 1:]),
        support_center=np.array([0.0, 0.0]), support_radius=0.95)
    tr = trace(profiled)
    xs = GRID.boundary_centers()
    assert np.abs(tr.values_many(xs) - u.values_many(xs)).max() < 1e-14


def test_trace_of_sampled_field():
    values = np.zeros(GRID.node_shape() + (2,))
    values[8:-8, 0, 0] = 1.5
    f = SampledField(GRID, values)
    tr = trace(f)
    assert np.array_equal(tr.values, values[:, 0, :])


# ---------------------------------------------------------------------------
# Extension.

def test_extend_zero_is_zero():
    cfg = ExtensionConfig(beta=1.0, s=0.5, p=2.0, grid=GRID, steps=32)
    ext = extend(zero_boundary(), flux_abelian(), cfg)
    assert np.abs(ext.values).max() == 0.0


def test_extend_flat_matches_direct_convolution():
    # Flat connection, no damping: the extension is plain mollifier averaging.
    grid = HalfSpaceGrid(1, 2.0, 0.6, QuadratureSpec(64, 16))
    zero = ZeroConnection(2, 2, grid.box)
    u = bump_boundary()
    cfg = ExtensionConfig(beta=0.0, s=0.5, p=2.0, grid=grid, steps=32)
    ext = extend(u, zero, cfg)

    moll = Mollifier.standard(1)
    ys = np.linspace(-1.2, 1.2, 4096 + 1)
    ys = 0.5 * (ys[:-1] + ys[1:])
    w = 2.4 / 4096
    uv = u.values_many(ys[:, None])

    checked = 0
    for j, z in enumerate(grid.z_nodes):
        if not (4 * grid.dx <= z <= 0.44):  # taper-free zone, past fine layers
            continue
        want = np.stack([w * (moll.scaled_values(x - ys, float(z))[:, None] * uv).sum(0)
                         for x in grid.lateral_nodes])
        assert np.abs(ext.values[:, j, :] - want).max() < 5e-3
        checked += 1
    assert checked >= 3


def test_extend_boundary_row_exact_and_linearity():
    u = bump_boundary()
    form = flux_abelian()
    cfg = ExtensionConfig(beta=1.05, s=0.5, p=2.0, grid=GRID, steps=48)
    ext = extend(u, form, cfg)
    nodes = GRID.boundary_nodes()
    assert np.array_equal(ext.values[:, 0, :], u.values_many(nodes))

    u2 = make_boundary_field({"family": "gaussian-bump", "amplitude": [-0.3, 0.6],
                              "width": 0.4, "center": [0.1], "core": 0.5,
                              "outer": 0.85}, 1)
    combo = AnalyticBoundaryField(
        2, lambda pts: u.values_many(pts) + 2.0 * u2.values_many(pts),
        support_center=np.zeros(1), support_radius=0.95)
    lhs = extend(combo, form, cfg).values
    rhs = extend(u, form, cfg).values + 2.0 * extend(u2, form, cfg).values
    scale = np.abs(rhs).max()
    assert np.abs(lhs - rhs).max() <= 1e-12 * scale


def test_extend_rejects_wide_support():
    wide = make_boundary_field({"family": "gaussian-bump", "amplitude": [1.0, 0.0],
                                "width": 0.8, "center": [0.0], "core": 1.3,
                                "outer": 1.7}, 1)
    cfg = ExtensionConfig(beta=1.05, s=0.5, p=2.0, grid=GRID, steps=32)
    with pytest.raises(OutOfDomain):
        extend(wide, flux_abelian(), cfg)


def test_extend_beta_validation():
    cfg = ExtensionConfig(beta=0.2, s=0.5, p=2.0, grid=GRID, steps=32)
    with pytest.raises(ConfigError):
        extend(bump_boundary(), flux_abelian(1.0), cfg)
    auto = ExtensionConfig.auto(flux_abelian(1.0), 0.5, 2.0, GRID, 32)
    assert auto.beta == pytest.approx(1.05, rel=1e-6)
    local = ExtensionConfig.auto(flux_abelian(1.0), 0.5, 2.0, GRID, 32, local_variant=True)
    assert local.beta >= 1.0 / GRID.height**2


def test_extend_gauge_equivariance():
    u = bump_boundary()
    form = flux_abelian()
    gauge = make_gauge({"kind": "abelian-phase", "amplitude": 0.7, "wave": [0.9, 0.5]}, 2)
    primed = gauge_transform(form, gauge)
    cfg = ExtensionConfig(beta=1.05, s=0.5, p=2.0, grid=GRID, steps=64)
    base = extend(u, form, cfg)
    moved = extend(gauge_apply_field(gauge, u, embed=True), primed, cfg)
    nodes = GRID.boundary_nodes()
    worst = 0.0
    flat = base.values.reshape(-1, GRID.spec.n_vert + 1, 2)
    flat_m = moved.values.reshape(-1, GRID.spec.n_vert + 1, 2)
    for j, z in enumerate(GRID.z_nodes):
        pts = np.concatenate([nodes, np.full((nodes.shape[0], 1), z)], axis=1)
        phis = gauge.matrices(pts)
        want = np.einsum("kab,kb->ka", phis, flat[:, j])
        worst = max(worst, float(np.abs(flat_m[:, j] - want).max()))
    assert worst <= 1e-6 * max(np.abs(base.values).max(), 1.0)


def test_boundary_attainment_first_order():
    sc = build_scenario(load_preset("abelian-n1"))
    u = sc.boundary_field
    beta = sc.resolve_beta()
    heights = [0.15, 0.075, 0.0375, 0.01875]
    probes = np.array([[0.0], [0.2], [-0.2], [0.4], [-0.4]])
    errs = []
    for t in heights:
        pts = np.concatenate([probes, np.full((5, 1), t)], axis=1)
        vals = extend_pointwise(u, sc.form, beta, pts, 128)
        errs.append(float(np.abs(vals - u.values_many(probes)).max()))
    assert errs[-1] < errs[0]
    slope = float(np.polyfit(np.log(heights), np.log(errs), 1)[0])
    assert slope >= 1.0


# ---------------------------------------------------------------------------
# Inequality reports.

def test_reports_zero_inputs():
    zero_u = AnalyticField(2, lambda pts: np.zeros((pts.shape[0], 2)),
                           lambda pts: np.zeros((pts.shape[0], 2, 2)))
    r1, r2 = trace_inequality_report(zero_u, flux_abelian(), 0.5, 2.0, 1.05, GRID, 32)
    assert (r1.lhs, r1.rhs, r2.lhs, r2.rhs) == (0.0, 0.0, 0.0, 0.0)
    assert r1.ratio == 0.0

    e1, e2 = extension_inequality_report(zero_boundary(), flux_abelian(),
                                         0.5, 2.0, 1.05, GRID, 32)
    assert (e1.lhs, e1.rhs, e2.lhs, e2.rhs) == (0.0, 0.0, 0.0, 0.0)


def test_report_ratios_stable_under_refinement():
    sc = build_scenario(load_preset("abelian-n1"))
    beta = sc.resolve_beta()
    ratios = {}
    for n_lat in (32, 64):
        grid = sc.grid.with_spec(QuadratureSpec(n_lat, 16, 2.0, 1.0))
        t1, t2 = trace_inequality_report(sc.field, sc.form, sc.s, sc.p, beta,
                                         grid, sc.steps)
        e1, e2 = extension_inequality_report(sc.boundary_field, sc.form, sc.s, sc.p,
                                             beta, grid, sc.steps)
        for r in (t1, t2, e1, e2):
            ratios.setdefault(r.name, []).append(r.ratio)
    for name, (a, b) in ratios.items():
        assert max(a, b) / min(a, b) - 1.0 <= 0.10, name


def test_report_gauge_invariance():
    sc = build_scenario(load_preset("abelian-n1"))
    beta = sc.resolve_beta()
    primed = sc.gauged_form()
    t1, t2 = trace_inequality_report(sc.field, sc.form, sc.s, sc.p, beta,
                                     sc.grid, sc.steps)
    g1, g2 = trace_inequality_report(gauge_apply_field(sc.gauge, sc.field), primed,
                                     sc.s, sc.p, beta, sc.grid, sc.steps)
    assert abs(g1.ratio - t1.ratio) <= 1e-4 * t1.ratio
    assert abs(g2.ratio - t2.ratio) <= 1e-4 * t2.ratio

    # The sampled extension interpolates the product phi*U, which is not the
    # product of the interpolants, so its gradient energy carries an extra
    # O(dx^2) bias; the ratio agreement is correspondingly looser here.
    e1, e2 = extension_inequality_report(sc.boundary_field, sc.form, sc.s, sc.p,
                                         beta, sc.grid, sc.steps)
    h1, h2 = extension_inequality_report(
        gauge_apply_field(sc.gauge, sc.boundary_field, embed=True), primed,
        sc.s, sc.p, beta, sc.grid, sc.steps)
    assert abs(h1.ratio - e1.ratio) <= 2e-3 * e1.ratio
    assert abs(h2.ratio - e2.ratio) <= 2e-3 * e2.ratio


def test_round_trip_through_extension():
    sc = build_scenario(load_preset("abelian-n1"))
    beta = sc.resolve_beta()
    cfg = ExtensionConfig(beta=beta, s=sc.s, p=sc.p, grid=sc.grid, steps=sc.steps)
    ext = extend(sc.boundary_field, sc.form, cfg)
    tr = trace(ext)
    nodes = sc.grid.boundary_nodes()
    assert np.abs(tr.values_many(nodes)
                  - sc.boundary_field.values_many(nodes)).max() <= 1e-8
