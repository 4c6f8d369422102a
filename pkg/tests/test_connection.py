import numpy as np
import pytest

from gaugetrace.connection import (
    AbelianMagneticConnection,
    ConstantConnection,
    GaugeField,
    ZeroConnection,
    boundary_restriction,
    commutator_defect,
    covariant_derivative,
    covariant_derivative_many,
    curvature,
    curvature_many,
    curvature_sup_norm,
    eval_connection,
    gauge_transform,
    pullback,
    wedge_norm,
    J2,
)
from gaugetrace.errors import OutOfDomain
from gaugetrace.fields import AnalyticField
from gaugetrace.grids import Box
from gaugetrace.lie import SkewMap, expm, op_norm, random_skew, so3_generators
from gaugetrace.registry import make_chart, make_connection, make_field, make_gauge

BOX2 = Box([-2.0, 0.0], [2.0, 2.0])
BOX3 = Box([-2.0, -2.0, 0.0], [2.0, 2.0, 2.0])


def flux_abelian(b, box=BOX2):
    return make_connection({"family": "flux-abelian", "B": b}, box.dim, box)


def so3_constant(box=BOX2):
    l1, l2, _ = so3_generators()
    return ConstantConnection(np.stack([l1, l2]), box)


def constant_field(values, d):
    v = np.asarray(values, float)
    return AnalyticField(v.shape[0],
                         lambda pts: np.broadcast_to(v, (pts.shape[0], v.shape[0])).copy(),
                         lambda pts: np.zeros((pts.shape[0], v.shape[0], d)))


def test_eval_zero():
    form = ZeroConnection(2, 2, BOX2)
    out = eval_connection(form, [0.3, 0.5], [1.0, 2.0])
    assert np.abs(out.entries).max() == 0.0


def test_eval_constant_basis():
    g1 = random_skew(np.random.default_rng(0), 2)
    g2 = random_skew(np.random.default_rng(1), 2)
    form = ConstantConnection(np.stack([g1, g2]), BOX2)
    out = eval_connection(form, [0.0, 0.5], [1.0, 0.0])
    assert np.abs(out.entries - g1).max() == 0.0


def test_eval_abelian_direct_substitution():
    # A(x) = B/2 (-x2, x1); at x = (1, 0), v = (0, 1): A.v = B/2.
    b = 1.7
    form = flux_abelian(b)
    out = eval_connection(form, [1.0, 0.0], [0.0, 1.0])
    assert np.abs(out.entries - (b / 2) * J2).max() < 1e-15


def test_eval_linear_in_direction():
    form = flux_abelian(0.9)
    rng = np.random.default_rng(2)
    x = np.array([0.4, 0.8])
    v, w = rng.normal(size=2), rng.normal(size=2)
    lhs = eval_connection(form, x, 2.0 * v + w).entries
    rhs = 2.0 * eval_connection(form, x, v).entries + eval_connection(form, x, w).entries
    assert np.abs(lhs - rhs).max() < 1e-12


def test_eval_out_of_domain():
    form = flux_abelian(1.0)
    with pytest.raises(OutOfDomain):
        form.coeffs([5.0, 0.5])


def test_covariant_derivative_trivial_cases():
    zero = ZeroConnection(2, 2, BOX2)
    const = constant_field([0.7, -0.3], 2)
    assert np.abs(covariant_derivative(const, zero, [0.1, 0.5])).max() == 0.0

    form = flux_abelian(1.3)
    x = np.array([0.5, 0.6])
    got = covariant_derivative(const, form, x)
    want = np.stack([form.coeffs(x)[j] @ np.array([0.7, -0.3]) for j in range(2)], axis=1)
    assert np.abs(got - want).max() < 1e-14

    # Plain derivative: U(x) = x1 e1 with the flat connection.
    u = AnalyticField(2, lambda pts: np.stack([pts[:, 0], np.zeros(pts.shape[0])], axis=1))
    got = covariant_derivative(u, zero, [0.3, 0.9], h=1e-3)
    assert abs(got[0, 0] - 1.0) < 1e-10
    assert np.abs(got).max() == pytest.approx(1.0, abs=1e-10)


def test_curvature_zero_and_constant():
    zero = ZeroConnection(2, 3, BOX2)
    assert np.abs(curvature(zero, [0.1, 0.5], [1, 0], [0, 1]).entries).max() == 0.0

    l1, l2, l3 = so3_generators()
    form = so3_constant()
    got = curvature(form, [0.2, 0.7], [1, 0], [0, 1]).entries
    # Only the wedge term survives for constant coefficients.
    assert np.abs(got - l3).max() < 1e-14


def test_curvature_abelian_flux():
    b = 1.4
    form = flux_abelian(b)
    got = curvature(form, [0.3, 0.4], [1, 0], [0, 1]).entries
    assert np.abs(got - b * J2).max() < 1e-12


def test_curvature_antisymmetry_and_skewness():
    form = flux_abelian(0.8)
    rng = np.random.default_rng(3)
    pts = BOX2.shrink(0.2).sample(rng, 8)
    v, w = rng.normal(size=2), rng.normal(size=2)
    k_vw = curvature_many(form, pts, v, w)
    k_wv = curvature_many(form, pts, w, v)
    assert np.abs(k_vw + k_wv).max() < 1e-14
    assert np.abs(k_vw + np.swapaxes(k_vw, -1, -2)).max() < 1e-12


def test_curvature_sup_norms():
    assert curvature_sup_norm(ZeroConnection(2, 2, BOX2)) == 0.0
    assert curvature_sup_norm(flux_abelian(1.0)) == pytest.approx(1.0, rel=1e-9)
    assert curvature_sup_norm(so3_constant()) == pytest.approx(1.0, rel=1e-9)


def test_curvature_sup_monotone_in_samples():
    form = make_connection({"family": "affine-so3",
                            "base": [[0.3, 0.0, 0.2], [0.0, 0.25, -0.1]],
                            "linear": [[[0.0, 0.15, 0.0], [0.1, 0.0, 0.0]],
                                       [[0.0, 0.0, 0.12], [0.05, 0.0, 0.0]]]},
                           2, BOX2)
    values = [curvature_sup_norm(form, samples=k) for k in (16, 64, 256)]
    assert values[0] <= values[1] <= values[2]


def test_wedge_norm_bound():
    form = flux_abelian(1.2)
    sup = curvature_sup_norm(form)
    rng = np.random.default_rng(4)
    for _ in range(30):
        v, w = rng.normal(size=2), rng.normal(size=2)
        x = BOX2.shrink(0.3).sample(rng, 1)[0]
        val = op_norm(curvature_many(form, x[None], v, w)[0])
        assert val <= sup * wedge_norm(v, w) * (1 + 1e-9) + 1e-12


def test_gauge_transform_identity_gauge():
    form = flux_abelian(0.7)
    ident = GaugeField(2, lambda pts: np.broadcast_to(np.eye(2), (pts.shape[0], 2, 2)).copy(),
                       lambda pts, v: np.zeros((pts.shape[0], 2, 2)))
    primed = gauge_transform(form, ident)
    rng = np.random.default_rng(5)
    pts = BOX2.shrink(0.2).sample(rng, 6)
    assert np.abs(primed.coeffs_many(pts) - form.coeffs_many(pts)).max() < 1e-14


def test_gauge_transform_flat_exponential():
    # form' = -(D phi) phi^T for phi(x) = exp(x1 G) over the flat connection.
    g = random_skew(np.random.default_rng(6), 3, scale=0.8)

    def mats(pts):
        return np.stack([expm(SkewMap(x1 * g)).entries for x1 in pts[:, 0]])

    def deriv(pts, v):
        v = np.asarray(v, float)
        return v[0] * np.einsum("ab,kbc->kac", g, mats(pts))

    gauge = GaugeField(3, mats, deriv)
    primed = gauge_transform(ZeroConnection(2, 3, BOX2), gauge)
    x = np.array([0.6, 0.9])
    v = np.array([1.3, -0.4])
    got = np.tensordot(v, primed.coeffs(x), axes=(0, 0))
    assert np.abs(got - (-v[0] * g)).max() < 1e-12


def test_gauge_transform_abelian_phase_shift():
    # Abelian law: the new potential is A - grad(theta).
    b = 1.1
    form = flux_abelian(b)
    gauge = make_gauge({"kind": "abelian-phase", "amplitude": 0.6, "wave": [0.9, 0.4]}, 2)
    primed = gauge_transform(form, gauge)
    x = np.array([0.5, 0.7])
    wave = np.array([0.9, 0.4])
    for v in (np.array([1.0, 0.0]), np.array([0.3, -1.2])):
        got = np.tensordot(v, primed.coeffs(x), axes=(0, 0))
        dtheta = 0.6 * np.cos(x @ wave) * (wave @ v)
        a_v = form.potential(x[None])[0] @ v
        want = (a_v - dtheta) * J2
        assert np.abs(got - want).max() < 1e-12


def test_covariant_derivative_gauge_covariance():
    from gaugetrace.registry import gauge_apply_field

    form = flux_abelian(1.0)
    gauge = make_gauge({"kind": "abelian-phase", "amplitude": 0.7, "wave": [0.8, 0.5]}, 2)
    primed = gauge_transform(form, gauge)
    u = make_field({"family": "gaussian-bump", "amplitude": [1.0, 0.4], "width": 0.45,
                    "center": [0.0, 0.12], "core": 0.5, "outer": 0.9}, 2)
    gauged_u = gauge_apply_field(gauge, u)
    rng = np.random.default_rng(7)
    pts = Box([-0.8, 0.0], [0.8, 0.6]).sample(rng, 10)
    lhs = covariant_derivative_many(gauged_u, primed, pts)
    base = covariant_derivative_many(u, form, pts)
    rhs = np.einsum("kab,kbj->kaj", gauge.matrices(pts), base)
    assert np.abs(lhs - rhs).max() < 1e-8


def test_curvature_gauge_law():
    form = flux_abelian(1.0)
    gauge = make_gauge({"kind": "abelian-phase", "amplitude": 0.7, "wave": [0.8, 0.5]}, 2)
    primed = gauge_transform(form, gauge)
    rng = np.random.default_rng(8)
    pts = BOX2.shrink(0.3).sample(rng, 6)
    v, w = rng.normal(size=2), rng.normal(size=2)
    k = curvature_many(form, pts, v, w)
    kp = curvature_many(primed, pts, v, w)
    phis = gauge.matrices(pts)
    want = phis @ k @ np.swapaxes(phis, -1, -2)
    assert np.abs(kp - want).max() < 1e-7


def test_pullback_identity_and_dilation():
    form = so3_constant(BOX2)
    rng = np.random.default_rng(9)
    small = Box([-0.9, 0.0], [0.9, 0.9])
    pts = small.sample(rng, 5)
    v = rng.normal(size=2)

    ident = pullback(form, make_chart({"kind": "identity"}, 2), box=small)
    assert np.abs(ident.eval_along(pts, np.broadcast_to(v, pts.shape))
                  - form.eval_along(pts, np.broadcast_to(v, pts.shape))).max() < 1e-14

    dil = pullback(form, make_chart({"kind": "dilation", "factor": 2.0}, 2),
                   box=Box([-0.9, 0.0], [0.9, 0.9]))
    got = dil.eval_along(pts, np.broadcast_to(v, pts.shape))
    want = 2.0 * form.eval_along(pts, np.broadcast_to(v, pts.shape))
    assert np.abs(got - want).max() < 1e-14


def test_pullback_rotation_composition():
    form = so3_constant(Box([-3.0, -3.0], [3.0, 3.0]))
    chart = make_chart({"kind": "rotation", "angle": 0.6}, 2)
    pulled = pullback(form, chart, box=Box([-1.0, -1.0], [1.0, 1.0]))
    rng = np.random.default_rng(10)
    pts = Box([-0.8, -0.8], [0.8, 0.8]).sample(rng, 5)
    v = rng.normal(size=2)
    jac = chart.jacobians(pts)
    got = pulled.eval_along(pts, np.broadcast_to(v, pts.shape))
    want = form.eval_along(chart.map_points(pts), np.einsum("kab,b->ka", jac, v))
    assert np.abs(got - want).max() < 1e-14


def test_commutator_defect_flat_and_affine():
    u = make_field({"family": "gaussian-bump", "amplitude": [1.0, 0.4], "width": 0.45,
                    "center": [0.0, 0.12], "core": 0.5, "outer": 0.9}, 2)
    zero = ZeroConnection(2, 2, BOX2)
    x = np.array([0.15, 0.22])
    assert commutator_defect(u, zero, x, [1, 0], [0, 1], h=1e-3) < 1e-6

    # Constant field with affine coefficients: central differences are exact
    # on affine integrands, so only rounding remains.
    form = make_connection({"family": "affine-so3",
                            "base": [[0.3, 0.0, 0.2], [0.0, 0.25, -0.1]],
                            "linear": [[[0.0, 0.15, 0.0], [0.1, 0.0, 0.0]],
                                       [[0.0, 0.0, 0.12], [0.05, 0.0, 0.0]]]},
                           2, BOX2)
    const = constant_field([0.6, -0.2, 0.8], 2)
    assert commutator_defect(const, form, x, [1, 0], [0, 1], h=1e-3) < 1e-10


def test_commutator_defect_richardson_slope():
    u = make_field({"family": "gaussian-bump", "amplitude": [1.0, 0.4], "width": 0.45,
                    "center": [0.0, 0.12], "core": 0.5, "outer": 0.9}, 2)
    form = flux_abelian(1.0)
    x = np.array([0.2, 0.3])
    defects = [commutator_defect(u, form, x, [1, 0], [0, 1], h=h)
               for h in (1e-2, 5e-3, 2.5e-3)]
    slope = np.log2(defects[0] / defects[2]) / 2
    assert 1.7 <= slope <= 2.3


def test_boundary_restriction_rule():
    form = flux_abelian(1.0)
    par = boundary_restriction(form)
    x = np.array([0.7])
    got = par.coeffs(x)
    want = form.coeffs(np.array([0.7, 0.0]))[:1]
    assert np.array_equal(got, want)
    # For this potential the first component vanishes on the boundary.
    assert np.abs(got).max() < 1e-15
