"""Scenario-driven command line front end.

Subcommands build registry objects from a YAML config (a file path or a
packaged preset name), run the requested verification suite, and write
report.json plus a plot-ready report.csv.  Runs are deterministic for a
fixed config and seed; timestamps live only in the metadata header line of
the CSV and a metadata field of the JSON.

Exit codes: 0 all checks passed, 1 at least one property violated,
2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import yaml

from . import registry
from .connection import (
    AbelianMagneticConnection,
    covariant_derivative_many,
    curvature_many,
    curvature_sup_norm,
    commutator_defect,
    gauge_transform,
    pullback,
)
from .errors import ConfigError, GaugeTraceError, PropertyViolation
from .fields import AnalyticField
from .grids import Box, QuadratureSpec, embed_boundary
from .lie import SkewMap, expm, op_norm, op_norm_many
from .sobolev import boundary_lp_energy, diamagnetic_defect, gagliardo_report
from .trace_ext import (
    ExtensionConfig,
    extend,
    extend_pointwise,
    extension_inequality_report,
    trace,
    trace_inequality_report,
)
from .transport import (
    Segment,
    holonomy_triangle,
    segment_transports,
    transport_path,
    transport_segment,
)

SCHEMA_VERSION = 1
CSV_COLUMNS = ["suite", "check", "property", "value", "threshold", "status", "detail"]

SUBCOMMANDS = ("transport", "curvature", "holonomy", "seminorm",
               "trace-check", "extend-check", "pullback-check", "suite")


def _row(suite, check, prop, value, threshold, ok, detail=""):
    return {
        "suite": suite,
        "check": check,
        "property": prop,
        "value": float(value),
        "threshold": float(threshold),
        "status": "pass" if ok else "fail",
        "detail": detail,
    }


def _leq(suite, check, prop, value, threshold, detail=""):
    return _row(suite, check, prop, value, threshold, value <= threshold, detail)


def _geq(suite, check, prop, value, threshold, detail=""):
    return _row(suite, check, prop, value, threshold, value >= threshold, detail)


def _interior_box(box: Box, fraction: float = 0.1) -> Box:
    extent = box.hi - box.lo
    return Box(box.lo + fraction * extent, box.hi - fraction * extent)


def _transport_gauge_defect(sc, path, steps) -> float:
    base = transport_path(sc.form, path, steps)
    primed = transport_path(sc.gauged_form(), path, steps)
    phis = sc.gauge.matrices(path.points(base.ts))
    expected = np.einsum("kab,kbc,dc->kad", phis, base.matrices, phis[-1])
    return float(op_norm_many(primed.matrices - expected).max())


def _abelian_segment_oracle(form: AbelianMagneticConnection, x, y) -> np.ndarray:
    """Closed-form segment transport for fiber C: rotation by the path
    integral of the potential (composite Simpson on a fine grid)."""
    ts = np.linspace(0.0, 1.0, 257)[:, None]
    pts = (1.0 - ts) * x + ts * y
    a = form.potential(pts)
    integrand = a @ (x - y)
    w = np.ones(257)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    phase = float(w @ integrand) / (3.0 * 256)
    c, s = np.cos(phase), np.sin(phase)
    return np.array([[c, s], [-s, c]])  # exp(-phase * J)


# ---------------------------------------------------------------------------
# Suites.

def suite_transport(sc, rng, refine):
    rows = []
    inner = _interior_box(sc.grid.box)
    steps = sc.steps

    worst_iso = 0.0
    for _ in range(20):
        seg = Segment(inner.sample(rng, 1)[0], inner.sample(rng, 1)[0])
        worst_iso = max(worst_iso, transport_path(sc.form, seg, steps).ortho_defect)
    rows.append(_leq("transport", "isometry", "transport stays orthogonal",
                     worst_iso, 1e-10))

    worst_col = 0.0
    for _ in range(10):
        x = inner.sample(rng, 1)[0]
        direction = rng.normal(size=sc.dim)
        direction /= np.linalg.norm(direction)
        t1, t2 = sorted(rng.uniform(0.05, 0.3, size=2))
        y, z = x + t1 * direction, x + t2 * direction
        if not inner.contains(np.vstack([y, z])):
            continue
        prod = (transport_segment(sc.form, x, y, max(steps, 256)).entries
                @ transport_segment(sc.form, y, z, max(steps, 256)).entries
                @ transport_segment(sc.form, z, x, max(steps, 256)).entries)
        worst_col = max(worst_col, op_norm(np.eye(sc.m) - prod))
    rows.append(_leq("transport", "colinearity", "colinear segment transports compose to identity",
                     worst_col, 1e-9))

    family = sc.config["connection"]["family"]
    if family in {"zero", "constant-abelian", "constant-so3"}:
        worst = 0.0
        for _ in range(10):
            x, y = inner.sample(rng, 2)
            oracle = expm(SkewMap(np.tensordot(y - x, sc.form.coeffs(x), axes=(0, 0))))
            got = transport_segment(sc.form, x, y, 256).entries
            worst = max(worst, op_norm(got - oracle.entries))
        rows.append(_leq("transport", "constant-oracle",
                         "constant-coefficient transport matches the exponential",
                         worst, 1e-10))
    if isinstance(sc.form, AbelianMagneticConnection):
        worst = 0.0
        for _ in range(10):
            x, y = inner.sample(rng, 2)
            got = transport_segment(sc.form, x, y, 256).entries
            worst = max(worst, op_norm(got - _abelian_segment_oracle(sc.form, x, y)))
        rows.append(_leq("transport", "abelian-oracle",
                         "abelian transport matches the potential path integral",
                         worst, 1e-8))

    if sc.gauge is not None:
        seg = Segment(inner.sample(rng, 1)[0], inner.sample(rng, 1)[0])
        rows.append(_leq("transport", "gauge-law",
                         "transport conjugates under gauge change",
                         _transport_gauge_defect(sc, seg, steps), 1e-6))

    seg = Segment(inner.sample(rng, 1)[0], inner.sample(rng, 1)[0])
    p16 = transport_path(sc.form, seg, 16).initial
    p64 = transport_path(sc.form, seg, 64).initial
    p256 = transport_path(sc.form, seg, 256).initial
    e1, e2 = op_norm(p16 - p64), op_norm(p64 - p256)
    if e2 > 1e-12:
        order = np.log(e1 / e2) / np.log(4.0)
        rows.append(_geq("transport", "convergence",
                         "step-refinement order of the integrator", order, 3.5,
                         detail=f"errors {e1:.3e} -> {e2:.3e}"))
    else:
        rows.append(_leq("transport", "convergence",
                         "step-refinement order of the integrator",
                         e2, 1e-12, detail="self-error already at rounding level"))
    return rows


def suite_curvature(sc, rng, refine):
    rows = []
    inner = _interior_box(sc.grid.box)
    pts = inner.sample(rng, 16)
    d, m = sc.dim, sc.m

    coeffs = sc.form.coeffs_many(pts)
    skew = float(np.abs(coeffs + np.swapaxes(coeffs, -1, -2)).max())
    rows.append(_leq("curvature", "skewness", "connection evaluations are skew", skew, 1e-10))

    v, w = rng.normal(size=d), rng.normal(size=d)
    lin = sc.form.eval_along(pts, np.broadcast_to(2.0 * v + w, (16, d)))
    lin_ref = 2.0 * sc.form.eval_along(pts, np.broadcast_to(v, (16, d))) \
        + sc.form.eval_along(pts, np.broadcast_to(w, (16, d)))
    rows.append(_leq("curvature", "linearity", "evaluation is linear in the direction",
                     float(np.abs(lin - lin_ref).max()), 1e-12))

    k_vw = curvature_many(sc.form, pts, v, w)
    k_wv = curvature_many(sc.form, pts, w, v)
    rows.append(_leq("curvature", "antisymmetry", "curvature is antisymmetric in (v, w)",
                     float(np.abs(k_vw + k_wv).max()), 1e-12))

    sup = curvature_sup_norm(sc.form, sc.grid.box, samples=256, seed=sc.seed)
    worst = 0.0
    for _ in range(20):
        vv, ww = rng.normal(size=d), rng.normal(size=d)
        x = inner.sample(rng, 1)[0]
        kk = op_norm(curvature_many(sc.form, x[None], vv, ww)[0])
        wedge = np.sqrt(max((vv @ vv) * (ww @ ww) - (vv @ ww) ** 2, 0.0))
        worst = max(worst, kk - sup * wedge * 1.05)
    rows.append(_leq("curvature", "wedge-bound",
                     "curvature is controlled by the sup times the wedge norm",
                     worst, 1e-9, detail=f"sampled sup {sup:.6e}"))

    if sc.field is not None:
        x = np.asarray(sc.field.support_center, dtype=float)
        x = x + 0.15 * sc.field.support_radius
        if sc.grid.box.contains(x[None]):
            defects = [commutator_defect(sc.field, sc.form, x, np.eye(d)[0], np.eye(d)[-1], h)
                       for h in (1e-2, 5e-3, 2.5e-3)]
            if defects[0] > 1e-12 and defects[2] > 1e-14:
                slope = float(np.log2(defects[0] / defects[2]) / 2.0)
                ok = 1.7 <= slope <= 2.3
                rows.append(_row("curvature", "commutator-identity",
                                 "second covariant derivatives commute up to curvature",
                                 slope, 2.0, ok,
                                 detail=f"defects {defects[0]:.3e}/{defects[1]:.3e}/{defects[2]:.3e}"))
            else:
                rows.append(_leq("curvature", "commutator-identity",
                                 "second covariant derivatives commute up to curvature",
                                 defects[0], 1e-10, detail="defect at rounding level"))

    if sc.gauge is not None:
        primed = sc.gauged_form()
        phis = sc.gauge.matrices(pts)
        k_base = curvature_many(sc.form, pts, v, w)
        k_primed = curvature_many(primed, pts, v, w)
        expected = phis @ k_base @ np.swapaxes(phis, -1, -2)
        scale = max(float(op_norm_many(k_base).max()), 1e-30)
        rel = float(op_norm_many(k_primed - expected).max()) / scale
        rows.append(_leq("curvature", "gauge-law", "curvature conjugates under gauge change",
                         rel, 1e-6))
    return rows


def suite_holonomy(sc, rng, refine):
    rows = []
    inner = _interior_box(sc.grid.box)
    count = int(sc.config.get("sweep", {}).get("triangles", 200))
    worst_ratio = 0.0
    violations = 0
    for _ in range(count):
        x, y, z = inner.sample(rng, 3)
        try:
            defect, bound = holonomy_triangle(sc.form, x, y, z, sc.steps, seed=sc.seed)
        except PropertyViolation:
            violations += 1
            continue
        worst_ratio = max(worst_ratio, defect / (bound + 1e-9))
    rows.append(_row("holonomy", "triangle-sweep",
                     "holonomy defect bounded by curvature times area",
                     worst_ratio, 1.05, violations == 0,
                     detail=f"{count} triangles, {violations} violations"))

    if isinstance(sc.form, AbelianMagneticConnection) and sc.config["connection"]["family"] == "flux-abelian":
        b = float(sc.config["connection"]["B"])
        a = 0.8 * min(sc.grid.half_width, sc.grid.height)
        origin = np.zeros(sc.dim)
        y = origin.copy()
        y[0] = a
        z = origin.copy()
        z[-1] = a
        defect, bound = holonomy_triangle(sc.form, origin, y, z, max(sc.steps, 256))
        exact = 2.0 * abs(np.sin(b * a * a / 4.0))
        rows.append(_leq("holonomy", "flux-exact",
                         "abelian holonomy equals the flux rotation",
                         abs(defect - exact), 1e-6,
                         detail=f"defect {defect:.8f}, flux oracle {exact:.8f}, bound {bound:.6f}"))
    return rows


def _seminorm_levels(sc, refine):
    base = sc.grid.spec.n_lat
    factors = [1.0, 1.5, 2.0][: max(refine, 1)]
    return [int(round(base * f)) for f in factors]


def suite_seminorm(sc, rng, refine):
    from .connection import boundary_restriction

    rows = []
    if sc.boundary_field is None:
        raise ConfigError("seminorm suite needs a boundary_field in the config")
    u = sc.boundary_field
    form_par = boundary_restriction(sc.form)
    s, p = sc.s, sc.p

    reports = []
    for n_lat in _seminorm_levels(sc, refine):
        spec = QuadratureSpec(n_lat, sc.grid.spec.n_vert, sc.grid.spec.grading,
                              sc.grid.spec.r_excl)
        reports.append(gagliardo_report(u, form_par, s, p, sc.grid.with_spec(spec), sc.steps))
    for rep in reports:
        rows.append(_row("seminorm", f"value-n{rep.n_lat}",
                         "transported fractional seminorm", rep.value,
                         rep.value, True,
                         detail=f"p-power {rep.p_power:.6e}, residual {rep.residual_p_power:.3e}"))
    if len(reports) >= 2:
        drift = abs(reports[-1].p_power - reports[0].p_power)
        budget = reports[0].residual_p_power * 1.05 + 1e-12
        rows.append(_leq("seminorm", "refinement",
                         "refinement drift within the excluded-shell residual",
                         drift, budget))

    coarse = gagliardo_report(u, form_par, s, p, sc.grid.with_spec(
        QuadratureSpec(sc.grid.spec.n_lat, sc.grid.spec.n_vert,
                       sc.grid.spec.grading, 2.0)), sc.steps)
    rows.append(_geq("seminorm", "exclusion-monotone",
                     "shrinking the excluded shell never decreases the sum",
                     reports[0].p_power - coarse.p_power, -1e-12))

    lam = 2.0
    scaled = AnalyticField(u.dim_fiber, lambda pts: lam * u.values_many(pts),
                           support_center=u.support_center, support_radius=u.support_radius)
    rep_scaled = gagliardo_report(scaled, form_par, s, p, sc.grid, sc.steps)
    rel = abs(rep_scaled.p_power - lam**p * reports[0].p_power) / max(rep_scaled.p_power, 1e-30)
    rows.append(_leq("seminorm", "homogeneity",
                     "scaling the field scales the p-power exactly", rel, 1e-13))

    if sc.gauge is not None:
        primed_par = boundary_restriction(sc.gauged_form())
        phi_b = lambda pts: sc.gauge.matrices(embed_boundary(pts))  # noqa: E731
        gauged_u = AnalyticField(
            u.dim_fiber,
            lambda pts: np.einsum("kab,kb->ka", phi_b(pts), u.values_many(pts)),
            support_center=u.support_center, support_radius=u.support_radius)
        rep_g = gagliardo_report(gauged_u, primed_par, s, p, sc.grid, sc.steps)
        rel = abs(rep_g.p_power - reports[0].p_power) / max(reports[0].p_power, 1e-30)
        rows.append(_leq("seminorm", "gauge-law",
                         "seminorm is invariant under gauge change", rel, 1e-6))

    rows.append(_leq("seminorm", "diamagnetic",
                     "norm derivative never exceeds the covariant derivative",
                     diamagnetic_defect(sc.field, sc.form, sc.grid, n_samples=2000,
                                        seed=sc.seed) if sc.field is not None else 0.0,
                     1e-6))
    return rows


def _ratio_stability(reports_by_level):
    out = {}
    for name in reports_by_level[0]:
        ratios = [level[name].ratio for level in reports_by_level]
        finite = [r for r in ratios if np.isfinite(r) and r > 0]
        if not finite:
            out[name] = (0.0, ratios)
            continue
        out[name] = (max(finite) / min(finite) - 1.0, ratios)
    return out


def suite_trace_check(sc, rng, refine):
    rows = []
    if sc.field is None:
        raise ConfigError("trace-check needs a field in the config")
    beta = sc.resolve_beta()
    levels = []
    for n_lat in _seminorm_levels(sc, refine):
        spec = QuadratureSpec(n_lat, sc.grid.spec.n_vert, sc.grid.spec.grading,
                              sc.grid.spec.r_excl)
        r1, r2 = trace_inequality_report(sc.field, sc.form, sc.s, sc.p, beta,
                                         sc.grid.with_spec(spec), sc.steps)
        levels.append({r1.name: r1, r2.name: r2})
    for name, (stability, ratios) in _ratio_stability(levels).items():
        rows.append(_leq("trace-check", f"stability-{name}",
                         "trace inequality ratio is stable under refinement",
                         stability, 0.10,
                         detail="ratios " + ", ".join(f"{r:.6e}" for r in ratios)))
    return rows


def suite_extend_check(sc, rng, refine):
    rows = []
    if sc.boundary_field is None:
        raise ConfigError("extend-check needs a boundary_field in the config")
    u = sc.boundary_field
    beta = sc.resolve_beta()
    cfg = ExtensionConfig(beta=beta, s=sc.s, p=sc.p, grid=sc.grid, steps=sc.steps)

    ext = extend(u, sc.form, cfg)
    traced = trace(ext)
    nodes = sc.grid.boundary_nodes()
    round_trip = float(np.abs(traced.values_many(nodes) - u.values_many(nodes)).max())
    rows.append(_leq("extend-check", "round-trip",
                     "trace of the extension reproduces the boundary field",
                     round_trip, 1e-8))

    u2 = AnalyticField(u.dim_fiber,
                       lambda pts: np.roll(u.values_many(pts), 1, axis=1) * 0.5,
                       support_center=u.support_center, support_radius=u.support_radius)
    combo = AnalyticField(u.dim_fiber,
                          lambda pts: u.values_many(pts) + 2.0 * u2.values_many(pts),
                          support_center=u.support_center, support_radius=u.support_radius)
    lin_defect = np.abs(extend(combo, sc.form, cfg).values
                        - extend(u, sc.form, cfg).values
                        - 2.0 * extend(u2, sc.form, cfg).values)
    scale = max(float(np.abs(ext.values).max()), 1e-30)
    rows.append(_leq("extend-check", "linearity",
                     "extension is linear in the boundary data",
                     float(lin_defect.max()) / scale, 1e-12))

    heights = [sc.grid.height * (0.5**k) / 4.0 for k in range(4)]
    center = u.support_center if u.support_center is not None else np.zeros(sc.n)
    probes = center[None, :] + 0.3 * u.support_radius * np.vstack(
        [np.zeros(sc.n), np.eye(sc.n), -np.eye(sc.n)])
    errs = []
    for t in heights:
        pts = np.concatenate([probes, np.full((probes.shape[0], 1), t)], axis=1)
        vals = extend_pointwise(u, sc.form, beta, pts, sc.steps)
        errs.append(float(np.abs(vals - u.values_many(probes)).max()))
    slope = float(np.polyfit(np.log(heights), np.log(np.maximum(errs, 1e-300)), 1)[0])
    # 0.1 slack on the measured order: pre-asymptotic corrections bias the
    # fitted slope of a genuinely first-order decay slightly below 1.
    rows.append(_geq("extend-check", "boundary-attainment",
                     "extension attains the boundary value at first order",
                     slope, 0.9, detail="errors " + ", ".join(f"{e:.3e}" for e in errs)))

    levels = []
    for n_lat in _seminorm_levels(sc, refine):
        spec = QuadratureSpec(n_lat, sc.grid.spec.n_vert, sc.grid.spec.grading,
                              sc.grid.spec.r_excl)
        r1, r2 = extension_inequality_report(u, sc.form, sc.s, sc.p, beta,
                                             sc.grid.with_spec(spec), sc.steps)
        levels.append({r1.name: r1, r2.name: r2})
    for name, (stability, ratios) in _ratio_stability(levels).items():
        rows.append(_leq("extend-check", f"stability-{name}",
                         "extension inequality ratio is stable under refinement",
                         stability, 0.10,
                         detail="ratios " + ", ".join(f"{r:.6e}" for r in ratios)))

    if sc.gauge is not None:
        primed = sc.gauged_form()
        phi_b = lambda pts: sc.gauge.matrices(embed_boundary(pts))  # noqa: E731
        gauged_u = AnalyticField(
            u.dim_fiber,
            lambda pts: np.einsum("kab,kb->ka", phi_b(pts), u.values_many(pts)),
            support_center=u.support_center, support_radius=u.support_radius)
        ext_g = extend(gauged_u, primed, cfg)
        nodes_all = sc.grid.boundary_nodes()
        shape = sc.grid.node_shape() + (sc.m,)
        flat = ext.values.reshape(-1, sc.grid.spec.n_vert + 1, sc.m)
        flat_g = ext_g.values.reshape(-1, sc.grid.spec.n_vert + 1, sc.m)
        worst = 0.0
        for j, z in enumerate(sc.grid.z_nodes):
            pts = np.concatenate([nodes_all, np.full((nodes_all.shape[0], 1), z)], axis=1)
            phis = sc.gauge.matrices(pts)
            expected = np.einsum("kab,kb->ka", phis, flat[:, j])
            worst = max(worst, float(np.abs(flat_g[:, j] - expected).max()))
        rows.append(_leq("extend-check", "gauge-law",
                         "extension commutes with gauge change",
                         worst / scale, 1e-6))
    return rows


def suite_pullback_check(sc, rng, refine):
    rows = []
    if sc.field is None:
        raise ConfigError("pullback-check needs a field in the config")
    d = sc.dim
    # The analytic families are defined everywhere; give the inner form a
    # symmetric box so rotated charts stay legal.
    wide = Box(np.full(d, -2.0 * sc.grid.half_width), np.full(d, 2.0 * sc.grid.half_width))
    form = registry.make_connection(sc.config["connection"], d, wide)
    charts = {
        "identity": registry.make_chart({"kind": "identity"}, d),
        "dilation": registry.make_chart({"kind": "dilation", "factor": 0.75}, d),
        "rotation": registry.make_chart({"kind": "rotation", "angle": 0.4}, d),
        "shear": registry.make_chart(
            {"kind": "shear", "eps": [0.1] * d, "wave": [0.8] + [0.3] * (d - 1)}, d),
    }
    small = Box(np.full(d, -0.5 * sc.grid.half_width), np.full(d, 0.5 * sc.grid.half_width))
    pts = small.sample(rng, 12)
    for name, chart in charts.items():
        pulled = pullback(form, chart, box=small)
        mapped = chart.map_points(pts)
        jac = chart.jacobians(pts)
        composed = AnalyticField(
            sc.m,
            lambda q, _c=chart: sc.field.values_many(_c.map_points(q)),
            lambda q, _c=chart: np.einsum(
                "kme,ked->kmd", sc.field.jacobian_many(_c.map_points(q)), _c.jacobians(q)))
        lhs = covariant_derivative_many(composed, pulled, pts)
        rhs = np.einsum("kme,ked->kmd",
                        covariant_derivative_many(sc.field, form, mapped), jac)
        rows.append(_leq("pullback-check", name,
                         "pulled-back covariant derivative matches the pullback",
                         float(np.abs(lhs - rhs).max()), 1e-6))
    return rows


SUITE_RUNNERS = {
    "transport": suite_transport,
    "curvature": suite_curvature,
    "holonomy": suite_holonomy,
    "seminorm": suite_seminorm,
    "trace-check": suite_trace_check,
    "extend-check": suite_extend_check,
    "pullback-check": suite_pullback_check,
}


def run_suites(sc, names, refine):
    rows = []
    for name in names:
        rng = np.random.default_rng(sc.seed)
        try:
            rows.extend(SUITE_RUNNERS[name](sc, rng, refine))
        except PropertyViolation as exc:
            rows.append(_row(name, "property-violation", str(exc), 1.0, 0.0, False))
        except GaugeTraceError as exc:
            rows.append(_row(name, "error", f"{type(exc).__name__}: {exc}", 1.0, 0.0, False))
    return rows


# ---------------------------------------------------------------------------
# Reports and entry point.

def _write_reports(out_dir: Path, sc, rows):
    out_dir.mkdir(parents=True, exist_ok=True)
    stamp = datetime.now(timezone.utc).isoformat()
    payload = {
        "schema_version": SCHEMA_VERSION,
        "tool": "gaugetrace",
        "generated_at": stamp,
        "name": sc.name,
        "seed": sc.seed,
        "rows": rows,
    }
    (out_dir / "report.json").write_text(
        json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")

    lines = [f"# gaugetrace report name={sc.name} seed={sc.seed} generated_at={stamp}"]
    lines.append(",".join(CSV_COLUMNS))
    for row in rows:
        cells = []
        for col in CSV_COLUMNS:
            val = row[col]
            cells.append(repr(val) if isinstance(val, float) else str(val).replace(",", ";"))
        lines.append(",".join(cells))
    (out_dir / "report.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")


def _load_config(ref: str) -> dict:
    path = Path(ref)
    if path.exists():
        try:
            config = yaml.safe_load(path.read_text(encoding="utf-8"))
        except yaml.YAMLError as exc:
            raise ConfigError(f"{ref}: invalid YAML: {exc}") from exc
    else:
        config = registry.load_preset(ref)
    if not isinstance(config, dict):
        raise ConfigError(f"{ref}: config must be a key/value tree")
    return config


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="gaugetrace",
        description="Verification suites for transported-derivative trace theory.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True,
                       help="YAML config path or packaged preset name")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--refine", type=int, default=3,
                       help="refinement levels for seminorm/trace/extension suites")
    args = parser.parse_args(argv)

    try:
        config = _load_config(args.config)
        if args.seed is not None:
            config["seed"] = args.seed
        sc = registry.build_scenario(config)
        names = SUITE_RUNNERS.keys() if args.command == "suite" else [args.command]
        rows = run_suites(sc, list(names), args.refine)
        _write_reports(Path(args.out), sc, rows)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    failed = [r for r in rows if r["status"] != "pass"]
    for r in rows:
        print(f"[{r['status'].upper():4}] {r['suite']}/{r['check']}: {r['property']} "
              f"(value {r['value']:.6e}, threshold {r['threshold']:.6e})")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
