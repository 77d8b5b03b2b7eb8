import math

import numpy as np
import pytest

from billiard3d import geometry, stability
from billiard3d.geometry import (
    ConstructionError,
    FlatPatch,
    ReflectionError,
    SphereCap,
    build_cube_table,
    build_flats_table,
    flat_angle_for,
    load_table,
    make_ray,
    numerical_monodromy,
    perturbation_growth,
    reflect,
    save_table,
    table_from_json,
    table_to_json,
    trace_orbit,
    verify_table,
)

SQRT2 = math.sqrt(2)


class TestCubeTable:
    @pytest.mark.parametrize("l", [0.5, 1.0, 1.5])
    def test_closure_and_angles(self, l):
        table = build_cube_table(l)
        res = trace_orbit(table, table.start_ray(), 7)
        assert res.status == 0
        assert np.linalg.norm(res.points[6] - res.points[0]) < 1e-12
        seg = np.linalg.norm(np.diff(res.points, axis=0), axis=1)
        assert np.max(np.abs(seg - l)) < 1e-12
        v = verify_table(table, with_monodromy=False)
        assert v.passed
        angle_check = {c.name: c for c in v.checks}["sphere-angle"]
        assert angle_check.value < 1e-12

    def test_reference_orbit_is_cube_vertices(self):
        table = build_cube_table(1.0)
        pts = table.orbit_points()
        assert np.max(np.abs(np.linalg.norm(np.diff(pts, axis=0), axis=1) - 1.0)) < 1e-15
        # all reflection angles measure 45 degrees: cos = 1/sqrt(2)
        start = table.start_ray()
        res = trace_orbit(table, start, 6)
        d_in = [start.direction] + list(res.directions[:-1])
        for k, (idx, pt) in enumerate(zip(res.indices, res.points)):
            n = table.patches[idx].normal_at(pt)
            assert abs(float(d_in[k] @ n)) == pytest.approx(1 / SQRT2, abs=1e-12)

    def test_separation_guard(self):
        with pytest.raises(ConstructionError):
            build_cube_table(0.3)  # caps of the default size would overlap
        with pytest.raises(ConstructionError):
            build_cube_table(-1.0)


class TestFlatsTable:
    def test_acceptance_point(self):
        phi = math.radians(62)
        l = 1.0 / math.cos(phi) + 0.05
        table = build_flats_table(l, phi)
        res = trace_orbit(table, table.start_ray(), 13)
        assert res.status == 0
        assert np.linalg.norm(res.points[12] - res.points[0]) < 1e-10
        assert [int(i) % 2 for i in res.indices[:12]] == [0, 1] * 6
        v = verify_table(table, with_monodromy=False)
        assert v.passed
        checks = {c.name: c for c in v.checks}
        assert checks["sphere-angle"].value < 1e-10
        assert checks["flat-angle"].value < 1e-10
        assert checks["spacing"].value < 1e-10

    def test_flat_angle_formula(self):
        for phi in (0.9, 1.0, math.radians(62), 1.4):
            psi = flat_angle_for(phi)
            assert psi == pytest.approx(3 * math.pi / 4 - phi)
            assert math.pi / 4 < psi < math.pi / 2

    def test_degenerate_limit_recovers_cube(self):
        l = 1.5
        table = build_flats_table(l, math.pi / 4 + 1e-4, detour_length=0.3)
        cube = build_cube_table(l)
        sphere_hits = table.orbit_points()[0::2]
        corners = cube.orbit_points()
        # sphere hits converge to the cube vertices as the cut collapses
        assert np.max(np.linalg.norm(sphere_hits - corners, axis=1)) < 1e-3

    def test_construction_errors_name_constraints(self):
        with pytest.raises(ConstructionError, match="pi/4"):
            build_flats_table(2.0, 0.5)
        with pytest.raises(ConstructionError, match="detour_length"):
            build_flats_table(2.0, 1.1, detour_length=2.5)
        with pytest.raises(ConstructionError, match="re-hit"):
            build_flats_table(12.0, math.radians(85), cap_angular_radius=0.19)
        with pytest.raises(ConstructionError, match="overlap"):
            build_flats_table(2.0, 1.1, detour_length=0.05, disk_radius=0.04)


class TestReflect:
    def test_flat_normal_incidence(self):
        patch = FlatPatch(np.zeros(3), np.array([0.0, 0.0, 1.0]), 1.0)
        ray = make_ray([0.0, 0.0, 2.0], [0.0, 0.0, -1.0])
        out = reflect(ray, patch)
        assert out.origin == pytest.approx(np.zeros(3), abs=1e-15)
        assert out.direction == pytest.approx([0.0, 0.0, 1.0], abs=1e-15)

    def test_flat_45_degree_axis_swap(self):
        patch = FlatPatch(np.zeros(3), geometry._unit([1.0, -1.0, 0.0]), 1.0)
        out = reflect(make_ray([-2.0, 0.0, 0.0], [1.0, 0.0, 0.0]), patch)
        assert out.direction == pytest.approx([0.0, 1.0, 0.0], abs=1e-15)

    def test_cube_corner_turns_edge_to_edge(self):
        table = build_cube_table(1.0)
        # vertex (1,0,0): incoming +x edge, outgoing +y edge
        ray = make_ray([0.0, 0.0, 0.0], [1.0, 0.0, 0.0])
        out = reflect(ray, table.patches[1])
        assert out.origin == pytest.approx([1.0, 0.0, 0.0], abs=1e-12)
        assert out.direction == pytest.approx([0.0, 1.0, 0.0], abs=1e-12)

    def test_miss_raises(self):
        patch = FlatPatch(np.zeros(3), np.array([0.0, 0.0, 1.0]), 0.5)
        with pytest.raises(ReflectionError):
            reflect(make_ray([2.0, 0.0, 1.0], [0.0, 0.0, -1.0]), patch)

    def test_tangential_raises(self):
        cap = SphereCap(np.zeros(3), 1.0, np.array([0.0, 1.0, 0.0]), 1.2)
        with pytest.raises(ReflectionError):
            reflect(make_ray([-2.0, 1.0, 0.0], [1.0, 0.0, 0.0]), cap)


class TestTraceOrbit:
    def test_perturbed_start_stays_close(self):
        table = build_cube_table(1.0)
        start = table.start_ray()
        _, d0, e_pl, e_tr = geometry._section_frame(table)
        ray = make_ray(start.origin + 1e-9 * e_tr, start.direction)
        res = trace_orbit(table, ray, 6)
        assert res.status == 0
        assert np.max(np.linalg.norm(res.points - table.orbit_points(), axis=1)) < 1e-6

    def test_reversibility(self):
        # reverse from the middle of the closing segment so the final hit can
        # actually re-reflect (a ray starting exactly on a patch cannot)
        table = build_cube_table(1.3)
        res = trace_orbit(table, table.start_ray(), 6)
        mid = res.points[-1] + 0.5 * table.l * res.directions[-1]
        back = trace_orbit(table, make_ray(mid, -res.directions[-1]), 6)
        assert back.status == 0
        assert np.max(np.linalg.norm(back.points - res.points[::-1], axis=1)) < 1e-9

    def test_escape_flagged(self):
        table = build_cube_table(1.0)
        res = trace_orbit(table, make_ray([0.2, 0.2, 0.2], [0.0, 1.0, 0.0]), 10)
        assert res.escaped
        assert len(res.indices) < 10

    def test_records(self):
        table = build_cube_table(1.0)
        recs = trace_orbit(table, table.start_ray(), 6).records()
        assert [r[0] for r in recs] == [0, 1, 2, 3, 4, 5]

    @pytest.mark.parametrize("builder", [
        lambda: build_cube_table(1.2),
        lambda: build_flats_table(2.3, math.radians(62)),
    ])
    def test_specular_invariant(self, builder):
        # angle of incidence equals angle of reflection at every hit
        table = builder()
        start = table.start_ray()
        res = trace_orbit(table, start, table.period)
        d_in = [start.direction] + list(res.directions[:-1])
        for k, (idx, pt) in enumerate(zip(res.indices, res.points)):
            n = table.patches[int(idx)].normal_at(pt)
            ang_in = geometry._angle_to_normal(d_in[k], n)
            ang_out = geometry._angle_to_normal(res.directions[k], n)
            assert abs(ang_in - ang_out) < 1e-12


class TestNumericalMonodromy:
    @pytest.mark.parametrize("l", [0.5, 1.0, 1.5, 2.0])
    def test_matches_transfer_matrices(self, l):
        table = build_cube_table(l)
        est = numerical_monodromy(table)
        analytic = float(stability.trace_value(l, math.pi / 4))
        assert np.trace(est.matrix[:2, :2]) == pytest.approx(analytic, abs=1e-3)
        assert np.trace(est.matrix[2:, 2:]) == pytest.approx(analytic, abs=1e-3)
        assert np.trace(est.matrix) == pytest.approx(2 * analytic, abs=2e-3)
        assert abs(est.det - 1.0) <= 1e-6
        assert est.leakage <= 1e-6
        assert est.block_signs == (-1, -1)
        assert est.richardson_residual <= 1e-4

    def test_flats_table_matches_general_trace(self):
        phi = math.radians(62)
        l = 1.0 / math.cos(phi) + 0.05
        table = build_flats_table(l, phi)
        est = numerical_monodromy(table)
        analytic = float(stability.trace_value(l, phi))
        assert np.trace(est.matrix[:2, :2]) == pytest.approx(analytic, abs=1e-3)
        assert abs(est.det - 1.0) <= 1e-6
        assert est.leakage <= 1e-6

    def test_step_validation(self):
        table = build_cube_table(1.0)
        with pytest.raises(ValueError):
            numerical_monodromy(table, h=1e-2)


class TestPerturbationGrowth:
    def test_linearized_stable_bounded(self):
        table = build_cube_table(1.5)
        rec = perturbation_growth(table, 1e-9, 10000, "linearized")
        assert rec.max_amplification < 1e3
        assert rec.max_amplification < 50  # oracle-measured headroom: ~7.2
        assert abs(rec.mean_log_growth) <= 1e-3
        assert rec.escaped_at is None

    def test_linearized_unstable_rate(self):
        table = build_cube_table(1.0)
        rec = perturbation_growth(table, 1e-9, 20, "linearized")
        tr = float(stability.trace_value(1.0, math.pi / 4))
        rate = math.log((abs(tr) + math.sqrt(tr * tr - 4.0)) / 2.0)
        assert rec.mean_log_growth == pytest.approx(rate, rel=0.05)

    def test_linearized_parabolic_linear_growth(self):
        table = build_cube_table(SQRT2)
        rec = perturbation_growth(table, 1e-9, 4000, "linearized")
        d = rec.deviations
        assert d[3999] / d[1999] == pytest.approx(2.0, rel=0.05)
        assert abs(rec.mean_log_growth) < 1e-2

    def test_nonlinear_stable_bounded(self):
        table = build_cube_table(1.5)
        rec = perturbation_growth(table, 1e-9, 300, "nonlinear")
        assert rec.escaped_at is None
        assert rec.deviations.max() < 1e-7

    def test_nonlinear_unstable_escapes_at_linear_rate(self):
        table = build_cube_table(1.0)
        rec = perturbation_growth(table, 1e-12, 40, "nonlinear")
        assert rec.escaped_at is not None
        tr = float(stability.trace_value(1.0, math.pi / 4))
        rate = math.log((abs(tr) + math.sqrt(tr * tr - 4.0)) / 2.0)
        n = rec.deviations.size
        assert n >= 6
        x = np.arange(1, n - 2)
        slope = np.polyfit(x, np.log(rec.deviations[1 : n - 2]), 1)[0]
        assert slope == pytest.approx(rate, rel=0.15)

    def test_validation(self):
        table = build_cube_table(1.0)
        with pytest.raises(ValueError):
            perturbation_growth(table, -1.0, 10)
        with pytest.raises(ValueError):
            perturbation_growth(table, 1e-9, 0)
        with pytest.raises(ValueError):
            perturbation_growth(table, 1e-9, 10, "magic")


class TestSerialization:
    def test_round_trip_bit_identical(self, tmp_path):
        for table in (
            build_cube_table(1.5),
            build_flats_table(2.3, math.radians(62)),
        ):
            text = table_to_json(table)
            again = table_to_json(table_from_json(text))
            assert text == again

    def test_save_load_preserves_behavior(self, tmp_path):
        table = build_flats_table(2.3, math.radians(62))
        path = tmp_path / "table.json"
        save_table(table, path)
        loaded = load_table(path)
        assert loaded.l == table.l and loaded.phi == table.phi
        r1 = trace_orbit(table, table.start_ray(), 12)
        r2 = trace_orbit(loaded, loaded.start_ray(), 12)
        assert np.array_equal(r1.points, r2.points)
        assert verify_table(loaded, with_monodromy=False).passed

    def test_schema_fields(self):
        import json

        doc = json.loads(table_to_json(build_cube_table(1.0)))
        assert set(doc) == {"params", "patches", "reference_orbit"}
        assert set(doc["params"]) == {"l", "phi"}
        assert all(p["type"] in ("sphere", "flat") for p in doc["patches"])
        assert all(set(r) == {"patch", "point"} for r in doc["reference_orbit"])
