import math
import random
from fractions import Fraction as F

import numpy as np
import pytest

from billiard3d import jacobi
from billiard3d.exact_algebra import QuadExt, QuadPoly
from billiard3d.jacobi import (
    Mat2,
    ReflectionParams,
    flat_reflection,
    free_flight,
    free_flight_exact,
    full_monodromy,
    full_monodromy_exact,
    period_block,
    period_block_poly,
    single_period_factor_exact,
    single_period_factor_poly,
    sphere_planar,
    sphere_planar_exact,
    sphere_transversal,
    sphere_transversal_exact,
)

SQRT2 = math.sqrt(2)

# single period factor T L P L at phi = pi/4, r = 1, as published
FACTOR_ENTRIES = {
    "m11": [(1, 0), (0, -2)],
    "m12": [(0, 0), (2, 0), (0, -2)],
    "m21": [(0, -3), (4, 0)],
    "m22": [(1, 0), (0, -4), (4, 0)],
}

# entries of (T L P L)^3
A_ENTRIES = {
    "m11": [(1, 0), (0, -24), (180, 0), (0, -224), (208, 0), (0, -32)],
    "m12": [(0, 0), (6, 0), (0, -54), (272, 0), (0, -272), (224, 0), (0, -32)],
    "m21": [(0, -9), (156, 0), (0, -360), (640, 0), (0, -240), (64, 0)],
    "m22": [(1, 0), (0, -30), (288, 0), (0, -496), (752, 0), (0, -256), (64, 0)],
}


class TestConstructors:
    def test_free_flight(self):
        m = free_flight(2.0)
        assert m.entries() == (1, 2.0, 0, 1)
        assert free_flight(0.0).to_array() == pytest.approx(np.eye(2))
        with pytest.raises(ValueError):
            free_flight(-0.5)

    def test_free_flight_additive(self):
        a, b = 0.7, 1.9
        lhs = (free_flight(a) @ free_flight(b)).to_array()
        assert lhs == pytest.approx(free_flight(a + b).to_array(), abs=1e-15)
        le = free_flight_exact(F(1, 3)) @ free_flight_exact(F(1, 6))
        assert le.m12 == F(1, 2)

    def test_sphere_planar(self):
        m = sphere_planar(ReflectionParams(1.0, math.pi / 4))
        assert m.m21 == pytest.approx(-2 * SQRT2, abs=1e-15)
        assert sphere_planar(ReflectionParams(1.0, 0.0)).m21 == pytest.approx(-2.0)
        assert sphere_planar(ReflectionParams(1.0, math.pi / 3)).m21 == pytest.approx(
            -4.0, abs=1e-14
        )
        assert sphere_planar_exact().m21 == QuadExt(0, -2)

    def test_sphere_transversal(self):
        m = sphere_transversal(ReflectionParams(1.0, math.pi / 4))
        assert m.m21 == pytest.approx(-SQRT2, abs=1e-15)
        assert sphere_transversal(ReflectionParams(1.0, 0.0)).m21 == pytest.approx(-2.0)
        assert sphere_transversal(ReflectionParams(1.0, math.pi / 3)).m21 == pytest.approx(
            -1.0, abs=1e-14
        )
        assert sphere_transversal_exact().m21 == QuadExt(0, -1)

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            ReflectionParams(0.0, 0.3)
        with pytest.raises(ValueError):
            ReflectionParams(1.0, math.pi / 2)

    def test_flat_reflection_is_identity(self):
        m = flat_reflection()
        assert m.entries() == (1, 0, 0, 1)
        assert m.det() == 1
        combo = flat_reflection() @ free_flight(0.4) @ flat_reflection() @ free_flight(0.6)
        assert combo.to_array() == pytest.approx(free_flight(1.0).to_array())


class TestPeriodBlock:
    def test_single_period_factor_matches_published_matrix(self):
        m = single_period_factor_poly()
        assert m.m11 == QuadPoly.from_pairs(FACTOR_ENTRIES["m11"])
        assert m.m12 == QuadPoly.from_pairs(FACTOR_ENTRIES["m12"])
        assert m.m21 == QuadPoly.from_pairs(FACTOR_ENTRIES["m21"])
        assert m.m22 == QuadPoly.from_pairs(FACTOR_ENTRIES["m22"])

    def test_block_entries_match_published_lists(self):
        a = period_block_poly()
        assert a.m11 == QuadPoly.from_pairs(A_ENTRIES["m11"])
        assert a.m12 == QuadPoly.from_pairs(A_ENTRIES["m12"])
        assert a.m21 == QuadPoly.from_pairs(A_ENTRIES["m21"])
        assert a.m22 == QuadPoly.from_pairs(A_ENTRIES["m22"])

    def test_block_det_is_one_symbolically(self):
        a = period_block_poly()
        assert a.det() == QuadPoly([1])

    def test_trace_at_sqrt2_is_minus_two(self):
        a = period_block_exact_at_sqrt2 = jacobi.period_block_exact(QuadExt(0, 1))
        assert a.trace() == QuadExt(-2, 0)

    def test_float_matches_exact(self):
        for l in (F(1, 2), F(1), F(3, 2)):
            exact = jacobi.period_block_exact(l).to_array()
            fl = period_block(float(l), math.pi / 4).to_array()
            assert fl == pytest.approx(exact, rel=1e-12, abs=1e-12)

    def test_unimodular_random_float_products(self):
        rng = random.Random(77)
        params = ReflectionParams(1.0, 0.9)
        gens = [
            lambda: free_flight(rng.uniform(0, 3)),
            lambda: sphere_planar(params),
            lambda: sphere_transversal(params),
            flat_reflection,
        ]
        for _ in range(30):
            m = free_flight(0.0)
            for _ in range(rng.randint(1, 50)):
                m = m @ rng.choice(gens)()
            # float det of a long product cancels terms of size ~|ad| + |bc|,
            # so the achievable tolerance scales with that magnitude
            scale = max(1.0, abs(m.m11 * m.m22) + abs(m.m12 * m.m21))
            assert abs(float(m.det()) - 1.0) < 1e-12 * scale

    def test_unimodular_random_exact_products(self):
        rng = random.Random(78)
        gens = [
            lambda: free_flight_exact(F(rng.randint(0, 12), rng.randint(1, 8))),
            sphere_planar_exact,
            sphere_transversal_exact,
            flat_reflection,
        ]
        for _ in range(10):
            m = flat_reflection()
            for _ in range(rng.randint(1, 50)):
                m = m @ rng.choice(gens)()
            assert m.det() == QuadExt(1, 0)

    def test_cube_trace_identity_random_unimodular(self):
        rng = random.Random(2024)
        for _ in range(1000):
            a = rng.uniform(-2, 2) or 0.5
            b, c = rng.uniform(-2, 2), rng.uniform(-2, 2)
            d = (1.0 + b * c) / a
            m = Mat2(a, b, c, d)
            t = m.trace()
            cube = (m @ m @ m).trace()
            assert abs(cube - (t**3 - 3 * t)) <= 1e-9 * max(1.0, abs(cube))

    def test_cube_trace_identity_exact_for_period_factor(self):
        t = single_period_factor_poly().trace()
        assert period_block_poly().trace() == t * t * t - 3 * t


class TestFullMonodromy:
    def test_block_diagonal_exactly(self):
        m = full_monodromy_exact(F(3, 2))
        zero = QuadExt(0, 0)
        assert m.b12.entries() == (zero, zero, zero, zero)
        assert m.b21.entries() == (zero, zero, zero, zero)

    def test_blocks_share_trace(self):
        m = full_monodromy_exact(F(5, 4))
        assert m.b11.trace() == m.b22.trace()
        mf = full_monodromy(1.37, 1.1)
        assert float(mf.b11.trace()) == pytest.approx(float(mf.b22.trace()), rel=1e-12)

    def test_det_one(self):
        m = full_monodromy_exact(F(2, 3))
        assert m.det() == QuadExt(1, 0)
        mf = full_monodromy(0.8, 0.6)
        assert float(mf.det()) == pytest.approx(1.0, abs=1e-10)

    def test_trace_is_twice_block_trace(self):
        for l, phi in ((0.5, math.pi / 4), (1.7, 1.2), (2.4, 0.7)):
            m4 = full_monodromy(l, phi)
            a = period_block(l, phi)
            assert float(m4.trace()) == pytest.approx(2 * float(a.trace()), rel=1e-13)
