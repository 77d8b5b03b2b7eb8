"""Normal-plane transfer matrices for billiard orbits with spherical mirrors.

A transverse perturbation of an orbit is tracked as the pair (offset,
slope) in the plane perpendicular to the ray.  Free flight shears the pair,
a spherical mirror kicks the slope; at oblique incidence the kick strength
differs between the component lying in the plane of incidence ("planar",
2/(r cos phi)) and the component perpendicular to it ("transversal",
2 cos(phi)/r) -- that direction-dependence (astigmatism) is what the whole
construction exploits.

Matrices are generic over the scalar: float, numpy arrays (elementwise
batches), exact QuadExt values at phi = pi/4, or QuadPoly entries when the
flight length is kept symbolic.  One composition code path serves all of
them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any

import numpy as np

from .exact_algebra import QuadExt, QuadPoly


def _is_negative(x) -> bool:
    if isinstance(x, QuadExt):
        return x.sign() < 0
    if isinstance(x, QuadPoly):
        return False  # symbolic length: cannot be sign-checked
    return bool(np.any(np.asarray(x) < 0))


@dataclass(frozen=True)
class Mat2:
    """2x2 matrix over any commutative ring scalar."""

    m11: Any
    m12: Any
    m21: Any
    m22: Any

    def __matmul__(self, other: "Mat2") -> "Mat2":
        return Mat2(
            self.m11 * other.m11 + self.m12 * other.m21,
            self.m11 * other.m12 + self.m12 * other.m22,
            self.m21 * other.m11 + self.m22 * other.m21,
            self.m21 * other.m12 + self.m22 * other.m22,
        )

    def __pow__(self, n: int) -> "Mat2":
        if not isinstance(n, int) or n < 1:
            raise ValueError("power must be a positive integer")
        out = self
        for _ in range(n - 1):
            out = out @ self
        return out

    def trace(self):
        return self.m11 + self.m22

    def det(self):
        return self.m11 * self.m22 - self.m12 * self.m21

    def inv_unimodular(self) -> "Mat2":
        """Inverse assuming det = 1 (adjugate); stays inside the ring."""
        return Mat2(self.m22, -self.m12, -self.m21, self.m11)

    def entries(self) -> tuple:
        return (self.m11, self.m12, self.m21, self.m22)

    def to_array(self) -> np.ndarray:
        return np.array(
            [[float(self.m11), float(self.m12)], [float(self.m21), float(self.m22)]]
        )


@dataclass(frozen=True)
class Mat4:
    """4x4 matrix stored as four 2x2 blocks, row-major block order.

    Block coordinates follow the (planar, transversal) state ordering:
    component 0-1 is the planar pair, component 2-3 the transversal pair.
    """

    b11: Mat2
    b12: Mat2
    b21: Mat2
    b22: Mat2

    @classmethod
    def block_diagonal(cls, upper: Mat2, lower: Mat2) -> "Mat4":
        z = upper.m11 * 0
        zero = Mat2(z, z, z, z)
        return cls(upper, zero, zero, lower)

    def trace(self):
        return self.b11.trace() + self.b22.trace()

    def det(self):
        rows = self.entries()
        # permutation expansion: exact-ring safe, fine for a 4x4
        total = None
        import itertools

        for perm in itertools.permutations(range(4)):
            sign = 1
            for i in range(4):
                for j in range(i + 1, 4):
                    if perm[i] > perm[j]:
                        sign = -sign
            term = rows[0][perm[0]]
            for i in range(1, 4):
                term = term * rows[i][perm[i]]
            term = term if sign > 0 else -term
            total = term if total is None else total + term
        return total

    def entries(self) -> tuple:
        r1 = (self.b11.m11, self.b11.m12, self.b12.m11, self.b12.m12)
        r2 = (self.b11.m21, self.b11.m22, self.b12.m21, self.b12.m22)
        r3 = (self.b21.m11, self.b21.m12, self.b22.m11, self.b22.m12)
        r4 = (self.b21.m21, self.b21.m22, self.b22.m21, self.b22.m22)
        return (r1, r2, r3, r4)

    def to_array(self) -> np.ndarray:
        return np.array([[float(x) for x in row] for row in self.entries()])


@dataclass(frozen=True)
class ReflectionParams:
    """Mirror radius and reflection angle (measured from the normal)."""

    r: float = 1.0
    phi: float = math.pi / 4

    def __post_init__(self):
        if np.any(np.asarray(self.r) <= 0):
            raise ValueError("mirror radius must be positive")
        phi = np.asarray(self.phi)
        if np.any(phi < 0) or np.any(phi >= math.pi / 2):
            raise ValueError("reflection angle must lie in [0, pi/2)")


def free_flight(l) -> Mat2:
    """Shear by the flight length: [[1, l], [0, 1]]."""
    if _is_negative(l):
        raise ValueError("flight length must be nonnegative")
    return Mat2(1, l, 0, 1)


def sphere_planar(p: ReflectionParams) -> Mat2:
    """In-plane-of-incidence reflection kick: [[1, 0], [-2/(r cos phi), 1]]."""
    return Mat2(1.0, 0.0, -2.0 / (p.r * np.cos(p.phi)), 1.0)


def sphere_transversal(p: ReflectionParams) -> Mat2:
    """Cross-plane reflection kick: [[1, 0], [-2 cos(phi)/r, 1]]."""
    return Mat2(1.0, 0.0, -2.0 * np.cos(p.phi) / p.r, 1.0)


def flat_reflection() -> Mat2:
    """A flat mirror has zero curvature: identity (the r -> inf limit)."""
    return Mat2(1, 0, 0, 1)


# exact variants, valid at phi = pi/4 and r = 1 where 2/cos(phi) = 2*sqrt(2)


def free_flight_exact(l) -> Mat2:
    return free_flight(l)


def sphere_planar_exact() -> Mat2:
    return Mat2(1, 0, QuadExt(0, -2), 1)


def sphere_transversal_exact() -> Mat2:
    return Mat2(1, 0, QuadExt(0, -1), 1)


def single_period_factor(l, phi, r=1.0) -> Mat2:
    """T L P L: one sixth of the closed orbit (two flights, both mirror roles)."""
    p = ReflectionParams(r, phi)
    L = free_flight(l)
    return sphere_transversal(p) @ L @ sphere_planar(p) @ L


def single_period_factor_exact(l) -> Mat2:
    """Exact T L P L at phi = pi/4, r = 1; l rational or in Q(sqrt 2)."""
    L = free_flight_exact(l if isinstance(l, (QuadExt, QuadPoly)) else Fraction(l))
    return sphere_transversal_exact() @ L @ sphere_planar_exact() @ L


def single_period_factor_poly() -> Mat2:
    """T L P L with the flight length kept symbolic (QuadPoly entries)."""
    return single_period_factor_exact(QuadPoly.variable())


def period_block(l, phi, r=1.0) -> Mat2:
    """(T L P L)^3: the once-around map of one normal-plane component.

    The six reflections alternate the planar/transversal role of each fixed
    component, which is why both kick matrices appear.  l may be zero (used
    as a fixture; the closed orbit itself needs l > 0).
    """
    return single_period_factor(l, phi, r) ** 3


def period_block_exact(l) -> Mat2:
    return single_period_factor_exact(l) ** 3


def period_block_poly() -> Mat2:
    return single_period_factor_poly() ** 3


def full_monodromy(l, phi, r=1.0) -> Mat4:
    """Block-diagonal 4x4 monodromy: diag(A, (TL) A (TL)^-1), A = (TLPL)^3.

    The two normal-plane components run the same reflection sequence one
    phase apart, so the second block is the first conjugated by T L; the
    blocks share trace and eigenvalues.
    """
    p = ReflectionParams(r, phi)
    A = period_block(l, phi, r)
    TL = sphere_transversal(p) @ free_flight(l)
    return Mat4.block_diagonal(A, TL @ A @ TL.inv_unimodular())


def full_monodromy_exact(l) -> Mat4:
    A = period_block_exact(l)
    lq = l if isinstance(l, QuadExt) else QuadExt(Fraction(l))
    TL = sphere_transversal_exact() @ free_flight_exact(lq)
    return Mat4.block_diagonal(A, TL @ A @ TL.inv_unimodular())
