"""Exact arithmetic in the ring Q(sqrt(2)) and dense univariate polynomials over it.

Every coefficient appearing in the reflection-matrix products at a 45-degree
reflection angle has the shape a + b*sqrt(2) with rational a, b, so this small
ring is enough to verify all of them with zero rounding error.  Rationals are
backed by :class:`fractions.Fraction` (arbitrary-precision integers): degree-6
polynomial products overflow 64-bit machine integers almost immediately.

All values are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import total_ordering
from typing import Iterable, Sequence, Union

Rational = Union[int, Fraction]

SQRT2 = math.sqrt(2)  # float image of the generator

# rational image of sqrt(2) accurate to ~1e-36, for high-precision conversions
SQRT2_FRACTION = Fraction(math.isqrt(2 * 10**72), 10**36)


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    raise TypeError(f"expected an exact rational, got {type(x).__name__}")


@total_ordering
@dataclass(frozen=True)
class QuadExt:
    """a + b*sqrt(2) with exact rational a (``rat``) and b (``root``)."""

    rat: Fraction = Fraction(0)
    root: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "rat", _as_fraction(self.rat))
        object.__setattr__(self, "root", _as_fraction(self.root))

    # -- ring operations ---------------------------------------------------

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return QuadExt(self.rat + other.rat, self.root + other.root)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return QuadExt(self.rat - other.rat, self.root - other.root)

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return QuadExt(-self.rat, -self.root)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        # (a + b r)(c + d r) = (ac + 2bd) + (ad + bc) r   with r*r = 2
        return QuadExt(
            self.rat * other.rat + 2 * self.root * other.root,
            self.rat * other.root + self.root * other.rat,
        )

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("only nonnegative integer powers are defined")
        out = QuadExt(1)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    @staticmethod
    def _coerce(other):
        if isinstance(other, QuadExt):
            return other
        if isinstance(other, (int, Fraction)):
            return QuadExt(other)
        return NotImplemented

    # -- predicates and ordering --------------------------------------------

    def is_zero(self) -> bool:
        # sqrt(2) is irrational: a + b*sqrt(2) = 0 forces a = b = 0
        return self.rat == 0 and self.root == 0

    def __bool__(self) -> bool:
        return not self.is_zero()

    def sign(self) -> int:
        """Exact sign, using a^2 vs 2 b^2 when the parts disagree."""
        a, b = self.rat, self.root
        if a == 0 and b == 0:
            return 0
        if a >= 0 and b >= 0:
            return 1
        if a <= 0 and b <= 0:
            return -1
        # a and b have strictly opposite signs; |a| vs |b|*sqrt(2)
        if a > 0:  # b < 0: positive iff a > |b| sqrt(2) iff a^2 > 2 b^2
            return 1 if a * a > 2 * b * b else -1
        return 1 if 2 * b * b > a * a else -1

    def __eq__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self.rat == other.rat and self.root == other.root

    def __lt__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return (self - other).sign() < 0

    def __hash__(self):
        return hash((self.rat, self.root))

    # -- conversions ---------------------------------------------------------

    def __float__(self) -> float:
        return float(self.rat) + float(self.root) * SQRT2

    def fraction_image(self) -> Fraction:
        """Rational approximation accurate to ~|root| * 1e-36.

        The plain float image loses up to half an ulp of |root|*sqrt(2) to
        cancellation; this one supports conversions that must do better.
        """
        return self.rat + self.root * SQRT2_FRACTION

    def __str__(self) -> str:
        return f"{self.rat} + {self.root}*sqrt(2)"

    def __repr__(self) -> str:
        return f"QuadExt({self.rat!r}, {self.root!r})"


ZERO = QuadExt()
ONE = QuadExt(1)
SQRT2_EXACT = QuadExt(0, 1)

Scalar = Union[int, Fraction, QuadExt]


def _as_quadext(x) -> QuadExt:
    if isinstance(x, QuadExt):
        return x
    if isinstance(x, (int, Fraction)):
        return QuadExt(x)
    if isinstance(x, tuple) and len(x) == 2:
        return QuadExt(x[0], x[1])
    raise TypeError(f"cannot interpret {x!r} as an element of Q(sqrt 2)")


class QuadPoly:
    """Dense polynomial in one variable with QuadExt coefficients.

    ``coeffs[k]`` is the coefficient of the k-th power; the representation is
    canonical (no trailing zero above degree 0), so equality is plain
    coefficient-list equality.  Degrees stay at most 6 in this project, hence
    dense storage.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable = (0,)):
        cs = [_as_quadext(c) for c in coeffs]
        if not cs:
            cs = [ZERO]
        while len(cs) > 1 and cs[-1].is_zero():
            cs.pop()
        object.__setattr__(self, "coeffs", tuple(cs))

    def __setattr__(self, *args):
        raise AttributeError("QuadPoly is immutable")

    # -- constructors ---------------------------------------------------------

    @classmethod
    def from_pairs(cls, pairs: Sequence[tuple]) -> "QuadPoly":
        """Build from (rational, sqrt2-coefficient) pairs, index = power."""
        return cls([QuadExt(a, b) for a, b in pairs])

    @classmethod
    def constant(cls, c) -> "QuadPoly":
        return cls([c])

    @classmethod
    def variable(cls) -> "QuadPoly":
        return cls([0, 1])

    # -- ring operations -------------------------------------------------------

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        n = max(len(self.coeffs), len(other.coeffs))
        return QuadPoly(
            [self.coeff(k) + other.coeff(k) for k in range(n)]
        )

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return QuadPoly([-c for c in self.coeffs])

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        out = [ZERO] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a.is_zero():
                continue
            for j, b in enumerate(other.coeffs):
                out[i + j] = out[i + j] + a * b
        return QuadPoly(out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("only nonnegative integer powers are defined")
        out = QuadPoly([1])
        for _ in range(n):
            out = out * self
        return out

    # -- queries ---------------------------------------------------------------

    def coeff(self, k: int) -> QuadExt:
        return self.coeffs[k] if k < len(self.coeffs) else ZERO

    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return len(self.coeffs) == 1 and self.coeffs[0].is_zero()

    def __eq__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __call__(self, x) -> QuadExt:
        """Exact Horner evaluation at x in Q or Q(sqrt 2)."""
        x = _as_quadext(x)
        acc = ZERO
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def float_coeffs(self) -> list[float]:
        return [float(c) for c in self.coeffs]

    @staticmethod
    def _coerce(other):
        if isinstance(other, QuadPoly):
            return other
        if isinstance(other, (int, Fraction, QuadExt)):
            return QuadPoly([other])
        return NotImplemented

    def __str__(self) -> str:
        return " + ".join(f"({c})*l^{k}" for k, c in enumerate(self.coeffs))

    def __repr__(self) -> str:
        return f"QuadPoly({list(self.coeffs)!r})"


# -- functional aliases matching the operation-level API ----------------------


def quad_add(x: QuadExt, y: QuadExt) -> QuadExt:
    return x + y


def quad_mul(x: QuadExt, y: QuadExt) -> QuadExt:
    return x * y


def poly_mul(p: QuadPoly, q: QuadPoly) -> QuadPoly:
    return p * q


def poly_eval(p: QuadPoly, x) -> QuadExt:
    return p(x)


def poly_equal(p: QuadPoly, q: QuadPoly) -> bool:
    return p == q
