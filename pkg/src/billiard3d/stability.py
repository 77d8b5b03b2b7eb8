"""Trace polynomials, stability classification, interval and tangency solving.

The once-around 2x2 block has determinant 1, so its trace decides everything:
|trace| < 2 means both eigenvalues sit on the unit circle (elliptic, linearly
stable), |trace| > 2 gives a real expanding/contracting pair, |trace| = 2 is
the marginal parabolic case.  As a function of the inter-mirror distance l the
trace is a degree-6 polynomial whose coefficients depend on the reflection
angle phi only through cos(phi).

Coefficients reach ~1e5 at steep angles while the interesting values sit near
+-2, so a plain float64 pipeline loses up to ~1e-8 to cancellation -- far too
coarse for the 1e-12 identity checks this module supports.  Coefficient
construction and Horner evaluation therefore run in double-double arithmetic
(pairs of floats combined with error-free transformations, ~32 significant
digits), which is vectorizable and leaves the rounding of cos(phi) and of the
final result as the only error sources.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import jacobi
from .exact_algebra import QuadPoly

ELLIPTIC = "elliptic-stable"
PARABOLIC = "parabolic"
HYPERBOLIC = "hyperbolic-unstable"

PARABOLIC_TOL = 1e-10
TANGENCY_TOL = 1e-9
BISECT_TOL = 1e-12

_SPLITTER = 134217729.0  # 2^27 + 1, Dekker splitting constant


class SolverError(RuntimeError):
    """Root bracketing / refinement failed; message carries the bracket."""


# -- double-double building blocks (hi, lo float pairs, numpy-broadcastable) -----


def _two_sum(a, b):
    s = a + b
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    return s, err


def _quick_sum(a, b):
    # requires |a| >= |b|, which holds after every operation below
    s = a + b
    return s, b - (s - a)


def _two_prod(a, b):
    p = a * b
    ca = _SPLITTER * a
    ah = ca - (ca - a)
    al = a - ah
    cb = _SPLITTER * b
    bh = cb - (cb - b)
    bl = b - bh
    err = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, err


def _dd(hi, lo=0.0):
    hi = np.asarray(hi, dtype=float)
    return hi, np.broadcast_to(np.asarray(lo, dtype=float), hi.shape)


def _dd_add(x, y):
    s, e = _two_sum(x[0], y[0])
    return _quick_sum(s, e + x[1] + y[1])


def _dd_mul(x, y):
    p, e = _two_prod(x[0], y[0])
    return _quick_sum(p, e + x[0] * y[1] + x[1] * y[0])


def _dd_div(x, y):
    q1 = x[0] / y[0]
    p, e = _two_prod(q1, y[0])
    r = ((x[0] - p) - e + x[1]) - q1 * y[1]
    return _quick_sum(q1, r / y[0])


def _dd_scale(x, f):
    # f must be exactly representable (small integers here)
    p, e = _two_prod(x[0], f)
    return _quick_sum(p, e + x[1] * f)


def _dd_float(x) -> float:
    out = x[0] + x[1]
    return out if getattr(out, "shape", ()) else float(out)


def _validate_phi(phi) -> np.ndarray:
    phi = np.asarray(phi, dtype=float)
    if np.any(phi <= 0.0) or np.any(phi >= math.pi / 2):
        raise ValueError("reflection angle must lie in (0, pi/2)")
    return phi


def _dd_trace_coeffs(phi):
    """Degree-6 trace coefficients as double-double pairs, index = power.

    Seeded from fl(cos(phi)); everything after that carries ~32 digits.
    """
    c = _dd(np.cos(_validate_phi(phi)))
    inv = _dd_div(_dd(np.ones(np.shape(c[0]))), c)
    s1 = _dd_add(inv, c)
    c2 = _dd_mul(c, c)
    inv2 = _dd_mul(inv, inv)
    s2 = _dd_add(inv2, c2)
    s3 = _dd_add(_dd_mul(inv2, inv), _dd_mul(c2, c))
    shape = np.shape(c[0])
    return [
        _dd(np.broadcast_to(2.0, shape)),
        _dd_scale(s1, -36.0),
        _dd_add(_dd(np.broadcast_to(228.0, shape)), _dd_scale(s2, 96.0)),
        _dd_scale(_dd_add(s3, _dd_scale(s1, 6.0)), -64.0),
        _dd_add(_dd(np.broadcast_to(480.0, shape)), _dd_scale(s2, 192.0)),
        _dd_scale(s1, -192.0),
        _dd(np.broadcast_to(64.0, shape)),
    ]


def _dd_horner(dd_coeffs, l):
    l = np.asarray(l, dtype=float)
    acc = dd_coeffs[-1]
    for c in dd_coeffs[-2::-1]:
        acc = _dd_add(_dd_mul(acc, _dd(l)), c)
    return acc


def trace_coeffs(phi: float) -> np.ndarray:
    """Float images of the degree-6 trace coefficients, index = power."""
    return np.array([_dd_float(c) for c in _dd_trace_coeffs(float(phi))])


def _dd_from_quadpoly(poly: QuadPoly):
    from fractions import Fraction

    out = []
    for c in poly.coeffs:
        image = c.fraction_image()
        hi = float(image)
        lo = float(image - Fraction(hi))
        out.append(_dd(hi, lo))
    return out


@dataclass(frozen=True)
class TracePoly:
    """trace of the once-around block as a polynomial in l at fixed phi.

    ``exact`` carries the Q(sqrt 2) coefficient list and is populated only at
    phi = pi/4, the one angle where the coefficients live in that ring.
    ``coeffs`` are the float images; evaluation runs on the double-double
    representation ``_dd_coeffs``.
    """

    phi: float
    coeffs: np.ndarray
    _dd_coeffs: tuple
    exact: Optional[QuadPoly] = None

    def value(self, l):
        return _dd_float(_dd_horner(self._dd_coeffs, l))

    def derivative_value(self, l):
        dcoeffs = [
            _dd_scale(c, float(k)) for k, c in enumerate(self._dd_coeffs)
        ][1:]
        return _dd_float(_dd_horner(dcoeffs, l))


def period_trace_poly_exact() -> QuadPoly:
    return jacobi.period_block_poly().trace()


def trace_poly_exact() -> TracePoly:
    """Exact expansion of trace((T L P L)^3) at phi = pi/4, r = 1."""
    exact = period_trace_poly_exact()
    dd = tuple(_dd_from_quadpoly(exact))
    return TracePoly(math.pi / 4, np.array(exact.float_coeffs()), dd, exact)


def trace_poly(phi: float) -> TracePoly:
    phi = float(_validate_phi(phi))
    if abs(phi - math.pi / 4) < 1e-15:
        return trace_poly_exact()
    dd = tuple(_dd_trace_coeffs(phi))
    return TracePoly(phi, np.array([_dd_float(c) for c in dd]), dd)


def trace_value(l, phi):
    """Trace of the once-around block at (l, phi); both may be ndarrays."""
    if np.any(np.asarray(l) < 0):
        raise ValueError("distance l must be nonnegative")
    return _dd_float(_dd_horner(_dd_trace_coeffs(phi), l))


def chebyshev_trace(l, phi):
    """Independent oracle: trace(M^3) = t^3 - 3t for unimodular M.

    t = trace(T L P L) = 2 - 4 (1/cos phi + cos phi) l + 4 l^2, so the full
    trace never has to be expanded; this route shares no code with the
    polynomial evaluation above.
    """
    c = np.cos(phi)
    if np.any(c <= 0):
        raise ValueError("reflection angle must lie in (0, pi/2)")
    l = np.asarray(l, dtype=float)
    t = 2.0 - 4.0 * (1.0 / c + c) * l + 4.0 * l * l
    out = t * t * t - 3.0 * t
    return out if out.shape else float(out)


@dataclass(frozen=True)
class Classification:
    kind: str
    trace: float
    eigenvalues: tuple[complex, complex]


def _kind_for(trace: float) -> str:
    if abs(abs(trace) - 2.0) <= PARABOLIC_TOL:
        return PARABOLIC
    return ELLIPTIC if abs(trace) < 2.0 else HYPERBOLIC


def _eigenvalues(trace: float) -> tuple[complex, complex]:
    disc = complex(trace * trace - 4.0)
    root = disc**0.5
    return ((trace + root) / 2.0, (trace - root) / 2.0)


def classify(l: float, phi: float) -> Classification:
    tr = float(trace_value(l, phi))
    return Classification(_kind_for(tr), tr, _eigenvalues(tr))


# -- interval and exception-point solving --------------------------------------


@dataclass(frozen=True)
class StabilityInterval:
    lo: float
    hi: float
    lo_kind: str  # "crossing" | "domain-edge"
    hi_kind: str


@dataclass(frozen=True)
class ExceptionPoint:
    """Isolated l inside a stable interval where the trace touches +-2."""

    l: float
    trace_target: float  # +2.0 or -2.0
    residual: float


@dataclass(frozen=True)
class StabilityReport:
    phi: float
    l_max: float
    intervals: tuple[StabilityInterval, ...]
    exception_points: tuple[ExceptionPoint, ...]
    window: Optional[float]  # eps of (1/cos phi, 1/cos phi + eps), if phi >= pi/4


def _bisect(f: Callable[[float], float], a: float, b: float, fa: float, fb: float,
            tol: float) -> float:
    if not (np.isfinite(fa) and np.isfinite(fb)) or fa * fb > 0:
        raise SolverError(f"invalid bracket [{a}, {b}] with f = ({fa}, {fb})")
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    for _ in range(256):
        m = 0.5 * (a + b)
        if b - a <= tol:
            return m
        fm = f(m)
        if fm == 0.0:
            return m
        if fa * fm < 0:
            b, fb = m, fm
        else:
            a, fa = m, fm
    raise SolverError(f"bisection stalled on [{a}, {b}]")


def _extremum(df: Callable[[float], float], a: float, b: float, tol: float):
    """Bisect the derivative's sign change; None if it is one-signed."""
    da, db = df(a), df(b)
    if da == 0.0:
        return a
    if db == 0.0:
        return b
    if da * db > 0:
        return None
    return _bisect(df, a, b, da, db, tol)


def stability_intervals(phi: float, l_max: float, *, step: Optional[float] = None,
                        bisect_tol: float = BISECT_TOL,
                        tangency_tol: float = TANGENCY_TOL) -> StabilityReport:
    """Scan [0, l_max] for |trace| < 2 intervals and trace = +-2 tangencies.

    A uniform pre-scan brackets sign changes of trace -+ 2 (refined by
    bisection).  Tangencies never change sign, so they are caught separately:
    discrete local minima of |trace -+ 2| are polished by bisecting the
    derivative, and accepted only if the residual drops below
    ``tangency_tol``.
    """
    phi = float(_validate_phi(phi))
    if l_max <= 0:
        raise ValueError("l_max must be positive")
    tp = trace_poly(phi)
    if step is None:
        step = 1e-3 * l_max
    n = max(int(round(l_max / step)) + 1, 9)
    grid = np.linspace(0.0, l_max, n)
    vals = tp.value(grid)

    crossings: list[float] = []
    tangencies: list[ExceptionPoint] = []

    for target in (2.0, -2.0):
        g = vals - target
        f = lambda x: float(tp.value(x)) - target
        df = tp.derivative_value
        exact_hits = np.flatnonzero(np.abs(g) < 1e-13)
        for i in exact_hits:
            li = float(grid[i])
            left = g[i - 1] if i > 0 else None
            right = g[i + 1] if i + 1 < n else None
            if left is not None and right is not None and left * right > 0:
                tangencies.append(ExceptionPoint(li, target, abs(float(g[i]))))
            else:
                crossings.append(li)
        sign = np.sign(g)
        for i in np.flatnonzero(sign[:-1] * sign[1:] < 0):
            if abs(g[i]) < 1e-13 or abs(g[i + 1]) < 1e-13:
                continue  # already recorded as a grid-point root
            crossings.append(
                _bisect(f, float(grid[i]), float(grid[i + 1]),
                        float(g[i]), float(g[i + 1]), bisect_tol)
            )
        # discrete local minima of |g| without a sign change: tangency candidates
        absg = np.abs(g)
        for i in range(1, n - 1):
            if not (absg[i] < absg[i - 1] and absg[i] < absg[i + 1]):
                continue
            if sign[i - 1] * sign[i] < 0 or sign[i] * sign[i + 1] < 0:
                continue
            if absg[i] < 1e-13:
                continue  # grid-point root, handled above
            lstar = _extremum(df, float(grid[i - 1]), float(grid[i + 1]), bisect_tol)
            if lstar is None:
                continue
            res = abs(f(lstar))
            if res < tangency_tol:
                tangencies.append(ExceptionPoint(lstar, target, res))

    crossings.sort()
    boundary: list[tuple[float, str]] = [(c, "crossing") for c in crossings]
    if not boundary or boundary[0][0] > 1e-12:
        boundary.insert(0, (0.0, "domain-edge"))
    if l_max - boundary[-1][0] > 1e-12:
        boundary.append((l_max, "domain-edge"))

    intervals = []
    for (lo, lo_kind), (hi, hi_kind) in zip(boundary[:-1], boundary[1:]):
        if hi - lo < 1e-9:
            continue
        mid = 0.5 * (lo + hi)
        if abs(float(tp.value(mid))) < 2.0:
            intervals.append(StabilityInterval(lo, hi, lo_kind, hi_kind))

    inside = [
        e
        for e in sorted(tangencies, key=lambda e: e.l)
        if any(iv.lo < e.l < iv.hi for iv in intervals)
    ]

    window = None
    if phi >= math.pi / 4 - 1e-12:
        window = epsilon_window(phi, bisect_tol=bisect_tol)

    return StabilityReport(phi, l_max, tuple(intervals), tuple(inside), window)


def epsilon_window(phi: float, *, bisect_tol: float = BISECT_TOL) -> float:
    """Width of the stable window starting at l0 = 1/cos(phi).

    The trace equals -2 at l0 and rises with positive slope, so the window is
    closed by the first genuine sign crossing of |trace| - 2 above l0;
    interior tangencies (|trace| touching 2 without crossing) do not end it.
    """
    phi = float(phi)
    if not (math.pi / 4 - 1e-12 <= phi < math.pi / 2):
        raise ValueError("the guaranteed window needs pi/4 <= phi < pi/2")
    tp = trace_poly(phi)
    l0 = 1.0 / math.cos(phi)
    if abs(float(tp.value(l0)) + 2.0) > 1e-9:
        raise SolverError(f"trace at l0={l0} is not -2; coefficients corrupt?")
    u = lambda x: abs(float(tp.value(x))) - 2.0
    step = 1e-3 * max(1.0, l0)
    prev_l, prev_u = l0 + step, u(l0 + step)
    if prev_u > 0:
        hi = _bisect(u, l0, prev_l, -1.0, prev_u, bisect_tol)
        eps = hi - l0
    else:
        eps = None
        for k in range(2, 100000):
            cur_l = l0 + k * step
            cur_u = u(cur_l)
            if cur_u > 0:  # strict: grazing zeros (tangencies) do not count
                hi = _bisect(u, prev_l, cur_l, prev_u, cur_u, bisect_tol)
                eps = hi - l0
                break
            prev_l, prev_u = cur_l, cur_u
        if eps is None:
            raise SolverError(f"no window end found above l0={l0}")
    if eps < 1e-12:
        raise SolverError(f"window at phi={phi} degenerate: eps={eps}")
    return eps


# -- parameter sweeps -----------------------------------------------------------


def sweep(phi_grid: Sequence[float], l_grid: Sequence[float]):
    """Row-major (phi outer, l inner) table of (phi, l, trace, kind)."""
    rows = []
    for phi in phi_grid:
        tp = trace_poly(phi)
        for l in l_grid:
            tr = float(tp.value(float(l)))
            rows.append((float(phi), float(l), tr, _kind_for(tr)))
    return rows


def format_float(x: float) -> str:
    return format(float(x), ".17g")


def sweep_csv(rows) -> str:
    lines = ["phi,l,trace,class"]
    for phi, l, tr, kind in rows:
        lines.append(f"{format_float(phi)},{format_float(l)},{format_float(tr)},{kind}")
    return "\n".join(lines) + "\n"
