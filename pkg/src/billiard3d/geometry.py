"""Full 3D realization of the stable-orbit constructions.

Two table families are built here:

* ``build_cube_table(l)``: six spherical caps of radius 1 whose central points
  sit on six vertices of a cube of side l, oriented so the closed hexagonal
  edge path reflects specularly with a 45-degree reflection angle at every
  hit.

* ``build_flats_table(l, phi)``: the steep-angle variant.  Each cube corner is
  cut by a two-mirror detour: a spherical cap on the incoming edge (reflection
  angle phi > pi/4, turning the ray by pi - 2 phi) followed by a flat mirror
  at the start of the outgoing edge (reflection angle 3 pi/4 - phi, supplying
  the rest of the quarter turn).  Twelve reflections alternate
  sphere/flat/sphere/... and the sphere-to-sphere path length is exactly the
  requested l, independent of the cube side.

Everything downstream of table construction (closure checks, finite
-difference monodromy, perturbation growth) goes through the ray-stepping
kernel and knows nothing about how the tables were made, so it serves as an
independent check of the transfer-matrix model.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from . import jacobi, stability, tracing

CAP_ANGULAR_RADIUS_DEFAULT = 0.2
SELF_HIT_GUARD = 1e-9
TANGENT_EPS = 1e-12


class ConstructionError(ValueError):
    """A table cannot be realized; the message names the violated constraint."""


class ReflectionError(RuntimeError):
    """Single-patch reflection failed (miss or tangential hit)."""


class DifferencingError(RuntimeError):
    """Finite-difference monodromy estimation failed."""


def _unit(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


@dataclass(frozen=True)
class SphereCap:
    """Piece of a sphere: points within ``angular_radius`` of ``axis`` from center."""

    center: np.ndarray
    radius: float
    axis: np.ndarray
    angular_radius: float

    def __post_init__(self):
        if not (0.0 < self.angular_radius < math.pi / 2):
            raise ConstructionError("cap angular radius must lie in (0, pi/2)")
        if self.radius <= 0:
            raise ConstructionError("sphere radius must be positive")

    def packed(self) -> np.ndarray:
        return tracing.pack_sphere(self.center, self.radius, self.axis,
                                   self.angular_radius)

    def extent(self) -> float:
        # farthest surface point from the central point, chord length
        return 2.0 * self.radius * math.sin(self.angular_radius / 2.0)

    def central_point(self) -> np.ndarray:
        return self.center + self.radius * np.asarray(self.axis)

    def normal_at(self, point) -> np.ndarray:
        return (np.asarray(point, dtype=float) - self.center) / self.radius


@dataclass(frozen=True)
class FlatPatch:
    """Mirror disk: points of a plane within ``radius`` of ``point``."""

    point: np.ndarray
    normal: np.ndarray
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ConstructionError("disk radius must be positive")

    def packed(self) -> np.ndarray:
        return tracing.pack_flat(self.point, self.normal, self.radius)

    def extent(self) -> float:
        return self.radius

    def central_point(self) -> np.ndarray:
        return np.asarray(self.point, dtype=float)

    def normal_at(self, point) -> np.ndarray:
        return np.asarray(self.normal, dtype=float)


SurfacePatch = Union[SphereCap, FlatPatch]


@dataclass(frozen=True)
class Ray:
    origin: np.ndarray
    direction: np.ndarray


def make_ray(origin, direction) -> Ray:
    return Ray(np.asarray(origin, dtype=float), _unit(direction))


@dataclass
class BilliardTable:
    """Patches plus the reference periodic orbit they were built around."""

    patches: list[SurfacePatch]
    reference_orbit: list[tuple[int, np.ndarray]]  # (patch index, hit point)
    l: float
    phi: float
    packed: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.packed = np.vstack([p.packed() for p in self.patches])

    @property
    def period(self) -> int:
        return len(self.reference_orbit)

    @property
    def kind(self) -> str:
        return "flats" if any(isinstance(p, FlatPatch) for p in self.patches) else "cube"

    def orbit_indices(self) -> np.ndarray:
        return np.array([i for i, _ in self.reference_orbit], dtype=np.int64)

    def orbit_points(self) -> np.ndarray:
        return np.array([p for _, p in self.reference_orbit])

    def start_ray(self) -> Ray:
        last = self.reference_orbit[-1][1]
        first = self.reference_orbit[0][1]
        return make_ray(last, first - last)


# six cube vertices visited by the closed hexagonal edge path
_CUBE_PATTERN = np.array(
    [[0, 0, 0], [1, 0, 0], [1, 1, 0], [1, 1, 1], [0, 1, 1], [0, 0, 1]], dtype=float
)


def _check_separation(patches: Sequence[SurfacePatch]):
    pts = [p.central_point() for p in patches]
    ext = [p.extent() for p in patches]
    for i in range(len(patches)):
        for j in range(i + 1, len(patches)):
            gap = np.linalg.norm(pts[i] - pts[j]) - ext[i] - ext[j]
            if gap <= 0:
                raise ConstructionError(
                    f"patches {i} and {j} overlap (gap {gap:.3g}); "
                    "shrink cap/disk sizes or increase l"
                )


def build_cube_table(l: float, *, radius: float = 1.0,
                     cap_angular_radius: float = CAP_ANGULAR_RADIUS_DEFAULT,
                     ) -> BilliardTable:
    """Six spherical caps on cube vertices; reflection angle pi/4 everywhere.

    Cap centers sit at vertex + radius * n where n bisects the incoming and
    outgoing edge directions, which makes each mirror concave toward the orbit
    (focusing) and the hexagonal edge path specular.
    """
    if l <= 0:
        raise ConstructionError("cube side l must be positive")
    verts = l * _CUBE_PATTERN
    dirs = [_unit(verts[(i + 1) % 6] - verts[i]) for i in range(6)]
    patches: list[SurfacePatch] = []
    orbit: list[tuple[int, np.ndarray]] = []
    for i in range(6):
        n = _unit(dirs[i] - dirs[i - 1])
        patches.append(
            SphereCap(verts[i] + radius * n, radius, -n, cap_angular_radius)
        )
        orbit.append((i, verts[i]))
    _check_separation(patches)
    return BilliardTable(patches, orbit, float(l), math.pi / 4)


def build_flats_table(l: float, phi: float, *, radius: float = 1.0,
                      detour_length: Optional[float] = None,
                      cap_angular_radius: Optional[float] = None,
                      disk_radius: Optional[float] = None) -> BilliardTable:
    """Twelve-reflection table: sphere + flat detour at every cube corner.

    ``detour_length`` is the sphere-to-flat distance m (the free parameter of
    the corner cut).  The sphere hit sits m*cos(pi - 2 phi) before the corner
    on the incoming edge, the flat hit m*sin(pi - 2 phi) after the corner on
    the outgoing edge, and the cube side adjusts so each sphere-to-sphere path
    is exactly l.  As phi -> pi/4 the cut collapses onto the corner and the
    table degenerates to the six-sphere one.
    """
    if not (math.pi / 4 < phi < math.pi / 2):
        raise ConstructionError("flats construction needs pi/4 < phi < pi/2")
    if l <= 0:
        raise ConstructionError("sphere-to-sphere distance l must be positive")
    theta1 = math.pi - 2.0 * phi  # turn at the sphere; the flat supplies the rest
    if detour_length is None:
        detour_length = min(0.25 * l, 0.5)
    m = float(detour_length)
    if not (0.0 < m < l):
        raise ConstructionError(
            f"detour_length must lie in (0, l); got {m} with l={l}"
        )
    if cap_angular_radius is None:
        cap_angular_radius = min(CAP_ANGULAR_RADIUS_DEFAULT, 0.45 * theta1)
    if cap_angular_radius >= 0.9 * theta1:
        raise ConstructionError(
            "cap angular radius must stay below the same-cap re-hit angle "
            f"pi - 2*phi = {theta1:.4g}"
        )
    if disk_radius is None:
        disk_radius = min(0.1, 0.25 * m)

    s = m * math.cos(theta1)
    h = m * math.sin(theta1)
    side = l - m * (1.0 - math.sin(theta1) - math.cos(theta1))
    if side <= h + s:
        raise ConstructionError("cube side too short for the corner cuts")

    verts = side * _CUBE_PATTERN
    dirs = [_unit(verts[(i + 1) % 6] - verts[i]) for i in range(6)]
    patches: list[SurfacePatch] = []
    orbit: list[tuple[int, np.ndarray]] = []
    for i in range(6):
        a = dirs[i - 1]  # incoming edge direction
        b = dirs[i]      # outgoing edge direction
        hit_s = verts[i] - s * a
        d1 = math.cos(theta1) * a + math.sin(theta1) * b  # chord direction
        n_s = _unit(d1 - a)
        patches.append(
            SphereCap(hit_s + radius * n_s, radius, -n_s, cap_angular_radius)
        )
        orbit.append((2 * i, hit_s))
        hit_f = verts[i] + h * b
        patches.append(FlatPatch(hit_f, _unit(b - d1), disk_radius))
        orbit.append((2 * i + 1, hit_f))
    _check_separation(patches)
    return BilliardTable(patches, orbit, float(l), float(phi))


def flat_angle_for(phi: float) -> float:
    """Flat-mirror reflection angle that completes the quarter turn."""
    return 3.0 * math.pi / 4.0 - phi


# -- single-patch reflection -----------------------------------------------------


def _patch_intersection(o, d, patch: SurfacePatch, t_min: float) -> Optional[float]:
    if isinstance(patch, SphereCap):
        oc = o - patch.center
        b = float(oc @ d)
        c0 = float(oc @ oc) - patch.radius**2
        disc = b * b - c0
        if disc <= 0:
            return None
        sq = math.sqrt(disc)
        best = None
        for t in (-b - sq, -b + sq):
            if t <= t_min or (best is not None and t >= best):
                continue
            w = (o + t * d - patch.center) / patch.radius
            if float(w @ patch.axis) >= math.cos(patch.angular_radius):
                best = t
        return best
    dn = float(np.asarray(patch.normal) @ d)
    if abs(dn) <= 1e-14:
        return None
    t = float((np.asarray(patch.point) - o) @ np.asarray(patch.normal)) / dn
    if t <= t_min:
        return None
    hit = o + t * d
    if float((hit - patch.point) @ (hit - patch.point)) > patch.radius**2:
        return None
    return t


def reflect(ray: Ray, patch: SurfacePatch, *, t_min: float = SELF_HIT_GUARD) -> Ray:
    """Specular reflection off one patch; the ray must actually hit it."""
    o = np.asarray(ray.origin, dtype=float)
    d = _unit(ray.direction)
    t = _patch_intersection(o, d, patch, t_min)
    if t is None:
        raise ReflectionError("ray misses the patch")
    hit = o + t * d
    n = patch.normal_at(hit)
    dn = float(d @ n)
    if abs(dn) < TANGENT_EPS:
        raise ReflectionError("tangential hit; reflection undefined")
    return make_ray(hit, d - 2.0 * dn * n)


# -- orbit tracing ----------------------------------------------------------------


@dataclass(frozen=True)
class TraceResult:
    status: int
    indices: np.ndarray
    points: np.ndarray
    directions: np.ndarray
    drift: float

    @property
    def escaped(self) -> bool:
        return self.status == tracing.STATUS_ESCAPED

    @property
    def tangential(self) -> bool:
        return self.status == tracing.STATUS_TANGENT

    def records(self) -> list[tuple[int, np.ndarray, np.ndarray]]:
        return [
            (int(i), p, d)
            for i, p, d in zip(self.indices, self.points, self.directions)
        ]


def trace_orbit(table: BilliardTable, start: Ray, n_hits: int,
                *, t_min: float = SELF_HIT_GUARD) -> TraceResult:
    """Deterministic nearest-intersection tracing of up to n_hits reflections."""
    if n_hits < 1:
        raise ValueError("n_hits must be at least 1")
    status, idx, pts, dirs, drift = tracing.trace_steps(
        table.packed, start.origin, start.direction, n_hits, t_min
    )
    return TraceResult(status, idx, pts, dirs, drift)


# -- verification ------------------------------------------------------------------


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    tolerance: float
    passed: bool

    def line(self) -> str:
        tag = "pass" if self.passed else "FAIL"
        return f"[{tag}] {self.name}: {self.value:.6g} (tolerance {self.tolerance:.6g})"


@dataclass(frozen=True)
class TableVerification:
    checks: tuple[Check, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def lines(self) -> list[str]:
        return [c.line() for c in self.checks]


def _angle_to_normal(d_in: np.ndarray, normal: np.ndarray) -> float:
    return math.acos(min(1.0, abs(float(d_in @ normal))))


def verify_table(table: BilliardTable, *, with_monodromy: bool = True,
                 mono_h: float = 1e-6) -> TableVerification:
    """Closure, angle, spacing, ordering and (optionally) monodromy checks."""
    cube = table.kind == "cube"
    closure_tol = 1e-12 if cube else 1e-10
    angle_tol = 1e-12 if cube else 1e-10
    period = table.period
    ref_idx = table.orbit_indices()
    ref_pts = table.orbit_points()

    res = trace_orbit(table, table.start_ray(), period + 1)
    checks: list[Check] = []

    seq_ok = (
        res.status == tracing.STATUS_OK
        and np.array_equal(res.indices[:period], ref_idx)
        and res.indices[period] == ref_idx[0]
    )
    checks.append(Check("hit-sequence", 0.0 if seq_ok else 1.0, 0.5, seq_ok))
    if not seq_ok:
        return TableVerification(tuple(checks))

    pts = res.points
    dirs = res.directions
    closure = max(
        float(np.linalg.norm(pts[period] - pts[0])),
        float(np.max(np.linalg.norm(pts[:period] - ref_pts, axis=1))),
    )
    checks.append(Check("closure", closure, closure_tol, closure < closure_tol))

    d_in = [np.asarray(table.start_ray().direction)] + [dirs[k] for k in range(period)]
    sphere_err = 0.0
    flat_err = 0.0
    for k in range(period):
        patch = table.patches[int(ref_idx[k])]
        ang = _angle_to_normal(d_in[k], patch.normal_at(pts[k]))
        if isinstance(patch, SphereCap):
            sphere_err = max(sphere_err, abs(ang - table.phi))
        else:
            flat_err = max(flat_err, abs(ang - flat_angle_for(table.phi)))
    checks.append(Check("sphere-angle", sphere_err, angle_tol, sphere_err < angle_tol))
    if not cube:
        checks.append(Check("flat-angle", flat_err, 1e-10, flat_err < 1e-10))
        alternating = all(
            int(i) % 2 == k % 2 for k, i in enumerate(res.indices[:period])
        )
        checks.append(
            Check("sphere-flat-alternation", 0.0 if alternating else 1.0, 0.5,
                  alternating)
        )

    seg = np.linalg.norm(np.diff(np.vstack([pts[:period], pts[period]]), axis=0),
                         axis=1)
    if cube:
        spacing_err = float(np.max(np.abs(seg - table.l)))
    else:
        sums = [seg[2 * i] + seg[2 * i + 1] for i in range(6)]
        spacing_err = float(np.max(np.abs(np.array(sums) - table.l)))
    checks.append(Check("spacing", spacing_err, 1e-10, spacing_err < 1e-10))

    gaps = []
    cps = [p.central_point() for p in table.patches]
    exts = [p.extent() for p in table.patches]
    for i in range(len(table.patches)):
        for j in range(i + 1, len(table.patches)):
            gaps.append(np.linalg.norm(cps[i] - cps[j]) - exts[i] - exts[j])
    min_gap = float(min(gaps))
    checks.append(Check("patch-separation", min_gap, 0.0, min_gap > 0.0))

    if with_monodromy:
        est = numerical_monodromy(table, h=mono_h)
        analytic = float(stability.trace_value(table.l, table.phi))
        tr_err = max(
            abs(float(np.trace(est.matrix[:2, :2])) - analytic),
            abs(float(np.trace(est.matrix[2:, 2:])) - analytic),
        )
        checks.append(Check("monodromy-block-trace", tr_err, 1e-3, tr_err < 1e-3))
        det_err = abs(est.det - 1.0)
        checks.append(Check("monodromy-det", det_err, 1e-6, det_err < 1e-6))
        checks.append(
            Check("monodromy-off-block-leakage", est.leakage, 1e-6,
                  est.leakage < 1e-6)
        )
        checks.append(
            Check("monodromy-step-consistency", est.richardson_residual, 1e-4,
                  est.richardson_residual < 1e-4)
        )
    return TableVerification(tuple(checks))


# -- finite-difference monodromy ----------------------------------------------------


@dataclass(frozen=True)
class MonodromyEstimate:
    """Central-difference once-around Jacobian in the planar/transversal basis.

    ``matrix`` rows/columns are ordered (planar offset, planar slope,
    transversal offset, transversal slope) and have been corrected by the
    frame holonomy signs so elliptic/hyperbolic character can be read off
    directly; ``block_signs`` records the correction.
    """

    matrix: np.ndarray
    block_signs: tuple[int, int]
    leakage: float
    det: float
    richardson_residual: float
    step: float


def _section_frame(table: BilliardTable):
    first_idx, p0 = table.reference_orbit[0]
    p_last = table.reference_orbit[-1][1]
    d0 = _unit(p0 - p_last)
    anchor = 0.5 * (p0 + p_last)
    n0 = table.patches[first_idx].normal_at(p0)
    e_pl = _unit(n0 - float(n0 @ d0) * d0)
    e_tr = _unit(np.cross(d0, e_pl))
    return anchor, d0, e_pl, e_tr


def _section_state_to_ray(anchor, d0, e_pl, e_tr, xi) -> Ray:
    origin = anchor + xi[0] * e_pl + xi[2] * e_tr
    direction = d0 + xi[1] * e_pl + xi[3] * e_tr
    return make_ray(origin, direction)


def _ray_to_section_state(anchor, d0, e_pl, e_tr, origin, direction) -> np.ndarray:
    axial = float(direction @ d0)
    tau = float((anchor - origin) @ d0) / axial
    x = origin + tau * direction
    return np.array(
        [
            float((x - anchor) @ e_pl),
            float(direction @ e_pl) / axial,
            float((x - anchor) @ e_tr),
            float(direction @ e_tr) / axial,
        ]
    )


def _frame_holonomy_signs(table: BilliardTable, e_pl, e_tr) -> tuple[int, int]:
    """Transport the section basis through one period of reference reflections.

    For these tables the transported frame returns to +-(original frame);
    the signs flip the measured blocks back into the analytic convention.
    """
    vecs = [np.array(e_pl), np.array(e_tr)]
    for patch_idx, pt in table.reference_orbit:
        n = table.patches[patch_idx].normal_at(pt)
        vecs = [v - 2.0 * float(v @ n) * n for v in vecs]
    signs = []
    for v, e in zip(vecs, (e_pl, e_tr)):
        dot = float(v @ e)
        if abs(abs(dot) - 1.0) > 1e-6:
            raise DifferencingError(
                f"section frame does not return to itself (|dot| = {abs(dot):.6f})"
            )
        signs.append(1 if dot > 0 else -1)
    return (signs[0], signs[1])


def numerical_monodromy(table: BilliardTable, h: float = 1e-6) -> MonodromyEstimate:
    """Differenced once-around return map, Richardson-checked at h and h/2."""
    if not (1e-9 <= h <= 1e-4):
        raise ValueError("finite-difference step must lie in [1e-9, 1e-4]")
    anchor, d0, e_pl, e_tr = _section_frame(table)
    ref_idx = table.orbit_indices()
    period = table.period
    coord_names = ("planar offset", "planar slope",
                   "transversal offset", "transversal slope")

    def flow(xi: np.ndarray) -> np.ndarray:
        ray = _section_state_to_ray(anchor, d0, e_pl, e_tr, xi)
        res = trace_orbit(table, ray, period)
        if res.status != tracing.STATUS_OK or not np.array_equal(res.indices, ref_idx):
            raise DifferencingError("perturbed ray left the reference hit sequence")
        return _ray_to_section_state(
            anchor, d0, e_pl, e_tr, res.points[-1], res.directions[-1]
        )

    def jacobian(hh: float) -> np.ndarray:
        cols = []
        for k in range(4):
            xi = np.zeros(4)
            xi[k] = hh
            try:
                fp = flow(xi)
                fm = flow(-xi)
            except DifferencingError as exc:
                raise DifferencingError(
                    f"differencing failed in coordinate '{coord_names[k]}': {exc}"
                ) from exc
            cols.append((fp - fm) / (2.0 * hh))
        return np.column_stack(cols)

    j_full = jacobian(h)
    j_half = jacobian(h / 2.0)
    richardson = float(np.max(np.abs(j_full - j_half)))
    if richardson > 1e-4:
        raise DifferencingError(
            f"finite-difference estimates at h and h/2 disagree by {richardson:.3g}"
        )
    jac = (4.0 * j_half - j_full) / 3.0

    s_pl, s_tr = _frame_holonomy_signs(table, e_pl, e_tr)
    jac[0:2, :] *= s_pl
    jac[2:4, :] *= s_tr
    leakage = float(
        max(np.max(np.abs(jac[0:2, 2:4])), np.max(np.abs(jac[2:4, 0:2])))
    )
    return MonodromyEstimate(
        matrix=jac,
        block_signs=(s_pl, s_tr),
        leakage=leakage,
        det=float(np.linalg.det(jac)),
        richardson_residual=richardson,
        step=h,
    )


# -- perturbation growth --------------------------------------------------------------


@dataclass(frozen=True)
class GrowthRecord:
    mode: str
    deviations: np.ndarray  # per-period deviation norm (starts at eps)
    max_amplification: float
    mean_log_growth: float
    escaped_at: Optional[int]  # period at which the nonlinear run escaped


def perturbation_growth(table: BilliardTable, eps: float, periods: int,
                        mode: str = "linearized",
                        direction: Optional[np.ndarray] = None,
                        rng: Optional[np.random.Generator] = None) -> GrowthRecord:
    """Amplification of a transverse perturbation over many periods.

    linearized: iterates the analytic 4x4 monodromy with per-period
    renormalization (safe against overflow); nonlinear: re-traces the true
    orbit from a perturbed start and measures the section deviation each
    period until escape or the horizon.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if periods < 1:
        raise ValueError("periods must be at least 1")
    if mode not in ("linearized", "nonlinear"):
        raise ValueError("mode must be 'linearized' or 'nonlinear'")
    if direction is None:
        if rng is not None:
            direction = rng.normal(size=4)
        else:
            direction = np.array([1.0, 1.0, 1.0, 1.0])
    xi = np.asarray(direction, dtype=float)
    xi = xi / np.linalg.norm(xi)

    if mode == "linearized":
        mono = jacobi.full_monodromy(table.l, table.phi).to_array()
        v = xi.copy()
        cumlog = np.empty(periods)
        total = 0.0
        for n in range(periods):
            v = mono @ v
            a = float(np.linalg.norm(v))
            v /= a
            total += math.log(a)
            cumlog[n] = total
        deviations = eps * np.exp(cumlog)
        return GrowthRecord(
            mode="linearized",
            deviations=deviations,
            max_amplification=float(np.exp(np.max(cumlog))),
            mean_log_growth=total / periods,
            escaped_at=None,
        )

    anchor, d0, e_pl, e_tr = _section_frame(table)
    ray = _section_state_to_ray(anchor, d0, e_pl, e_tr, eps * xi)
    period = table.period
    devs: list[float] = []
    escaped_at = None
    for n in range(periods):
        res = trace_orbit(table, ray, period)
        if res.status != tracing.STATUS_OK:
            escaped_at = n + 1
            break
        ray = Ray(res.points[-1], res.directions[-1])
        state = _ray_to_section_state(
            anchor, d0, e_pl, e_tr, res.points[-1], res.directions[-1]
        )
        devs.append(float(np.linalg.norm(state)))
    deviations = np.array(devs)
    if deviations.size:
        mean_log = float(np.log(deviations[-1] / eps)) / deviations.size
        max_amp = float(np.max(deviations) / eps)
    else:
        mean_log = math.inf
        max_amp = math.inf
    return GrowthRecord("nonlinear", deviations, max_amp, mean_log, escaped_at)


# -- serialization -----------------------------------------------------------------


def _fmt(x: float) -> str:
    return format(float(x) + 0.0, ".17g")  # +0.0 folds -0.0 into 0.0


def _emit(obj, indent: int = 0) -> str:
    pad = "  " * indent
    if isinstance(obj, dict):
        inner = ",\n".join(
            f"{pad}  {json.dumps(k)}: {_emit(v, indent + 1).lstrip()}"
            for k, v in obj.items()
        )
        return f"{pad}{{\n{inner}\n{pad}}}"
    if isinstance(obj, (list, tuple)):
        if all(isinstance(v, (int, float)) for v in obj):
            return pad + "[" + ", ".join(
                _fmt(v) if isinstance(v, float) else str(v) for v in obj
            ) + "]"
        inner = ",\n".join(_emit(v, indent + 1) for v in obj)
        return f"{pad}[\n{inner}\n{pad}]"
    if isinstance(obj, float):
        return pad + _fmt(obj)
    if isinstance(obj, (int, str)):
        return pad + json.dumps(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def format_json(doc) -> str:
    """Render a document with floats at 17 significant digits."""
    return _emit(doc) + "\n"


def table_to_json(table: BilliardTable) -> str:
    """Structured text form; floats carry 17 significant digits and the
    document round-trips bit-identically through load/save."""
    patches = []
    for p in table.patches:
        if isinstance(p, SphereCap):
            patches.append(
                {
                    "type": "sphere",
                    "center": [float(x) for x in p.center],
                    "radius": float(p.radius),
                    "axis": [float(x) for x in p.axis],
                    "angular_radius": float(p.angular_radius),
                }
            )
        else:
            patches.append(
                {
                    "type": "flat",
                    "point": [float(x) for x in p.point],
                    "normal": [float(x) for x in p.normal],
                    "radius": float(p.radius),
                }
            )
    doc = {
        "params": {"l": float(table.l), "phi": float(table.phi)},
        "patches": patches,
        "reference_orbit": [
            {"patch": int(i), "point": [float(x) for x in pt]}
            for i, pt in table.reference_orbit
        ],
    }
    return _emit(doc) + "\n"


def table_from_json(text: str) -> BilliardTable:
    doc = json.loads(text)
    patches: list[SurfacePatch] = []
    for p in doc["patches"]:
        if p["type"] == "sphere":
            patches.append(
                SphereCap(np.array(p["center"], dtype=float), float(p["radius"]),
                          np.array(p["axis"], dtype=float),
                          float(p["angular_radius"]))
            )
        elif p["type"] == "flat":
            patches.append(
                FlatPatch(np.array(p["point"], dtype=float),
                          np.array(p["normal"], dtype=float), float(p["radius"]))
            )
        else:
            raise ValueError(f"unknown patch type {p['type']!r}")
    orbit = [
        (int(rec["patch"]), np.array(rec["point"], dtype=float))
        for rec in doc["reference_orbit"]
    ]
    return BilliardTable(patches, orbit, float(doc["params"]["l"]),
                         float(doc["params"]["phi"]))


def save_table(table: BilliardTable, path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(table_to_json(table))


def load_table(path) -> BilliardTable:
    with open(path) as fh:
        return table_from_json(fh.read())
