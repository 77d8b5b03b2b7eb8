"""Linearly stable periodic orbits in 3D billiards with spherical mirrors.

Exact and floating transfer-matrix analysis of the closed hexagonal orbit
between spherical focusing caps, stability intervals and exception points of
the trace polynomial, and a ray-traced 3D realization used to cross-validate
the matrix model.
"""

from .exact_algebra import QuadExt, QuadPoly
from .jacobi import (
    Mat2,
    Mat4,
    ReflectionParams,
    flat_reflection,
    free_flight,
    full_monodromy,
    period_block,
    sphere_planar,
    sphere_transversal,
)
from .stability import (
    Classification,
    StabilityReport,
    TracePoly,
    chebyshev_trace,
    classify,
    epsilon_window,
    stability_intervals,
    sweep,
    trace_poly_exact,
    trace_value,
)
from .geometry import (
    BilliardTable,
    FlatPatch,
    Ray,
    SphereCap,
    build_cube_table,
    build_flats_table,
    load_table,
    numerical_monodromy,
    perturbation_growth,
    reflect,
    save_table,
    trace_orbit,
    verify_table,
)
from .tracing import BACKEND as TRACING_BACKEND

__version__ = "0.1.0"
