"""Backend selection for the ray-stepping kernel.

The compiled Cython kernel is used when the extension built; otherwise the
numpy reference implementation takes over.  ``BILLIARD3D_BACKEND=python`` or
``=compiled`` forces a choice (the latter raises if the extension is absent).
Both backends implement the identical contract documented in _trace_ref.py.
"""

from __future__ import annotations

import os

import numpy as np

from ._trace_ref import (  # noqa: F401  (status codes are part of the API)
    STATUS_ESCAPED,
    STATUS_OK,
    STATUS_TANGENT,
)
from . import _trace_ref

_forced = os.environ.get("BILLIARD3D_BACKEND")
if _forced == "python":
    _impl = _trace_ref
    BACKEND = "python"
else:
    try:
        from . import _trace_fast as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        if _forced == "compiled":
            raise
        _impl = _trace_ref
        BACKEND = "python"


def trace_steps(patches, origin, direction, n_hits, t_min=1e-9):
    """Step a ray through ``n_hits`` specular reflections.

    Returns (status, indices, points, directions, drift); arrays are truncated
    at the step where tracing stopped if status is not STATUS_OK.  ``drift``
    is the signed sum of pre-renormalization direction-norm defects.
    """
    return _impl.trace_steps(patches, origin, direction, int(n_hits), float(t_min))


SPHERE_KIND = 0.0
FLAT_KIND = 1.0
PATCH_COLUMNS = 12


def pack_sphere(center, radius, axis, angular_radius) -> np.ndarray:
    row = np.zeros(PATCH_COLUMNS)
    row[0] = SPHERE_KIND
    row[1:4] = center
    row[4] = radius
    row[5:8] = axis
    row[8] = np.cos(angular_radius)
    return row


def pack_flat(point, normal, disk_radius) -> np.ndarray:
    row = np.zeros(PATCH_COLUMNS)
    row[0] = FLAT_KIND
    row[1:4] = point
    row[4:7] = normal
    row[7] = disk_radius
    return row
