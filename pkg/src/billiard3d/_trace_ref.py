"""Pure-numpy reference implementation of the ray-stepping kernel.

Semantics must match ``_trace_fast.pyx`` exactly: nearest intersection with
t > t_min among all patches (ties resolved to the lowest patch index),
spherical hits filtered by the cap's angular bound, flat hits by the disk
bound, specular reflection with renormalization, and a signed accumulator of
the pre-renormalization norm defects.

Packed patch layout (float64, one row per patch):
  sphere: [0, cx, cy, cz, radius, ax, ay, az, cos_angular_radius, 0, 0, 0]
  flat:   [1, px, py, pz, nx, ny, nz, disk_radius, 0, 0, 0, 0]
"""

from __future__ import annotations

import numpy as np

STATUS_OK = 0
STATUS_ESCAPED = 1
STATUS_TANGENT = 2

TANGENT_EPS = 1e-12
PARALLEL_EPS = 1e-14


def trace_steps(patches, origin, direction, n_hits, t_min=1e-9):
    patches = np.asarray(patches, dtype=float)
    o = np.array(origin, dtype=float)
    d = np.array(direction, dtype=float)
    d /= np.linalg.norm(d)

    is_sphere = patches[:, 0] == 0.0
    sph = np.flatnonzero(is_sphere)
    flat = np.flatnonzero(~is_sphere)
    centers = patches[sph, 1:4]
    radii = patches[sph, 4]
    axes = patches[sph, 5:8]
    cos_caps = patches[sph, 8]
    fpoints = patches[flat, 1:4]
    fnormals = patches[flat, 4:7]
    fradii = patches[flat, 7]

    n_patches = patches.shape[0]
    idx = np.empty(n_hits, dtype=np.int64)
    pts = np.empty((n_hits, 3))
    dirs = np.empty((n_hits, 3))
    drift = 0.0
    status = STATUS_OK
    k = 0

    for k in range(n_hits):
        cand_t = np.full(n_patches, np.inf)

        if sph.size:
            oc = o - centers
            b = oc @ d
            c0 = np.einsum("ij,ij->i", oc, oc) - radii * radii
            disc = b * b - c0
            ok = disc > 0.0
            s = np.sqrt(np.where(ok, disc, 0.0))
            for roots in (-b - s, -b + s):
                t = np.where(ok, roots, 0.0)
                hit = o + t[:, None] * d
                w = (hit - centers) / radii[:, None]
                cosang = np.einsum("ij,ij->i", w, axes)
                valid = ok & (t > t_min) & (cosang >= cos_caps)
                tt = np.where(valid, t, np.inf)
                cand_t[sph] = np.minimum(cand_t[sph], tt)

        if flat.size:
            dn = fnormals @ d
            safe = np.abs(dn) > PARALLEL_EPS
            t = np.where(safe, np.einsum("ij,ij->i", fpoints - o, fnormals) /
                         np.where(safe, dn, 1.0), 0.0)
            hit = o + t[:, None] * d
            r2 = np.einsum("ij,ij->i", hit - fpoints, hit - fpoints)
            valid = safe & (t > t_min) & (r2 <= fradii * fradii)
            cand_t[flat] = np.where(valid, t, np.inf)

        j = int(np.argmin(cand_t))
        t_best = cand_t[j]
        if not np.isfinite(t_best):
            status = STATUS_ESCAPED
            break

        p = o + t_best * d
        if patches[j, 0] == 0.0:
            nh = (p - patches[j, 1:4]) / patches[j, 4]
        else:
            nh = patches[j, 4:7]
        dn = float(d @ nh)
        if abs(dn) < TANGENT_EPS:
            status = STATUS_TANGENT
            break
        d = d - 2.0 * dn * nh
        nrm = float(np.linalg.norm(d))
        drift += nrm - 1.0
        d = d / nrm
        o = p
        idx[k] = j
        pts[k] = p
        dirs[k] = d
    else:
        k = n_hits  # loop ran to completion

    if status != STATUS_OK:
        return status, idx[:k], pts[:k], dirs[:k], drift
    return status, idx, pts, dirs, drift
