# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled ray-stepping kernel; see _trace_ref.py for the layout contract."""

import numpy as np

from libc.math cimport fabs, sqrt

STATUS_OK = 0
STATUS_ESCAPED = 1
STATUS_TANGENT = 2

DEF TANGENT_EPS = 1e-12
DEF PARALLEL_EPS = 1e-14


def trace_steps(patches, origin, direction, Py_ssize_t n_hits, double t_min=1e-9):
    patches = np.ascontiguousarray(patches, dtype=np.float64)
    cdef double[:, ::1] pt = patches
    cdef Py_ssize_t n_patches = pt.shape[0]

    idx_arr = np.empty(n_hits, dtype=np.int64)
    pts_arr = np.empty((n_hits, 3), dtype=np.float64)
    dirs_arr = np.empty((n_hits, 3), dtype=np.float64)
    cdef long long[::1] idx = idx_arr
    cdef double[:, ::1] pts = pts_arr
    cdef double[:, ::1] dirs = dirs_arr

    cdef double ox = origin[0], oy = origin[1], oz = origin[2]
    cdef double dx = direction[0], dy = direction[1], dz = direction[2]
    cdef double nrm = sqrt(dx * dx + dy * dy + dz * dz)
    dx /= nrm; dy /= nrm; dz /= nrm

    cdef double drift = 0.0
    cdef int status = STATUS_OK
    cdef Py_ssize_t k = 0, j, done = n_hits
    cdef double best_t, t, b, c0, disc, s, px, py, pz
    cdef double wx, wy, wz, cosang, dn, r2, hx, hy, hz
    cdef double nhx, nhy, nhz
    cdef Py_ssize_t best_j
    cdef int root

    for k in range(n_hits):
        best_t = np.inf
        best_j = -1
        for j in range(n_patches):
            if pt[j, 0] == 0.0:
                # sphere: |o + t d - c|^2 = r^2 with unit d
                wx = ox - pt[j, 1]; wy = oy - pt[j, 2]; wz = oz - pt[j, 3]
                b = wx * dx + wy * dy + wz * dz
                c0 = wx * wx + wy * wy + wz * wz - pt[j, 4] * pt[j, 4]
                disc = b * b - c0
                if disc <= 0.0:
                    continue
                s = sqrt(disc)
                for root in range(2):
                    t = -b - s if root == 0 else -b + s
                    if t <= t_min or t >= best_t:
                        continue
                    px = ox + t * dx; py = oy + t * dy; pz = oz + t * dz
                    wx = (px - pt[j, 1]) / pt[j, 4]
                    wy = (py - pt[j, 2]) / pt[j, 4]
                    wz = (pz - pt[j, 3]) / pt[j, 4]
                    cosang = wx * pt[j, 5] + wy * pt[j, 6] + wz * pt[j, 7]
                    if cosang >= pt[j, 8]:
                        best_t = t
                        best_j = j
            else:
                dn = dx * pt[j, 4] + dy * pt[j, 5] + dz * pt[j, 6]
                if fabs(dn) <= PARALLEL_EPS:
                    continue
                t = ((pt[j, 1] - ox) * pt[j, 4] + (pt[j, 2] - oy) * pt[j, 5]
                     + (pt[j, 3] - oz) * pt[j, 6]) / dn
                if t <= t_min or t >= best_t:
                    continue
                hx = ox + t * dx - pt[j, 1]
                hy = oy + t * dy - pt[j, 2]
                hz = oz + t * dz - pt[j, 3]
                r2 = hx * hx + hy * hy + hz * hz
                if r2 <= pt[j, 7] * pt[j, 7]:
                    best_t = t
                    best_j = j

        if best_j < 0:
            status = STATUS_ESCAPED
            done = k
            break

        px = ox + best_t * dx; py = oy + best_t * dy; pz = oz + best_t * dz
        if pt[best_j, 0] == 0.0:
            nhx = (px - pt[best_j, 1]) / pt[best_j, 4]
            nhy = (py - pt[best_j, 2]) / pt[best_j, 4]
            nhz = (pz - pt[best_j, 3]) / pt[best_j, 4]
        else:
            nhx = pt[best_j, 4]; nhy = pt[best_j, 5]; nhz = pt[best_j, 6]
        dn = dx * nhx + dy * nhy + dz * nhz
        if fabs(dn) < TANGENT_EPS:
            status = STATUS_TANGENT
            done = k
            break
        dx -= 2.0 * dn * nhx; dy -= 2.0 * dn * nhy; dz -= 2.0 * dn * nhz
        nrm = sqrt(dx * dx + dy * dy + dz * dz)
        drift += nrm - 1.0
        dx /= nrm; dy /= nrm; dz /= nrm
        ox = px; oy = py; oz = pz
        idx[k] = best_j
        pts[k, 0] = px; pts[k, 1] = py; pts[k, 2] = pz
        dirs[k, 0] = dx; dirs[k, 1] = dy; dirs[k, 2] = dz

    if status != STATUS_OK:
        return status, idx_arr[:done], pts_arr[:done], dirs_arr[:done], drift
    return status, idx_arr, pts_arr, dirs_arr, drift
