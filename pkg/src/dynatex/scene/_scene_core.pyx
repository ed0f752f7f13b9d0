# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled twin of _core_np. Same arithmetic, scalar loops.

Every expression here mirrors the numpy backend operation for operation;
together with fp-contract off at compile time that keeps the two backends
bit-identical on float64. Change one file only in lockstep with the other.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()

BACKEND = "cython"


cdef inline int _point_id(double x, double y, double[:, ::1] joints,
                          double[::1] radii, int n) nogil:
    cdef int k, pid = 0
    cdef double ax, ay, bx, by, tx, ty, L, ex, ey, r, dx, dy, s, sc, rx, ry
    for k in range(n):
        ax = joints[k, 0]
        ay = joints[k, 1]
        bx = joints[k + 1, 0]
        by = joints[k + 1, 1]
        tx = bx - ax
        ty = by - ay
        L = sqrt(tx * tx + ty * ty)
        ex = tx / L
        ey = ty / L
        r = radii[k]
        dx = x - ax
        dy = y - ay
        s = dx * ex + dy * ey
        sc = s
        if sc < 0.0:
            sc = 0.0
        if sc > L:
            sc = L
        rx = dx - sc * ex
        ry = dy - sc * ey
        if rx * rx + ry * ry <= r * r:
            pid = k + 1
    return pid


def ownership_grid(joints, radii, int h, int w):
    joints_arr = np.ascontiguousarray(joints, dtype=np.float64)
    radii_arr = np.ascontiguousarray(radii, dtype=np.float64)
    cdef double[:, ::1] J = joints_arr
    cdef double[::1] R = radii_arr
    cdef int n = radii_arr.shape[0]
    part_id_arr = np.zeros((h, w), dtype=np.int32)
    uv_arr = np.zeros((h, w, 2), dtype=np.float64)
    cdef int[:, ::1] part_id = part_id_arr
    cdef double[:, :, ::1] uv = uv_arr
    cdef int k, i, j
    cdef double ax, ay, bx, by, tx, ty, L, ex, ey, r
    cdef double px, py, dx, dy, s, sc, rx, ry, d
    with nogil:
        for k in range(n):
            ax = J[k, 0]
            ay = J[k, 1]
            bx = J[k + 1, 0]
            by = J[k + 1, 1]
            tx = bx - ax
            ty = by - ay
            L = sqrt(tx * tx + ty * ty)
            ex = tx / L
            ey = ty / L
            r = R[k]
            for i in range(h):
                py = <double> i
                dy = py - ay
                for j in range(w):
                    px = <double> j
                    dx = px - ax
                    s = dx * ex + dy * ey
                    sc = s
                    if sc < 0.0:
                        sc = 0.0
                    if sc > L:
                        sc = L
                    rx = dx - sc * ex
                    ry = dy - sc * ey
                    if rx * rx + ry * ry <= r * r:
                        d = dy * ex - dx * ey
                        part_id[i, j] = k + 1
                        uv[i, j, 0] = (s + r) / (L + 2.0 * r)
                        uv[i, j, 1] = (d + r) / (2.0 * r)
    return part_id_arr, uv_arr


def ownership_points(joints, radii, xs, ys):
    joints_arr = np.ascontiguousarray(joints, dtype=np.float64)
    radii_arr = np.ascontiguousarray(radii, dtype=np.float64)
    xs_arr = np.ascontiguousarray(xs, dtype=np.float64).ravel()
    ys_arr = np.ascontiguousarray(ys, dtype=np.float64).ravel()
    cdef double[:, ::1] J = joints_arr
    cdef double[::1] R = radii_arr
    cdef double[::1] X = xs_arr
    cdef double[::1] Y = ys_arr
    cdef int n = radii_arr.shape[0]
    cdef Py_ssize_t m = xs_arr.shape[0]
    ids_arr = np.zeros(m, dtype=np.int32)
    cdef int[::1] ids = ids_arr
    cdef Py_ssize_t i
    with nogil:
        for i in range(m):
            ids[i] = _point_id(X[i], Y[i], J, R, n)
    return ids_arr.reshape(np.shape(xs))


def flow_and_confidence(joints_cur, joints_prev, radii, part_id_cur, uv_cur, part_id_prev):
    jc_arr = np.ascontiguousarray(joints_cur, dtype=np.float64)
    jp_arr = np.ascontiguousarray(joints_prev, dtype=np.float64)
    radii_arr = np.ascontiguousarray(radii, dtype=np.float64)
    pid_arr = np.ascontiguousarray(part_id_cur, dtype=np.int32)
    uv_arr = np.ascontiguousarray(uv_cur, dtype=np.float64)
    pid_prev_arr = np.ascontiguousarray(part_id_prev, dtype=np.int32)
    cdef double[:, ::1] JC = jc_arr
    cdef double[:, ::1] JP = jp_arr
    cdef double[::1] R = radii_arr
    cdef int[:, ::1] pid = pid_arr
    cdef double[:, :, ::1] uv = uv_arr
    cdef int[:, ::1] pid_prev = pid_prev_arr
    cdef int h = pid_arr.shape[0]
    cdef int w = pid_arr.shape[1]
    cdef int n = radii_arr.shape[0]
    flow_arr = np.zeros((h, w, 2), dtype=np.float64)
    conf_arr = np.zeros((h, w), dtype=np.uint8)
    cdef double[:, :, ::1] flow = flow_arr
    cdef unsigned char[:, ::1] conf = conf_arr
    cdef int i, j, k
    cdef double r, acx, acy, bcx, bcy, tcx, tcy, Lc, ecx, ecy, ncx, ncy
    cdef double apx, apy, bpx, bpy, tpx, tpy, Lp, epx, epy, npx, npy
    cdef double u, v, s, d, x1, y1, x2, y2
    with nogil:
        for i in range(h):
            for j in range(w):
                k = pid[i, j]
                if k == 0:
                    if pid_prev[i, j] == 0:
                        conf[i, j] = 1
                    continue
                k = k - 1
                r = R[k]
                acx = JC[k, 0]
                acy = JC[k, 1]
                bcx = JC[k + 1, 0]
                bcy = JC[k + 1, 1]
                tcx = bcx - acx
                tcy = bcy - acy
                Lc = sqrt(tcx * tcx + tcy * tcy)
                ecx = tcx / Lc
                ecy = tcy / Lc
                ncx = -ecy
                ncy = ecx
                apx = JP[k, 0]
                apy = JP[k, 1]
                bpx = JP[k + 1, 0]
                bpy = JP[k + 1, 1]
                tpx = bpx - apx
                tpy = bpy - apy
                Lp = sqrt(tpx * tpx + tpy * tpy)
                epx = tpx / Lp
                epy = tpy / Lp
                npx = -epy
                npy = epx
                u = uv[i, j, 0]
                v = uv[i, j, 1]
                s = u * (Lc + 2.0 * r) - r
                d = v * (2.0 * r) - r
                x1 = acx + s * ecx + d * ncx
                y1 = acy + s * ecy + d * ncy
                x2 = apx + s * epx + d * npx
                y2 = apy + s * epy + d * npy
                flow[i, j, 0] = x2 - x1
                flow[i, j, 1] = y2 - y1
                if (x2 >= 0.0 and x2 <= <double> (w - 1)
                        and y2 >= 0.0 and y2 <= <double> (h - 1)
                        and _point_id(x2, y2, JP, R, n) == k + 1):
                    conf[i, j] = 1
    return flow_arr, conf_arr
