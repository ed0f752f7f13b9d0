"""Vectorized numpy implementation of the per-pixel scene kernels.

This is the reference backend. The compiled backend in _scene_core.pyx must
follow the exact same arithmetic expression trees so both produce
bit-identical float64 results (the extension is compiled with fp-contract
off for the same reason). Keep the two files in sync operation for
operation.

Conventions: pixel (x, y) has its center at continuous coordinates (x, y);
part ids are 1-based with 0 meaning background; the chain is drawn back to
front, so when capsules overlap the higher part index wins.
"""

import numpy as np

BACKEND = "numpy"


def ownership_grid(joints, radii, h, w):
    """Topmost covering part per pixel and that part's (u, v) chart coords.

    Returns (part_id int32 (h, w), uv float64 (h, w, 2)). uv is zero where
    part_id is zero.
    """
    joints = np.asarray(joints, dtype=np.float64)
    radii = np.asarray(radii, dtype=np.float64)
    n = len(radii)
    px = np.broadcast_to(np.arange(w, dtype=np.float64)[None, :], (h, w))
    py = np.broadcast_to(np.arange(h, dtype=np.float64)[:, None], (h, w))
    part_id = np.zeros((h, w), dtype=np.int32)
    uv = np.zeros((h, w, 2), dtype=np.float64)
    for k in range(n):
        ax = joints[k, 0]
        ay = joints[k, 1]
        bx = joints[k + 1, 0]
        by = joints[k + 1, 1]
        tx = bx - ax
        ty = by - ay
        L = np.sqrt(tx * tx + ty * ty)
        ex = tx / L
        ey = ty / L
        r = radii[k]
        dx = px - ax
        dy = py - ay
        s = dx * ex + dy * ey
        sc = np.minimum(np.maximum(s, 0.0), L)
        rx = dx - sc * ex
        ry = dy - sc * ey
        covered = rx * rx + ry * ry <= r * r
        d = dy * ex - dx * ey
        u = (s + r) / (L + 2.0 * r)
        v = (d + r) / (2.0 * r)
        part_id[covered] = k + 1
        uv[covered, 0] = u[covered]
        uv[covered, 1] = v[covered]
    return part_id, uv


def ownership_points(joints, radii, xs, ys):
    """Topmost covering part id at arbitrary continuous points (0 = none)."""
    joints = np.asarray(joints, dtype=np.float64)
    radii = np.asarray(radii, dtype=np.float64)
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    ids = np.zeros(xs.shape, dtype=np.int32)
    for k in range(len(radii)):
        ax = joints[k, 0]
        ay = joints[k, 1]
        bx = joints[k + 1, 0]
        by = joints[k + 1, 1]
        tx = bx - ax
        ty = by - ay
        L = np.sqrt(tx * tx + ty * ty)
        ex = tx / L
        ey = ty / L
        r = radii[k]
        dx = xs - ax
        dy = ys - ay
        s = dx * ex + dy * ey
        sc = np.minimum(np.maximum(s, 0.0), L)
        rx = dx - sc * ex
        ry = dy - sc * ey
        ids[rx * rx + ry * ry <= r * r] = k + 1
    return ids


def flow_and_confidence(joints_cur, joints_prev, radii, part_id_cur, uv_cur, part_id_prev):
    """Backward flow to the previous frame plus a binary validity mask.

    For a puppet pixel the flow vector points at the same material point in
    the previous frame (rigid within a part, so it is recovered by pushing
    the current chart coords through the previous frame's part placement).
    The flow is the difference of the two reconstructions, previous minus
    current, rather than previous minus pixel center: the reconstructions
    share their rounding, so identical poses give bitwise-zero flow while
    the two forms differ only at the reconstruction round-trip level
    (~1e-15 px). Confidence is 1 only if the source lies inside the image
    and was not occluded, i.e. the previous frame's topmost part there is
    the same part. Background pixels get zero flow and are confident only
    if they were background in the previous frame too.
    """
    joints_cur = np.asarray(joints_cur, dtype=np.float64)
    joints_prev = np.asarray(joints_prev, dtype=np.float64)
    radii = np.asarray(radii, dtype=np.float64)
    h, w = part_id_cur.shape
    flow = np.zeros((h, w, 2), dtype=np.float64)
    conf = np.zeros((h, w), dtype=np.uint8)

    bg = part_id_cur == 0
    conf[bg] = (part_id_prev[bg] == 0).astype(np.uint8)

    for k in range(len(radii)):
        mask = part_id_cur == k + 1
        if not mask.any():
            continue
        r = radii[k]
        acx = joints_cur[k, 0]
        acy = joints_cur[k, 1]
        bcx = joints_cur[k + 1, 0]
        bcy = joints_cur[k + 1, 1]
        tcx = bcx - acx
        tcy = bcy - acy
        Lc = np.sqrt(tcx * tcx + tcy * tcy)
        ecx = tcx / Lc
        ecy = tcy / Lc
        ncx = -ecy
        ncy = ecx
        apx = joints_prev[k, 0]
        apy = joints_prev[k, 1]
        bpx = joints_prev[k + 1, 0]
        bpy = joints_prev[k + 1, 1]
        tpx = bpx - apx
        tpy = bpy - apy
        Lp = np.sqrt(tpx * tpx + tpy * tpy)
        epx = tpx / Lp
        epy = tpy / Lp
        npx = -epy
        npy = epx

        u = uv_cur[..., 0][mask]
        v = uv_cur[..., 1][mask]
        s = u * (Lc + 2.0 * r) - r
        d = v * (2.0 * r) - r
        x1 = acx + s * ecx + d * ncx
        y1 = acy + s * ecy + d * ncy
        x2 = apx + s * epx + d * npx
        y2 = apy + s * epy + d * npy
        flow[mask, 0] = x2 - x1
        flow[mask, 1] = y2 - y1
        inside = (x2 >= 0.0) & (x2 <= w - 1.0) & (y2 >= 0.0) & (y2 <= h - 1.0)
        prev_ids = ownership_points(joints_prev, radii, x2, y2)
        conf[mask] = (inside & (prev_ids == k + 1)).astype(np.uint8)
    return flow, conf
