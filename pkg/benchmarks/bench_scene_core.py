"""Benchmark the compiled scene kernels against the numpy fallback.

Runs each kernel on a realistic mid-size scene, checks the two backends
agree bit for bit, and prints per-call timings plus end-to-end sequence
generation for both. Usage: python3 benchmarks/bench_scene_core.py
"""

import argparse
import importlib
import os
import time

import numpy as np

from dynatex.scene import _core_np, generate_sequence, sample_scene_config
import dynatex.scene.core as core
from dynatex.scene.geometry import derive_geometry, forward_kinematics

try:
    from dynatex.scene import _scene_core
except ImportError:
    _scene_core = None


def timeit(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_kernels(h, w, n_parts, repeats):
    cfg = sample_scene_config(3, image_size=(h, w), n_parts=n_parts, n_frames=4)
    script = cfg.motion_script
    geometry = derive_geometry(n_parts, (h, w), cfg.seed)
    joints_cur = forward_kinematics(geometry, script[1]["root"], script[1]["angles"])
    joints_prev = forward_kinematics(geometry, script[0]["root"], script[0]["angles"])
    radii = geometry.radii

    backends = [("numpy", _core_np)] + ([("compiled", _scene_core)] if _scene_core else [])
    results = {}
    for name, mod in backends:
        own = timeit(lambda: mod.ownership_grid(joints_cur, radii, h, w), repeats)
        part_id, uv = mod.ownership_grid(joints_cur, radii, h, w)
        part_id_prev, _ = mod.ownership_grid(joints_prev, radii, h, w)
        flow = timeit(
            lambda: mod.flow_and_confidence(joints_cur, joints_prev, radii,
                                            part_id, uv, part_id_prev),
            repeats)
        results[name] = (own, flow, part_id, uv)

    print("kernels at %dx%d, %d parts (best of %d):" % (h, w, n_parts, repeats))
    for name, (own, flow, _, _) in results.items():
        print("  %-8s ownership_grid %7.3f ms   flow_and_confidence %7.3f ms"
              % (name, own * 1e3, flow * 1e3))
    if len(results) == 2:
        a = results["numpy"]
        b = results["compiled"]
        same = np.array_equal(a[2], b[2]) and np.array_equal(a[3], b[3])
        print("  backends bit-identical: %s" % same)
        print("  speedup: ownership %.1fx, flow %.1fx"
              % (a[0] / b[0], a[1] / b[1]))
        if not same:
            raise SystemExit("backend outputs differ")


def bench_sequence(h, w, n_parts, n_frames):
    cfg = sample_scene_config(3, image_size=(h, w), n_parts=n_parts, n_frames=n_frames)
    rows = []
    for forced in (None, "1"):
        if forced is None:
            os.environ.pop("DYNATEX_PURE", None)
        else:
            os.environ["DYNATEX_PURE"] = forced
        importlib.reload(core)
        t0 = time.perf_counter()
        seq = generate_sequence(cfg)
        rows.append((core.backend_name(), time.perf_counter() - t0, seq))
    os.environ.pop("DYNATEX_PURE", None)
    importlib.reload(core)

    print("full %d-frame sequence at %dx%d:" % (n_frames, h, w))
    for name, dt, _ in rows:
        print("  %-8s %6.2f s  (%.1f ms/frame)" % (name, dt, dt * 1e3 / n_frames))
    same = all(np.array_equal(getattr(rows[0][2], f), getattr(rows[1][2], f))
               for f in ("frames", "part_id", "uv", "flow", "conf"))
    print("  sequences bit-identical: %s" % same)
    if not same:
        raise SystemExit("sequence outputs differ")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--size", type=int, default=128)
    ap.add_argument("--parts", type=int, default=8)
    ap.add_argument("--frames", type=int, default=30)
    ap.add_argument("--repeats", type=int, default=20)
    args = ap.parse_args()
    if _scene_core is None:
        print("compiled extension not available; benchmarking numpy only")
    bench_kernels(args.size, args.size, args.parts, args.repeats)
    bench_sequence(args.size, args.size, args.parts, args.frames)


if __name__ == "__main__":
    main()
