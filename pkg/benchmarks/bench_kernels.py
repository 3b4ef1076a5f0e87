"""Compiled vs NumPy kernels: DivE propagation and batched min-sum decoding.

    python benchmarks/bench_kernels.py [--repeat 5] [--batch 200]
"""

import argparse
import sys
import time

import numpy as np

from divalign import _backend, _purepy
from divalign.dive import dive_run
from divalign.mapping import load_mapping
from divalign.protograph import bundled_base_graph, data_path, select_rate
from divalign.qclift import expand_mapping, lift
from divalign.simkit import DecoderConfig, batch_rng, min_sum_decode_batch, transmit


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--batch", type=int, default=200)
    args = ap.parse_args(argv)

    if _backend.BACKEND != "cython":
        print("compiled extension not available; build with `pip install -e . --no-build-isolation`")
        return 1
    backends = {"cython": _backend.kernels, "numpy": _purepy}
    rows = []

    for name, map_fn in (("bg1", "bg1_r22_46.map"), ("bg2", "bg2_r10_24.map")):
        bg = bundled_base_graph(name)
        mapping = load_mapping(data_path(map_fn))
        sel = select_rate(bg, len(mapping) - bg.info_cols)
        t = {k: best_of(lambda: dive_run(bg, sel, mapping, 2, 20, backend=b), args.repeat) for k, b in backends.items()}
        rows.append((f"dive_run {name} (20 iters)", t))

    bg = bundled_base_graph("bg2")
    mapping = load_mapping(data_path("bg2_r10_24.map"))
    sel = select_rate(bg, 16)
    code = lift(bg, sel)
    blocks = expand_mapping(mapping, code.Z)
    rng = batch_rng(0, 0, 0)
    llr = transmit(np.zeros((args.batch, code.n_cols), dtype=np.uint8), blocks, 8.0, rng, 2)
    dcfg = DecoderConfig(max_iters=50)
    t = {k: best_of(lambda: min_sum_decode_batch(code, llr, dcfg, backend=b), args.repeat) for k, b in backends.items()}
    rows.append((f"min-sum bg2 Z=20, {args.batch} words @ 8 dB", t))

    print(f"{'kernel':<40} {'cython [ms]':>12} {'numpy [ms]':>12} {'speedup':>8}")
    for label, t in rows:
        print(f"{label:<40} {1e3 * t['cython']:12.2f} {1e3 * t['numpy']:12.2f} {t['numpy'] / t['cython']:8.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
