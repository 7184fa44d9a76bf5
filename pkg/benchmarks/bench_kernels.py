"""Compare the compiled and pure-Python search kernels.

    python3 benchmarks/bench_kernels.py [--width 352 --height 288 --repeat 3]
"""

import argparse
import timeit

import numpy as np

from motionshot._backend import available_backends
from motionshot.block_matching import BlockGridSpec, arps_search, exhaustive_search
from motionshot.synthetic import panning_sequence


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--width", type=int, default=352)
    ap.add_argument("--height", type=int, default=288)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    frames = panning_sequence(3, args.height, args.width, dx=2, dy=1, seed=0)
    rng = np.random.default_rng(0)
    noise = [rng.integers(0, 256, (args.height, args.width), dtype=np.uint8) for _ in range(2)]
    pairs = {"pan": (frames[2], frames[0]), "noise": tuple(noise)}
    spec = BlockGridSpec()

    print(f"{args.width}x{args.height}, block {spec.block_size}, p={spec.search_range}, best of {args.repeat}")
    print(f"{'backend':<8} {'search':<6} {'input':<6} {'ms/pair':>10} {'pts/block':>10}")
    timings = {}
    for backend in available_backends():
        for name, search in (("es", exhaustive_search), ("arps", arps_search)):
            for label, (cur, ref) in pairs.items():
                field = search(cur, ref, spec, backend=backend)
                t = min(timeit.repeat(lambda: search(cur, ref, spec, backend=backend), number=1, repeat=args.repeat))
                timings[backend, name, label] = t
                print(f"{backend:<8} {name:<6} {label:<6} {t * 1e3:10.2f} {field.search_points.mean():10.2f}")
    if len(available_backends()) > 1:
        for name in ("es", "arps"):
            for label in pairs:
                ratio = timings["python", name, label] / timings["cython", name, label]
                print(f"speedup {name:<4} {label:<6} {ratio:6.1f}x")


if __name__ == "__main__":
    main()
