"""Time the hot kernels under the numba and pure-numpy backends.

    python benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import time

import numpy as np

from pmvos import kernels, set_backend
from pmvos.synth import occlusion_suite, gen_sequence
from pmvos.tracker import TrackerConfig, run_multiobject


def _best(fn, repeat):
    fn()  # warm-up (includes JIT compilation for numba)
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def cases(rng):
    x = rng.normal(size=(96 * 96, 32))
    y = rng.normal(size=(48 * 48, 32))
    f = rng.normal(size=(64 * 64, 6))
    mask = rng.uniform(size=(256, 256)) < 0.05
    frames, labels = gen_sequence(occlusion_suite(count=1, size=48, frames=12)[0])
    return {
        "max_dot 9216x2304x32": lambda: kernels.max_dot(x, y),
        "attend_rows 4096x6": lambda: kernels.attend_rows(f),
        "dilate_disk 256x256 r=3": lambda: kernels.dilate_disk(mask, 3),
        "track GLMA 12x48x48": lambda: run_multiobject(frames, labels[0], TrackerConfig(mode="GLMA")),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    table = cases(np.random.Generator(np.random.PCG64(0)))
    results = {}
    for name in ("numba", "numpy"):
        set_backend(name)
        results[name] = {case: _best(fn, args.repeat) for case, fn in table.items()}
    print(f"{'case':28s} {'numba ms':>10s} {'numpy ms':>10s} {'speed-up':>9s}")
    for case in table:
        a, b = results["numba"][case], results["numpy"][case]
        print(f"{case:28s} {a * 1e3:10.2f} {b * 1e3:10.2f} {b / a:8.2f}x")


if __name__ == "__main__":
    main()
