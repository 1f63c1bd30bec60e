"""Time the numpy and compiled kernel backends on the same workloads.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--threads 1]
"""
import argparse
import os
import statistics
import time

import numpy as np

from ictmseg import _backend
from ictmseg.evalkit import splitting_fixture
from ictmseg.filters import edge_indicator, heat_convolve, make_heat_kernel
from ictmseg.ictm import ictm_run


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times), statistics.median(times)


def workloads():
    rng = np.random.default_rng(0)
    k2 = make_heat_kernel(2.0)
    f2 = rng.normal(size=(512, 512))
    f3 = rng.normal(size=(96, 96, 96))
    fx = splitting_fixture((256, 256))
    g = edge_indicator(fx.image, fx.edge)
    return [
        ("heat_convolve 512x512 tau=2", lambda: heat_convolve(f2, k2)),
        ("heat_convolve 96^3 tau=2", lambda: heat_convolve(f3, k2)),
        ("ictm_run splitting 256x256", lambda: ictm_run(g, fx.init, fx.ictm, record_trace=False)),
    ]


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--threads", type=int, default=1, help="sets SEG_THREADS")
    args = parser.parse_args()
    os.environ["SEG_THREADS"] = str(args.threads)
    names = [n for n in ("python", "cython") if n in _backend.AVAILABLE]
    if len(names) < 2:
        print("compiled kernels not built; timing the numpy backend only")
    previous = _backend.active().NAME
    rows = []
    try:
        for label, fn in workloads():
            row = [label]
            for name in names:
                _backend.set_backend(name)
                fn()  # warm up
                row.append(best_of(fn, args.repeat))
            rows.append(row)
    finally:
        _backend.set_backend(previous)
    header = f"{'workload':32s}" + "".join(f"{n + ' best/median (s)':>28s}" for n in names)
    if len(names) == 2:
        header += f"{'speedup':>10s}"
    print(f"threads={args.threads} repeat={args.repeat}")
    print(header)
    for label, *timings in rows:
        line = f"{label:32s}" + "".join(f"{b:14.4f} /{m:10.4f}  " for b, m in timings)
        if len(timings) == 2:
            line += f"{timings[0][0] / timings[1][0]:9.2f}x"
        print(line)


if __name__ == "__main__":
    main()
