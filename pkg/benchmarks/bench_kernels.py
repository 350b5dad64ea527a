"""Compiled vs numpy kernels, alone and inside a full ``sample_yn`` + KS row.

    python benchmarks/bench_kernels.py [--repeat 5] [--json out.json]
"""

from __future__ import annotations

import argparse
import contextlib
import json
import sys
import timeit

import numpy as np

from lpball import kernels
from lpball.ks import EmpiricalCDF, ks_one_sample_gaussian
from lpball.models import ModelSpec, WSpec
from lpball.rng import RngStream
from lpball.samplers import sample_yn

KERNEL_NAMES = ("power_sums", "ks_sorted_gaussian", "ks_two_sorted")


@contextlib.contextmanager
def use_backend(module):
    saved = {name: getattr(kernels, name) for name in KERNEL_NAMES}
    for name in KERNEL_NAMES:
        setattr(kernels, name, getattr(module, name))
    try:
        yield
    finally:
        for name, fn in saved.items():
            setattr(kernels, name, fn)


def cases():
    gen = np.random.default_rng(0)
    g1 = gen.standard_gamma(1.0, size=(256, 4096))
    g3 = gen.standard_gamma(1 / 3, size=(256, 4096))
    x = np.sort(gen.standard_normal(1_000_000))
    a = np.sort(gen.standard_normal(200_000))
    b = np.sort(gen.standard_normal(200_000) * 1.01)
    spec = ModelSpec(p=1.5, n=2048, mode="q_norm", q=3.0, w=WSpec.uniform(1.5))

    def row():
        values = sample_yn(spec, 4096, RngStream(1, 2)).values
        return ks_one_sample_gaussian(EmpiricalCDF.build(values), 0.1).statistic

    return {
        "power_sums p=1 q=2 (256x4096)": lambda k: k.power_sums(g1, 1.0, 2.0),
        "power_sums p=3 q=1.7 (256x4096)": lambda k: k.power_sums(g3, 3.0, 1.7),
        "ks_sorted_gaussian (1e6)": lambda k: k.ks_sorted_gaussian(x, 1.0),
        "ks_two_sorted (2e5 + 2e5)": lambda k: k.ks_two_sorted(a, b),
        "end to end: sample_yn n=2048 m=4096 + KS": lambda k: row(),
    }


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--json", metavar="PATH")
    args = parser.parse_args(argv)

    backends = kernels.available_backends()
    if "cython" not in backends:
        print("compiled extension not built; timing the numpy fallback only", file=sys.stderr)
    results = {}
    for label, fn in cases().items():
        timings = {}
        for name, module in backends.items():
            with use_backend(module):
                fn(module)  # warm up
                timings[name] = min(timeit.repeat(lambda: fn(module), number=1, repeat=args.repeat))
        results[label] = timings

    width = max(map(len, results))
    names = list(backends)
    print(f"{'case':<{width}}  " + "  ".join(f"{n:>10}" for n in names) + ("    speedup" if len(names) > 1 else ""))
    for label, timings in results.items():
        cells = "  ".join(f"{timings[n] * 1e3:>8.2f}ms" for n in names)
        speed = f"  {timings['python'] / timings['cython']:>8.2f}x" if len(names) > 1 else ""
        print(f"{label:<{width}}  {cells}{speed}")
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump({"seconds": results}, fh, indent=2)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
