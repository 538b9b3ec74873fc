"""Compare the compiled coset-enumeration kernel with the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]

Both kernels must produce identical standardized tables; the script checks
that before reporting timings.
"""
import argparse
import random
import statistics
import time

from shadowhull.formspace import FormedSpace
from shadowhull.gf import get_field
from shadowhull.grouprep import standard_rep
from shadowhull.hull import Presentation, build_presentation, enumerate_cosets, kernel_module
from shadowhull.veronese import natural_embedding, veronese_hermitian, veronese_quadratic, wedge_embedding


def workloads():
    yield "PSL(2,7)", Presentation(2, 2, [(1, 1), (2, 2, 2), (1, 2) * 7, (1, -2, 1, 2) * 4])
    yield "quadratic n=3 q=2", build_presentation(veronese_quadratic(3, 2))
    yield "W(2) natural", build_presentation(natural_embedding(FormedSpace(get_field(2), 4, "symplectic")))
    yield "wedge n=4 q=2", build_presentation(wedge_embedding(4, 2))
    yield "hermitian n=3 q=2", build_presentation(veronese_hermitian(3, 2))
    yield "2A5(2) unipotent", build_presentation(standard_rep("2A5(2)", 3).embedding)


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), statistics.median(times), out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    print(f"{'workload':22s} {'order':>6s} {'python ms':>10s} {'compiled ms':>12s} {'speedup':>8s}")
    for name, pres in workloads():
        py, _, a = best_of(lambda: enumerate_cosets(pres, kernel="python"), args.repeat)
        cc, _, b = best_of(lambda: enumerate_cosets(pres, kernel="compiled"), args.repeat)
        assert a.digest == b.digest, name
        print(f"{name:22s} {a.order!s:>6s} {py * 1e3:10.1f} {cc * 1e3:12.2f} {py / cc:8.1f}x")

    rng = random.Random(0)
    rows = [rng.getrandbits(60) for _ in range(2000)]
    py_mod, cc_mod = kernel_module("python"), kernel_module("compiled")
    py, _, ra = best_of(lambda: py_mod.gf2_rank(rows), args.repeat)
    cc, _, rb = best_of(lambda: cc_mod.gf2_rank(rows), args.repeat)
    assert ra == rb
    print(f"{'gf2_rank 2000x60':22s} {ra:6d} {py * 1e3:10.1f} {cc * 1e3:12.2f} {py / cc:8.1f}x")


if __name__ == "__main__":
    main()
