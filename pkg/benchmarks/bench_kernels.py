"""Compare the numba and numpy jet-product backends.

    python benchmarks/bench_kernels.py [--points N] [--repeat R]

Each case runs once to warm up (numba compiles on first use) and is then
timed as the best of ``--repeat`` runs.  Results must agree to round-off.
"""

import argparse
import time

import numpy as np

from sdcalc import _kernels
from sdcalc import surface_calculus as sc
from sdcalc import taylor as tm
from sdcalc import tube_calculus as tc
from sdcalc.fields import TUBE_VARS, scalar
from sdcalc.geom_core import builtin_curve, builtin_surface
from sdcalc.taylor import TaylorSpace


def raw_products(n):
    sp = TaylorSpace.get(3, 6)
    rng = np.random.default_rng(0)
    x, y, z = (sp.variable(k, rng.uniform(-1, 1, n)) for k in range(3))
    return (tm.exp(x * y) * tm.sin(z) / (2.0 + x * x + y * z)).c


def surface_laplacian(n):
    ch = builtin_surface("torus")
    rng = np.random.default_rng(1)
    s = rng.uniform(0, 2 * np.pi, (n, 2))
    return sc.scalar_laplacian(ch, scalar("sin(s1)*cos(2*s2)*exp(sigma)"), s, rng.uniform(-0.3, 0.3, n))


def tube_laplacian(n):
    c = builtin_curve("helix")
    rng = np.random.default_rng(2)
    f = scalar("sin(s)*cos(theta)*sigma^2", TUBE_VARS)
    return tc.tube_scalar_laplacian(c, f, rng.uniform(1, 11, n), rng.uniform(0, 6, n), rng.uniform(0.1, 1, n))


CASES = {"jet products": raw_products, "surface laplacian": surface_laplacian, "tube laplacian": tube_laplacian}


def timed(fn, n, repeat):
    out = fn(n)
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(n)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    backends = ["numpy"] + (["numba"] if _kernels.HAVE_NUMBA else [])
    prev = _kernels.backend()
    print(f"{'case':<20}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}{'max diff':>12}")
    try:
        for name, fn in CASES.items():
            times, outs = [], []
            for b in backends:
                _kernels.set_backend(b)
                t, out = timed(fn, args.points, args.repeat)
                times.append(t)
                outs.append(out)
            diff = float(np.max(np.abs(outs[0] - outs[-1])))
            speed = times[0] / times[-1]
            print(f"{name:<20}" + "".join(f"{t * 1e3:>10.1f}ms" for t in times) + f"{speed:>9.2f}x{diff:>12.1e}")
    finally:
        _kernels.set_backend(prev)


if __name__ == "__main__":
    main()
