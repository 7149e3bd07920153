"""Time (k,l)-consistency with the compiled and the pure-Python kernel.

Runs the twisted parity torus for a range of n and checks that both
kernels return identical traces.

    python3 benchmarks/bench_consistency.py --n-range 2..4 --repeat 3
"""

import argparse
import time

from cosetcsp.cli import parse_n_range
from cosetcsp.consistency import run_kl_consistency
from cosetcsp.io import load_adp
from cosetcsp.kernels import KERNELS
from cosetcsp.torus import TorusSpec, build_torus, default_twist, twist


def best_of(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--n-range", default="2..4")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--l", type=int, default=3)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args()

    adp = load_adp("adp_parity")
    pi = default_twist(adp)
    kernels = sorted(KERNELS)
    print(f"kernels: {', '.join(kernels)}")
    print(f"{'n':>3} {'stages':>8} " + " ".join(f"{k + ' s':>12}" for k in kernels) + "  speedup")
    for n in parse_n_range(args.n_range):
        spec = twist(TorusSpec(n, adp), ("R", 0, 0), pi)
        t = adp.template.copy()
        inst = build_torus(spec, t)
        times, results = {}, {}
        for name in kernels:
            times[name], results[name] = best_of(
                lambda: run_kl_consistency(inst, t, args.k, args.l, kernel=name), args.repeat)
        ref = results["python"]
        for name, r in results.items():
            assert r.families == ref.families and r.trace == ref.trace, f"{name} disagrees at n={n}"
        speed = times["python"] / times["compiled"] if "compiled" in times else float("nan")
        print(f"{n:>3} {ref.stages:>8} " + " ".join(f"{times[k]:>12.3f}" for k in kernels)
              + f"  {speed:7.1f}x")


if __name__ == "__main__":
    main()
