"""Time the compiled and pure-Python kernel backends on identical inputs.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import timeit

import numpy as np

from nomasim import kernels
from nomasim.rng import RngStream
from nomasim.semigf import VARIANTS, GfPopulation, MultiOrbConfig, prepare_slots
from nomasim.sic import DecodingPolicy


def pair_inputs(n):
    u = RngStream(1, 0).uniform_block(0, n, 4)
    alpha = 1e3 * -np.log1p(-u[:, :2])
    eps = 2.0 ** (0.25 + 2.75 * u[:, 2:]) - 1.0
    return alpha, eps


def orb_inputs(slots, k=200, orbs=10, rho=0.1):
    cfg = MultiOrbConfig.homogeneous(orbs, GfPopulation(k, rho))
    u = RngStream(1, 1).uniform_block(0, slots, cfg.width)
    return prepare_slots(cfg, u, VARIANTS)["power_pool"]


def bench(label, fn_by_backend, repeat):
    results = {}
    for name, fn in fn_by_backend.items():
        results[name] = min(timeit.repeat(fn, number=1, repeat=repeat))
    base = results.get("python")
    cells = []
    for name, t in sorted(results.items()):
        speedup = f" ({base / t:.1f}x)" if base and name != "python" else ""
        cells.append(f"{name}={t * 1e3:.2f} ms{speedup}")
    print(f"{label:<32} " + "  ".join(cells))


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    backends = {name: kernels.get_backend(name) for name in sorted(kernels.BACKENDS)}
    print(f"backends: {', '.join(backends)} (active: {kernels.BACKEND})")

    alpha, eps = pair_inputs(10**6)
    for policy in DecodingPolicy:
        bench(f"decode_pairs {policy.value} 1e6",
              {n: (lambda b=b, p=policy: b.decode_pairs(alpha, eps, p.code)) for n, b in backends.items()},
              args.repeat)

    orb_args = orb_inputs(10**4)
    bench("orb_slots K=200 M=10 1e4 slots",
          {n: (lambda b=b: b.orb_slots(*orb_args)) for n, b in backends.items()}, args.repeat)


if __name__ == "__main__":
    main()
