"""Compare the compiled simulation kernel against the pure-numpy fallback.

Usage: python benchmarks/benchmark_backends.py [--runs M] [--horizon T]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from dpconsensus import check_structural_balance, fixture_graph
from dpconsensus import engine
from dpconsensus._kernels import get_backend
from dpconsensus.schedules import PowerNoise, PowerStep


def bench(backend_name: str, runs: int, horizon: int) -> tuple[float, float]:
    g = fixture_graph("fig1a")
    s = check_structural_balance(g)
    x0 = np.array([10.0, -8.0, 6.0, -4.0, 2.0])
    sched = PowerStep(0.3, 1.0, 1.0)
    noise = PowerNoise(1.0, 0.1, 1.0, offset=1)
    backend = get_backend(backend_name)
    t0 = time.perf_counter()
    _, res = engine.run_many(
        x0, g, s, sched, noise, horizon, runs, backend=backend
    )
    elapsed = time.perf_counter() - t0
    return elapsed, float(res.v[:, -1].mean())


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--runs", type=int, default=500)
    ap.add_argument("--horizon", type=int, default=10_000)
    args = ap.parse_args()
    results = {}
    for name in ("pure", "compiled"):
        try:
            elapsed, v_final = bench(name, args.runs, args.horizon)
        except ImportError:
            print(f"{name:>9}: unavailable")
            continue
        results[name] = elapsed
        rate = args.runs * args.horizon / elapsed
        print(f"{name:>9}: {elapsed:8.3f} s   {rate:12.0f} agent-steps/s   mean V(T)={v_final:.4g}")
    if len(results) == 2:
        print(f"  speedup: compiled is {results['pure'] / results['compiled']:.2f}x vs pure")


if __name__ == "__main__":
    main()
