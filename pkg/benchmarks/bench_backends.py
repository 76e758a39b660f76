"""Time the transfer-matrix chain and a full scattering run under both backends.

Usage: python benchmarks/bench_backends.py [--sites 64] [--grid 4096] [--repeat 5]
"""

from __future__ import annotations

import argparse
import os
import timeit

import numpy as np

from dnls import _kernels, fixtures
from dnls.grid import SpectralGrid
from dnls.scattering import scatter


def _chain_inputs(sites: int, grid: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    m = [rng.normal(size=(sites, grid)) + 1j * rng.normal(size=(sites, grid)) for _ in range(4)]
    s = rng.normal(size=(grid, 2)) + 1j * rng.normal(size=(grid, 2))
    return m, s


def bench_chain(sites: int, grid: int, repeat: int) -> dict[str, float]:
    m, s = _chain_inputs(sites, grid)
    times = {}
    for name in _kernels.BACKENDS:
        _kernels.chain_apply(*m, s, True, backend=name)  # compile / warm up
        times[name] = min(timeit.repeat(lambda: _kernels.chain_apply(*m, s, True, backend=name), number=3, repeat=repeat)) / 3
    ref = _kernels.chain_apply(*m, s, True, backend="numpy")
    diff = float((np.abs(_kernels.chain_apply(*m, s, True, backend="numba") - ref) / np.abs(ref).max()).max())
    return {**times, "max_rel_difference": diff}


def bench_scatter(grid: int, repeat: int) -> dict[str, float]:
    pair, g = fixtures.p3(), SpectralGrid(grid)
    times = {}
    previous = os.environ.get("DNLS_BACKEND")
    try:
        for name in _kernels.BACKENDS:
            os.environ["DNLS_BACKEND"] = name
            scatter("qr", pair, g, bound_states="none")
            times[name] = min(timeit.repeat(lambda: scatter("qr", pair, g, bound_states="none"), number=1, repeat=repeat))
    finally:
        if previous is None:
            os.environ.pop("DNLS_BACKEND", None)
        else:
            os.environ["DNLS_BACKEND"] = previous
    return times


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sites", type=int, default=64)
    p.add_argument("--grid", type=int, default=4096)
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args()
    chain = bench_chain(args.sites, args.grid, args.repeat)
    print(f"chain_apply  sites={args.sites} grid={args.grid}")
    for name in _kernels.BACKENDS:
        print(f"  {name:<6} {chain[name] * 1e3:9.3f} ms")
    print(f"  speedup {chain['numpy'] / chain['numba']:.2f}x, max relative difference {chain['max_rel_difference']:.1e}")
    sc = bench_scatter(args.grid, args.repeat)
    print(f"scatter(P3)  grid={args.grid}")
    for name in _kernels.BACKENDS:
        print(f"  {name:<6} {sc[name] * 1e3:9.3f} ms")


if __name__ == "__main__":
    main()
