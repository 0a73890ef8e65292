"""Compare the compiled and pure-Python kernels.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--iterations 999]

Reports the best-of-``repeat`` wall time per call for each kernel and for a
full bootstrap run, and checks that both backends return the same numbers.
"""

import argparse
import timeit

import numpy as np

from gibbsdice import _backend
from gibbsdice.datasets import load_builtin
from gibbsdice.estimation import xxy_arrays
from gibbsdice.model import CuboidSpec, Normalization, cuboid_energies
from gibbsdice.validation import BootstrapConfig, bootstrap_constant_beta


def _best(fn, number, repeat):
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def kernel_cases():
    E = np.ascontiguousarray(cuboid_energies(CuboidSpec(13, 20, 23), Normalization.HALF_DIAGONAL))
    n = np.array([278, 208, 833, 882, 205, 294], dtype=float)
    fam = xxy_arrays(load_builtin("budden").observations)
    return {
        "gibbs_nll": (lambda k: k.gibbs_nll(E, n, 4.9), 20000),
        "gibbs_fit": (lambda k: k.gibbs_fit(E, n, 0.0, 100.0, 1e-6, 500), 2000),
        "xxy_nll": (lambda k: k.xxy_nll(*fam, 4.46), 20000),
        "xxy_fit": (lambda k: k.xxy_fit(*fam, 0.0, 100.0, 1e-6, 500), 2000),
        "xxy_chi2": (lambda k: k.xxy_chi2(*fam, 4.46), 20000),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--iterations", type=int, default=999)
    args = ap.parse_args()

    compiled = _backend.compiled()
    backends = [("python", _backend.pure)] + ([("cython", compiled)] if compiled else [])
    if compiled is None:
        print("compiled kernels not built; timing the fallback only")

    print(f"{'kernel':<22}" + "".join(f"{name:>14}" for name, _ in backends) + ("   speed-up" if compiled else ""))
    for label, (call, number) in kernel_cases().items():
        times = [_best(lambda k=k: call(k), number, args.repeat) for _, k in backends]
        results = [call(k) for _, k in backends]
        if len(results) == 2:
            a, b = (r[0] if isinstance(r, tuple) else r for r in results)
            assert abs(a - b) <= 1e-6 * max(1.0, abs(a)), (label, a, b)
        row = f"{label:<22}" + "".join(f"{t * 1e6:>11.2f} us" for t in times)
        if len(times) == 2:
            row += f"   {times[0] / times[1]:8.1f}x"
        print(row)

    obs = load_builtin("budden").observations
    cfg = BootstrapConfig(beta0=4.46, epsilon=0.05, iterations=args.iterations, master_seed=1)
    times, pvals = [], []
    saved = _backend.kernels
    try:
        for _, k in backends:
            _backend.kernels = k
            times.append(_best(lambda: bootstrap_constant_beta(obs, cfg), 1, max(1, args.repeat // 2)))
            pvals.append(bootstrap_constant_beta(obs, cfg).p_value)
    finally:
        _backend.kernels = saved
    label = f"bootstrap B={args.iterations}"
    row = f"{label:<22}" + "".join(f"{t:>12.3f} s" for t in times)
    if len(times) == 2:
        row += f"   {times[0] / times[1]:8.1f}x"
    print(row)
    print("bootstrap p-values: " + ", ".join(f"{name}={p:.4f}" for (name, _), p in zip(backends, pvals)))


if __name__ == "__main__":
    main()
