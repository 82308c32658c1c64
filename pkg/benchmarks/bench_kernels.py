"""Compare the compiled and numpy kernel backends.

    python3 benchmarks/bench_kernels.py --n 2000 --d 50 --repeat 3

Each row reports the best wall time over ``--repeat`` runs and checks that
both backends agree on the result.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from repralign import _backend
from repralign.core import validate_dataset
from repralign.hierclust import ward_cluster


def _best(fn, repeat: int) -> tuple[float, object]:
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--d", type=int, default=50)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    X = rng.normal(size=(args.n, args.d))
    y = (X[:, 0] + 0.5 * rng.normal(size=args.n) > 0.3).astype(np.int64)
    ds = validate_dataset(X, y, ["neg", "pos"], "pos")
    backends = _backend.available()
    print(f"n={args.n} d={args.d} backends={backends}")
    print(f"{'kernel':<22}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}")

    results: dict[str, dict[str, tuple[float, object]]] = {}
    dn = ward_cluster(ds)
    left = np.ascontiguousarray(dn.left)
    right = np.ascontiguousarray(dn.right)
    gold = ds.positive_mask.astype(np.int64)
    evaluate = np.ones(args.n + 1, dtype=np.uint8)
    evaluate[:2] = 0
    Xc = np.ascontiguousarray(X)
    cases = {
        "ward (condensed)": lambda b: lambda: ward_cluster(ds, backend=b).cost,
        "ward (low memory)": lambda b: lambda: ward_cluster(ds, low_memory=True, backend=b).cost,
        "alignment_sweep": lambda b: lambda: _backend.kernels(b).alignment_sweep(left, right, gold),
        "dbi_sweep": lambda b: lambda: _backend.kernels(b).dbi_sweep(Xc, left, right, evaluate),
    }
    for name, make in cases.items():
        results[name] = {b: _best(make(b), args.repeat) for b in backends}
        times = [results[name][b][0] for b in backends]
        line = f"{name:<22}" + "".join(f"{t:>11.3f}s" for t in times)
        if len(backends) == 2:
            a, b = (results[name][k][1] for k in backends)
            agree = np.allclose(a, b, rtol=1e-9, atol=1e-12, equal_nan=True)
            line += f"{times[1] / times[0]:>9.1f}x" + ("" if agree else "  MISMATCH")
        print(line)


if __name__ == "__main__":
    main()
