"""Timing comparison of the compiled and numpy kernel backends."""
from __future__ import annotations

import itertools
import time

import numpy as np

from . import _rng
from .kernels import get_backend


def _best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def run(n: int = 200_000, dim: int = 8, k: int = 6, m: float = 2.0, repeat: int = 3, seed: int = 0) -> list[dict]:
    """Best-of-``repeat`` seconds per kernel and backend, plus the largest disagreement."""
    rng = _rng.derive_rng(seed, _rng.EVALUATION)
    X = rng.normal(size=(n, dim))
    C = rng.normal(size=(k, dim))
    w = rng.integers(1, 5, size=n).astype(np.float64)
    pool = rng.normal(size=(12, dim))
    small = X[: min(n, 2000)]
    D2_pool = get_backend("python").sq_dists(small, pool)
    subsets = np.array(list(itertools.combinations(range(pool.shape[0]), 3)), dtype=np.int64)
    cases = {
        "sq_dists": lambda b: b.sq_dists(X, C),
        "nearest": lambda b: b.nearest(X, C)[1],
        "memberships": lambda b: b.memberships(X, C, m),
        "point_costs": lambda b: b.point_costs(X, C, m),
        "subset_costs": lambda b: b.subset_costs(D2_pool, w[: small.shape[0]], subsets, m),
    }
    backends = [get_backend("python")]
    try:
        backends.append(get_backend("compiled"))
    except ImportError:
        pass
    rows = []
    for name, case in cases.items():
        row = {"kernel": name}
        outputs = {}
        for b in backends:
            outputs[b.name] = case(b)
            row[b.name] = _best_of(lambda: case(b), repeat)
        if len(outputs) == 2:
            a, c = outputs["python"], outputs["compiled"]
            row["max_rel_diff"] = float(np.max(np.abs(a - c) / np.maximum(np.abs(a), 1e-300)))
            row["speedup"] = row["python"] / row["compiled"]
        rows.append(row)
    return rows


def format_rows(rows: list[dict]) -> str:
    lines = [f"{'kernel':<14}{'python_s':>12}{'compiled_s':>12}{'speedup':>10}{'max_rel_diff':>14}"]
    for r in rows:
        comp = f"{r['compiled']:12.4f}" if "compiled" in r else f"{'n/a':>12}"
        speed = f"{r['speedup']:10.2f}" if "speedup" in r else f"{'n/a':>10}"
        diff = f"{r['max_rel_diff']:14.2e}" if "max_rel_diff" in r else f"{'n/a':>14}"
        lines.append(f"{r['kernel']:<14}{r['python']:12.4f}{comp}{speed}{diff}")
    return "\n".join(lines)
