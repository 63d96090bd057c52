"""Synthetic data generation and coreset quality trials."""
from __future__ import annotations

import io
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _rng, kernels
from .core import (FuzzyParams, WeightedDataset, as_dataset, fuzzy_cost_of_means, kmeans_cost,
                   negligible_columns, optimal_memberships)
from .coreset import Coreset, epsilon_tilde

TAILS = ("gaussian", "pareto")
MODES = ("non-negligible", "unrestricted")
REPORT_HEADER = "# fuzzycoreset trial report v1"
RATIO_COLUMNS = ("solution", "n_means", "phi_data", "phi_coreset", "phi_ratio",
                 "km_data", "km_coreset", "km_ratio")
MAX_REJECTIONS = 10_000


def _validate_mixture(mixture: dict) -> tuple[int, list]:
    if not isinstance(mixture, dict) or "components" not in mixture:
        raise ValueError("mixture description needs a 'components' list")
    comps = mixture["components"]
    if not comps:
        raise ValueError("mixture description has no components")
    dim = int(mixture.get("dim", len(comps[0]["mean"])))
    if dim < 1:
        raise ValueError("dim must be positive")
    for i, c in enumerate(comps):
        if len(c["mean"]) != dim:
            raise ValueError(f"component {i} mean has dimension {len(c['mean'])}, expected {dim}")
        if int(c["count"]) < 0 or float(c.get("scale", 1.0)) < 0:
            raise ValueError(f"component {i} needs count >= 0 and scale >= 0")
        if c.get("tail", "gaussian") not in TAILS:
            raise ValueError(f"component {i} tail must be one of {TAILS}")
    if sum(int(c["count"]) for c in comps) < 1:
        raise ValueError("mixture description has no points")
    return dim, comps


def generate_dataset(mixture: dict, seed: int) -> WeightedDataset:
    """Sample a mixture and shuffle it; unit weights.

    Each component has a mean, a scale, a count and a tail: ``gaussian``
    (isotropic normal) or ``pareto`` (uniform direction, Lomax radius with
    shape ``shape``, default 2).
    """
    dim, comps = _validate_mixture(mixture)
    parts = []
    for i, c in enumerate(comps):
        rng = _rng.derive_rng(seed, _rng.GENERATION, i)
        n, scale, mean = int(c["count"]), float(c.get("scale", 1.0)), np.asarray(c["mean"], dtype=np.float64)
        if c.get("tail", "gaussian") == "gaussian":
            offs = rng.normal(0.0, 1.0, size=(n, dim))
        else:
            direction = rng.normal(0.0, 1.0, size=(n, dim))
            direction /= np.maximum(np.linalg.norm(direction, axis=1, keepdims=True), 1e-300)
            offs = direction * rng.pareto(float(c.get("shape", 2.0)), size=(n, 1))
        parts.append(mean + scale * offs)
    X = np.vstack(parts)
    order = _rng.derive_rng(seed, _rng.GENERATION, len(comps)).permutation(X.shape[0])
    return WeightedDataset.unweighted(X[order])


def planted_mixture(K: int, dim: int, n: int, seed: int, separation: float = 10.0,
                    scale: float = 1.0, tail: str = "gaussian") -> dict:
    """Mixture description for K components with means uniform in [-separation, separation]^dim."""
    rng = _rng.derive_rng(seed, _rng.GENERATION, 1 << 20)
    means = rng.uniform(-separation, separation, size=(K, dim))
    counts = [n // K + (1 if i < n % K else 0) for i in range(K)]
    return {"dim": dim, "components": [
        {"mean": means[i].tolist(), "scale": scale, "count": counts[i], "tail": tail} for i in range(K)]}


@dataclass
class TrialReport:
    config: dict
    summary: dict
    ratios: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)

    def format(self, include_timings: bool = False) -> str:
        out = io.StringIO()
        out.write(REPORT_HEADER + "\n[config]\n")
        for k, v in self.config.items():
            out.write(f"{k}={_fmt(v)}\n")
        out.write("[summary]\n")
        for k, v in self.summary.items():
            out.write(f"{k}={_fmt(v)}\n")
        if include_timings and self.timings:
            out.write("[timings]\n")
            for k, v in self.timings.items():
                out.write(f"{k}={v:.6f}\n")
        out.write("[ratios]\n" + ",".join(RATIO_COLUMNS) + "\n")
        for row in self.ratios:
            out.write(",".join(_fmt(v) for v in row) + "\n")
        return out.getvalue()

    @classmethod
    def parse(cls, text: str) -> "TrialReport":
        lines = text.splitlines()
        if not lines or lines[0] != REPORT_HEADER:
            raise ValueError("not a trial report")
        sections, current = {}, None
        for line in lines[1:]:
            if line.startswith("[") and line.endswith("]"):
                current = line[1:-1]
                sections[current] = []
            elif line:
                sections.setdefault(current, []).append(line)

        def kv(name):
            return {k: _parse(v) for k, v in (ln.split("=", 1) for ln in sections.get(name, []))}

        rows = sections.get("ratios", [])
        if not rows or tuple(rows[0].split(",")) != RATIO_COLUMNS:
            raise ValueError("report ratio table has an unexpected header")
        ratios = [tuple(_parse(v) for v in ln.split(",")) for ln in rows[1:]]
        return cls(kv("config"), kv("summary"), ratios, kv("timings"))


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse(s: str):
    if s in ("true", "false"):
        return s == "true"
    for conv in (int, float):
        try:
            return conv(s)
        except ValueError:
            pass
    return s


def sample_solution(X: WeightedDataset, params: FuzzyParams, mode: str, seed: int, index: int) -> np.ndarray:
    """Means set number ``index``: size uniform in 1..K, means uniform in the bounding box.

    The box is inflated three times around its center in unrestricted mode;
    non-negligible mode redraws until no cluster of X is negligible.
    """
    lo, hi = X.points.min(axis=0), X.points.max(axis=0)
    if mode == "unrestricted":
        mid, half = (lo + hi) / 2.0, (hi - lo) / 2.0
        lo, hi = mid - 3.0 * half, mid + 3.0 * half
    rng = _rng.derive_rng(seed, _rng.EVALUATION, index)
    for _ in range(MAX_REJECTIONS):
        k = int(rng.integers(1, params.K + 1))
        M = rng.uniform(lo, hi, size=(k, X.D))
        if mode == "unrestricted":
            return M
        r = optimal_memberships(X, M, params.m)
        if not negligible_columns(r, params.K, params.epsilon, params.m).any():
            return M
    raise RuntimeError(f"no non-negligible solution after {MAX_REJECTIONS} draws")


def _ratio(num: float, den: float) -> float:
    if den == 0.0:
        return 1.0 if num == 0.0 else math.inf
    return num / den


def evaluate_coreset(X, S, params: FuzzyParams, n_solutions: int = 100, mode: str = "non-negligible",
                     seed: int = 0, epsilon_eval: float | None = None) -> TrialReport:
    """Compare fuzzy and K-means costs of S against X on sampled solutions.

    ``epsilon_eval`` overrides the epsilon the tolerances are derived from
    (for example the compounded epsilon of a stream); by default it is
    ``params.epsilon``. Fuzzy tolerance is epsilon (3 epsilon in unrestricted
    mode); K-means tolerance is eps_tilde / K^(m-1).
    """
    X = as_dataset(X)
    S_ds = S.as_dataset() if isinstance(S, Coreset) else as_dataset(S)
    if n_solutions < 1:
        raise ValueError("n_solutions must be positive")
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if S_ds.D != X.D:
        raise ValueError("coreset and data have different dimensions")
    p = params
    eps = p.epsilon if epsilon_eval is None else float(epsilon_eval)
    fuzzy_tol = eps if mode == "non-negligible" else 3.0 * eps
    km_tol = epsilon_tilde(eps, p.alpha, p.K, p.m, p.const_a) / p.K ** (p.m - 1.0)

    def one(i):
        M = sample_solution(X, p, mode, seed, i)
        phi_x, phi_s = fuzzy_cost_of_means(X, M, p.m), fuzzy_cost_of_means(S_ds, M, p.m)
        km_x, km_s = kmeans_cost(X, M), kmeans_cost(S_ds, M)
        return (i, M.shape[0], phi_x, phi_s, _ratio(phi_s, phi_x), km_x, km_s, _ratio(km_s, km_x))

    t0 = time.perf_counter()
    workers = kernels.thread_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, range(n_solutions)))
    else:
        rows = [one(i) for i in range(n_solutions)]
    elapsed = time.perf_counter() - t0

    phi_dev = np.array([abs(r[4] - 1.0) for r in rows])
    km_dev = np.array([abs(r[7] - 1.0) for r in rows])
    config = {"mode": mode, "n_solutions": n_solutions, "seed": seed, "K": p.K, "m": p.m,
              "epsilon": p.epsilon, "epsilon_eval": eps, "delta": p.delta, "const_q": p.const_q,
              "const_a": p.const_a, "const_b": p.const_b, "const_c": p.const_c,
              "alpha": p.alpha, "beta": p.beta, "data_points": X.N, "data_total_weight": X.total_weight,
              "dim": X.D}
    summary = {"coreset_size": S_ds.N, "coreset_total_weight": S_ds.total_weight,
               "phi_tolerance": fuzzy_tol, "km_tolerance": km_tol,
               "phi_pass_fraction": float(np.mean(phi_dev <= fuzzy_tol)),
               "km_pass_fraction": float(np.mean(km_dev <= km_tol)),
               "phi_max_deviation": float(phi_dev.max()), "km_max_deviation": float(km_dev.max()),
               "phi_p95_deviation": float(np.quantile(phi_dev, 0.95)),
               "km_p95_deviation": float(np.quantile(km_dev, 0.95))}
    return TrialReport(config, summary, rows, {"evaluate_seconds": elapsed})
