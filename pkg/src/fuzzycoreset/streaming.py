"""Merge-and-reduce maintenance of a coreset over an insertion-only stream.

Level i holds at most one coreset summarizing 2^i base blocks, like the bits
of a binary counter. A full buffer becomes a level-0 coreset; two coresets
on the same level are merged (concatenated) and reduced into level i + 1.

Every reduction at level i uses its own epsilon_i. A coreset on level L has
been through reductions 0..L, so its error compounds to prod (1 + epsilon_i).
Two schedules keep that product at most 1 + epsilon:

``uniform``  epsilon_i = (1 + epsilon)^(1/(depth+1)) - 1 for a configured depth.
``decay``    epsilon_i = epsilon / (2 (i+1)^2), for any depth while epsilon
             is small (the infinite product exceeds 1 + epsilon once
             epsilon is above roughly 0.5).

A stream refuses a configuration whose compounded error exceeds epsilon.

The decay schedule makes the per-level sample size grow like (i+1)^4, which
outpaces the doubling of the input for the first ~16 levels, so it only
compresses on very long streams. ``uniform`` is the default.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from . import _rng
from .core import DimensionError, FuzzyParams
from .coreset import Coreset, coreset_from_weighted, epsilon_tilde, log_gamma, sample_size_q

log = logging.getLogger(__name__)

SCHEDULES = ("uniform", "decay")


def _compound(levels) -> float:
    prod = 1.0
    for eps in levels:
        prod *= 1.0 + eps
    return prod - 1.0


@lru_cache(maxsize=256)
def _uniform_epsilon(epsilon: float, depth: int) -> float:
    eps = (1.0 + epsilon) ** (1.0 / (depth + 1)) - 1.0
    while _compound([eps] * (depth + 1)) > epsilon:
        eps = math.nextafter(eps, 0.0)
    return eps


def level_epsilon(epsilon: float, level: int, schedule: str = "uniform", depth: int = 20) -> float:
    if schedule == "decay":
        return epsilon / (2.0 * (level + 1) ** 2)
    if schedule == "uniform":
        return _uniform_epsilon(float(epsilon), int(depth))
    raise ValueError(f"unknown schedule {schedule!r}; choose from {SCHEDULES}")


def compounded_error(epsilon: float, depth: int, schedule: str = "uniform") -> float:
    """prod_{i=0}^{depth} (1 + epsilon_i) - 1."""
    return _compound(level_epsilon(epsilon, i, schedule, depth) for i in range(depth + 1))


def default_block_size(params: FuzzyParams, dim: int, epsilon0: Optional[float] = None) -> int:
    """Block size matching the level-0 coreset size bound q * ceil(beta K) * (F + 1).

    F depends on the block size itself, so iterate to a fixed point.
    """
    p = params
    eps = p.epsilon if epsilon0 is None else epsilon0
    eps_t = epsilon_tilde(eps, p.alpha, p.K, p.m, p.const_a)
    cells = math.ceil(p.beta * p.K)
    size = 1024
    for _ in range(20):
        F = max(0, math.ceil(0.5 * math.log2(p.alpha * size)))
        lg = log_gamma(p.alpha, p.beta, p.K, p.m, size, dim, eps, eps_t, p.const_b, p.const_c)
        q = sample_size_q(p.alpha, p.beta, p.K, p.m, eps_t, p.delta / 3.0, F, lg, p.const_q)
        new = min(q * cells * (F + 1), 10 ** 9)
        if new == size:
            break
        size = new
    return int(max(size, 2))


@dataclass
class StreamState:
    params: FuzzyParams
    dim: int
    base_block_size: int
    seed: int = 0
    schedule: str = "uniform"
    depth: int = 20
    levels: list = field(default_factory=list)
    buffer: np.ndarray = None
    fill: int = 0
    total_seen: int = 0
    blocks: int = 0
    carries: int = 0
    peak_resident: int = 0

    def __post_init__(self):
        if self.schedule not in SCHEDULES:
            raise ValueError(f"unknown schedule {self.schedule!r}")
        if self.base_block_size < 1:
            raise ValueError("base_block_size must be positive")
        if self.depth < 0:
            raise ValueError("depth must be >= 0")
        total = compounded_error(self.params.epsilon, self.depth, self.schedule)
        if total > self.params.epsilon:
            raise ValueError(f"the {self.schedule} schedule compounds to {total:.4g} over {self.depth + 1} "
                             f"levels, above epsilon = {self.params.epsilon}")
        if self.buffer is None:
            self.buffer = np.empty((self.base_block_size, self.dim), dtype=np.float64)

    def epsilon(self, level: int) -> float:
        return level_epsilon(self.params.epsilon, level, self.schedule, self.depth)

    def occupied(self) -> list[bool]:
        return [c is not None for c in self.levels]

    def resident(self) -> int:
        return sum(len(c) for c in self.levels if c is not None) + self.fill

    def summarized_total(self) -> int:
        return sum(c.source_total for c in self.levels if c is not None)


def new_stream(params: FuzzyParams, dim: int, seed: int = 0, base_block_size: Optional[int] = None,
               schedule: str = "uniform", depth: int = 20) -> StreamState:
    if base_block_size is None:
        base_block_size = default_block_size(params, dim, level_epsilon(params.epsilon, 0, schedule, depth))
    return StreamState(params, dim, int(base_block_size), seed, schedule, depth)


def merge(c1: Coreset, c2: Coreset) -> Coreset:
    """Union of two coresets; entries are concatenated, duplicates stay separate."""
    if len(c1) == 0:
        return c2
    if len(c2) == 0:
        return c1
    if c1.D != c2.D:
        raise DimensionError("cannot merge coresets of different dimension")
    return Coreset(np.vstack([c1.points, c2.points]), np.concatenate([c1.weights, c2.weights]),
                   c1.source_total + c2.source_total, np.concatenate([c1.indices, c2.indices]))


def reduce(c: Coreset, params: FuzzyParams, level: int, rng_seed: int,
           schedule: str = "uniform", depth: int = 20) -> Coreset:
    """Re-run the weighted construction on c with the epsilon scheduled for ``level``."""
    if len(c) == 0:
        return c
    p = params.with_epsilon(level_epsilon(params.epsilon, level, schedule, depth))
    sub = coreset_from_weighted(c.as_dataset(), p, rng_seed)
    return Coreset(sub.points, sub.weights, c.source_total, c.indices[sub.indices], sub.info)


def _seed(state: StreamState, *keys) -> int:
    ss = np.random.SeedSequence(entropy=state.seed, spawn_key=(_rng.STREAM, *keys))
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def _flush(state: StreamState) -> None:
    start = state.total_seen - state.fill
    block = Coreset(state.buffer[:state.fill].copy(), np.ones(state.fill, dtype=np.int64),
                    state.fill, np.arange(start, start + state.fill))
    state.fill = 0
    carry = reduce(block, state.params, 0, _seed(state, 0, state.blocks), state.schedule, state.depth)
    state.blocks += 1
    level = 0
    while True:
        if level == len(state.levels):
            state.levels.append(None)
        if state.levels[level] is None:
            state.levels[level] = carry
            break
        if level + 1 > state.depth:
            log.warning("stream exceeded configured depth %d; compounded error bound no longer holds",
                        state.depth)
        merged = merge(state.levels[level], carry)
        state.levels[level] = None
        state.peak_resident = max(state.peak_resident, state.resident() + len(merged))
        state.carries += 1
        carry = reduce(merged, state.params, level + 1, _seed(state, level + 1, state.carries),
                       state.schedule, state.depth)
        level += 1
    state.peak_resident = max(state.peak_resident, state.resident())


def stream_insert(state: StreamState, point) -> StreamState:
    x = np.asarray(point, dtype=np.float64).ravel()
    if x.shape[0] != state.dim:
        raise DimensionError(f"point has dimension {x.shape[0]}, stream has {state.dim}")
    state.buffer[state.fill] = x
    state.fill += 1
    state.total_seen += 1
    state.peak_resident = max(state.peak_resident, state.resident())
    if state.fill == state.base_block_size:
        _flush(state)
    return state


def stream_extend(state: StreamState, points, on_block=None) -> StreamState:
    """Insert many points; same result as repeated ``stream_insert``.

    ``on_block(state)`` is called after every completed block.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != state.dim:
        raise DimensionError(f"expected an (n, {state.dim}) array")
    pos = 0
    while pos < pts.shape[0]:
        take = min(state.base_block_size - state.fill, pts.shape[0] - pos)
        state.buffer[state.fill:state.fill + take] = pts[pos:pos + take]
        state.fill += take
        state.total_seen += take
        pos += take
        state.peak_resident = max(state.peak_resident, state.resident())
        if state.fill == state.base_block_size:
            _flush(state)
            if on_block is not None:
                on_block(state)
    return state


def finalize(state: StreamState) -> Coreset:
    """All level coresets plus the raw buffer with unit weights."""
    out = Coreset.empty(state.dim)
    for c in state.levels:
        if c is not None:
            out = merge(out, c)
    if state.fill:
        start = state.total_seen - state.fill
        out = merge(out, Coreset(state.buffer[:state.fill].copy(), np.ones(state.fill, dtype=np.int64),
                                 state.fill, np.arange(start, start + state.fill)))
    return out


def _coreset_json(c: Coreset) -> dict:
    return {"points": c.points.tolist(), "weights": c.weights.tolist(),
            "source_total": c.source_total, "indices": c.indices.tolist()}


def save_checkpoint(state: StreamState, path) -> None:
    doc = {
        "format": "fuzzycoreset-stream/1",
        "params": asdict(state.params),
        "dim": state.dim, "base_block_size": state.base_block_size, "seed": state.seed,
        "schedule": state.schedule, "depth": state.depth,
        "total_seen": state.total_seen, "blocks": state.blocks, "carries": state.carries,
        "peak_resident": state.peak_resident,
        "levels": [None if c is None else _coreset_json(c) for c in state.levels],
        "buffer": state.buffer[:state.fill].tolist(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def load_checkpoint(path) -> StreamState:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != "fuzzycoreset-stream/1":
        raise ValueError("not a stream checkpoint")
    state = StreamState(FuzzyParams(**doc["params"]), doc["dim"], doc["base_block_size"], doc["seed"],
                        doc["schedule"], doc["depth"])
    for c in doc["levels"]:
        if c is None:
            state.levels.append(None)
        else:
            pts = np.asarray(c["points"], dtype=np.float64).reshape(-1, state.dim)
            state.levels.append(Coreset(pts, c["weights"], c["source_total"], c["indices"]))
    buf = np.asarray(doc["buffer"], dtype=np.float64).reshape(-1, state.dim)
    state.buffer[:len(buf)] = buf
    state.fill = len(buf)
    state.total_seen = doc["total_seen"]
    state.blocks = doc["blocks"]
    state.carries = doc["carries"]
    state.peak_resident = doc["peak_resident"]
    return state
