"""Text formats for point files and coreset files.

One point per line, coordinates separated by commas. A ``# weighted`` line
declares a trailing integer weight column. Other ``#`` lines are comments;
those of the form ``# key=value`` are returned as metadata. Blank lines are
ignored. ``-`` stands for stdin or stdout.
"""
from __future__ import annotations

import contextlib
import sys
from dataclasses import asdict
from typing import Iterator, Optional

import numpy as np

from .core import DimensionError, FuzzyParams, WeightedDataset
from .coreset import Coreset

WEIGHTED_MARK = "# weighted"
CORESET_MARK = "# fuzzycoreset coreset"
_CHUNK = 1 << 16


@contextlib.contextmanager
def _open(path, mode):
    if path == "-":
        yield sys.stdin if "r" in mode else sys.stdout
    else:
        with open(path, mode, encoding="utf-8", newline="\n") as fh:
            yield fh


def _rows(lines, weighted, dim, lineno0):
    fields = [ln.split(",") for ln in lines]
    if len({len(f) for f in fields}) > 1:
        raise DimensionError(f"rows have differing column counts near line {lineno0}")
    try:
        arr = np.array(fields, dtype=np.float64)
    except ValueError as exc:
        raise ValueError(f"malformed point line near line {lineno0}: {exc}") from None
    if weighted:
        if arr.shape[1] < 2:
            raise DimensionError("a weighted file needs at least one coordinate and a weight")
        pts, w = arr[:, :-1], arr[:, -1]
        if np.any(w != np.round(w)) or np.any(w < 1):
            raise ValueError(f"weights must be positive integers (near line {lineno0})")
        w = w.astype(np.int64)
    else:
        pts, w = arr, None
    if dim is not None and pts.shape[1] != dim:
        raise DimensionError(f"expected {dim} coordinates, found {pts.shape[1]} near line {lineno0}")
    return pts, w


def iter_point_chunks(path, chunk: int = _CHUNK, meta: Optional[dict] = None
                      ) -> Iterator[tuple[np.ndarray, Optional[np.ndarray]]]:
    """Yield (points, weights or None) blocks of at most ``chunk`` rows.

    Header metadata seen so far is stored into ``meta`` when given.
    """
    weighted, dim, buf, start = False, None, [], 1
    with _open(path, "r") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                if line == WEIGHTED_MARK:
                    if buf or dim is not None:
                        raise ValueError("'# weighted' must precede the first point")
                    weighted = True
                elif meta is not None and "=" in line:
                    key, _, value = line[1:].strip().partition("=")
                    meta[key.strip()] = value.strip()
                continue
            if not buf:
                start = lineno
            buf.append(line)
            if len(buf) == chunk:
                pts, w = _rows(buf, weighted, dim, start)
                dim = pts.shape[1]
                buf = []
                yield pts, w
    if buf:
        yield _rows(buf, weighted, dim, start)


def read_points(path) -> tuple[WeightedDataset, dict]:
    meta: dict = {}
    pts, wts, weighted = [], [], False
    for p, w in iter_point_chunks(path, meta=meta):
        pts.append(p)
        wts.append(w if w is not None else np.ones(p.shape[0], dtype=np.int64))
        weighted = w is not None
    if not pts:
        raise ValueError(f"{path}: no points")
    meta["weighted"] = "true" if weighted else "false"
    return WeightedDataset(np.vstack(pts), np.concatenate(wts)), meta


def _write_rows(fh, points, weights=None):
    fmt = ",".join(["%.17g"] * points.shape[1])
    if weights is None:
        for start in range(0, points.shape[0], _CHUNK):
            fh.write("".join(fmt % tuple(row) + "\n" for row in points[start:start + _CHUNK]))
    else:
        for start in range(0, points.shape[0], _CHUNK):
            block = zip(points[start:start + _CHUNK], weights[start:start + _CHUNK])
            fh.write("".join(fmt % tuple(row) + f",{int(w)}\n" for row, w in block))


def write_points(path, X: WeightedDataset, weighted: Optional[bool] = None, meta: Optional[dict] = None) -> None:
    """Write points; the weight column is included when weighted (default: any weight != 1)."""
    if weighted is None:
        weighted = bool(np.any(X.weights != 1))
    with _open(path, "w") as fh:
        for key, value in (meta or {}).items():
            fh.write(f"# {key}={value}\n")
        if weighted:
            fh.write(WEIGHTED_MARK + "\n")
        _write_rows(fh, X.points, X.weights if weighted else None)


def write_coreset(path, S: Coreset, seed: int, params: FuzzyParams, extra: Optional[dict] = None) -> None:
    meta = {"source_total": S.source_total, "size": len(S), "seed": seed}
    meta.update({f"param.{k}": repr(v) if isinstance(v, float) else v for k, v in asdict(params).items()})
    meta.update(extra or {})
    with _open(path, "w") as fh:
        fh.write(CORESET_MARK + "\n")
        for key, value in meta.items():
            fh.write(f"# {key}={value}\n")
        fh.write(WEIGHTED_MARK + "\n")
        _write_rows(fh, S.points, S.weights)


def read_coreset(path) -> tuple[WeightedDataset, dict]:
    X, meta = read_points(path)
    if meta.get("weighted") != "true":
        raise ValueError(f"{path}: a coreset file needs a weight column")
    if "source_total" in meta and int(meta["source_total"]) != X.total_weight:
        raise ValueError(f"{path}: weights sum to {X.total_weight}, header says {meta['source_total']}")
    return X, meta
