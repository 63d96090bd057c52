"""Command-line entry point: ``fuzzycoreset <command> [options]``.

Exit status: 0 on success, 1 on usage or input errors, 2 when a computation
is infeasible within its budget.
"""
from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from . import __version__
from .core import CONSTANT_PRESETS, FuzzyParams, InfeasibleError, WeightedDataset
from .coreset import fuzzy_coreset, coreset_from_weighted
from .harness import MODES, TrialReport, evaluate_coreset, generate_dataset, planted_mixture
from .io import iter_point_chunks, read_coreset, read_points, write_coreset, write_points
from .ptas import DEFAULT_BUDGET, ptas_on_coreset, ptas_search
from .streaming import (SCHEDULES, compounded_error, finalize, load_checkpoint, new_stream,
                        save_checkpoint, stream_extend)

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _add_params(p, need_k=True):
    g = p.add_argument_group("problem parameters")
    g.add_argument("--k", type=int, required=need_k, help="number of clusters K")
    g.add_argument("--m", type=float, default=None, help="fuzzifier, > 1 (default 2.0)")
    g.add_argument("--epsilon", type=float, default=None, help="target accuracy (default 0.2)")
    g.add_argument("--delta", type=float, default=None, help="failure probability (default 0.1)")
    g.add_argument("--preset", choices=sorted(CONSTANT_PRESETS), default=None,
                   help="named set of sampling constants (default: default)")
    for c in "qabc":
        g.add_argument(f"--const-{c}", type=float, default=None, dest=f"const_{c}",
                       help=f"override sampling constant {c}")
    p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")


def _params(args, base: dict | None = None) -> FuzzyParams:
    values = dict(base or {})
    if args.preset is not None or not values:
        values.update(CONSTANT_PRESETS[args.preset or "default"])
    for name in ("k", "m", "epsilon", "delta", "const_q", "const_a", "const_b", "const_c"):
        v = getattr(args, name, None)
        if v is not None:
            values["K" if name == "k" else name] = v
    if "K" not in values:
        raise UsageError("--k is required")
    return FuzzyParams(**values)


def _params_from_meta(meta: dict) -> dict:
    out = {}
    for key, value in meta.items():
        if key.startswith("param."):
            name = key[len("param."):]
            out[name] = int(value) if name == "K" else float(value)
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="fuzzycoreset", description="Coresets for fuzzy K-means.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="sample a synthetic mixture")
    g.add_argument("--mixture", help="JSON mixture description (see README)")
    g.add_argument("--components", type=int, help="planted mixture with this many components")
    g.add_argument("--n", type=int, default=10_000, help="points in the planted mixture")
    g.add_argument("--dim", type=int, default=2)
    g.add_argument("--separation", type=float, default=10.0)
    g.add_argument("--scale", type=float, default=1.0)
    g.add_argument("--tail", choices=("gaussian", "pareto"), default="gaussian")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("-o", "--output", default="-")

    c = sub.add_parser("coreset", help="build a coreset of a point file")
    c.add_argument("-i", "--input", required=True)
    c.add_argument("-o", "--output", default="-")
    _add_params(c)

    e = sub.add_parser("eval", help="compare a coreset against its source on sampled solutions")
    e.add_argument("--data", required=True)
    e.add_argument("--coreset", required=True)
    e.add_argument("--mode", choices=MODES, default="non-negligible")
    e.add_argument("--solutions", type=int, default=100)
    e.add_argument("--epsilon-eval", type=float, default=None,
                   help="epsilon used for the pass tolerances (default: --epsilon)")
    e.add_argument("--timings", action="store_true", help="add a [timings] section (not reproducible)")
    e.add_argument("-o", "--output", default="-")
    _add_params(e, need_k=False)

    p = sub.add_parser("ptas", help="exhaustive multiset-mean search (tiny inputs only)")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("-o", "--output", default="-", help="file for the returned means")
    p.add_argument("--t-override", type=int, default=None, help="multiset size instead of ceil(64K/epsilon)")
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p.add_argument("--on-coreset", action="store_true", help="search a coreset built at epsilon/3")
    _add_params(p)

    s = sub.add_parser("stream", help="merge-and-reduce over a point file read incrementally")
    s.add_argument("-i", "--input", required=True)
    s.add_argument("-o", "--output", default="-")
    s.add_argument("--block-size", type=int, default=None)
    s.add_argument("--schedule", choices=SCHEDULES, default="uniform")
    s.add_argument("--depth", type=int, default=20)
    s.add_argument("--trace", help="write the level occupancy after every block to this file")
    s.add_argument("--checkpoint", help="save the stream state here when the input ends")
    s.add_argument("--resume", help="continue from a saved checkpoint")
    _add_params(s)

    b = sub.add_parser("bench", help="time the compiled and numpy kernels")
    b.add_argument("--n", type=int, default=200_000)
    b.add_argument("--dim", type=int, default=8)
    b.add_argument("--k", type=int, default=6)
    b.add_argument("--repeat", type=int, default=3)
    return ap


def _info(msg: str) -> None:
    print(msg, file=sys.stderr)


def _cmd_gen(args) -> int:
    if (args.mixture is None) == (args.components is None):
        raise UsageError("gen: give exactly one of --mixture or --components")
    if args.mixture is not None:
        with open(args.mixture, encoding="utf-8") as fh:
            mixture = json.load(fh)
    else:
        mixture = planted_mixture(args.components, args.dim, args.n, args.seed, args.separation,
                               args.scale, args.tail)
    X = generate_dataset(mixture, args.seed)
    write_points(args.output, X, weighted=False,
                 meta={"seed": args.seed, "mixture": json.dumps(mixture, sort_keys=True, separators=(",", ":"))})
    return EXIT_OK


def _cmd_coreset(args) -> int:
    X, _ = read_points(args.input)
    params = _params(args)
    S = coreset_from_weighted(X, params, args.seed) if np.any(X.weights != 1) else fuzzy_coreset(X, params, args.seed)
    info = S.info
    extra = {"draws_per_cell": info.draws_per_cell, "max_ring": info.max_ring, "base_radius": repr(info.base_radius), "bicriteria_centers": info.n_centers,
             "ring_cells": info.n_cells}
    write_coreset(args.output, S, args.seed, params, extra)
    _info(f"coreset: {len(S)} of {X.N} points, draws per cell={info.draws_per_cell}, cells={info.n_cells}")
    return EXIT_OK


def _cmd_eval(args) -> int:
    X, _ = read_points(args.data)
    S, meta = read_coreset(args.coreset)
    if S.total_weight != X.total_weight:
        raise UsageError(f"coreset weight {S.total_weight} does not match data weight {X.total_weight}")
    params = _params(args, _params_from_meta(meta))
    report = evaluate_coreset(X, S, params, args.solutions, args.mode, args.seed, args.epsilon_eval)
    report.config["data_file"] = args.data
    report.config["coreset_file"] = args.coreset
    text = report.format(include_timings=args.timings)
    if args.output == "-":
        sys.stdout.write(text)
    else:
        with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    s = report.summary
    _info(f"eval: phi pass {s['phi_pass_fraction']:.3f} at ±{s['phi_tolerance']:.4g}, "
          f"km pass {s['km_pass_fraction']:.3f} at ±{s['km_tolerance']:.4g}")
    return EXIT_OK


def _cmd_ptas(args) -> int:
    X, _ = read_points(args.input)
    params = _params(args)
    meta = {"seed": args.seed, "K": params.K, "m": repr(params.m), "epsilon": repr(params.epsilon)}
    if args.on_coreset:
        result, S = ptas_on_coreset(X, params, args.seed, args.t_override, args.budget)
        meta["coreset_size"] = len(S)
    else:
        result = ptas_search(X, params.K, params.m, params.epsilon, args.t_override, args.budget)
    meta.update({"t": result.t, "pool_size": result.pool_size, "subsets": result.subsets_evaluated,
                 "cost": repr(result.cost)})
    write_points(args.output, WeightedDataset.unweighted(result.means), weighted=False, meta=meta)
    _info(f"ptas: cost {result.cost!r} from {result.subsets_evaluated} subsets of {result.pool_size} candidates")
    return EXIT_OK


def _cmd_stream(args) -> int:
    params = _params(args)
    state = None
    if args.resume:
        state = load_checkpoint(args.resume)
    trace = open(args.trace, "w", encoding="utf-8", newline="\n") if args.trace else None

    def on_block(st):
        if trace is not None:
            shape = "".join("1" if c is not None else "0" for c in reversed(st.levels))
            trace.write(f"{st.blocks},{st.total_seen},{shape},{st.resident()}\n")

    try:
        if trace is not None:
            trace.write("blocks,total_seen,levels_msb_first,resident\n")
        for pts, w in iter_point_chunks(args.input):
            if w is not None and np.any(w != 1):
                raise UsageError("stream input must be unweighted")
            if state is None:
                state = new_stream(params, pts.shape[1], args.seed, args.block_size, args.schedule, args.depth)
            stream_extend(state, pts, on_block)
    finally:
        if trace is not None:
            trace.close()
    if state is None:
        raise UsageError(f"{args.input}: no points")
    S = finalize(state)
    eps_total = compounded_error(params.epsilon, state.depth, state.schedule)
    extra = {"total_seen": state.total_seen, "block_size": state.base_block_size, "schedule": state.schedule,
             "depth": state.depth, "compounded_epsilon": repr(eps_total), "peak_resident": state.peak_resident}
    write_coreset(args.output, S, args.seed, params, extra)
    if args.checkpoint:
        save_checkpoint(state, args.checkpoint)
    _info(f"stream: {state.total_seen} points, {state.blocks} blocks of {state.base_block_size}, "
          f"final {len(S)}, peak resident {state.peak_resident}")
    return EXIT_OK


def _cmd_bench(args) -> int:
    from . import bench

    t0 = time.perf_counter()
    rows = bench.run(n=args.n, dim=args.dim, k=args.k, repeat=args.repeat)
    print(bench.format_rows(rows))
    _info(f"bench: {time.perf_counter() - t0:.1f}s")
    return EXIT_OK


COMMANDS = {"gen": _cmd_gen, "coreset": _cmd_coreset, "eval": _cmd_eval, "ptas": _cmd_ptas,
            "stream": _cmd_stream, "bench": _cmd_bench}


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except SystemExit as exc:  # --help and --version
        return int(exc.code or 0)
    except UsageError as exc:
        _info(str(exc))
        return EXIT_USAGE
    except InfeasibleError as exc:
        _info(f"infeasible: {exc}")
        return EXIT_INFEASIBLE
    except (ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        _info(f"error: {exc}")
        return EXIT_USAGE


def main() -> None:
    sys.exit(cli_main())
