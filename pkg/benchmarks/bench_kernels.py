"""Compare the compiled kernels with the numpy fallback.

    python3 benchmarks/bench_kernels.py [--n 200000] [--dim 8] [--k 6] [--repeat 3]

Set FUZZY_CORESET_THREADS to cap the OpenMP threads of the compiled side.
"""
import argparse

from fuzzycoreset import bench


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=200_000)
    ap.add_argument("--dim", type=int, default=8)
    ap.add_argument("--k", type=int, default=6)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    print(bench.format_rows(bench.run(n=args.n, dim=args.dim, k=args.k, repeat=args.repeat)))


if __name__ == "__main__":
    main()
