"""Command line interface.

Subcommands:

* ``simulate`` -- run one config's trials and print the report rows as CSV.
* ``sweep``    -- run one or more config files and write a CSV (plus a
                  ``.summary.csv`` aggregate next to it).
* ``oracle``   -- print the spectrum of a matrix file or of a model's
                  communication matrix, from the in-repo eigensolver.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import harness, model as model_mod
from .linalg import sym_eigen
from .rng import SplitMix64


def _add_simulate(sub):
    p = sub.add_parser("simulate", help="run one config and print trial rows")
    p.add_argument("config", help="path to a key=value config file")
    p.add_argument("--trials", type=int, default=None, help="override the config's trial count")
    p.set_defaults(func=_cmd_simulate)


def _cmd_simulate(args) -> int:
    config = harness.read_config_file(args.config)
    if args.trials is not None:
        config = harness.with_overrides(config, trials=args.trials)
    harness.run_sweep([config], parallelism=1, csv_fp=sys.stdout)
    return 0


def _add_sweep(sub):
    p = sub.add_parser("sweep", help="run config files and write CSV results")
    p.add_argument("configs", nargs="+", help="config file paths")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument(
        "--parallelism",
        type=int,
        default=1,
        help=f"worker processes (env {harness.PARALLELISM_ENV_VAR} overrides)",
    )
    p.set_defaults(func=_cmd_sweep)


def _cmd_sweep(args) -> int:
    configs = [harness.read_config_file(path) for path in args.configs]
    summary_path = args.out + ".summary.csv" if not args.out.endswith(".csv") else args.out[:-4] + ".summary.csv"
    with open(args.out, "w", encoding="utf-8") as csv_fp, open(summary_path, "w", encoding="utf-8") as sum_fp:
        harness.run_sweep(configs, args.parallelism, csv_fp, sum_fp)
    return 0


def _add_oracle(sub):
    p = sub.add_parser("oracle", help="print a spectrum from the dense eigensolver")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--matrix-file", help="path to a matrix file (first line n, then n rows)")
    src.add_argument("--model", choices=harness.MODEL_KINDS, help="build a model's communication matrix")
    p.add_argument("--n", type=int, help="node count (model mode)")
    p.add_argument("--p", type=float, help="intra-community rate (weighted/sbm)")
    p.add_argument("--q", type=float, help="inter-community rate (weighted/sbm)")
    p.add_argument("--graph-file", help="edge list path (graph-file model)")
    p.add_argument("--seed", type=int, default=0, help="seed for sbm sampling")
    p.add_argument("--vectors", action="store_true", help="also print the eigenvector matrix")
    p.set_defaults(func=_cmd_oracle)


def _oracle_matrix(args) -> np.ndarray:
    if args.matrix_file:
        with open(args.matrix_file, encoding="utf-8") as fp:
            return harness.read_matrix_file(fp)
    if args.n is None:
        raise SystemExit("--n is required in model mode")
    kind = args.model
    if kind == "weighted":
        m, _ = model_mod.weighted_model(args.n, args.p, args.q)
    elif kind == "sbm":
        m, _, _ = model_mod.sbm_model(args.n, args.p, args.q, SplitMix64(args.seed))
    elif kind == "population":
        m = model_mod.population_model(args.n)
    else:
        with open(args.graph_file, encoding="utf-8") as fp:
            m = model_mod.graph_model(model_mod.read_edges(fp), args.n)
    return model_mod.communication_matrix(m)


def _cmd_oracle(args) -> int:
    eig = sym_eigen(_oracle_matrix(args))
    print(" ".join(repr(float(v)) for v in eig.values))
    if args.vectors:
        for row in eig.vectors:
            print(" ".join(repr(float(x)) for x in row))
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="gossipeig", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    _add_simulate(sub)
    _add_sweep(sub)
    _add_oracle(sub)
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
