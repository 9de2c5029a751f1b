#!/usr/bin/env python3
"""
Simplex Embedder - simplicial autoencoders and complex-level embeddings
Main entry point for the command line
"""

import os

# Single-threaded BLAS keeps runs bit-reproducible; must precede numpy import
for _var in ("OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS", "OMP_NUM_THREADS"):
    os.environ.setdefault(_var, "1")

import argparse
import sys
from dataclasses import fields

from dotenv import load_dotenv

from embedder.commands import run_command
from embedder.config import RunConfig
from utils.datasets import DEFAULT_SIZE_RANGE, FAMILIES

# Load environment variables (SCEMBED_* overrides)
load_dotenv()


def print_banner():
    """Print welcome banner"""
    print("\n" + "=" * 60)
    print("🔺 SIMPLEX EMBEDDER - Simplicial Complex Representation Learning")
    print("=" * 60 + "\n")


def add_config_flags(parser: argparse.ArgumentParser):
    """One flag per RunConfig field; unset flags fall back to env and defaults"""
    group = parser.add_argument_group("run configuration")
    for f in fields(RunConfig):
        flag = "--" + f.name.replace("_", "-")
        if f.type in (bool, "bool"):
            group.add_argument(flag, dest=f.name, action="store_const", const=True, default=None)
        else:
            kind = {"int": int, "float": float, "str": str}.get(f.type, f.type)
            group.add_argument(flag, dest=f.name, type=kind, default=None)


def add_dataset_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--family", nargs="+", choices=FAMILIES, default=list(FAMILIES))
    parser.add_argument("--count", type=int, default=20)
    parser.add_argument("--min-size", type=int, default=DEFAULT_SIZE_RANGE[0])
    parser.add_argument("--max-size", type=int, default=DEFAULT_SIZE_RANGE[1])
    parser.add_argument("--noise", type=float, default=0.1)


def build_parser() -> argparse.ArgumentParser:
    config_parent = argparse.ArgumentParser(add_help=False)
    config_parent.add_argument("--quiet", action="store_true", help="only print the JSON result line")
    add_config_flags(config_parent)

    parser = argparse.ArgumentParser(prog="main.py", description="Simplex Embedder")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", parents=[config_parent], help="simplex counts and neighborhood matrices")
    p.add_argument("--complex", required=True)
    p.add_argument("--out")

    p = sub.add_parser("gen", parents=[config_parent], help="generate a synthetic dataset")
    add_dataset_flags(p)
    p.add_argument("--out", required=True)

    p = sub.add_parser("train-ae", parents=[config_parent], help="train per-complex autoencoders")
    p.add_argument("--complexes", nargs="+", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("embed", parents=[config_parent], help="recompute U_X from stored parameters")
    p.add_argument("--complex", required=True)
    p.add_argument("--params", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("distmat", parents=[config_parent], help="Hausdorff distance matrix")
    p.add_argument("--complexes", nargs="+", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("train-pool", parents=[config_parent], help="train the pooling matrix W")
    p.add_argument("--embeddings", nargs="+", required=True)
    p.add_argument("--distance")
    p.add_argument("--out", required=True)

    p = sub.add_parser("eval", parents=[config_parent], help="evaluate pooled embeddings")
    p.add_argument("--pooled", required=True)
    p.add_argument("--distance")
    p.add_argument("--complexes", nargs="+")
    p.add_argument("--embeddings", nargs="+")
    p.add_argument("--rank", help="name of a complex to rank neighbors for")
    p.add_argument("--top", type=int, default=5)

    p = sub.add_parser("render", parents=[config_parent], help="draw a complex to PNG")
    p.add_argument("--complex", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--size", type=int, default=512)

    p = sub.add_parser("pipeline", parents=[config_parent], help="gen, train-ae, distmat, train-pool and eval")
    add_dataset_flags(p)
    p.add_argument("--workdir", required=True)

    return parser


def main(argv=None) -> int:
    """Main entry point"""
    args = vars(build_parser().parse_args(argv))
    command = args.pop("command")
    verbose = not args.pop("quiet")
    config_names = {f.name for f in fields(RunConfig)}
    overrides = {k: args.pop(k) for k in list(args) if k in config_names}

    if verbose:
        print_banner()
    return run_command(command, args, overrides, verbose=verbose)


if __name__ == "__main__":
    sys.exit(main())
