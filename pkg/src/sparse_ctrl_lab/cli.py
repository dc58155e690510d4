"""Command-line front end: ``sparse-ctrl-lab <subcommand> ...``.

Exit codes: 0 success / controllable, 1 domain-negative result
(not controllable, design infeasible), 2 usage or runtime error.

Stochastic subcommands need a seed, given by ``--seed`` or the
``SPARSE_CTRL_SEED`` environment variable. ``sweep`` also reads a flat
``key = value`` config file (``--config``); command-line flags win.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import BoundParams, bound
from .control import LinearSystem, RankPolicy, is_sparse_controllable
from .design import SteeringProblem, design_inputs
from .errors import InfeasibleError, SparseCtrlError
from .graphs import (
    read_dense_csv,
    read_edge_list,
    row_normalize,
    sample_weight_vector,
    write_dense_csv,
    write_edge_list,
)
from .montecarlo import (
    CSV_FIELDS,
    CSV_VERSION_LINE,
    ExperimentConfig,
    GRAPH_MODELS,
    format_row,
    parse_csv_rows,
    sample_adjacency,
    sweep,
)
from .sparsity import count_subsets_q, make_family, parse_explicit_sets

SEED_ENV = "SPARSE_CTRL_SEED"
log = logging.getLogger("sparse_ctrl_lab")


class UsageError(Exception):
    pass


def _probability(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"probability must lie in [0, 1], got {value}")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env is None:
        raise UsageError(f"a seed is required: pass --seed or set {SEED_ENV}")
    return int(env)


def _family_from_args(args, n: int):
    sets = None
    if args.family == "explicit":
        if not args.sets:
            raise UsageError("--family explicit needs --sets FILE")
        return parse_explicit_sets(Path(args.sets).read_text(), n)
    return make_family(args.family, n, args.s, args.m, sets)


def _add_family_args(p, s_required=True):
    p.add_argument("--family", default="unconstrained",
                   choices=["unconstrained", "piecewise", "block", "explicit"])
    p.add_argument("--s", type=_positive_int, required=s_required, help="sparsity budget")
    p.add_argument("--m", type=_positive_int, help="piece count (piecewise) or block size (block); default s")
    p.add_argument("--sets", help="explicit family file, one '{i,j,...}' per line (0-based)")


# ---------------------------------------------------------------- subcommands


def cmd_generate(args) -> int:
    seed = _seed(args)
    rng = np.random.default_rng(seed)
    param = args.alpha if args.model == "power-law" else args.p
    if param is None:
        raise UsageError("--alpha is required for power-law" if args.model == "power-law" else "--p is required")
    adj = sample_adjacency(args.model, args.n, param, rng)
    write_edge_list(adj, args.out)
    if args.system_out:
        w = sample_weight_vector(args.n, rng, args.weights)
        write_dense_csv(row_normalize(adj, w).a_bar, args.system_out)
    return 0


def _load_system(args) -> np.ndarray:
    if args.system:
        return read_dense_csv(args.system)
    if not args.graph:
        raise UsageError("give --graph or --system")
    adj = read_edge_list(args.graph)
    if args.raw:
        return adj.entries.astype(float)
    rng = np.random.default_rng(_seed(args))
    return row_normalize(adj, sample_weight_vector(adj.n, rng, args.weights)).a_bar


def cmd_check(args) -> int:
    phi = _load_system(args)
    family = _family_from_args(args, phi.shape[0])
    verdict = is_sparse_controllable(LinearSystem(phi), family, RankPolicy(args.rank_factor), args.strategy)
    print(json.dumps(verdict.to_dict(), indent=2))
    return 0 if verdict.controllable else 1


def cmd_bound(args) -> int:
    params = BoundParams(args.C, args.c)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    print(CSV_VERSION_LINE)
    writer.writerow(["model", "N", "s", "p", "family", "C", "c", "q", "raw_q", "valid"])
    family = _family_from_args(args, args.N)
    for p in args.p:
        res = bound(args.model, args.N, args.s, p, family, params)
        writer.writerow([res.model, res.N, res.s, repr(p), family.label, repr(params.big_C),
                         repr(params.small_c), repr(res.q), repr(res.raw_q), str(res.valid).lower()])
    return 0


def cmd_qtable(args) -> int:
    family = _family_from_args(args, args.N)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["i", "Q"])
    for i in range(family.s + 1):
        writer.writerow([i, count_subsets_q(i, family)])
    return 0


def _read_config(path: str) -> dict[str, str]:
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (x.strip() for x in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


SWEEP_KEYS = {
    "model": str, "n": int, "p": float, "alpha": float, "s": int, "family": str, "m": int,
    "trials": int, "seed": int, "weights": str, "raw": bool,
}
LIST_KEYS = ("model", "n", "p", "alpha", "s", "family")


def _parse_value(key, raw):
    caster = SWEEP_KEYS[key]
    if caster is bool:
        return raw.lower() in ("1", "true", "yes")
    return caster(raw)


def _sweep_settings(args) -> dict:
    settings: dict = {}
    if args.config:
        for key, raw in _read_config(args.config).items():
            if key not in SWEEP_KEYS:
                raise UsageError(f"unknown config key {key!r}")
            if key in LIST_KEYS:
                settings[key] = [_parse_value(key, tok) for tok in raw.replace(",", " ").split()]
            else:
                settings[key] = _parse_value(key, raw)
    for key in SWEEP_KEYS:
        value = getattr(args, key, None)
        if value not in (None, [], False):
            settings[key] = value
    return settings


def build_grid(settings: dict) -> list[ExperimentConfig]:
    models = settings.get("model", [])
    grid = []
    for model in models:
        if model not in GRAPH_MODELS:
            raise UsageError(f"unknown model {model!r}")
        params = settings.get("alpha" if model == "power-law" else "p", [])
        for n in settings.get("n", []):
            for param in params:
                for s in settings.get("s", []):
                    for kind in settings.get("family", ["unconstrained"]):
                        family = make_family(kind, n, s, settings.get("m"))
                        grid.append(ExperimentConfig(
                            model=model, n=n, param=param, family=family,
                            trials=settings.get("trials", 1000), seed=settings["seed"],
                            weight_dist=settings.get("weights", "uniform"),
                            use_raw_adjacency=settings.get("raw", False),
                        ))
    return grid


def cmd_sweep(args) -> int:
    settings = _sweep_settings(args)
    if "seed" not in settings:
        settings["seed"] = _seed(args)
    grid = build_grid(settings)
    if not grid:
        raise UsageError("empty sweep grid")
    out = Path(args.out) if args.out else None
    skip = set()
    if out is not None and out.exists() and out.stat().st_size:
        skip = {row.key() for row in parse_csv_rows(out.read_text()) if row.p_hat == row.p_hat}
    result = sweep(grid, threads=args.threads, skip=skip)
    if args.format == "json":
        text = result.to_json()
        if out is None:
            print(text)
        else:
            out.write_text(text + "\n")
        return 0
    if out is None:
        sys.stdout.write(result.to_csv())
        return 0
    fresh = not skip
    with out.open("w" if fresh else "a", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if fresh:
            fh.write(CSV_VERSION_LINE + "\n")
            writer.writerow(CSV_FIELDS)
        for row in result.rows:
            writer.writerow(format_row(row))
    return 0


def _read_vector(path: str) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", ndmin=1).ravel()


def cmd_design(args) -> int:
    phi = _load_system(args)
    family = _family_from_args(args, phi.shape[0])
    problem = SteeringProblem(phi, _read_vector(args.x0), _read_vector(args.xf), family,
                              horizon=args.K, residual_tol=args.tol)
    status = 0
    verdict = None
    try:
        plan = design_inputs(problem)
    except InfeasibleError as exc:
        plan, status, verdict = exc.plan, 1, exc.verdict
        log.warning("%s", exc)
    with open(args.plan_out, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["k", "index", "value"])
        for k, u in enumerate(plan.inputs, start=1):
            for i in np.flatnonzero(u):
                writer.writerow([k, int(i), repr(float(u[i]))])
    summary = {
        "residual": plan.residual_norm,
        "tolerance": args.tol,
        "horizon": plan.horizon,
        "supports": [list(s) for s in plan.supports],
        "feasible": status == 0,
    }
    if verdict is not None:
        summary["verdict"] = verdict.to_dict()
    text = json.dumps(summary, indent=2)
    if args.summary_out:
        Path(args.summary_out).write_text(text + "\n")
    else:
        print(text)
    return status


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sparse-ctrl-lab", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def seeded(p):
        p.add_argument("--seed", type=int, help=f"master seed (default: ${SEED_ENV})")

    def system_source(p):
        p.add_argument("--graph", help="edge-list file")
        p.add_argument("--system", help="dense CSV system matrix (overrides --graph)")
        p.add_argument("--raw", action="store_true", help="use the binary adjacency as the system matrix")
        p.add_argument("--weights", default="uniform", choices=["uniform", "exponential", "lognormal"])
        seeded(p)

    g = sub.add_parser("generate", help="sample a graph and write it as an edge list")
    g.add_argument("--model", required=True, choices=GRAPH_MODELS)
    g.add_argument("--n", type=_positive_int, required=True)
    g.add_argument("--p", type=_probability)
    g.add_argument("--alpha", type=float)
    g.add_argument("--out", required=True)
    g.add_argument("--system-out", help="also write the row-normalized matrix as CSV")
    g.add_argument("--weights", default="uniform", choices=["uniform", "exponential", "lognormal"])
    seeded(g)
    g.set_defaults(func=cmd_generate)

    c = sub.add_parser("check", help="decide sparse controllability of one system")
    system_source(c)
    _add_family_args(c)
    c.add_argument("--strategy", default="auto",
                   choices=["auto", "exhaustive", "unconstrained-shortcut", "sampled"])
    c.add_argument("--rank-factor", type=float, default=None)
    c.set_defaults(func=cmd_check)

    b = sub.add_parser("bound", help="evaluate the probability lower bounds")
    b.add_argument("--model", default="undirected", choices=["undirected", "directed"])
    b.add_argument("--N", type=_positive_int, required=True)
    b.add_argument("--p", type=float, nargs="+", required=True)
    b.add_argument("--C", type=float, default=1.0)
    b.add_argument("--c", type=float, default=1.0)
    _add_family_args(b)
    b.set_defaults(func=cmd_bound)

    q = sub.add_parser("qtable", help="print Q(i, U) for i = 0..s")
    q.add_argument("--N", type=_positive_int, required=True)
    _add_family_args(q)
    q.set_defaults(func=cmd_qtable)

    s = sub.add_parser("sweep", help="Monte Carlo probability estimates over a grid")
    s.add_argument("--config", help="flat 'key = value' config file")
    s.add_argument("--model", nargs="+", choices=GRAPH_MODELS)
    s.add_argument("--n", type=_positive_int, nargs="+")
    s.add_argument("--p", type=_probability, nargs="+")
    s.add_argument("--alpha", type=float, nargs="+")
    s.add_argument("--s", type=_positive_int, nargs="+")
    s.add_argument("--family", nargs="+", choices=["unconstrained", "piecewise", "block"])
    s.add_argument("--m", type=_positive_int)
    s.add_argument("--trials", type=_positive_int)
    s.add_argument("--weights", choices=["uniform", "exponential", "lognormal"])
    s.add_argument("--raw", action="store_true", help="use the binary adjacency as the system matrix")
    s.add_argument("--threads", type=_positive_int, default=1)
    s.add_argument("--format", choices=["csv", "json"], default="csv")
    s.add_argument("--out", help="output file; an existing CSV is resumed")
    seeded(s)
    s.set_defaults(func=cmd_sweep)

    d = sub.add_parser("design", help="synthesize sparse steering inputs")
    system_source(d)
    _add_family_args(d)
    d.add_argument("--x0", required=True, help="initial state CSV")
    d.add_argument("--xf", required=True, help="target state CSV")
    d.add_argument("--K", type=_positive_int, help="horizon (default n)")
    d.add_argument("--tol", type=float, default=1e-8)
    d.add_argument("--plan-out", required=True)
    d.add_argument("--summary-out")
    d.set_defaults(func=cmd_design)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (UsageError, SparseCtrlError, OSError, ValueError) as exc:
        print(f"sparse-ctrl-lab {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
