"""Command-line interface: ``graphbc {simulate,exact,reconstruct,verify,metrics}``.

Exit status is 0 on success, 1 on invalid input or a failed verification and
2 on a numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .control import DEFAULT_TOL_EXACT, DEFAULT_TOL_MC
from .experiments import SHIPPED, ExperimentConfig, compute_metrics, generate_data, run_experiment, shipped_graph, verify_graph
from .fpt import exact_fpt, read_fpt_csv, write_fpt_csv
from .graph import Graph, GraphError, load_graph, transition_kernel
from .io import read_mu_table, write_metrics, write_reconstruction
from .numerics import NumericError

log = logging.getLogger("graphbc")


def _graph(source: str) -> Graph:
    if not Path(source).exists() and source in SHIPPED:
        return shipped_graph(source)
    return load_graph(source)


def _horizon(args, g: Graph) -> int:
    if args.T is not None:
        return args.T
    return g.T if g.T is not None else g.n


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args) -> int:
    if args.mode != "mc":
        raise ValueError("simulate requires monte-carlo mode")
    g = _graph(args.graph)
    cfg = ExperimentConfig(g, _horizon(args, g), mode="mc", samples=args.samples, seed=args.seed, workers=args.workers)
    r = generate_data(cfg)
    path = _out(args) / "r.csv"
    write_fpt_csv(path, r, g.ids)
    print(f"wrote {path}")
    return 0


def cmd_exact(args) -> int:
    g = _graph(args.graph)
    T = _horizon(args, g)
    idx = list(range(g.n)) if args.domain == "X" else list(range(g.n_interior, g.n))
    r = exact_fpt(transition_kernel(g), T, idx, idx)
    path = _out(args) / "r.csv"
    write_fpt_csv(path, r, g.ids)
    print(f"wrote {path}")
    return 0


def cmd_reconstruct(args) -> int:
    g = _graph(args.graph)
    data = None
    if args.r is not None:
        data = read_fpt_csv(args.r, g.ids)
        if args.T is not None and data.T != args.T:
            raise ValueError(f"shape mismatch: r file has T={data.T}, requested T={args.T}")
        T = data.T
        mode = "mc" if data.meta.get("kind") == "monte-carlo" else "exact"
    else:
        T = _horizon(args, g)
        mode = args.mode
    cfg = ExperimentConfig(
        g, T, mode=mode, samples=args.samples, seed=args.seed, tol=args.tol,
        tol_mode=args.tol_mode, tol_mu=args.tol_mu, workers=args.workers,
    )
    outcome = run_experiment(cfg, data)
    header = {"graph": args.graph, "T": T, "data": args.r or mode}
    if mode == "mc" and data is None:
        header.update(samples=args.samples, seed=args.seed)
    metrics = outcome.metrics if g.mu_known else None
    write_reconstruction(_out(args), g, outcome.result, metrics, header)
    for v, m in zip(outcome.result.interior_ids, outcome.result.mu_interior):
        print(f"{v}\t{m:.10g}")
    if metrics is not None:
        for k, v in metrics.rows()[:2]:
            print(f"{k}\t{v:.6g}")
    return 0


def cmd_verify(args) -> int:
    g = _graph(args.graph)
    if not g.mu_known:
        raise GraphError("verify needs the full vertex centrality")
    checks = verify_graph(g, _horizon(args, g), seed=args.seed)
    for c in checks:
        print(c.line())
    failed = [c for c in checks if not c.passed and c.severity == "error"]
    print(f"{len(checks) - len(failed)}/{len(checks)} checks without failure")
    return 1 if failed else 0


def cmd_metrics(args) -> int:
    g = _graph(args.graph)
    recovered = read_mu_table(args.recovered)
    ids = g.interior_ids
    missing = [v for v in ids if v not in recovered]
    if missing:
        raise ValueError(f"recovered table lacks vertices {missing}")
    truth = g.require_mu(g.interior)
    r_exact = read_fpt_csv(args.r_exact, g.ids) if args.r_exact else None
    r_emp = read_fpt_csv(args.r_emp, g.ids) if args.r_emp else None
    m = compute_metrics(truth, np.array([recovered[v] for v in ids]), r_exact, r_emp)
    path = _out(args) / "metrics.csv"
    write_metrics(path, m, ids)
    for k, v in m.rows(ids):
        print(f"{k}\t{v:.6g}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="graphbc", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out=True):
        p.add_argument("--graph", required=True, help=f"graph JSON path or shipped name {SHIPPED}")
        p.add_argument("--T", type=int, default=None, help="horizon (default: graph file's T, else |X|)")
        if out:
            p.add_argument("--out", default=".", help="output directory")

    def sampling(p):
        p.add_argument("--samples", type=int, default=10**6, help="walks per (x, y) pair")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("simulate", help="Monte Carlo first-passage data on B x B")
    common(p)
    sampling(p)
    p.add_argument("--mode", choices=("exact", "mc"), default="mc")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("exact", help="exact first-passage distribution")
    common(p)
    p.add_argument("--domain", choices=("B", "X"), default="B")
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("reconstruct", help="recover mu on X\\B")
    common(p)
    sampling(p)
    p.add_argument("--r", default=None, help="first-passage CSV; generated per --mode if absent")
    p.add_argument("--mode", choices=("exact", "mc"), default="exact")
    p.add_argument("--tol", type=float, default=None,
                   help=f"control truncation (default {DEFAULT_TOL_EXACT} exact, {DEFAULT_TOL_MC} mc)")
    p.add_argument("--tol-mode", choices=("relative", "absolute"), default="relative")
    p.add_argument("--tol-mu", type=float, default=None, help="truncation for the final system (default: --tol)")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("verify", help="run the invariant suite on a graph with known mu")
    common(p, out=False)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("metrics", help="FRNE / L2RNE / absolute errors")
    p.add_argument("--graph", required=True)
    p.add_argument("--recovered", required=True, help="mu_recovered.csv")
    p.add_argument("--r-exact", default=None)
    p.add_argument("--r-emp", default=None)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_metrics)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except (NumericError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 2
    except (GraphError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
