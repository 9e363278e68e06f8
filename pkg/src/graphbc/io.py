"""Report and CSV emission for reconstruction runs."""

from __future__ import annotations

import csv
from os import PathLike
from pathlib import Path

import numpy as np

from .control import ReconstructionResult
from .experiments import MetricsReport
from .graph import Graph


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_mu_table(path: str | PathLike, g: Graph, result: ReconstructionResult) -> None:
    """``vertex,mu_recovered[,mu_true,abs_error]`` for every vertex of ``X \\ B``."""
    truth = g.mu[g.interior]
    known = not np.isnan(truth).any()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["vertex", "mu_recovered"] + (["mu_true", "abs_error"] if known else []))
        for i, v in enumerate(result.interior_ids):
            row = [v, _fmt(result.mu_interior[i])]
            if known:
                row += [_fmt(truth[i]), _fmt(abs(truth[i] - result.mu_interior[i]))]
            w.writerow(row)


def read_mu_table(path: str | PathLike) -> dict[str, float]:
    with open(path, newline="") as fh:
        return {row["vertex"]: float(row["mu_recovered"]) for row in csv.DictReader(fh)}


def write_singular_values(path: str | PathLike, values: np.ndarray) -> None:
    lines = ["index,singular_value"] + [f"{i + 1},{_fmt(s)}" for i, s in enumerate(values)]
    Path(path).write_text("\n".join(lines) + "\n")


def write_metrics(path: str | PathLike, metrics: MetricsReport, ids=None) -> None:
    lines = ["metric,value"] + [f"{k},{_fmt(v)}" for k, v in metrics.rows(ids)]
    Path(path).write_text("\n".join(lines) + "\n")


def format_report(g: Graph, result: ReconstructionResult, metrics: MetricsReport | None, header: dict) -> str:
    out = ["reconstruction report", "====================="]
    out += [f"{k}: {v}" for k, v in header.items()]
    out.append(f"|X| = {g.n}, |B| = {g.n_boundary}, |X\\B| = {g.n_interior}")
    out.append(f"boundary: {', '.join(g.boundary_ids)}")
    out.append(f"tolerances: {result.tol_used}")
    out.append(f"rank_WstarW (after truncation): {result.rank_WstarW}")
    out.append(f"rank_H: {result.rank_H}")
    out.append(f"projection_only: {result.projection_only}")
    out.append("")
    out.append("recovered centrality on X\\B:")
    truth = g.mu[g.interior]
    for i, v in enumerate(result.interior_ids):
        line = f"  {v}: {result.mu_interior[i]:.10g}"
        if not np.isnan(truth[i]):
            line += f"  (true {truth[i]:.10g}, error {abs(truth[i] - result.mu_interior[i]):.3e})"
        out.append(line)
    out.append("")
    for name, values in result.singular_values.items():
        out.append(f"singular values of {name}:")
        out.append("  " + " ".join(f"{s:.6e}" for s in values))
    out.append("residuals of the final system:")
    out.append("  " + " ".join(f"{x:.3e}" for x in result.residuals))
    if metrics is not None:
        out.append("")
        out.append("metrics:")
        out += [f"  {k}: {v:.6g}" for k, v in metrics.rows(result.interior_ids)]
    if result.warnings:
        out.append("")
        out.append("warnings:")
        out += [f"  {w}" for w in result.warnings]
    return "\n".join(out) + "\n"


def write_reconstruction(
    out_dir: str | PathLike,
    g: Graph,
    result: ReconstructionResult,
    metrics: MetricsReport | None,
    header: dict,
) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.txt").write_text(format_report(g, result, metrics, header))
    write_mu_table(out / "mu_recovered.csv", g, result)
    write_singular_values(out / "singular_wstarw.csv", result.singular_values["WstarW"])
    write_singular_values(out / "singular_H.csv", result.singular_values["H"])
    if metrics is not None:
        write_metrics(out / "metrics.csv", metrics, result.interior_ids)
