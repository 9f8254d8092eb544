"""Benchmark harness over auxiliary distributions, dependence designs, and p.

Runs every (aux, design, p, method) cell for a configured number of
replications, recording exact-order success and structural Hamming distance
against the true weighted DAG.  Dataset seeds depend only on the base seed,
the cell keys, and the replication index, so all methods inside one
replication consume byte-identical data; a replication where any method
fails is dropped for every method in that cell to keep comparisons paired.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__
from .discover import direct_limiam, direct_lingam_baseline, edges_from_B, shd
from .meanind import (
    FiniteOrderScorer,
    KernelScorer,
    MomentScorer,
    ScorerSpec,
    SieveScorer,
)
from .simulate import (
    DESIGN_NAMES,
    AuxDistribution,
    DependenceDesign,
    design_from_name,
    generate_dataset,
    sample_dag,
    sample_disturbances,
)


@dataclass(frozen=True)
class Method:
    """A named discovery method: a scorer spec, or the DirectLiNGAM baseline."""

    name: str
    scorer: ScorerSpec | None = None  # None -> pairwise-likelihood baseline


def default_methods() -> tuple[Method, ...]:
    return (
        Method("direct-lingam"),
        Method("limiam-kernel", KernelScorer()),
        Method("limiam-sieve", SieveScorer()),
        Method("limiam-moment", MomentScorer()),
        Method("limiam-finite-order", FiniteOrderScorer(4)),
    )


@dataclass(frozen=True)
class BenchmarkConfig:
    dims: tuple[int, ...] = (2, 3, 4)
    T: int = 500
    replications: int = 25
    aux_set: tuple[AuxDistribution, ...] = tuple(AuxDistribution)
    design_set: tuple[DependenceDesign, ...] = tuple(
        design_from_name(name) for name in DESIGN_NAMES
    )
    methods: tuple[Method, ...] = field(default_factory=default_methods)
    base_seed: int = 0
    shd_threshold: float = 0.15

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError("need at least one replication")
        for p in self.dims:
            if self.T < p + 2:
                raise ValueError(f"T = {self.T} too small for p = {p}")

    def paper_scale(self) -> "BenchmarkConfig":
        return replace(self, dims=(2, 3, 4, 5, 6), replications=100)

    def to_json_dict(self) -> dict:
        return {
            "dims": list(self.dims),
            "T": self.T,
            "replications": self.replications,
            "aux_set": [a.value for a in self.aux_set],
            "design_set": [d.name for d in self.design_set],
            "methods": [m.name for m in self.methods],
            "base_seed": self.base_seed,
            "shd_threshold": self.shd_threshold,
        }


@dataclass(frozen=True)
class RepRecord:
    rep: int
    success: bool
    shd: int
    failed: bool = False
    error: str = ""


@dataclass(frozen=True)
class BenchmarkCell:
    aux: str
    design: str
    p: int
    method: str
    success_rate: float
    mean_shd: float
    records: tuple[RepRecord, ...]
    flagged: bool = False

    @property
    def key(self) -> tuple:
        return (self.aux, self.design, self.p, self.method)


def _data_seed(cfg: BenchmarkConfig, aux_i: int, design_i: int, p: int, rep: int, stream: int):
    return np.random.SeedSequence(
        cfg.base_seed, spawn_key=(aux_i, design_i, p, rep, stream)
    )


def _run_method(method: Method, x: np.ndarray, seed):
    if method.scorer is None:
        return direct_lingam_baseline(x, seed)
    return direct_limiam(x, method.scorer, seed)


def run_grid(cfg: BenchmarkConfig, progress=None) -> list[BenchmarkCell]:
    """Run the full grid; returns one cell per (aux, design, p, method)."""
    cells: list[BenchmarkCell] = []
    for aux_i, aux in enumerate(cfg.aux_set):
        for design_i, design in enumerate(cfg.design_set):
            for p in cfg.dims:
                per_method = {m.name: [] for m in cfg.methods}
                dropped = 0
                for rep in range(cfg.replications):
                    dag = sample_dag(p, _data_seed(cfg, aux_i, design_i, p, rep, 0))
                    eps = sample_disturbances(
                        p, cfg.T, aux, design, _data_seed(cfg, aux_i, design_i, p, rep, 1)
                    )
                    x = generate_dataset(dag, eps)
                    true_edges = edges_from_B(
                        dag.coefficients_observed(), cfg.shd_threshold
                    )
                    rep_results = {}
                    error = ""
                    for m_i, method in enumerate(cfg.methods):
                        seed = _data_seed(cfg, aux_i, design_i, p, rep, 10 + m_i)
                        try:
                            result = _run_method(method, x, seed)
                        except Exception as exc:  # paired drop policy
                            error = f"{method.name}: {exc}"
                            break
                        success = tuple(result.order) == dag.perm
                        distance = shd(
                            edges_from_B(result.B, cfg.shd_threshold), true_edges
                        )
                        rep_results[method.name] = (success, distance)
                    if error:
                        dropped += 1
                        for name in per_method:
                            per_method[name].append(
                                RepRecord(rep, False, 0, failed=True, error=error)
                            )
                    else:
                        for name, (success, distance) in rep_results.items():
                            per_method[name].append(RepRecord(rep, success, distance))
                    if progress is not None:
                        progress(aux.value, design.name, p, rep)
                flagged = dropped > 0.10 * cfg.replications
                for method in cfg.methods:
                    records = per_method[method.name]
                    kept = [r for r in records if not r.failed]
                    if kept:
                        rate = sum(r.success for r in kept) / len(kept)
                        mean_shd = sum(r.shd for r in kept) / len(kept)
                    else:
                        rate, mean_shd = 0.0, 0.0
                    cells.append(
                        BenchmarkCell(
                            aux.value,
                            design.name,
                            p,
                            method.name,
                            rate,
                            mean_shd,
                            tuple(records),
                            flagged,
                        )
                    )
    return cells


def find_cell(cells, aux, design, p, method) -> BenchmarkCell:
    for cell in cells:
        if cell.key == (aux, design, p, method):
            return cell
    raise KeyError((aux, design, p, method))


_CELL_FIELDS = ["aux", "design", "p", "method", "rep", "success", "shd", "failed", "error"]


def cells_to_csv(cells) -> str:
    """One row per replication record; parse back with :func:`cells_from_csv`."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_CELL_FIELDS)
    for cell in cells:
        for rec in cell.records:
            writer.writerow(
                [
                    cell.aux,
                    cell.design,
                    cell.p,
                    cell.method,
                    rec.rep,
                    int(rec.success),
                    rec.shd,
                    int(rec.failed),
                    rec.error,
                ]
            )
    return buf.getvalue()


def cells_from_csv(text: str, flag_threshold: float = 0.10) -> list[BenchmarkCell]:
    reader = csv.DictReader(io.StringIO(text))
    grouped: dict[tuple, list[RepRecord]] = {}
    order: list[tuple] = []
    for row in reader:
        key = (row["aux"], row["design"], int(row["p"]), row["method"])
        if key not in grouped:
            grouped[key] = []
            order.append(key)
        grouped[key].append(
            RepRecord(
                int(row["rep"]),
                bool(int(row["success"])),
                int(row["shd"]),
                bool(int(row["failed"])),
                row["error"],
            )
        )
    cells = []
    for key in order:
        records = grouped[key]
        kept = [r for r in records if not r.failed]
        if kept:
            rate = sum(r.success for r in kept) / len(kept)
            mean_shd = sum(r.shd for r in kept) / len(kept)
        else:
            rate, mean_shd = 0.0, 0.0
        dropped = len(records) - len(kept)
        cells.append(
            BenchmarkCell(
                key[0],
                key[1],
                key[2],
                key[3],
                rate,
                mean_shd,
                tuple(records),
                dropped > flag_threshold * len(records),
            )
        )
    return cells


def _table_columns(cells) -> list[tuple[str, int]]:
    methods, dims = [], []
    for cell in cells:
        if cell.method not in methods:
            methods.append(cell.method)
        if cell.p not in dims:
            dims.append(cell.p)
    return [(m, p) for m in methods for p in sorted(dims)]


def _table_rows(cells) -> list[tuple[str, str]]:
    rows = []
    for cell in cells:
        key = (cell.design, cell.aux)
        if key not in rows:
            rows.append(key)
    return rows


def summary_csv(cells) -> str:
    """Per-environment table of both metrics, one row per (metric, design, aux)."""
    columns = _table_columns(cells)
    rows = _table_rows(cells)
    by_key = {cell.key: cell for cell in cells}
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["metric", "design", "aux"] + [f"{m}__p{p}" for m, p in columns])
    for metric, attr in (("success_rate", "success_rate"), ("mean_shd", "mean_shd")):
        for design, aux in rows:
            record = [metric, design, aux]
            for method, p in columns:
                cell = by_key.get((aux, design, p, method))
                record.append("" if cell is None else f"{getattr(cell, attr):.6g}")
            writer.writerow(record)
    return buf.getvalue()


def summary_text(cells) -> str:
    columns = _table_columns(cells)
    rows = _table_rows(cells)
    by_key = {cell.key: cell for cell in cells}
    headers = ["design", "aux"] + [f"{m}:p{p}" for m, p in columns]
    lines = []
    for metric, attr, fmt in (
        ("exact-order success rate", "success_rate", "{:.2f}"),
        ("mean structural Hamming distance", "mean_shd", "{:.2f}"),
    ):
        table = [headers]
        for design, aux in rows:
            record = [design, aux]
            for method, p in columns:
                cell = by_key.get((aux, design, p, method))
                record.append("-" if cell is None else fmt.format(getattr(cell, attr)))
            table.append(record)
        widths = [max(len(row[i]) for row in table) for i in range(len(headers))]
        lines.append(f"== {metric} ==")
        for row in table:
            lines.append("  ".join(val.ljust(w) for val, w in zip(row, widths)))
        lines.append("")
    return "\n".join(lines)


def manifest_json(cfg: BenchmarkConfig) -> str:
    payload = {
        "config": cfg.to_json_dict(),
        "versions": {"limiam": __version__, "numpy": np.__version__},
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def write_outputs(cells, cfg: BenchmarkConfig, outdir) -> None:
    """Write cells.csv, summary.csv, summary.txt, and manifest.json."""
    from pathlib import Path

    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "cells.csv").write_text(cells_to_csv(cells))
    (out / "summary.csv").write_text(summary_csv(cells))
    (out / "summary.txt").write_text(summary_text(cells))
    (out / "manifest.json").write_text(manifest_json(cfg))
