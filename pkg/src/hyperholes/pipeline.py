"""End-to-end analysis: records -> windows -> hypergraphs -> complexes -> holes -> motifs."""

from __future__ import annotations

import csv
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .homology import compute_homology
from .hypergraph import FieldPairConfig, build_hypergraph, collapse_edges
from .ingest import (
    ConfigError,
    FlowRecord,
    Reject,
    Window,
    WindowSpec,
    filter_hosts,
    partition_windows,
    read_flows,
    write_rejects,
)
from .motif import (
    Watchlist,
    annotate_motif,
    default_watchlist,
    motif_from_closure_cycle,
    motif_from_nesting_cycle,
)
from .topology import (
    DEFAULT_SUBSET_BUDGET,
    BudgetError,
    closure_complex,
    containment_relation,
    nesting_complex,
)

log = logging.getLogger(__name__)

MODES = ("nesting", "closure", "both")
SKIPPED_BUDGET = "skipped: budget"


@dataclass
class AnalysisConfig:
    inputs: list[str] = field(default_factory=list)
    format: str = "csv"
    header_map: dict[str, str] = field(default_factory=dict)
    field_map: dict[str, str] = field(default_factory=dict)
    default_year: int = 1970
    window: dict[str, float | None] = field(default_factory=lambda: {"width": 600.0})
    vertex_fields: list[str] = field(default_factory=lambda: ["src_ip", "host"])
    edge_fields: list[str] = field(default_factory=lambda: ["dest_ip", "dest_port"])
    mode: str = "nesting"
    cap: int = 1
    watchlist: str | None = None
    exclude_hosts: list[str] = field(default_factory=list)
    subset_budget: int = DEFAULT_SUBSET_BUDGET
    workers: int = 1
    output_dir: str | None = None
    rng_seed: int = 0
    expand: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.cap < 0:
            raise ConfigError("cap must be nonnegative")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if self.format not in ("csv", "jsonl"):
            raise ConfigError(f"format must be csv or jsonl, got {self.format!r}")
        unknown = set(self.window) - {"start", "width", "stride"}
        if unknown:
            raise ConfigError(f"unknown window keys: {sorted(unknown)}")
        self.window_spec()
        self.field_pair()

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "AnalysisConfig":
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        return cls(**data)

    @classmethod
    def load(cls, path: str | os.PathLike) -> "AnalysisConfig":
        with open(path, encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: {exc}") from None
        return cls.from_dict(data)

    def window_spec(self) -> WindowSpec:
        return WindowSpec(
            start=self.window.get("start"),
            width=float(self.window.get("width", 600.0)),
            stride=self.window.get("stride"),
        )

    def field_pair(self) -> FieldPairConfig:
        return FieldPairConfig(tuple(self.vertex_fields), tuple(self.edge_fields))

    def modes(self) -> tuple[str, ...]:
        return ("nesting", "closure") if self.mode == "both" else (self.mode,)

    def load_watchlist(self) -> Watchlist:
        return Watchlist.load(self.watchlist) if self.watchlist else default_watchlist()


@dataclass(frozen=True)
class _Job:
    fields: FieldPairConfig
    modes: tuple[str, ...]
    cap: int
    budget: int
    watchlist: Watchlist
    expand: int


def analyze_window(window: Window, job: _Job) -> tuple[dict[str, Any], float]:
    """Full per-window computation; returns the report row and its wall time."""
    tic = time.perf_counter()
    h = build_hypergraph(window.records, job.fields)
    ch = collapse_edges(h)
    row: dict[str, Any] = {
        "window_id": window.window_id,
        "start": window.start,
        "end": window.end,
        "n_records": len(window.records),
        "n_vertices": h.n_vertices,
        "n_edges": h.n_edges,
        "n_nodes": ch.n_nodes,
        "max_multiplicity": ch.max_multiplicity,
        "status": "ok",
        "modes": {},
    }
    dag = containment_relation(ch) if "nesting" in job.modes else None
    for mode in job.modes:
        try:
            if mode == "nesting":
                k = nesting_complex(ch, job.cap + 1, dag)
            else:
                k = closure_complex(ch, job.cap + 1, job.budget)
        except BudgetError as exc:
            row["status"] = SKIPPED_BUDGET
            row["modes"][mode] = {"skipped": "budget", "error": str(exc)}
            continue
        summary = compute_homology(k, job.cap)
        motifs = []
        for d in range(1, job.cap + 1):
            for rep in summary.representatives.get(d, []):
                if mode == "nesting":
                    m = motif_from_nesting_cycle(
                        ch, rep, window_id=window.window_id, expand=job.expand, dag=dag
                    )
                else:
                    m = motif_from_closure_cycle(ch, rep, window_id=window.window_id)
                motifs.append(annotate_motif(m, job.watchlist).to_json())
        row["modes"][mode] = {"betti": summary.betti, "cells": summary.cells, "motifs": motifs}
    return row, time.perf_counter() - tic


def _run_job(args):
    return analyze_window(*args)


def _holes(row: Mapping[str, Any], mode: str) -> int:
    result = row["modes"].get(mode, {})
    betti = result.get("betti", [])
    return betti[1] if len(betti) > 1 else 0


def summarize(windows: Sequence[Mapping[str, Any]], modes: Sequence[str]) -> dict[str, Any]:
    n = len(windows)
    out: dict[str, Any] = {
        "n_windows": n,
        "n_records": sum(w["n_records"] for w in windows),
        "skipped_windows": sum(1 for w in windows if w["status"] != "ok"),
        "windows_with_duplicate_edges": sum(1 for w in windows if w["max_multiplicity"] > 1),
        "modes": {},
    }
    for mode in modes:
        computed = [w["modes"][mode] for w in windows if "betti" in w["modes"].get(mode, {})]
        width = max((len(c["betti"]) for c in computed), default=0)
        total_beta = [sum(c["betti"][d] for c in computed if d < len(c["betti"])) for d in range(width)]
        holes = sum(_holes(w, mode) for w in windows)
        out["modes"][mode] = {
            "total_betti": total_beta,
            "total_holes": holes,
            "windows_with_holes": sum(1 for w in windows if _holes(w, mode) > 0),
            "avg_holes_per_window": holes / n if n else 0.0,
            "n_motifs": sum(len(c["motifs"]) for c in computed),
        }
    return out


@dataclass
class AnalysisReport:
    config: AnalysisConfig
    windows: list[dict[str, Any]]
    summary: dict[str, Any]
    rejects: list[Reject] = field(default_factory=list)
    timings: list[float] = field(default_factory=list)
    dropped: int = 0

    @property
    def exit_code(self) -> int:
        return 2 if self.summary["skipped_windows"] else 0

    def holes(self, mode: str = "nesting") -> list[int]:
        return [_holes(w, mode) for w in self.windows]

    def check(self) -> None:
        """Totals must equal sums over windows."""
        again = summarize(self.windows, self.config.modes())
        if again != self.summary:
            raise AssertionError("report totals disagree with per-window rows")
        for mode, s in self.summary["modes"].items():
            if s["windows_with_holes"] > self.summary["n_windows"]:
                raise AssertionError(f"{mode}: more hole windows than windows")

    def write(self, out_dir: str | os.PathLike) -> Path:
        self.check()
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "windows.jsonl", "w", encoding="utf-8") as fh:
            for row in self.windows:
                fh.write(json.dumps(row, sort_keys=True) + "\n")
        summary = dict(self.summary)
        summary["n_rejects"] = len(self.rejects)
        summary["dropped_before_start"] = self.dropped
        (out / "summary.json").write_text(json.dumps(summary, sort_keys=True, indent=2) + "\n")
        with open(out / "rejects.jsonl", "w", encoding="utf-8") as fh:
            write_rejects(self.rejects, fh)
        with open(out / "timings.jsonl", "w", encoding="utf-8") as fh:
            for row, secs in zip(self.windows, self.timings):
                fh.write(json.dumps({"window_id": row["window_id"], "seconds": round(secs, 6)}) + "\n")
        return out


def load_records(cfg: AnalysisConfig) -> tuple[list[FlowRecord], list[Reject]]:
    records: list[FlowRecord] = []
    rejects: list[Reject] = []
    mapping = cfg.header_map if cfg.format == "csv" else cfg.field_map
    for path in cfg.inputs:
        try:
            parsed = read_flows(path, cfg.format, mapping, cfg.default_year)
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc}") from None
        records.extend(parsed.records)
        rejects.extend(parsed.rejects)
        if parsed.rejects:
            log.warning("%s: %d rows rejected", path, len(parsed.rejects))
    return records, rejects


def _analyze_windows(windows: Sequence[Window], cfg: AnalysisConfig) -> tuple[list[dict], list[float]]:
    job = _Job(cfg.field_pair(), cfg.modes(), cfg.cap, cfg.subset_budget, cfg.load_watchlist(), cfg.expand)
    tasks = [(w, job) for w in windows]
    if cfg.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_run_job, tasks, chunksize=max(1, len(tasks) // (4 * cfg.workers))))
    else:
        results = [_run_job(t) for t in tasks]
    return [r for r, _ in results], [t for _, t in results]


def run_analyze(
    cfg: AnalysisConfig,
    records: Sequence[FlowRecord] | None = None,
    *,
    windows: Sequence[Window] | None = None,
    write: bool = True,
) -> AnalysisReport:
    """Analyze every window. Pass ``records`` to skip reading ``cfg.inputs``."""
    rejects: list[Reject] = []
    dropped = 0
    if windows is None:
        if records is None:
            records, rejects = load_records(cfg)
        records = filter_hosts(records, cfg.exclude_hosts)
        spec = cfg.window_spec()
        windows = partition_windows(records, spec)
        start = spec.resolve_start(records)
        dropped = sum(1 for r in records if start is not None and r.timestamp < start)
    rows, timings = _analyze_windows(windows, cfg)
    report = AnalysisReport(cfg, rows, summarize(rows, cfg.modes()), rejects, timings, dropped)
    if write and cfg.output_dir:
        report.write(cfg.output_dir)
    return report


@dataclass
class AblationResult:
    full: AnalysisReport
    filtered: AnalysisReport
    excluded: list[str]
    delta: list[dict[str, Any]]

    @property
    def exit_code(self) -> int:
        return max(self.full.exit_code, self.filtered.exit_code)

    def write(self, out_dir: str | os.PathLike) -> Path:
        out = Path(out_dir)
        self.full.write(out / "all_hosts")
        self.filtered.write(out / "filtered")
        payload = {"excluded_hosts": self.excluded, "windows": self.delta, "totals": self.totals()}
        (out / "delta.json").write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
        return out

    def totals(self) -> dict[str, Any]:
        out = {}
        for key in ("holes", "vertices", "edges"):
            out[f"{key}_all"] = sum(d[f"{key}_all"] for d in self.delta)
            out[f"{key}_filtered"] = sum(d[f"{key}_filtered"] for d in self.delta)
        n = len(self.delta)
        out["avg_holes_all"] = out["holes_all"] / n if n else 0.0
        out["avg_holes_filtered"] = out["holes_filtered"] / n if n else 0.0
        return out


def run_ablation(
    cfg: AnalysisConfig,
    exclude: Iterable[str],
    records: Sequence[FlowRecord] | None = None,
) -> AblationResult:
    """Analyze all hosts and again without ``exclude``, over one shared window layout."""
    excluded = sorted(set(exclude))
    rejects: list[Reject] = []
    if records is None:
        records, rejects = load_records(cfg)
    records = filter_hosts(records, cfg.exclude_hosts)
    missing = sorted(set(excluded) - {r.host for r in records})
    if missing:
        log.warning("excluded hosts not present in the data: %s", ", ".join(missing))

    spec = cfg.window_spec()
    start = spec.resolve_start(records)
    full_windows = partition_windows(records, spec)
    if full_windows:
        fixed = WindowSpec(start=start, width=spec.width, stride=spec.stride)
        last = max(r.timestamp for r in records)
        kept = filter_hosts(records, excluded)
        part = partition_windows(kept, fixed, until=last)
        filtered_windows = part[: len(full_windows)]
    else:
        filtered_windows = []

    mode = cfg.modes()[0]
    full = run_analyze(cfg, windows=full_windows, write=False)
    full.rejects = rejects
    filtered = run_analyze(cfg, windows=filtered_windows, write=False)
    delta = []
    for a, b in zip(full.windows, filtered.windows):
        delta.append(
            {
                "window_id": a["window_id"],
                "start": a["start"],
                "holes_all": _holes(a, mode),
                "holes_filtered": _holes(b, mode),
                "vertices_all": a["n_vertices"],
                "vertices_filtered": b["n_vertices"],
                "edges_all": a["n_edges"],
                "edges_filtered": b["n_edges"],
            }
        )
    result = AblationResult(full, filtered, excluded, delta)
    if cfg.output_dir:
        result.write(cfg.output_dir)
    return result


# -- timeline ---------------------------------------------------------------

_TAG_COLORS = ("#d62728", "#1f77b4", "#2ca02c", "#e6b800", "#ff7f0e", "#9467bd", "#8c564b")


def read_report_windows(path: str | os.PathLike) -> list[dict[str, Any]]:
    p = Path(path)
    if p.is_dir():
        p = p / "windows.jsonl"
    with open(p, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def _tag_counts(row: Mapping[str, Any], mode: str, tags: Sequence[str]) -> list[int]:
    motifs = row["modes"].get(mode, {}).get("motifs", [])
    return [sum(1 for m in motifs if any(t["tag"] == tag for t in m["tags"])) for tag in tags]


def emit_timeline(
    report: AnalysisReport | Sequence[Mapping[str, Any]],
    tags: Sequence[str],
    out_dir: str | os.PathLike,
    mode: str = "nesting",
) -> tuple[Path, Path]:
    """Write ``timeline.csv`` and ``timeline.svg`` for one analysis mode."""
    windows = report.windows if isinstance(report, AnalysisReport) else list(report)
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create {out}: {exc}") from None
    csv_path, svg_path = out / "timeline.csv", out / "timeline.svg"

    rows = []
    for w in windows:
        holes = _holes(w, mode)
        rows.append((w["window_id"], w["start"], holes > 0, holes, _tag_counts(w, mode, tags)))

    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["window_id", "start", "has_hole", "beta_1", *tags])
        for wid, start, has, holes, counts in rows:
            writer.writerow([wid, start, "true" if has else "false", holes, *counts])

    svg_path.write_text(_timeline_svg(rows, tags))
    return csv_path, svg_path


def _timeline_svg(rows, tags: Sequence[str]) -> str:
    cell, pad, label_w = 14, 10, 90
    n = len(rows)
    height = pad * 2 + cell * (1 + len(tags)) + 20
    width = label_w + pad * 2 + cell * n
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<text x="{pad}" y="{pad + cell - 3}" font-size="10" font-family="sans-serif">holes</text>',
    ]
    for i, tag in enumerate(tags):
        y = pad + cell * (i + 2) - 3
        parts.append(f'<text x="{pad}" y="{y}" font-size="10" font-family="sans-serif">{_esc(tag)}</text>')
    for col, (wid, start, has, holes, counts) in enumerate(rows):
        x = label_w + pad + col * cell
        fill = "#999999" if has else "#f2f2f2"
        parts.append(
            f'<rect x="{x}" y="{pad}" width="{cell - 1}" height="{cell - 1}" fill="{fill}">'
            f"<title>window {wid} start {start} beta_1={holes}</title></rect>"
        )
        for i, c in enumerate(counts):
            if c:
                cy = pad + cell * (i + 1) + cell // 2
                color = _TAG_COLORS[i % len(_TAG_COLORS)]
                parts.append(f'<circle cx="{x + cell // 2}" cy="{cy}" r="4" fill="{color}"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _esc(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


__all__ = [
    "AblationResult",
    "AnalysisConfig",
    "AnalysisReport",
    "analyze_window",
    "emit_timeline",
    "load_records",
    "read_report_windows",
    "run_ablation",
    "run_analyze",
    "summarize",
]
