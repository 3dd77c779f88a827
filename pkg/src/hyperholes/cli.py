"""Command line entry point: ``hyperholes {analyze,ablate,synth,timeline}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

from .ingest import ConfigError, FlowFormatError, SynthConfig, synth_generate, write_flow_csv
from .motif import Watchlist, default_watchlist
from .pipeline import AnalysisConfig, emit_timeline, read_report_windows, run_ablation, run_analyze

EXIT_OK, EXIT_FATAL, EXIT_PARTIAL = 0, 1, 2

log = logging.getLogger("hyperholes")


def _windows(text: str) -> dict[str, float]:
    parts = text.split(",")
    if len(parts) > 2:
        raise argparse.ArgumentTypeError("expected <width>[,<stride>]")
    try:
        values = [float(p) for p in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad window spec {text!r}") from None
    out = {"width": values[0]}
    if len(values) == 2:
        out["stride"] = values[1]
    return out


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON analysis config")
    p.add_argument("--mode", choices=("nesting", "closure", "both"))
    p.add_argument("--cap", type=int, help="highest homology dimension reported")
    p.add_argument("--windows", type=_windows, metavar="WIDTH[,STRIDE]", help="window seconds")
    p.add_argument("--workers", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--expand", type=int, help="grow nesting motifs by N containment steps")
    p.add_argument("inputs", nargs="*", help="flow files (override config inputs)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hyperholes", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    _common(sub.add_parser("analyze", help="find holes in every window"))
    ablate = sub.add_parser("ablate", help="analyze with and without a host set")
    _common(ablate)
    ablate.add_argument("--exclude", required=True, help="file with one host name per line")

    synth = sub.add_parser("synth", help="write a synthetic flow log")
    synth.add_argument("--config", required=True, help="JSON synthetic-data config")
    synth.add_argument("--out", required=True, help="CSV file to write")

    timeline = sub.add_parser("timeline", help="CSV and SVG timeline of an analysis report")
    timeline.add_argument("--report", required=True, help="windows.jsonl or its directory")
    timeline.add_argument("--out", required=True, help="output directory")
    timeline.add_argument("--mode", default="nesting", choices=("nesting", "closure"))
    timeline.add_argument("--watchlist", help="watchlist JSON whose tags become columns")
    timeline.add_argument("--tags", help="comma-separated tag order (overrides --watchlist)")
    return parser


def _analysis_config(args: argparse.Namespace) -> AnalysisConfig:
    data = {}
    if args.config:
        cfg = AnalysisConfig.load(args.config)
        data = {k: getattr(cfg, k) for k in cfg.__dataclass_fields__}
    if args.inputs:
        data["inputs"] = list(args.inputs)
    if args.windows:
        data["window"] = {**data.get("window", {}), **args.windows}
    for key, value in (
        ("mode", args.mode),
        ("cap", args.cap),
        ("workers", args.workers),
        ("output_dir", args.out),
        ("expand", args.expand),
    ):
        if value is not None:
            data[key] = value
    return AnalysisConfig.from_dict(data)


def _read_hosts(path: str) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        return [line.strip() for line in fh if line.strip() and not line.startswith("#")]


def _cmd_analyze(args) -> int:
    cfg = _analysis_config(args)
    report = run_analyze(cfg)
    for mode, s in report.summary["modes"].items():
        print(
            f"{mode}: {report.summary['n_windows']} windows, "
            f"{s['windows_with_holes']} with holes, {s['n_motifs']} motifs"
        )
    return report.exit_code


def _cmd_ablate(args) -> int:
    cfg = _analysis_config(args)
    result = run_ablation(cfg, _read_hosts(args.exclude))
    t = result.totals()
    print(f"avg holes per window: {t['avg_holes_all']:.3f} -> {t['avg_holes_filtered']:.3f}")
    print(f"vertices: {t['vertices_all']} -> {t['vertices_filtered']}")
    return result.exit_code


def _cmd_synth(args) -> int:
    with open(args.config, encoding="utf-8") as fh:
        try:
            cfg = SynthConfig.from_dict(json.load(fh))
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ConfigError(f"{args.config}: {exc}") from None
    records = synth_generate(cfg)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8", newline="") as fh:
        write_flow_csv(records, fh)
    print(f"wrote {len(records)} records to {out}")
    return EXIT_OK


def _cmd_timeline(args) -> int:
    windows = read_report_windows(args.report)
    if args.tags:
        tags = [t for t in args.tags.split(",") if t]
    else:
        wl = Watchlist.load(args.watchlist) if args.watchlist else default_watchlist()
        tags = wl.tags
    csv_path, svg_path = emit_timeline(windows, tags, args.out, args.mode)
    print(f"wrote {csv_path} and {svg_path}")
    return EXIT_OK


_COMMANDS = {
    "analyze": _cmd_analyze,
    "ablate": _cmd_ablate,
    "synth": _cmd_synth,
    "timeline": _cmd_timeline,
}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, FlowFormatError, OSError, ValueError) as exc:
        print(f"hyperholes: error: {exc}", file=sys.stderr)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
