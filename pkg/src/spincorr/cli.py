"""Command-line interface: generate, select, analyze, chsh, pipeline.

Flags override SPINCORR_* environment variables, which override the config
file. Exit codes: 0 success, 1 configuration error, 2 data or schema error,
3 statistical-precondition error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from . import __version__
from . import analysis as ana
from . import chsh as chshmod
from . import events as ev
from . import generator as gen
from . import selection as sel
from .errors import (BinningError, ConfigError, DomainError, InsufficientData,
                     MissingBin, SchemaMismatch, WeightOverflow)
from .pipeline import (SCHEMA_VERSIONS, analyze_batch, load_pipeline_config,
                       run_pipeline)

ENV_PREFIX = "SPINCORR_"

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_STATS = 3


def _env(name: str) -> str | None:
    return os.environ.get(ENV_PREFIX + name.upper())


def _resolve(flag_value, env_name: str, cast=str, default=None):
    if flag_value is not None:
        return flag_value
    raw = _env(env_name)
    if raw is not None:
        try:
            return cast(raw)
        except ValueError as exc:
            raise ConfigError(f"bad {ENV_PREFIX}{env_name.upper()}: {raw!r}") from exc
    return default


def _load_config(args) -> "pipeline.PipelineConfig":
    path = _resolve(args.config, "config")
    if path is None:
        raise ConfigError("no config given (use --config or SPINCORR_CONFIG)")
    try:
        cfg = load_pipeline_config(path)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    seed = _resolve(getattr(args, "seed", None), "seed", int)
    if seed is not None:
        from dataclasses import replace
        cfg = replace(cfg, generator=replace(cfg.generator, seed=seed))
    workers = _resolve(getattr(args, "workers", None), "workers", int)
    if workers is not None:
        from dataclasses import replace
        cfg = replace(cfg, workers=workers)
    return cfg


def _write_manifest(path: Path, stage: str, n_in: int, n_out: int,
                    wall_s: float, cfg) -> None:
    doc = {"schema_version": SCHEMA_VERSIONS["manifest"],
           "schema_versions": SCHEMA_VERSIONS,
           "config_hash": cfg.config_hash(),
           "seed": cfg.generator.seed,
           "stages": [{"name": stage, "n_in": n_in, "n_out": n_out,
                       "wall_s": wall_s}]}
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")


def cmd_generate(args) -> int:
    cfg = _load_config(args)
    n = args.n if args.n is not None else (cfg.n_events if cfg.n_events > 1 else None)
    if n is None or n <= 0:
        raise ConfigError("event count must be positive (use --n)")
    out = Path(_resolve(args.out, "out", default="events.jsonl"))
    t0 = time.perf_counter()
    batch = gen.generate(cfg.generator, n, workers=cfg.workers)
    ev.write_events(out, batch, seed=cfg.generator.seed,
                    config_hash=cfg.generator.config_hash())
    _write_manifest(out.with_suffix(out.suffix + ".manifest.json"),
                    "generate", n, len(batch), time.perf_counter() - t0, cfg)
    print(f"generated {len(batch)} events (of {n} produced) -> {out}")
    return EXIT_OK


def cmd_select(args) -> int:
    cfg = _load_config(args)
    batch, _header = ev.read_events(args.input)
    selected, report = sel.run_selection(batch, cfg.selection)
    out = Path(_resolve(args.out, "out", default="selected.jsonl"))
    ev.write_events(out, selected, seed=cfg.generator.seed,
                    config_hash=cfg.generator.config_hash())
    report_path = out.parent / (out.stem + "_report.json")
    report_path.write_text(report.to_json() + "\n", encoding="utf-8")
    print(report.to_text())
    print(f"selected {len(selected)} events -> {out} (report: {report_path})")
    return EXIT_OK


def cmd_analyze(args) -> int:
    cfg = _load_config(args)
    batch, _header = ev.read_events(args.input)
    table, fit, diag, _counts = analyze_batch(batch, cfg.generator.analyzer,
                                              cfg.analysis.n_bins)
    out_dir = Path(_resolve(args.out, "out", default="."))
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "correlation.csv").write_text(table.to_csv(), encoding="utf-8")
    (out_dir / "analysis.json").write_text(
        ana.analysis_to_json(table, fit, diag) + "\n", encoding="utf-8")
    print(f"gamma = {fit.gamma:.4f} +- {fit.sigma_gamma:.4f}, "
          f"chi2/dof = {fit.chi2 / fit.dof:.3f} "
          f"(null: {fit.chi2_const0 / fit.dof_const0:.3f})")
    print(f"wrote {out_dir / 'correlation.csv'} and {out_dir / 'analysis.json'}")
    return EXIT_OK


def cmd_chsh(args) -> int:
    cfg = _load_config(args)
    try:
        doc = json.loads(Path(args.input).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaMismatch(f"{args.input}: not valid JSON") from exc
    if doc.get("schema_version") != ana.ANALYSIS_SCHEMA_VERSION:
        raise SchemaMismatch(f"{args.input}: unsupported analysis schema")
    table = ana.table_from_rows(doc["table"])
    gamma = cfg.chsh.gamma
    if gamma is None:
        gamma = float(doc["fit"]["gamma"])
    triples = chshmod.enumerate_triples(cfg.analysis.n_bins,
                                        cfg.chsh.max_index_sum)
    report = chshmod.evaluate(table, gamma, triples)
    out_dir = Path(_resolve(args.out, "out", default="."))
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "chsh.csv").write_text(report.to_csv(), encoding="utf-8")
    (out_dir / "chsh.json").write_text(report.to_json() + "\n",
                                       encoding="utf-8")
    print(f"{len(report.entries)} triples, max S_exp = {report.max_s_exp:.4f}, "
          f"{report.n_violated} above the classical bound")
    return EXIT_OK


def cmd_pipeline(args) -> int:
    cfg = _load_config(args)
    out_dir = _resolve(args.out, "out")
    result = run_pipeline(cfg, output_dir=out_dir)
    for s in result.stages:
        print(f"{s.name:<10} {s.n_in:>10} -> {s.n_out:<10} {s.wall_s:8.2f} s")
    fit = result.fit
    print(f"gamma = {fit.gamma:.4f} +- {fit.sigma_gamma:.4f}; "
          f"max S_exp = {result.chsh_report.max_s_exp:.4f} "
          f"({result.chsh_report.n_violated} triples above 2)")
    print(f"artifacts in {result.output_dir}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spincorr",
        description="Two-proton spin-correlation simulation and analysis")
    parser.add_argument("--version", action="store_true",
                        help="print package and schema versions")
    sub = parser.add_subparsers(dest="command")

    def add_common(p, needs_input=False):
        p.add_argument("--config", help="pipeline (or flat generator) config JSON")
        p.add_argument("--seed", type=int, help="override the generator seed")
        p.add_argument("--workers", type=int, help="worker processes")
        if needs_input:
            p.add_argument("--in", dest="input", required=True,
                           help="input artifact path")

    p = sub.add_parser("generate", help="produce an event file")
    add_common(p)
    p.add_argument("--n", type=int, help="number of events to produce")
    p.add_argument("--out", help="output event file (JSONL)")

    p = sub.add_parser("select", help="apply selection gates to an event file")
    add_common(p, needs_input=True)
    p.add_argument("--out", help="output selected-event file (JSONL)")

    p = sub.add_parser("analyze", help="binned correlation and Werner fit")
    add_common(p, needs_input=True)
    p.add_argument("--out", help="output directory")

    p = sub.add_parser("chsh", help="CHSH combinations from an analysis JSON")
    add_common(p, needs_input=True)
    p.add_argument("--out", help="output directory")

    p = sub.add_parser("pipeline", help="run generate -> select -> analyze -> chsh")
    add_common(p)
    p.add_argument("--out", help="output directory (overrides config)")
    return parser


_COMMANDS = {
    "generate": cmd_generate,
    "select": cmd_select,
    "analyze": cmd_analyze,
    "chsh": cmd_chsh,
    "pipeline": cmd_pipeline,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.version:
        print(f"spincorr {__version__}")
        for name, version in SCHEMA_VERSIONS.items():
            print(f"schema {name}: v{version}")
        return EXIT_OK
    if args.command is None:
        parser.print_help()
        return EXIT_CONFIG
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, DomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SchemaMismatch, BinningError, WeightOverflow, MissingBin,
            OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except InsufficientData as exc:
        print(f"insufficient data: {exc}", file=sys.stderr)
        return EXIT_STATS


if __name__ == "__main__":
    sys.exit(main())
