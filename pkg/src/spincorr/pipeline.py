"""End-to-end orchestration: generate -> select -> analyze -> chsh.

Stages hand event batches over in memory; every stage still writes its file
artifact so any intermediate can be re-ingested by the standalone commands.
All artifacts except the manifest (which records wall-clock) are
byte-deterministic for a fixed (config, seed), independent of worker count.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import analysis as ana
from . import chsh as chshmod
from . import events as ev
from . import generator as gen
from . import selection as sel
from .errors import ConfigError

MANIFEST_SCHEMA_VERSION = 1

SCHEMA_VERSIONS = {
    "events": ev.EVENT_SCHEMA_VERSION,
    "selection_report": sel.SELECTION_SCHEMA_VERSION,
    "analysis": ana.ANALYSIS_SCHEMA_VERSION,
    "chsh": chshmod.CHSH_SCHEMA_VERSION,
    "manifest": MANIFEST_SCHEMA_VERSION,
}


@dataclass(frozen=True)
class AnalysisOptions:
    n_bins: int = ana.DEFAULT_N_BINS

    def __post_init__(self):
        if self.n_bins < 1:
            raise ConfigError("analysis.n_bins must be >= 1")


@dataclass(frozen=True)
class ChshOptions:
    max_index_sum: int = 9
    gamma: float | None = None    # None: use the fitted Werner gamma


@dataclass(frozen=True)
class PipelineConfig:
    n_events: int
    generator: gen.GeneratorConfig = field(default_factory=gen.GeneratorConfig)
    selection: sel.SelectionConfig = field(default_factory=sel.SelectionConfig)
    analysis: AnalysisOptions = field(default_factory=AnalysisOptions)
    chsh: ChshOptions = field(default_factory=ChshOptions)
    output_dir: str = "run"
    workers: int = 1

    def __post_init__(self):
        if self.n_events <= 0:
            raise ConfigError("n_events must be positive")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    def to_config_dict(self) -> dict:
        return {
            "n_events": self.n_events,
            "generator": self.generator.to_config_dict(),
            "selection": self.selection.to_config_dict(),
            "analysis": {"n_bins": self.analysis.n_bins},
            "chsh": {"max_index_sum": self.chsh.max_index_sum,
                     "gamma": self.chsh.gamma},
            "output_dir": self.output_dir,
            "workers": self.workers,
        }

    def config_hash(self) -> str:
        # workers and output_dir do not influence artifact content.
        d = self.to_config_dict()
        d.pop("workers")
        d.pop("output_dir")
        payload = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode()).hexdigest()


def pipeline_config_from_dict(doc: dict) -> PipelineConfig:
    if not isinstance(doc, dict):
        raise ConfigError("pipeline config must be a JSON object")
    known = {"n_events", "generator", "selection", "analysis", "chsh",
             "output_dir", "workers"}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown pipeline config keys: {sorted(unknown)}")
    if "n_events" not in doc:
        raise ConfigError("pipeline config requires n_events")
    ana_doc = doc.get("analysis", {})
    chsh_doc = doc.get("chsh", {})
    try:
        analysis_opts = AnalysisOptions(**ana_doc)
        chsh_opts = ChshOptions(**chsh_doc)
    except TypeError as exc:
        raise ConfigError(f"bad analysis/chsh options: {exc}") from exc
    return PipelineConfig(
        n_events=int(doc["n_events"]),
        generator=gen.generator_config_from_dict(doc.get("generator", {})),
        selection=sel.selection_config_from_dict(doc.get("selection", {})),
        analysis=analysis_opts,
        chsh=chsh_opts,
        output_dir=str(doc.get("output_dir", "run")),
        workers=int(doc.get("workers", 1)),
    )


def load_pipeline_config(path) -> PipelineConfig:
    """Read a pipeline config; a flat generator document is also accepted."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON: {exc}") from exc
    if "n_events" in doc or "generator" in doc:
        return pipeline_config_from_dict(doc)
    # Flat GeneratorConfig document: wrap with pipeline defaults.
    return PipelineConfig(n_events=1,
                          generator=gen.generator_config_from_dict(doc))


def analyze_batch(batch: ev.EventBatch, analyzer, n_bins: int):
    """Shared analyze stage: counted pre-filter, accumulation, table, fit."""
    mask, diag = ana.weightable_mask(batch, analyzer)
    counts = ana.accumulate(batch.take(mask), analyzer, n_bins)
    table = ana.correlation(counts)
    fit = ana.fit_werner(table)
    return table, fit, diag, counts


@dataclass
class StageRecord:
    name: str
    n_in: int
    n_out: int
    wall_s: float


@dataclass
class PipelineResult:
    config: PipelineConfig
    output_dir: Path
    stages: list[StageRecord]
    table: ana.CorrelationTable
    fit: ana.FitResult
    selection_report: sel.SelectionReport
    chsh_report: chshmod.ChshReport

    def manifest(self) -> dict:
        return {
            "schema_version": MANIFEST_SCHEMA_VERSION,
            "schema_versions": SCHEMA_VERSIONS,
            "config_hash": self.config.config_hash(),
            "seed": self.config.generator.seed,
            "stages": [{"name": s.name, "n_in": s.n_in, "n_out": s.n_out,
                        "wall_s": s.wall_s} for s in self.stages],
        }


def run_pipeline(config: PipelineConfig, output_dir=None) -> PipelineResult:
    """Run all stages, writing every artifact under output_dir."""
    out = Path(output_dir if output_dir is not None else config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    stages: list[StageRecord] = []
    gcfg = config.generator

    t0 = time.perf_counter()
    batch = gen.generate(gcfg, config.n_events, workers=config.workers)
    ev.write_events(out / "events.jsonl", batch, seed=gcfg.seed,
                    config_hash=gcfg.config_hash())
    stages.append(StageRecord("generate", config.n_events, len(batch),
                              time.perf_counter() - t0))

    t0 = time.perf_counter()
    selected, report = sel.run_selection(batch, config.selection)
    ev.write_events(out / "selected.jsonl", selected, seed=gcfg.seed,
                    config_hash=gcfg.config_hash())
    (out / "selection_report.json").write_text(report.to_json() + "\n",
                                               encoding="utf-8")
    (out / "selection_report.txt").write_text(report.to_text() + "\n",
                                              encoding="utf-8")
    stages.append(StageRecord("select", len(batch), len(selected),
                              time.perf_counter() - t0))

    t0 = time.perf_counter()
    table, fit, diag, _counts = analyze_batch(selected, gcfg.analyzer,
                                              config.analysis.n_bins)
    (out / "correlation.csv").write_text(table.to_csv(), encoding="utf-8")
    (out / "analysis.json").write_text(
        ana.analysis_to_json(table, fit, diag) + "\n", encoding="utf-8")
    stages.append(StageRecord("analyze", len(selected),
                              int(table.populated.sum()),
                              time.perf_counter() - t0))

    t0 = time.perf_counter()
    gamma = config.chsh.gamma if config.chsh.gamma is not None else fit.gamma
    triples = chshmod.enumerate_triples(config.analysis.n_bins,
                                        config.chsh.max_index_sum)
    chsh_report = chshmod.evaluate(table, gamma, triples)
    (out / "chsh.csv").write_text(chsh_report.to_csv(), encoding="utf-8")
    (out / "chsh.json").write_text(chsh_report.to_json() + "\n",
                                   encoding="utf-8")
    stages.append(StageRecord("chsh", int(table.populated.sum()),
                              len(chsh_report.entries),
                              time.perf_counter() - t0))

    result = PipelineResult(config=config, output_dir=out, stages=stages,
                            table=table, fit=fit, selection_report=report,
                            chsh_report=chsh_report)
    (out / "manifest.json").write_text(
        json.dumps(result.manifest(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8")
    return result
