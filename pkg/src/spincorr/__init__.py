"""spincorr: Monte Carlo simulation and analysis of two-proton spin correlations.

Event generation with pluggable spin models (singlet, Werner mixtures, a
deterministic local-hidden-variable baseline), analyzer double-scattering,
timing/energy backgrounds, the experimental selection chain, the weighted
left/right correlation estimator with Werner fit, and CHSH combinations.
"""

__version__ = "0.1.0"

from .analyzer import AnalyzerModel, analyzer_from_config, ideal_analyzer
from .errors import (BinningError, ConfigError, DegenerateTrack, DomainError,
                     InsufficientData, InvalidState, MissingBin,
                     SchemaMismatch, SpincorrError, WeightOverflow)
from .events import EventBatch, PairEvent, read_events, write_events
from .generator import GeneratorConfig, generate, split_stream
from .models import (LhvSignModel, SingletModel, SpinModel, WernerModel,
                     spin_model_from_config)
from .pipeline import PipelineConfig, load_pipeline_config, run_pipeline
from .selection import SelectionConfig, SelectionReport, run_selection

__all__ = [
    "AnalyzerModel", "analyzer_from_config", "ideal_analyzer",
    "BinningError", "ConfigError", "DegenerateTrack", "DomainError",
    "InsufficientData", "InvalidState", "MissingBin", "SchemaMismatch",
    "SpincorrError", "WeightOverflow",
    "EventBatch", "PairEvent", "read_events", "write_events",
    "GeneratorConfig", "generate", "split_stream",
    "LhvSignModel", "SingletModel", "SpinModel", "WernerModel",
    "spin_model_from_config",
    "PipelineConfig", "load_pipeline_config", "run_pipeline",
    "SelectionConfig", "SelectionReport", "run_selection",
    "__version__",
]
