"""Streaming magnitude/shape outlyingness monitoring with FPCA drill-down."""

from .bench import BenchReport, run_bench
from .engine import (
    DriftMonitor,
    EngineConfig,
    MsPoint,
    MsView,
    OutlyingnessState,
    StreamingEngine,
    classify,
    directional_outlyingness,
    drift_check,
    kl_divergence_histogram,
)
from .errors import ConfigurationError, DataQualityError, FdaStreamError
from .fpca import (
    Basis,
    BasisSpec,
    FpcaModel,
    SmoothedCurve,
    build_basis,
    fit_fpca,
    fpc_scores,
    perturbation_curves,
    scree,
    select_lambda_gcv,
    smooth_curve,
    smooth_curves,
    top_k_series,
)
from .ingest import (
    ReplayReport,
    ScenarioSpec,
    StreamEvent,
    apply_event,
    event_from_dict,
    event_to_dict,
    generate_synthetic,
    parse_event_jsonl,
    parse_wide_csv,
    replay,
    write_wide_csv,
)
from .panel import CrossSectionStats, RawPanel, cross_section_stats
from .service import FpcaConfig, PushPolicy, create_app

__version__ = "0.1.0"

__all__ = [
    "BenchReport",
    "run_bench",
    "DriftMonitor",
    "EngineConfig",
    "MsPoint",
    "MsView",
    "OutlyingnessState",
    "StreamingEngine",
    "classify",
    "directional_outlyingness",
    "drift_check",
    "kl_divergence_histogram",
    "ConfigurationError",
    "DataQualityError",
    "FdaStreamError",
    "Basis",
    "BasisSpec",
    "FpcaModel",
    "SmoothedCurve",
    "build_basis",
    "fit_fpca",
    "fpc_scores",
    "perturbation_curves",
    "scree",
    "select_lambda_gcv",
    "smooth_curve",
    "smooth_curves",
    "top_k_series",
    "ReplayReport",
    "ScenarioSpec",
    "StreamEvent",
    "apply_event",
    "event_from_dict",
    "event_to_dict",
    "generate_synthetic",
    "parse_event_jsonl",
    "parse_wide_csv",
    "replay",
    "write_wide_csv",
    "CrossSectionStats",
    "RawPanel",
    "cross_section_stats",
    "FpcaConfig",
    "PushPolicy",
    "create_app",
    "__version__",
]
