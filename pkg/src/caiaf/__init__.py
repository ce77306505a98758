"""Context-aware image annotation: batch-mode active learning where each
queried batch is clustered by metadata similarity and presented with context."""

from .classifier import LinearMarginClassifier, TrainConfig, hinge_objective, hinge_objective_grad
from .clustering import ClusterConfig, KMeans, PresentationPlan, build_plan, embed_for_clustering
from .context import (ContextPayload, context_payload, geodesic_km, keyword_distance,
                      tag_distance, time_distance_s)
from .dataset import (DatasetFormatError, IngestReport, SynthConfig, ingest,
                      load_embeddings, load_gazetteer, split, synth, write_dataset)
from .oracle import (AbReport, CostModelParams, ErrorModelParams, annotate,
                     perceived_ambiguity, run_ab, run_session, truth_table)
from .records import (ContextDimension, Dataset, DatasetSplit, EmbeddingTable,
                      Gazetteer, ImageRecord, Metadata)
from .selection import SelectionConfig, select, select_random
from .session import (Session, SessionConfig, SessionEvent, SessionMetrics,
                      export_metrics_csv, f1_binary, macro_f1, metrics_from_events,
                      read_event_log, strip_wall_clock, write_event_log)

__version__ = "0.1.0"

__all__ = [
    "AbReport", "ClusterConfig", "ContextDimension", "ContextPayload",
    "CostModelParams", "Dataset", "DatasetFormatError", "DatasetSplit",
    "EmbeddingTable", "ErrorModelParams", "Gazetteer", "ImageRecord",
    "IngestReport", "KMeans", "LinearMarginClassifier", "Metadata",
    "PresentationPlan", "SelectionConfig", "Session", "SessionConfig",
    "SessionEvent", "SessionMetrics", "SynthConfig", "TrainConfig",
    "annotate", "build_plan", "context_payload", "embed_for_clustering",
    "export_metrics_csv", "f1_binary", "geodesic_km", "hinge_objective",
    "hinge_objective_grad", "ingest", "keyword_distance", "load_embeddings",
    "load_gazetteer", "macro_f1", "metrics_from_events", "perceived_ambiguity",
    "read_event_log", "run_ab", "run_session", "select", "select_random",
    "split", "strip_wall_clock", "synth", "tag_distance", "time_distance_s",
    "truth_table", "write_dataset", "write_event_log",
]
