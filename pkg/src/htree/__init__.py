"""Cluster-then-predict tabular classification with persona descriptions.

Pipeline: oversample the rare success class, Ward-cluster the standardized
rows, fit a shallow decision tree inside each cluster, profile clusters by
feature z-scores, describe them through a chat-completion interface (a
deterministic offline mock by default), and classify new records by
nearest centroid plus the local tree's decision path.
"""

from .classify import ClassificationResult, classify, classify_csv, render_explanation
from .dtree import (
    DecisionTree,
    Rule,
    TreeConfig,
    TreeNode,
    decision_path,
    extract_rules,
    fit,
    impurity,
    rules_in_raw_units,
    split_gain,
)
from .errors import (
    ConfigError,
    DataError,
    HtreeError,
    LabelError,
    LlmError,
    LlmProtocolError,
    LlmTimeoutError,
    LlmTransportError,
    ModelFormatError,
    PersonaValidationError,
    PipelineError,
    SchemaError,
    UnsupportedVersionError,
)
from .hcluster import (
    ClusterModel,
    LinkageStep,
    adjusted_rand_index,
    cluster,
    nearest_cluster,
)
from .persona import (
    ClusterProfile,
    LlmParams,
    PersonaDescription,
    PromptBundle,
    SubclusterStats,
    construct_prompt,
    format_feature_stats,
    mock_completion,
    normalize_success_rate,
    post_process,
    profile_cluster,
    query_llm,
    render_description,
)
from .pipeline import (
    FORMAT_VERSION,
    TrainConfig,
    TrainedModel,
    load_model,
    save_model,
    train,
)
from .resample import ResampleConfig, resample, smallest_addition
from .synth import generate_dataset
from .tabular import (
    Dataset,
    FeatureSchema,
    StandardizationStats,
    fit_standardizer,
    infer_schema,
    ingest_csv,
    inverse_transform_rows,
    transform,
    transform_rows,
    write_csv,
)

__version__ = "0.1.0"

__all__ = [
    "ClassificationResult",
    "ClusterModel",
    "ClusterProfile",
    "ConfigError",
    "DataError",
    "Dataset",
    "DecisionTree",
    "FORMAT_VERSION",
    "FeatureSchema",
    "HtreeError",
    "LabelError",
    "LinkageStep",
    "LlmError",
    "LlmParams",
    "LlmProtocolError",
    "LlmTimeoutError",
    "LlmTransportError",
    "ModelFormatError",
    "PersonaDescription",
    "PersonaValidationError",
    "PipelineError",
    "PromptBundle",
    "ResampleConfig",
    "Rule",
    "SchemaError",
    "StandardizationStats",
    "SubclusterStats",
    "TrainConfig",
    "TrainedModel",
    "TreeConfig",
    "TreeNode",
    "UnsupportedVersionError",
    "adjusted_rand_index",
    "classify",
    "classify_csv",
    "cluster",
    "construct_prompt",
    "decision_path",
    "extract_rules",
    "fit",
    "fit_standardizer",
    "format_feature_stats",
    "generate_dataset",
    "impurity",
    "infer_schema",
    "ingest_csv",
    "inverse_transform_rows",
    "load_model",
    "mock_completion",
    "nearest_cluster",
    "normalize_success_rate",
    "post_process",
    "profile_cluster",
    "query_llm",
    "render_description",
    "render_explanation",
    "resample",
    "rules_in_raw_units",
    "save_model",
    "smallest_addition",
    "split_gain",
    "train",
    "transform",
    "transform_rows",
    "write_csv",
]
