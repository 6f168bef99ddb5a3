"""End-to-end training and the versioned model artifact.

Training order: oversample the success class, refit standardization on the
resampled data, Ward-cluster the standardized rows, then per cluster fit a
depth-limited tree (only when the cluster is large enough), profile it,
and generate a persona description. LLM failures degrade gracefully: the
description is absent and training completes.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

from .dtree import DecisionTree, TreeConfig, extract_rules, fit, rules_in_raw_units
from .errors import (
    ConfigError,
    DataError,
    HtreeError,
    LlmError,
    ModelFormatError,
    PersonaValidationError,
    PipelineError,
    UnsupportedVersionError,
)
from .hcluster import ClusterModel, cluster
from .persona import (
    PROVENANCE_LIVE,
    PROVENANCE_MOCK,
    ClusterProfile,
    LlmParams,
    PersonaDescription,
    SubclusterStats,
    construct_prompt,
    format_feature_stats,
    normalize_success_rate,
    post_process,
    profile_cluster,
    query_llm,
)
from .resample import ResampleConfig, resample
from .tabular import Dataset, FeatureSchema, StandardizationStats, fit_standardizer, transform

FORMAT_VERSION = "1"

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    """Pipeline settings; the one seed governs every stochastic stage."""

    n_main_clusters: int = 8
    min_subcluster_size: int = 5
    real_world_success_rate: float = 0.019
    top_k_features: int = 5
    significance_threshold: float = 0.05
    seed: int = 0
    mock_llm: bool = True
    strict_llm: bool = False
    guidelines: str = ""
    resample: ResampleConfig = field(
        default_factory=lambda: ResampleConfig(target_success_rate=0.10)
    )
    tree: TreeConfig = field(default_factory=TreeConfig)
    llm: LlmParams = field(default_factory=LlmParams)

    def __post_init__(self):
        if self.n_main_clusters < 1:
            raise ConfigError("n_main_clusters must be at least 1")
        if self.min_subcluster_size < 1:
            raise ConfigError("min_subcluster_size must be at least 1")
        if not 0.0 < self.real_world_success_rate < 1.0:
            raise ConfigError("real_world_success_rate must lie in (0, 1)")
        if self.top_k_features < 1:
            raise ConfigError("top_k_features must be at least 1")
        if self.significance_threshold < 0:
            raise ConfigError("significance_threshold must be non-negative")

    def to_dict(self) -> dict:
        return {
            "n_main_clusters": self.n_main_clusters,
            "min_subcluster_size": self.min_subcluster_size,
            "real_world_success_rate": self.real_world_success_rate,
            "top_k_features": self.top_k_features,
            "significance_threshold": self.significance_threshold,
            "seed": self.seed,
            "mock_llm": self.mock_llm,
            "strict_llm": self.strict_llm,
            "guidelines": self.guidelines,
            "resample": self.resample.to_dict(),
            "tree": self.tree.to_dict(),
            "llm": self.llm.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        d["resample"] = ResampleConfig.from_dict(d["resample"])
        d["tree"] = TreeConfig.from_dict(d["tree"])
        d["llm"] = LlmParams.from_dict(d["llm"])
        return cls(**d)


@dataclass(eq=False)
class TrainedModel:
    """Everything classification needs, serializable to one JSON artifact."""

    format_version: str
    schema: FeatureSchema
    standardization: StandardizationStats
    clusters: ClusterModel
    trees: dict[int, DecisionTree]
    profiles: dict[int, ClusterProfile]
    descriptions: dict[int, PersonaDescription | None]
    config: TrainConfig

    def __eq__(self, other) -> bool:
        if not isinstance(other, TrainedModel):
            return NotImplemented
        return (
            self.format_version == other.format_version
            and self.schema == other.schema
            and self.standardization == other.standardization
            and self.clusters == other.clusters
            and self.trees == other.trees
            and self.profiles == other.profiles
            and self.descriptions == other.descriptions
            and self.config == other.config
        )


def _describe_cluster(profile, tree, config) -> PersonaDescription | None:
    """Generate one cluster's persona; None when the LLM path fails non-strictly."""
    importances = tree.feature_importances if tree is not None else None
    block = format_feature_stats(profile, importances, config.significance_threshold)
    bundle = construct_prompt(block, guidelines=config.guidelines)
    try:
        raw = query_llm(bundle, config.llm, mock=config.mock_llm)
        if config.mock_llm:
            return post_process(raw, provenance=PROVENANCE_MOCK, model_name="mock")
        return post_process(raw, provenance=PROVENANCE_LIVE, model_name=config.llm.model_name)
    except (LlmError, PersonaValidationError) as exc:
        if config.strict_llm:
            raise
        logger.warning(
            "cluster %d: persona generation failed, description marked absent: %s",
            profile.cluster_label,
            exc,
        )
        return None


def train(data: Dataset, config: TrainConfig) -> TrainedModel:
    """Run the full training pipeline on a labeled dataset.

    Requires both classes present and k <= resampled row count. A cluster
    gets a local tree only when its member count exceeds
    min_subcluster_size; the tree's min_leaf_size is min_subcluster_size.
    Fixed seed means a byte-identical artifact.
    """
    if data.n_rows == 0:
        raise DataError("cannot train on an empty dataset")
    if data.success_count in (0, data.n_rows):
        raise DataError("training needs both classes present")

    balanced = resample(data, replace(config.resample, seed=config.seed))
    stats = fit_standardizer(balanced)
    Z = transform(balanced, stats)
    cmodel = cluster(Z, config.n_main_clusters)
    p_train = balanced.success_rate
    p_real = config.real_world_success_rate
    tree_config = replace(config.tree, min_leaf_size=config.min_subcluster_size)

    trees: dict[int, DecisionTree] = {}
    profiles: dict[int, ClusterProfile] = {}
    descriptions: dict[int, PersonaDescription | None] = {}
    for label in range(cmodel.n_main_clusters):
        member_mask = cmodel.assignments == label
        try:
            profile = profile_cluster(
                label,
                balanced.rows[member_mask],
                balanced.labels[member_mask],
                stats,
                data.schema.feature_names,
                p_train,
                p_real,
                top_k=config.top_k_features,
            )
            tree = None
            if int(member_mask.sum()) > config.min_subcluster_size:
                tree = fit(Z[member_mask], balanced.labels[member_mask], tree_config)
                raw_rules = rules_in_raw_units(
                    extract_rules(tree, data.schema.feature_names),
                    data.schema.feature_names,
                    stats,
                )
                profile = replace(
                    profile,
                    subclusters=tuple(
                        SubclusterStats(
                            rule=rule,
                            member_count=rule.leaf_counts[0] + rule.leaf_counts[1],
                            success_count=rule.leaf_counts[1],
                            raw_success_rate=rule.leaf_success_rate,
                            normalized_success_rate=normalize_success_rate(
                                rule.leaf_success_rate, p_train, p_real
                            ),
                        )
                        for rule in raw_rules
                    ),
                )
        except (LlmError, PersonaValidationError):
            raise
        except HtreeError as exc:
            raise PipelineError(f"cluster {label}: {exc}", cluster_label=label) from exc

        if tree is not None:
            trees[label] = tree
        profiles[label] = profile
        descriptions[label] = _describe_cluster(profile, tree, config)

    return TrainedModel(
        format_version=FORMAT_VERSION,
        schema=data.schema,
        standardization=stats,
        clusters=cmodel,
        trees=trees,
        profiles=profiles,
        descriptions=descriptions,
        config=config,
    )


def model_to_dict(model: TrainedModel) -> dict:
    return {
        "format_version": model.format_version,
        "schema": model.schema.to_dict(),
        "standardization": model.standardization.to_dict(),
        "clusters": model.clusters.to_dict(),
        "trees": {str(label): tree.to_dict() for label, tree in model.trees.items()},
        "profiles": {str(label): p.to_dict() for label, p in model.profiles.items()},
        "descriptions": {
            str(label): (d.to_dict() if d is not None else None)
            for label, d in model.descriptions.items()
        },
        "config": model.config.to_dict(),
    }


def model_from_dict(d: dict) -> TrainedModel:
    version = d.get("format_version")
    if version != FORMAT_VERSION:
        raise UnsupportedVersionError(
            f"unsupported model format version {version!r}; this build reads {FORMAT_VERSION!r}"
        )
    try:
        return TrainedModel(
            format_version=FORMAT_VERSION,
            schema=FeatureSchema.from_dict(d["schema"]),
            standardization=StandardizationStats.from_dict(d["standardization"]),
            clusters=ClusterModel.from_dict(d["clusters"]),
            trees={int(k): DecisionTree.from_dict(v) for k, v in d["trees"].items()},
            profiles={int(k): ClusterProfile.from_dict(v) for k, v in d["profiles"].items()},
            descriptions={
                int(k): (PersonaDescription.from_dict(v) if v is not None else None)
                for k, v in d["descriptions"].items()
            },
            config=TrainConfig.from_dict(d["config"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"model artifact is structurally invalid: {exc}") from exc


def save_model(model: TrainedModel, path: str) -> None:
    """Write the model as UTF-8 JSON with sorted keys (stable bytes per model)."""
    text = json.dumps(model_to_dict(model), indent=2, sort_keys=True, ensure_ascii=False)
    Path(path).write_text(text + "\n", encoding="utf-8")


def load_model(path: str) -> TrainedModel:
    """Read a model artifact; load_model after save_model reproduces the model.

    Unparseable JSON raises ModelFormatError citing the byte offset;
    an unknown format version raises UnsupportedVersionError.
    """
    text = Path(path).read_text(encoding="utf-8")
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(
            f"model artifact is not valid JSON at byte offset {exc.pos}: {exc.msg}",
            byte_offset=exc.pos,
        ) from exc
    if not isinstance(d, dict):
        raise ModelFormatError("model artifact must be a JSON object")
    return model_from_dict(d)
