"""Classification of new records against a trained model.

A record is standardized with the training statistics, routed to the
nearest cluster centroid, and run through that cluster's tree. Confidence
is the routed leaf's majority fraction. Clusters without a tree fall back
to the cluster-level rate with a flag. Explanations are template-rendered
text; no model call happens at inference time.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .dtree import decision_path
from .errors import DataError, SchemaError
from .hcluster import nearest_cluster
from .persona import ClusterProfile
from .pipeline import TrainedModel
from .tabular import KIND_BINARY, transform_rows


@dataclass(frozen=True)
class ClassificationResult:
    """Routing outcome for one record, with a human-readable explanation."""

    record_id: str
    cluster_label: int
    centroid_distance: float
    prediction: int
    confidence: float
    fallback: bool
    decision_path: tuple[tuple[str, str, float], ...]
    leaf_counts: tuple[int, int] | None
    cluster_raw_success_rate: float
    cluster_normalized_success_rate: float
    persona_summary: str | None
    explanation: str

    def to_dict(self) -> dict:
        return {
            "record_id": self.record_id,
            "cluster_label": self.cluster_label,
            "centroid_distance": self.centroid_distance,
            "prediction": self.prediction,
            "confidence": self.confidence,
            "fallback": self.fallback,
            "decision_path": [list(p) for p in self.decision_path],
            "leaf_counts": list(self.leaf_counts) if self.leaf_counts is not None else None,
            "cluster_raw_success_rate": self.cluster_raw_success_rate,
            "cluster_normalized_success_rate": self.cluster_normalized_success_rate,
            "persona_summary": self.persona_summary,
            "explanation": self.explanation,
        }


def _format_threshold(value: float) -> str:
    return format(value, ".4g")


def render_explanation(
    profile: ClusterProfile,
    path: tuple[tuple[str, str, float], ...],
    prediction: int,
    confidence: float,
    leaf_counts: tuple[int, int] | None = None,
    persona_summary: str | None = None,
    fallback: bool = False,
) -> str:
    """Render a deterministic explanation from a profile and a raw-unit path.

    Layout: persona one-liner, cluster line with the normalized rate as a
    percentage (1 decimal), a because-clause over the path predicates,
    leaf statistics, and the confidence.
    """
    outcome = "success" if prediction == 1 else "failure"
    lines = [
        persona_summary
        if persona_summary
        else "No persona description is available for this cluster.",
        (
            f"Routed to cluster {profile.cluster_label} "
            f"({profile.member_count} training rows; normalized success rate "
            f"{profile.normalized_success_rate * 100:.1f}%)."
        ),
    ]
    if fallback:
        lines.append(
            f"This cluster is too small for a local tree; predicted {outcome} "
            f"from the cluster-level success rate."
        )
    elif not path:
        lines.append(
            f"The cluster's local tree is a single leaf; predicted {outcome} "
            f"from its overall composition."
        )
    else:
        clause = " and ".join(
            f"{name} {op} {_format_threshold(threshold)}" for name, op, threshold in path
        )
        lines.append(f"Predicted {outcome} because {clause}.")
    if leaf_counts is not None:
        total = leaf_counts[0] + leaf_counts[1]
        lines.append(
            f"The matching leaf holds {total} training rows, {leaf_counts[1]} of them successes."
        )
    lines.append(f"Confidence: {confidence:.3f}.")
    return "\n".join(lines)


def classify(model: TrainedModel, features: Mapping[str, float], record_id: str = "") -> ClassificationResult:
    """Classify one record given as a feature-name-to-value mapping.

    The mapping must cover the schema's features exactly: unknown names
    and missing names raise SchemaError (no silent drop); non-finite
    values and binary-indicator violations raise DataError.
    """
    schema = model.schema
    known = set(schema.feature_names)
    unknown = sorted(set(features) - known)
    if unknown:
        raise SchemaError(f"unknown feature '{unknown[0]}'")
    missing = [n for n in schema.feature_names if n not in features]
    if missing:
        raise SchemaError(f"missing feature '{missing[0]}'")

    vector = np.empty(len(schema.feature_names), dtype=float)
    for i, (name, kind) in enumerate(zip(schema.feature_names, schema.feature_kinds)):
        value = float(features[name])
        if not math.isfinite(value):
            raise DataError(f"feature '{name}' is not finite")
        if kind == KIND_BINARY and value not in (0.0, 1.0):
            raise DataError(f"binary feature '{name}' holds {value}, expected 0 or 1")
        vector[i] = value

    z = transform_rows(vector, model.standardization)[0]
    label, distance = nearest_cluster(z, model.clusters)
    profile = model.profiles[label]
    tree = model.trees.get(label)

    if tree is not None:
        prediction, counts, z_path = decision_path(tree, z)
        total = counts[0] + counts[1]
        confidence = max(counts) / total
        stats = model.standardization
        named_path = tuple(
            (
                schema.feature_names[fi],
                op,
                float(stats.means[fi] + threshold * stats.stddevs[fi]),
            )
            for fi, op, threshold in z_path
        )
        leaf_counts: tuple[int, int] | None = counts
        fallback = False
    else:
        rate = profile.raw_success_rate
        prediction = 1 if rate >= 0.5 else 0
        confidence = max(rate, 1.0 - rate)
        named_path = ()
        leaf_counts = None
        fallback = True

    description = model.descriptions.get(label)
    persona_summary = description.persona_summary if description is not None else None
    explanation = render_explanation(
        profile,
        named_path,
        prediction,
        confidence,
        leaf_counts=leaf_counts,
        persona_summary=persona_summary,
        fallback=fallback,
    )
    return ClassificationResult(
        record_id=record_id,
        cluster_label=label,
        centroid_distance=distance,
        prediction=int(prediction),
        confidence=float(confidence),
        fallback=fallback,
        decision_path=named_path,
        leaf_counts=leaf_counts,
        cluster_raw_success_rate=profile.raw_success_rate,
        cluster_normalized_success_rate=profile.normalized_success_rate,
        persona_summary=persona_summary,
        explanation=explanation,
    )


def classify_csv(model: TrainedModel, input_path: str, output_path) -> dict[int, int]:
    """Classify every row of a CSV, writing one JSON line per row.

    The CSV must contain every schema feature column; the schema's label
    and id columns may be present (the label is ignored, the id carries
    through). Any other column raises SchemaError. Returns a
    cluster-label histogram. output_path may be a path or a writable
    text stream.
    """
    schema = model.schema
    allowed_extra = {schema.label_name}
    if schema.id_name is not None:
        allowed_extra.add(schema.id_name)

    histogram: dict[int, int] = {}

    def run(out) -> None:
        with open(input_path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None:
                raise DataError(f"{input_path}: file is empty")
            for name in schema.feature_names:
                if name not in header:
                    raise SchemaError(f"{input_path}: missing required column '{name}'")
            for name in header:
                if name not in schema.feature_names and name not in allowed_extra:
                    raise SchemaError(f"{input_path}: unknown column '{name}'")
            positions = {name: header.index(name) for name in schema.feature_names}
            id_pos = (
                header.index(schema.id_name)
                if schema.id_name is not None and schema.id_name in header
                else None
            )
            for i, record in enumerate(reader):
                if len(record) != len(header):
                    raise DataError(f"row {i} has {len(record)} cells, header has {len(header)}")
                features = {}
                for name, pos in positions.items():
                    try:
                        features[name] = float(record[pos])
                    except ValueError:
                        raise DataError(
                            f"cannot parse '{record[pos]}' at row {i}, column '{name}'"
                        ) from None
                record_id = record[id_pos] if id_pos is not None else str(i)
                result = classify(model, features, record_id=record_id)
                out.write(json.dumps(result.to_dict(), sort_keys=True) + "\n")
                histogram[result.cluster_label] = histogram.get(result.cluster_label, 0) + 1

    if hasattr(output_path, "write"):
        run(output_path)
    else:
        with open(output_path, "w", encoding="utf-8") as out:
            run(out)
    return histogram
