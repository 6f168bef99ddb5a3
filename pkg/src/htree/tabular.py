"""Tabular dataset handling: schema, CSV ingestion, and z-score standardization.

A dataset is a dense float matrix plus a binary label vector and per-row
string ids. Standardization uses the population standard deviation
(divide by n, not n-1) and maps zero-variance features to exactly 0.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, LabelError, SchemaError

KIND_CONTINUOUS = "continuous"
KIND_BINARY = "binary"
_VALID_KINDS = (KIND_CONTINUOUS, KIND_BINARY)


@dataclass(frozen=True)
class FeatureSchema:
    """Column contract: ordered feature names/kinds plus label and optional id column."""

    feature_names: tuple[str, ...]
    feature_kinds: tuple[str, ...]
    label_name: str
    id_name: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "feature_kinds", tuple(self.feature_kinds))
        if not self.feature_names:
            raise SchemaError("schema must declare at least one feature")
        if len(set(self.feature_names)) != len(self.feature_names):
            raise SchemaError("feature names must be unique")
        if len(self.feature_kinds) != len(self.feature_names):
            raise SchemaError(
                "feature_kinds length %d does not match feature_names length %d"
                % (len(self.feature_kinds), len(self.feature_names))
            )
        for name, kind in zip(self.feature_names, self.feature_kinds):
            if kind not in _VALID_KINDS:
                raise SchemaError(f"feature '{name}' has unknown kind '{kind}'")
        if self.label_name in self.feature_names:
            raise SchemaError(f"label column '{self.label_name}' cannot also be a feature")
        if self.id_name is not None and self.id_name in self.feature_names:
            raise SchemaError(f"id column '{self.id_name}' cannot also be a feature")
        if self.id_name is not None and self.id_name == self.label_name:
            raise SchemaError("id column and label column must differ")

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def binary_mask(self) -> np.ndarray:
        return np.array([k == KIND_BINARY for k in self.feature_kinds], dtype=bool)

    def feature_index(self, name: str) -> int:
        try:
            return self.feature_names.index(name)
        except ValueError:
            raise SchemaError(f"unknown feature '{name}'") from None

    def to_dict(self) -> dict:
        return {
            "feature_names": list(self.feature_names),
            "feature_kinds": list(self.feature_kinds),
            "label_name": self.label_name,
            "id_name": self.id_name,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureSchema":
        return cls(
            feature_names=tuple(d["feature_names"]),
            feature_kinds=tuple(d["feature_kinds"]),
            label_name=d["label_name"],
            id_name=d.get("id_name"),
        )


@dataclass(eq=False)
class Dataset:
    """Dense feature matrix with labels, row ids, and synthetic-row flags."""

    schema: FeatureSchema
    rows: np.ndarray
    labels: np.ndarray
    ids: tuple[str, ...]
    synthetic: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=float)
        self.labels = np.asarray(self.labels, dtype=int)
        self.ids = tuple(self.ids)
        if self.rows.ndim != 2:
            raise DataError("rows must be a 2-d matrix")
        n, d = self.rows.shape
        if d != self.schema.n_features:
            raise DataError(
                f"row width {d} does not match schema feature count {self.schema.n_features}"
            )
        if self.labels.shape != (n,):
            raise DataError("labels length does not match row count")
        if len(self.ids) != n:
            raise DataError("ids length does not match row count")
        if self.synthetic is None:
            self.synthetic = np.zeros(n, dtype=bool)
        else:
            self.synthetic = np.asarray(self.synthetic, dtype=bool)
            if self.synthetic.shape != (n,):
                raise DataError("synthetic mask length does not match row count")
        if n and not np.isfinite(self.rows).all():
            bad = np.argwhere(~np.isfinite(self.rows))[0]
            raise DataError(
                f"non-finite value at row {bad[0]}, column '{self.schema.feature_names[bad[1]]}'"
            )
        if n and not np.isin(self.labels, (0, 1)).all():
            bad_row = int(np.nonzero(~np.isin(self.labels, (0, 1)))[0][0])
            raise LabelError(f"label value {self.labels[bad_row]} at row {bad_row} is not 0 or 1")
        mask = self.schema.binary_mask()
        if n and mask.any():
            binary_vals = self.rows[:, mask]
            ok = (binary_vals == 0.0) | (binary_vals == 1.0)
            if not ok.all():
                r, c = np.argwhere(~ok)[0]
                name = np.array(self.schema.feature_names)[mask][c]
                raise DataError(
                    f"binary feature '{name}' holds {binary_vals[r, c]} at row {r}, expected 0 or 1"
                )

    @property
    def n_rows(self) -> int:
        return self.rows.shape[0]

    @property
    def success_count(self) -> int:
        return int(self.labels.sum())

    @property
    def success_rate(self) -> float:
        if self.n_rows == 0:
            raise DataError("success rate undefined for an empty dataset")
        return self.success_count / self.n_rows

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.schema == other.schema
            and np.array_equal(self.rows, other.rows)
            and np.array_equal(self.labels, other.labels)
            and self.ids == other.ids
            and np.array_equal(self.synthetic, other.synthetic)
        )


def _parse_cell(value: str, row: int, column: str) -> float:
    try:
        parsed = float(value)
    except ValueError:
        raise DataError(f"cannot parse '{value}' at row {row}, column '{column}'") from None
    if not math.isfinite(parsed):
        raise DataError(f"non-finite value '{value}' at row {row}, column '{column}'")
    return parsed


def ingest_csv(path: str, schema: FeatureSchema) -> Dataset:
    """Read a CSV into a Dataset, validating every cell against the schema.

    Missing columns raise SchemaError naming the column; unparseable or
    non-finite cells raise DataError with row/column coordinates; label
    values outside {0, 1} raise LabelError citing the row. Row ids come
    from the schema's id column when declared, else the 0-based row index.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: file is empty")
        required = list(schema.feature_names) + [schema.label_name]
        if schema.id_name is not None:
            required.append(schema.id_name)
        positions = {}
        for name in required:
            if name not in header:
                raise SchemaError(f"{path}: missing required column '{name}'")
            positions[name] = header.index(name)

        rows: list[list[float]] = []
        labels: list[int] = []
        ids: list[str] = []
        width = len(header)
        for i, record in enumerate(reader):
            if len(record) != width:
                raise DataError(f"row {i} has {len(record)} cells, header has {width}")
            values = [
                _parse_cell(record[positions[name]], i, name) for name in schema.feature_names
            ]
            raw_label = record[positions[schema.label_name]].strip()
            try:
                label_val = float(raw_label)
            except ValueError:
                raise LabelError(f"label value '{raw_label}' at row {i} is not 0 or 1") from None
            if label_val not in (0.0, 1.0):
                raise LabelError(f"label value '{raw_label}' at row {i} is not 0 or 1")
            for name, kind, val in zip(schema.feature_names, schema.feature_kinds, values):
                if kind == KIND_BINARY and val not in (0.0, 1.0):
                    raise DataError(
                        f"binary feature '{name}' holds {val} at row {i}, expected 0 or 1"
                    )
            rows.append(values)
            labels.append(int(label_val))
            ids.append(record[positions[schema.id_name]] if schema.id_name else str(i))

    if not rows:
        raise DataError(f"{path}: no data rows")
    return Dataset(
        schema=schema,
        rows=np.array(rows, dtype=float),
        labels=np.array(labels, dtype=int),
        ids=tuple(ids),
    )


def write_csv(data: Dataset, path: str) -> None:
    """Write a Dataset back to CSV; ingest_csv(write_csv(d)) reproduces d exactly."""
    schema = data.schema
    header: list[str] = []
    if schema.id_name is not None:
        header.append(schema.id_name)
    header.extend(schema.feature_names)
    header.append(schema.label_name)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(data.n_rows):
            record: list[str] = []
            if schema.id_name is not None:
                record.append(data.ids[i])
            record.extend(repr(v) for v in data.rows[i].tolist())
            record.append(str(int(data.labels[i])))
            writer.writerow(record)


def infer_schema(path: str, label_name: str = "success", id_name: str | None = None) -> FeatureSchema:
    """Derive a FeatureSchema from a CSV header and its values.

    Columns other than the label and id are features; a feature whose every
    value parses to 0 or 1 is classified as a binary indicator, anything
    else as continuous. When id_name is None, an "id" column is used as the
    id if present.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: file is empty")
        if label_name not in header:
            raise SchemaError(f"{path}: missing required column '{label_name}'")
        if id_name is not None and id_name not in header:
            raise SchemaError(f"{path}: missing required column '{id_name}'")
        if id_name is None and "id" in header:
            id_name = "id"
        feature_names = [c for c in header if c != label_name and c != id_name]
        if not feature_names:
            raise SchemaError(f"{path}: no feature columns besides label/id")
        binary = {name: True for name in feature_names}
        pos = {name: header.index(name) for name in feature_names}
        for i, record in enumerate(reader):
            for name in feature_names:
                if not binary[name]:
                    continue
                val = _parse_cell(record[pos[name]], i, name)
                if val not in (0.0, 1.0):
                    binary[name] = False
    kinds = tuple(KIND_BINARY if binary[n] else KIND_CONTINUOUS for n in feature_names)
    return FeatureSchema(
        feature_names=tuple(feature_names),
        feature_kinds=kinds,
        label_name=label_name,
        id_name=id_name,
    )


@dataclass(eq=False)
class StandardizationStats:
    """Per-feature means and population stddevs, with a zero-variance mask."""

    means: np.ndarray
    stddevs: np.ndarray
    constant_mask: np.ndarray

    def __post_init__(self):
        self.means = np.asarray(self.means, dtype=float)
        self.stddevs = np.asarray(self.stddevs, dtype=float)
        self.constant_mask = np.asarray(self.constant_mask, dtype=bool)
        if not (self.means.shape == self.stddevs.shape == self.constant_mask.shape):
            raise DataError("standardization stat vectors must share one shape")
        if (self.stddevs < 0).any():
            raise DataError("stddevs must be non-negative")

    @property
    def n_features(self) -> int:
        return self.means.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, StandardizationStats):
            return NotImplemented
        return (
            np.array_equal(self.means, other.means)
            and np.array_equal(self.stddevs, other.stddevs)
            and np.array_equal(self.constant_mask, other.constant_mask)
        )

    def to_dict(self) -> dict:
        return {
            "means": self.means.tolist(),
            "stddevs": self.stddevs.tolist(),
            "constant_mask": self.constant_mask.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StandardizationStats":
        return cls(
            means=np.array(d["means"], dtype=float),
            stddevs=np.array(d["stddevs"], dtype=float),
            constant_mask=np.array(d["constant_mask"], dtype=bool),
        )


def fit_standardizer(data: Dataset) -> StandardizationStats:
    """Compute per-feature mean and population stddev (divide by n)."""
    if data.n_rows == 0:
        raise DataError("cannot fit standardizer on an empty dataset")
    means = data.rows.mean(axis=0)
    stddevs = np.sqrt(((data.rows - means) ** 2).mean(axis=0))
    return StandardizationStats(means=means, stddevs=stddevs, constant_mask=stddevs == 0.0)


def transform_rows(rows: np.ndarray, stats: StandardizationStats) -> np.ndarray:
    """Standardize a raw feature matrix; zero-variance features map to exactly 0."""
    X = np.asarray(rows, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.shape[1] != stats.n_features:
        raise DataError(
            f"row width {X.shape[1]} does not match standardizer width {stats.n_features}"
        )
    divisors = np.where(stats.constant_mask, 1.0, stats.stddevs)
    Z = (X - stats.means) / divisors
    Z[:, stats.constant_mask] = 0.0
    return Z


def transform(data: Dataset, stats: StandardizationStats) -> np.ndarray:
    """Standardize a Dataset's feature matrix."""
    return transform_rows(data.rows, stats)


def inverse_transform_rows(z_rows: np.ndarray, stats: StandardizationStats) -> np.ndarray:
    """Map standardized values back to raw units; constant features return their mean."""
    Z = np.asarray(z_rows, dtype=float)
    if Z.ndim == 1:
        Z = Z.reshape(1, -1)
    if Z.shape[1] != stats.n_features:
        raise DataError(
            f"row width {Z.shape[1]} does not match standardizer width {stats.n_features}"
        )
    return stats.means + Z * stats.stddevs
