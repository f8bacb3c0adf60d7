"""Feature schemas, datasets, and disjoint partitioning.

A schema declares the feature domains up front: continuous features carry
closed numeric bounds, discrete features an explicit value set. Datasets
are stored column wise (float64 for continuous features, integer codes for
discrete features and labels) and validate themselves against their schema
on construction, so every Dataset in circulation is known to be clean.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import Iterator, Mapping, Sequence

import numpy as np

from .errors import DataValidationError


@dataclass(frozen=True)
class ContinuousFeature:
    """Numeric feature with a closed domain [lower, upper]."""

    name: str
    lower: float
    upper: float

    def __post_init__(self):
        if not self.name:
            raise DataValidationError("feature name must be non-empty")
        if not (math.isfinite(self.lower) and math.isfinite(self.upper)):
            raise DataValidationError(f"feature {self.name!r}: bounds must be finite")
        if not self.lower < self.upper:
            raise DataValidationError(
                f"feature {self.name!r}: lower bound {self.lower} must be "
                f"strictly below upper bound {self.upper}"
            )

    @property
    def width(self) -> float:
        return self.upper - self.lower


@dataclass(frozen=True)
class DiscreteFeature:
    """Categorical feature over a fixed, ordered value set."""

    name: str
    values: tuple[str, ...]

    def __post_init__(self):
        if not self.name:
            raise DataValidationError("feature name must be non-empty")
        if len(self.values) < 2:
            raise DataValidationError(
                f"feature {self.name!r}: needs at least two values"
            )
        if len(set(self.values)) != len(self.values):
            raise DataValidationError(f"feature {self.name!r}: duplicate values")


FeatureSpec = ContinuousFeature | DiscreteFeature


@dataclass(frozen=True)
class FeatureSchema:
    """Declared domains for every feature plus the label domain."""

    features: tuple[FeatureSpec, ...]
    class_labels: tuple[str, ...]
    label_column: str = "label"

    def __post_init__(self):
        if not self.features:
            raise DataValidationError("schema needs at least one feature")
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise DataValidationError("duplicate feature names in schema")
        if self.label_column in names:
            raise DataValidationError(
                f"label column {self.label_column!r} collides with a feature name"
            )
        if len(self.class_labels) < 2:
            raise DataValidationError("schema needs at least two class labels")
        if len(set(self.class_labels)) != len(self.class_labels):
            raise DataValidationError("duplicate class labels in schema")

    @property
    def feature_names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.features)

    def continuous_features(self) -> tuple[ContinuousFeature, ...]:
        return tuple(f for f in self.features if isinstance(f, ContinuousFeature))

    def discrete_features(self) -> tuple[DiscreteFeature, ...]:
        return tuple(f for f in self.features if isinstance(f, DiscreteFeature))

    @property
    def num_continuous(self) -> int:
        return len(self.continuous_features())

    @property
    def num_discrete(self) -> int:
        return len(self.discrete_features())

    def feature(self, name: str) -> FeatureSpec:
        for f in self.features:
            if f.name == name:
                return f
        raise KeyError(name)

    def to_dict(self) -> dict:
        features = []
        for f in self.features:
            if isinstance(f, ContinuousFeature):
                features.append(
                    {"name": f.name, "kind": "continuous",
                     "lower": f.lower, "upper": f.upper}
                )
            else:
                features.append(
                    {"name": f.name, "kind": "discrete", "values": list(f.values)}
                )
        return {
            "features": features,
            "label_column": self.label_column,
            "class_labels": list(self.class_labels),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "FeatureSchema":
        if not isinstance(obj, dict):
            raise DataValidationError("schema document must be a JSON object")
        try:
            raw_features = obj["features"]
            label_column = obj["label_column"]
            class_labels = obj["class_labels"]
        except KeyError as missing:
            raise DataValidationError(f"schema is missing key {missing}") from None
        if not isinstance(raw_features, list):
            raise DataValidationError("schema 'features' must be a list")
        features: list[FeatureSpec] = []
        for raw in raw_features:
            features.append(_feature_from_dict(raw))
        if not isinstance(class_labels, list) or not all(
            isinstance(c, str) for c in class_labels
        ):
            raise DataValidationError("schema 'class_labels' must be a list of strings")
        if not isinstance(label_column, str):
            raise DataValidationError("schema 'label_column' must be a string")
        return cls(
            features=tuple(features),
            class_labels=tuple(class_labels),
            label_column=label_column,
        )


def _feature_from_dict(raw) -> FeatureSpec:
    if not isinstance(raw, dict):
        raise DataValidationError("each feature must be a JSON object")
    name = raw.get("name")
    kind = raw.get("kind")
    if not isinstance(name, str):
        raise DataValidationError("feature 'name' must be a string")
    if kind == "continuous":
        lower, upper = raw.get("lower"), raw.get("upper")
        for bound, value in (("lower", lower), ("upper", upper)):
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise DataValidationError(
                    f"feature {name!r}: {bound!r} must be a number"
                )
        return ContinuousFeature(name, float(lower), float(upper))
    if kind == "discrete":
        values = raw.get("values")
        if not isinstance(values, list) or not all(isinstance(v, str) for v in values):
            raise DataValidationError(
                f"feature {name!r}: 'values' must be a list of strings"
            )
        return DiscreteFeature(name, tuple(values))
    raise DataValidationError(f"feature {name!r}: unknown kind {kind!r}")


def load_schema(path: str) -> FeatureSchema:
    """Read a schema from a JSON file."""
    with open(path, "r", encoding="utf-8") as handle:
        try:
            obj = json.load(handle)
        except json.JSONDecodeError as exc:
            raise DataValidationError(f"{path}: not valid JSON: {exc}") from None
    return FeatureSchema.from_dict(obj)


def save_schema(schema: FeatureSchema, path: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(schema.to_dict(), handle, indent=2)
        handle.write("\n")


@dataclass(frozen=True)
class Record:
    """One row, decoded to python values. Continuous floats, discrete strings."""

    values: Mapping[str, float | str]
    label: str | None = None


class Dataset:
    """Columnar, schema-validated record collection.

    Continuous columns are float64 arrays, discrete columns int32 code
    arrays indexing into the feature's declared value tuple, and labels an
    int32 code array over the schema's class labels (or None for unlabeled
    feature-only data). Construction re-validates everything, so slicing
    and loading share one set of guarantees.
    """

    def __init__(
        self,
        schema: FeatureSchema,
        columns: Mapping[str, np.ndarray],
        label_codes: np.ndarray | None = None,
    ):
        self.schema = schema
        if set(columns) != set(schema.feature_names):
            raise DataValidationError("columns do not match schema feature names")
        lengths = {len(col) for col in columns.values()}
        if len(lengths) > 1:
            raise DataValidationError("columns have differing lengths")
        n = lengths.pop() if lengths else 0

        self._columns: dict[str, np.ndarray] = {}
        for feat in schema.features:
            col = np.asarray(columns[feat.name])
            if isinstance(feat, ContinuousFeature):
                col = col.astype(np.float64, copy=False)
                if col.size and not np.all(np.isfinite(col)):
                    raise DataValidationError(
                        f"feature {feat.name!r}: non-finite value"
                    )
                if col.size and (col.min() < feat.lower or col.max() > feat.upper):
                    raise DataValidationError(
                        f"feature {feat.name!r}: value outside declared bounds"
                    )
            else:
                col = col.astype(np.int32, copy=False)
                if col.size and (col.min() < 0 or col.max() >= len(feat.values)):
                    raise DataValidationError(
                        f"feature {feat.name!r}: value code out of range"
                    )
            self._columns[feat.name] = col

        if label_codes is not None:
            label_codes = np.asarray(label_codes).astype(np.int32, copy=False)
            if len(label_codes) != n:
                raise DataValidationError("label column length mismatch")
            if label_codes.size and (
                label_codes.min() < 0 or label_codes.max() >= len(schema.class_labels)
            ):
                raise DataValidationError("label code out of range")
        self._labels = label_codes
        self._n = n

    def __len__(self) -> int:
        return self._n

    @property
    def has_labels(self) -> bool:
        return self._labels is not None

    @property
    def label_codes(self) -> np.ndarray:
        if self._labels is None:
            raise DataValidationError("dataset has no labels")
        return self._labels

    def column(self, name: str) -> np.ndarray:
        return self._columns[name]

    def label_counts(self) -> dict[str, int]:
        """Record count per class label, in schema label order."""
        tally = np.bincount(self.label_codes, minlength=len(self.schema.class_labels))
        return {c: int(tally[i]) for i, c in enumerate(self.schema.class_labels)}

    def record(self, index: int) -> Record:
        values: dict[str, float | str] = {}
        for feat in self.schema.features:
            cell = self._columns[feat.name][index]
            if isinstance(feat, ContinuousFeature):
                values[feat.name] = float(cell)
            else:
                values[feat.name] = feat.values[int(cell)]
        label = None
        if self._labels is not None:
            label = self.schema.class_labels[int(self._labels[index])]
        return Record(values=values, label=label)

    def records(self) -> Iterator[Record]:
        for i in range(self._n):
            yield self.record(i)

    def subset(self, indices: np.ndarray) -> "Dataset":
        indices = np.asarray(indices)
        columns = {name: col[indices] for name, col in self._columns.items()}
        labels = self._labels[indices] if self._labels is not None else None
        return Dataset(self.schema, columns, labels)

    @classmethod
    def from_records(
        cls,
        schema: FeatureSchema,
        rows: Sequence[Mapping[str, float | str]],
        labels: Sequence[str] | None = None,
    ) -> "Dataset":
        """Build a Dataset from decoded python rows, validating each cell.

        Rows are mappings from feature name to value; row numbers in error
        messages are 1-based. Labels, when given, must match the schema's
        class labels and align with the rows.
        """
        if labels is not None and len(labels) != len(rows):
            raise DataValidationError("labels do not align with rows")
        columns: dict[str, list] = {name: [] for name in schema.feature_names}
        label_index = {c: i for i, c in enumerate(schema.class_labels)}
        value_index = {
            f.name: {v: i for i, v in enumerate(f.values)}
            for f in schema.discrete_features()
        }
        label_codes: list[int] = []
        for row_no, row in enumerate(rows, start=1):
            for feat in schema.features:
                if feat.name not in row:
                    raise DataValidationError(
                        f"row {row_no}: feature {feat.name!r} missing"
                    )
                cell = row[feat.name]
                if isinstance(feat, ContinuousFeature):
                    columns[feat.name].append(
                        _check_continuous_cell(feat, cell, row_no)
                    )
                else:
                    code = value_index[feat.name].get(cell)
                    if code is None:
                        raise DataValidationError(
                            f"row {row_no}: feature {feat.name!r}: value {cell!r} "
                            f"not in declared values"
                        )
                    columns[feat.name].append(code)
            if labels is not None:
                code = label_index.get(labels[row_no - 1])
                if code is None:
                    raise DataValidationError(
                        f"row {row_no}: label {labels[row_no - 1]!r} "
                        f"not in class labels"
                    )
                label_codes.append(code)
        arrays = {}
        for feat in schema.features:
            dtype = np.float64 if isinstance(feat, ContinuousFeature) else np.int32
            arrays[feat.name] = np.asarray(columns[feat.name], dtype=dtype)
        label_array = (
            np.asarray(label_codes, dtype=np.int32) if labels is not None else None
        )
        return cls(schema, arrays, label_array)


def _check_continuous_cell(feat: ContinuousFeature, cell, row_no: int) -> float:
    if isinstance(cell, bool) or not isinstance(cell, (int, float)):
        raise DataValidationError(
            f"row {row_no}: feature {feat.name!r}: expected a number, got {cell!r}"
        )
    value = float(cell)
    if not math.isfinite(value):
        raise DataValidationError(
            f"row {row_no}: feature {feat.name!r}: value is not finite"
        )
    if value < feat.lower or value > feat.upper:
        raise DataValidationError(
            f"row {row_no}: feature {feat.name!r}: value {value!r} outside "
            f"bounds [{feat.lower}, {feat.upper}]"
        )
    return value


def load_dataset(path: str, schema: FeatureSchema, *, require_label: bool = True) -> Dataset:
    """Load a CSV file against a schema.

    The header must name every schema feature exactly once, plus the
    schema's label column unless ``require_label`` is false and the column
    is absent. Unknown columns are rejected so that a mis-named column
    fails loudly instead of being ignored.
    """
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise DataValidationError(f"{path}: empty file") from None
        if len(set(header)) != len(header):
            raise DataValidationError(f"{path}: duplicate column in header")
        positions = {name: i for i, name in enumerate(header)}
        for name in schema.feature_names:
            if name not in positions:
                raise DataValidationError(f"{path}: column {name!r} missing")
        has_label = schema.label_column in positions
        if require_label and not has_label:
            raise DataValidationError(
                f"{path}: label column {schema.label_column!r} missing"
            )
        expected = set(schema.feature_names)
        if has_label:
            expected.add(schema.label_column)
        unknown = [name for name in header if name not in expected]
        if unknown:
            raise DataValidationError(f"{path}: unknown column {unknown[0]!r}")

        rows: list[dict[str, float | str]] = []
        labels: list[str] | None = [] if has_label else None
        for row_no, cells in enumerate(reader, start=1):
            if len(cells) != len(header):
                raise DataValidationError(
                    f"{path}: row {row_no}: expected {len(header)} cells, "
                    f"got {len(cells)}"
                )
            row: dict[str, float | str] = {}
            for feat in schema.features:
                text = cells[positions[feat.name]]
                if isinstance(feat, ContinuousFeature):
                    try:
                        row[feat.name] = float(text)
                    except ValueError:
                        raise DataValidationError(
                            f"{path}: row {row_no}: feature {feat.name!r}: "
                            f"cannot parse {text!r} as a number"
                        ) from None
                else:
                    row[feat.name] = text
            rows.append(row)
            if labels is not None:
                labels.append(cells[positions[schema.label_column]])
    try:
        return Dataset.from_records(schema, rows, labels)
    except DataValidationError as exc:
        raise DataValidationError(f"{path}: {exc}") from None


def save_dataset(data: Dataset, path: str) -> None:
    """Write a dataset back to CSV, one column per feature plus the label.

    Continuous cells use python's shortest round-trip float formatting, so
    a save/load cycle reproduces the dataset exactly.
    """
    schema = data.schema
    header = list(schema.feature_names)
    if data.has_labels:
        header.append(schema.label_column)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for record in data.records():
            cells = [record.values[name] for name in schema.feature_names]
            if data.has_labels:
                cells.append(record.label)
            writer.writerow(cells)


@dataclass(frozen=True)
class DisjointPartition:
    """Random split of a dataset into disjoint subsets of near-equal size."""

    subsets: tuple[Dataset, ...]
    indices: tuple[np.ndarray, ...]
    parent_size: int


def partition_disjoint(
    data: Dataset, tau: int, rng: np.random.Generator
) -> DisjointPartition:
    """Split ``data`` into ``tau`` disjoint random subsets.

    A uniform permutation is cut into tau contiguous blocks; the first
    ``n mod tau`` blocks get one extra record, so sizes differ by at most
    one and every record lands in exactly one subset.
    """
    n = len(data)
    if tau < 1:
        raise ValueError("tau must be at least 1")
    if tau > n:
        raise ValueError(f"tau={tau} exceeds the {n} available records")
    perm = rng.permutation(n)
    base, extra = divmod(n, tau)
    blocks: list[np.ndarray] = []
    start = 0
    for i in range(tau):
        size = base + (1 if i < extra else 0)
        blocks.append(perm[start:start + size])
        start += size
    subsets = tuple(data.subset(block) for block in blocks)
    return DisjointPartition(subsets=subsets, indices=tuple(blocks), parent_size=n)
