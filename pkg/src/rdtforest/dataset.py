"""Dataset ingestion, validation and splitting.

Datasets are binary-labeled points over m attributes. Every attribute is
either binary (values in {0, 1}) or continuous with a publicly known
[min, max] range; tree construction only ever looks at those public ranges,
never at the data. Labels are normalized internally to 1 (positive) and 0
(negative).

Supported file formats:

* CSV — one row per point, feature columns plus one label column, optional
  header row, decimal-point reals.
* sparse — ``<label> <idx>:<val> ...`` with 1-based strictly ascending
  indices; missing indices are zero.

A dataset manifest (YAML) bundles the file location, schema declaration,
label mapping and split fractions so experiments are reproducible from one
text file.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
import yaml

from . import rng
from .errors import (
    ConfigError,
    IndexOutOfOrder,
    ParseError,
    SchemaViolation,
    TooFewPoints,
    UnknownLabel,
)

POSITIVE = 1
NEGATIVE = 0

BINARY = "binary"
CONTINUOUS = "continuous"


@dataclass(frozen=True)
class Attribute:
    """One attribute: a name, a kind, and its public value range."""

    name: str
    kind: str
    min: float = 0.0
    max: float = 1.0

    def __post_init__(self):
        if self.kind not in (BINARY, CONTINUOUS):
            raise ConfigError(f"attribute {self.name!r}: unknown kind {self.kind!r}")
        if self.kind == BINARY and (self.min, self.max) != (0.0, 1.0):
            raise ConfigError(f"attribute {self.name!r}: binary range must be [0, 1]")
        if not self.min <= self.max:
            raise ConfigError(f"attribute {self.name!r}: min {self.min} > max {self.max}")


@dataclass(frozen=True)
class AttributeSchema:
    """Ordered attribute declarations; the public side of a dataset."""

    attributes: tuple[Attribute, ...]

    def __post_init__(self):
        if len(self.attributes) < 1:
            raise ConfigError("schema needs at least one attribute")

    @property
    def m(self) -> int:
        return len(self.attributes)

    @cached_property
    def lows(self) -> np.ndarray:
        a = np.array([attr.min for attr in self.attributes], dtype=np.float64)
        a.setflags(write=False)
        return a

    @cached_property
    def highs(self) -> np.ndarray:
        a = np.array([attr.max for attr in self.attributes], dtype=np.float64)
        a.setflags(write=False)
        return a

    @cached_property
    def is_binary(self) -> np.ndarray:
        a = np.array([attr.kind == BINARY for attr in self.attributes], dtype=bool)
        a.setflags(write=False)
        return a

    def canonical(self) -> list[dict]:
        """JSON-friendly form used for serialization and hashing."""
        return [
            {"name": a.name, "kind": a.kind, "min": a.min, "max": a.max}
            for a in self.attributes
        ]

    @staticmethod
    def from_canonical(items: list[dict]) -> "AttributeSchema":
        return AttributeSchema(
            tuple(Attribute(d["name"], d["kind"], float(d["min"]), float(d["max"])) for d in items)
        )

    def validate_point(self, values: np.ndarray) -> None:
        """Raise SchemaViolation unless ``values`` conforms to the schema."""
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (self.m,):
            raise SchemaViolation(f"expected {self.m} values, got shape {values.shape}")
        _check_ranges(self, values[None, :])


def binary_schema(m: int) -> AttributeSchema:
    """Schema of ``m`` binary attributes named x0..x{m-1}."""
    return AttributeSchema(tuple(Attribute(f"x{i}", BINARY) for i in range(m)))


def _check_ranges(schema: AttributeSchema, x: np.ndarray) -> None:
    low_bad = x < schema.lows
    high_bad = x > schema.highs
    if low_bad.any() or high_bad.any():
        r, c = np.argwhere(low_bad | high_bad)[0]
        raise SchemaViolation(
            f"row {r}: value {x[r, c]} outside "
            f"[{schema.lows[c]}, {schema.highs[c]}] for attribute {schema.attributes[c].name!r}"
        )
    binary = schema.is_binary
    if binary.any():
        xb = x[:, binary]
        non01 = (xb != 0.0) & (xb != 1.0)
        if non01.any():
            r, c = np.argwhere(non01)[0]
            name = schema.attributes[np.flatnonzero(binary)[c]].name
            raise SchemaViolation(f"row {r}: binary attribute {name!r} has value {xb[r, c]}")


@dataclass(frozen=True)
class Dataset:
    """Immutable labeled dataset: x is (n, m) float64, y is (n,) in {0, 1}."""

    schema: AttributeSchema
    x: np.ndarray
    y: np.ndarray

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @staticmethod
    def from_arrays(schema: AttributeSchema, x: np.ndarray, y: np.ndarray) -> "Dataset":
        x = np.ascontiguousarray(x, dtype=np.float64)
        y = np.ascontiguousarray(y, dtype=np.uint8)
        if x.ndim != 2 or x.shape[1] != schema.m:
            raise SchemaViolation(f"x must be (n, {schema.m}), got {x.shape}")
        if y.shape != (x.shape[0],):
            raise SchemaViolation(f"y must be ({x.shape[0]},), got {y.shape}")
        if not np.isin(y, (NEGATIVE, POSITIVE)).all():
            raise UnknownLabel("labels must be 0 or 1 after mapping")
        _check_ranges(schema, x)
        x.setflags(write=False)
        y.setflags(write=False)
        return Dataset(schema, x, y)

    def point(self, i: int) -> tuple[np.ndarray, int]:
        return self.x[i], int(self.y[i])

    def subset(self, indices: np.ndarray) -> "Dataset":
        return Dataset.from_arrays(self.schema, self.x[indices], self.y[indices])


@dataclass(frozen=True)
class LabelMap:
    """Mapping from file label tokens to the two internal labels."""

    positive: frozenset[str]
    negative: frozenset[str]

    def __post_init__(self):
        overlap = self.positive & self.negative
        if overlap:
            raise ConfigError(f"tokens mapped to both labels: {sorted(overlap)}")

    def encode(self, token: str) -> int:
        token = token.strip()
        if token in self.positive:
            return POSITIVE
        if token in self.negative:
            return NEGATIVE
        raise UnknownLabel(f"label token {token!r} not in mapping")


DEFAULT_LABELS = LabelMap(frozenset({"1", "+1", "+"}), frozenset({"0", "-1", "-"}))


def load_csv(
    path: str | Path,
    schema: AttributeSchema | None,
    label_column: str | int = -1,
    labels: LabelMap = DEFAULT_LABELS,
    header: bool = False,
    delimiter: str = ",",
) -> Dataset:
    """Load a CSV file of points.

    With ``header=True`` the feature columns are located by the schema's
    attribute names and ``label_column`` is a column name; without a header,
    columns are taken in file order and ``label_column`` is an index
    (negatives count from the end). ``schema=None`` infers one from the data:
    an attribute is binary when all its values are 0/1, continuous with its
    observed [min, max] otherwise — those observed ranges are then treated as
    the public ranges.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        rows = [row for row in reader if row]
    if header:
        if not rows:
            raise ParseError(f"{path}: no rows")
        names, rows = rows[0], rows[1:]
        if isinstance(label_column, int):
            raise ConfigError("label_column must be a name when header=True")
        try:
            label_idx = names.index(label_column)
        except ValueError:
            raise ParseError(f"{path}: no column named {label_column!r}") from None
        if schema is not None:
            try:
                feature_idx = [names.index(a.name) for a in schema.attributes]
            except ValueError as exc:
                raise ParseError(f"{path}: {exc}") from None
        else:
            feature_idx = [i for i in range(len(names)) if i != label_idx]
            feature_names = [names[i] for i in feature_idx]
    else:
        if not rows:
            raise ParseError(f"{path}: no rows")
        if not isinstance(label_column, int):
            raise ConfigError("label_column must be an index when header=False")
        width = len(rows[0])
        label_idx = label_column % width
        feature_idx = [i for i in range(width) if i != label_idx]
        feature_names = [f"x{i}" for i in range(len(feature_idx))]
        names = None

    expected_width = len(feature_idx) + 1 if schema is None else schema.m + 1
    x = np.empty((len(rows), len(feature_idx)), dtype=np.float64)
    y = np.empty(len(rows), dtype=np.uint8)
    for r, row in enumerate(rows):
        if names is None and len(row) != expected_width:
            raise ParseError(f"{path}: row {r}: expected {expected_width} fields, got {len(row)}")
        y[r] = labels.encode(row[label_idx])
        for j, c in enumerate(feature_idx):
            try:
                x[r, j] = float(row[c])
            except (ValueError, IndexError):
                raise ParseError(f"{path}: row {r}, column {c}: bad value") from None

    if schema is None:
        schema = _infer_schema(x, feature_names)
    return Dataset.from_arrays(schema, x, y)


def _infer_schema(x: np.ndarray, names: list[str]) -> AttributeSchema:
    attrs = []
    for j, name in enumerate(names):
        col = x[:, j]
        if np.isin(col, (0.0, 1.0)).all():
            attrs.append(Attribute(name, BINARY))
        else:
            attrs.append(Attribute(name, CONTINUOUS, float(col.min()), float(col.max())))
    return AttributeSchema(tuple(attrs))


def save_csv(ds: Dataset, path: str | Path, pos_token: str = "1", neg_token: str = "0") -> None:
    """Write a dataset back out (label column last, full-precision reals)."""
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        for i in range(ds.n):
            writer.writerow(
                [repr(float(v)) for v in ds.x[i]]
                + [pos_token if ds.y[i] == POSITIVE else neg_token]
            )


def load_sparse(
    path: str | Path,
    n_features: int | None = None,
    labels: LabelMap = DEFAULT_LABELS,
) -> Dataset:
    """Load a sparse ``<label> <idx>:<val> ...`` file (1-based indices).

    Missing indices are filled with 0. The schema is inferred per attribute
    (binary when all values are 0/1), and the observed ranges become the
    public ranges.
    """
    path = Path(path)
    parsed: list[tuple[int, list[tuple[int, float]]]] = []
    max_idx = 0
    with path.open() as fh:
        for r, line in enumerate(fh):
            fields = line.split()
            if not fields:
                continue
            label = labels.encode(fields[0])
            entries = []
            prev = 0
            for field_str in fields[1:]:
                try:
                    idx_str, val_str = field_str.split(":")
                    idx, val = int(idx_str), float(val_str)
                except ValueError:
                    raise ParseError(f"{path}: row {r}: bad field {field_str!r}") from None
                if idx < 1:
                    raise ParseError(f"{path}: row {r}: index {idx} < 1")
                if idx == prev:
                    raise ParseError(f"{path}: row {r}: duplicate index {idx}")
                if idx < prev:
                    raise IndexOutOfOrder(f"{path}: row {r}: index {idx} after {prev}")
                prev = idx
                entries.append((idx, val))
            max_idx = max(max_idx, prev)
            parsed.append((label, entries))
    if not parsed:
        raise ParseError(f"{path}: no rows")
    m = n_features if n_features is not None else max_idx
    if max_idx > m:
        raise ParseError(f"{path}: index {max_idx} exceeds declared feature count {m}")

    x = np.zeros((len(parsed), m), dtype=np.float64)
    y = np.empty(len(parsed), dtype=np.uint8)
    for r, (label, entries) in enumerate(parsed):
        y[r] = label
        for idx, val in entries:
            x[r, idx - 1] = val
    schema = _infer_schema(x, [f"x{i}" for i in range(m)])
    return Dataset.from_arrays(schema, x, y)


@dataclass(frozen=True)
class Split:
    """Disjoint train/validation/test partition of one dataset."""

    train: Dataset
    validation: Dataset
    test: Dataset
    train_idx: np.ndarray = field(repr=False, default=None)
    validation_idx: np.ndarray = field(repr=False, default=None)
    test_idx: np.ndarray = field(repr=False, default=None)


def split(
    ds: Dataset,
    seed: int,
    test_frac: float = 0.1,
    validation_frac: float = 0.1,
) -> Split:
    """Shuffle deterministically and carve off test, then validation.

    test gets floor(test_frac * n) points, validation floor(validation_frac *
    (n - |test|)) of the remainder, train the rest. The same (ds, seed)
    always produces the same partition.
    """
    n = ds.n
    if n < 10:
        raise TooFewPoints(f"need at least 10 points to split, got {n}")
    n_test = math.floor(test_frac * n)
    n_val = math.floor(validation_frac * (n - n_test))
    perm = rng.substream(seed, rng.SPLIT).permutation(n)
    test_idx = np.sort(perm[:n_test])
    val_idx = np.sort(perm[n_test : n_test + n_val])
    train_idx = np.sort(perm[n_test + n_val :])
    return Split(
        train=ds.subset(train_idx),
        validation=ds.subset(val_idx),
        test=ds.subset(test_idx),
        train_idx=train_idx,
        validation_idx=val_idx,
        test_idx=test_idx,
    )


@dataclass(frozen=True)
class DatasetManifest:
    """Parsed dataset manifest: where the data is and how to read it."""

    name: str
    format: str
    path: Path
    header: bool
    label_column: str | int
    labels: LabelMap
    attributes: AttributeSchema | None  # None = infer from data
    n_features: int | None
    test_frac: float
    validation_frac: float
    seed: int

    def load(self) -> Dataset:
        if self.format == "csv":
            return load_csv(
                self.path,
                self.attributes,
                label_column=self.label_column,
                labels=self.labels,
                header=self.header,
            )
        if self.format == "sparse":
            return load_sparse(self.path, n_features=self.n_features, labels=self.labels)
        raise ConfigError(f"unknown dataset format {self.format!r}")


def load_manifest(path: str | Path) -> DatasetManifest:
    """Read a YAML dataset manifest; relative data paths resolve beside it."""
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: manifest must be a mapping")

    fmt = raw.get("format", "csv")
    data_path = Path(raw.get("path", ""))
    if not data_path.is_absolute():
        data_path = path.parent / data_path

    labels_cfg = raw.get("labels", {})
    labels = LabelMap(
        frozenset(str(t) for t in labels_cfg.get("positive", ("1", "+1", "+"))),
        frozenset(str(t) for t in labels_cfg.get("negative", ("0", "-1", "-"))),
    )

    attrs_cfg = raw.get("attributes", "auto")
    if attrs_cfg == "auto" or attrs_cfg is None:
        schema = None
    else:
        schema = AttributeSchema(
            tuple(
                Attribute(
                    str(a["name"]),
                    str(a.get("kind", CONTINUOUS)),
                    float(a.get("min", 0.0)),
                    float(a.get("max", 1.0)),
                )
                for a in attrs_cfg
            )
        )

    split_cfg = raw.get("split", {})
    return DatasetManifest(
        name=str(raw.get("name", path.stem)),
        format=str(fmt),
        path=data_path,
        header=bool(raw.get("header", False)),
        label_column=raw.get("label_column", -1),
        labels=labels,
        attributes=schema,
        n_features=raw.get("n_features"),
        test_frac=float(split_cfg.get("test", 0.1)),
        validation_frac=float(split_cfg.get("validation", 0.1)),
        seed=int(raw.get("seed", 0)),
    )
