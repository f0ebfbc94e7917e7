"""Sample sets and dataset ingestion (CSV, IDX image/label pairs, NPZ cache)."""

from __future__ import annotations

import csv
import gzip
import struct
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import (
    DimensionError,
    DomainError,
    FormatError,
    InvalidSample,
    MissingLabels,
)
from .metrics import normalized_rows

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


@dataclass(frozen=True)
class SampleSet:
    """n samples by d features, with optional integer class labels."""

    features: np.ndarray
    labels: Optional[np.ndarray] = None

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=float)
        if feats.ndim != 2 or feats.shape[0] < 1 or feats.shape[1] < 1:
            raise DimensionError(f"features must be a nonempty 2-D matrix, got shape {feats.shape}")
        if not np.all(np.isfinite(feats)):
            raise InvalidSample("features contain non-finite entries")
        object.__setattr__(self, "features", feats)
        if self.labels is not None:
            labels = np.asarray(self.labels)
            if labels.ndim != 1 or labels.shape[0] != feats.shape[0]:
                raise DimensionError(
                    f"labels must be a length-{feats.shape[0]} vector, got shape {labels.shape}"
                )
            if not np.issubdtype(labels.dtype, np.integer):
                rounded = np.rint(np.asarray(labels, dtype=float))
                if not np.all(np.asarray(labels, dtype=float) == rounded):
                    raise InvalidSample("labels must be integers")
                labels = rounded.astype(np.int64)
            labels = labels.astype(np.int64)
            if np.any(labels < 0):
                raise InvalidSample("labels must be nonnegative")
            object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def num_classes(self) -> int:
        if self.labels is None:
            raise MissingLabels("sample set has no labels")
        return int(self.labels.max()) + 1

    def require_labels(self) -> np.ndarray:
        if self.labels is None:
            raise MissingLabels("sample set has no labels")
        return self.labels

    def take(self, indices) -> "SampleSet":
        idx = np.asarray(indices, dtype=np.intp)
        labels = self.labels[idx] if self.labels is not None else None
        return SampleSet(self.features[idx], labels)


class DatasetFormat(Enum):
    CSV = "csv"
    IDX = "idx"
    NPZ = "npz"


class Normalization(Enum):
    NONE = "none"
    UNIT_L2 = "unit-l2"
    SCALE_1_OVER_255 = "scale-255"


@dataclass(frozen=True)
class DatasetSource:
    """Where and how to read a sample set.

    For IDX, ``path`` is the image file and ``labels_path`` the label file.
    Subsampling draws without replacement under ``subsample_seed`` and keeps
    the selected rows in their original order.
    """

    path: str
    format: DatasetFormat = DatasetFormat.CSV
    labels_path: Optional[str] = None
    label_column: Optional[int] = None
    normalize: Normalization = Normalization.NONE
    subsample: Optional[int] = None
    subsample_seed: int = 0


def infer_format(path: str) -> DatasetFormat:
    suffixes = [s.lower() for s in Path(path).suffixes]
    if ".csv" in suffixes:
        return DatasetFormat.CSV
    if ".npz" in suffixes:
        return DatasetFormat.NPZ
    return DatasetFormat.IDX


def _read_csv(path: str, label_column: Optional[int]) -> SampleSet:
    rows = []
    with open(path, newline="", encoding="utf-8") as handle:
        for record in csv.reader(handle):
            if not record:
                continue
            rows.append(record)
    if not rows:
        raise FormatError(f"{path}: no data rows")
    width = len(rows[0])
    values = np.empty((len(rows), width), dtype=float)
    for i, record in enumerate(rows):
        if len(record) != width:
            raise FormatError(f"{path}: row {i} has {len(record)} fields, expected {width}")
        try:
            values[i] = [float(field) for field in record]
        except ValueError as exc:
            raise FormatError(f"{path}: row {i}: {exc}") from None
    if label_column is None:
        return SampleSet(values)
    col = label_column if label_column >= 0 else width + label_column
    if not 0 <= col < width:
        raise FormatError(f"{path}: label column {label_column} outside width {width}")
    labels = values[:, col]
    features = np.delete(values, col, axis=1)
    if features.shape[1] == 0:
        raise FormatError(f"{path}: no feature columns left after removing the label column")
    return SampleSet(features, labels)


def _open_maybe_gzip(path: str):
    with open(path, "rb") as probe:
        magic = probe.read(2)
    if magic == b"\x1f\x8b":
        return gzip.open(path, "rb")
    return open(path, "rb")


def _read_idx_array(path: str, expected_magic: int) -> np.ndarray:
    with _open_maybe_gzip(path) as handle:
        header = handle.read(4)
        if len(header) != 4:
            raise FormatError(f"{path}: truncated IDX header")
        (magic,) = struct.unpack(">I", header)
        if magic != expected_magic:
            raise FormatError(
                f"{path}: bad IDX magic 0x{magic:08x}, expected 0x{expected_magic:08x}"
            )
        ndim = magic & 0xFF
        dims_raw = handle.read(4 * ndim)
        if len(dims_raw) != 4 * ndim:
            raise FormatError(f"{path}: truncated IDX dimension header")
        dims = struct.unpack(f">{ndim}I", dims_raw)
        count = int(np.prod(dims))
        payload = handle.read(count)
        if len(payload) != count:
            raise FormatError(f"{path}: expected {count} data bytes, found {len(payload)}")
        return np.frombuffer(payload, dtype=np.uint8).reshape(dims)


def _read_idx_pair(images_path: str, labels_path: Optional[str]) -> SampleSet:
    images = _read_idx_array(images_path, IDX_IMAGES_MAGIC)
    features = np.asarray(images, dtype=float).reshape(images.shape[0], -1)
    labels = None
    if labels_path is not None:
        raw = _read_idx_array(labels_path, IDX_LABELS_MAGIC)
        if raw.shape[0] != features.shape[0]:
            raise FormatError(
                f"label count {raw.shape[0]} does not match image count {features.shape[0]}"
            )
        labels = raw.astype(np.int64)
    return SampleSet(features, labels)


def _read_npz(path: str) -> SampleSet:
    try:
        with np.load(path) as bundle:
            if "features" not in bundle:
                raise FormatError(f"{path}: missing 'features' array")
            features = bundle["features"]
            labels = bundle["labels"] if "labels" in bundle else None
    except (OSError, ValueError) as exc:
        raise FormatError(f"{path}: not a readable NPZ bundle ({exc})") from None
    return SampleSet(features, labels)


def save_npz(path: str, samples: SampleSet) -> None:
    """Cache a sample set as an NPZ bundle loadable by load_dataset."""
    arrays = {"features": samples.features}
    if samples.labels is not None:
        arrays["labels"] = samples.labels
    np.savez(path, **arrays)


def load_dataset(source: DatasetSource) -> SampleSet:
    """Read, normalize, and optionally subsample a dataset."""
    if source.format is DatasetFormat.CSV:
        samples = _read_csv(source.path, source.label_column)
    elif source.format is DatasetFormat.IDX:
        samples = _read_idx_pair(source.path, source.labels_path)
    else:
        samples = _read_npz(source.path)

    if source.subsample is not None:
        if not 1 <= source.subsample <= samples.n:
            raise DomainError(
                f"subsample {source.subsample} outside [1, {samples.n}] available rows"
            )
        rng = np.random.default_rng(source.subsample_seed)
        chosen = np.sort(rng.choice(samples.n, size=source.subsample, replace=False))
        samples = samples.take(chosen)

    if source.normalize is Normalization.SCALE_1_OVER_255:
        samples = SampleSet(samples.features / 255.0, samples.labels)
    elif source.normalize is Normalization.UNIT_L2:
        samples = SampleSet(normalized_rows(samples.features), samples.labels)
    return samples
