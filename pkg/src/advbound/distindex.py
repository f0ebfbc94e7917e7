"""Row-sorted pairwise distance structures and their incremental condensing.

The greedy sphere search never touches raw features once distances exist; it
works entirely on a SortedDistanceIndex and, per round, on CondensedView rows
from which already-absorbed samples have been deleted. Removal positions come
from the inverse location index, so condensing costs O(n^2) instead of a
re-sort.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .datasets import SampleSet
from .errors import DimensionError, FormatError, MetricMismatch
from .metrics import MetricKind, MetricSpace

CACHE_MAGIC = b"ADVD"
CACHE_VERSION = 1

_KIND_CODES = {
    MetricKind.L2: 0,
    MetricKind.TRACE_AMPLITUDE: 1,
    MetricKind.TRACE_ANGLE: 2,
}
_CODE_KINDS = {code: kind for kind, code in _KIND_CODES.items()}


@dataclass(frozen=True)
class SortedDistanceIndex:
    """Pairwise distances plus the sorted/permutation/location triple.

    dist[i, j] is the metric distance between samples i and j. sorted is the
    row-ascending copy, perm maps sorted positions back to original columns,
    and loc is the row-wise inverse: loc[i, perm[i, j]] = j.
    """

    dist: np.ndarray
    sorted: np.ndarray
    perm: np.ndarray
    loc: np.ndarray

    @property
    def n(self) -> int:
        return self.dist.shape[0]


@dataclass(frozen=True)
class CondensedView:
    """Per-center ascending distances to the samples outside a removed set.

    rows[i] holds the distances from center i to every surviving sample,
    still ascending; survivors[i] holds the matching original sample indices.
    """

    rows: np.ndarray
    survivors: np.ndarray


def sort_rows(dist) -> tuple[np.ndarray, np.ndarray]:
    """Row-ascending sort with ties broken by original column index."""
    matrix = np.asarray(dist, dtype=float)
    if matrix.ndim != 2:
        raise DimensionError(f"expected a 2-D array of rows, got shape {matrix.shape}")
    perm = np.argsort(matrix, axis=1, kind="stable")
    ordered = np.take_along_axis(matrix, perm, axis=1)
    return ordered, perm


def location_index(perm) -> np.ndarray:
    """Inverse of each permutation row: loc[i, perm[i, j]] = j."""
    p = np.asarray(perm, dtype=np.intp)
    if p.ndim != 2:
        raise DimensionError(f"expected a 2-D index matrix, got shape {p.shape}")
    n_rows, n_cols = p.shape
    if np.any(p < 0) or np.any(p >= n_cols):
        raise IndexError("permutation entries out of range")
    loc = np.full((n_rows, n_cols), -1, dtype=np.intp)
    loc[np.arange(n_rows)[:, None], p] = np.arange(n_cols)[None, :]
    if np.any(loc < 0):
        raise IndexError("a row of the index matrix is not a permutation")
    return loc


def pairwise_distances(samples: SampleSet, metric: MetricSpace) -> SortedDistanceIndex:
    """Build the full index for a sample set under one metric."""
    dist = metric.pairwise(samples.features)
    return index_from_matrix(dist)


def index_from_matrix(dist: np.ndarray) -> SortedDistanceIndex:
    dist = np.asarray(dist, dtype=float)
    if dist.ndim != 2 or dist.shape[0] != dist.shape[1]:
        raise DimensionError(f"expected a square distance matrix, got shape {dist.shape}")
    ordered, perm = sort_rows(dist)
    return SortedDistanceIndex(dist=dist, sorted=ordered, perm=perm, loc=location_index(perm))


def condense(index: SortedDistanceIndex, removed) -> CondensedView:
    """Delete the removed samples from every sorted row.

    Equivalent to re-sorting each row over the survivors, but done by masking
    the sorted positions loc[i, k] for each removed sample k.
    """
    n = index.n
    removed_arr = np.unique(np.asarray(sorted(removed), dtype=np.intp)) if len(removed) else \
        np.empty(0, dtype=np.intp)
    if removed_arr.size and (removed_arr[0] < 0 or removed_arr[-1] >= n):
        raise IndexError(f"removed indices outside [0, {n})")
    keep = np.ones((n, n), dtype=bool)
    if removed_arr.size:
        keep[np.arange(n)[:, None], index.loc[:, removed_arr]] = False
    width = n - removed_arr.size
    rows = index.sorted[keep].reshape(n, width)
    survivors = index.perm[keep].reshape(n, width)
    return CondensedView(rows=rows, survivors=survivors)


def condense_view(view: CondensedView, removed) -> CondensedView:
    """Condense further: drop additional samples from an existing view."""
    removed_arr = np.asarray(sorted(removed), dtype=np.intp)
    keep = ~np.isin(view.survivors, removed_arr)
    counts = keep.sum(axis=1)
    width = int(counts[0]) if counts.size else 0
    if np.any(counts != width):
        raise IndexError("removed set must drop the same samples from every row")
    rows = view.rows[keep].reshape(-1, width)
    survivors = view.survivors[keep].reshape(-1, width)
    return CondensedView(rows=rows, survivors=survivors)


def find_rank(row, threshold: float) -> int:
    """Number of elements <= threshold in an ascending row, by bisection."""
    arr = np.asarray(row, dtype=float)
    return int(np.searchsorted(arr, threshold, side="right"))


def save_distance_cache(path: str, dist: np.ndarray, kind: MetricKind) -> None:
    """Write a distance matrix to the binary cache format.

    Layout, little-endian: magic "ADVD", u32 version, u64 n, u8 metric kind
    (0 = l2, 1 = trace-amplitude, 2 = trace-angle), then n^2 float64 values
    row-major.
    """
    matrix = np.ascontiguousarray(np.asarray(dist, dtype="<f8"))
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {matrix.shape}")
    with open(path, "wb") as handle:
        handle.write(CACHE_MAGIC)
        handle.write(struct.pack("<IQB", CACHE_VERSION, matrix.shape[0], _KIND_CODES[kind]))
        handle.write(matrix.tobytes())


def load_distance_cache(path: str, expected_kind: MetricKind | None = None) -> tuple[np.ndarray, MetricKind]:
    """Read a cached distance matrix, checking magic, version, and metric."""
    with open(path, "rb") as handle:
        magic = handle.read(4)
        if magic != CACHE_MAGIC:
            raise FormatError(f"{path}: bad cache magic {magic!r}")
        header = handle.read(13)
        if len(header) != 13:
            raise FormatError(f"{path}: truncated cache header")
        version, n, code = struct.unpack("<IQB", header)
        if version != CACHE_VERSION:
            raise FormatError(f"{path}: unsupported cache version {version}")
        if code not in _CODE_KINDS:
            raise FormatError(f"{path}: unknown metric kind code {code}")
        kind = _CODE_KINDS[code]
        payload = handle.read(8 * n * n)
        if len(payload) != 8 * n * n:
            raise FormatError(f"{path}: expected {8 * n * n} payload bytes")
    if expected_kind is not None and kind is not expected_kind:
        raise MetricMismatch(f"{path}: cache holds {kind.value} distances, expected {expected_kind.value}")
    dist = np.frombuffer(payload, dtype="<f8").astype(float).reshape(n, n)
    return dist, kind
