"""Domain types, dataset validation and the line-delimited dataset format.

A point pattern is a finite (multi)set of ``d``-dimensional feature vectors and
is stored as a read-only ``(m, d)`` float array. Empty patterns (``m == 0``) are
legal everywhere.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Hashable, Iterable, Sequence

import numpy as np

from .exceptions import (
    DimensionMismatchError,
    EmptyDatasetError,
    LabelLengthMismatchError,
    NonFiniteCoordinateError,
    ParseError,
)


def _as_point_array(points, dim=None) -> np.ndarray:
    try:
        arr = np.asarray(points, dtype=float)
    except ValueError as exc:  # ragged nested lists
        raise DimensionMismatchError(f"vectors of unequal length: {exc}") from None
    if arr.ndim == 1 and arr.size == 0:
        arr = arr.reshape(0, dim if dim is not None else 0)
    if arr.ndim != 2:
        raise DimensionMismatchError(
            f"a point pattern must be a 2-D (n_points, dim) array, got shape {arr.shape}")
    if arr.shape[0] == 0 and arr.shape[1] == 0 and dim is not None:
        arr = arr.reshape(0, dim)
    return arr


class PointPattern:
    """Immutable finite multiset of feature vectors.

    ``points`` is anything convertible to an ``(m, d)`` float array. Pass ``dim``
    when constructing an empty pattern so its dimension is known.
    """

    __slots__ = ("_points",)

    def __init__(self, points=(), dim=None):
        arr = np.array(_as_point_array(points, dim), dtype=float, copy=True)
        if dim is not None and arr.shape[1] != dim:
            raise DimensionMismatchError(
                f"pattern has dimension {arr.shape[1]}, expected {dim}")
        arr.setflags(write=False)
        self._points = arr

    @property
    def points(self) -> np.ndarray:
        return self._points

    @property
    def dim(self) -> int:
        return self._points.shape[1]

    @property
    def cardinality(self) -> int:
        return self._points.shape[0]

    def __len__(self):
        return self._points.shape[0]

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self._points
        return self._points.astype(dtype)

    def __eq__(self, other):
        if not isinstance(other, PointPattern):
            return NotImplemented
        return (self._points.shape == other._points.shape
                and bool(np.array_equal(self._points, other._points)))

    def __hash__(self):
        return hash((self._points.shape, self._points.tobytes()))

    def __repr__(self):
        return f"PointPattern(cardinality={self.cardinality}, dim={self.dim})"


@dataclass(frozen=True, eq=True)
class PatternDataset:
    """Ordered collection of point patterns, optionally labelled.

    Construction only coerces types; call :func:`validate_dataset` (or use
    :meth:`from_patterns`) to enforce the invariants.
    """

    patterns: tuple
    dim: int
    labels: tuple | None = None
    ids: tuple | None = None

    def __post_init__(self):
        pats = tuple(p if isinstance(p, PointPattern) else PointPattern(p, dim=self.dim)
                     for p in self.patterns)
        object.__setattr__(self, "patterns", pats)
        object.__setattr__(self, "dim", int(self.dim))
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(self.labels))
        if self.ids is None:
            object.__setattr__(self, "ids", tuple(str(i) for i in range(len(pats))))
        else:
            object.__setattr__(self, "ids", tuple(str(i) for i in self.ids))

    @classmethod
    def from_patterns(cls, patterns: Iterable, labels=None, ids=None, dim=None) -> "PatternDataset":
        """Build and validate a dataset, inferring ``dim`` from the first non-empty pattern."""
        arrays = [_as_point_array(p.points if isinstance(p, PointPattern) else p, dim)
                  for p in patterns]
        if dim is None:
            dim = next((a.shape[1] for a in arrays if a.shape[0] > 0), None)
            if dim is None:
                dim = next((a.shape[1] for a in arrays if a.shape[1] > 0), 1)
        arrays = [a.reshape(0, dim) if a.shape[0] == 0 else a for a in arrays]
        for n, a in enumerate(arrays):
            if a.shape[1] != dim:
                raise DimensionMismatchError(
                    f"pattern {n} has dimension {a.shape[1]}, dataset dimension is {dim}")
        return validate_dataset(cls(tuple(arrays), dim, labels, ids))

    def __len__(self):
        return len(self.patterns)

    def __getitem__(self, index) -> PointPattern:
        return self.patterns[index]

    @property
    def cardinalities(self) -> np.ndarray:
        return np.array([len(p) for p in self.patterns], dtype=np.int64)

    def arrays(self) -> list[np.ndarray]:
        return [p.points for p in self.patterns]


@dataclass(frozen=True)
class ClusteringResult:
    """Hard labels plus whatever else the clustering method produced."""

    hard_labels: np.ndarray
    memberships: np.ndarray | None = None
    exemplars: np.ndarray | None = None
    diagnostics: dict[str, Any] = field(default_factory=dict)
    model: Any = None

    def __post_init__(self):
        labels = np.asarray(self.hard_labels, dtype=np.int64)
        labels.setflags(write=False)
        object.__setattr__(self, "hard_labels", labels)
        if labels.ndim != 1:
            raise ValueError("hard_labels must be one-dimensional")
        n_clusters = None
        if self.memberships is not None:
            m = np.asarray(self.memberships, dtype=float)
            if m.shape[0] != labels.shape[0]:
                raise ValueError("memberships must have one row per pattern")
            if not np.allclose(m.sum(axis=1), 1.0, rtol=0, atol=1e-9):
                raise ValueError("membership rows must sum to one")
            m.setflags(write=False)
            object.__setattr__(self, "memberships", m)
            n_clusters = m.shape[1]
        if self.exemplars is not None:
            ex = np.asarray(self.exemplars, dtype=np.int64)
            ex.setflags(write=False)
            object.__setattr__(self, "exemplars", ex)
            n_clusters = ex.shape[0]
        if labels.size and n_clusters is not None:
            if labels.min() < 0 or labels.max() >= n_clusters:
                raise ValueError("every hard label must index a valid cluster")

    @property
    def n_clusters(self) -> int:
        if self.memberships is not None:
            return self.memberships.shape[1]
        if self.exemplars is not None:
            return len(self.exemplars)
        return int(self.hard_labels.max()) + 1 if self.hard_labels.size else 0


def validate_dataset(raw: PatternDataset) -> PatternDataset:
    """Return ``raw`` unchanged if every dataset invariant holds, else raise."""
    if len(raw.patterns) < 1:
        raise EmptyDatasetError("a dataset needs at least one pattern")
    if raw.dim < 1:
        raise DimensionMismatchError(f"dimension must be positive, got {raw.dim}")
    for n, p in enumerate(raw.patterns):
        if p.dim != raw.dim:
            raise DimensionMismatchError(
                f"pattern {n} has dimension {p.dim}, dataset dimension is {raw.dim}")
        if not np.all(np.isfinite(p.points)):
            raise NonFiniteCoordinateError(f"pattern {n} has a non-finite coordinate")
    if raw.labels is not None and len(raw.labels) != len(raw.patterns):
        raise LabelLengthMismatchError(
            f"{len(raw.labels)} labels for {len(raw.patterns)} patterns")
    if len(raw.ids) != len(raw.patterns):
        raise LabelLengthMismatchError(f"{len(raw.ids)} ids for {len(raw.patterns)} patterns")
    if len(set(raw.ids)) != len(raw.ids):
        raise ParseError("pattern ids must be unique")
    return raw


# -- line-delimited dataset format ---------------------------------------

def _record_line(pid: str, points: np.ndarray, label: Hashable | None) -> str:
    # repr() of a Python float is the shortest string that round-trips exactly
    rec: dict[str, Any] = {"id": pid, "points": [[float(v) for v in row] for row in points]}
    if points.shape[0] == 0:
        rec["dim"] = int(points.shape[1])  # an empty list alone cannot carry the dimension
    if label is not None:
        rec["label"] = str(label)
    return json.dumps(rec, allow_nan=False, separators=(",", ":"))


def write_dataset(dataset: PatternDataset, path) -> None:
    validate_dataset(dataset)
    labels = dataset.labels if dataset.labels is not None else [None] * len(dataset)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for pid, pat, lab in zip(dataset.ids, dataset.patterns, labels):
            fh.write(_record_line(pid, pat.points, lab))
            fh.write("\n")


def read_dataset(path) -> PatternDataset:
    """Parse a dataset file.

    The dimension is taken from the first non-empty pattern. Empty patterns may
    carry an optional ``dim`` field, used only when every pattern is empty.
    """
    ids, arrays, labels = [], [], []
    dim = None
    empty_dim = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON ({exc.msg})", lineno) from None
            if not isinstance(rec, dict) or "points" not in rec or "id" not in rec:
                raise ParseError("record needs 'id' and 'points' fields", lineno)
            pts = rec["points"]
            if (not isinstance(pts, list)
                    or not all(isinstance(v, list) for v in pts)
                    or not all(isinstance(x, (int, float)) and not isinstance(x, bool)
                               for v in pts for x in v)):
                raise ParseError("'points' must be an array of arrays of numbers", lineno)
            try:
                arr = _as_point_array(pts, dim)
            except DimensionMismatchError as exc:
                raise ParseError(str(exc), lineno) from None
            declared = rec.get("dim")
            if declared is not None:
                if isinstance(declared, bool) or not isinstance(declared, int) or declared < 1:
                    raise ParseError("'dim' must be a positive integer", lineno)
                if arr.shape[0] > 0 and arr.shape[1] != declared:
                    raise ParseError(f"'dim' is {declared} but points have dimension {arr.shape[1]}",
                                     lineno)
                if empty_dim is None:
                    empty_dim = declared
            if arr.shape[0] > 0:
                if dim is None:
                    dim = arr.shape[1]
                elif arr.shape[1] != dim:
                    raise ParseError(
                        f"pattern dimension {arr.shape[1]} differs from dataset dimension {dim}",
                        lineno)
                if arr.shape[1] == 0:
                    raise ParseError("points must have at least one coordinate", lineno)
            if not np.all(np.isfinite(arr)):
                raise ParseError("non-finite coordinate", lineno)
            label = rec.get("label")
            if label is not None and not isinstance(label, str):
                raise ParseError("'label' must be a string", lineno)
            ids.append(str(rec["id"]))
            arrays.append(arr)
            labels.append(label)
    if not arrays:
        raise EmptyDatasetError(f"{path}: no records")
    has_label = [lab is not None for lab in labels]
    if any(has_label) and not all(has_label):
        missing = has_label.index(False) + 1
        raise ParseError("labels must be given for every record or none", missing)
    dim = dim or empty_dim or 1
    arrays = [a.reshape(0, dim) if a.shape[0] == 0 else a for a in arrays]
    return validate_dataset(
        PatternDataset(tuple(arrays), dim, tuple(labels) if any(has_label) else None, tuple(ids)))


# -- labels CSV (``id,label``) --------------------------------------------

def write_labels(path, ids: Sequence[str], labels: Sequence) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", "label"])
        for pid, lab in zip(ids, labels):
            writer.writerow([pid, lab])


def read_labels(path) -> dict[str, str]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0]] != ["id", "label"]:
        raise ParseError("labels file must start with an 'id,label' header", 1)
    out: dict[str, str] = {}
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 2:
            raise ParseError("expected two columns", lineno)
        if row[0] in out:
            raise ParseError(f"duplicate id {row[0]!r}", lineno)
        out[row[0]] = row[1]
    return out
