"""Engineered features: center of mass, quadrant and edge sums, recurrent
element selection and feature-matrix assembly."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .data import (
    BACK_COLUMNS,
    N_SENSORS,
    SEAT_COLUMNS,
    SENSOR_COLS,
    SENSOR_ROWS,
    Dataset,
    FrameRecord,
    PressureFrame,
    format_float,
)
from .errors import (
    DegenerateLabels,
    MissingTimestamp,
    ParseError,
    SpecError,
    VariantError,
)

MASS_EPS = 1e-9
GRID_CENTROID = (4.5, 4.5)

QUADRANTS = ("tl", "tr", "bl", "br")
EDGES = ("top", "bottom", "left", "right")

_TOP = SENSOR_ROWS <= 4
_LEFT = SENSOR_COLS <= 4
QUADRANT_MASKS = np.array([_TOP & _LEFT, _TOP & ~_LEFT, ~_TOP & _LEFT, ~_TOP & ~_LEFT])
EDGE_MASKS = np.array([SENSOR_ROWS <= 2, SENSOR_ROWS >= 7, SENSOR_COLS <= 2, SENSOR_COLS >= 7])

FEATURE_GROUPS = ("raw", "com", "quadrants", "edges")
RECURRENT_SELECTORS = ("full", "t3", "t234")


def _as_values(frame) -> np.ndarray:
    if isinstance(frame, PressureFrame):
        return frame.values
    return np.asarray(frame, dtype=float)


def com_many(values: np.ndarray):
    """Vectorized center of mass for an (n, 32) array.

    Returns ``(coords, zero_mass)`` where coords is (n, 2) of (row, col).
    Negative readings carry no mass.
    """
    m = np.maximum(np.atleast_2d(values), 0.0)
    total = m.sum(axis=1)
    zero = total < MASS_EPS
    safe = np.where(zero, 1.0, total)
    rows = (m @ SENSOR_ROWS) / safe
    cols = (m @ SENSOR_COLS) / safe
    rows[zero] = GRID_CENTROID[0]
    cols[zero] = GRID_CENTROID[1]
    return np.column_stack([rows, cols]), zero


def center_of_mass(frame) -> tuple[float, float, bool]:
    """Pressure-weighted mean (row, col) of a frame, plus a zero-mass flag.

    A frame with (clamped) total mass below 1e-9 yields the grid centroid
    (4.5, 4.5) with the flag set.
    """
    coords, zero = com_many(_as_values(frame)[None, :])
    return float(coords[0, 0]), float(coords[0, 1]), bool(zero[0])


def quadrant_sums(frame) -> np.ndarray:
    """(TL, TR, BL, BR) sums; each quadrant holds 8 sensors."""
    return QUADRANT_MASKS.astype(float) @ _as_values(frame)


def edge_sums(frame) -> np.ndarray:
    """(top, bottom, left, right) sums over the outer two rows/columns.

    Corner sensors count toward two edges.
    """
    return EDGE_MASKS.astype(float) @ _as_values(frame)


def select_recurrent(ds: Dataset, selector: str = "full") -> Dataset:
    """Pick recurrent elements from a realistic dataset.

    ``t3`` keeps the third snapshot of each event; ``t234`` replaces each
    event by one row holding the element-wise mean of its snapshots 2-4
    (stored with timestamp_index 3).
    """
    if selector not in RECURRENT_SELECTORS:
        raise SpecError(f"recurrent selector must be one of {RECURRENT_SELECTORS}")
    if ds.variant != "realistic":
        raise VariantError("recurrent elements exist only in the realistic variant")
    if selector == "full":
        return ds
    if selector == "t3":
        return ds.filter(lambda r: r.timestamp_index == 3)
    events: dict[tuple, dict[int, FrameRecord]] = {}
    for rec in ds.records:
        key = (rec.participant_id, rec.posture, rec.snapshot_index)
        events.setdefault(key, {})[rec.timestamp_index] = rec
    out = []
    for key, by_t in events.items():
        missing = [t for t in (2, 3, 4) if t not in by_t]
        if missing:
            raise MissingTimestamp(f"event {key} lacks timestamps {missing}")
        stack = np.vstack([by_t[t].sensor_vector() for t in (2, 3, 4)])
        mean = stack.sum(axis=0) / 3.0
        rec3 = by_t[3]
        out.append(rec3.with_values(mean))
    return Dataset(tuple(out), ds.variant, ds.provenance)


@dataclass(frozen=True)
class FeatureSpec:
    include_raw: bool = True
    include_com: bool = True
    include_quadrants: bool = True
    include_edges: bool = True
    mats: str = "seat"
    whitelist: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.mats not in ("seat", "back", "both"):
            raise SpecError(f"mats must be seat, back or both, not {self.mats!r}")
        if not (self.include_raw or self.include_com or self.include_quadrants or self.include_edges):
            raise SpecError("at least one feature group must be enabled")
        if self.whitelist is not None:
            object.__setattr__(self, "whitelist", tuple(self.whitelist))
            if not self.whitelist:
                raise SpecError("whitelist must not be empty")

    @classmethod
    def from_groups(cls, groups: Sequence[str], mats: str = "seat", whitelist=None):
        groups = set(groups)
        unknown = groups - set(FEATURE_GROUPS)
        if unknown:
            raise SpecError(f"unknown feature groups {sorted(unknown)}")
        return cls("raw" in groups, "com" in groups, "quadrants" in groups,
                   "edges" in groups, mats, whitelist)

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureSpec":
        d = dict(d)
        if "groups" in d:
            return cls.from_groups(d.pop("groups"), d.pop("mats", "seat"), d.pop("whitelist", None))
        try:
            return cls(**d)
        except TypeError as exc:
            raise SpecError(str(exc)) from None

    def to_dict(self) -> dict:
        return {
            "include_raw": self.include_raw,
            "include_com": self.include_com,
            "include_quadrants": self.include_quadrants,
            "include_edges": self.include_edges,
            "mats": self.mats,
            "whitelist": None if self.whitelist is None else list(self.whitelist),
        }

    @property
    def mat_list(self) -> tuple[str, ...]:
        return ("seat", "back") if self.mats == "both" else (self.mats,)


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    names: tuple[str, ...]
    X: np.ndarray
    labels: tuple[str, ...]
    groups: tuple[str, ...] = field(default=())

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim != 2:
            X = X.reshape(len(self.labels), -1)
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "labels", tuple(self.labels))
        groups = tuple(self.groups) if self.groups else tuple(str(i) for i in range(X.shape[0]))
        object.__setattr__(self, "groups", groups)
        X.setflags(write=False)
        object.__setattr__(self, "X", X)
        if X.shape[1] != len(self.names):
            raise SpecError(f"{X.shape[1]} columns but {len(self.names)} names")
        if X.shape[0] != len(self.labels) or X.shape[0] != len(self.groups):
            raise SpecError("labels and groups must align with rows")
        if not np.all(np.isfinite(X)):
            raise SpecError("feature values must be finite")

    def __len__(self):
        return self.X.shape[0]

    def __eq__(self, other):
        if not isinstance(other, FeatureMatrix):
            return NotImplemented
        return (self.names == other.names and self.labels == other.labels
                and self.groups == other.groups and np.array_equal(self.X, other.X))

    def take(self, rows) -> "FeatureMatrix":
        rows = np.asarray(rows, dtype=int)
        return FeatureMatrix(
            self.names, self.X[rows],
            tuple(self.labels[i] for i in rows), tuple(self.groups[i] for i in rows),
        )

    def select(self, names: Sequence[str]) -> "FeatureMatrix":
        idx = []
        for n in names:
            if n not in self.names:
                raise SpecError(f"unknown feature {n!r}")
            idx.append(self.names.index(n))
        return FeatureMatrix(tuple(names), self.X[:, idx], self.labels, self.groups)

    def column(self, name: str) -> np.ndarray:
        return self.X[:, self.names.index(name)]


def feature_names(spec: FeatureSpec) -> tuple[str, ...]:
    """Column names for ``spec`` in canonical order, before whitelisting."""
    mats = spec.mat_list
    names: list[str] = []
    if spec.include_raw:
        if "seat" in mats:
            names += SEAT_COLUMNS
        if "back" in mats:
            names += BACK_COLUMNS
    if spec.include_com:
        for m in mats:
            names += [f"{m}_com_row", f"{m}_com_col"]
    if spec.include_quadrants:
        for m in mats:
            names += [f"{m}_q_{q}" for q in QUADRANTS]
    if spec.include_edges:
        for m in mats:
            names += [f"{m}_edge_{e}" for e in EDGES]
    return tuple(names)


def _group_key(rec: FrameRecord, variant: str) -> str:
    if variant == "controlled":
        return f"{rec.participant_id}/{rec.posture}"
    return f"{rec.participant_id}/{rec.posture}/{rec.snapshot_index}"


def build_feature_matrix(ds: Dataset, spec: FeatureSpec | None = None) -> FeatureMatrix:
    spec = spec or FeatureSpec()
    if "back" in spec.mat_list and not ds.has_back:
        raise SpecError("back-mat features requested for a seat-only dataset")
    values = ds.sensor_matrix()
    blocks = {"seat": values[:, :N_SENSORS]}
    if ds.has_back:
        blocks["back"] = values[:, N_SENSORS:]
    parts = []
    mats = spec.mat_list
    if spec.include_raw:
        parts += [blocks[m] for m in mats]
    if spec.include_com:
        parts += [com_many(blocks[m])[0] for m in mats]
    if spec.include_quadrants:
        parts += [blocks[m] @ QUADRANT_MASKS.T.astype(float) for m in mats]
    if spec.include_edges:
        parts += [blocks[m] @ EDGE_MASKS.T.astype(float) for m in mats]
    names = feature_names(spec)
    X = np.hstack(parts) if len(ds) else np.zeros((0, len(names)))
    fm = FeatureMatrix(
        names, X, tuple(ds.labels()), tuple(_group_key(r, ds.variant) for r in ds.records)
    )
    if spec.whitelist is not None:
        fm = fm.select(spec.whitelist)
    return fm


def feature_importance(fm: FeatureMatrix, params: dict | None = None, seed: int = 0):
    """Rank features by mean impurity decrease across a random forest.

    Returns ``[(name, score), ...]`` sorted by descending score (ties by
    column order); scores sum to 1.
    """
    from .classifiers.forest import RandomForest

    if len(set(fm.labels)) < 2:
        raise DegenerateLabels("feature importance needs at least two classes")
    classes = sorted(set(fm.labels))
    y = np.array([classes.index(l) for l in fm.labels])
    forest = RandomForest(**(params or {}))
    forest.fit(fm.X, y, len(classes), seed)
    scores = forest.feature_importances()
    order = sorted(range(len(fm.names)), key=lambda i: (-scores[i], i))
    return [(fm.names[i], float(scores[i])) for i in order]


def dumps_feature_matrix(fm: FeatureMatrix) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(fm.names) + ["label", "group"])
    for row, label, group in zip(fm.X, fm.labels, fm.groups):
        w.writerow([format_float(v) for v in row] + [label, group])
    return buf.getvalue()


def save_feature_matrix(fm: FeatureMatrix, dest) -> None:
    Path(dest).write_bytes(dumps_feature_matrix(fm).encode("utf-8"))


def load_feature_matrix(source) -> FeatureMatrix:
    with Path(source).open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("missing header row", 1) from None
        if header[-2:] != ["label", "group"]:
            raise ParseError("feature file must end with label,group columns", 1)
        names = header[:-2]
        rows, labels, groups = [], [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(row)}", lineno)
            try:
                rows.append([float(t) for t in row[:-2]])
            except ValueError as exc:
                raise ParseError(str(exc), lineno) from None
            labels.append(row[-2])
            groups.append(row[-1])
    X = np.array(rows, dtype=float).reshape(len(rows), len(names))
    return FeatureMatrix(tuple(names), X, tuple(labels), tuple(groups))
