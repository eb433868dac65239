"""Domain types for chair pressure data, the 8x8 grid projection and CSV I/O.

Each mat (seat or backrest) carries 32 sensors laid out on a checkerboard
of an 8x8 grid: a cell ``(row, col)`` (1-based) is occupied iff
``row + col`` is even. ``SENSOR_POSITIONS[i]`` gives the cell of sensor ``i``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    InvariantViolation,
    NonZeroUnoccupiedCell,
    ParseError,
    SchemaMismatch,
)

N_SENSORS = 32
GRID_SIZE = 8

POSTURES = ("back", "empty", "left", "right", "front", "still")
REALISTIC_POSTURES = ("back", "left", "right", "front", "still")
AGE_GROUPS = ("young", "senior", "unspecified")
VARIANTS = ("controlled", "realistic")
MATS = ("seat", "back")

# Sensor index laid out on the 8x8 grid, row by row; None marks an empty cell.
_LAYOUT = (
    (16, None, 31, None, 9, None, 14, None),
    (None, 24, None, 23, None, 1, None, 12),
    (18, None, 29, None, 11, None, 10, None),
    (None, 26, None, 21, None, 3, None, 8),
    (20, None, 27, None, 15, None, 6, None),
    (None, 28, None, 17, None, 5, None, 4),
    (22, None, 25, None, 13, None, 2, None),
    (None, 30, None, 19, None, 7, None, 0),
)


def _positions():
    pos = [None] * N_SENSORS
    for r, row in enumerate(_LAYOUT, start=1):
        for c, idx in enumerate(row, start=1):
            if idx is not None:
                pos[idx] = (r, c)
    return tuple(pos)


SENSOR_POSITIONS: tuple[tuple[int, int], ...] = _positions()
SENSOR_ROWS = np.array([p[0] for p in SENSOR_POSITIONS], dtype=float)
SENSOR_COLS = np.array([p[1] for p in SENSOR_POSITIONS], dtype=float)
_ROW_IDX = SENSOR_ROWS.astype(int) - 1
_COL_IDX = SENSOR_COLS.astype(int) - 1


def sensor_at(row: int, col: int) -> int | None:
    """Sensor index at the 1-based grid cell, or None for an empty cell."""
    return _LAYOUT[row - 1][col - 1]


def is_occupied(row: int, col: int) -> bool:
    return (row + col) % 2 == 0


SEAT_COLUMNS = tuple(f"s{i:02d}" for i in range(N_SENSORS))
BACK_COLUMNS = tuple(f"b{i:02d}" for i in range(N_SENSORS))
META_COLUMNS = (
    "participant_id",
    "age_group",
    "variant",
    "posture",
    "timestamp_index",
    "snapshot_index",
)
CSV_COLUMNS = META_COLUMNS + SEAT_COLUMNS + BACK_COLUMNS


@dataclass(frozen=True, eq=False)
class PressureFrame:
    """32 readings from one mat.

    Raw frames are non-negative; normalized frames may be negative.
    The stored array is read-only.
    """

    mat: str
    values: np.ndarray

    def __post_init__(self):
        if self.mat not in MATS:
            raise InvariantViolation(f"unknown mat {self.mat!r}")
        v = np.array(self.values, dtype=float).reshape(-1)
        if v.shape != (N_SENSORS,):
            raise InvariantViolation(f"expected {N_SENSORS} values, got {v.size}")
        if not np.all(np.isfinite(v)):
            raise InvariantViolation("frame values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __getitem__(self, index):
        return self.values[index]

    def cell(self, row: int, col: int) -> float:
        idx = sensor_at(row, col)
        return 0.0 if idx is None else float(self.values[idx])

    @property
    def is_raw(self) -> bool:
        return bool(np.all(self.values >= 0))

    def __eq__(self, other):
        if not isinstance(other, PressureFrame):
            return NotImplemented
        return self.mat == other.mat and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash((self.mat, self.values.tobytes()))

    def __repr__(self):
        return f"PressureFrame(mat={self.mat!r}, sum={self.values.sum():.4g})"


def map_to_grid(frame: PressureFrame) -> np.ndarray:
    """Project a frame onto an 8x8 grid; empty cells hold 0."""
    grid = np.zeros((GRID_SIZE, GRID_SIZE))
    grid[_ROW_IDX, _COL_IDX] = frame.values
    return grid


def grid_to_frame(grid, mat: str = "seat") -> PressureFrame:
    """Inverse of :func:`map_to_grid`.

    Raises NonZeroUnoccupiedCell if any empty cell carries a non-zero value.
    """
    g = np.asarray(grid, dtype=float)
    if g.shape != (GRID_SIZE, GRID_SIZE):
        raise InvariantViolation(f"expected an 8x8 grid, got shape {g.shape}")
    for r in range(GRID_SIZE):
        for c in range(GRID_SIZE):
            if (r + c) % 2 == 1 and g[r, c] != 0:
                raise NonZeroUnoccupiedCell(
                    f"cell ({r + 1},{c + 1}) is unoccupied but holds {g[r, c]!r}"
                )
    return PressureFrame(mat, g[_ROW_IDX, _COL_IDX])


@dataclass(frozen=True)
class FrameRecord:
    """One labeled observation from the chair."""

    participant_id: str
    age_group: str
    posture: str
    timestamp_index: int
    snapshot_index: int
    seat: PressureFrame
    back: PressureFrame | None = None

    def __post_init__(self):
        if self.posture not in POSTURES:
            raise InvariantViolation(f"unknown posture {self.posture!r}")
        if self.age_group not in AGE_GROUPS:
            raise InvariantViolation(f"unknown age group {self.age_group!r}")
        if self.seat.mat != "seat":
            raise InvariantViolation("seat frame must have mat='seat'")
        if self.back is not None and self.back.mat != "back":
            raise InvariantViolation("back frame must have mat='back'")
        if self.snapshot_index < 0:
            raise InvariantViolation("snapshot_index must be >= 0")
        if not 0 <= self.timestamp_index <= 5:
            raise InvariantViolation("timestamp_index must be in 0..5")

    @property
    def variant(self) -> str:
        return "controlled" if self.back is None else "realistic"

    def sensor_vector(self) -> np.ndarray:
        """Seat readings followed by back readings (if present)."""
        if self.back is None:
            return self.seat.values
        return np.concatenate([self.seat.values, self.back.values])

    def with_values(self, values) -> "FrameRecord":
        """Copy of this record carrying new sensor values (same layout)."""
        values = np.asarray(values, dtype=float)
        back = None
        if self.back is not None:
            back = PressureFrame("back", values[N_SENSORS:])
        return FrameRecord(
            self.participant_id,
            self.age_group,
            self.posture,
            self.timestamp_index,
            self.snapshot_index,
            PressureFrame("seat", values[:N_SENSORS]),
            back,
        )


def _check_record(rec: FrameRecord, variant: str):
    if variant == "controlled":
        if rec.back is not None:
            raise InvariantViolation("controlled records must not carry a back frame")
    else:
        if rec.back is None:
            raise InvariantViolation("realistic records must carry a back frame")
        if rec.posture == "empty":
            raise InvariantViolation("realistic dataset cannot contain 'empty'")
        if not 1 <= rec.timestamp_index <= 5:
            raise InvariantViolation("realistic timestamp_index must be in 1..5")


@dataclass(frozen=True)
class Dataset:
    records: tuple[FrameRecord, ...]
    variant: str
    provenance: str = field(default="", compare=False)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise InvariantViolation(f"unknown variant {self.variant!r}")
        recs = tuple(self.records)
        for rec in recs:
            _check_record(rec, self.variant)
        object.__setattr__(self, "records", recs)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def has_back(self) -> bool:
        return self.variant == "realistic"

    def sensor_matrix(self) -> np.ndarray:
        """(n, 32) or (n, 64) array of sensor readings."""
        width = 2 * N_SENSORS if self.has_back else N_SENSORS
        if not self.records:
            return np.zeros((0, width))
        return np.vstack([r.sensor_vector() for r in self.records])

    def labels(self) -> list[str]:
        return [r.posture for r in self.records]

    def participants(self) -> list[str]:
        """Participant ids in first-appearance order."""
        return list(dict.fromkeys(r.participant_id for r in self.records))

    def filter(self, predicate) -> "Dataset":
        return Dataset(
            tuple(r for r in self.records if predicate(r)),
            self.variant,
            self.provenance,
        )

    def replace_values(self, matrix) -> "Dataset":
        """Dataset with the same records but new sensor values, row-aligned."""
        matrix = np.asarray(matrix, dtype=float)
        if matrix.shape[0] != len(self.records):
            raise InvariantViolation("value matrix row count does not match records")
        return Dataset(
            tuple(r.with_values(v) for r, v in zip(self.records, matrix)),
            self.variant,
            self.provenance,
        )


def prune_raw_columns(
    raw_row: Mapping[str, object],
    field_map: Mapping[str, str] | None = None,
    passthrough: Sequence[str] = (
        "participant_id",
        "age_group",
        "timestamp_index",
        "snapshot_index",
    ),
) -> dict[str, object]:
    """Keep the 64 sensor fields and the posture label of a raw row.

    ``field_map`` maps canonical names (``s00``..``s31``, ``b00``..``b31``,
    ``posture``) to the names used in the raw file. Canonical names are
    accepted directly, so pruning an already pruned row is a no-op. The
    passthrough metadata fields are copied when present and do not count
    toward the 65 data fields.
    """
    field_map = dict(field_map or {})
    out: dict[str, object] = {}
    missing = []
    for name in SEAT_COLUMNS + BACK_COLUMNS + ("posture",):
        raw_name = field_map.get(name, name)
        if raw_name in raw_row:
            out[name] = raw_row[raw_name]
        elif name in raw_row:
            out[name] = raw_row[name]
        else:
            missing.append(raw_name)
    if missing:
        raise SchemaMismatch(f"raw row lacks fields: {', '.join(missing)}")
    for name in passthrough:
        raw_name = field_map.get(name, name)
        if raw_name in raw_row:
            out[name] = raw_row[raw_name]
        elif name in raw_row:
            out[name] = raw_row[name]
    return out


def format_float(x: float) -> str:
    """Shortest decimal text that round-trips to the same float."""
    x = float(x)
    if x == 0:
        return "0.0"  # folds -0.0
    return repr(x)


def _record_row(rec: FrameRecord, variant: str) -> list[str]:
    row = [
        rec.participant_id,
        rec.age_group,
        variant,
        rec.posture,
        str(rec.timestamp_index),
        str(rec.snapshot_index),
    ]
    row.extend(format_float(v) for v in rec.seat.values)
    if rec.back is None:
        row.extend([""] * N_SENSORS)
    else:
        row.extend(format_float(v) for v in rec.back.values)
    return row


def dumps_dataset(ds: Dataset) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for rec in ds.records:
        writer.writerow(_record_row(rec, ds.variant))
    return buf.getvalue()


def save_dataset(ds: Dataset, dest) -> None:
    """Write ``ds`` as canonical CSV (UTF-8, LF, fixed column order)."""
    Path(dest).write_bytes(dumps_dataset(ds).encode("utf-8"))


def _parse_float(text, row, col):
    try:
        v = float(text)
    except ValueError:
        raise ParseError(f"not a number: {text!r}", row, col) from None
    if not math.isfinite(v):
        raise ParseError(f"non-finite value {text!r}", row, col)
    return v


def _parse_int(text, row, col):
    try:
        return int(text)
    except ValueError:
        raise ParseError(f"not an integer: {text!r}", row, col) from None


def parse_records(lines: Iterable[str], variant: str | None = None, source: str = ""):
    reader = csv.reader(lines)
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("missing header row", 1) from None
    if tuple(header) != CSV_COLUMNS:
        extra = set(header) ^ set(CSV_COLUMNS)
        raise ParseError(
            f"header does not match canonical schema (differs in {sorted(extra)[:5]})", 1
        )
    records = []
    variants = set()
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(CSV_COLUMNS):
            raise ParseError(f"expected {len(CSV_COLUMNS)} fields, got {len(row)}", lineno)
        pid, age, var, posture, ts, snap = row[:6]
        if var not in VARIANTS:
            raise ParseError(f"unknown variant {var!r}", lineno, "variant")
        variants.add(var)
        seat = [_parse_float(t, lineno, c) for t, c in zip(row[6:38], SEAT_COLUMNS)]
        back_text = row[38:]
        if all(t == "" for t in back_text):
            back = None
        else:
            back = [_parse_float(t, lineno, c) for t, c in zip(back_text, BACK_COLUMNS)]
        try:
            rec = FrameRecord(
                pid,
                age,
                posture,
                _parse_int(ts, lineno, "timestamp_index"),
                _parse_int(snap, lineno, "snapshot_index"),
                PressureFrame("seat", seat),
                None if back is None else PressureFrame("back", back),
            )
            _check_record(rec, var)
        except InvariantViolation as exc:
            raise InvariantViolation(f"row {lineno}: {exc}") from None
        records.append(rec)
    if len(variants) > 1:
        raise InvariantViolation(f"file mixes variants {sorted(variants)}")
    if variants:
        found = variants.pop()
        if variant is not None and variant != found:
            raise InvariantViolation(f"expected variant {variant!r}, file holds {found!r}")
        variant = found
    return Dataset(tuple(records), variant or "controlled", source)


def load_dataset(source, variant: str | None = None) -> Dataset:
    """Read a canonical CSV file.

    ``variant`` is only needed to type a header-only file; otherwise it is
    read from the rows and, if given, checked against them.
    """
    path = Path(source)
    with path.open("r", encoding="utf-8", newline="") as fh:
        return parse_records(fh, variant, str(path))
