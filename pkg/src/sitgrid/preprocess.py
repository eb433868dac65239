"""Per-participant baseline, outlier replacement and baseline subtraction."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .data import Dataset, FrameRecord
from .errors import ConfigError, InvariantViolation, NoRowsForBaseline

BASELINE_SOURCES = ("still", "all")


@dataclass(frozen=True, eq=False)
class StillBaseline:
    """Per-sensor means of one participant's baseline rows.

    ``column_mean`` and ``column_sd`` summarize *all* of the participant's
    rows and drive the sigma-multiple outlier threshold.
    """

    participant_id: str
    means: np.ndarray
    source: str
    n_rows_used: int
    column_mean: np.ndarray
    column_sd: np.ndarray

    def __post_init__(self):
        if self.n_rows_used <= 0:
            raise InvariantViolation("baseline needs at least one row")
        if not np.all(np.isfinite(self.means)):
            raise InvariantViolation("baseline means must be finite")


@dataclass(frozen=True)
class OutlierPolicy:
    mode: str = "sigma_multiple"
    k: float = 4.0
    cap: float | None = None

    def __post_init__(self):
        if self.mode == "sigma_multiple":
            if not self.k > 0:
                raise ConfigError("outlier k must be > 0")
        elif self.mode == "absolute_cap":
            if self.cap is None or not self.cap > 0:
                raise ConfigError("outlier cap must be > 0")
        else:
            raise ConfigError(f"unknown outlier mode {self.mode!r}")

    @classmethod
    def sigma(cls, k: float = 4.0) -> "OutlierPolicy":
        return cls("sigma_multiple", k=k)

    @classmethod
    def absolute(cls, cap: float) -> "OutlierPolicy":
        return cls("absolute_cap", cap=cap)

    def thresholds(self, baseline: StillBaseline) -> np.ndarray:
        if self.mode == "absolute_cap":
            return np.full_like(baseline.means, float(self.cap))
        return baseline.column_mean + self.k * baseline.column_sd


def _matrix(records: Sequence[FrameRecord]) -> np.ndarray:
    return np.vstack([r.sensor_vector() for r in records])


def _single_participant(records) -> str:
    ids = {r.participant_id for r in records}
    if len(ids) > 1:
        raise InvariantViolation(f"records span several participants: {sorted(ids)}")
    return ids.pop()


def compute_still_baseline(records: Sequence[FrameRecord], source: str = "still") -> StillBaseline:
    """Mean of each sensor over the participant's still rows (or all rows)."""
    if source not in BASELINE_SOURCES:
        raise ConfigError(f"baseline source must be one of {BASELINE_SOURCES}")
    records = list(records)
    if not records:
        raise NoRowsForBaseline("no records given")
    pid = _single_participant(records)
    chosen = records if source == "all" else [r for r in records if r.posture == "still"]
    if not chosen:
        raise NoRowsForBaseline(f"participant {pid!r} has no still rows")
    everything = _matrix(records)
    return StillBaseline(
        pid,
        _matrix(chosen).mean(axis=0),
        source,
        len(chosen),
        everything.mean(axis=0),
        everything.std(axis=0),
    )


def replace_outliers(
    records: Sequence[FrameRecord], baseline: StillBaseline, policy: OutlierPolicy | None = None
) -> list[FrameRecord]:
    """Replace readings above the column threshold with the baseline mean."""
    policy = policy or OutlierPolicy()
    records = list(records)
    if not records:
        return records
    x = _matrix(records)
    thr = policy.thresholds(baseline)
    fixed = np.where(x > thr, baseline.means, x)
    return [
        r if np.array_equal(row, r.sensor_vector()) else r.with_values(row)
        for r, row in zip(records, fixed)
    ]


def normalize(records: Sequence[FrameRecord], baseline: StillBaseline) -> list[FrameRecord]:
    """Subtract the baseline from every reading."""
    return [r.with_values(r.sensor_vector() - baseline.means) for r in records]


def default_baseline_source(variant: str) -> str:
    return "still" if variant == "controlled" else "all"


def preprocess_pipeline(
    ds: Dataset,
    policy: OutlierPolicy | None = None,
    normalize_values: bool = True,
    baseline_source: str | None = None,
) -> Dataset:
    """Baseline, outlier replacement and optional normalization per participant.

    Normalization subtracts the baseline recomputed from the cleaned rows,
    so outliers replaced in baseline rows do not bias it. Record order is preserved. The baseline defaults to still rows for the
    controlled variant and to all rows of the participant for the realistic one.
    """
    policy = policy or OutlierPolicy()
    source = baseline_source or default_baseline_source(ds.variant)
    if not ds.records:
        return ds
    values = ds.sensor_matrix().copy()
    positions: dict[str, list[int]] = {}
    for i, rec in enumerate(ds.records):
        positions.setdefault(rec.participant_id, []).append(i)
    for pid, idx in positions.items():
        recs = [ds.records[i] for i in idx]
        baseline = compute_still_baseline(recs, source)
        x = values[idx]
        x = np.where(x > policy.thresholds(baseline), baseline.means, x)
        if normalize_values:
            # subtract the mean of the cleaned baseline rows so they end up centered
            if source == "all":
                x = x - x.mean(axis=0)
            else:
                still = np.array([r.posture == "still" for r in recs])
                x = x - x[still].mean(axis=0)
        values[idx] = x
    return ds.replace_values(values)
