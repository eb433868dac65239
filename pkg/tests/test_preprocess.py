import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_com
from sitgrid.data import Dataset, FrameRecord, PressureFrame
from sitgrid.errors import ConfigError, InvariantViolation, NoRowsForBaseline
from sitgrid.preprocess import (
    OutlierPolicy,
    compute_still_baseline,
    normalize,
    preprocess_pipeline,
)
from sitgrid.synth import GeneratorConfig, generate_controlled


def rec(values, posture="still", pid="p", snap=0):
    return FrameRecord(pid, "unspecified", posture, 0, snap, PressureFrame("seat", values))


def col(values_at_s, s=5, fill=1.0):
    v = np.full(32, fill)
    v[s] = values_at_s
    return v


def test_single_still_row_baseline():
    b = compute_still_baseline([rec(col(10.0)), rec(col(99.0), "left")])
    assert b.means[5] == 10.0 and b.n_rows_used == 1 and b.source == "still"


def test_baseline_is_arithmetic_mean():
    b = compute_still_baseline([rec(col(v)) for v in (10.0, 20.0, 30.0)])
    assert b.means[5] == 20.0


def test_baseline_all_rows():
    rows = [rec(col(10.0)), rec(col(40.0), "left")]
    assert compute_still_baseline(rows, "all").means[5] == 25.0


def test_baseline_matches_brute_mean(controlled_ds):
    recs = [r for r in controlled_ds.records if r.participant_id == "C03"]
    b = compute_still_baseline(recs)
    still = [r.seat.values for r in recs if r.posture == "still"]
    for s in range(32):
        expected = sum(float(v[s]) for v in still) / len(still)
        assert abs(b.means[s] - expected) < 1e-9


def test_no_still_rows():
    with pytest.raises(NoRowsForBaseline):
        compute_still_baseline([rec(col(1.0), "left")])
    with pytest.raises(NoRowsForBaseline):
        compute_still_baseline([])


def test_mixed_participants_rejected():
    with pytest.raises(InvariantViolation):
        compute_still_baseline([rec(col(1.0)), rec(col(1.0), pid="q")])


def test_policy_validation():
    with pytest.raises(ConfigError):
        OutlierPolicy.sigma(0.0)
    with pytest.raises(ConfigError):
        OutlierPolicy.absolute(-1.0)
    with pytest.raises(ConfigError):
        OutlierPolicy("median")


def test_value_above_threshold_replaced_by_baseline():
    # 900 sits above a cap of 400 and is swapped for the still mean 100
    from sitgrid.preprocess import replace_outliers
    rows = [rec(col(100.0)), rec(col(900.0), "left")]
    b = compute_still_baseline(rows)
    out = replace_outliers(rows, b, OutlierPolicy.absolute(400.0))
    assert out[1].seat.values[5] == 100.0
    assert out[0] == rows[0]


def test_no_outliers_is_noop():
    from sitgrid.preprocess import replace_outliers
    rows = [rec(col(v)) for v in (1.0, 2.0, 3.0)]
    b = compute_still_baseline(rows)
    assert replace_outliers(rows, b, OutlierPolicy.absolute(10.0)) == rows


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.lists(st.floats(0, 1023), min_size=32, max_size=32), min_size=2, max_size=12),
    st.floats(0.5, 6.0),
)
def test_replace_never_exceeds_threshold_and_is_idempotent(rows, k):
    from sitgrid.preprocess import replace_outliers
    recs = [rec(np.array(v), "still" if i % 2 == 0 else "left", snap=i) for i, v in enumerate(rows)]
    b = compute_still_baseline(recs)
    policy = OutlierPolicy.sigma(k)
    thr = policy.thresholds(b)
    once = replace_outliers(recs, b, policy)
    x = np.vstack([r.seat.values for r in once])
    assert np.all((x <= thr) | (x == b.means))
    if np.all(b.means <= thr):
        assert np.all(x <= thr)
        assert replace_outliers(once, b, policy) == once


def test_normalize_examples():
    rows = [rec(col(100.0)), rec(col(120.0), "left")]
    b = compute_still_baseline(rows)
    out = normalize(rows, b)
    assert not out[0].seat.values.any()
    assert out[1].seat.values[5] == 20.0


def test_normalize_invertible(rng):
    rows = [rec(rng.uniform(0, 1023, 32), snap=i) for i in range(6)]
    b = compute_still_baseline(rows)
    for r, n in zip(rows, normalize(rows, b)):
        back = n.seat.values + b.means
        assert np.allclose(back, r.seat.values, rtol=0, atol=1e-12)


def test_normalized_baseline_rows_have_zero_mean(controlled_ds, realistic_ds):
    for ds, source in ((controlled_ds, "still"), (realistic_ds, "all")):
        out = preprocess_pipeline(ds, OutlierPolicy.sigma(4.0))
        for pid in ds.participants():
            rows = [r.sensor_vector() for r in out.records
                    if r.participant_id == pid and (source == "all" or r.posture == "still")]
            assert np.abs(np.mean(rows, axis=0)).max() < 1e-12


def test_pipeline_preserves_shape_and_metadata(controlled_ds, realistic_ds):
    for ds in (controlled_ds, realistic_ds):
        out = preprocess_pipeline(ds)
        assert len(out) == len(ds)
        assert out.labels() == ds.labels()
        for a, b in zip(ds.records, out.records):
            assert (a.participant_id, a.age_group, a.posture, a.timestamp_index, a.snapshot_index) == \
                (b.participant_id, b.age_group, b.posture, b.timestamp_index, b.snapshot_index)


def test_pipeline_without_normalization_equals_replacement(controlled_ds):
    from sitgrid.preprocess import replace_outliers
    ds = Dataset(tuple(r for r in controlled_ds.records if r.participant_id == "C01"), "controlled")
    out = preprocess_pipeline(ds, OutlierPolicy.sigma(4.0), normalize_values=False)
    b = compute_still_baseline(ds.records)
    expected = replace_outliers(ds.records, b, OutlierPolicy.sigma(4.0))
    assert list(out.records) == expected


def test_pipeline_deterministic(realistic_ds):
    assert preprocess_pipeline(realistic_ds) == preprocess_pipeline(realistic_ds)


def test_scale_invariance_after_normalization():
    cfg = GeneratorConfig.controlled(
        n_participants=1, snapshots_or_events=1, noise_sd=0.0,
        outlier_probability=0.0, center_jitter=0.0, weight_scale_range=(1.0, 1.0),
    )
    base = generate_controlled(cfg)
    w = 1.7
    heavy = [r.with_values(w * r.sensor_vector()) for r in base.records]
    heavy = [FrameRecord("H", r.age_group, r.posture, 0, 0, r.seat) for r in heavy]
    ds = Dataset(tuple(base.records) + tuple(heavy), "controlled")
    out = preprocess_pipeline(ds, OutlierPolicy.sigma(4.0))
    light = {r.posture: r.seat.values for r in out.records if r.participant_id != "H"}
    heavy = {r.posture: r.seat.values for r in out.records if r.participant_id == "H"}
    for p in light:
        a, b = brute_com(light[p]), brute_com(heavy[p])
        assert abs(a[0] - b[0]) < 1e-9 and abs(a[1] - b[1]) < 1e-9
