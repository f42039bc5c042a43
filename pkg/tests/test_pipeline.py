import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from lanesig.drive import Drive
from lanesig.pipeline import (SegmentationConfig, hampel, label_cells, label_span, make_batches,
                              make_subdrives, make_subsegments, n_subdrives, preprocess,
                              random_subdrive_sample, split_by_origin, stitch_lane_changes)


def drive(n, lane=0, seed=0, **kw):
    x = np.random.default_rng(seed).normal(size=n)
    return Drive(x, 1000.0, ((0, lane),), drive_id=kw.pop("drive_id", f"d{lane}-{seed}"), **kw)


@pytest.mark.parametrize("N,count,pads", [(800, 15, 0), (100, 1, 0), (120, 2, 30)])
def test_subdrive_counts(N, count, pads):
    subs = make_subdrives(drive(N), 100, 50)
    assert len(subs) == count
    assert [s.start_offset for s in subs] == [50 * k for k in range(count)]
    assert subs[-1].pad_len == pads
    assert all(s.pad_len == 0 for s in subs[:-1])
    assert np.all(subs[-1].samples[100 - pads:] == 0)


@given(N=st.integers(1, 3000), ell=st.integers(1, 500), s=st.integers(1, 300))
def test_subdrive_count_formula(N, ell, s):
    starts = [0]
    while starts[-1] + ell < N:
        starts.append(starts[-1] + s)
    assert n_subdrives(N, ell, s) == len(starts)


@pytest.mark.parametrize("ell,d,n", [(100_000, 20_000, 9), (20, 20, 1), (800_000, 50_000, 31)])
def test_cell_count(ell, d, n):
    assert SegmentationConfig(ell=ell, s=1, d=d).n_cells == n


def test_subsegments_cover_subdrive():
    x = np.arange(100)
    cells = make_subsegments(x, 20)
    assert cells.shape == (9, 20)
    covered = np.unique(cells)
    assert np.array_equal(covered, x)
    for a, b in zip(cells, cells[1:]):
        assert np.array_equal(a[10:], b[:10])


def test_subsegments_reject_bad_layout():
    with pytest.raises(ValueError):
        make_subsegments(np.zeros(105), 20)
    with pytest.raises(ValueError):
        SegmentationConfig(ell=105, s=1, d=20)


def test_hampel_replaces_spike():
    x = np.random.default_rng(0).uniform(-1, 1, 101)
    x[50] = 100.0
    out, replaced = hampel(x, 11, 3.0)
    assert replaced[50] and replaced.sum() >= 1
    assert out[50] == np.median(x[45:56])


def test_preprocess_on_standardised_data_is_identity():
    x = np.sin(np.linspace(0, 20, 2000))
    x = (x - x.mean()) / x.std()
    out = preprocess(Drive(x, 1000.0, ((0, 0),)))
    assert out.flags["hampel_replaced"] == 0
    assert np.max(np.abs(out.samples - x)) < 1e-9


def test_preprocess_constant_drive():
    with pytest.warns(RuntimeWarning):
        out = preprocess(Drive(np.full(50, 3.0), 1000.0, ((0, 0),)))
    assert np.all(out.samples == 0)


def test_stitch_segments():
    a, b = drive(120_000, 0, 1), drive(120_000, 1, 2)
    s = stitch_lane_changes([a, b], 50_000, 0)
    assert s.segments == ((0, 0), (50_000, 1), (100_000, 0))
    # round trip: each segment's samples come from its lane at the same index
    src = {0: a.samples, 1: b.samples}
    for lo, hi, lane in s.segment_bounds():
        assert np.array_equal(s.samples[lo:hi], src[lane][lo:hi])


def test_stitch_edge_cases():
    a, b = drive(800_000, 0), drive(800_000, 1)
    assert len(stitch_lane_changes([a, b], 50_000, 1).segments) == 16
    whole = stitch_lane_changes([a, b], 1_000_000, 1)
    assert whole.segments == ((0, 1),) and np.array_equal(whole.samples, b.samples)
    c = Drive(b.samples, 500.0, ((0, 1),))
    with pytest.raises(ValueError):
        stitch_lane_changes([a, c], 10, 0)


def test_label_examples():
    segs = ((0, 1), (50_000, 2))
    assert label_span(segs, 37_500, 62_500, "MF") == 2
    assert label_span(segs, 37_500, 62_500, "LO") == 2
    segs = ((0, 1), (20_000, 2))
    assert label_span(segs, 0, 25_000, "MF") == 1
    assert label_span(segs, 0, 25_000, "LO") == 2
    assert label_span(((0, 1), (90_000, 2)), 10_000, 35_000, "MF") == 1
    assert label_span(((0, 1), (90_000, 2)), 10_000, 35_000, "LO") == 1


segments_st = st.lists(st.tuples(st.integers(1, 40), st.integers(0, 3)), min_size=1, max_size=8).map(
    lambda parts: tuple((int(s), lane) for s, lane in zip(np.cumsum([0] + [p[0] for p in parts[:-1]]),
                                                             [p[1] for p in parts])))


@given(segs=segments_st, a=st.integers(0, 300), w=st.integers(1, 60))
def test_label_policies_agree_inside_a_segment(segs, a, w):
    starts = [s for s, _ in segs] + [10**9]
    j = max(k for k, s in enumerate(starts[:-1]) if s <= a)
    b = a + w
    lo = label_span(segs, a, b, "LO")
    # LO only looks at the last sample
    assert lo == label_span(segs, b - 1, b, "MF")
    if b <= starts[j + 1]:
        assert label_span(segs, a, b, "MF") == lo == segs[j][1]


def test_label_cells_clip_padding():
    cfg = SegmentationConfig(ell=100, s=50, d=20)
    labels = label_cells(((0, 0), (60, 1)), cfg, 50, "LO", length=70)
    # cells beyond the real samples keep the lane of the last real sample
    assert labels == [1] * cfg.n_cells
    with pytest.raises(ValueError):
        label_cells(((0, 0),), cfg, 80, "LO", length=70)


def test_batches():
    sizes = [len(b) for b in make_batches(1000, 512, 0)]
    assert sizes == [512, 488]
    one = make_batches(list(range(10)), 64, 3)
    assert len(one) == 1 and sorted(one[0]) == list(range(10))
    assert [list(b) for b in make_batches(100, 7, 5)] == [list(b) for b in make_batches(100, 7, 5)]


def test_random_subdrive():
    d = drive(500)
    assert random_subdrive_sample(drive(100), 100, 9).start_offset == 0
    assert random_subdrive_sample(d, 100, 4).start_offset == random_subdrive_sample(d, 100, 4).start_offset
    offsets = np.array([random_subdrive_sample(d, 491, k).start_offset for k in range(10_000)])
    counts = np.bincount(offsets, minlength=10)
    assert offsets.max() <= 9
    assert stats.chisquare(counts).pvalue > 0.01
    with pytest.raises(ValueError):
        random_subdrive_sample(d, 501, 0)


def test_split_keeps_origins_together():
    drives = [drive(10, seed=k, origin_id=f"o{k // 3}", drive_id=f"v{k}") for k in range(30)]
    train, test = split_by_origin(drives, 0.3, seed=1)
    assert {d.origin_id for d in train}.isdisjoint({d.origin_id for d in test})
    assert len(train) + len(test) == 30
