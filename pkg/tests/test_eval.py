import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lanesig import eval as ev
from lanesig.drive import Drive
from lanesig.nnet.model import forward, init_model, truncate
from lanesig.nnet.train import CellDataset


def distances(segments, d, m, total):
    return [[w.distance for w in ws] for ws in ev.enumerate_windows(segments, d, m, total)]


def test_windows_every_50k():
    segs = ((0, 0), (50_000, 1), (100_000, 0))
    got = distances(segs, 25_000, 12_500, 150_000)
    assert got[0] == [25_000, 37_500, 50_000]
    assert got[1] == [12_500, 25_000, 37_500, 50_000]


def test_windows_every_60k():
    got = distances(((0, 0), (60_000, 1)), 25_000, 12_500, 120_000)
    assert got[0] == [25_000, 37_500, 50_000]
    assert got[1] == [2_500, 15_000, 27_500, 40_000, 52_500]


def test_single_segment_windows():
    assert distances(((0, 3),), 20, 10, 95) == [[20, 30, 40, 50, 60, 70, 80, 90]]


def brute_force(segments, d, m, total):
    starts = [s for s, _ in segments]
    out = [[] for _ in segments]
    k = 0
    while k * m + d <= total:
        end = k * m + d
        seg = max(j for j, s in enumerate(starts) if s <= end - 1)
        out[seg].append((k, end - starts[seg]))
        k += 1
    return out


@settings(max_examples=100, derandomize=True)
@given(data=st.data())
def test_windows_match_brute_force(data):
    m = data.draw(st.integers(1, 40))
    d = 2 * m
    total = data.draw(st.integers(d, 2000))
    cuts = sorted(data.draw(st.sets(st.integers(1, total - 1), max_size=12)))
    segments = tuple((s, k % 3) for k, s in enumerate([0] + cuts))
    got = ev.enumerate_windows(segments, d, m, total)
    want = brute_force(segments, d, m, total)
    assert [[(w.cell, w.distance) for w in ws] for ws in got] == want
    cells = sorted(w.cell for ws in got for w in ws)
    assert cells == list(range(ev.drive_cell_count(total, d, m)))
    for ws in got:
        assert [w.ordinal for w in ws] == list(range(1, len(ws) + 1))
        assert all(b.distance - a.distance == m for a, b in zip(ws, ws[1:]))


def stitched(n=40_000, alpha=3_000, seed=0):
    x = np.random.default_rng(seed).normal(size=n)
    segs = tuple((s, k % 2) for k, s in enumerate(range(0, n, alpha)))
    return Drive(x, 1000.0, segs, drive_id=f"s{seed}")


def test_oracle_predictor_is_perfect():
    report = ev.window_accuracy(ev.oracle_predictor("LO"), [stitched()], d=400)
    assert report.overall() == 1.0
    assert all(acc == 1.0 for acc, _ in report.by_ordinal().values())


def test_constant_predictor_scores_half():
    const = lambda drive, spans: np.zeros(len(spans), int)
    report = ev.window_accuracy(const, [stitched(seed=k) for k in range(3)], d=400, include_first_segment=True)
    assert report.overall() == pytest.approx(0.5, abs=0.05)


def test_random_predictor_scores_chance():
    rng = np.random.default_rng(0)
    rand = lambda drive, spans: rng.integers(0, 2, len(spans))
    report = ev.window_accuracy(rand, [stitched(seed=k, alpha=2_000) for k in range(10)], d=400)
    for acc, count in report.by_ordinal().values():
        assert abs(acc - 0.5) <= 3 * np.sqrt(0.25 / count) + 1e-12


def test_first_distance_groups_are_exact_buckets():
    report = ev.window_accuracy(ev.oracle_predictor(), [stitched(alpha=3_100)], d=400)
    groups = report.by_first_distance()
    assert all(0 < dist <= 400 for dist in groups)
    assert sum(c for g in groups.values() for _, c in [g[1]]) == len(report.events)


def tiny_model(seed=0, dtype=np.float64):
    return init_model(d=40, n_cells=5, hidden_dim=6, n_lanes=2, pool_kernel=4, pool_stride=4,
                      seed=seed, dtype=dtype)


def test_drive_cell_outputs_use_latest_subdrive():
    m = tiny_model()
    drive = stitched(n=400)
    probs = ev.drive_cell_outputs(m, drive)
    K = ev.drive_cell_count(len(drive), 40, 20)
    assert probs.shape == (K, 2)
    full = forward(m, drive.samples[:m.subdrive_length][None]).probs[0]
    assert np.allclose(probs[:m.n_cells], full)
    k = K - 1
    start = (k - m.n_cells + 1) * 20
    last = forward(m, drive.samples[start:start + m.subdrive_length][None]).probs[0, -1]
    assert np.allclose(probs[k], last)


def perfect_dataset(n=64, cells=5, lanes=2):
    y = np.arange(n) % lanes
    return CellDataset(np.zeros((n, cells, 10)), y)


def test_matrix_structure_and_perfect_scores():
    m = tiny_model()
    X = np.random.default_rng(1).normal(size=(64, 5, m.input_dim))
    pred = forward(m, X).predictions
    data = CellDataset(X, pred[:, -1])
    mat = ev.accuracy_matrix((m, data), batch_size=16)
    assert sorted(mat.rows) == [40, 60, 80, 100, 120]
    assert mat.rows[120].lengths == [40, 60, 80, 100, 120]
    assert mat.rows[120].mean[-1] == 1.0 and mat.rows[120].var[-1] == 0.0
    for i in range(1, 6):
        acc = np.mean(forward(truncate(m, i), X[:, :i]).final == data.Y[:, 0])
        assert mat.rows[40 + 20 * (i - 1)].mean[-1] == pytest.approx(acc)


def test_table_layout():
    from lanesig.pipeline import table_layout
    cfg = table_layout(800_000)
    assert cfg.n_cells == 31
    assert cfg.accumulated_lengths()[:3] == [50_000, 75_000, 100_000]


def test_untrained_model_near_chance():
    m = tiny_model(3)
    rng = np.random.default_rng(4)
    data = CellDataset(rng.normal(size=(2000, 5, m.input_dim)), rng.integers(0, 2, 2000))
    row = ev.excavate(m, data)
    assert all(abs(a - 0.5) < 0.05 for a in row.mean)


def test_matrix_rejects_lane_changes():
    m = tiny_model()
    Y = np.zeros((4, 5), int)
    Y[0, 3:] = 1
    with pytest.raises(ValueError):
        ev.excavate(m, CellDataset(np.zeros((4, 5, m.input_dim)), Y))


def test_roc_examples():
    y = np.repeat([0, 1], 500)
    perfect = np.eye(2)[y]
    r = ev.roc_f1_scores(y, perfect)
    assert r.auc == [1.0, 1.0] and r.weighted_f1 == 1.0
    # one draw has sd ~0.018, so check the rate over many draws
    rng = np.random.default_rng(0)
    aucs = [ev.roc_f1_scores(y, rng.random((1000, 2))).auc[0] for _ in range(100)]
    assert np.mean(np.abs(np.array(aucs) - 0.5) < 0.05) >= 0.95
    assert abs(np.mean(aucs) - 0.5) < 0.01
    one_class = np.tile([1.0, 0.0], (1000, 1))
    assert ev.roc_f1_scores(y, one_class).weighted_f1 == pytest.approx(1 / 3)


def test_auc_invariant_to_monotone_transform():
    rng = np.random.default_rng(1)
    y = rng.integers(0, 3, 300)
    s = rng.random((300, 3)) + 0.3 * np.eye(3)[y]
    a = ev.roc_f1_scores(y, s).auc
    b = ev.roc_f1_scores(y, np.exp(5 * s)).auc
    assert np.allclose(a, b)


def test_absent_class_has_undefined_auc():
    y = np.array([0, 0, 1, 1])
    r = ev.roc_f1_scores(y, np.random.default_rng(0).random((4, 3)))
    assert r.auc[2] is None and r.support == [2, 2, 0]


def test_report_writers(tmp_path):
    m = tiny_model()
    data = CellDataset(np.random.default_rng(2).normal(size=(20, 5, m.input_dim)), np.zeros(20, int))
    mat = ev.accuracy_matrix((m, data))
    mean_path, var_path = ev.write_matrix_csv(mat, tmp_path / "matrix.csv")
    lines = mean_path.read_text().splitlines()
    assert lines[0] == "ell,40,60,80,100,120" and len(lines) == 6
    assert var_path.name == "matrix_var.csv"
    roc = ev.roc_f1_scores(np.repeat([0, 1], 5), np.random.default_rng(0).random((10, 2)))
    ev.write_json(roc, tmp_path / "roc.json")
    ev.write_gnuplot(roc, tmp_path / "roc.dat")
    ev.write_gnuplot(mat, tmp_path / "m.dat")
    assert "# lane 0 auc" in (tmp_path / "roc.dat").read_text()
    import json
    doc = json.loads((tmp_path / "roc.json").read_text())
    assert all(len(repr(v).replace("0.", "").replace("-", "")) <= 12 for v in doc["f1"])
