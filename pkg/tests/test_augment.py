import json

import numpy as np
import pytest
from scipy import stats

from lanesig.augment import (AugmentPlan, augment_dataset, check_partition, iter_augmented, jitter,
                             read_manifest, regenerate, scale, time_warp, warp_sections, write_manifest)
from lanesig.drive import Drive


def drive(n=2000, seed=0, segments=((0, 0),), drive_id="o1"):
    x = np.random.default_rng(seed).normal(size=n)
    return Drive(x, 1000.0, segments, drive_id=drive_id)


def test_scale_identity_and_constant_ratio():
    d = drive()
    assert np.array_equal(scale(d, 3, 0.0).samples, d.samples)
    out = scale(d, 3, 0.5)
    ratio = out.samples / d.samples
    assert np.allclose(ratio, ratio[0], rtol=1e-12)
    assert out.segments == d.segments


def test_scale_factor_reference():
    d = drive()
    M = np.abs(d.samples).max()
    c = abs(1.0 + 0.5 * M * np.random.default_rng(11).standard_normal())
    assert scale(d, 11, 0.5).provenance[-1]["factor"] == pytest.approx(c, rel=1e-14)


def test_scale_keeps_extrema_positions():
    d = drive(500)
    out = scale(d, 2, 0.7)

    def peaks(x):
        return np.flatnonzero((x[1:-1] > x[:-2]) & (x[1:-1] > x[2:]))
    assert np.array_equal(peaks(d.samples), peaks(out.samples))


def test_jitter_noise_statistics():
    d = Drive(np.zeros(100_000) + np.r_[1.0, np.zeros(99_999)], 1000.0, ((0, 0),))
    out = jitter(d, 5, 0.1)
    noise = (out.samples - d.samples) / 0.1
    assert abs(noise.mean()) < 4 / np.sqrt(noise.size)
    assert stats.kstest(noise, "norm").pvalue > 0.01
    assert np.array_equal(jitter(d, 5, 0.0).samples, d.samples)


@pytest.mark.parametrize("bad", [lambda d: scale(d, 0, 0.8), lambda d: jitter(d, 0, 0.2),
                                 lambda d: time_warp(d, 0, 3, 0.3), lambda d: time_warp(d, 0, 0, 0.1)])
def test_parameter_limits(bad):
    with pytest.raises(ValueError):
        bad(drive())


def test_warp_hand_example():
    x = np.arange(100, dtype=float) ** 2
    out, src, starts = warp_sections(x, [0, 50], [2.0, 1.0])
    assert out.size == 75 and starts == [0, 25]
    assert np.array_equal(out[:25], x[0:50:2])
    assert np.array_equal(out[25:], x[50:])


def test_warp_identity_and_constant():
    d = drive()
    assert np.array_equal(time_warp(d, 4, 5, 0.0).samples, d.samples)
    c = Drive(np.full(1000, 2.5), 1000.0, ((0, 0),))
    assert np.all(time_warp(c, 4, 5, 0.2).samples == 2.5)


def test_warp_section_rates_and_monotone_map():
    d = drive(5000)
    for seed in range(20):
        out = time_warp(d, seed, 6, 0.2)
        step = out.provenance[-1]
        assert all(0.8 <= r <= 1.2 for r in step["rates"])
        _, src, _ = warp_sections(d.samples, step["bounds"], step["rates"])
        assert np.all(np.diff(src) > 0)
        ratio = out.samples.size / d.samples.size
        assert 1 / 1.2 - 0.01 <= ratio <= 1 / 0.8 + 0.01


def test_warp_preserves_lane_sequence():
    d = drive(3000, segments=((0, 0), (1000, 1), (2000, 0)))
    for seed in range(10):
        out = time_warp(d, seed, 4, 0.2)
        assert [lane for _, lane in out.segments] == [0, 1, 0]


def test_variant_counts():
    assert len(augment_dataset([drive(300)], AugmentPlan(10, 0.7, 10, 0.1, 5))) == 726
    originals = [drive(300, seed=k, drive_id=f"o{k}") for k in range(3)]
    same = augment_dataset(originals, AugmentPlan(0, 0.7, 0, 0.1, 0))
    assert [d.drive_id for d in same] == ["o0", "o1", "o2"]


def test_augmentation_is_reproducible_and_labelled():
    plan = AugmentPlan(2, 0.7, 2, 0.1, 2, seed=9)
    a = augment_dataset([drive(800)], plan)
    b = augment_dataset([drive(800)], plan)
    assert all(np.array_equal(x.samples, y.samples) for x, y in zip(a, b))
    assert len({d.drive_id for d in a}) == len(a)
    assert {d.origin_id for d in a} == {"o1"}


def test_manifest_regenerates_variants(tmp_path):
    original = drive(600)
    variants = augment_dataset([original], AugmentPlan(1, 0.7, 1, 0.1, 1, seed=2))
    splits = ["train"] * len(variants)
    write_manifest(tmp_path / "m.json", variants, AugmentPlan(1, 0.7, 1, 0.1, 1, seed=2), splits=splits)
    doc = read_manifest(tmp_path / "m.json")
    for entry, v in zip(doc["drives"], variants):
        again = regenerate(original, entry["provenance"][1:])
        assert np.array_equal(again.samples, v.samples)
        assert entry["split"] == "train"


def test_manifest_rejects_origin_in_two_splits(tmp_path):
    with pytest.raises(ValueError):
        check_partition(["a", "a"], ["train", "test"])
    doc = {"format": "lanesig-manifest v1", "drives": [
        {"origin_id": "a", "split": "train"}, {"origin_id": "a", "split": "test"}]}
    (tmp_path / "m.json").write_text(json.dumps(doc))
    with pytest.raises(ValueError):
        read_manifest(tmp_path / "m.json")
