import math

import numpy as np
import pytest

from spltrack.core import LengthMismatch
from spltrack.results import aggregate, read_frames_csv, write_frames_csv
from spltrack.sim import (Event, InvalidSpec, ScenarioSpec, box_overlap, default_suite, evaluate, generate,
                          parse_events, precision_curve, read_pgm, run_tracker, write_pgm)
from spltrack.tracker import FrameResult, TrackerConfig


def test_static_positions_constant():
    s = generate(ScenarioSpec(frames=10, motion="static"))
    assert len(s) == 10
    assert np.all(s.positions == s.positions[0])
    assert not s.corrupted.any()


def test_full_occlusion_replaces_target():
    spec = ScenarioSpec(frames=8, motion="static", noise=0.0, events=parse_events("5:occlusion(1.0)"), seed=2)
    s = generate(spec)
    r, c = s.positions[5]
    h = spec.target_size // 2
    occluded = s.frames[5, r - h:r - h + spec.target_size, c - h:c - h + spec.target_size]
    clean = s.frames[4, r - h:r - h + spec.target_size, c - h:c - h + spec.target_size]
    outside = np.ones(s.frames[5].shape, bool)
    outside[r - h:r - h + spec.target_size, c - h:c - h + spec.target_size] = False
    assert s.corrupted.tolist() == [False] * 5 + [True] + [False] * 2
    assert not np.any(np.isclose(occluded, clean))
    # with no noise the occluded window shows exactly what surrounds the target
    assert np.array_equal(s.frames[5][outside], s.frames[4][outside])


def test_same_seed_bit_identical():
    spec = ScenarioSpec(frames=15, occlusion_fraction=0.2, drift=0.01, seed=11)
    a, b = generate(spec), generate(spec)
    assert np.array_equal(a.frames, b.frames) and np.array_equal(a.positions, b.positions)
    assert np.array_equal(a.corrupted, b.corrupted)
    c = generate(ScenarioSpec(frames=15, occlusion_fraction=0.2, drift=0.01, seed=12))
    assert not np.array_equal(a.frames, c.frames)


def test_occlusion_fraction_placed():
    s = generate(ScenarioSpec(frames=100, occlusion_fraction=0.2, occlusion_burst=1, seed=3))
    assert s.corrupted.sum() == 20
    assert not s.corrupted[:10].any()
    idx = np.flatnonzero(s.corrupted)
    assert np.all(np.diff(idx) > 1)


def test_default_suite_shape():
    suite = default_suite()
    assert [s.motion for s in suite] == ["static", "linear", "sinusoidal"]
    assert all(s.frames == 200 and s.occlusion_fraction == 0.2 for s in suite)


def test_positions_stay_inside():
    s = generate(ScenarioSpec(frames=400, motion="linear", velocity=(1.5, -2.0), seed=1))
    m = s.spec.target_size
    assert s.positions.min() >= m and s.positions.max() <= 95 - m


def test_blur_and_drift_events():
    spec = ScenarioSpec(frames=6, motion="static", noise=0.0,
                        events=parse_events("2:blur(2); 3:label-drift(4)"), seed=0)
    s = generate(spec)
    assert s.corrupted.tolist() == [False, False, True, True, False, False]
    assert s.frames[2].std() < s.frames[1].std()
    assert np.array_equal(s.positions[3], s.positions[1])
    assert not np.array_equal(s.frames[3], s.frames[1])


def test_parse_events():
    ev = parse_events("12:occlusion(0.5); 30:blur(2)\n 7 : label-drift ( -3 )")
    assert ev == {12: Event("occlusion", 0.5), 30: Event("blur", 2.0), 7: Event("label-drift", -3.0)}
    for bad in ("x:blur(1)", "3:smudge(1)", "3:occlusion(2)"):
        with pytest.raises(InvalidSpec):
            parse_events(bad)


@pytest.mark.parametrize("kw", [dict(frames=1), dict(motion="zigzag"), dict(target_size=60),
                                dict(occlusion_fraction=1.0), dict(events={0: Event("blur", 1)}),
                                dict(frames=5, events={9: Event("blur", 1)})])
def test_invalid_specs(kw):
    with pytest.raises(InvalidSpec):
        ScenarioSpec(**kw)


def test_pgm_round_trip(tmp_path):
    img = np.arange(12.0).reshape(3, 4)
    write_pgm(tmp_path / "a.pgm", img)
    back = read_pgm(tmp_path / "a.pgm")
    assert back.shape == (3, 4)
    np.testing.assert_array_equal(back, np.rint(img / 11 * 255).astype(np.uint8))


def _results(positions, weights=None):
    out = []
    for t, p in enumerate(positions):
        v = 1.0 if weights is None else weights[t]
        out.append(FrameResult(t, tuple(int(x) for x in p), 0.0, np.array([t]), np.array([v]),
                               np.array([1.0])))
    return out


def test_perfect_predictions():
    s = generate(ScenarioSpec(frames=10, seed=1))
    rep = evaluate(_results(s.positions), s)
    assert rep.precision == [1.0] * len(rep.thresholds)
    assert rep.precision_at_20 == 1.0 and rep.mean_center_error == 0.0
    assert rep.auc == pytest.approx(20 / 21)


def test_ten_pixel_offset():
    s = generate(ScenarioSpec(frames=10, seed=1))
    rep = evaluate(_results(s.positions + np.array([6, 8])), s)
    assert rep.precision[9] == 0.0 and rep.precision[10] == 1.0
    assert rep.mean_center_error == 10.0


def test_precision_curve_and_overlap():
    assert precision_curve([0, 5, 30], [4, 5, 30]).tolist() == [1 / 3, 2 / 3, 1.0]
    iou = box_overlap(np.array([[0, 0], [0, 8]]), np.array([[0, 0], [0, 0]]), 16)
    np.testing.assert_allclose(iou, [1.0, 8 * 16 / (2 * 256 - 8 * 16)])


def test_evaluate_weight_statistics():
    spec = ScenarioSpec(frames=4, events=parse_events("2:occlusion(1.0)"), seed=0)
    s = generate(spec)
    rep = evaluate(_results(s.positions, [1.0, 0.6, 0.0, 0.2]), s)
    assert rep.n_corrupted == 1
    assert rep.mean_weight_corrupted == 0.0 and rep.rejection_fraction == 1.0
    assert rep.mean_weight_clean == pytest.approx(0.6)


def test_evaluate_length_mismatch():
    s = generate(ScenarioSpec(frames=4))
    with pytest.raises(LengthMismatch):
        evaluate(_results(s.positions[:3]), s)


def test_report_recomputed_from_csv(tmp_path):
    s = generate(ScenarioSpec(frames=40, occlusion_fraction=0.2, occlusion_burst=1, seed=21))
    res = run_tracker(s, TrackerConfig(update_interval=4))
    rep = evaluate(res, s)
    write_frames_csv(tmp_path / "f.csv", res, s, 3)
    rows = read_frames_csv(tmp_path / "f.csv")
    assert len(rows) == 40
    errs = [math.hypot(r["pred_x"] - r["true_x"], r["pred_y"] - r["true_y"]) for r in rows]
    assert sum(e <= 20 for e in errs) / 40 == rep.precision_at_20
    assert sum(errs) / 40 == pytest.approx(rep.mean_center_error, rel=1e-12)
    for thr, p in zip(rep.thresholds, rep.precision):
        assert sum(e <= thr for e in errs) / 40 == p
    corr = [r["v_final"] for r in rows if r["corrupted"]]
    clean = [r["v_final"] for r in rows if not r["corrupted"]]
    assert sum(corr) / len(corr) == pytest.approx(rep.mean_weight_corrupted, abs=1e-11)
    assert sum(clean) / len(clean) == pytest.approx(rep.mean_weight_clean, abs=1e-11)
    assert sum(v == 0 for v in corr) / len(corr) == rep.rejection_fraction
    # round trip at emitted precision
    for r, row in zip(res, rows):
        assert (row["pred_y"], row["pred_x"]) == r.position
        assert row["c"] == pytest.approx(r.c, rel=1e-11, abs=1e-300)
        assert [row.get(f"selected_stage_{n}") for n in (1, 2, 3)] == (r.selected_per_stage or [None] * 3)


def test_aggregate_pools_by_frames():
    s = generate(ScenarioSpec(frames=10, seed=1))
    a = evaluate(_results(s.positions), s)
    b = evaluate(_results(s.positions + 30), s)
    agg = aggregate([a, b])
    assert agg["scenarios"] == 2 and agg["precision_at_20"] == 0.5
