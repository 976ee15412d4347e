"""Acceptance criteria, one test each, with a PASS/FAIL line per criterion."""
import json
import time

import numpy as np
import pytest

from conftest import record
from spltrack import cli
from spltrack.checks import filter_normal_residual, random_instance, ridge_gradient_error
from spltrack.core import Sample, TrainingBuffer
from spltrack.pacing import RegularizerKind, oracle_minimize_weights, solve_weights_batch, weights_vector
from spltrack.sim import ScenarioSpec, default_suite, evaluate, generate, run_tracker
from spltrack.tracker import TrackerConfig

GUIDED = RegularizerKind.DETECTION_GUIDED


def fill(losses, rhos, cs):
    buf = TrainingBuffer(len(losses), 0.0)
    for k in range(len(losses)):
        buf.append(Sample(k, None, None, rho=float(rhos[k]), c=float(cs[k])))
    return buf


def test_closed_form_matches_oracle():
    rng = np.random.default_rng(100)
    t0 = time.perf_counter()
    worst, count = 0.0, 0
    for kind in RegularizerKind:
        for _ in range(1000):
            losses, rhos, cs, lam, xi = random_instance(rng, int(rng.integers(1, 21)))
            v = solve_weights_batch(fill(losses, rhos, cs), losses, lam, xi, kind)
            o = oracle_minimize_weights(losses, rhos, cs, lam, xi, kind)
            worst = max(worst, float(np.max(np.abs(v - o))))
            count += 1
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-6 and elapsed < 10.0
    record("closed form vs oracle", ok, f"{count} instances, max dev {worst:.2e}, {elapsed:.2f} s")
    assert ok


def test_stationarity_and_boundary():
    rng = np.random.default_rng(101)
    resid, boundary_dev, n_boundary = 0.0, 0.0, 0
    for _ in range(100):
        losses, rhos, cs, lam, xi = random_instance(rng, int(rng.integers(1, 21)))
        v = weights_vector(losses, rhos, cs, lam, xi, GUIDED)
        inner = v > 0
        if inner.any():
            r = losses + lam * v / rhos - lam + xi * cs
            resid = max(resid, float(np.max(np.abs(r[inner]))))
        if (~inner).any():
            o = oracle_minimize_weights(losses, rhos, cs, lam, xi, GUIDED)
            boundary_dev = max(boundary_dev, float(np.max(np.abs(o[~inner]))))
            n_boundary += int((~inner).sum())
    ok = resid < 1e-10 and boundary_dev < 1e-6 and n_boundary > 0
    record("stationarity residual / boundary branch", ok,
           f"residual {resid:.2e}, boundary dev {boundary_dev:.2e} over {n_boundary} zero weights")
    assert ok


def test_reduction_identities():
    rng = np.random.default_rng(102)
    bad = 0
    for _ in range(1000):
        losses, rhos, cs, lam, xi = random_instance(rng, int(rng.integers(1, 21)))
        ones = np.ones_like(rhos)
        plain = weights_vector(losses, rhos, cs, lam, xi, RegularizerKind.PLAIN)
        time_ones = weights_vector(losses, ones, cs, lam, xi, RegularizerKind.TIME_WEIGHTED)
        time_w = weights_vector(losses, rhos, cs, lam, xi, RegularizerKind.TIME_WEIGHTED)
        guided0 = weights_vector(losses, rhos, cs, lam, 0.0, GUIDED)
        bad += (not np.array_equal(plain, time_ones)) + (not np.array_equal(time_w, guided0))
    record("reduction identities", bad == 0, f"{bad} mismatches over 1000 instances")
    assert bad == 0


def test_monotone_inclusion():
    rng = np.random.default_rng(103)
    violations = 0
    for _ in range(1000):
        losses, rhos, cs, _, xi = random_instance(rng, int(rng.integers(1, 21)))
        lams = np.sort(rng.uniform(0.05, 3.0, 3))
        supports = [weights_vector(losses, rhos, cs, lam, xi, GUIDED) > 0 for lam in lams]
        violations += sum(int(np.any(a & ~b)) for a, b in zip(supports, supports[1:]))
    record("monotone inclusion", violations == 0, f"{violations} violations over 1000 instances")
    assert violations == 0


def test_acs_descent():
    violations, traces = 0, 0
    motions = ("static", "linear", "sinusoidal")
    for seed in range(50):
        spec = ScenarioSpec(frames=30, motion=motions[seed % 3], occlusion_fraction=0.2, occlusion_burst=1,
                            warmup=5, seed=1000 + seed)
        cfg = TrackerConfig(update_interval=3, acs_iters=4)
        for r in run_tracker(generate(spec), cfg):
            for tr in r.stages:
                traces += 1
                violations += not tr.is_descending(1e-12)
    ok = violations == 0 and traces > 0
    record("ACS descent", ok, f"{violations} violations over {traces} stage traces in 50 scenarios")
    assert ok


def test_learner_optimality():
    g_err = ridge_gradient_error(seed=104, trials=50)
    resid = filter_normal_residual(seed=105, trials=50)
    ok = g_err < 1e-5 and resid < 1e-10
    record("learner optimality", ok, f"ridge FD rel err {g_err:.2e}, filter residual {resid:.2e}")
    assert ok


def test_outlier_rejection_trend():
    lines, ok = [], True
    for spec in default_suite():
        stream = generate(spec)
        t0 = time.perf_counter()
        spl = evaluate(run_tracker(stream, TrackerConfig()), stream)
        elapsed = time.perf_counter() - t0
        base = evaluate(run_tracker(stream, TrackerConfig(selection=False)), stream)
        good = (spl.mean_weight_corrupted < spl.mean_weight_clean
                and spl.mean_weight_corrupted < base.mean_weight_corrupted and elapsed < 60.0)
        ok &= good
        lines.append(f"{spec.motion}: corrupt {spl.mean_weight_corrupted:.3f} < clean {spl.mean_weight_clean:.3f},"
                     f" baseline corrupt {base.mean_weight_corrupted:.3f}, {elapsed:.1f} s")
    record("outlier rejection trend", ok, "; ".join(lines))
    assert ok


def test_ablation_shape(tmp_path):
    out = tmp_path / "ablate"
    code = cli.main(["run", "--out", str(out), "--ablate", "stages=1,2,3,4", "--ablate", "interval=1,6,8"])
    stages = json.loads((out / "ablation_stages.json").read_text())["rows"]
    intervals = json.loads((out / "ablation_interval.json").read_text())["rows"]
    rej = {r["stages"]: r["rejection_fraction"] for r in stages}
    ok = (code == 0 and [r["stages"] for r in stages] == [1, 2, 3, 4]
          and [r["interval"] for r in intervals] == [1, 6, 8] and rej[3] >= rej[1])
    record("ablation shape", ok, "rejection by N: " + ", ".join(f"{n}={v:.3f}" for n, v in rej.items()))
    assert ok


def test_determinism(tmp_path):
    assert cli.main(["run", "--out", str(tmp_path / "a")]) == 0
    assert cli.main(["run", "--out", str(tmp_path / "b")]) == 0
    names = sorted(p.parent.name for p in (tmp_path / "a").glob("*/frames.csv"))
    same = all((tmp_path / "a" / n / "frames.csv").read_bytes() == (tmp_path / "b" / n / "frames.csv").read_bytes()
               for n in names)
    ok = same and len(names) == 3
    record("determinism", ok, f"{len(names)} CSVs compared byte for byte")
    assert ok
