import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from spltrack.confidence import (ConfidenceConfig, MapTooSmall, NonPositivePeak, confidence_score,
                                 default_radius, detection_confidence, find_two_peaks, peak_ratio)
from spltrack.core import InvariantViolation, ResponseMap


def test_single_impulse():
    m = np.zeros((20, 20))
    m[10, 10] = 0.7
    p = find_two_peaks(ResponseMap(m), 3)
    assert (p.g_max1, p.loc1, p.g_max2) == (0.7, (10, 10), 0.0)


def test_two_equal_impulses():
    m = np.zeros((20, 20))
    m[2, 2] = m[12, 15] = 1.0
    p = find_two_peaks(ResponseMap(m), 3)
    assert p.g_max1 == p.g_max2 == 1.0
    assert p.loc1 == (2, 2) and p.loc2 == (12, 15)


def test_uniform_map_row_major_ties():
    p = find_two_peaks(ResponseMap(np.full((10, 10), 0.3)), 3)
    assert p.g_max1 == p.g_max2 == 0.3
    assert p.loc1 == (0, 0)
    # first row-major cell outside the wrapped 7x7 window around (0, 0)
    assert p.loc2 == (0, 4)


def test_exclusion_window_wraps():
    m = np.zeros((12, 12))
    m[0, 0] = 1.0
    m[11, 11] = 0.9  # adjacent through the wrap
    m[6, 6] = 0.2
    assert find_two_peaks(ResponseMap(m), 2).g_max2 == 0.2


def test_map_too_small():
    with pytest.raises(MapTooSmall):
        find_two_peaks(ResponseMap(np.ones((5, 5))), 3)
    with pytest.raises(MapTooSmall):
        find_two_peaks(ResponseMap(np.ones((7, 7))), 3)


@pytest.mark.parametrize("g1, g2, want", [(1.0, 0.0, 0.0), (0.5, 0.5, 1.0), (0.8, 0.2, 0.25), (1.0, -0.4, 0.0)])
def test_peak_ratio(g1, g2, want):
    assert peak_ratio(g1, g2) == pytest.approx(want, abs=1e-15)


def test_peak_ratio_errors():
    with pytest.raises(NonPositivePeak):
        peak_ratio(0.0, 0.0)
    with pytest.raises(ValueError):
        peak_ratio(0.5, 0.6)


def test_confidence_cases():
    assert confidence_score(0.1, 0.9, ConfidenceConfig(0.3, 0.5)) == 0.0
    for g1 in (0.01, 0.4, 5.0):
        assert confidence_score(0.6, g1, ConfidenceConfig(0.3, 0.5)) == 0.6
    assert confidence_score(0.1, 0.3, ConfidenceConfig(0.3, 0.5)) == 0.1


def test_confidence_from_maps():
    m = np.zeros((30, 30))
    m[15, 15] = 1.0
    m[3, 3] = 0.1
    assert detection_confidence(ResponseMap(m)) == 0.0
    m[3, 3] = 0.8
    assert detection_confidence(ResponseMap(m)) == pytest.approx(0.8)
    assert detection_confidence(ResponseMap(-np.ones((30, 30)))) == 1.0
    assert detection_confidence(ResponseMap(np.zeros((30, 30)))) == 1.0


@pytest.mark.parametrize("kw", [dict(beta1=0.0), dict(beta1=1.0), dict(beta2=0.0), dict(suppression_radius=0)])
def test_config_validation(kw):
    with pytest.raises(InvariantViolation):
        ConfidenceConfig(**kw)


def test_default_radius():
    assert default_radius(20, 40) == 3
    assert default_radius(48, 48) == 4
    assert default_radius(100, 64) == 6


# values on a 1e-6 grid: scaling a subnormal by s can underflow to 0
maps = arrays(float, st.tuples(st.integers(10, 24), st.integers(10, 24)),
              elements=st.integers(-10 ** 6, 10 ** 6).map(lambda k: k * 1e-6))


@given(maps)
def test_confidence_in_unit_interval(m):
    c = detection_confidence(ResponseMap(m))
    assert 0.0 <= c <= 1.0


@given(maps, st.floats(0.01, 100.0))
def test_ratio_scale_invariance(m, s):
    r = default_radius(*m.shape)
    a = find_two_peaks(ResponseMap(m), r)
    b = find_two_peaks(ResponseMap(m * s), r)
    if a.g_max1 > 0:
        assert peak_ratio(b.g_max1, b.g_max2) == pytest.approx(peak_ratio(a.g_max1, a.g_max2), rel=1e-12)
    cfg = ConfidenceConfig(beta2=1e-9)
    # with beta2 out of the way the confidence itself is scale free
    if a.g_max1 > 0:
        assert detection_confidence(ResponseMap(m * s), cfg) == pytest.approx(
            detection_confidence(ResponseMap(m), cfg), rel=1e-12)


@given(st.integers(10, 24), st.integers(0, 30), st.integers(0, 30), st.integers(0, 2 ** 32 - 1))
def test_translation_invariance(n, dy, dx, seed):
    # distinct values so the primary peak is unique and ties cannot move it
    m = np.random.default_rng(seed).permutation(n * n).reshape(n, n) / (n * n) - 0.3
    shifted = np.roll(m, (dy, dx), axis=(0, 1))
    assert detection_confidence(ResponseMap(shifted)) == detection_confidence(ResponseMap(m))
