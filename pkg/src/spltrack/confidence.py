"""Detection confidence from a response map.

A detection is trusted (confidence 0) when the map has one dominant,
strong peak. Otherwise the confidence is the ratio of the secondary peak
to the primary one, so larger values mean a less reliable detection.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Tuple

import numpy as np

from . import kernels
from .core import InvariantViolation, ResponseMap, SPLError


class MapTooSmall(SPLError, ValueError):
    pass


class NonPositivePeak(SPLError, ValueError):
    pass


def default_radius(height: int, width: int) -> int:
    return max(3, min(height, width) // 10)


@dataclass(frozen=True)
class ConfidenceConfig:
    beta1: float = 0.5
    beta2: float = 0.15
    # None means default_radius() of the map being analysed.
    suppression_radius: Optional[int] = None

    def __post_init__(self):
        if not (0.0 < self.beta1 < 1.0):
            raise InvariantViolation("beta1", f"expected 0 < beta1 < 1, got {self.beta1}")
        if not (math.isfinite(self.beta2) and self.beta2 > 0.0):
            raise InvariantViolation("beta2", f"expected beta2 > 0, got {self.beta2}")
        r = self.suppression_radius
        if r is not None and (int(r) != r or r < 1):
            raise InvariantViolation("suppression_radius", f"expected an integer >= 1, got {r}")

    def radius_for(self, rmap: ResponseMap) -> int:
        if self.suppression_radius is None:
            return default_radius(rmap.height, rmap.width)
        return int(self.suppression_radius)


class Peaks(NamedTuple):
    g_max1: float
    loc1: Tuple[int, int]
    g_max2: float
    loc2: Tuple[int, int]


def find_two_peaks(rmap: ResponseMap, radius: int) -> Peaks:
    """Global maximum and the best cell outside its exclusion window.

    The window is a Chebyshev ball of ``radius`` measured with wrap-around,
    matching the circular geometry of correlation responses. Ties go to
    the first cell in row-major order.
    """
    if not isinstance(rmap, ResponseMap):
        rmap = ResponseMap(rmap)
    side = 2 * int(radius) + 1
    if rmap.height * rmap.width < side * side or rmap.height < side or rmap.width < side:
        raise MapTooSmall(f"{rmap.height}x{rmap.width} map cannot hold a {side}x{side} window")
    g1, r1, c1, g2, r2, c2 = kernels.two_peaks(rmap.values, int(radius))
    if r2 < 0:
        raise MapTooSmall(f"no cell of the {rmap.height}x{rmap.width} map lies outside radius {radius}")
    return Peaks(float(g1), (int(r1), int(c1)), float(g2), (int(r2), int(c2)))


def peak_ratio(g_max1: float, g_max2: float) -> float:
    if not g_max1 > 0:
        raise NonPositivePeak(f"primary peak must be positive, got {g_max1}")
    if g_max2 > g_max1:
        raise ValueError(f"secondary peak {g_max2} exceeds primary {g_max1}")
    return max(g_max2, 0.0) / g_max1


def confidence_score(pr: float, g_max1: float, cfg: ConfidenceConfig = ConfidenceConfig()) -> float:
    """0 for a sharp, strong peak; otherwise the peak ratio itself."""
    if pr <= cfg.beta1 and g_max1 > cfg.beta2:
        return 0.0
    return float(pr)


def detection_confidence(rmap: ResponseMap, cfg: ConfidenceConfig = ConfidenceConfig()) -> float:
    """Confidence score in ``[0, 1]``; 1 for maps with no positive response."""
    if not isinstance(rmap, ResponseMap):
        rmap = ResponseMap(rmap)
    peaks = find_two_peaks(rmap, cfg.radius_for(rmap))
    if peaks.g_max1 <= 0:
        return 1.0
    return confidence_score(peak_ratio(peaks.g_max1, peaks.g_max2), peaks.g_max1, cfg)
