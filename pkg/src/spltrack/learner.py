"""Discriminative learners driven by sample weights.

Both learners minimize ``sum_k v_k * loss_k(theta) + alpha * R(theta)``
in closed form, where ``loss_k`` is a mean squared error and ``R`` the
squared parameter norm on the same scale as the loss.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .core import ResponseMap, Sample, SPLError, TrainingBuffer
from .pacing import RegularizerKind, regularizer_value


class DimensionMismatch(SPLError, ValueError):
    pass


class AllWeightsZero(SPLError, RuntimeError):
    pass


class SingularSystem(SPLError, np.linalg.LinAlgError):
    pass


def _active(buffer):
    samples = [s for s in buffer if s.v > 0]
    if not samples:
        raise AllWeightsZero("refit needs at least one sample with positive weight")
    return samples


@dataclass(frozen=True)
class RidgeLearner:
    """Linear regressor ``g(x) = w @ x`` with squared loss."""

    dim: int
    alpha: float = 0.0
    weights: Optional[np.ndarray] = None

    def __post_init__(self):
        w = np.zeros(self.dim) if self.weights is None else np.array(self.weights, dtype=float)
        if w.shape != (self.dim,):
            raise DimensionMismatch(f"weights of shape {w.shape} for dimension {self.dim}")
        if not np.all(np.isfinite(w)):
            raise ValueError("non-finite ridge weights")
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    def _x(self, features) -> np.ndarray:
        x = np.asarray(features, dtype=float)
        if x.shape != (self.dim,):
            raise DimensionMismatch(f"features of shape {x.shape}, expected ({self.dim},)")
        return x

    def respond(self, features) -> float:
        return float(self.weights @ self._x(features))

    def loss(self, s: Sample) -> float:
        return (self.respond(s.features) - float(s.label)) ** 2

    def losses(self, buffer) -> np.ndarray:
        return np.array([self.loss(s) for s in buffer], dtype=float)

    def penalty(self) -> float:
        return float(self.weights @ self.weights)

    def refit(self, buffer) -> "RidgeLearner":
        samples = _active(buffer)
        X = np.stack([self._x(s.features) for s in samples])
        y = np.array([float(s.label) for s in samples])
        v = np.array([s.v for s in samples])
        gram = (X * v[:, None]).T @ X + self.alpha * np.eye(self.dim)
        rhs = X.T @ (v * y)
        if self.alpha == 0 and np.linalg.matrix_rank(gram) < self.dim:
            raise SingularSystem("weighted Gram matrix is rank deficient and alpha = 0")
        return RidgeLearner(self.dim, self.alpha, np.linalg.solve(gram, rhs))

    def gradient(self, buffer) -> np.ndarray:
        """Gradient of the weighted objective with respect to the weights."""
        g = 2.0 * self.alpha * self.weights
        for s in buffer:
            x = self._x(s.features)
            g = g + 2.0 * s.v * (self.weights @ x - float(s.label)) * x
        return g


def gaussian_response(shape, sigma: float, center=None) -> np.ndarray:
    """Gaussian label grid with peak 1 at ``center`` (default: grid centre)."""
    h, w = shape
    cy, cx = (h // 2, w // 2) if center is None else center
    yy, xx = np.mgrid[0:h, 0:w]
    return np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2.0 * sigma ** 2))


@dataclass(frozen=True)
class CorrelationFilterLearner:
    """Single-channel correlation filter over ``shape`` patches.

    The filter ``H`` lives in the Fourier domain; the response to a patch
    ``x`` is ``ifft2(conj(H) * fft2(x))``. ``R`` is the mean squared
    spatial filter coefficient, i.e. ``sum |H|**2 / (h*w)**2``.
    """

    shape: tuple
    alpha: float = 1e-2
    sigma: Optional[float] = None
    filt: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        shape = tuple(int(s) for s in self.shape)
        object.__setattr__(self, "shape", shape)
        if self.sigma is None:
            object.__setattr__(self, "sigma", min(shape) / 16.0)
        f = np.zeros(shape, dtype=complex) if self.filt is None else np.array(self.filt, dtype=complex)
        if f.shape != shape:
            raise DimensionMismatch(f"filter of shape {f.shape} for patches of shape {shape}")
        if not np.all(np.isfinite(f)):
            raise ValueError("non-finite filter")
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        f.setflags(write=False)
        object.__setattr__(self, "filt", f)

    def label(self, center=None) -> np.ndarray:
        return gaussian_response(self.shape, self.sigma, center)

    def _check(self, x):
        x = np.asarray(x)
        if x.shape != self.shape:
            raise DimensionMismatch(f"patch of shape {x.shape}, expected {self.shape}")
        return x

    def spectra(self, s: Sample):
        """Cached ``(fft2(features), fft2(label))`` of a sample."""
        cached = s.cache.get("spectra")
        if cached is None:
            x = self._check(s.features)
            y = self._check(s.label)
            cached = (np.fft.fft2(x), np.fft.fft2(y))
            s.cache["spectra"] = cached
        return cached

    def respond(self, features) -> ResponseMap:
        x = self._check(features)
        return ResponseMap(np.real(np.fft.ifft2(np.conj(self.filt) * np.fft.fft2(x))))

    def losses(self, buffer) -> np.ndarray:
        samples = list(buffer)
        if not samples:
            return np.zeros(0)
        xs, ys = zip(*(self.spectra(s) for s in samples))
        return np.asarray(kernels.spectral_losses(self.filt, np.stack(xs), np.stack(ys)))

    def loss(self, s: Sample) -> float:
        return float(self.losses([s])[0])

    def penalty(self) -> float:
        n = self.shape[0] * self.shape[1]
        return float(np.sum(np.abs(self.filt) ** 2)) / n ** 2

    def accumulate(self, buffer):
        """Weighted numerator and denominator over the positive-weight samples."""
        samples = _active(buffer)
        xs, ys = zip(*(self.spectra(s) for s in samples))
        v = np.array([s.v for s in samples])
        return kernels.weighted_spectra(v, np.stack(xs), np.stack(ys))

    def refit(self, buffer) -> "CorrelationFilterLearner":
        num, den = self.accumulate(buffer)
        den = den + self.alpha
        if np.any(den <= 0):
            raise SingularSystem("zero spectral energy at some frequency and alpha = 0")
        return CorrelationFilterLearner(self.shape, self.alpha, self.sigma, num / den)

    def normal_equation_residual(self, buffer) -> float:
        """Max relative residual of the per-frequency normal equations at ``filt``."""
        num, den = self.accumulate(buffer)
        lhs = (den + self.alpha) * self.filt
        scale = np.maximum(np.abs(num), np.abs(lhs))
        scale[scale == 0] = 1.0
        return float(np.max(np.abs(lhs - num) / scale))


def per_sample_loss(state, s: Sample) -> float:
    return state.loss(s)


def refit(state, buffer):
    return state.refit(buffer)


def respond(state, features):
    return state.respond(features)


def objective(state, buffer, lam: float, xi: float, kind: RegularizerKind) -> float:
    """Weighted loss plus ``alpha * R`` plus the self-paced regularizer.

    The confidence term of the detection-guided kind is part of the
    regularizer and is therefore not added a second time.
    """
    v = buffer.weights
    value = state.alpha * state.penalty()
    if len(v):
        value += float(v @ state.losses(buffer))
        value += regularizer_value(v, buffer.rhos, buffer.confidences, lam, xi, kind)
    return value
