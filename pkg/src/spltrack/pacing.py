"""Self-paced regularizers and their closed-form weight solutions.

Three regularizers are supported, each a special case of the next:

* ``PLAIN``: ``lam * sum(v**2 / 2 - v)``
* ``TIME_WEIGHTED``: ``lam * sum(v**2 / (2 * rho) - v)``
* ``DETECTION_GUIDED``: the time-weighted term plus ``xi * sum(c * v)``

For fixed losses the weight problem is separable and convex, and each
weight has the closed form ``rho * (1 - (l + xi*c) / lam)`` clipped to
zero once ``l + xi*c >= lam``.
"""
from __future__ import annotations

import enum
import math

import numpy as np

from . import kernels
from .core import InvalidPrior, LengthMismatch, NonFinite, NonPositivePace, TrainingBuffer


class RegularizerKind(enum.Enum):
    PLAIN = "plain"
    TIME_WEIGHTED = "time"
    DETECTION_GUIDED = "guided"

    @classmethod
    def parse(cls, name: str) -> "RegularizerKind":
        aliases = {"spl": cls.PLAIN, "spl-tki": cls.TIME_WEIGHTED, "tki": cls.TIME_WEIGHTED,
                   "spl-dci": cls.DETECTION_GUIDED, "dci": cls.DETECTION_GUIDED}
        key = name.strip().lower()
        if key in aliases:
            return aliases[key]
        try:
            return cls(key)
        except ValueError:
            return cls[key.upper()]


def _check_loss(l):
    if not math.isfinite(l):
        raise NonFinite(f"loss must be finite, got {l}")


def _check_pace(lam):
    if not math.isfinite(lam):
        raise NonFinite(f"pace must be finite, got {lam}")
    if lam <= 0:
        raise NonPositivePace(f"pace must be positive, got {lam}")


def _check_prior(rho):
    if not (math.isfinite(rho) and 0.0 < rho <= 1.0):
        raise InvalidPrior(f"rho must lie in (0, 1], got {rho}")


def solve_weight_plain(l: float, lam: float) -> float:
    _check_loss(l)
    _check_pace(lam)
    if l >= lam:
        return 0.0
    return 1.0 - l / lam


def solve_weight_time(l: float, rho: float, lam: float) -> float:
    _check_loss(l)
    _check_pace(lam)
    _check_prior(rho)
    if l >= lam:
        return 0.0
    return rho * (1.0 - l / lam)


def solve_weight_guided(l: float, c: float, rho: float, lam: float, xi: float) -> float:
    _check_loss(l)
    _check_pace(lam)
    _check_prior(rho)
    if not (math.isfinite(c) and c >= 0):
        raise NonFinite(f"confidence must be finite and >= 0, got {c}")
    if not (math.isfinite(xi) and xi >= 0):
        raise NonFinite(f"xi must be finite and >= 0, got {xi}")
    eff = l + xi * c
    if eff >= lam:
        return 0.0
    return rho * (1.0 - eff / lam)


def _effective_inputs(n, rhos, cs, xi, kind):
    # Map each kind onto the guided form: plain has rho = 1, neither plain
    # nor time-weighted sees the confidence term.
    if kind is RegularizerKind.PLAIN:
        return np.ones(n), np.zeros(n), 0.0
    if kind is RegularizerKind.TIME_WEIGHTED:
        return rhos, np.zeros(n), 0.0
    return rhos, cs, xi


def weights_vector(losses, rhos, cs, lam: float, xi: float, kind: RegularizerKind) -> np.ndarray:
    """Closed-form weights for aligned arrays; no buffer involved."""
    losses = np.asarray(losses, dtype=float)
    n = losses.shape[0]
    rhos = np.ones(n) if rhos is None else np.asarray(rhos, dtype=float)
    cs = np.zeros(n) if cs is None else np.asarray(cs, dtype=float)
    if rhos.shape != (n,) or cs.shape != (n,):
        raise LengthMismatch(f"losses {losses.shape}, rhos {rhos.shape}, cs {cs.shape}")
    if not np.all(np.isfinite(losses)):
        raise NonFinite("losses must be finite")
    _check_pace(lam)
    if np.any(~(rhos > 0)) or np.any(rhos > 1):
        raise InvalidPrior("rho must lie in (0, 1]")
    r, c, x = _effective_inputs(n, rhos, cs, xi, kind)
    return kernels.guided_weights(losses, c, r, lam, x)


def solve_weights_batch(buffer: TrainingBuffer, losses, lam: float, xi: float,
                        kind: RegularizerKind) -> np.ndarray:
    """Solve every weight in ``buffer`` and write it back into the samples."""
    losses = np.asarray(losses, dtype=float)
    if losses.shape != (len(buffer),):
        raise LengthMismatch(f"{losses.size} losses for {len(buffer)} samples")
    v = weights_vector(losses, buffer.rhos, buffer.confidences, lam, xi, kind)
    buffer.set_weights(v)
    return v


def regularizer_value(weights, rhos, cs, lam: float, xi: float, kind: RegularizerKind) -> float:
    v = np.asarray(weights, dtype=float)
    n = v.shape[0]
    rhos = np.ones(n) if rhos is None else np.asarray(rhos, dtype=float)
    cs = np.zeros(n) if cs is None else np.asarray(cs, dtype=float)
    if rhos.shape != (n,) or cs.shape != (n,):
        raise LengthMismatch(f"weights {v.shape}, rhos {rhos.shape}, cs {cs.shape}")
    if kind is RegularizerKind.PLAIN:
        return float(lam * np.sum(0.5 * v ** 2 - v))
    value = float(lam * np.sum(0.5 * v ** 2 / rhos - v))
    if kind is RegularizerKind.DETECTION_GUIDED:
        value += float(xi * np.sum(cs * v))
    return value


def weight_objective(weights, losses, rhos, cs, lam, xi, kind) -> float:
    """Weighted loss plus regularizer: the weight subproblem for fixed losses."""
    v = np.asarray(weights, dtype=float)
    return float(np.dot(v, np.asarray(losses, dtype=float))) + regularizer_value(v, rhos, cs, lam, xi, kind)


def oracle_minimize_weights(losses, rhos, cs, lam: float, xi: float,
                            kind: RegularizerKind = RegularizerKind.DETECTION_GUIDED) -> np.ndarray:
    """Numerically minimize the weight subproblem over the unit box.

    The objective is expanded into per-coordinate quadratic and linear
    coefficients and handed to projected coordinate descent with a
    bisection line search. No thresholding rule is used, so the result is
    an independent check on the closed form. Intended for small instances.
    """
    losses = np.asarray(losses, dtype=float)
    n = losses.shape[0]
    rhos = np.ones(n) if rhos is None else np.asarray(rhos, dtype=float)
    cs = np.zeros(n) if cs is None else np.asarray(cs, dtype=float)
    r, c, x = _effective_inputs(n, rhos, cs, xi, kind)
    # v*l + lam*(v**2/(2r) - v) + x*c*v
    quad = lam / (2.0 * r)
    lin = losses - lam + x * c
    v, _ = kernels.coordinate_descent(quad, lin)
    return v


def grid_minimize_1d(f, lo: float = 0.0, hi: float = 1.0, points: int = 201, rounds: int = 40) -> float:
    """Minimize a unimodal scalar function by repeated dense-grid refinement."""
    for _ in range(rounds):
        xs = np.linspace(lo, hi, points)
        fs = np.array([f(x) for x in xs])
        i = int(np.argmin(fs))
        step = xs[1] - xs[0]
        lo, hi = max(xs[0], xs[i] - step), min(xs[-1], xs[i] + step)
        if hi - lo < 1e-15:
            break
    return 0.5 * (lo + hi)
