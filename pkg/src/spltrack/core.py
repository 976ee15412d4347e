"""Domain types shared by every other module.

Samples carry the per-frame quantities the selection machinery works on:
the learner payload, the desired output, the temporal prior ``rho``, the
detection confidence ``c`` and the current self-paced weight ``v``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any, Iterator, List, Optional

import numpy as np


class SPLError(Exception):
    """Base class for library errors."""


class InvariantViolation(SPLError, ValueError):
    def __init__(self, field_name: str, message: str = ""):
        self.field = field_name
        super().__init__(f"invariant violated for {field_name!r}" + (f": {message}" if message else ""))


class NonFinite(SPLError, ValueError):
    pass


class NonPositivePace(SPLError, ValueError):
    pass


class InvalidPrior(SPLError, ValueError):
    pass


class LengthMismatch(SPLError, ValueError):
    pass


@dataclass
class Sample:
    id: int
    features: Any
    label: Any
    rho: float = 1.0
    c: float = 0.0
    v: float = 1.0
    # Simulator ground truth. The optimizer never reads this.
    corrupted: Optional[bool] = None
    # Cached spectra, filled lazily by the correlation filter learner.
    cache: dict = field(default_factory=dict, repr=False, compare=False)


def validate_sample(s: Sample) -> None:
    """Raise :class:`InvariantViolation` naming the first bad field."""
    if not (math.isfinite(s.v) and 0.0 <= s.v <= 1.0):
        raise InvariantViolation("v", f"expected 0 <= v <= 1, got {s.v}")
    if not (math.isfinite(s.rho) and 0.0 < s.rho <= 1.0):
        raise InvariantViolation("rho", f"expected 0 < rho <= 1, got {s.rho}")
    if not (math.isfinite(s.c) and s.c >= 0.0):
        raise InvariantViolation("c", f"expected c >= 0, got {s.c}")


class TrainingBuffer:
    """Bounded, id-ordered sample store.

    ``eta`` is the temporal decay rate. The newest sample always has
    ``rho == 1`` and each older one decays by ``1 - eta`` per position.
    With ``normalize=True`` the priors are instead rescaled to sum to one;
    that breaks the ``max(rho) == 1`` anchoring, so it is off by default.
    """

    def __init__(self, capacity: int, eta: float, normalize: bool = False):
        if int(capacity) != capacity or capacity < 1:
            raise InvariantViolation("capacity", f"expected a positive integer, got {capacity}")
        if not (0.0 <= eta < 1.0):
            raise InvariantViolation("eta", f"expected 0 <= eta < 1, got {eta}")
        self.capacity = int(capacity)
        self.eta = float(eta)
        self.normalize = normalize
        self.samples: List[Sample] = []

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self) -> Iterator[Sample]:
        return iter(self.samples)

    def __getitem__(self, i):
        return self.samples[i]

    def append(self, s: Sample) -> None:
        """Add the newest sample; does not evict (see tracker.replace_if_full)."""
        if self.samples and s.id <= self.samples[-1].id:
            raise InvariantViolation("id", f"id {s.id} not greater than {self.samples[-1].id}")
        validate_sample(s)
        self.samples.append(s)

    def remove_index(self, i: int) -> Sample:
        return self.samples.pop(i)

    @property
    def ids(self) -> np.ndarray:
        return np.array([s.id for s in self.samples], dtype=np.int64)

    @property
    def weights(self) -> np.ndarray:
        return np.array([s.v for s in self.samples], dtype=float)

    @property
    def rhos(self) -> np.ndarray:
        return np.array([s.rho for s in self.samples], dtype=float)

    @property
    def confidences(self) -> np.ndarray:
        return np.array([s.c for s in self.samples], dtype=float)

    def set_weights(self, v) -> None:
        v = np.asarray(v, dtype=float)
        if v.shape != (len(self.samples),):
            raise LengthMismatch(f"{v.shape[0] if v.ndim else 0} weights for {len(self.samples)} samples")
        for s, w in zip(self.samples, v):
            s.v = float(w)

    def check(self) -> None:
        """Validate every buffer invariant."""
        if len(self.samples) > self.capacity:
            raise InvariantViolation("capacity", f"{len(self.samples)} > {self.capacity}")
        prev = None
        for s in self.samples:
            validate_sample(s)
            if prev is not None and s.id <= prev:
                raise InvariantViolation("id", "ids not strictly increasing")
            prev = s.id


@dataclass(frozen=True)
class PacingSchedule:
    lambda0: float
    mu: float
    stages: int
    xi: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.lambda0) and self.lambda0 > 0):
            raise InvariantViolation("lambda0", f"expected lambda0 > 0, got {self.lambda0}")
        if not (math.isfinite(self.mu) and self.mu > 1):
            raise InvariantViolation("mu", f"expected mu > 1, got {self.mu}")
        if int(self.stages) != self.stages or self.stages < 1:
            raise InvariantViolation("stages", f"expected stages >= 1, got {self.stages}")
        if not (math.isfinite(self.xi) and self.xi >= 0):
            raise InvariantViolation("xi", f"expected xi >= 0, got {self.xi}")

    def paces(self) -> List[float]:
        """The per-stage paces ``lambda0 * mu**(n-1)`` for ``n = 1..stages``."""
        return [self.lambda0 * self.mu ** n for n in range(int(self.stages))]

    def with_lambda0(self, lambda0: float) -> "PacingSchedule":
        return replace(self, lambda0=float(lambda0))


@dataclass(frozen=True)
class ResponseMap:
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.ndim != 2 or vals.size == 0:
            raise InvariantViolation("values", f"expected a non-empty 2D grid, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise InvariantViolation("values", "non-finite response")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


@dataclass
class StageTrace:
    stage: int
    pace: float
    objectives: List[float]
    weights: np.ndarray
    iterations: int

    @property
    def selected(self) -> int:
        return int(np.count_nonzero(self.weights > 0))

    def is_descending(self, slack: float = 1e-12) -> bool:
        obj = self.objectives
        return all(b <= a + slack for a, b in zip(obj, obj[1:]))
