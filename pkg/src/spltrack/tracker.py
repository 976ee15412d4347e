"""Online tracking loop with progressive multi-stage sample selection.

Each frame: locate the target at the response argmax, turn the located
patch into a new training sample, score the detection, refresh the
temporal priors and, every ``update_interval`` frames, retrain through
``stages`` self-paced stages of alternating weight/model updates. The
buffer then drops its lowest-weight sample if it overflowed.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .confidence import ConfidenceConfig, detection_confidence
from .core import (InvariantViolation, PacingSchedule, Sample, SPLError, StageTrace,
                   TrainingBuffer)
from .learner import AllWeightsZero, CorrelationFilterLearner, objective
from .pacing import RegularizerKind, solve_weights_batch, weights_vector

log = logging.getLogger(__name__)


class NotInitialized(SPLError, RuntimeError):
    pass


class EmptyFrame(SPLError, ValueError):
    pass


@dataclass(frozen=True)
class TrackerConfig:
    schedule: PacingSchedule = field(default_factory=lambda: PacingSchedule(0.002, 2.0, 3, 0.01))
    confidence: ConfidenceConfig = field(default_factory=ConfidenceConfig)
    capacity: int = 50
    eta: float = 0.01
    update_interval: int = 6
    acs_iters: int = 1
    alpha: float = 1e-2
    patch_size: int = 48
    sigma: Optional[float] = None
    kind: RegularizerKind = RegularizerKind.DETECTION_GUIDED
    # False gives the unweighted baseline: v = rho, one refit per update.
    selection: bool = True
    auto_lambda: bool = False
    tol: float = 1e-6
    normalize_priors: bool = False

    def __post_init__(self):
        if int(self.capacity) != self.capacity or self.capacity < 1:
            raise InvariantViolation("capacity", f"expected a positive integer, got {self.capacity}")
        if not (0.0 <= self.eta < 1.0):
            raise InvariantViolation("eta", f"expected 0 <= eta < 1, got {self.eta}")
        if int(self.update_interval) != self.update_interval or self.update_interval < 1:
            raise InvariantViolation("update_interval", f"expected a positive integer, got {self.update_interval}")
        if int(self.acs_iters) != self.acs_iters or self.acs_iters < 1:
            raise InvariantViolation("acs_iters", f"expected a positive integer, got {self.acs_iters}")
        if self.alpha < 0:
            raise InvariantViolation("alpha", f"expected alpha >= 0, got {self.alpha}")
        if int(self.patch_size) != self.patch_size or self.patch_size < 8:
            raise InvariantViolation("patch_size", f"expected an integer >= 8, got {self.patch_size}")


@dataclass
class FrameResult:
    frame: int
    position: Tuple[int, int]
    c: float
    ids: np.ndarray
    weights: np.ndarray
    rhos: np.ndarray
    stages: List[StageTrace] = field(default_factory=list)
    updated: bool = False
    update_failed: bool = False

    @property
    def selected_per_stage(self) -> List[int]:
        return [tr.selected for tr in self.stages]


def update_priors(buffer: TrainingBuffer, eta: float, normalize: bool = False) -> TrainingBuffer:
    """Newest sample gets prior 1; each older one ``(1 - eta)`` times its successor."""
    if not (0.0 <= eta < 1.0):
        raise InvariantViolation("eta", f"expected 0 <= eta < 1, got {eta}")
    n = len(buffer)
    rho = (1.0 - eta) ** np.arange(n - 1, -1, -1, dtype=float)
    if normalize and n:
        rho = rho / rho.sum()
    for s, r in zip(buffer, rho):
        s.rho = float(r)
    return buffer


def replace_if_full(buffer: TrainingBuffer) -> Optional[Sample]:
    """Evict the lowest-weight sample (oldest on ties) when over capacity."""
    if len(buffer) <= buffer.capacity:
        return None
    i = int(np.argmin(buffer.weights))
    return buffer.remove_index(i)


def extract_patch(frame: np.ndarray, center, size: int) -> np.ndarray:
    """``size`` x ``size`` crop centred on ``center``; edges are replicated."""
    r, c = int(center[0]), int(center[1])
    half = size // 2
    padded = np.pad(frame, half + 1, mode="edge")
    # pixel (r, c) sits at (r + half + 1, c + half + 1) in the padded frame
    return padded[r + 1:r + 1 + size, c + 1:c + 1 + size]


def preprocess(patch: np.ndarray, window: np.ndarray) -> np.ndarray:
    p = np.asarray(patch, dtype=float)
    p = (p - p.mean()) / (p.std() + 1e-5)
    return p * window


class Tracker:
    """Sequential tracking state machine; one instance per sequence."""

    def __init__(self, config: TrackerConfig = TrackerConfig()):
        self.config = config
        m = int(config.patch_size)
        self.window = np.outer(np.hanning(m), np.hanning(m))
        self.model = CorrelationFilterLearner((m, m), config.alpha, config.sigma)
        self.template = self.model.label()
        self.buffer = TrainingBuffer(config.capacity, config.eta, config.normalize_priors)
        self.schedule = config.schedule
        self.position: Optional[Tuple[int, int]] = None
        self.frame_shape: Optional[Tuple[int, int]] = None
        self.t = -1
        self._lambda_fixed = not config.auto_lambda

    @property
    def initialized(self) -> bool:
        return self.position is not None

    def _sample(self, frame, position, t, c, v) -> Sample:
        feats = preprocess(extract_patch(frame, position, self.config.patch_size), self.window)
        return Sample(id=t, features=feats, label=self.template, rho=1.0, c=c, v=v)

    def initialize(self, frame, position, frame_id: int = 0) -> FrameResult:
        """Fit the first model on the ground-truth sample with full weight."""
        frame = self._check_frame(frame)
        self.frame_shape = frame.shape
        self.position = (int(position[0]), int(position[1]))
        self.t = int(frame_id)
        s = self._sample(frame, self.position, self.t, 0.0, 1.0)
        self.buffer.append(s)
        update_priors(self.buffer, self.config.eta, self.config.normalize_priors)
        self.model = self.model.refit(self.buffer)
        return FrameResult(self.t, self.position, 0.0, self.buffer.ids, self.buffer.weights,
                           self.buffer.rhos, [], True)

    def _check_frame(self, frame) -> np.ndarray:
        frame = np.asarray(frame, dtype=float)
        if frame.ndim != 2 or frame.size == 0:
            raise EmptyFrame(f"expected a non-empty 2D frame, got shape {frame.shape}")
        return frame

    def detect(self, frame):
        """Response map at the current position and the implied new position."""
        m = self.config.patch_size
        patch = preprocess(extract_patch(frame, self.position, m), self.window)
        rmap = self.model.respond(patch)
        r, c = np.unravel_index(int(np.argmax(rmap.values)), rmap.values.shape)
        # circular response: wrap displacements into [-m/2, m/2)
        dr = (r - m // 2 + m // 2) % m - m // 2
        dc = (c - m // 2 + m // 2) % m - m // 2
        h, w = frame.shape
        pos = (int(np.clip(self.position[0] + dr, 0, h - 1)),
               int(np.clip(self.position[1] + dc, 0, w - 1)))
        return rmap, pos

    def step(self, frame) -> FrameResult:
        if not self.initialized:
            raise NotInitialized("call initialize() with the first frame and target position")
        frame = self._check_frame(frame)
        cfg = self.config
        self.t += 1
        rmap, pos = self.detect(frame)
        self.position = pos
        c = detection_confidence(rmap, cfg.confidence)
        s = self._sample(frame, pos, self.t, c, 1.0)
        if cfg.selection:
            # provisional weight at the final pace until the next update
            l = self.model.loss(s)
            lam = self.schedule.paces()[-1]
            s.v = float(weights_vector([l], [1.0], [c], lam, self.schedule.xi, cfg.kind)[0])
        self.buffer.append(s)
        update_priors(self.buffer, cfg.eta, cfg.normalize_priors)
        if not cfg.selection:
            self.buffer.set_weights(self.buffer.rhos)

        traces: List[StageTrace] = []
        updated = failed = False
        if self.t % cfg.update_interval == 0:
            try:
                traces = multi_stage_update(self)
                updated = True
            except AllWeightsZero:
                log.warning("frame %d: no sample admitted at the final pace; model kept", self.t)
                failed = True
        # snapshot before eviction so every sample's last weight is reported
        result = FrameResult(self.t, pos, c, self.buffer.ids, self.buffer.weights, self.buffer.rhos,
                             traces, updated, failed)
        replace_if_full(self.buffer)
        return result


def multi_stage_update(tracker: Tracker, hold_model: bool = False) -> List[StageTrace]:
    """Run every pacing stage of one model update and return the traces.

    Within a stage, weights and model are updated alternately for at most
    ``acs_iters`` rounds, stopping early once the weights move less than
    ``tol``. Each stage starts from the previous stage's model. With
    ``hold_model`` the model is never refit (used to test the weight path
    alone).
    """
    cfg = tracker.config
    buf = tracker.buffer
    if len(buf) == 0:
        raise AllWeightsZero("empty buffer")
    model = tracker.model
    if not cfg.selection:
        buf.set_weights(buf.rhos)
        model = model.refit(buf)
        tracker.model = model
        v = buf.weights
        return [StageTrace(1, float("nan"), [], v, 1)]

    if not tracker._lambda_fixed:
        med = float(np.median(model.losses(buf)))
        if med > 0:
            tracker.schedule = tracker.schedule.with_lambda0(med)
        tracker._lambda_fixed = True
    sched = tracker.schedule
    paces = sched.paces()
    traces = []
    for n, lam in enumerate(paces, start=1):
        objs: List[float] = []
        prev = None
        it = 0
        for it in range(1, cfg.acs_iters + 1):
            v = solve_weights_batch(buf, model.losses(buf), lam, sched.xi, cfg.kind)
            objs.append(objective(model, buf, lam, sched.xi, cfg.kind))
            if not np.any(v > 0):
                if n == len(paces):
                    raise AllWeightsZero(f"no sample admitted at pace {lam:g}")
                break
            if not hold_model:
                model = model.refit(buf)
                objs.append(objective(model, buf, lam, sched.xi, cfg.kind))
            if prev is not None and np.max(np.abs(v - prev)) < cfg.tol:
                break
            prev = v
        traces.append(StageTrace(n, lam, objs, buf.weights, it))
    tracker.model = model
    return traces
