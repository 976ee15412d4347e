"""Synthetic corrupted sequences and tracking metrics.

A scenario renders a textured target moving over a textured background.
Selected frames are corrupted by occlusion, blur or a displaced
appearance. Corruption flags live only in the ground truth and are used
by :func:`evaluate`, never by the tracker.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .core import LengthMismatch, SPLError

EVENT_KINDS = ("clean", "occlusion", "blur", "label-drift")
MOTIONS = ("static", "linear", "sinusoidal")
TARGETS = ("texture", "blob")


class InvalidSpec(SPLError, ValueError):
    pass


@dataclass(frozen=True)
class Event:
    kind: str
    value: float = 0.0

    def __post_init__(self):
        if self.kind not in EVENT_KINDS:
            raise InvalidSpec(f"unknown event kind {self.kind!r}")
        if self.kind == "occlusion" and not (0.0 <= self.value <= 1.0):
            raise InvalidSpec(f"occlusion coverage must lie in [0, 1], got {self.value}")
        if self.kind == "blur" and (self.value < 0 or int(self.value) != self.value):
            raise InvalidSpec(f"blur radius must be a non-negative integer, got {self.value}")

    @property
    def corrupting(self) -> bool:
        if self.kind == "clean":
            return False
        return self.value > 0

    def __str__(self):
        if self.kind == "clean":
            return "clean"
        return f"{self.kind}({self.value:g})"


_EVENT_RE = re.compile(r"^\s*(\d+)\s*:\s*([a-z-]+)\s*(?:\(\s*([-+0-9.eE]+)\s*\))?\s*$")


def parse_events(text: str) -> Dict[int, Event]:
    """Parse ``"12:occlusion(1.0); 30:blur(2)"`` into a frame -> event map."""
    out: Dict[int, Event] = {}
    for part in re.split(r"[;\n]", text or ""):
        if not part.strip():
            continue
        m = _EVENT_RE.match(part)
        if not m:
            raise InvalidSpec(f"cannot parse event {part.strip()!r}")
        frame, kind, value = int(m.group(1)), m.group(2), m.group(3)
        out[frame] = Event(kind, float(value) if value is not None else 0.0)
    return out


@dataclass(frozen=True)
class ScenarioSpec:
    frames: int = 200
    height: int = 96
    width: int = 96
    target: str = "texture"
    target_size: int = 16
    drift: float = 0.0
    motion: str = "linear"
    velocity: Tuple[float, float] = (0.15, 0.1)
    amplitude: float = 12.0
    period: float = 120.0
    start: Optional[Tuple[float, float]] = None
    noise: float = 0.05
    # background texture amplitude relative to the unit-contrast target
    clutter: float = 0.25
    seed: int = 0
    events: Dict[int, Event] = field(default_factory=dict)
    # Randomly placed full occlusions on top of ``events``, as a frame fraction.
    occlusion_fraction: float = 0.0
    occlusion_burst: int = 2
    warmup: int = 10

    def __post_init__(self):
        if self.frames < 2:
            raise InvalidSpec("a scenario needs at least 2 frames")
        if self.height < 16 or self.width < 16:
            raise InvalidSpec("frames must be at least 16x16")
        if self.target not in TARGETS:
            raise InvalidSpec(f"target must be one of {TARGETS}, got {self.target!r}")
        if self.motion not in MOTIONS:
            raise InvalidSpec(f"motion must be one of {MOTIONS}, got {self.motion!r}")
        if not (2 <= self.target_size <= min(self.height, self.width) // 2):
            raise InvalidSpec(f"target_size {self.target_size} does not fit the frame")
        if not (0.0 <= self.drift <= 1.0):
            raise InvalidSpec(f"drift must lie in [0, 1], got {self.drift}")
        if self.noise < 0:
            raise InvalidSpec(f"noise must be >= 0, got {self.noise}")
        if not (0.0 <= self.occlusion_fraction < 1.0):
            raise InvalidSpec(f"occlusion_fraction must lie in [0, 1), got {self.occlusion_fraction}")
        if self.occlusion_burst < 1:
            raise InvalidSpec("occlusion_burst must be >= 1")
        for f in self.events:
            if not (0 <= f < self.frames):
                raise InvalidSpec(f"event at frame {f} outside 0..{self.frames - 1}")
        if 0 in self.events and self.events[0].corrupting:
            raise InvalidSpec("frame 0 initializes the tracker and cannot be corrupted")


@dataclass
class Stream:
    spec: ScenarioSpec
    frames: np.ndarray
    positions: np.ndarray
    corrupted: np.ndarray
    events: List[Event]

    def __len__(self):
        return self.frames.shape[0]


def _smooth_noise(rng, shape, passes=2):
    img = rng.standard_normal(shape)
    for _ in range(passes):
        img = (img + np.roll(img, 1, 0) + np.roll(img, -1, 0) + np.roll(img, 1, 1) + np.roll(img, -1, 1)) / 5.0
    return (img - img.mean()) / (img.std() + 1e-12)


def _box_blur(img, radius):
    if radius <= 0:
        return img
    k = 2 * radius + 1
    out = img
    for axis in (0, 1):
        pad = [(0, 0), (0, 0)]
        pad[axis] = (radius + 1, radius)
        p = np.pad(out, pad, mode="edge")
        cs = np.cumsum(p, axis=axis)
        n = out.shape[axis]
        hi = np.take(cs, np.arange(k, k + n), axis=axis)
        lo = np.take(cs, np.arange(0, n), axis=axis)
        out = (hi - lo) / k
    return out


def _trajectory(spec: ScenarioSpec) -> np.ndarray:
    h, w, s = spec.height, spec.width, spec.target_size
    r0, c0 = spec.start if spec.start is not None else ((h - 1) / 2.0, (w - 1) / 2.0)
    t = np.arange(spec.frames, dtype=float)
    if spec.motion == "static":
        rows, cols = np.full_like(t, r0), np.full_like(t, c0)
    elif spec.motion == "linear":
        rows, cols = r0 + spec.velocity[0] * t, c0 + spec.velocity[1] * t
    else:
        phase = 2 * math.pi * t / spec.period
        rows, cols = r0 + spec.amplitude * np.sin(phase), c0 + spec.amplitude * np.sin(0.5 * phase)
    margin = s
    # bounce off the margins so the target always stays inside the frame
    def fold(x, lo, hi):
        span = hi - lo
        y = np.mod(x - lo, 2 * span)
        return lo + np.where(y > span, 2 * span - y, y)
    rows = fold(rows, margin, h - 1 - margin)
    cols = fold(cols, margin, w - 1 - margin)
    return np.rint(np.stack([rows, cols], axis=1)).astype(int)


def _event_table(spec: ScenarioSpec, rng) -> List[Event]:
    events = [Event("clean")] * spec.frames
    for f, e in spec.events.items():
        events[f] = e
    if spec.occlusion_fraction > 0:
        want = int(round(spec.occlusion_fraction * spec.frames))
        free = [f for f in range(spec.warmup, spec.frames) if not events[f].corrupting]
        placed = 0
        # bursts separated by at least one clean frame
        starts = rng.permutation(free)
        taken = set()
        for f0 in starts:
            if placed >= want:
                break
            burst = [f for f in range(f0, f0 + spec.occlusion_burst) if f < spec.frames]
            burst = burst[:want - placed]
            if any(f in taken or f - 1 in taken or f + 1 in taken or events[f].corrupting for f in burst):
                continue
            for f in burst:
                events[f] = Event("occlusion", 1.0)
                taken.add(f)
            placed += len(burst)
        if placed < want:
            raise InvalidSpec(f"could not place {want} occluded frames")
    return events


def generate(spec: ScenarioSpec) -> Stream:
    """Render the frame stream and ground truth for ``spec``."""
    rng = np.random.default_rng(spec.seed)
    h, w, s = spec.height, spec.width, spec.target_size
    background = spec.clutter * _smooth_noise(rng, (h, w), passes=3)
    if spec.target == "texture":
        blocks = rng.standard_normal((4, 4))
        texture = np.kron(blocks, np.ones((s // 4 + 1, s // 4 + 1)))[:s, :s]
        texture = texture + 0.5 * _smooth_noise(rng, (s, s), passes=1)
    else:
        yy, xx = np.mgrid[0:s, 0:s] - (s - 1) / 2.0
        texture = 2.0 * np.exp(-(yy ** 2 + xx ** 2) / (2 * (s / 4.0) ** 2))
    texture = (texture - texture.mean()) / (texture.std() + 1e-12) + 0.5
    positions = _trajectory(spec)
    events = _event_table(spec, rng)
    frames = np.empty((spec.frames, h, w))
    for t in range(spec.frames):
        if spec.drift > 0 and t > 0:
            texture = (1 - spec.drift) * texture + spec.drift * (0.5 + rng.standard_normal((s, s)))
        noise = rng.standard_normal((h, w))
        ev = events[t]
        frame = background.copy()
        r, c = positions[t]
        if ev.kind == "label-drift":
            r = int(np.clip(r + ev.value, s, h - 1 - s))
            c = int(np.clip(c + ev.value, s, w - 1 - s))
        r0, c0 = r - s // 2, c - s // 2
        frame[r0:r0 + s, c0:c0 + s] = texture
        if ev.kind == "occlusion" and ev.value > 0:
            rows = int(round(ev.value * s))
            # the occluded rows show the background instead of the target
            frame[r0:r0 + rows, c0:c0 + s] = background[r0:r0 + rows, c0:c0 + s]
        if ev.kind == "blur":
            frame = _box_blur(frame, int(ev.value))
        frames[t] = frame + spec.noise * noise
    corrupted = np.array([e.corrupting for e in events], dtype=bool)
    return Stream(spec, frames, positions, corrupted, events)


def default_suite(frames: int = 200, seed: int = 7) -> List[ScenarioSpec]:
    """Three seeded scenarios, each with 20% fully occluded frames."""
    common = dict(frames=frames, occlusion_fraction=0.2, occlusion_burst=1)
    return [
        ScenarioSpec(motion="static", seed=seed, **common),
        ScenarioSpec(motion="linear", velocity=(0.15, 0.1), seed=seed + 1, **common),
        ScenarioSpec(motion="sinusoidal", amplitude=12.0, period=120.0, drift=0.005, seed=seed + 2, **common),
    ]


def write_pgm(path, img: np.ndarray) -> None:
    """Write a binary 8-bit PGM, min-max scaled."""
    img = np.asarray(img, dtype=float)
    lo, hi = float(img.min()), float(img.max())
    scaled = np.zeros_like(img) if hi <= lo else (img - lo) / (hi - lo)
    data = np.rint(scaled * 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{data.shape[1]} {data.shape[0]}\n255\n".encode("ascii"))
        fh.write(data.tobytes())


def read_pgm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        raw = fh.read()
    parts = raw.split(maxsplit=4)
    if parts[0] != b"P5":
        raise ValueError("not a binary PGM")
    w, h, maxval = int(parts[1]), int(parts[2]), int(parts[3])
    return np.frombuffer(parts[4][:w * h], dtype=np.uint8).reshape(h, w)


# ---------------------------------------------------------------- metrics

PRECISION_THRESHOLDS = np.arange(0, 51, dtype=float)
OVERLAP_THRESHOLDS = np.linspace(0.0, 1.0, 21)


@dataclass
class EvalReport:
    thresholds: List[float]
    precision: List[float]
    precision_at_20: float
    overlap_thresholds: List[float]
    success: List[float]
    auc: float
    mean_center_error: float
    n_frames: int
    n_corrupted: int
    mean_weight_corrupted: float
    mean_weight_clean: float
    mean_prior_corrupted: float
    rejection_fraction: float
    clean_rejection_fraction: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def center_errors(pred: np.ndarray, truth: np.ndarray) -> np.ndarray:
    d = np.asarray(pred, dtype=float) - np.asarray(truth, dtype=float)
    return np.sqrt(np.sum(d ** 2, axis=1))


def box_overlap(pred: np.ndarray, truth: np.ndarray, size: float) -> np.ndarray:
    """IoU of equal ``size`` squares centred at the two position sets."""
    d = np.abs(np.asarray(pred, dtype=float) - np.asarray(truth, dtype=float))
    inter = np.prod(np.clip(size - d, 0.0, None), axis=1)
    return inter / (2 * size * size - inter)


def precision_curve(errors, thresholds=PRECISION_THRESHOLDS) -> np.ndarray:
    errors = np.asarray(errors, dtype=float)
    return np.array([np.mean(errors <= t) for t in thresholds]) if errors.size else np.ones(len(thresholds))


def final_weights(results) -> Dict[int, Tuple[float, float]]:
    """Last reported ``(v, rho)`` of every sample id across the results."""
    out: Dict[int, Tuple[float, float]] = {}
    for r in results:
        for i, v, rho in zip(r.ids, r.weights, r.rhos):
            out[int(i)] = (float(v), float(rho))
    return out


def evaluate(results, truth: Stream, target_size: Optional[float] = None) -> EvalReport:
    """Score results against ground truth; results must cover every frame."""
    if len(results) != len(truth):
        raise LengthMismatch(f"{len(results)} results for {len(truth)} frames")
    for k, r in enumerate(results):
        if r.frame != k:
            raise LengthMismatch(f"result {k} has frame id {r.frame}")
    size = float(target_size if target_size is not None else truth.spec.target_size)
    pred = np.array([r.position for r in results], dtype=float)
    err = center_errors(pred, truth.positions)
    prec = precision_curve(err)
    iou = box_overlap(pred, truth.positions, size)
    succ = np.array([np.mean(iou > t) for t in OVERLAP_THRESHOLDS])
    fw = final_weights(results)
    corr = [fw[f] for f in range(len(truth)) if truth.corrupted[f] and f in fw]
    clean = [fw[f] for f in range(len(truth)) if not truth.corrupted[f] and f in fw]

    def mean(xs):
        return float(np.mean(xs)) if xs else float("nan")

    return EvalReport(
        thresholds=PRECISION_THRESHOLDS.tolist(),
        precision=prec.tolist(),
        precision_at_20=float(np.mean(err <= 20)),
        overlap_thresholds=OVERLAP_THRESHOLDS.tolist(),
        success=succ.tolist(),
        auc=float(np.mean(succ)),
        mean_center_error=float(np.mean(err)),
        n_frames=len(truth),
        n_corrupted=int(np.sum(truth.corrupted)),
        mean_weight_corrupted=mean([v for v, _ in corr]),
        mean_weight_clean=mean([v for v, _ in clean]),
        mean_prior_corrupted=mean([rho for _, rho in corr]),
        rejection_fraction=mean([float(v == 0.0) for v, _ in corr]),
        clean_rejection_fraction=mean([float(v == 0.0) for v, _ in clean]),
    )


def run_tracker(stream: Stream, config) -> list:
    """Track a whole stream from the ground-truth first position."""
    from .tracker import Tracker

    tr = Tracker(config)
    results = [tr.initialize(stream.frames[0], stream.positions[0], 0)]
    for t in range(1, len(stream)):
        results.append(tr.step(stream.frames[t]))
    return results
