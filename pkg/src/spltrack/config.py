"""INI run configuration with file/line diagnostics."""
from __future__ import annotations

import configparser
import dataclasses
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import List, Optional, Tuple

from .confidence import ConfidenceConfig
from .core import InvariantViolation, PacingSchedule
from .pacing import RegularizerKind
from .sim import InvalidSpec, ScenarioSpec, default_suite, parse_events
from .tracker import TrackerConfig


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    tracker: TrackerConfig
    scenarios: List[ScenarioSpec]
    names: List[str]
    out_dir: Path = Path("spltrack-out")
    formats: Tuple[str, ...] = ("csv", "json")
    dump_frames: bool = False
    source: Optional[str] = None


# config key -> (section, field name used in error messages)
TRACKER_KEYS = {
    "lambda0": float, "mu": float, "stages": int, "xi": float, "eta": float,
    "capacity": int, "interval": int, "acs_iters": int, "beta1": float, "beta2": float,
    "radius": int, "alpha": float, "patch_size": int, "sigma": float, "kind": str,
    "selection": bool, "auto_lambda": bool, "normalize_priors": bool,
}
SCENARIO_KEYS = {
    "suite": str, "frames": int, "height": int, "width": int, "target": str,
    "target_size": int, "drift": float, "motion": str, "velocity": "pair",
    "amplitude": float, "period": float, "start": "pair", "noise": float,
    "clutter": float, "seed": int, "events": str, "occlusion_fraction": float,
    "occlusion_burst": int, "warmup": int,
}
OUTPUT_KEYS = {"dir": str, "formats": str, "dump_frames": bool}


class _Locator:
    """Finds the line of a ``key`` inside ``[section]`` for messages."""

    def __init__(self, text: Optional[str], path: str):
        self.lines = (text or "").splitlines()
        self.path = path

    def where(self, section: str, key: Optional[str] = None) -> str:
        current = None
        for i, line in enumerate(self.lines, 1):
            m = re.match(r"\s*\[([^\]]+)\]", line)
            if m:
                current = m.group(1).strip()
                if key is None and current == section:
                    return f"{self.path}:{i}"
                continue
            if current == section and key is not None and re.match(rf"\s*{re.escape(key)}\s*[=:]", line):
                return f"{self.path}:{i}"
        return self.path


def _convert(kind, raw: str):
    if kind is bool:
        v = raw.strip().lower()
        if v in ("1", "yes", "true", "on"):
            return True
        if v in ("0", "no", "false", "off"):
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    if kind == "pair":
        parts = [p for p in re.split(r"[,\s]+", raw.strip()) if p]
        if len(parts) != 2:
            raise ValueError(f"expected two numbers, got {raw!r}")
        return (float(parts[0]), float(parts[1]))
    if kind is int:
        f = float(raw)
        if f != int(f):
            raise ValueError(f"expected an integer, got {raw!r}")
        return int(f)
    return kind(raw.strip())


def _section(cp, loc, name, schema):
    out = {}
    if not cp.has_section(name):
        return out
    for key, raw in cp.items(name):
        if key not in schema:
            raise ConfigError(f"{loc.where(name, key)}: [{name}] unknown key {key!r}")
        try:
            out[key] = _convert(schema[key], raw)
        except ValueError as exc:
            raise ConfigError(f"{loc.where(name, key)}: [{name}] {key}: {exc}") from None
    return out


def build_tracker(values: dict, base: Optional[TrackerConfig] = None) -> TrackerConfig:
    """TrackerConfig from flat key/values; raises InvariantViolation on bad ranges."""
    base = base or TrackerConfig()
    sched = base.schedule
    sched = PacingSchedule(
        values.get("lambda0", sched.lambda0), values.get("mu", sched.mu),
        values.get("stages", sched.stages), values.get("xi", sched.xi))
    conf = base.confidence
    conf = ConfidenceConfig(values.get("beta1", conf.beta1), values.get("beta2", conf.beta2),
                            values.get("radius", conf.suppression_radius))
    kw = {}
    for key, attr in (("eta", "eta"), ("capacity", "capacity"), ("interval", "update_interval"),
                      ("acs_iters", "acs_iters"), ("alpha", "alpha"), ("patch_size", "patch_size"),
                      ("sigma", "sigma"), ("selection", "selection"), ("auto_lambda", "auto_lambda"),
                      ("normalize_priors", "normalize_priors")):
        if key in values and values[key] is not None:
            kw[attr] = values[key]
    if "kind" in values and values["kind"] is not None:
        try:
            kw["kind"] = values["kind"] if isinstance(values["kind"], RegularizerKind) \
                else RegularizerKind.parse(values["kind"])
        except (KeyError, ValueError):
            raise InvariantViolation("kind", f"unknown regularizer kind {values['kind']!r}") from None
    return dataclasses.replace(base, schedule=sched, confidence=conf, **kw)


def scenario_name(i: int, spec: ScenarioSpec) -> str:
    return f"{i:02d}_{spec.motion}_s{spec.seed}"


def build_scenarios(values: dict) -> List[ScenarioSpec]:
    values = dict(values)
    suite = values.pop("suite", None)
    if suite is not None:
        if suite.strip().lower() != "default":
            raise InvalidSpec(f"unknown suite {suite!r}")
        return default_suite(frames=values.get("frames", 200), seed=values.get("seed", 7))
    if "events" in values:
        values["events"] = parse_events(values["events"])
    return [ScenarioSpec(**values)]


_TRACKER_FIELDS = {"lambda0": "lambda0", "mu": "mu", "stages": "stages", "xi": "xi", "eta": "eta",
                   "capacity": "capacity", "update_interval": "interval", "acs_iters": "acs_iters",
                   "beta1": "beta1", "beta2": "beta2", "suppression_radius": "radius",
                   "alpha": "alpha", "patch_size": "patch_size", "kind": "kind"}


def load(path: Optional[str] = None, overrides: Optional[dict] = None) -> RunConfig:
    """Load a run config; ``None`` loads the bundled default."""
    if path is None:
        text = resources.files("spltrack").joinpath("data/default.ini").read_text()
        where = "<default.ini>"
    else:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"{path}: no such config file")
        text = p.read_text()
        where = str(path)
    loc = _Locator(text, where)
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text, source=where)
    except configparser.Error as exc:
        raise ConfigError(f"{where}: {exc}") from None
    for sec in cp.sections():
        if sec not in ("scenario", "tracker", "output"):
            raise ConfigError(f"{loc.where(sec)}: unknown section [{sec}]")
    tvals = _section(cp, loc, "tracker", TRACKER_KEYS)
    svals = _section(cp, loc, "scenario", SCENARIO_KEYS)
    ovals = _section(cp, loc, "output", OUTPUT_KEYS)
    flag_keys = set()
    for k, v in (overrides or {}).items():
        if v is not None:
            tvals[k] = v
            flag_keys.add(k)
    try:
        tracker = build_tracker(tvals)
    except InvariantViolation as exc:
        key = _TRACKER_FIELDS.get(exc.field, exc.field)
        origin = f"--{key}" if key in flag_keys else loc.where("tracker", key)
        raise ConfigError(f"{origin}: [tracker] {key}: {exc}") from None
    try:
        scenarios = build_scenarios(svals)
    except (InvalidSpec, TypeError) as exc:
        raise ConfigError(f"{loc.where('scenario')}: [scenario] {exc}") from None
    formats = tuple(f.strip().lower() for f in ovals.get("formats", "csv, json").split(",") if f.strip())
    for f in formats:
        if f not in ("csv", "json"):
            raise ConfigError(f"{loc.where('output', 'formats')}: [output] formats: unknown format {f!r}")
    return RunConfig(
        tracker=tracker,
        scenarios=scenarios,
        names=[scenario_name(i, s) for i, s in enumerate(scenarios)],
        out_dir=Path(ovals.get("dir", "spltrack-out")),
        formats=formats,
        dump_frames=ovals.get("dump_frames", False),
        source=where,
    )


def default_text() -> str:
    return resources.files("spltrack").joinpath("data/default.ini").read_text()
