"""Command-line entry point.

    spltrack run [CONFIG] [--out DIR] [--lambda0 ...] [--ablate stages=1,2,3,4]
    spltrack verify [--instances N]
    spltrack config

Exit codes: 0 success, 1 config error, 2 invariant violation,
3 verification failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import enum
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import List, Optional

from . import checks, kernels
from .config import ConfigError, RunConfig, build_tracker, default_text, load
from .core import InvariantViolation, SPLError
from .results import aggregate, write_frames_csv, write_json
from .sim import evaluate, generate, run_tracker, write_pgm
from .tracker import TrackerConfig

log = logging.getLogger("spltrack")

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT, EXIT_VERIFY = 0, 1, 2, 3

ABLATION_AXES = {"stages": int, "interval": int, "lambda0": float, "mu": float, "xi": float,
                 "eta": float, "capacity": int, "beta1": float, "beta2": float, "alpha": float,
                 "acs_iters": int}


def config_dict(cfg: TrackerConfig) -> dict:
    def conv(x):
        if isinstance(x, enum.Enum):
            return x.value
        if isinstance(x, dict):
            return {k: conv(v) for k, v in x.items()}
        return x
    return conv(dataclasses.asdict(cfg))


def _run_one(args):
    tracker_cfg, spec, name, out_dir, formats, dump = args
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stream = generate(spec)
    if dump:
        fdir = out_dir / "frames"
        fdir.mkdir(exist_ok=True)
        for t in range(len(stream)):
            write_pgm(fdir / f"{t:05d}.pgm", stream.frames[t])
    results = run_tracker(stream, tracker_cfg)
    for r in results:
        if not all(0.0 <= w <= 1.0 for w in r.weights):
            raise InvariantViolation("v", f"frame {r.frame} reported a weight outside [0, 1]")
    report = evaluate(results, stream)
    stages = tracker_cfg.schedule.stages if tracker_cfg.selection else 1
    if "csv" in formats:
        write_frames_csv(out_dir / "frames.csv", results, stream, stages)
    if "json" in formats:
        write_json(out_dir / "summary.json", {"scenario": name, "report": report.to_dict(),
                                              "tracker": config_dict(tracker_cfg)})
    return name, report


def execute(tracker_cfg: TrackerConfig, rc: RunConfig, out_dir: Path, jobs: int = 1) -> dict:
    """Run every scenario of ``rc`` with ``tracker_cfg``; return the pooled summary."""
    tasks = []
    single = len(rc.scenarios) == 1
    for spec, name in zip(rc.scenarios, rc.names):
        sub = out_dir if single else out_dir / name
        tasks.append((tracker_cfg, spec, name, str(sub), rc.formats, rc.dump_frames))
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(jobs) as ex:
            done = list(ex.map(_run_one, tasks))
    else:
        done = [_run_one(t) for t in tasks]
    reports = [rep for _, rep in done]
    summary = aggregate(reports)
    if not single and "json" in rc.formats:
        write_json(out_dir / "summary.json", {"aggregate": summary,
                                              "scenarios": {n: r.to_dict() for n, r in done},
                                              "tracker": config_dict(tracker_cfg)})
    return summary


def parse_ablation(text: str):
    if "=" not in text:
        raise ConfigError(f"--ablate expects AXIS=V1,V2,..., got {text!r}")
    axis, raw = text.split("=", 1)
    axis = axis.strip().lower()
    if axis not in ABLATION_AXES:
        raise ConfigError(f"--ablate: unknown axis {axis!r}; choose from {', '.join(sorted(ABLATION_AXES))}")
    try:
        values = [ABLATION_AXES[axis](v) for v in raw.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"--ablate {axis}: {exc}") from None
    if not values:
        raise ConfigError(f"--ablate {axis}: no values")
    return axis, sorted(set(values))


def ablation_configs(base: TrackerConfig, axis: str, values, pace_anchor: str = "final"):
    """One tracker config per ablation value.

    For the stage axis with ``pace_anchor='final'`` the initial pace is
    rescaled so every setting ends at the base config's final pace; the
    sweep then varies only how many stages lead up to it.
    """
    out = []
    final = base.schedule.paces()[-1]
    for val in values:
        if axis == "stages" and pace_anchor == "final":
            cfg = build_tracker({"stages": val, "lambda0": final / base.schedule.mu ** (val - 1)}, base)
        else:
            cfg = build_tracker({axis: val}, base)
        out.append((val, cfg))
    return out


def cmd_run(ns) -> int:
    overrides = {k: getattr(ns, k) for k in ("lambda0", "mu", "stages", "xi", "eta", "beta1", "beta2",
                                             "alpha", "capacity", "interval", "acs_iters", "kind")}
    if ns.baseline:
        overrides["selection"] = False
    if ns.auto_lambda:
        overrides["auto_lambda"] = True
    rc = load(ns.config, overrides)
    if ns.out:
        rc.out_dir = Path(ns.out)
    if ns.dump_frames:
        rc.dump_frames = True
    ablations = [parse_ablation(a) for a in ns.ablate or []]
    t0 = time.perf_counter()
    if not ablations:
        summary = execute(rc.tracker, rc, rc.out_dir, ns.jobs)
        _print_summary("run", summary)
    for axis, values in ablations:
        rows = []
        for val, cfg in ablation_configs(rc.tracker, axis, values, ns.pace_anchor):
            sub = rc.out_dir / f"ablate_{axis}_{val:g}"
            summary = execute(cfg, rc, sub, ns.jobs)
            rows.append({axis: val, "lambda0": cfg.schedule.lambda0, **summary})
            _print_summary(f"{axis}={val:g}", summary)
        if "json" in rc.formats:
            rc.out_dir.mkdir(parents=True, exist_ok=True)
            write_json(rc.out_dir / f"ablation_{axis}.json",
                       {"axis": axis, "pace_anchor": ns.pace_anchor, "rows": rows})
    log.info("finished in %.1f s (%s kernels)", time.perf_counter() - t0, kernels.BACKEND)
    return EXIT_OK


def _print_summary(label: str, s: dict) -> None:
    print(f"{label:>14s}  PS@20={s['precision_at_20']:.3f}  AUC={s['auc']:.3f}  "
          f"v_corrupt={s['mean_weight_corrupted']:.3f}  v_clean={s['mean_weight_clean']:.3f}  "
          f"rejected={s['rejection_fraction']:.3f}")


def cmd_verify(ns) -> int:
    results = checks.run_all(ns.instances, ns.seed)
    for r in results:
        print(r.line())
    ok = all(r.passed for r in results)
    print("verification " + ("passed" if ok else "FAILED"))
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_config(ns) -> int:
    sys.stdout.write(default_text())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spltrack", description=__doc__.split("\n")[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="track scenarios and write per-frame CSV and summaries")
    run.add_argument("config", nargs="?", help="INI config (default: bundled default suite)")
    run.add_argument("--out", help="output directory")
    run.add_argument("--lambda0", type=float)
    run.add_argument("--mu", type=float)
    run.add_argument("--stages", type=int)
    run.add_argument("--xi", type=float)
    run.add_argument("--eta", type=float)
    run.add_argument("--beta1", type=float)
    run.add_argument("--beta2", type=float)
    run.add_argument("--alpha", type=float)
    run.add_argument("--capacity", type=int)
    run.add_argument("--interval", type=int)
    run.add_argument("--acs-iters", dest="acs_iters", type=int)
    run.add_argument("--kind", choices=["plain", "time", "guided"])
    run.add_argument("--baseline", action="store_true", help="no selection: every weight equals its prior")
    run.add_argument("--auto-lambda", action="store_true", help="set lambda0 to the median loss at the first update")
    run.add_argument("--ablate", action="append", metavar="AXIS=V1,V2,...")
    run.add_argument("--pace-anchor", choices=["final", "initial"], default="final",
                     help="stage sweeps: keep the final pace (default) or the initial pace fixed")
    run.add_argument("--dump-frames", action="store_true", help="write every frame as a PGM image")
    run.add_argument("--jobs", type=int, default=1)
    run.set_defaults(func=cmd_run)

    ver = sub.add_parser("verify", help="closed-form, oracle and optimality checks")
    ver.add_argument("--instances", type=int, default=1000, help="random instances per regularizer kind")
    ver.add_argument("--seed", type=int, default=0)
    ver.set_defaults(func=cmd_verify)

    cfg = sub.add_parser("config", help="print the default config")
    cfg.set_defaults(func=cmd_config)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return ns.func(ns)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InvariantViolation, SPLError) as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
