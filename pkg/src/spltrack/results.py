"""Per-frame CSV and summary JSON output."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import List

import numpy as np

from .sim import EvalReport, Stream, final_weights

BASE_COLUMNS = ["frame", "pred_x", "pred_y", "true_x", "true_y", "center_error", "c",
                "corrupted", "v_final", "rho_final", "updated"]


def fmt(x) -> str:
    """12 significant digits; integers and flags stay integral."""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return f"{float(x):.12g}"


def frame_rows(results, stream: Stream, stages: int) -> List[List[str]]:
    fw = final_weights(results)
    rows = []
    for r in results:
        f = r.frame
        ty, tx = stream.positions[f]
        py, px = r.position
        err = math.hypot(px - tx, py - ty)
        v, rho = fw.get(f, (float("nan"), float("nan")))
        sel = r.selected_per_stage
        sel = sel + [None] * (stages - len(sel))
        rows.append([fmt(f), fmt(int(px)), fmt(int(py)), fmt(int(tx)), fmt(int(ty)), fmt(err), fmt(r.c),
                     fmt(bool(stream.corrupted[f])), fmt(v), fmt(rho), fmt(bool(r.updated))]
                    + [fmt(s) for s in sel[:stages]])
    return rows


def write_frames_csv(path, results, stream: Stream, stages: int) -> None:
    header = BASE_COLUMNS + [f"selected_stage_{n}" for n in range(1, stages + 1)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(frame_rows(results, stream, stages))


def read_frames_csv(path) -> List[dict]:
    """Parse a frames CSV back into dicts of numbers (``None`` for blanks)."""
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            rec = {}
            for k, v in row.items():
                if v == "":
                    rec[k] = None
                elif k in ("frame", "pred_x", "pred_y", "true_x", "true_y", "corrupted", "updated") \
                        or k.startswith("selected_stage_"):
                    rec[k] = int(v)
                else:
                    rec[k] = float(v)
            out.append(rec)
    return out


def _clean(obj):
    if isinstance(obj, float):
        return None if math.isnan(obj) else obj
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def write_json(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(_clean(payload), indent=2, sort_keys=True) + "\n")


def aggregate(reports: List[EvalReport]) -> dict:
    """Pool reports over scenarios, weighting frame statistics by frame counts."""
    def pooled(attr, weight):
        num = den = 0.0
        for r in reports:
            x = getattr(r, attr)
            w = weight(r)
            if not math.isnan(x) and w > 0:
                num += x * w
                den += w
        return num / den if den else float("nan")

    n_corr = lambda r: r.n_corrupted  # noqa: E731
    n_clean = lambda r: r.n_frames - r.n_corrupted  # noqa: E731
    n_all = lambda r: r.n_frames  # noqa: E731
    return {
        "scenarios": len(reports),
        "precision_at_20": pooled("precision_at_20", n_all),
        "auc": pooled("auc", n_all),
        "mean_center_error": pooled("mean_center_error", n_all),
        "mean_weight_corrupted": pooled("mean_weight_corrupted", n_corr),
        "mean_weight_clean": pooled("mean_weight_clean", n_clean),
        "mean_prior_corrupted": pooled("mean_prior_corrupted", n_corr),
        "rejection_fraction": pooled("rejection_fraction", n_corr),
        "clean_rejection_fraction": pooled("clean_rejection_fraction", n_clean),
    }
