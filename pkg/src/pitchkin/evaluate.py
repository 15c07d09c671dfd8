"""Prediction-vs-ground-truth evaluation of whole sequences.

Ground-truth kinematics use the same differentiation window as the
predictions but no smoothing.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .data_model import Status
from .ingest import DEFAULT_GATE_M, DEFAULT_MIN_OVERLAP_FRAMES, SequenceBundle, match_tracks
from .kinematics import KinematicsConfig, trajectory_kinematics
from .metrics import (DEFAULT_MAX_LAG, DEFAULT_MIN_OVERLAP, SignalPair, UndefinedMetric, amplitude_errors,
                      fisher_average, max_lag_r, mean_sd, pearson, reliability, stratify)
from .preprocess import ConfigError, SmoothingConfig

QUANTITIES = ("speed", "accel")


@dataclass(frozen=True)
class MetricOptions:
    max_lag: int = DEFAULT_MAX_LAG
    min_overlap: int = DEFAULT_MIN_OVERLAP
    stratify_fraction: float = 0.3
    gate_m: float = DEFAULT_GATE_M
    min_overlap_frames: int = DEFAULT_MIN_OVERLAP_FRAMES

    def __post_init__(self) -> None:
        if self.max_lag < 0 or self.min_overlap < 3:
            raise ConfigError("max_lag must be >= 0 and min_overlap >= 3")
        if not 0 < self.stratify_fraction <= 0.5:
            raise ConfigError(f"stratify fraction must lie in (0, 0.5], got {self.stratify_fraction}")
        if not self.gate_m > 0 or self.min_overlap_frames < 1:
            raise ConfigError("gate_m must be positive and min_overlap_frames at least 1")

    def to_dict(self) -> dict:
        return asdict(self)


def _quantity_metrics(pair: SignalPair, options: MetricOptions) -> dict:
    out: dict = {"n": pair.n, "mae": None, "rmse": None, "r": None, "max_lag_r": None, "lag": None,
                 "undefined": []}
    try:
        err = amplitude_errors(pair)
        out["mae"], out["rmse"] = err.mae, err.rmse
    except UndefinedMetric as exc:
        out["undefined"].append(f"mae/rmse: {exc}")
    try:
        out["r"] = pearson(pair)
    except UndefinedMetric as exc:
        out["undefined"].append(f"r: {exc}")
    try:
        lag = max_lag_r(pair, options.max_lag, options.min_overlap)
        out["max_lag_r"], out["lag"] = lag.r, lag.lag
    except UndefinedMetric as exc:
        out["undefined"].append(f"max_lag_r: {exc}")
    return out


def detection_counts(pred_traj, gt_traj) -> tuple[int, int]:
    """Frames where the ground-truth athlete is present and the prediction is observed, and the total."""
    gt_frames = gt_traj.frames[gt_traj.status != Status.MISSING]
    pred_frames, _ = pred_traj.observed()
    return len(np.intersect1d(gt_frames, pred_frames, assume_unique=True)), len(gt_frames)


def evaluate_bundle(bundle: SequenceBundle, smoothing: SmoothingConfig, kinematics: KinematicsConfig,
                    g_max: int = 3, options: MetricOptions | None = None, matches=None) -> list[dict]:
    """Per-athlete metrics for every matched track of one sequence."""
    options = options or MetricOptions()
    if bundle.ground_truth is None:
        raise ValueError("evaluation needs ground truth")
    if matches is None:
        matches = match_tracks(bundle.predictions, bundle.ground_truth, options.gate_m,
                               options.min_overlap_frames)
    raw = replace(smoothing, method="none")
    rows = []
    for m in matches:
        pt = bundle.predictions.tracks[m.predicted_id]
        gt = bundle.ground_truth.tracks[m.ground_truth_id]
        pk = trajectory_kinematics(pt, smoothing, kinematics, g_max)
        gk = trajectory_kinematics(gt, raw, kinematics, g_max)
        detected, total = detection_counts(pt, gt)
        row = {
            "athlete": f"{bundle.sequence_id}:{m.predicted_id}",
            "sequence": bundle.sequence_id,
            "predicted_id": m.predicted_id,
            "ground_truth_id": m.ground_truth_id,
            "overlap_frames": m.overlap_frames,
            "mean_distance_m": m.mean_distance_m,
            "frames_detected": detected,
            "frames_total": total,
        }
        for q in QUANTITIES:
            row[q] = _quantity_metrics(SignalPair.from_series(pk, gk, q), options)
        try:
            rel = reliability(SignalPair.from_series(pk, gk, "speed"), detected, total)
            row["reliability"] = {"R_c": rel.R_c, "R_MAE": rel.R_MAE, "R_d": rel.R_d, "R": rel.R}
        except (UndefinedMetric, ValueError) as exc:
            row["reliability"] = None
            row["reliability_undefined"] = str(exc)
        rows.append(row)
    return rows


def aggregate(rows: Sequence[dict]) -> dict:
    """Across-athlete summary: Fisher-averaged correlations, mean +/- sd across athletes otherwise."""
    out: dict = {"n_athletes": len(rows)}
    for q in QUANTITIES:
        block = {}
        for key in ("mae", "rmse"):
            mean, sd = mean_sd([r[q][key] for r in rows if r[q][key] is not None])
            block[key] = {"mean": mean, "sd": sd}
        for key in ("r", "max_lag_r"):
            vals = [r[q][key] for r in rows if r[q][key] is not None]
            _, sd = mean_sd(vals)
            block[key] = {"fisher_mean": fisher_average(vals) if vals else math.nan, "sd": sd,
                          "n_defined": len(vals), "n_undefined": len(rows) - len(vals)}
        out[q] = block
    visible = [r["frames_detected"] for r in rows]
    out["avg_visible_frames"] = float(np.mean(visible)) if visible else math.nan
    return out


def strata_report(rows: Sequence[dict], fraction: float, frame_rate_hz: float) -> dict:
    scores = {r["athlete"]: r["reliability"]["R"] for r in rows if r.get("reliability")}
    by_id = {r["athlete"]: r for r in rows}
    undefined = sorted(r["athlete"] for r in rows if not r.get("reliability"))
    if not scores:
        return {"fraction": fraction, "top": [], "bottom": [], "undefined": undefined}
    strata = stratify(scores, fraction)
    out = {"fraction": fraction, "top": strata.top, "bottom": strata.bottom, "undefined": undefined}
    for name, ids in (("top", strata.top), ("bottom", strata.bottom)):
        agg = aggregate([by_id[a] for a in ids])
        agg["avg_visible_seconds"] = agg["avg_visible_frames"] / frame_rate_hz
        agg["mean_R"] = float(np.mean([scores[a] for a in ids])) if ids else math.nan
        out[f"{name}_summary"] = agg
    return out


def temporal_window_s(l_n: int, frame_rate_hz: float) -> float:
    """Span covered by the differencing window, counting both end frames."""
    return (2 * l_n + 1) / frame_rate_hz


def ablation(bundles: Iterable[SequenceBundle], smoothing: SmoothingConfig, kinematics: KinematicsConfig,
             g_max: int, options: MetricOptions, filters: Sequence[str], l_ns: Sequence[int]) -> list[dict]:
    """Aggregate metrics for each (filter, l_n) combination; matching is done once per sequence."""
    bundles = list(bundles)
    matched = [(b, match_tracks(b.predictions, b.ground_truth, options.gate_m, options.min_overlap_frames))
               for b in bundles]
    out = []
    for l_n in l_ns:
        for method in filters:
            rows = []
            for b, matches in matched:
                rows += evaluate_bundle(b, replace(smoothing, method=method), replace(kinematics, l_n=l_n),
                                        g_max, options, matches)
            out.append({"l_n": l_n, "filter": method, "aggregate": aggregate(rows)})
    return out
