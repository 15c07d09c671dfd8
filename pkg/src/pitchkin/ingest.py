"""Reading trajectory files and matching predicted tracks to ground truth.

Two input formats are understood:

``normalized_jsonl``
    One JSON object per line, ``{sequence, frame, track, x, y, role?, team?,
    jersey?}``; one record per detection, frames 1-based, metres.
``gsr_json``
    A per-sequence Game State Reconstruction file (``predictions`` or
    ``annotations`` list with ``image_id``, ``track_id`` and ``bbox_pitch``).
    Unknown fields are ignored.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import linear_sum_assignment

from .data_model import (X_LIMIT_M, Y_LIMIT_M, FrameClock, PitchConvention, Status, Trajectory,
                         ValidationError)

log = logging.getLogger(__name__)

FORMATS = ("normalized_jsonl", "gsr_json")
LABEL_KEYS = ("role", "team", "jersey")

DEFAULT_GATE_M = 3.0
DEFAULT_MIN_OVERLAP_FRAMES = 25


class ParseError(ValueError):
    """Malformed input; the message carries a ``path:line`` or record locator."""


@dataclass
class TrajectorySet:
    sequence_id: str
    clock: FrameClock
    tracks: dict[str, Trajectory]
    diagnostics: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.tracks)

    def __iter__(self):
        return iter(self.tracks[k] for k in sorted(self.tracks))

    def with_clock(self, clock: FrameClock) -> "TrajectorySet":
        tracks = {k: Trajectory(t.athlete_id, t.frames, t.xy, t.status, clock, t.labels)
                  for k, t in self.tracks.items()}
        return TrajectorySet(self.sequence_id, clock, tracks, dict(self.diagnostics))


@dataclass
class SequenceBundle:
    sequence_id: str
    predictions: TrajectorySet
    ground_truth: TrajectorySet | None
    clock: FrameClock


@dataclass(frozen=True)
class TrackMatch:
    predicted_id: str
    ground_truth_id: str
    overlap_frames: int
    mean_distance_m: float


@dataclass
class _Detection:
    frame: int
    track: str
    x: float
    y: float
    labels: dict


def _build_set(detections: list[_Detection], sequence_id: str, convention: PitchConvention,
               frame_rate_hz: float, frame_count: int | None, where: str) -> TrajectorySet:
    by_track: dict[str, list[_Detection]] = {}
    for d in detections:
        if not (math.isfinite(d.x) and math.isfinite(d.y)):
            raise ValidationError(f"{where}: non-finite coordinate for track {d.track} at frame {d.frame}")
        by_track.setdefault(d.track, []).append(d)

    max_frame = max((d.frame for d in detections), default=1)
    if frame_count is None:
        frame_count = max_frame
    elif max_frame > frame_count:
        raise ValidationError(f"{where}: frame {max_frame} exceeds frame count {frame_count}")
    clock = FrameClock(frame_rate_hz, frame_count)

    tracks = {}
    dropped = 0
    for tid, dets in by_track.items():
        dets.sort(key=lambda d: d.frame)
        frames = np.array([d.frame for d in dets], dtype=np.int64)
        dup = np.flatnonzero(np.diff(frames) == 0)
        if len(dup):
            raise ParseError(f"{where}: duplicate detection for track {tid} at frame {frames[dup[0]]}")
        x, y = convention.to_canonical([d.x for d in dets], [d.y for d in dets])
        inside = (np.abs(x) <= X_LIMIT_M) & (np.abs(y) <= Y_LIMIT_M)
        dropped += int(np.count_nonzero(~inside))
        if not np.any(inside):
            continue
        span = np.arange(frames[inside][0], frames[inside][-1] + 1)
        xy = np.full((len(span), 2), np.nan)
        status = np.full(len(span), Status.MISSING, dtype=np.int8)
        idx = frames[inside] - span[0]
        xy[idx, 0] = x[inside]
        xy[idx, 1] = y[inside]
        status[idx] = Status.OBSERVED
        labels = {}
        for d in dets:
            for key, value in d.labels.items():
                labels.setdefault(key, value)
        tracks[tid] = Trajectory(tid, span, xy, status, clock, labels)
    if dropped:
        log.warning("%s: %d detections outside the pitch bounds were treated as missing", where, dropped)
    return TrajectorySet(sequence_id, clock, dict(sorted(tracks.items())),
                         {"out_of_bounds_detections": dropped})


def _as_float(value, where: str, track, frame) -> float:
    if value is None:
        raise ValidationError(f"{where}: missing coordinate for track {track} at frame {frame}")
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ParseError(f"{where}: coordinate {value!r} is not a number") from None


def _read_jsonl(path: Path) -> tuple[list[_Detection], str | None]:
    detections = []
    sequence = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            where = f"{path}:{lineno}"
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{where}: {exc.msg}") from None
            if not isinstance(rec, dict):
                raise ParseError(f"{where}: record is not a JSON object")
            missing = [k for k in ("frame", "track", "x", "y") if k not in rec]
            if missing:
                raise ParseError(f"{where}: missing key(s) {', '.join(missing)}")
            frame = rec["frame"]
            if isinstance(frame, bool) or not isinstance(frame, int) or frame < 1:
                raise ParseError(f"{where}: frame must be a positive integer, got {frame!r}")
            track = str(rec["track"])
            x = _as_float(rec["x"], where, track, frame)
            y = _as_float(rec["y"], where, track, frame)
            labels = {k: str(rec[k]) for k in LABEL_KEYS if rec.get(k) is not None}
            if sequence is None and rec.get("sequence") is not None:
                sequence = str(rec["sequence"])
            detections.append(_Detection(frame, track, x, y, labels))
    return detections, sequence


def _gsr_frame(image_id, images: dict, rec: dict, where: str) -> int:
    img = images.get(image_id)
    if img is not None:
        if "frame" in img:
            return int(img["frame"])
        if "file_name" in img:
            return int(Path(str(img["file_name"])).stem)
    if "frame" in rec:
        return int(rec["frame"])
    # SoccerNet-style ids end with a six-digit frame number.
    try:
        return int(str(image_id)[-6:])
    except ValueError:
        raise ParseError(f"{where}: cannot derive frame from image_id {image_id!r}") from None


def _read_gsr(path: Path) -> tuple[list[_Detection], str | None, float | None]:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ParseError(f"{path}: top level must be a JSON object")
    records = data.get("predictions", data.get("annotations"))
    if not isinstance(records, list):
        raise ParseError(f"{path}: expected a 'predictions' or 'annotations' list")
    images = {img.get("image_id"): img for img in data.get("images", []) if isinstance(img, dict)}
    info = data.get("info") or {}

    detections = []
    for i, rec in enumerate(records):
        where = f"{path}: record {i}"
        if not isinstance(rec, dict):
            raise ParseError(f"{where}: not a JSON object")
        track = rec.get("track_id")
        pitch = rec.get("bbox_pitch")
        attrs = rec.get("attributes") or {}
        if track is None or not pitch:
            continue
        if attrs.get("role") == "ball":
            continue
        frame = _gsr_frame(rec.get("image_id"), images, rec, where)
        if frame < 1:
            raise ParseError(f"{where}: frame must be positive, got {frame}")
        try:
            x = _as_float(pitch["x_bottom_middle"], where, track, frame)
            y = _as_float(pitch["y_bottom_middle"], where, track, frame)
        except KeyError as exc:
            raise ParseError(f"{where}: bbox_pitch lacks {exc.args[0]}") from None
        labels = {k: str(attrs[k]) for k in LABEL_KEYS if attrs.get(k) is not None}
        detections.append(_Detection(frame, str(track), x, y, labels))
    rate = info.get("frame_rate")
    return detections, info.get("name"), float(rate) if rate else None


def parse_trajectories(path, fmt: str = "normalized_jsonl", convention: PitchConvention | None = None,
                       frame_rate_hz: float | None = None, frame_count: int | None = None,
                       sequence_id: str | None = None) -> TrajectorySet:
    """Read a trajectory file into a :class:`TrajectorySet`.

    Every detection becomes an observed sample; frames between a track's
    first and last detection without a detection become missing samples.
    Detections outside the pitch tolerance box are treated as missing and
    counted in ``diagnostics``.
    """
    path = Path(path)
    convention = convention or PitchConvention()
    if fmt == "normalized_jsonl":
        detections, seq = _read_jsonl(path)
        rate = None
    elif fmt == "gsr_json":
        detections, seq, rate = _read_gsr(path)
    else:
        raise ValueError(f"unknown trajectory format {fmt!r}; expected one of {FORMATS}")
    return _build_set(detections, sequence_id or seq or path.stem, convention,
                      frame_rate_hz or rate or 25.0, frame_count, str(path))


def write_normalized_jsonl(tset: TrajectorySet, path) -> None:
    """Write observed samples, one record per detection, ordered by frame then track."""
    rows = []
    for tid, traj in tset.tracks.items():
        frames, xy = traj.observed()
        for k, (x, y) in zip(frames, xy):
            rec = {"sequence": tset.sequence_id, "frame": int(k), "track": tid,
                   "x": float(x), "y": float(y)}
            rec.update({key: traj.labels[key] for key in LABEL_KEYS if key in traj.labels})
            rows.append((int(k), tid, rec))
    rows.sort(key=lambda r: (r[0], r[1]))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for _, _, rec in rows:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def load_bundle(predictions_path, ground_truth_path=None, fmt: str = "normalized_jsonl",
                gt_fmt: str | None = None, convention: PitchConvention | None = None,
                frame_rate_hz: float | None = None) -> SequenceBundle:
    """Read predictions and (optionally) ground truth onto one shared clock."""
    pred = parse_trajectories(predictions_path, fmt, convention, frame_rate_hz)
    if ground_truth_path is None:
        return SequenceBundle(pred.sequence_id, pred, None, pred.clock)
    gt = parse_trajectories(ground_truth_path, gt_fmt or fmt, convention, frame_rate_hz)
    if pred.clock.frame_rate_hz != gt.clock.frame_rate_hz:
        raise ValidationError(
            f"frame rates differ: predictions {pred.clock.frame_rate_hz} Hz, "
            f"ground truth {gt.clock.frame_rate_hz} Hz")
    clock = FrameClock(pred.clock.frame_rate_hz, max(pred.clock.frame_count, gt.clock.frame_count))
    return SequenceBundle(pred.sequence_id, pred.with_clock(clock), gt.with_clock(clock), clock)


def pair_cost(a: Trajectory, b: Trajectory) -> tuple[int, float]:
    """Number of co-visible frames and mean distance over them (inf if none)."""
    fa, pa = a.observed()
    fb, pb = b.observed()
    _, ia, ib = np.intersect1d(fa, fb, assume_unique=True, return_indices=True)
    if len(ia) == 0:
        return 0, math.inf
    return len(ia), float(np.mean(np.linalg.norm(pa[ia] - pb[ib], axis=1)))


def cost_matrices(predictions: TrajectorySet, ground_truth: TrajectorySet):
    pids = sorted(predictions.tracks)
    gids = sorted(ground_truth.tracks)
    overlap = np.zeros((len(pids), len(gids)), dtype=np.int64)
    dist = np.full((len(pids), len(gids)), np.inf)
    for i, p in enumerate(pids):
        for j, g in enumerate(gids):
            overlap[i, j], dist[i, j] = pair_cost(predictions.tracks[p], ground_truth.tracks[g])
    return pids, gids, overlap, dist


def assign(dist: np.ndarray, feasible: np.ndarray) -> list[tuple[int, int]]:
    """Maximum-cardinality matching over feasible pairs with minimum total cost.

    Infeasible pairs receive a penalty larger than any sum of feasible costs,
    so the Hungarian solution first maximises the number of feasible pairs
    and then minimises their summed cost.
    """
    if dist.size == 0 or not feasible.any():
        return []
    finite = np.where(feasible, dist, 0.0)
    big = (float(finite.max()) + 1.0) * (min(dist.shape) + 1)
    cost = np.where(feasible, dist, big)
    rows, cols = linear_sum_assignment(cost)
    return [(int(r), int(c)) for r, c in zip(rows, cols) if feasible[r, c]]


def match_tracks(predictions: TrajectorySet, ground_truth: TrajectorySet,
                 gate_m: float = DEFAULT_GATE_M,
                 min_overlap_frames: int = DEFAULT_MIN_OVERLAP_FRAMES) -> list[TrackMatch]:
    """One-to-one matching of predicted to ground-truth tracks.

    The cost of a pair is the mean Euclidean distance over frames where
    both are observed. Pairs farther apart than ``gate_m`` or sharing fewer
    than ``min_overlap_frames`` frames are never matched.
    """
    if gate_m <= 0 or min_overlap_frames < 1:
        raise ValueError("gate_m must be positive and min_overlap_frames at least 1")
    pids, gids, overlap, dist = cost_matrices(predictions, ground_truth)
    feasible = (overlap >= min_overlap_frames) & (dist <= gate_m)
    matches = [TrackMatch(pids[i], gids[j], int(overlap[i, j]), float(dist[i, j]))
               for i, j in assign(dist, feasible)]
    return sorted(matches, key=lambda m: (m.predicted_id, m.ground_truth_id))

