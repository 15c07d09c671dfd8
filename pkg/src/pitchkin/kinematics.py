"""Speed and acceleration from smoothed trajectories.

Velocity at frame ``k`` is the symmetric difference of positions at
``k - l_n`` and ``k + l_n``, both clamped to the segment, divided by the
actual time between them; acceleration is the same operator applied to
velocity. Speeds above a cap are dropped and acceleration is smoothed with
a centred moving average.
"""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .data_model import FrameClock, Segment, Trajectory, segment
from .preprocess import ConfigError, SmoothingConfig, smooth_segment

ACCEL_MODES = ("magnitude", "tangential")
CSV_COLUMNS = ("frame", "t_s", "speed_mps", "accel_mps2", "valid_speed", "valid_accel")


@dataclass(frozen=True)
class KinematicsConfig:
    l_n: int = 20
    speed_cap_mps: float = 15.0
    accel_ma_window: int = 20
    # "magnitude" is |a|; "tangential" is the signed projection of a on the
    # direction of travel.
    accel_mode: str = "magnitude"

    def __post_init__(self) -> None:
        if int(self.l_n) != self.l_n or self.l_n < 1:
            raise ConfigError(f"l_n must be a positive integer, got {self.l_n}")
        if not self.speed_cap_mps > 0:
            raise ConfigError(f"speed cap must be positive, got {self.speed_cap_mps}")
        if int(self.accel_ma_window) != self.accel_ma_window or self.accel_ma_window < 1:
            raise ConfigError(f"moving-average window must be a positive integer, got {self.accel_ma_window}")
        if self.accel_mode not in ACCEL_MODES:
            raise ConfigError(f"unknown acceleration mode {self.accel_mode!r}")

    def to_dict(self) -> dict:
        return asdict(self)


def windowed_difference(frames: np.ndarray, values: np.ndarray, l_n: int, clock: FrameClock):
    """Clamped symmetric difference quotient over one contiguous run.

    Returns ``None`` for runs shorter than two samples.
    """
    values = np.asarray(values, dtype=float)
    n = len(values)
    if n < 2:
        return None
    j = np.arange(n)
    lo = np.maximum(j - l_n, 0)
    hi = np.minimum(j + l_n, n - 1)
    span_s = clock.timestamp(frames[hi]) - clock.timestamp(frames[lo])
    diff = values[hi] - values[lo]
    return diff / (span_s[:, None] if diff.ndim == 2 else span_s)


def differentiate(seg: Segment, l_n: int):
    """Per-frame velocity vectors ``(n, 2)`` of a segment, or ``None`` if it has one sample."""
    return windowed_difference(seg.frames, seg.xy, l_n, seg.clock)


def differentiate_velocity(frames: np.ndarray, velocity: np.ndarray, l_n: int, clock: FrameClock):
    """Per-frame acceleration vectors from a velocity series of one segment."""
    return windowed_difference(frames, velocity, l_n, clock)


def centred_moving_average(values: np.ndarray, valid: np.ndarray, window: int):
    """Centred mean along axis 0 with half-width ``window // 2``, shrinking symmetrically at the edges.

    Returns the averaged values and a validity mask; an output is invalid
    when any sample inside its window is invalid.
    """
    values = np.asarray(values, dtype=float)
    valid = np.asarray(valid, dtype=bool)
    n = len(values)
    if n == 0:
        return values.copy(), valid.copy()
    j = np.arange(n)
    h = np.minimum(np.minimum(window // 2, j), n - 1 - j)
    lo, hi = j - h, j + h + 1
    mask = valid if values.ndim == 1 else valid[:, None]
    zeros = np.zeros((1,) + values.shape[1:])
    csum = np.concatenate([zeros, np.cumsum(np.where(mask, values, 0.0), axis=0)])
    bad = np.r_[0, np.cumsum(~valid)]
    width = (hi - lo) if values.ndim == 1 else (hi - lo)[:, None]
    mean = (csum[hi] - csum[lo]) / width
    ok = (bad[hi] - bad[lo]) == 0
    return np.where(ok if values.ndim == 1 else ok[:, None], mean, np.nan), ok


@dataclass(eq=False)
class KinematicsSeries:
    """Per-frame scalar speed and acceleration of one athlete.

    Invalid entries hold NaN and a false validity flag. ``velocity`` keeps
    the velocity vectors and ``accel_vector`` the averaged acceleration
    vectors, for diagnostics.
    """

    athlete_id: str
    frames: np.ndarray
    speed: np.ndarray
    accel: np.ndarray
    valid_speed: np.ndarray
    valid_accel: np.ndarray
    clock: FrameClock
    config: KinematicsConfig = field(default_factory=KinematicsConfig)
    smoothing: str = "none"
    segment_bounds: list[tuple[int, int]] = field(default_factory=list)
    velocity: np.ndarray | None = None
    accel_vector: np.ndarray | None = None
    flags: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def times(self) -> np.ndarray:
        return self.clock.timestamp(self.frames)

    def frame_window(self, first: int, last: int) -> "KinematicsSeries":
        """Entries with ``first <= frame <= last``."""
        m = (self.frames >= first) & (self.frames <= last)
        bounds = [(max(a, first), min(b, last)) for a, b in self.segment_bounds if b >= first and a <= last]
        return KinematicsSeries(
            self.athlete_id, self.frames[m], self.speed[m], self.accel[m], self.valid_speed[m],
            self.valid_accel[m], self.clock, self.config, self.smoothing, bounds,
            None if self.velocity is None else self.velocity[m],
            None if self.accel_vector is None else self.accel_vector[m], list(self.flags))

    def to_csv(self, fh=None, comment: str | None = None) -> str:
        buf = io.StringIO()
        if comment:
            buf.write(f"# {comment}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for k, t, s, a, vs, va in zip(self.frames, self.times, self.speed, self.accel,
                                       self.valid_speed, self.valid_accel):
            w.writerow([int(k), repr(float(t)), repr(float(s)) if vs else "",
                        repr(float(a)) if va else "", int(bool(vs)), int(bool(va))])
        text = buf.getvalue()
        if fh is not None:
            fh.write(text)
        return text


def read_kinematics_csv(path, athlete_id: str, clock: FrameClock) -> KinematicsSeries:
    """Load a series written by :meth:`KinematicsSeries.to_csv`."""
    with open(path, encoding="utf-8") as fh:
        rows = list(csv.DictReader(line for line in fh if not line.startswith("#")))
    frames = np.array([int(r["frame"]) for r in rows], dtype=np.int64)
    vs = np.array([r["valid_speed"] == "1" for r in rows], dtype=bool)
    va = np.array([r["valid_accel"] == "1" for r in rows], dtype=bool)
    speed = np.array([float(r["speed_mps"]) if r["speed_mps"] else np.nan for r in rows])
    accel = np.array([float(r["accel_mps2"]) if r["accel_mps2"] else np.nan for r in rows])
    bounds = [(int(frames[a]), int(frames[b - 1])) for a, b in _runs(frames)]
    return KinematicsSeries(athlete_id, frames, speed, accel, vs, va, clock, segment_bounds=bounds)


def _runs(frames: np.ndarray) -> list[tuple[int, int]]:
    breaks = np.flatnonzero(np.diff(frames) != 1) + 1
    return [(int(a), int(b)) for a, b in zip(np.r_[0, breaks], np.r_[breaks, len(frames)]) if b > a]


def postprocess(frames: np.ndarray, speed: np.ndarray, accel: np.ndarray, config: KinematicsConfig,
                clock: FrameClock, athlete_id: str = "", velocity: np.ndarray | None = None,
                **extra) -> KinematicsSeries:
    """Apply the speed cap and the acceleration moving average.

    ``accel`` is either a scalar series or ``(n, 2)`` acceleration vectors.
    Vectors are averaged component-wise and then reduced to a scalar per
    ``config.accel_mode`` (which needs ``velocity`` for the tangential
    mode). ``frames`` may hold several segments; runs of consecutive frames
    are separate segments and the average never crosses between them.
    """
    frames = np.asarray(frames, dtype=np.int64)
    speed = np.asarray(speed, dtype=float)
    accel = np.asarray(accel, dtype=float)
    valid_speed = np.isfinite(speed) & (speed <= config.speed_cap_mps)
    finite = np.isfinite(accel) if accel.ndim == 1 else np.all(np.isfinite(accel), axis=1)
    smoothed = np.full(accel.shape, np.nan)
    valid_accel = np.zeros(len(accel), dtype=bool)
    runs = _runs(frames)
    for a, b in runs:
        avg, ok = centred_moving_average(accel[a:b], finite[a:b] & valid_speed[a:b], config.accel_ma_window)
        smoothed[a:b] = avg
        valid_accel[a:b] = ok
    if accel.ndim == 2:
        extra.setdefault("accel_vector", smoothed)
        scalar = _scalar_accel(velocity, smoothed, config.accel_mode)
    else:
        scalar = smoothed
    return KinematicsSeries(
        athlete_id, frames, np.where(valid_speed, speed, np.nan), np.where(valid_accel, scalar, np.nan),
        valid_speed, valid_accel, clock, config,
        segment_bounds=[(int(frames[a]), int(frames[b - 1])) for a, b in runs], velocity=velocity, **extra)


def _scalar_accel(velocity, accel_vec: np.ndarray, mode: str) -> np.ndarray:
    mag = np.linalg.norm(accel_vec, axis=1)
    if mode == "magnitude":
        return mag
    if velocity is None:
        raise ValueError("tangential acceleration needs the velocity vectors")
    speed = np.linalg.norm(velocity, axis=1)
    moving = speed > 1e-9
    proj = np.einsum("ij,ij->i", np.nan_to_num(accel_vec), velocity) / np.where(moving, speed, 1.0)
    return np.where(moving, proj, mag)


def segment_kinematics(segments: Sequence[Segment], config: KinematicsConfig, clock: FrameClock,
                       athlete_id: str = "", smoothing: str = "none") -> KinematicsSeries:
    """Differentiate already-smoothed segments and post-process the result."""
    frames, speed, vel, acc_vec, flags = [], [], [], [], []
    for seg in segments:
        v = differentiate(seg, config.l_n)
        if v is None:
            flags.append(f"segment {seg.first_frame}-{seg.last_frame}: single sample, no kinematics")
            continue
        a = differentiate_velocity(seg.frames, v, config.l_n, clock)
        frames.append(seg.frames)
        vel.append(v)
        acc_vec.append(a)
        speed.append(np.linalg.norm(v, axis=1))
        if seg.smoothing == "passthrough":
            flags.append(f"segment {seg.first_frame}-{seg.last_frame}: shorter than smoothing window")
    if not frames:
        empty = np.empty(0)
        return KinematicsSeries(athlete_id, np.empty(0, np.int64), empty, empty, np.empty(0, bool),
                                np.empty(0, bool), clock, config, smoothing, [], np.empty((0, 2)),
                                np.empty((0, 2)), flags)
    return postprocess(np.concatenate(frames), np.concatenate(speed), np.concatenate(acc_vec), config,
                       clock, athlete_id, velocity=np.concatenate(vel), smoothing=smoothing, flags=flags)


def trajectory_kinematics(trajectory: Trajectory, smoothing: SmoothingConfig | None = None,
                          config: KinematicsConfig | None = None, g_max: int = 3) -> KinematicsSeries:
    """Full chain for one athlete: segment, smooth, differentiate, post-process."""
    smoothing = smoothing or SmoothingConfig()
    config = config or KinematicsConfig()
    segs = [smooth_segment(s, smoothing) for s in segment(trajectory, g_max)]
    return segment_kinematics(segs, config, trajectory.clock, trajectory.athlete_id, smoothing.method)
