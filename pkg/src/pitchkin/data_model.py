"""Core domain types: frame clock, pitch convention, trajectories and segments.

Positions are metres in a centre-origin pitch frame (x along the touchline,
y along the goal line). Timestamps are never stored per sample; they are
always derived from the :class:`FrameClock` as ``t_k = k / f`` with 1-based
frame indices.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence

import numpy as np

# Pitch plus a tolerance margin; anything outside is not a plausible position.
X_LIMIT_M = 80.0
Y_LIMIT_M = 60.0


class ValidationError(ValueError):
    """Raised when a domain object would violate one of its invariants."""


class Status(enum.IntEnum):
    OBSERVED = 0
    INTERPOLATED = 1
    MISSING = 2


@dataclass(frozen=True)
class FrameClock:
    frame_rate_hz: float = 25.0
    frame_count: int = 1

    def __post_init__(self) -> None:
        if not (np.isfinite(self.frame_rate_hz) and self.frame_rate_hz > 0):
            raise ValidationError(f"frame rate must be positive, got {self.frame_rate_hz}")
        if int(self.frame_count) != self.frame_count or self.frame_count < 1:
            raise ValidationError(f"frame count must be a positive integer, got {self.frame_count}")

    @property
    def dt(self) -> float:
        return 1.0 / self.frame_rate_hz

    def timestamp(self, k):
        """Time in seconds of frame ``k`` (scalar or array)."""
        return np.divide(k, self.frame_rate_hz, dtype=float)

    def to_dict(self) -> dict:
        return {"frame_rate_hz": self.frame_rate_hz, "frame_count": self.frame_count}


@dataclass(frozen=True)
class PitchConvention:
    """Describes the coordinate frame of a *source* file.

    ``origin`` is ``"centre"`` (canonical) or ``"corner"``; with a corner
    origin the source spans ``[0, length] x [0, width]``. ``flip_y`` mirrors
    the short axis for sources whose y grows the other way.
    """

    origin: str = "centre"
    length_m: float = 105.0
    width_m: float = 68.0
    flip_y: bool = False

    def __post_init__(self) -> None:
        if self.origin not in ("centre", "corner"):
            raise ValidationError(f"unknown pitch origin {self.origin!r}")
        if self.length_m <= 0 or self.width_m <= 0:
            raise ValidationError("pitch dimensions must be positive")

    def to_canonical(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.origin == "corner":
            x = x - self.length_m / 2.0
            y = y - self.width_m / 2.0
        if self.flip_y:
            y = -y
        return x, y

    def to_dict(self) -> dict:
        return {"origin": self.origin, "length_m": self.length_m,
                "width_m": self.width_m, "flip_y": self.flip_y}


@dataclass(frozen=True)
class PositionSample:
    frame_index: int
    x_m: float
    y_m: float
    status: Status


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Trajectory:
    """All samples of one athlete, ordered by frame.

    Frames absent from ``frames`` are treated exactly like entries whose
    status is ``MISSING``.
    """

    athlete_id: str
    frames: np.ndarray
    xy: np.ndarray
    status: np.ndarray
    clock: FrameClock
    labels: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        frames = np.asarray(self.frames, dtype=np.int64).reshape(-1)
        xy = np.asarray(self.xy, dtype=float).reshape(-1, 2)
        status = np.asarray(self.status, dtype=np.int8).reshape(-1)
        if not (len(frames) == len(xy) == len(status)):
            raise ValidationError(f"track {self.athlete_id}: frames, positions and statuses differ in length")
        if len(frames) and np.any(np.diff(frames) <= 0):
            raise ValidationError(f"track {self.athlete_id}: frame indices must be strictly increasing")
        if np.any((status < 0) | (status > 2)):
            raise ValidationError(f"track {self.athlete_id}: unknown sample status")
        present = status != Status.MISSING
        bad = present & ~np.all(np.isfinite(xy), axis=1)
        if np.any(bad):
            raise ValidationError(
                f"track {self.athlete_id}: non-finite position at frame {int(frames[bad][0])}")
        out = present & ((np.abs(xy[:, 0]) > X_LIMIT_M) | (np.abs(xy[:, 1]) > Y_LIMIT_M))
        if np.any(out):
            raise ValidationError(
                f"track {self.athlete_id}: position outside pitch bounds at frame {int(frames[out][0])}")
        if len(frames) and not np.any(status == Status.OBSERVED):
            raise ValidationError(f"track {self.athlete_id}: no observed sample")
        xy = np.where(present[:, None], xy, np.nan)
        object.__setattr__(self, "frames", _frozen(frames))
        object.__setattr__(self, "xy", _frozen(xy))
        object.__setattr__(self, "status", _frozen(status))
        object.__setattr__(self, "labels", dict(self.labels))

    @classmethod
    def from_samples(cls, athlete_id: str, samples: Sequence[PositionSample], clock: FrameClock,
                     labels: Mapping[str, str] | None = None) -> "Trajectory":
        frames = [s.frame_index for s in samples]
        xy = [(s.x_m, s.y_m) for s in samples]
        status = [int(s.status) for s in samples]
        return cls(athlete_id, np.array(frames, dtype=np.int64), np.array(xy, dtype=float).reshape(-1, 2),
                   np.array(status, dtype=np.int8), clock, labels or {})

    def __len__(self) -> int:
        return len(self.frames)

    def __iter__(self) -> Iterator[PositionSample]:
        return iter(self.samples)

    @property
    def samples(self) -> list[PositionSample]:
        return [PositionSample(int(k), float(p[0]), float(p[1]), Status(int(s)))
                for k, p, s in zip(self.frames, self.xy, self.status)]

    @property
    def observed_count(self) -> int:
        return int(np.count_nonzero(self.status == Status.OBSERVED))

    def observed(self) -> tuple[np.ndarray, np.ndarray]:
        """Frames and positions of observed (not interpolated) samples."""
        m = self.status == Status.OBSERVED
        return self.frames[m], self.xy[m]


@dataclass(frozen=True, eq=False)
class Segment:
    """A gap-free run of one athlete's samples.

    ``smoothing`` records which smoother produced ``xy``; ``"passthrough"``
    marks a segment too short for the requested filter.
    """

    athlete_id: str
    frames: np.ndarray
    xy: np.ndarray
    status: np.ndarray
    clock: FrameClock
    smoothing: str = "none"

    def __post_init__(self) -> None:
        frames = np.asarray(self.frames, dtype=np.int64).reshape(-1)
        xy = np.asarray(self.xy, dtype=float).reshape(-1, 2)
        status = np.asarray(self.status, dtype=np.int8).reshape(-1)
        if len(frames) == 0:
            raise ValidationError("segment must contain at least one sample")
        if not (len(frames) == len(xy) == len(status)):
            raise ValidationError("segment arrays differ in length")
        if np.any(np.diff(frames) != 1):
            raise ValidationError(f"segment of {self.athlete_id} is not contiguous")
        if np.any(status == Status.MISSING):
            raise ValidationError(f"segment of {self.athlete_id} contains missing samples")
        if not np.all(np.isfinite(xy)):
            raise ValidationError(f"segment of {self.athlete_id} contains non-finite positions")
        object.__setattr__(self, "frames", _frozen(frames))
        object.__setattr__(self, "xy", _frozen(xy))
        object.__setattr__(self, "status", _frozen(status))

    @property
    def first_frame(self) -> int:
        return int(self.frames[0])

    @property
    def last_frame(self) -> int:
        return int(self.frames[-1])

    def __len__(self) -> int:
        return len(self.frames)

    def with_positions(self, xy: np.ndarray, smoothing: str) -> "Segment":
        return Segment(self.athlete_id, self.frames, xy, self.status, self.clock, smoothing)


def segment(trajectory: Trajectory, g_max: int = 3) -> list[Segment]:
    """Split a trajectory into gap-free segments, bridging short gaps.

    Runs of at most ``g_max`` missing frames between two present samples are
    filled by linear interpolation in x and y and marked ``INTERPOLATED``.
    Longer runs end the current segment.
    """
    if g_max < 0:
        raise ValidationError(f"g_max must be non-negative, got {g_max}")
    present = trajectory.status != Status.MISSING
    frames = trajectory.frames[present]
    xy = trajectory.xy[present]
    status = trajectory.status[present]
    if len(frames) == 0:
        return []

    gaps = np.diff(frames) - 1
    breaks = np.flatnonzero(gaps > g_max) + 1
    out = []
    for lo, hi in zip(np.r_[0, breaks], np.r_[breaks, len(frames)]):
        f, p, s = frames[lo:hi], xy[lo:hi], status[lo:hi]
        full = np.arange(f[0], f[-1] + 1)
        if len(full) == len(f):
            out.append(Segment(trajectory.athlete_id, f, p, s, trajectory.clock))
            continue
        filled = np.column_stack([np.interp(full, f, p[:, 0]), np.interp(full, f, p[:, 1])])
        st = np.full(len(full), Status.INTERPOLATED, dtype=np.int8)
        st[f - f[0]] = s
        filled[f - f[0]] = p  # keep present samples bit-exact
        out.append(Segment(trajectory.athlete_id, full, filled, st, trajectory.clock))
    return out


def flatten(segments: Sequence[Segment], athlete_id: str, clock: FrameClock,
            labels: Mapping[str, str] | None = None) -> Trajectory:
    """Re-assemble segments into a trajectory (gaps stay implicit)."""
    if not segments:
        return Trajectory(athlete_id, np.empty(0, np.int64), np.empty((0, 2)), np.empty(0, np.int8),
                          clock, labels or {})
    return Trajectory(athlete_id,
                      np.concatenate([s.frames for s in segments]),
                      np.concatenate([s.xy for s in segments]),
                      np.concatenate([s.status for s in segments]),
                      clock, labels or {})
