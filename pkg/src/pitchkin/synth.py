"""Synthetic trajectories with closed-form kinematics.

Used as the verification oracle for smoothing, differentiation and profile
fitting, and by the ``synth`` CLI command to produce example sequences.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .asprofile import SelectedPoint
from .data_model import FrameClock, Status, Trajectory, ValidationError
from .ingest import TrajectorySet
from .kinematics import KinematicsConfig, KinematicsSeries
from .preprocess import ConfigError

KINDS = ("static", "constant_velocity", "constant_acceleration", "sinusoid", "piecewise_sprint")
SPRINT_MAX_DISTANCE_M = 48.0


@dataclass(frozen=True)
class MotionScenario:
    kind: str
    params: dict = field(default_factory=dict)
    duration_s: float = 30.0
    frame_rate_hz: float = 25.0
    noise_sigma_m: float = 0.0
    gaps: tuple[tuple[int, int], ...] = ()   # (first missing frame, length)
    seed: int = 0
    athlete_id: str = "synthetic"

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ConfigError(f"unknown scenario kind {self.kind!r}; expected one of {KINDS}")
        if not self.duration_s > 0:
            raise ConfigError(f"duration must be positive, got {self.duration_s}")
        if not self.frame_rate_hz > 0:
            raise ConfigError(f"frame rate must be positive, got {self.frame_rate_hz}")
        if self.noise_sigma_m < 0:
            raise ConfigError(f"noise sigma must be non-negative, got {self.noise_sigma_m}")
        for start, length in self.gaps:
            if start < 1 or length < 0:
                raise ConfigError(f"invalid gap ({start}, {length})")

    @property
    def clock(self) -> FrameClock:
        return FrameClock(self.frame_rate_hz, max(1, int(round(self.duration_s * self.frame_rate_hz))))


@dataclass
class SyntheticTrack:
    trajectory: Trajectory
    clean_xy: np.ndarray          # noiseless positions at every frame
    velocity: np.ndarray          # analytic velocity vectors
    analytic_speed: np.ndarray
    analytic_accel: np.ndarray    # magnitude of the analytic acceleration vector
    tangential_accel: np.ndarray  # signed, along the direction of travel
    frames: np.ndarray

    def analytic_dict(self) -> dict:
        return {"frames": self.frames.tolist(), "speed_mps": self.analytic_speed.tolist(),
                "accel_mps2": self.analytic_accel.tolist(),
                "tangential_accel_mps2": self.tangential_accel.tolist()}


def _vec(value, default=(0.0, 0.0)) -> np.ndarray:
    v = np.asarray(value if value is not None else default, dtype=float).reshape(2)
    return v


def _polynomial(t, origin, v0, a):
    pos = origin + np.outer(t, v0) + 0.5 * np.outer(t ** 2, a)
    vel = np.broadcast_to(v0, (len(t), 2)) + np.outer(t, a)
    acc = np.broadcast_to(a, (len(t), 2)).copy()
    return pos, vel, acc


def _sinusoid(t, p):
    amp = float(p.get("amplitude", 10.0))
    omega = float(p.get("omega", 0.5))
    phase = float(p.get("phase", 0.0))
    origin = _vec(p.get("origin"))
    axis = _vec(p.get("axis"), (1.0, 0.0))
    axis = axis / np.linalg.norm(axis)
    s = amp * np.sin(omega * t + phase)
    ds = amp * omega * np.cos(omega * t + phase)
    dds = -amp * omega ** 2 * np.sin(omega * t + phase)
    return origin + np.outer(s, axis), np.outer(ds, axis), np.outer(dds, axis)


@dataclass
class _Phase:
    kind: str
    t0: float
    duration: float
    x0: float
    direction: float
    v_target: float = 0.0
    v0: float = 0.0
    decel: float = 0.0


def plan_sprints(duration_s: float, A0: float, S0: float, x_start: float, rng: np.random.Generator):
    """Alternating rest / accelerate / cruise / decelerate phases along the x axis.

    Acceleration phases follow ``v(u) = v_t (1 - exp(-u / tau))`` with
    ``tau = S0 / A0``, so every sample satisfies
    ``a = (A0 / S0) (v_t - v) <= A0 (1 - v / S0)``.
    """
    tau = S0 / A0
    phases = []
    t, x = 0.0, x_start
    while t < duration_s:
        direction = 1.0 if x < 0 else -1.0
        rest = rng.uniform(0.5, 2.5)
        phases.append(_Phase("rest", t, rest, x, direction))
        t += rest
        v_t = rng.uniform(0.55, 0.95) * S0
        acc_dur = rng.uniform(1.5, 3.0) * tau
        cruise = rng.uniform(0.3, 1.5)
        decel = rng.uniform(3.0, 5.0)
        while True:
            v_c = v_t * (1.0 - math.exp(-acc_dur / tau))
            d_acc = v_t * (acc_dur - tau * (1.0 - math.exp(-acc_dur / tau)))
            dist = d_acc + v_c * cruise + v_c ** 2 / (2.0 * decel)
            if dist <= SPRINT_MAX_DISTANCE_M:
                break
            v_t *= 0.9
        phases.append(_Phase("accelerate", t, acc_dur, x, direction, v_target=v_t))
        t += acc_dur
        x += direction * d_acc
        phases.append(_Phase("cruise", t, cruise, x, direction, v0=v_c))
        t += cruise
        x += direction * v_c * cruise
        phases.append(_Phase("decelerate", t, v_c / decel, x, direction, v0=v_c, decel=decel))
        t += v_c / decel
        x += direction * v_c ** 2 / (2.0 * decel)
    return phases, tau


def _sprint(t, p, rng):
    A0 = float(p.get("A0", 6.0))
    S0 = float(p.get("S0", 8.5))
    if not (A0 > 0 and S0 > 0):
        raise ConfigError("piecewise_sprint needs positive A0 and S0")
    y = float(p["y"]) if "y" in p else float(rng.uniform(-25.0, 25.0))
    x_start = float(p["x_start"]) if "x_start" in p else float(rng.uniform(-25.0, 25.0))
    phases, tau = plan_sprints(float(t[-1]) + 1.0, A0, S0, x_start, rng)
    starts = np.array([ph.t0 for ph in phases])
    which = np.searchsorted(starts, t, side="right") - 1
    x = np.empty(len(t))
    v = np.empty(len(t))
    a = np.empty(len(t))
    for i, ph in enumerate(phases):
        m = which == i
        if not m.any():
            continue
        u = t[m] - ph.t0
        if ph.kind == "rest":
            x[m], v[m], a[m] = ph.x0, 0.0, 0.0
        elif ph.kind == "accelerate":
            e = np.exp(-u / tau)
            v[m] = ph.v_target * (1.0 - e)
            a[m] = ph.v_target / tau * e
            x[m] = ph.x0 + ph.direction * ph.v_target * (u - tau * (1.0 - e))
        elif ph.kind == "cruise":
            x[m], v[m], a[m] = ph.x0 + ph.direction * ph.v0 * u, ph.v0, 0.0
        else:
            v[m] = ph.v0 - ph.decel * u
            a[m] = -ph.decel
            x[m] = ph.x0 + ph.direction * (ph.v0 * u - 0.5 * ph.decel * u ** 2)
        # Store signed velocity/acceleration along the pitch x axis.
        v[m] *= ph.direction
        a[m] *= ph.direction
    pos = np.column_stack([x, np.full(len(t), y)])
    vel = np.column_stack([v, np.zeros(len(t))])
    acc = np.column_stack([a, np.zeros(len(t))])
    return pos, vel, acc


def _gapped_trajectory(athlete_id: str, frames: np.ndarray, xy: np.ndarray, gaps, clock: FrameClock) -> Trajectory:
    status = np.full(len(frames), Status.OBSERVED, dtype=np.int8)
    for start, length in gaps:
        status[(frames >= start) & (frames < start + length)] = Status.MISSING
    present = np.flatnonzero(status != Status.MISSING)
    if len(present) == 0:
        raise ConfigError("gaps remove every sample")
    # A trajectory spans its first to last present sample.
    sl = slice(present[0], present[-1] + 1)
    return Trajectory(athlete_id, frames[sl], xy[sl], status[sl], clock)


def generate(scenario: MotionScenario) -> SyntheticTrack:
    """Sample a scenario at every frame, add noise and gaps.

    The random stream is fully determined by ``scenario.seed``.
    """
    clock = scenario.clock
    frames = np.arange(1, clock.frame_count + 1)
    t = clock.timestamp(frames)
    p = scenario.params
    rng = np.random.default_rng(scenario.seed)
    if scenario.kind == "static":
        pos, vel, acc = _polynomial(t, _vec(p.get("position")), np.zeros(2), np.zeros(2))
    elif scenario.kind == "constant_velocity":
        pos, vel, acc = _polynomial(t, _vec(p.get("origin")), _vec(p.get("velocity"), (2.0, 0.0)), np.zeros(2))
    elif scenario.kind == "constant_acceleration":
        pos, vel, acc = _polynomial(t, _vec(p.get("origin")), _vec(p.get("velocity")),
                                    _vec(p.get("accel"), (1.0, 0.0)))
    elif scenario.kind == "sinusoid":
        pos, vel, acc = _sinusoid(t, p)
    else:
        pos, vel, acc = _sprint(t, p, rng)

    noisy = pos + (rng.normal(0.0, scenario.noise_sigma_m, pos.shape) if scenario.noise_sigma_m > 0 else 0.0)
    try:
        traj = _gapped_trajectory(scenario.athlete_id, frames, noisy, scenario.gaps, clock)
    except ValidationError as exc:
        raise ConfigError(f"scenario leaves the pitch: {exc}") from None

    speed = np.linalg.norm(vel, axis=1)
    moving = speed > 1e-12
    tangential = np.where(moving, np.einsum("ij,ij->i", acc, vel) / np.where(moving, speed, 1.0),
                          np.linalg.norm(acc, axis=1))
    return SyntheticTrack(traj, pos, vel, speed, np.linalg.norm(acc, axis=1), tangential, frames)


@dataclass
class ASDataset:
    points: list[SelectedPoint]
    A0: float
    S0: float
    outliers: list[int]

    @property
    def slope(self) -> float:
        return -self.A0 / self.S0

    def as_series(self, clock: FrameClock | None = None, athlete_id: str = "as-synthetic") -> KinematicsSeries:
        """Pack the points as a kinematics series (one frame per point)."""
        n = len(self.points)
        clock = clock or FrameClock(25.0, max(n, 1))
        frames = np.arange(1, n + 1)
        speed = np.array([p.speed for p in self.points])
        accel = np.array([p.accel for p in self.points])
        ok = np.ones(n, dtype=bool)
        return KinematicsSeries(athlete_id, frames, speed, accel, ok, ok.copy(), clock, KinematicsConfig(),
                                segment_bounds=[(1, n)] if n else [])


def synthesize_as_dataset(A0: float, S0: float, bins: int = 30, noise_sigma: float = 0.0,
                          per_bin: int = 2, outliers: int = 0, outlier_offset: float = 3.0,
                          min_speed: float = 3.0, bin_width: float = 0.2, seed: int = 0) -> ASDataset:
    """Points on ``a = A0 (1 - s / S0)`` with ``per_bin`` samples in each speed bin.

    Speeds are drawn inside each bin away from its edges. ``outliers``
    randomly chosen points are lifted by ``outlier_offset`` m/s^2.
    """
    if not A0 > 0:
        raise ConfigError("A0 must be positive")
    if not S0 > min_speed:
        raise ConfigError("S0 must exceed the minimum speed")
    if bins < 1 or per_bin < 1 or noise_sigma < 0 or outliers < 0:
        raise ConfigError("bins and per_bin must be positive; noise and outliers non-negative")
    rng = np.random.default_rng(seed)
    b = np.repeat(np.arange(bins), per_bin)
    speed = min_speed + bin_width * (b + rng.uniform(0.05, 0.95, len(b)))
    accel = A0 * (1.0 - speed / S0)
    if noise_sigma > 0:
        accel = accel + rng.normal(0.0, noise_sigma, len(b))
    picked = sorted(rng.choice(len(b), size=min(outliers, len(b)), replace=False).tolist()) if outliers else []
    accel[picked] += outlier_offset
    pts = [SelectedPoint(float(s), float(a), int(k), i + 1) for i, (s, a, k) in enumerate(zip(speed, accel, b))]
    return ASDataset(pts, A0, S0, picked)


@dataclass
class SyntheticSequence:
    ground_truth: TrajectorySet
    predictions: TrajectorySet
    analytic: dict
    pred_to_gt: dict[str, str]


def synthesize_sequence(n_athletes: int = 6, duration_s: float = 30.0, noise_sigma_m: float = 0.3,
                        seed: int = 0, frame_rate_hz: float = 25.0,
                        detection_fractions: Sequence[float] | None = None,
                        gap_rate_per_min: float = 0.0, sequence_id: str = "SYNTH") -> SyntheticSequence:
    """A multi-athlete sprint sequence: noiseless ground truth and noisy predictions.

    Prediction ``p<i>`` corresponds to ground-truth track ``<i>``. A
    detection fraction below one truncates the prediction to that leading
    share of the frames; ``gap_rate_per_min`` injects random detection gaps
    of 2 to 12 frames.
    """
    if n_athletes < 1:
        raise ConfigError("need at least one athlete")
    fractions = list(detection_fractions) if detection_fractions is not None else [1.0] * n_athletes
    if len(fractions) != n_athletes or any(not 0 < f <= 1 for f in fractions):
        raise ConfigError("detection fractions must be in (0, 1], one per athlete")
    children = np.random.SeedSequence(seed).spawn(n_athletes)
    gt_tracks, pred_tracks, analytic, mapping = {}, {}, {}, {}
    clock = None
    for i, child in enumerate(children):
        gid, pid = f"{i + 1}", f"p{i + 1}"
        athlete_seed = int(child.generate_state(1)[0])
        params = {"y": -27.0 + 54.0 * (i + 0.5) / n_athletes}
        truth = generate(MotionScenario("piecewise_sprint", params, duration_s, frame_rate_hz, 0.0,
                                        seed=athlete_seed, athlete_id=gid))
        clock = truth.trajectory.clock
        rng = np.random.default_rng(athlete_seed + 1)
        T = clock.frame_count
        gaps = []
        if gap_rate_per_min > 0:
            for _ in range(rng.poisson(gap_rate_per_min * duration_s / 60.0)):
                gaps.append((int(rng.integers(2, T)), int(rng.integers(2, 13))))
        keep_until = int(round(fractions[i] * T))
        if keep_until < T:
            gaps.append((keep_until + 1, T - keep_until))
        noise = rng.normal(0.0, noise_sigma_m, truth.clean_xy.shape) if noise_sigma_m > 0 else 0.0
        pred_tracks[pid] = _gapped_trajectory(pid, truth.frames, truth.clean_xy + noise, gaps, clock)
        gt_tracks[gid] = truth.trajectory
        analytic[gid] = truth.analytic_dict()
        mapping[pid] = gid
    gt = TrajectorySet(sequence_id, clock, dict(sorted(gt_tracks.items())))
    pred = TrajectorySet(sequence_id, clock, dict(sorted(pred_tracks.items())))
    return SyntheticSequence(gt, pred, analytic, mapping)


def write_analytic_sidecar(seq: SyntheticSequence, path, meta: dict | None = None) -> None:
    doc = {"meta": meta or {}, "pred_to_gt": seq.pred_to_gt, "athletes": seq.analytic}
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, sort_keys=True)
        fh.write("\n")
