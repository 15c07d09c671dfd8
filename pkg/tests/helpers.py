"""Small builders and independent reference computations used across tests."""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from pitchkin.data_model import FrameClock, Status, Trajectory
from pitchkin.synth import MotionScenario, generate


def make_trajectory(xy, first_frame=1, missing=(), athlete_id="a", frame_rate_hz=25.0, frame_count=None):
    """Trajectory from consecutive positions; ``missing`` lists frames to blank out."""
    xy = np.asarray(xy, dtype=float)
    frames = np.arange(first_frame, first_frame + len(xy))
    status = np.where(np.isin(frames, list(missing)), Status.MISSING, Status.OBSERVED).astype(np.int8)
    clock = FrameClock(frame_rate_hz, frame_count or int(frames[-1]))
    return Trajectory(athlete_id, frames, xy, status, clock)


def path_trajectory(fn, n_frames, frame_rate_hz=25.0, athlete_id="a"):
    """Sample ``fn(t) -> (n, 2)`` at ``t_k = k / f``, ``k = 1..n_frames``."""
    t = np.arange(1, n_frames + 1) / frame_rate_hz
    return make_trajectory(fn(t), athlete_id=athlete_id, frame_rate_hz=frame_rate_hz)


@lru_cache(maxsize=None)
def sprint_pair(seed: int, sigma: float = 0.3, duration_s: float = 30.0):
    """A noisy piecewise-sprint trajectory and its noiseless counterpart."""
    track = generate(MotionScenario("piecewise_sprint", {}, duration_s, 25.0, sigma, seed=seed))
    clean = Trajectory("clean", track.frames, track.clean_xy,
                       np.zeros(len(track.frames), np.int8), track.trajectory.clock)
    return track.trajectory, clean


def brute_pearson(x, y) -> float:
    """Textbook product-moment correlation with explicit sums."""
    n = len(x)
    mx = sum(x) / n
    my = sum(y) / n
    sxy = sum((a - mx) * (b - my) for a, b in zip(x, y))
    sxx = sum((a - mx) ** 2 for a in x)
    syy = sum((b - my) ** 2 for b in y)
    return sxy / (sxx * syy) ** 0.5
