import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pitchkin.data_model import (FrameClock, PitchConvention, PositionSample, Segment, Status, Trajectory,
                                 ValidationError, flatten, segment)

from helpers import make_trajectory


def test_clock_timestamps_are_k_over_f():
    clock = FrameClock(25.0, 100)
    assert clock.timestamp(1) == 0.04
    assert clock.timestamp(25) == 1.0
    t = clock.timestamp(np.arange(1, 101))
    assert np.all(np.diff(t) > 0)
    assert clock.dt == 0.04


@pytest.mark.parametrize("rate,count", [(0.0, 10), (-25.0, 10), (25.0, 0)])
def test_clock_rejects_bad_values(rate, count):
    with pytest.raises(ValidationError):
        FrameClock(rate, count)


def test_trajectory_requires_increasing_frames():
    clock = FrameClock(25.0, 10)
    with pytest.raises(ValidationError, match="strictly increasing"):
        Trajectory("a", np.array([1, 3, 2]), np.zeros((3, 2)), np.zeros(3, np.int8), clock)


def test_trajectory_rejects_non_finite_and_out_of_bounds():
    clock = FrameClock(25.0, 10)
    xy = np.array([[0.0, 0.0], [np.inf, 0.0]])
    with pytest.raises(ValidationError, match="frame 2"):
        Trajectory("7", np.array([1, 2]), xy, np.zeros(2, np.int8), clock)
    with pytest.raises(ValidationError, match="outside pitch bounds"):
        Trajectory("7", np.array([1]), np.array([[80.5, 0.0]]), np.zeros(1, np.int8), clock)
    # the tolerance box itself is allowed
    Trajectory("7", np.array([1]), np.array([[80.0, -60.0]]), np.zeros(1, np.int8), clock)


def test_trajectory_needs_an_observed_sample():
    clock = FrameClock(25.0, 10)
    with pytest.raises(ValidationError, match="no observed"):
        Trajectory("a", np.array([1, 2]), np.zeros((2, 2)),
                   np.array([Status.INTERPOLATED, Status.MISSING], np.int8), clock)


def test_missing_samples_carry_nan_and_arrays_are_read_only():
    tr = make_trajectory([[0, 0], [5, 5], [2, 0]], missing=[2])
    assert np.isnan(tr.xy[1]).all()
    with pytest.raises(ValueError):
        tr.xy[0, 0] = 1.0


def test_samples_round_trip():
    clock = FrameClock(25.0, 5)
    samples = [PositionSample(1, 0.0, 1.0, Status.OBSERVED), PositionSample(3, 2.0, 1.0, Status.OBSERVED)]
    tr = Trajectory.from_samples("x", samples, clock)
    assert tr.samples == samples


def test_pitch_convention_corner_to_centre():
    conv = PitchConvention(origin="corner")
    x, y = conv.to_canonical(52.5, 34.0)
    assert (float(x), float(y)) == (0.0, 0.0)
    x, y = PitchConvention(origin="corner", flip_y=True).to_canonical(0.0, 0.0)
    assert (float(x), float(y)) == (-52.5, 34.0)


# --- segmentation ------------------------------------------------------------

def test_short_gap_is_interpolated():
    tr = make_trajectory([[0, 0], [9, 9], [9, 9], [3, 0]], missing=[2, 3])
    segs = segment(tr, g_max=3)
    assert len(segs) == 1
    s = segs[0]
    np.testing.assert_array_equal(s.frames, [1, 2, 3, 4])
    np.testing.assert_allclose(s.xy, [[0, 0], [1, 0], [2, 0], [3, 0]], atol=1e-12)
    assert list(s.status) == [Status.OBSERVED, Status.INTERPOLATED, Status.INTERPOLATED, Status.OBSERVED]


def test_long_gap_splits_without_fill():
    xy = np.zeros((6, 2))
    xy[:, 0] = np.arange(6)
    tr = make_trajectory(xy, missing=[2, 3, 4, 5])
    segs = segment(tr, g_max=3)
    assert [(s.first_frame, s.last_frame) for s in segs] == [(1, 1), (6, 6)]
    assert all(np.all(s.status == Status.OBSERVED) for s in segs)


def test_gap_exactly_g_max_is_bridged_and_g_max_zero_never_bridges():
    tr = make_trajectory(np.zeros((5, 2)), missing=[2, 3, 4])
    assert len(segment(tr, 3)) == 1
    assert len(segment(tr, 2)) == 2
    tr1 = make_trajectory(np.zeros((3, 2)), missing=[2])
    assert len(segment(tr1, 0)) == 2


def test_fully_observed_trajectory_is_one_identical_segment():
    xy = np.random.default_rng(0).uniform(-30, 30, (40, 2))
    tr = make_trajectory(xy, first_frame=7)
    (s,) = segment(tr)
    np.testing.assert_array_equal(s.frames, tr.frames)
    np.testing.assert_array_equal(s.xy, tr.xy)


def test_empty_trajectory_gives_no_segments():
    clock = FrameClock(25.0, 10)
    tr = Trajectory("e", np.empty(0, np.int64), np.empty((0, 2)), np.empty(0, np.int8), clock)
    assert segment(tr) == []


def test_segment_rejects_non_contiguous():
    with pytest.raises(ValidationError):
        Segment("a", np.array([1, 3]), np.zeros((2, 2)), np.zeros(2, np.int8), FrameClock(25.0, 3))


@st.composite
def gappy_trajectories(draw):
    n = draw(st.integers(1, 60))
    xy = np.array(draw(st.lists(st.tuples(st.floats(-50, 50), st.floats(-30, 30)), min_size=n, max_size=n)))
    missing_mask = draw(st.lists(st.booleans(), min_size=n, max_size=n))
    missing_mask[0] = missing_mask[-1] = False
    frames = [k + 1 for k, m in enumerate(missing_mask) if m]
    return make_trajectory(xy, missing=frames), draw(st.integers(0, 5))


@settings(max_examples=150, deadline=None)
@given(gappy_trajectories())
def test_segmentation_properties(case):
    tr, g_max = case
    segs = segment(tr, g_max)
    # temporal order, separated by gaps longer than g_max
    for a, b in zip(segs, segs[1:]):
        assert b.first_frame - a.last_frame - 1 > g_max
    # each observed sample exactly once, bit-exact
    obs_f, obs_xy = tr.observed()
    seg_obs = [(int(k), tuple(p)) for s in segs for k, p, st_ in zip(s.frames, s.xy, s.status)
               if st_ == Status.OBSERVED]
    assert seg_obs == [(int(k), tuple(p)) for k, p in zip(obs_f, obs_xy)]
    # interpolated points are collinear with their bracketing observed samples
    for s in segs:
        obs = np.flatnonzero(s.status == Status.OBSERVED)
        for i in np.flatnonzero(s.status == Status.INTERPOLATED):
            lo, hi = obs[obs < i].max(), obs[obs > i].min()
            w = (i - lo) / (hi - lo)
            expected = (1 - w) * s.xy[lo] + w * s.xy[hi]
            assert np.allclose(s.xy[i], expected, atol=1e-9, rtol=0)
    # idempotent
    again = segment(flatten(segs, tr.athlete_id, tr.clock), g_max)
    assert len(again) == len(segs)
    for a, b in zip(segs, again):
        np.testing.assert_array_equal(a.frames, b.frames)
        np.testing.assert_array_equal(a.xy, b.xy)
        np.testing.assert_array_equal(a.status, b.status)
