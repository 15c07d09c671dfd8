import numpy as np
import pytest

from pitchkin.data_model import FrameClock, Segment
from pitchkin.preprocess import (ConfigError, SmoothingConfig, kalman_filter_positions, kalman_forward,
                                 smooth_segment)

DT = 0.04


def seg(xy, first=1):
    xy = np.asarray(xy, float)
    n = len(xy)
    return Segment("a", np.arange(first, first + n), xy, np.zeros(n, np.int8), FrameClock(25.0, first + n))


def reference_kalman(z, dt, q_sigma, r_sigma, v_var=1e4):
    """Textbook four-state (x, y, vx, vy) filter written out in full."""
    F = np.eye(4)
    F[0, 2] = F[1, 3] = dt
    H = np.zeros((2, 4))
    H[0, 0] = H[1, 1] = 1.0
    G = np.array([[dt ** 3 / 3, dt ** 2 / 2], [dt ** 2 / 2, dt]]) * q_sigma ** 2
    Q = np.zeros((4, 4))
    Q[np.ix_([0, 2], [0, 2])] = G
    Q[np.ix_([1, 3], [1, 3])] = G
    R = np.eye(2) * r_sigma ** 2
    x = np.array([z[0, 0], z[0, 1], 0.0, 0.0])
    P = np.diag([r_sigma ** 2, r_sigma ** 2, v_var, v_var])
    out = [z[0].copy()]
    for k in range(1, len(z)):
        x = F @ x
        P = F @ P @ F.T + Q
        S = H @ P @ H.T + R
        K = P @ H.T @ np.linalg.inv(S)
        x = x + K @ (z[k] - H @ x)
        P = (np.eye(4) - K @ H) @ P
        out.append(x[:2].copy())
    return np.array(out)


def savgol_coefficients(window, order):
    """Least-squares smoothing weights for the centre sample."""
    h = window // 2
    A = np.vander(np.arange(-h, h + 1), order + 1, increasing=True)
    return np.linalg.pinv(A)[0]


# --- config -------------------------------------------------------------------

@pytest.mark.parametrize("kwargs", [
    {"method": "median"}, {"window": 8}, {"window": 5, "poly_order": 5}, {"process_accel_sigma": 0.0},
    {"measurement_sigma_m": -1.0},
])
def test_invalid_config(kwargs):
    with pytest.raises(ConfigError):
        SmoothingConfig(**kwargs)


# --- shared behaviour -----------------------------------------------------------

@pytest.mark.parametrize("method", ["none", "kalman", "savgol"])
def test_constant_position_is_a_fixed_point(method):
    s = seg(np.tile([12.5, -7.25], (60, 1)))
    out = smooth_segment(s, SmoothingConfig(method=method))
    np.testing.assert_allclose(out.xy, s.xy, atol=1e-6)


@pytest.mark.parametrize("method", ["none", "kalman", "savgol"])
def test_smoothing_keeps_frames_and_statuses(method):
    s = seg(np.random.default_rng(1).normal(0, 1, (30, 2)), first=17)
    out = smooth_segment(s, SmoothingConfig(method=method))
    np.testing.assert_array_equal(out.frames, s.frames)
    np.testing.assert_array_equal(out.status, s.status)
    assert len(out) == len(s)


def test_none_is_identity():
    s = seg(np.random.default_rng(2).normal(0, 1, (20, 2)))
    assert np.array_equal(smooth_segment(s, SmoothingConfig(method="none")).xy, s.xy)


# --- Savitzky-Golay -------------------------------------------------------------

def test_savgol_reproduces_quadratic_interior():
    t = np.arange(1, 101) * DT
    s = seg(np.column_stack([t ** 2, 3 - 0.5 * t + 0.25 * t ** 2]))
    out = smooth_segment(s, SmoothingConfig(method="savgol", window=9, poly_order=2))
    np.testing.assert_allclose(out.xy[4:-4], s.xy[4:-4], atol=1e-9, rtol=0)


def test_savgol_matches_least_squares_weights():
    xy = np.random.default_rng(4).normal(0, 1, (50, 2))
    out = smooth_segment(seg(xy), SmoothingConfig(method="savgol", window=9, poly_order=2))
    w = savgol_coefficients(9, 2)
    expected = np.array([w @ xy[i - 4:i + 5] for i in range(4, 46)])
    np.testing.assert_allclose(out.xy[4:46], expected, atol=1e-12)


def test_savgol_edges_use_mirror_padding():
    xy = np.random.default_rng(5).normal(0, 1, (20, 2))
    out = smooth_segment(seg(xy), SmoothingConfig(method="savgol"))
    padded = np.concatenate([xy[4:0:-1], xy, xy[-2:-6:-1]])
    w = savgol_coefficients(9, 2)
    np.testing.assert_allclose(out.xy[0], w @ padded[0:9], atol=1e-12)
    np.testing.assert_allclose(out.xy[-1], w @ padded[-9:], atol=1e-12)


def test_savgol_short_segment_passes_through():
    s = seg(np.random.default_rng(6).normal(0, 1, (8, 2)))
    out = smooth_segment(s, SmoothingConfig(method="savgol"))
    assert out.smoothing == "passthrough"
    assert np.array_equal(out.xy, s.xy)


def test_savgol_noise_variance_ratio():
    rng = np.random.default_rng(7)
    noise = rng.normal(0, 0.5, (100_008, 2))
    out = smooth_segment(seg(noise), SmoothingConfig(method="savgol"))
    ratio = out.xy[4:-4, 0].var() / noise[4:-4, 0].var()
    assert abs(ratio - 0.255) <= 0.02
    # the closed form is the sum of squared weights
    assert abs(np.sum(savgol_coefficients(9, 2) ** 2) - 59 / 231) < 1e-12


# --- Kalman ---------------------------------------------------------------------

def test_kalman_matches_full_state_reference():
    rng = np.random.default_rng(8)
    t = np.arange(1, 121) * DT
    z = np.column_stack([-10 + 4 * t, 2 * np.sin(t)]) + rng.normal(0, 0.3, (120, 2))
    got, _, _ = kalman_filter_positions(z, DT, 2.0, 0.5)
    np.testing.assert_allclose(got, reference_kalman(z, DT, 2.0, 0.5), atol=1e-9)


def test_kalman_converges_on_noiseless_constant_velocity():
    t = np.arange(1, 251) * DT
    truth = np.column_stack([-20 + 3 * t, 5 - 1.5 * t])
    out = kalman_forward(seg(truth), SmoothingConfig())
    assert np.max(np.abs(out.xy[125:] - truth[125:])) < 1e-3


def test_kalman_reduces_noise_on_most_seeds():
    t = np.arange(1, 251) * DT
    truth = np.column_stack([-20 + 3 * t, 5 - 1.5 * t])
    wins = 0
    for s in range(200):
        noisy = truth + np.random.default_rng(s).normal(0, 0.3, truth.shape)
        out = kalman_forward(seg(noisy), SmoothingConfig())
        wins += np.sqrt(np.mean((out.xy - truth) ** 2)) < np.sqrt(np.mean((noisy - truth) ** 2))
    assert wins >= 190


def test_kalman_innovations_are_zero_mean_on_matched_model():
    q_sigma, r_sigma = 2.0, 0.5
    G = np.array([[DT ** 3 / 3, DT ** 2 / 2], [DT ** 2 / 2, DT]]) * q_sigma ** 2
    L = np.linalg.cholesky(G)
    normalized = []
    for s in range(100):
        rng = np.random.default_rng(1000 + s)
        state = np.array([[0.0, 0.0], [2.0, -1.0]])   # rows: position, velocity
        xs = []
        for _ in range(250):
            xs.append(state[0].copy())
            state = np.array([[1.0, DT], [0.0, 1.0]]) @ state + L @ rng.normal(size=(2, 2))
        z = np.array(xs) + rng.normal(0, r_sigma, (250, 2))
        _, nu, var = kalman_filter_positions(z, DT, q_sigma, r_sigma)
        normalized.append((nu[20:] / np.sqrt(var[20:, None])).ravel())
    e = np.concatenate(normalized)
    assert abs(e.mean()) < 3 / np.sqrt(len(e))
    assert abs(e.var() - 1.0) < 0.05


def test_kalman_single_sample_unchanged():
    s = seg([[1.0, 2.0]])
    assert np.array_equal(kalman_forward(s, SmoothingConfig()).xy, s.xy)
