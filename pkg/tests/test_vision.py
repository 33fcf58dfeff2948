"""Geometry tests: canonical normalization, features, calibration, head pose."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from facecue import vision
from facecue.types import ExpressionLabel, LandmarkFrame
from facecue.vision import (
    DegenerateLandmarksError,
    NoFaceError,
    VisionError,
    calibrate_neutral,
    estimate_head_pose,
    euler_angles,
    extract_features,
    normalize_landmarks,
    normalize_points,
    pairwise_distances,
    pose_from_points,
    project_weak_perspective,
    rotation_matrix,
)


def frame(points, ts=0):
    return LandmarkFrame(timestamp_us=ts, face_present=True, points=points)


def rot2d(deg):
    t = np.radians(deg)
    return np.array([[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]])


@pytest.fixture(scope="module")
def neutral_canon(templates):
    return templates.neutral


def test_canonical_input_is_fixed_point(neutral_canon):
    out = normalize_points(neutral_canon)
    assert np.abs(out - neutral_canon).max() < 1e-9


def test_similarity_invariance(neutral_canon):
    base = normalize_points(neutral_canon)
    moved = neutral_canon * 2.0 + np.array([10.0, 5.0])
    assert np.abs(normalize_points(moved) - base).max() < 1e-9


def test_rotation_invariance(neutral_canon):
    base = normalize_points(neutral_canon)
    centered = neutral_canon - neutral_canon.mean(axis=0)
    rotated = centered @ rot2d(30.0).T + np.array([3.0, -2.0])
    assert np.abs(normalize_points(rotated) - base).max() < 1e-9


@settings(max_examples=60, deadline=None)
@given(
    st.floats(min_value=-180, max_value=180),
    st.floats(min_value=0.25, max_value=20.0),
    st.floats(min_value=-500, max_value=500),
    st.floats(min_value=-500, max_value=500),
)
def test_similarity_invariance_property(angle, scale, tx, ty):
    pts = vision.load_reference_model().frontal_projection()
    base = normalize_points(pts)
    moved = (pts @ rot2d(angle).T) * scale + np.array([tx, ty])
    assert np.abs(normalize_points(moved) - base).max() < 1e-9


def test_canonical_invariants(neutral_canon):
    out = normalize_points(neutral_canon * 37.5 + 11.0)
    assert np.abs(out.mean(axis=0)).max() < 1e-9
    left, right = vision.eye_centers(out)
    d = right - left
    assert abs(np.hypot(d[0], d[1]) - 1.0) < 1e-9
    assert abs(d[1]) < 1e-9


def test_degenerate_eyes_rejected():
    pts = np.zeros((68, 2))
    with pytest.raises(DegenerateLandmarksError):
        normalize_points(pts)


def test_no_face_rejected():
    with pytest.raises(NoFaceError):
        normalize_landmarks(LandmarkFrame(timestamp_us=0, face_present=False))


# --- features -----------------------------------------------------------------

def test_feature_layout(neutral_canon):
    fv = extract_features(neutral_canon)
    assert fv.values.shape == (132,)
    assert not fv.calibrated
    assert np.all(fv.values[:66] >= 0)
    assert np.all(fv.values[66:] == 0.0)
    assert np.isfinite(fv.values).all()


def test_self_baseline_gives_zero_deltas(neutral_canon):
    fv = extract_features(neutral_canon, neutral_canon)
    assert fv.calibrated
    assert np.abs(fv.values[66:]).max() == 0.0


def test_smile_widens_mouth(templates):
    """Mouth-corner distance grows from neutral to the smile template."""
    neutral = templates.neutral
    smile = templates.canonical_template(ExpressionLabel.HAPPINESS)
    # mouth corners are salient points 7 and 8 -> pair index in the fixed order
    pair_idx = vision.FEATURE_PAIRS.index((7, 8))
    d_neutral = pairwise_distances(neutral)[pair_idx]
    d_smile = pairwise_distances(smile)[pair_idx]
    assert d_smile > d_neutral


def test_features_deterministic(neutral_canon):
    a = extract_features(neutral_canon).values
    b = extract_features(neutral_canon.copy()).values
    assert np.array_equal(a, b)


# --- calibration ----------------------------------------------------------------

def test_calibration_of_identical_frames(neutral_canon):
    pts = neutral_canon * 80 + np.array([300.0, 200.0])
    frames = [frame(pts, ts=i) for i in range(10)]
    out = calibrate_neutral(frames)
    assert np.abs(out - normalize_points(pts)).max() < 1e-12


def test_calibration_is_median_robust(neutral_canon):
    pts = neutral_canon * 80 + np.array([300.0, 200.0])
    wild = pts + np.random.default_rng(0).normal(scale=40.0, size=pts.shape)
    frames = [frame(pts, ts=i) for i in range(9)] + [frame(wild, ts=9)]
    out = calibrate_neutral(frames)
    assert np.abs(out - normalize_points(pts)).max() < 1e-12


def test_calibration_with_symmetric_jitter(neutral_canon):
    eps = 0.01
    rng = np.random.default_rng(3)
    frames = []
    for i in range(10):
        jitter = rng.uniform(0.2 * eps, eps, size=neutral_canon.shape)
        frames.append(frame(neutral_canon + jitter, ts=2 * i))
        frames.append(frame(neutral_canon - jitter, ts=2 * i + 1))
    out = calibrate_neutral(frames)
    assert np.abs(out - normalize_points(neutral_canon)).max() < eps


def test_calibration_needs_enough_frames(neutral_canon):
    frames = [frame(neutral_canon, ts=i) for i in range(9)]
    with pytest.raises(VisionError):
        calibrate_neutral(frames)
    # faceless frames do not count
    frames += [LandmarkFrame(timestamp_us=100, face_present=False)]
    with pytest.raises(VisionError):
        calibrate_neutral(frames)


# --- head pose -------------------------------------------------------------------

def test_frontal_pose_is_zero(reference_model):
    proj = project_weak_perspective(reference_model.points3d)
    yaw, pitch, roll = pose_from_points(proj, reference_model)
    assert abs(yaw) < 1e-6 and abs(pitch) < 1e-6 and abs(roll) < 1e-6


def test_yaw_20_recovered(reference_model):
    proj = project_weak_perspective(reference_model.points3d, yaw_deg=20.0, scale=1.3, translation=(40, -10))
    yaw, pitch, roll = pose_from_points(proj, reference_model)
    assert abs(yaw - 20.0) < 0.5
    assert abs(pitch) < 0.5 and abs(roll) < 0.5


def test_euler_round_trip():
    rng = np.random.default_rng(5)
    for _ in range(200):
        angles = rng.uniform(-40, 40, size=3)
        recovered = euler_angles(rotation_matrix(*angles))
        assert np.abs(np.array(recovered) - angles).max() < 1e-9


def test_collinear_points_rejected(reference_model):
    line = np.stack([np.linspace(0, 100, 68), np.linspace(0, 50, 68)], axis=1)
    with pytest.raises(DegenerateLandmarksError):
        pose_from_points(line, reference_model)


def test_estimate_head_pose_clamps_and_stamps(reference_model):
    proj = project_weak_perspective(reference_model.points3d, yaw_deg=-35.0, pitch_deg=10.0, scale=0.7)
    sample = estimate_head_pose(frame(proj, ts=123), reference_model)
    assert sample.timestamp_us == 123
    assert abs(sample.yaw_deg + 35.0) < 0.5
    assert abs(sample.pitch_deg - 10.0) < 0.5


def test_pose_under_noise(reference_model):
    rng = np.random.default_rng(17)
    errors = []
    for _ in range(60):
        truth = rng.uniform(-40, 40, size=3)
        proj = project_weak_perspective(reference_model.points3d, *truth, scale=1.0)
        noisy = proj + rng.normal(scale=0.01, size=proj.shape)  # sigma in interocular units
        got = np.array(pose_from_points(noisy, reference_model))
        errors.append(np.abs(got - truth).max())
    assert np.median(errors) < 3.0


def test_reference_model_is_noncoplanar(reference_model):
    centered = reference_model.points3d - reference_model.points3d.mean(axis=0)
    assert np.linalg.matrix_rank(centered) == 3
    assert reference_model.model_version
