"""Landmark geometry: canonical normalization, distance features, neutral
calibration, and weak-perspective head-pose recovery.

Conventions (fixed here, documented nowhere else):
  * iBUG 68-point ordering; eye centers are the means of points 37-42 and
    43-48 (1-based).
  * Canonical frame: centroid at the origin, eye line along +x (left eye at
    negative x), interocular distance 1. Similarity-invariant by construction.
  * 3D reference face: x-right, y-up, z-forward; the camera looks down -z and
    projects orthographically onto x-y.
  * Rotations factor as R = Rz(roll) @ Rx(pitch) @ Ry(yaw); angles in degrees.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .types import HeadPoseSample, LandmarkFrame, NUM_LANDMARKS

# 0-based landmark indices
LEFT_EYE_SLICE = slice(36, 42)
RIGHT_EYE_SLICE = slice(42, 48)

# The 12 salient feature points, in fixed order. -1 and -2 mark the derived
# left/right eye centers; the rest are 0-based iBUG indices
# (brows 18/22/23/27, nose tip 31, mouth corners 49/55, lip centers 52/58,
# chin 9, all 1-based).
LEFT_EYE_CENTER = -1
RIGHT_EYE_CENTER = -2
SALIENT_POINTS: tuple[int, ...] = (17, 21, 22, 26, LEFT_EYE_CENTER, RIGHT_EYE_CENTER, 30, 48, 54, 51, 57, 8)

FEATURE_PAIRS: tuple[tuple[int, int], ...] = tuple(
    (i, j) for i in range(len(SALIENT_POINTS)) for j in range(i + 1, len(SALIENT_POINTS))
)
NUM_DISTANCES = len(FEATURE_PAIRS)  # 66
FEATURE_LENGTH = 2 * NUM_DISTANCES  # distances ++ neutral-calibrated deltas

FEATURE_SPEC_VERSION = "dist12-delta-v1"

MIN_CALIBRATION_FRAMES = 10

_CANON_TOL = 1e-9


class VisionError(Exception):
    pass


class NoFaceError(VisionError):
    pass


class DegenerateLandmarksError(VisionError):
    pass


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray  # (132,) float64
    calibrated: bool


@dataclass(frozen=True)
class ReferenceFaceModel:
    """Rigid neutral 3D face used for pose fitting and synthesis."""

    points3d: np.ndarray  # (68, 3) float64
    model_version: str

    def frontal_projection(self) -> np.ndarray:
        """Orthographic x-y projection of the model (a neutral frontal face)."""
        return self.points3d[:, :2].copy()


def load_reference_model(path: str | Path | None = None) -> ReferenceFaceModel:
    if path is None:
        raw = resources.files("facecue.data").joinpath("reference_face.json").read_text()
    else:
        raw = Path(path).read_text()
    doc = json.loads(raw)
    pts = np.asarray(doc["points"], dtype=np.float64)
    if pts.shape != (NUM_LANDMARKS, 3):
        raise VisionError(f"reference model must be ({NUM_LANDMARKS}, 3), got {pts.shape}")
    centered = pts - pts.mean(axis=0)
    if np.linalg.matrix_rank(centered) < 3:
        raise VisionError("reference model is coplanar")
    return ReferenceFaceModel(points3d=pts, model_version=doc["model_version"])


def eye_centers(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return points[LEFT_EYE_SLICE].mean(axis=0), points[RIGHT_EYE_SLICE].mean(axis=0)


def normalize_points(points: np.ndarray) -> np.ndarray:
    """Similarity-normalize raw 2D landmarks into the canonical frame."""
    points = np.asarray(points, dtype=np.float64)
    centered = points - points.mean(axis=0)
    left, right = eye_centers(centered)
    d = right - left
    dist = float(np.hypot(d[0], d[1]))
    if dist < 1e-12:
        raise DegenerateLandmarksError("coincident eye centers")
    c, s = d[0] / dist, d[1] / dist
    # rotate by -angle(d): maps the eye line onto +x
    rot = np.array([[c, s], [-s, c]])
    return (centered @ rot.T) / dist


def normalize_landmarks(frame: LandmarkFrame) -> np.ndarray:
    if not frame.face_present:
        raise NoFaceError(f"no face at t={frame.timestamp_us}")
    return normalize_points(frame.points)


def assert_canonical(points: np.ndarray, tol: float = 1e-7) -> None:
    centroid = points.mean(axis=0)
    if np.abs(centroid).max() > tol:
        raise VisionError(f"not canonical: centroid {centroid}")
    left, right = eye_centers(points)
    d = right - left
    if abs(np.hypot(d[0], d[1]) - 1.0) > tol or abs(d[1]) > tol:
        raise VisionError(f"not canonical: eye line {d}")


def salient_points(points: np.ndarray) -> np.ndarray:
    """Gather the 12 salient points (2 of them derived eye centers)."""
    left, right = eye_centers(points)
    out = np.empty((len(SALIENT_POINTS), 2))
    for row, idx in enumerate(SALIENT_POINTS):
        if idx == LEFT_EYE_CENTER:
            out[row] = left
        elif idx == RIGHT_EYE_CENTER:
            out[row] = right
        else:
            out[row] = points[idx]
    return out


def pairwise_distances(points: np.ndarray) -> np.ndarray:
    """The 66 pairwise distances among the salient points, in fixed pair order."""
    sal = salient_points(points)
    i = np.fromiter((p[0] for p in FEATURE_PAIRS), dtype=np.intp)
    j = np.fromiter((p[1] for p in FEATURE_PAIRS), dtype=np.intp)
    diff = sal[i] - sal[j]
    return np.hypot(diff[:, 0], diff[:, 1])


def extract_features(canon: np.ndarray, neutral_baseline: np.ndarray | None = None) -> FeatureVector:
    """66 salient-pair distances ++ 66 deltas against the neutral baseline.

    Without a baseline the delta half is exactly zero and the vector is marked
    uncalibrated.
    """
    dists = pairwise_distances(canon)
    if neutral_baseline is None:
        deltas = np.zeros(NUM_DISTANCES)
        calibrated = False
    else:
        deltas = dists - pairwise_distances(neutral_baseline)
        calibrated = True
    return FeatureVector(values=np.concatenate([dists, deltas]), calibrated=calibrated)


def calibrate_neutral(frames: list[LandmarkFrame]) -> np.ndarray:
    """Robust per-wearer neutral face: coordinate-wise median of the normalized
    face-present frames, re-normalized to canonical form."""
    present = [f for f in frames if f.face_present]
    if len(present) < MIN_CALIBRATION_FRAMES:
        raise VisionError(
            f"calibration needs at least {MIN_CALIBRATION_FRAMES} face-present frames, got {len(present)}"
        )
    stack = np.stack([normalize_landmarks(f) for f in present])
    return normalize_points(np.median(stack, axis=0))


# --- head pose --------------------------------------------------------------

def rotation_matrix(yaw_deg: float, pitch_deg: float, roll_deg: float) -> np.ndarray:
    """R = Rz(roll) @ Rx(pitch) @ Ry(yaw)."""
    ps, th, ph = np.radians([yaw_deg, pitch_deg, roll_deg])
    cy, sy = np.cos(ps), np.sin(ps)
    cx, sx = np.cos(th), np.sin(th)
    cz, sz = np.cos(ph), np.sin(ph)
    ry = np.array([[cy, 0, sy], [0, 1, 0], [-sy, 0, cy]])
    rx = np.array([[1, 0, 0], [0, cx, -sx], [0, sx, cx]])
    rz = np.array([[cz, -sz, 0], [sz, cz, 0], [0, 0, 1]])
    return rz @ rx @ ry


def euler_angles(r: np.ndarray) -> tuple[float, float, float]:
    """Invert rotation_matrix: returns (yaw, pitch, roll) in degrees."""
    sx = float(np.clip(r[2, 1], -1.0, 1.0))
    pitch = np.arcsin(sx)
    if abs(sx) < 1.0 - 1e-12:
        yaw = np.arctan2(-r[2, 0], r[2, 2])
        roll = np.arctan2(-r[0, 1], r[1, 1])
    else:
        # gimbal lock: yaw and roll are coupled; put everything into yaw
        yaw = np.arctan2(r[0, 2] * np.sign(sx), r[0, 0])
        roll = 0.0
    return float(np.degrees(yaw)), float(np.degrees(pitch)), float(np.degrees(roll))


def project_weak_perspective(
    model_points: np.ndarray,
    yaw_deg: float = 0.0,
    pitch_deg: float = 0.0,
    roll_deg: float = 0.0,
    scale: float = 1.0,
    translation: tuple[float, float] = (0.0, 0.0),
) -> np.ndarray:
    """Scaled orthographic projection of rotated 3D points onto the image plane."""
    r = rotation_matrix(yaw_deg, pitch_deg, roll_deg)
    rotated = model_points @ r.T
    return scale * rotated[:, :2] + np.asarray(translation)


def pose_from_points(image_points: np.ndarray, model: ReferenceFaceModel) -> tuple[float, float, float]:
    """Weak-perspective pose fit, returning (yaw, pitch, roll) in degrees.

    Centers both point sets, solves the least-squares 2x3 map from model to
    image, projects it to the nearest scaled row-orthonormal matrix via SVD,
    completes the rotation with a cross product, and factors out Euler angles.
    """
    img = np.asarray(image_points, dtype=np.float64)
    img_c = img - img.mean(axis=0)
    mdl_c = model.points3d - model.points3d.mean(axis=0)

    m, *_ = np.linalg.lstsq(mdl_c, img_c, rcond=None)  # (3, 2): img ~= mdl @ m
    u, sv, vt = np.linalg.svd(m.T, full_matrices=False)  # m.T is the 2x3 projection map
    if sv[1] < 1e-9 * max(sv[0], 1e-300) or sv[0] == 0.0:
        raise DegenerateLandmarksError("rank-deficient landmark configuration")
    rows2 = u @ vt  # nearest 2x3 with orthonormal rows (scale (sv0+sv1)/2 discarded)
    r3 = np.cross(rows2[0], rows2[1])
    r = np.vstack([rows2, r3])
    return euler_angles(r)


def estimate_head_pose(frame: LandmarkFrame, model: ReferenceFaceModel) -> HeadPoseSample:
    if not frame.face_present:
        raise NoFaceError(f"no face at t={frame.timestamp_us}")
    yaw, pitch, roll = pose_from_points(frame.points, model)
    clamp = lambda v: float(np.clip(v, -90.0, 90.0))
    return HeadPoseSample(
        timestamp_us=frame.timestamp_us,
        yaw_deg=clamp(yaw),
        pitch_deg=clamp(pitch),
        roll_deg=clamp(roll),
    )
