#!/usr/bin/env python3
"""Regenerate the packaged face-geometry data files.

Writes src/facecue/data/reference_face.json (rigid neutral 68-point 3D face,
iBUG point ordering, interocular distance 1.0, x-right / y-up / z-forward)
and src/facecue/data/expression_templates.json (per-label 2D offsets applied
to the neutral frontal projection, in interocular units).

The outputs are committed; rerun only when changing the geometry, and bump the
version fields when you do.
"""

import json
import math
from pathlib import Path

OUT_DIR = Path(__file__).resolve().parents[1] / "src" / "facecue" / "data"

MODEL_VERSION = "rf-1"
TEMPLATE_VERSION = "xt-1"


def build_reference_face():
    pts = [None] * 68  # 0-based storage, 1-based indices in comments

    # Jaw contour 1-17: half-ellipse, chin forward, ears swept back.
    for i in range(17):
        phi = math.radians(-90 + 180 * i / 16)
        x = 1.08 * math.sin(phi)
        y = -1.72 + 2.12 * (1 - math.cos(phi))
        z = -0.55 + 0.60 * math.cos(phi)
        pts[i] = (x, y, z)

    # Brows 18-22 (left) and 23-27 (right), arched.
    for k in range(5):
        u = k / 4
        y = 0.42 + 0.10 * math.sin(math.pi * u)
        z = 0.17 + 0.06 * math.sin(math.pi * u)
        pts[17 + k] = (-0.92 + 0.72 * u, y, z)  # 18..22, outer -> inner
        pts[22 + k] = (0.20 + 0.72 * u, y, z)  # 23..27, inner -> outer

    # Nose bridge 28-31 (31 = tip) and nostril line 32-36.
    pts[27] = (0.0, 0.20, 0.38)
    pts[28] = (0.0, 0.00, 0.46)
    pts[29] = (0.0, -0.20, 0.54)
    pts[30] = (0.0, -0.40, 0.62)
    nostril_x = (-0.22, -0.11, 0.0, 0.11, 0.22)
    nostril_z = (0.40, 0.46, 0.50, 0.46, 0.40)
    for k in range(5):
        pts[31 + k] = (nostril_x[k], -0.55, nostril_z[k])

    # Eyes 37-42 (left) and 43-48 (right). Offsets sum to zero so the eye
    # centers land exactly at (-0.5, 0, 0.24) and (0.5, 0, 0.24): the frontal
    # interocular distance is exactly 1.
    left_off = [
        (-0.170, 0.000, -0.020),  # 37 outer corner
        (-0.085, 0.055, 0.010),  # 38
        (0.085, 0.060, 0.020),  # 39
        (0.170, 0.000, 0.010),  # 40 inner corner
        (0.085, -0.055, 0.000),  # 41
        (-0.085, -0.060, -0.020),  # 42
    ]
    for k, (dx, dy, dz) in enumerate(left_off):
        pts[36 + k] = (-0.5 + dx, dy, 0.24 + dz)
    # Right eye mirrors the left; 43 is the inner corner, 46 the outer.
    mirror_order = [3, 2, 1, 0, 5, 4]
    for k, src in enumerate(mirror_order):
        dx, dy, dz = left_off[src]
        pts[42 + k] = (0.5 - dx, dy, 0.24 + dz)

    # Outer lip 49-60 and inner lip 61-68 as ellipses around (0, -1.02).
    outer_angles = [180, 150, 120, 90, 60, 30, 0, -30, -60, -90, -120, -150]
    for k, deg in enumerate(outer_angles):
        th = math.radians(deg)
        x = 0.42 * math.cos(th)
        y = -1.02 + 0.16 * math.sin(th)
        z = 0.22 + 0.10 * math.sin(th) ** 2
        pts[48 + k] = (x, y, z)
    inner_angles = [180, 135, 90, 45, 0, -45, -90, -135]
    for k, deg in enumerate(inner_angles):
        th = math.radians(deg)
        x = 0.30 * math.cos(th)
        y = -1.02 + 0.07 * math.sin(th)
        z = 0.26 + 0.04 * math.sin(th) ** 2
        pts[60 + k] = (x, y, z)

    return [[round(c, 6) for c in p] for p in pts]


# Offsets are (1-based point index, dx, dy) in interocular units, y up.
# Classification only sees the 12 salient points (brows 18/22/23/27, eye
# centers, nose tip 31, corners 49/55, lip centers 52/58, chin 9); offsets on
# other points are cosmetic, for landmark replay.
TEMPLATES = {
    "neutral": [],
    "happiness": [
        (49, -0.070, 0.050),
        (55, 0.070, 0.050),
        (50, -0.035, 0.035),
        (54, 0.035, 0.035),
        (61, -0.050, 0.035),
        (65, 0.050, 0.035),
        (52, 0.000, 0.012),
        (58, 0.000, 0.020),
        (41, 0.000, 0.012),
        (42, 0.000, 0.012),
        (47, 0.000, 0.012),
        (48, 0.000, 0.012),
    ],
    "sadness": [
        (49, 0.012, -0.050),
        (55, -0.012, -0.050),
        (50, 0.006, -0.028),
        (54, -0.006, -0.028),
        (22, 0.012, 0.050),
        (23, -0.012, 0.050),
        (21, 0.000, 0.034),
        (24, 0.000, 0.034),
        (58, 0.000, 0.022),
        (9, 0.000, 0.012),
    ],
    "anger": [
        (22, 0.025, -0.060),
        (23, -0.025, -0.060),
        (21, 0.012, -0.048),
        (24, -0.012, -0.048),
        (19, 0.000, -0.034),
        (20, 0.000, -0.034),
        (25, 0.000, -0.034),
        (26, 0.000, -0.034),
        (18, 0.000, -0.025),
        (27, 0.000, -0.025),
        (52, 0.000, -0.022),
        (58, 0.000, 0.022),
        (49, 0.018, 0.000),
        (55, -0.018, 0.000),
        (38, 0.000, -0.010),
        (39, 0.000, -0.010),
        (44, 0.000, -0.010),
        (45, 0.000, -0.010),
    ],
    "fear": [
        *[(i, 0.000, 0.070) for i in range(18, 28)],
        (38, 0.000, 0.022),
        (39, 0.000, 0.022),
        (44, 0.000, 0.022),
        (45, 0.000, 0.022),
        (41, 0.000, -0.022),
        (42, 0.000, -0.022),
        (47, 0.000, -0.022),
        (48, 0.000, -0.022),
        (52, 0.000, 0.020),
        (58, 0.000, -0.060),
        (49, -0.028, -0.015),
        (55, 0.028, -0.015),
        (9, 0.000, -0.040),
    ],
    "surprise": [
        *[(i, 0.000, 0.050) for i in range(18, 28)],
        (52, 0.000, 0.035),
        (58, 0.000, -0.055),
        (51, 0.000, 0.024),
        (53, 0.000, 0.024),
        (57, 0.000, -0.040),
        (59, 0.000, -0.040),
        (63, 0.000, 0.028),
        (67, 0.000, -0.048),
        (9, 0.000, -0.075),
        (49, 0.028, -0.012),
        (55, -0.028, -0.012),
        (38, 0.000, 0.018),
        (39, 0.000, 0.018),
        (44, 0.000, 0.018),
        (45, 0.000, 0.018),
        (41, 0.000, -0.018),
        (42, 0.000, -0.018),
        (47, 0.000, -0.018),
        (48, 0.000, -0.018),
    ],
    "disgust": [
        (31, 0.000, 0.032),
        (33, 0.000, 0.024),
        (34, 0.000, 0.024),
        (35, 0.000, 0.024),
        (52, 0.000, 0.045),
        (51, 0.000, 0.032),
        (53, 0.000, 0.032),
        (22, 0.006, -0.040),
        (23, -0.006, -0.040),
        (49, -0.015, -0.022),
        (55, 0.015, -0.022),
        (58, 0.000, 0.015),
        (9, 0.000, 0.015),
    ],
    "contempt": [
        (55, 0.068, 0.090),
        (54, 0.030, 0.055),
        (65, 0.048, 0.065),
        (49, 0.016, -0.030),
        (58, 0.020, 0.014),
        (52, 0.014, 0.008),
        (27, 0.000, 0.030),
        (26, 0.000, 0.020),
        (9, 0.012, 0.000),
    ],
}


def main():
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    face = {"model_version": MODEL_VERSION, "points": build_reference_face()}
    (OUT_DIR / "reference_face.json").write_text(json.dumps(face, indent=1) + "\n")

    templates = {
        "template_version": TEMPLATE_VERSION,
        "offsets": {
            label: [[int(i), dx, dy] for i, dx, dy in rows]
            for label, rows in TEMPLATES.items()
        },
    }
    (OUT_DIR / "expression_templates.json").write_text(json.dumps(templates, indent=1) + "\n")
    print(f"wrote {OUT_DIR / 'reference_face.json'}")
    print(f"wrote {OUT_DIR / 'expression_templates.json'}")


if __name__ == "__main__":
    main()
