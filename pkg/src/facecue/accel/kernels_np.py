"""Pure-numpy batch kernels: the fallback backend and the reference semantics.

Every function here has a numba twin in kernels_nb with identical behavior;
tests hold both to the same oracles. Kernels assume validated input (the
single-frame ops in vision/events do the checking).
"""

from __future__ import annotations

import numpy as np
from scipy.signal import lfilter

from ..types import NUM_LABELS

# Salient-point table, mirrored from facecue.vision (kept as plain arrays so the
# numba backend can share them without importing host-level code).
_DIRECT_ROWS = np.array([0, 1, 2, 3, 6, 7, 8, 9, 10, 11], dtype=np.intp)
_DIRECT_IDX = np.array([17, 21, 22, 26, 30, 48, 54, 51, 57, 8], dtype=np.intp)
_LEFT_EYE_ROW = 4
_RIGHT_EYE_ROW = 5
_NUM_SALIENT = 12

PAIR_I = np.array([i for i in range(_NUM_SALIENT) for _ in range(i + 1, _NUM_SALIENT)], dtype=np.intp)
PAIR_J = np.array([j for i in range(_NUM_SALIENT) for j in range(i + 1, _NUM_SALIENT)], dtype=np.intp)
NUM_DISTANCES = PAIR_I.shape[0]


def normalize_batch(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Canonicalize (N, 68, 2) landmark arrays. Returns (canonical, interocular).

    Rows with interocular < 1e-12 are left as zeros; callers detect them via the
    returned interocular distances.
    """
    pts = np.asarray(points, dtype=np.float64)
    centered = pts - pts.mean(axis=1, keepdims=True)
    le = centered[:, 36:42].mean(axis=1)
    re = centered[:, 42:48].mean(axis=1)
    d = re - le
    iod = np.hypot(d[:, 0], d[:, 1])
    safe = np.where(iod < 1e-12, 1.0, iod)
    c = (d[:, 0] / safe)[:, None]
    s = (d[:, 1] / safe)[:, None]
    x = centered[..., 0]
    y = centered[..., 1]
    out = np.empty_like(centered)
    out[..., 0] = (x * c + y * s) / safe[:, None]
    out[..., 1] = (-x * s + y * c) / safe[:, None]
    out[iod < 1e-12] = 0.0
    return out, iod


def features_batch(canon: np.ndarray, baseline_dists: np.ndarray | None) -> np.ndarray:
    """Distance features for (N, 68, 2) canonical landmarks -> (N, 132)."""
    n = canon.shape[0]
    # salient columns as (12, N) planes: pairwise work below stays contiguous
    sx = np.empty((_NUM_SALIENT, n))
    sy = np.empty((_NUM_SALIENT, n))
    for row, idx in zip(_DIRECT_ROWS, _DIRECT_IDX):
        sx[row] = canon[:, idx, 0]
        sy[row] = canon[:, idx, 1]
    sx[_LEFT_EYE_ROW] = canon[:, 36:42, 0].mean(axis=1)
    sy[_LEFT_EYE_ROW] = canon[:, 36:42, 1].mean(axis=1)
    sx[_RIGHT_EYE_ROW] = canon[:, 42:48, 0].mean(axis=1)
    sy[_RIGHT_EYE_ROW] = canon[:, 42:48, 1].mean(axis=1)
    out = np.empty((n, 2 * NUM_DISTANCES))
    for k in range(NUM_DISTANCES):
        i, j = PAIR_I[k], PAIR_J[k]
        np.hypot(sx[i] - sx[j], sy[i] - sy[j], out=out[:, k])
    if baseline_dists is None:
        out[:, NUM_DISTANCES:] = 0.0
    else:
        out[:, NUM_DISTANCES:] = out[:, :NUM_DISTANCES] - baseline_dists
    return out


def ema_batch(scores: np.ndarray, alpha: float, carry: np.ndarray | None) -> tuple[np.ndarray, np.ndarray]:
    """Per-label EMA over a (N, 8) score block.

    carry is the last smoothed row of the previous block, or None at stream
    start (then the first output row equals the first input row exactly).
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.shape[0] == 0:
        return scores.copy(), carry.copy() if carry is not None else None
    b = [alpha]
    a = [1.0, -(1.0 - alpha)]
    out = np.empty_like(scores)
    if carry is None:
        out[0] = scores[0]
        if scores.shape[0] > 1:
            zi = ((1.0 - alpha) * scores[0])[None, :]
            out[1:], _ = lfilter(b, a, scores[1:], axis=0, zi=zi)
    else:
        zi = ((1.0 - alpha) * np.asarray(carry, dtype=np.float64))[None, :]
        out[:], _ = lfilter(b, a, scores, axis=0, zi=zi)
    return out, out[-1].copy()


def segment_batch(
    ts: np.ndarray,
    smoothed: np.ndarray,
    enter: float,
    exit_: float,
    min_duration_us: int,
    active: np.ndarray,
    start: np.ndarray,
    end: np.ndarray,
    peak: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Hysteresis segmentation over one block; automaton state arrays are
    carried (and mutated) across blocks.

    Entry: score >= enter and the label is the frame argmax. Exit: score <=
    exit_. Episodes shorter than min_duration_us are discarded. Emission order
    is backend-specific; callers sort the final collection by (start, label).
    Vectorized by walking threshold crossings instead of frames.
    """
    n = ts.shape[0]
    ev_label, ev_start, ev_end, ev_peak = [], [], [], []
    if n == 0:
        return (np.array(ev_label, dtype=np.int64), np.array(ev_start, dtype=np.int64),
                np.array(ev_end, dtype=np.int64), np.array(ev_peak))
    argmax = smoothed.argmax(axis=1)
    for lbl in range(1, NUM_LABELS):
        col = smoothed[:, lbl]
        exits = np.flatnonzero(col <= exit_)
        enters = np.flatnonzero((col >= enter) & (argmax == lbl))
        pos = 0
        if active[lbl]:
            if exits.size == 0:
                peak[lbl] = max(peak[lbl], float(col.max()))
                end[lbl] = int(ts[-1])
                continue
            term = int(exits[0])
            if term > 0:
                peak[lbl] = max(peak[lbl], float(col[:term].max()))
                end[lbl] = int(ts[term - 1])
            if end[lbl] - start[lbl] >= min_duration_us:
                ev_label.append(lbl)
                ev_start.append(int(start[lbl]))
                ev_end.append(int(end[lbl]))
                ev_peak.append(float(peak[lbl]))
            active[lbl] = False
            pos = term + 1
        while pos < n:
            k = int(np.searchsorted(enters, pos))
            if k == enters.size:
                break
            s_i = int(enters[k])
            t = int(np.searchsorted(exits, s_i))
            if t == exits.size:
                active[lbl] = True
                start[lbl] = int(ts[s_i])
                end[lbl] = int(ts[-1])
                peak[lbl] = float(col[s_i:].max())
                break
            t_i = int(exits[t])
            e_ts = int(ts[t_i - 1])
            if e_ts - ts[s_i] >= min_duration_us:
                ev_label.append(lbl)
                ev_start.append(int(ts[s_i]))
                ev_end.append(e_ts)
                ev_peak.append(float(col[s_i:t_i].max()))
            pos = t_i + 1
    return (np.array(ev_label, dtype=np.int64), np.array(ev_start, dtype=np.int64),
            np.array(ev_end, dtype=np.int64), np.array(ev_peak, dtype=np.float64))
