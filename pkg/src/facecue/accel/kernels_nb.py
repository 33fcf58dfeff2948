"""Numba-compiled batch kernels: same contracts as kernels_np, compiled loops.

The njit cores are plain per-frame loops; thin wrappers keep the public
signatures identical to the numpy backend so the two are interchangeable.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from .kernels_np import NUM_DISTANCES, PAIR_I, PAIR_J

_PAIR_I64 = PAIR_I.astype(np.int64)
_PAIR_J64 = PAIR_J.astype(np.int64)
# -1 / -2 mark the derived left / right eye centers
_SALIENT = np.array([17, 21, 22, 26, -1, -2, 30, 48, 54, 51, 57, 8], dtype=np.int64)


@njit(cache=True)
def _normalize_core(pts, out, iod):
    n = pts.shape[0]
    for i in range(n):
        cx = 0.0
        cy = 0.0
        for j in range(68):
            cx += pts[i, j, 0]
            cy += pts[i, j, 1]
        cx /= 68.0
        cy /= 68.0
        lex = 0.0
        ley = 0.0
        rex = 0.0
        rey = 0.0
        for j in range(36, 42):
            lex += pts[i, j, 0] - cx
            ley += pts[i, j, 1] - cy
        for j in range(42, 48):
            rex += pts[i, j, 0] - cx
            rey += pts[i, j, 1] - cy
        dx = rex / 6.0 - lex / 6.0
        dy = rey / 6.0 - ley / 6.0
        d = math.hypot(dx, dy)
        iod[i] = d
        if d < 1e-12:
            for j in range(68):
                out[i, j, 0] = 0.0
                out[i, j, 1] = 0.0
            continue
        c = dx / d
        s = dy / d
        for j in range(68):
            x = pts[i, j, 0] - cx
            y = pts[i, j, 1] - cy
            out[i, j, 0] = (x * c + y * s) / d
            out[i, j, 1] = (-x * s + y * c) / d


def normalize_batch(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    pts = np.ascontiguousarray(points, dtype=np.float64)
    out = np.empty_like(pts)
    iod = np.empty(pts.shape[0])
    _normalize_core(pts, out, iod)
    return out, iod


@njit(cache=True)
def _features_core(canon, salient, pair_i, pair_j, baseline, has_baseline, out):
    n = canon.shape[0]
    n_pairs = pair_i.shape[0]
    sal = np.empty((salient.shape[0], 2))
    for i in range(n):
        lex = 0.0
        ley = 0.0
        rex = 0.0
        rey = 0.0
        for j in range(36, 42):
            lex += canon[i, j, 0]
            ley += canon[i, j, 1]
        for j in range(42, 48):
            rex += canon[i, j, 0]
            rey += canon[i, j, 1]
        for r in range(salient.shape[0]):
            idx = salient[r]
            if idx == -1:
                sal[r, 0] = lex / 6.0
                sal[r, 1] = ley / 6.0
            elif idx == -2:
                sal[r, 0] = rex / 6.0
                sal[r, 1] = rey / 6.0
            else:
                sal[r, 0] = canon[i, idx, 0]
                sal[r, 1] = canon[i, idx, 1]
        for k in range(n_pairs):
            a = pair_i[k]
            b = pair_j[k]
            dist = math.hypot(sal[a, 0] - sal[b, 0], sal[a, 1] - sal[b, 1])
            out[i, k] = dist
            if has_baseline:
                out[i, n_pairs + k] = dist - baseline[k]
            else:
                out[i, n_pairs + k] = 0.0


def features_batch(canon: np.ndarray, baseline_dists: np.ndarray | None) -> np.ndarray:
    canon = np.ascontiguousarray(canon, dtype=np.float64)
    out = np.empty((canon.shape[0], 2 * NUM_DISTANCES))
    if baseline_dists is None:
        _features_core(canon, _SALIENT, _PAIR_I64, _PAIR_J64, np.empty(0), False, out)
    else:
        baseline = np.ascontiguousarray(baseline_dists, dtype=np.float64)
        _features_core(canon, _SALIENT, _PAIR_I64, _PAIR_J64, baseline, True, out)
    return out


@njit(cache=True)
def _ema_core(scores, alpha, carry, out, start_row):
    om = 1.0 - alpha
    n, m = scores.shape
    for j in range(m):
        prev = carry[j]
        for i in range(start_row, n):
            prev = alpha * scores[i, j] + om * prev
            out[i, j] = prev


def ema_batch(scores: np.ndarray, alpha: float, carry: np.ndarray | None) -> tuple[np.ndarray, np.ndarray]:
    scores = np.ascontiguousarray(scores, dtype=np.float64)
    if scores.shape[0] == 0:
        return scores.copy(), carry.copy() if carry is not None else None
    out = np.empty_like(scores)
    if carry is None:
        out[0] = scores[0]  # stream start: s_0 = p_0 exactly
        _ema_core(scores, alpha, scores[0].copy(), out, 1)
    else:
        _ema_core(scores, alpha, np.ascontiguousarray(carry, dtype=np.float64), out, 0)
    return out, out[-1].copy()


@njit(cache=True)
def _segment_core(ts, sm, enter, exit_, min_dur, active, start, end, peak,
                  out_label, out_start, out_end, out_peak):
    n = ts.shape[0]
    n_labels = sm.shape[1]
    count = 0
    cap = out_label.shape[0]
    for i in range(n):
        best = 0
        best_v = sm[i, 0]
        for lbl in range(1, n_labels):
            if sm[i, lbl] > best_v:
                best_v = sm[i, lbl]
                best = lbl
        for lbl in range(1, n_labels):
            v = sm[i, lbl]
            if active[lbl]:
                if v <= exit_:
                    if end[lbl] - start[lbl] >= min_dur:
                        if count < cap:
                            out_label[count] = lbl
                            out_start[count] = start[lbl]
                            out_end[count] = end[lbl]
                            out_peak[count] = peak[lbl]
                        count += 1
                    active[lbl] = False
                else:
                    end[lbl] = ts[i]
                    if v > peak[lbl]:
                        peak[lbl] = v
            elif v >= enter and lbl == best:
                active[lbl] = True
                start[lbl] = ts[i]
                end[lbl] = ts[i]
                peak[lbl] = v
    return count


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
    ts = np.ascontiguousarray(ts, dtype=np.int64)
    sm = np.ascontiguousarray(smoothed, dtype=np.float64)
    cap = 256
    while True:
        snap = (active.copy(), start.copy(), end.copy(), peak.copy())
        out_label = np.empty(cap, dtype=np.int64)
        out_start = np.empty(cap, dtype=np.int64)
        out_end = np.empty(cap, dtype=np.int64)
        out_peak = np.empty(cap, dtype=np.float64)
        n = _segment_core(ts, sm, enter, exit_, min_duration_us,
                          active, start, end, peak,
                          out_label, out_start, out_end, out_peak)
        if n <= cap:
            return out_label[:n], out_start[:n], out_end[:n], out_peak[:n]
        # overflow: restore state and redo with enough room
        active[:], start[:], end[:], peak[:] = snap
        cap = n
