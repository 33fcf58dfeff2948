"""Auto-curation: turn expressive events into padded, merged highlight clips."""

from __future__ import annotations

from .types import ExpressiveEvent, HighlightClip


def detect_highlights(
    events: list[ExpressiveEvent], pad_us: int, session_end_us: int
) -> list[HighlightClip]:
    """Expand each event by pad_us on both sides, clamp to [0, session_end_us],
    and merge overlapping or touching expansions into single clips.

    Events must be sorted by start. The clip's dominant label is the label of
    its highest-peak event (ties: earliest event wins).
    """
    if pad_us < 0:
        raise ValueError(f"pad_us must be non-negative, got {pad_us}")
    if not events:
        return []
    for prev, cur in zip(events, events[1:]):
        if cur.start_us < prev.start_us:
            raise ValueError("events must be sorted by start")

    clips: list[HighlightClip] = []
    cur_start = cur_end = None
    cur_refs: list[int] = []

    def flush():
        best = max(cur_refs, key=lambda i: (events[i].peak_score, -i))
        clips.append(
            HighlightClip(
                start_us=cur_start,
                end_us=cur_end,
                event_refs=tuple(cur_refs),
                dominant_label=events[best].label,
            )
        )

    for i, ev in enumerate(events):
        start = max(0, ev.start_us - pad_us)
        end = min(session_end_us, ev.end_us + pad_us)
        if cur_start is None:
            cur_start, cur_end, cur_refs = start, end, [i]
        elif start <= cur_end:  # overlapping or touching
            cur_end = max(cur_end, end)
            cur_refs.append(i)
        else:
            flush()
            cur_start, cur_end, cur_refs = start, end, [i]
    flush()
    return clips
