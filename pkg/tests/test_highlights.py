import numpy as np
import pytest
from hypothesis import given, strategies as st

from facecue.highlights import detect_highlights
from facecue.types import ExpressionLabel, ExpressiveEvent

S = 1_000_000  # one second in microseconds


def ev(start_s, end_s, label=ExpressionLabel.HAPPINESS, peak=0.9):
    return ExpressiveEvent(label=label, start_us=int(start_s * S), end_us=int(end_s * S), peak_score=peak)


def test_single_event_padded():
    clips = detect_highlights([ev(10, 12)], pad_us=3 * S, session_end_us=100 * S)
    assert len(clips) == 1
    assert (clips[0].start_us, clips[0].end_us) == (7 * S, 15 * S)
    assert clips[0].event_refs == (0,)


def test_touching_expansions_merge():
    clips = detect_highlights([ev(10, 12), ev(14, 16)], pad_us=3 * S, session_end_us=100 * S)
    assert len(clips) == 1
    assert (clips[0].start_us, clips[0].end_us) == (7 * S, 19 * S)
    assert clips[0].event_refs == (0, 1)


def test_clamped_to_session():
    clips = detect_highlights([ev(1, 2)], pad_us=3 * S, session_end_us=100 * S)
    assert (clips[0].start_us, clips[0].end_us) == (0, 5 * S)
    clips = detect_highlights([ev(98, 99)], pad_us=3 * S, session_end_us=100 * S)
    assert (clips[0].start_us, clips[0].end_us) == (95 * S, 100 * S)


def test_dominant_label_is_peak_event():
    events = [
        ev(10, 12, ExpressionLabel.HAPPINESS, peak=0.7),
        ev(13, 15, ExpressionLabel.ANGER, peak=0.95),
    ]
    clips = detect_highlights(events, pad_us=2 * S, session_end_us=100 * S)
    assert len(clips) == 1
    assert clips[0].dominant_label is ExpressionLabel.ANGER


def test_empty_input():
    assert detect_highlights([], pad_us=S, session_end_us=100 * S) == []


def test_unsorted_input_rejected():
    with pytest.raises(ValueError):
        detect_highlights([ev(10, 12), ev(5, 6)], pad_us=0, session_end_us=100 * S)


def test_pad_zero_non_adjacent_events_identity():
    events = [ev(1, 2), ev(5, 6), ev(8, 9)]
    clips = detect_highlights(events, pad_us=0, session_end_us=10 * S)
    assert [(c.start_us, c.end_us) for c in clips] == [(e.start_us, e.end_us) for e in events]


event_lists = st.lists(
    st.tuples(
        st.integers(min_value=0, max_value=90 * S),
        st.integers(min_value=1, max_value=5 * S),
        st.sampled_from([l for l in ExpressionLabel if l is not ExpressionLabel.NEUTRAL]),
        st.floats(min_value=0.5, max_value=1.0),
    ),
    min_size=0,
    max_size=12,
)


@given(event_lists, st.integers(min_value=0, max_value=4 * S))
def test_properties_disjoint_sorted_covering(raw, pad):
    events = sorted(
        (ExpressiveEvent(label=l, start_us=s, end_us=s + d, peak_score=p) for s, d, l, p in raw),
        key=lambda e: e.start_us,
    )
    session_end = 100 * S
    clips = detect_highlights(events, pad_us=pad, session_end_us=session_end)
    # disjoint and sorted
    for a, b in zip(clips, clips[1:]):
        assert a.end_us < b.start_us
    # every event covered by exactly one clip
    covered = [i for c in clips for i in c.event_refs]
    assert sorted(covered) == list(range(len(events)))
    for c in clips:
        assert 0 <= c.start_us < c.end_us <= session_end
        for i in c.event_refs:
            assert c.start_us <= max(0, events[i].start_us - pad)
            assert c.end_us >= min(session_end, events[i].end_us + pad)
