"""Wire protocol tests: frame codec, incremental decoding with resync, and the
full link session loop over the loopback transport."""

import numpy as np
import pytest

from facecue import linkproto
from facecue.journal import records_equal
from facecue.linkproto import (
    Decoder,
    FRAME_OVERHEAD,
    FakeClock,
    HandshakeError,
    LoopbackTransport,
    MessageType,
    PayloadTooLargeError,
    ProtocolMessage,
    decode_bytes,
    encode,
    run_link_session,
    run_scripted_client,
)
from facecue.pipeline import RealtimePipeline
from facecue.synth import Scenario, ScriptedExpression, generate
from facecue.types import ExpressionLabel, SessionMeta

import io

S = 1_000_000

META = SessionMeta(session_id="link1", subject="synthetic", started_at_us=0, frame_rate_hz=30.0)


def msg(msg_type=MessageType.HEARTBEAT, seq=0, ts=0, payload=b""):
    return ProtocolMessage(msg_type=msg_type, seq=seq, timestamp_us=ts, payload=payload)


def random_message(rng):
    return ProtocolMessage(
        msg_type=MessageType(int(rng.integers(1, 9))),
        seq=int(rng.integers(0, 2**32)),
        timestamp_us=int(rng.integers(0, 2**63)),
        payload=bytes(rng.integers(0, 256, size=int(rng.integers(0, 200)), dtype=np.uint8)),
    )


def test_heartbeat_frame_is_24_bytes():
    assert len(encode(msg())) == 24 == FRAME_OVERHEAD


def test_encode_is_deterministic():
    m = msg(MessageType.CUE, seq=7, ts=123, payload=b"abc")
    assert encode(m) == encode(m)


def test_round_trip_random_messages():
    rng = np.random.default_rng(0)
    messages = [random_message(rng) for _ in range(2000)]
    blob = b"".join(encode(m) for m in messages)
    decoded, errors = decode_bytes(blob)
    assert errors == []
    assert decoded == messages


def test_payload_too_large_rejected():
    with pytest.raises(PayloadTooLargeError):
        encode(msg(payload=b"\0" * ((1 << 24) + 1)))


def test_three_valid_frames():
    blob = b"".join(encode(msg(seq=i, ts=i * 10)) for i in range(3))
    decoded, errors = decode_bytes(blob)
    assert len(decoded) == 3 and not errors


def test_empty_input():
    decoded, errors = decode_bytes(b"")
    assert decoded == [] and errors == []


def test_flipped_payload_byte_detected_and_recovered():
    rng = np.random.default_rng(1)
    messages = [random_message(rng) for _ in range(10)]
    frames = [encode(m) for m in messages]
    corrupt_idx = 4
    target = bytearray(frames[corrupt_idx])
    target[linkproto.HEADER_SIZE] ^= 0xFF  # first payload byte
    frames[corrupt_idx] = bytes(target)
    decoded, errors = decode_bytes(b"".join(frames))
    assert len(errors) >= 1
    assert errors[0].kind == "bad_crc"
    assert errors[0].byte_offset == sum(len(f) for f in frames[:corrupt_idx])
    # every uncorrupted message survives
    survived = [m for m in messages if m in decoded]
    assert len(survived) >= 9


def test_single_byte_flips_on_frame_set_all_detected():
    rng = np.random.default_rng(2)
    messages = [random_message(rng) for _ in range(4)]
    blob = b"".join(encode(m) for m in messages)
    for pos in range(len(blob)):
        corrupted = bytearray(blob)
        corrupted[pos] ^= 0x10
        decoded, errors = decode_bytes(bytes(corrupted))
        changed = decoded != messages
        assert errors or not changed, f"silent corruption at byte {pos}"


def test_truncation_distinguished():
    blob = encode(msg(MessageType.CUE, seq=1, payload=b"xyz"))
    decoded, errors = decode_bytes(blob[:-2])
    assert decoded == []
    assert len(errors) == 1 and errors[0].kind == "truncated"


def test_unknown_msg_type_skipped():
    raw = bytearray(encode(msg(seq=5)))
    raw[3] = 0x7F  # msg_type byte
    import struct, zlib

    body = bytes(raw[:-4])
    raw[-4:] = struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)
    blob = bytes(raw) + encode(msg(seq=6))
    decoded, errors = decode_bytes(blob)
    assert [e.kind for e in errors] == ["unknown_msg_type"]
    assert len(decoded) == 1 and decoded[0].seq == 6


def test_unsupported_version_flagged():
    raw = bytearray(encode(msg(seq=5)))
    raw[2] = 9  # version byte
    import struct, zlib

    body = bytes(raw[:-4])
    raw[-4:] = struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)
    decoded, errors = decode_bytes(bytes(raw))
    assert decoded == []
    assert [e.kind for e in errors] == ["unsupported_version"]


def test_garbage_makes_progress_and_resyncs():
    rng = np.random.default_rng(3)
    garbage = bytes(rng.integers(0, 256, size=5000, dtype=np.uint8))
    real = encode(msg(MessageType.CUE, seq=9, payload=b"hello"))
    decoded, errors = decode_bytes(garbage + real + garbage[:100])
    assert any(m.seq == 9 for m in decoded)
    assert errors  # garbage reported, never crashed


def test_incremental_feed_matches_one_shot():
    rng = np.random.default_rng(4)
    messages = [random_message(rng) for _ in range(50)]
    blob = b"".join(encode(m) for m in messages)
    one_shot, _ = decode_bytes(blob)
    dec = Decoder()
    collected = []
    pos = 0
    while pos < len(blob):
        step = int(rng.integers(1, 37))
        got, errs = dec.feed(blob[pos : pos + step])
        assert not errs
        collected.extend(got)
        pos += step
    assert dec.finish() == []
    assert collected == one_shot


# --- link session ---------------------------------------------------------------

def scripted_frames(templates, duration_s=10, seed=5):
    sc = Scenario(
        duration_us=duration_s * S,
        noise_sigma=0.002,
        seed=seed,
        script=[ScriptedExpression(ExpressionLabel.HAPPINESS, 2 * S, 6 * S, 1.0)],
    )
    return generate(sc, templates).frames


def make_pipeline(trained_model, neutral_baseline):
    return RealtimePipeline(trained_model, neutral_baseline)


def test_link_session_end_to_end(templates, trained_model, neutral_baseline):
    frames = scripted_frames(templates)
    pair = LoopbackTransport(FakeClock())
    sent = run_scripted_client(pair.endpoint_a(), META, frames)
    result = run_link_session(
        pair.endpoint_b(), make_pipeline(trained_model, neutral_baseline), io.BytesIO(), clock=pair.clock
    )
    journal = result.journal
    assert sent == len(frames)
    assert len(journal.frame_metas) == len(frames)
    assert len(journal.score_records) == sum(1 for f in frames if f.face_present)
    assert len(journal.events) == 1
    assert journal.events[0].label is ExpressionLabel.HAPPINESS
    assert not result.timed_out

    # CUE messages facing the client are only the issued ones, seq monotone
    client = pair.endpoint_a()
    raw = b""
    while True:
        got = client.read(1 << 20, 0.0)
        if not got:
            break
        raw += got
    messages, errors = decode_bytes(raw)
    assert not errors
    cue_msgs = [m for m in messages if m.msg_type == MessageType.CUE]
    issued = [c for c in journal.cues if not c.suppressed]
    assert len(cue_msgs) == len(issued) == 1
    seqs = [m.seq for m in messages]
    assert seqs == sorted(seqs)


def test_link_matches_offline_replay(templates, trained_model, neutral_baseline):
    from facecue.pipeline import replay_frames

    frames = scripted_frames(templates, seed=8)
    pair = LoopbackTransport(FakeClock())
    run_scripted_client(pair.endpoint_a(), META, frames)
    result = run_link_session(
        pair.endpoint_b(), make_pipeline(trained_model, neutral_baseline), io.BytesIO(), clock=pair.clock
    )
    offline = replay_frames(frames, trained_model, neutral_baseline)
    assert all(records_equal(a, b) for a, b in zip(result.journal.events, offline.events))
    assert all(records_equal(a, b) for a, b in zip(result.journal.cues, offline.cues))
    assert all(records_equal(a, b) for a, b in zip(result.journal.score_records, offline.scores))


def test_duplicate_seq_dropped_with_error(templates, trained_model, neutral_baseline):
    frames = scripted_frames(templates, seed=6)[:3]
    pair = LoopbackTransport(FakeClock())
    a = pair.endpoint_a()
    a.write(encode(ProtocolMessage(MessageType.HELLO, seq=0, timestamp_us=0, payload=linkproto.hello_payload(META))))
    a.write(encode(linkproto.frame_message(frames[0], seq=1)))
    a.write(encode(linkproto.frame_message(frames[1], seq=1)))  # duplicate seq
    a.write(encode(linkproto.frame_message(frames[2], seq=2)))
    a.write(encode(ProtocolMessage(MessageType.SESSION_END, seq=3, timestamp_us=frames[2].timestamp_us)))
    result = run_link_session(
        pair.endpoint_b(), make_pipeline(trained_model, neutral_baseline), io.BytesIO(), clock=pair.clock
    )
    assert result.errors_sent == ["seq_regression"]
    assert len(result.journal.frame_metas) == 2  # duplicate dropped, session continued
    raw = b""
    while True:
        got = a.read(1 << 20, 0.0)
        if not got:
            break
        raw += got
    messages, _ = decode_bytes(raw)
    assert any(m.msg_type == MessageType.ERROR for m in messages)


def test_heartbeat_timeout_finalizes(templates, trained_model, neutral_baseline):
    frames = scripted_frames(templates, duration_s=8, seed=7)
    pair = LoopbackTransport(FakeClock())
    sent = run_scripted_client(pair.endpoint_a(), META, frames, drop_after_s=3.0)
    result = run_link_session(
        pair.endpoint_b(),
        make_pipeline(trained_model, neutral_baseline),
        io.BytesIO(),
        clock=pair.clock,
        heartbeat_timeout_s=5.0,
    )
    assert result.timed_out
    assert sent < len(frames)
    assert len(result.journal.frame_metas) == sent
    last = result.journal.frame_metas[-1].timestamp_us
    assert last < 3 * S
    assert pair.clock.now() >= 5.0  # the server actually waited out the timeout


def test_version_mismatch_rejected(templates, trained_model, neutral_baseline):
    pair = LoopbackTransport(FakeClock())
    a = pair.endpoint_a()
    bad_hello = linkproto.hello_payload(META).replace(b'"protocol_version":1', b'"protocol_version":2')
    a.write(encode(ProtocolMessage(MessageType.HELLO, seq=0, timestamp_us=0, payload=bad_hello)))
    with pytest.raises(HandshakeError):
        run_link_session(
            pair.endpoint_b(), make_pipeline(trained_model, neutral_baseline), io.BytesIO(), clock=pair.clock
        )
    raw = a.read(1 << 20, 0.0)
    messages, _ = decode_bytes(raw)
    assert messages and messages[0].msg_type == MessageType.ERROR


def test_no_hello_times_out(trained_model, neutral_baseline):
    pair = LoopbackTransport(FakeClock())
    with pytest.raises(HandshakeError):
        run_link_session(
            pair.endpoint_b(), make_pipeline(trained_model, neutral_baseline), io.BytesIO(), clock=pair.clock
        )
