"""Framed binary link protocol: the stand-in for the glasses-to-phone channel.

Frame layout, integers little-endian:

    magic 0xA5 0x47 | version u8 | msg_type u8 | seq u32 | timestamp_us u64 |
    payload_len u32 | payload | crc32 u32

The CRC (CRC-32/ISO-HDLC) covers every preceding frame byte including the
magic. The transport is assumed ordered and reliable (in-memory pair, local
TCP); there is no retransmission. Landmarks flow up as canonical-JSON payloads
shared with the journal codec; cues flow down the same way.
"""

from __future__ import annotations

import json
import socket
import struct
import time
import zlib
from collections import deque
from dataclasses import dataclass, field
from enum import IntEnum
from typing import BinaryIO, Iterable

from .journal import (
    JournalWriter,
    canonical_json,
    cue_from_payload,
    cue_payload,
    landmark_frame_from_payload,
    landmark_frame_payload,
)
from .pipeline import RealtimePipeline
from .types import Cue, FrameMeta, LandmarkFrame, SessionJournal, SessionMeta

PROTOCOL_VERSION = 1
MAGIC = b"\xa5\x47"
MAX_PAYLOAD = 1 << 24

_HEADER = struct.Struct("<2sBBIQI")  # magic, version, msg_type, seq, timestamp_us, payload_len
_CRC = struct.Struct("<I")
HEADER_SIZE = _HEADER.size  # 20
FRAME_OVERHEAD = HEADER_SIZE + _CRC.size  # 24


class MessageType(IntEnum):
    HELLO = 0x01
    HELLO_ACK = 0x02
    LANDMARK_FRAME = 0x03
    FRAME_BLOB = 0x04
    CUE = 0x05
    HEARTBEAT = 0x06
    SESSION_END = 0x07
    ERROR = 0x08


class LinkError(Exception):
    pass


class PayloadTooLargeError(LinkError):
    pass


class HandshakeError(LinkError):
    pass


@dataclass(frozen=True)
class ProtocolMessage:
    msg_type: MessageType
    seq: int
    timestamp_us: int
    payload: bytes = b""
    version: int = PROTOCOL_VERSION


@dataclass(frozen=True)
class DecodeError:
    kind: str  # bad_magic | bad_crc | unknown_msg_type | unsupported_version | oversize | truncated
    byte_offset: int
    detail: str = ""


def encode(message: ProtocolMessage) -> bytes:
    if len(message.payload) > MAX_PAYLOAD:
        raise PayloadTooLargeError(f"payload of {len(message.payload)} bytes exceeds {MAX_PAYLOAD}")
    head = _HEADER.pack(
        MAGIC, message.version, int(message.msg_type), message.seq,
        message.timestamp_us, len(message.payload),
    )
    body = head + message.payload
    return body + _CRC.pack(zlib.crc32(body) & 0xFFFFFFFF)


class Decoder:
    """Incremental frame parser. Feed arbitrary byte chunks; collect messages
    and structured errors. Resynchronizes by scanning for the next magic byte
    after any framing or CRC error, always consuming at least one byte."""

    def __init__(self):
        self._buf = bytearray()
        self._base = 0  # stream offset of _buf[0]

    def feed(self, data: bytes) -> tuple[list[ProtocolMessage], list[DecodeError]]:
        self._buf.extend(data)
        messages: list[ProtocolMessage] = []
        errors: list[DecodeError] = []
        while True:
            made_progress = self._step(messages, errors)
            if not made_progress:
                return messages, errors

    def finish(self) -> list[DecodeError]:
        """Flag a partial trailing frame as truncation."""
        if self._buf:
            err = [DecodeError("truncated", self._base, f"{len(self._buf)} trailing bytes")]
            self._consume(len(self._buf))
            return err
        return []

    def _consume(self, n: int) -> None:
        del self._buf[:n]
        self._base += n

    def _resync(self, errors: list[DecodeError], kind: str, detail: str = "") -> None:
        errors.append(DecodeError(kind, self._base, detail))
        nxt = self._buf.find(MAGIC[0:1], 1)
        self._consume(len(self._buf) if nxt < 0 else nxt)

    def _step(self, messages: list[ProtocolMessage], errors: list[DecodeError]) -> bool:
        buf = self._buf
        if len(buf) < HEADER_SIZE:
            # a buffered prefix that already cannot be a frame start is garbage
            if buf and not MAGIC.startswith(bytes(buf[:2])):
                self._resync(errors, "bad_magic")
                return True
            return False
        magic, version, msg_type, seq, ts, length = _HEADER.unpack_from(buf, 0)
        if magic != MAGIC:
            self._resync(errors, "bad_magic")
            return True
        if length > MAX_PAYLOAD:
            self._resync(errors, "oversize", f"declared payload {length}")
            return True
        total = HEADER_SIZE + length + _CRC.size
        if len(buf) < total:
            return False
        body = bytes(buf[: HEADER_SIZE + length])
        stored = _CRC.unpack_from(buf, HEADER_SIZE + length)[0]
        if zlib.crc32(body) & 0xFFFFFFFF != stored:
            self._resync(errors, "bad_crc")
            return True
        if version != PROTOCOL_VERSION:
            errors.append(DecodeError("unsupported_version", self._base, f"version {version}"))
            self._consume(total)
            return True
        try:
            mt = MessageType(msg_type)
        except ValueError:
            errors.append(DecodeError("unknown_msg_type", self._base, f"msg_type {msg_type:#x}"))
            self._consume(total)
            return True
        messages.append(
            ProtocolMessage(msg_type=mt, seq=seq, timestamp_us=ts, payload=body[HEADER_SIZE:], version=version)
        )
        self._consume(total)
        return True


def decode_bytes(data: bytes) -> tuple[list[ProtocolMessage], list[DecodeError]]:
    """One-shot decode of a complete byte stream."""
    dec = Decoder()
    messages, errors = dec.feed(data)
    errors.extend(dec.finish())
    return messages, errors


# --- payload builders ---------------------------------------------------------

def hello_payload(meta: SessionMeta) -> bytes:
    return canonical_json(
        {
            "protocol_version": PROTOCOL_VERSION,
            "session": {
                "session_id": meta.session_id,
                "subject": meta.subject,
                "started_at_us": meta.started_at_us,
                "frame_rate_hz": meta.frame_rate_hz,
            },
        }
    )


def meta_from_hello(payload: bytes) -> tuple[int, SessionMeta]:
    doc = json.loads(payload.decode("utf-8"))
    s = doc["session"]
    return int(doc["protocol_version"]), SessionMeta(
        session_id=s["session_id"],
        subject=s["subject"],
        started_at_us=int(s["started_at_us"]),
        frame_rate_hz=float(s["frame_rate_hz"]),
    )


def frame_message(frame: LandmarkFrame, seq: int) -> ProtocolMessage:
    return ProtocolMessage(
        msg_type=MessageType.LANDMARK_FRAME,
        seq=seq,
        timestamp_us=frame.timestamp_us,
        payload=canonical_json(landmark_frame_payload(frame)),
    )


def cue_message(cue: Cue, seq: int) -> ProtocolMessage:
    return ProtocolMessage(
        msg_type=MessageType.CUE,
        seq=seq,
        timestamp_us=cue.issued_at_us,
        payload=canonical_json(cue_payload(cue)),
    )


def error_message(code: str, detail: str, seq: int, timestamp_us: int = 0) -> ProtocolMessage:
    return ProtocolMessage(
        msg_type=MessageType.ERROR,
        seq=seq,
        timestamp_us=timestamp_us,
        payload=canonical_json({"code": code, "detail": detail}),
    )


# --- transports ---------------------------------------------------------------

class RealClock:
    def now(self) -> float:
        return time.monotonic()


class FakeClock:
    """Deterministic clock for loopback tests; read timeouts advance it."""

    def __init__(self, start: float = 0.0):
        self._t = start

    def now(self) -> float:
        return self._t

    def advance(self, dt: float) -> None:
        self._t += dt


class LoopbackTransport:
    """In-memory, single-threaded transport pair sharing a FakeClock.

    Reading from an empty buffer advances the shared clock by the timeout and
    returns nothing, which is what lets heartbeat-timeout paths run without
    real waiting.
    """

    def __init__(self, clock: FakeClock | None = None):
        self.clock = clock or FakeClock()
        self._a_to_b: deque[bytes] = deque()
        self._b_to_a: deque[bytes] = deque()
        self._closed = False

    def endpoint_a(self) -> "LoopbackEndpoint":
        return LoopbackEndpoint(self, self._b_to_a, self._a_to_b)

    def endpoint_b(self) -> "LoopbackEndpoint":
        return LoopbackEndpoint(self, self._a_to_b, self._b_to_a)


class LoopbackEndpoint:
    def __init__(self, pair: LoopbackTransport, rx: deque, tx: deque):
        self._pair = pair
        self._rx = rx
        self._tx = tx

    def read(self, max_bytes: int, timeout_s: float) -> bytes:
        if not self._rx:
            self._pair.clock.advance(timeout_s)
            return b""
        chunk = self._rx.popleft()
        if len(chunk) > max_bytes:
            self._rx.appendleft(chunk[max_bytes:])
            chunk = chunk[:max_bytes]
        return chunk

    def write(self, data: bytes) -> None:
        if data:
            self._tx.append(bytes(data))

    def close(self) -> None:
        pass


class TcpTransport:
    """Blocking-socket transport for the local demo binding."""

    def __init__(self, sock: socket.socket):
        self._sock = sock

    def read(self, max_bytes: int, timeout_s: float) -> bytes:
        self._sock.settimeout(timeout_s)
        try:
            return self._sock.recv(max_bytes)
        except socket.timeout:
            return b""
        except OSError:
            return b""

    def write(self, data: bytes) -> None:
        self._sock.sendall(data)

    def close(self) -> None:
        try:
            self._sock.close()
        except OSError:
            pass


# --- link session --------------------------------------------------------------

READ_CHUNK = 1 << 16
POLL_TIMEOUT_S = 0.25


@dataclass
class LinkSessionResult:
    journal: SessionJournal
    latencies_s: list[float] = field(default_factory=list)  # per-frame landmark-in to cue-decision
    errors_sent: list[str] = field(default_factory=list)
    decode_errors: list[DecodeError] = field(default_factory=list)
    timed_out: bool = False

    def latency_p95_ms(self) -> float | None:
        if not self.latencies_s:
            return None
        ordered = sorted(self.latencies_s)
        idx = min(len(ordered) - 1, max(0, int(round(0.95 * (len(ordered) - 1)))))
        return ordered[idx] * 1e3


def run_link_session(
    transport,
    pipeline: RealtimePipeline,
    journal_target: str | BinaryIO,
    clock=None,
    heartbeat_timeout_s: float = 5.0,
    blob_dir=None,
) -> LinkSessionResult:
    """Serve one device session: handshake, consume landmark frames in seq order,
    emit CUE messages for issued cues, journal everything.

    The link is declared dead after heartbeat_timeout_s of silence, which
    finalizes the journal at the last frame seen. Duplicate or regressed
    sequence numbers are answered with an ERROR message and dropped.
    """
    clock = clock or RealClock()
    decoder = Decoder()
    result_errors: list[str] = []
    decode_errors: list[DecodeError] = []
    out_seq = 0

    def send(msg: ProtocolMessage) -> None:
        transport.write(encode(msg))

    # handshake: wait for HELLO; messages riding in the same chunk are kept
    hello = None
    pending: list[ProtocolMessage] = []
    deadline = clock.now() + heartbeat_timeout_s
    while hello is None:
        msgs, errs = decoder.feed(transport.read(READ_CHUNK, POLL_TIMEOUT_S))
        decode_errors.extend(errs)
        for i, m in enumerate(msgs):
            if m.msg_type == MessageType.HELLO:
                hello = m
                pending = msgs[i + 1 :]
                break
        if hello is None and clock.now() >= deadline:
            raise HandshakeError("no HELLO before timeout")
    peer_version, meta = meta_from_hello(hello.payload)
    if peer_version != PROTOCOL_VERSION:
        send(error_message("version_mismatch", f"expected {PROTOCOL_VERSION}, got {peer_version}", out_seq))
        transport.close()
        raise HandshakeError(f"protocol version mismatch: {peer_version}")
    send(ProtocolMessage(msg_type=MessageType.HELLO_ACK, seq=out_seq, timestamp_us=0))
    out_seq += 1

    writer = JournalWriter(journal_target, meta)
    records: list = [meta]
    pending_blob: str | None = None
    last_rx = clock.now()
    last_in_seq = hello.seq
    timed_out = False
    latencies: list[float] = []
    ended = False

    while not ended:
        if pending:
            msgs, pending = pending, []
        else:
            chunk = transport.read(READ_CHUNK, POLL_TIMEOUT_S)
            now = clock.now()
            if chunk:
                last_rx = now
            elif now - last_rx >= heartbeat_timeout_s:
                timed_out = True
                break
            msgs, errs = decoder.feed(chunk)
            decode_errors.extend(errs)
        for msg in msgs:
            if msg.seq <= last_in_seq:
                send(error_message("seq_regression", f"seq {msg.seq} after {last_in_seq}", out_seq, msg.timestamp_us))
                out_seq += 1
                result_errors.append("seq_regression")
                continue
            last_in_seq = msg.seq
            if msg.msg_type == MessageType.HEARTBEAT:
                continue
            if msg.msg_type == MessageType.SESSION_END:
                ended = True
                break
            if msg.msg_type == MessageType.FRAME_BLOB:
                pending_blob = _store_blob(blob_dir, msg.payload)
                continue
            if msg.msg_type == MessageType.LANDMARK_FRAME:
                frame = landmark_frame_from_payload(json.loads(msg.payload.decode("utf-8")))
                t0 = time.perf_counter()
                fr = pipeline.process_frame(frame)
                latencies.append(time.perf_counter() - t0)
                fm = FrameMeta(timestamp_us=frame.timestamp_us, face_present=frame.face_present, blob_hash=pending_blob)
                pending_blob = None
                writer.append(fm)
                records.append(fm)
                if frame.face_present:
                    writer.append(frame)
                    records.append(frame)
                if fr.scores is not None:
                    writer.append(fr.scores)
                    records.append(fr.scores)
                for cue in fr.cues:
                    writer.append(cue)
                    records.append(cue)
                    if not cue.suppressed:
                        send(cue_message(cue, out_seq))
                        out_seq += 1

    events, _ = pipeline.finish()
    for ev in events:
        writer.append(ev)
        records.append(ev)
    writer.close()
    return LinkSessionResult(
        journal=SessionJournal(meta=meta, records=records),
        latencies_s=latencies,
        errors_sent=result_errors,
        decode_errors=decode_errors,
        timed_out=timed_out,
    )


def _store_blob(blob_dir, payload: bytes) -> str | None:
    if blob_dir is None:
        return None
    import hashlib
    from pathlib import Path

    digest = hashlib.sha256(payload).hexdigest()
    path = Path(blob_dir)
    path.mkdir(parents=True, exist_ok=True)
    (path / digest).write_bytes(payload)
    return digest


def run_scripted_client(
    transport,
    meta: SessionMeta,
    frames: Iterable[LandmarkFrame],
    heartbeat_interval_s: float = 1.0,
    drop_after_s: float | None = None,
    send_session_end: bool = True,
) -> int:
    """Drive the wearer side of a link session from a scripted frame list.

    Heartbeats are interleaved on the frames' own timeline (one per
    heartbeat_interval_s of stream time). With drop_after_s the client goes
    silent mid-session without SESSION_END, exercising the server's
    heartbeat-timeout path. Returns the number of frames sent.
    """
    seq = 0
    transport.write(encode(ProtocolMessage(msg_type=MessageType.HELLO, seq=seq, timestamp_us=0, payload=hello_payload(meta))))
    seq += 1
    next_heartbeat_us = round(heartbeat_interval_s * 1e6)
    cutoff_us = None if drop_after_s is None else round(drop_after_s * 1e6)
    sent = 0
    last_ts = 0
    for frame in frames:
        if cutoff_us is not None and frame.timestamp_us >= cutoff_us:
            return sent
        while frame.timestamp_us >= next_heartbeat_us:
            transport.write(encode(ProtocolMessage(msg_type=MessageType.HEARTBEAT, seq=seq, timestamp_us=next_heartbeat_us)))
            seq += 1
            next_heartbeat_us += round(heartbeat_interval_s * 1e6)
        transport.write(encode(frame_message(frame, seq)))
        seq += 1
        sent += 1
        last_ts = frame.timestamp_us
    if send_session_end:
        transport.write(encode(ProtocolMessage(msg_type=MessageType.SESSION_END, seq=seq, timestamp_us=last_ts)))
    return sent
