"""Bit-exact codec and transport policy for the 50 Hz haptic-state stream.

Wire layout (47 bytes, little-endian):

    offset  size  field
    0       2     magic 0x48 0x46 ("HF")
    2       1     version (1)
    3       2     seq, u16
    5       4     timestamp_ms, u32
    9       16    indentation_mm, 4 x f32
    25      4     material_id, 4 x u8
    29      12    velocity_mm_s, 3 x f32
    41      4     angular_velocity_rad_s, f32
    45      2     crc, CRC-16/CCITT-FALSE over bytes 0..44

The receiver is latest-wins: it keeps the frame with the newest sequence
number under serial-number arithmetic (wrap window 2^15) and counts stale
and duplicate arrivals instead of surfacing them.
"""

from __future__ import annotations

import socket
import struct
from dataclasses import dataclass

from .errors import ProtocolError

MAGIC = b"HF"
VERSION = 1
FRAME_SIZE = 47
DEFAULT_PORT = 47047
WRAP_WINDOW = 1 << 15

_HEADER_FMT = "<2sBHI4f4B3ff"
_FRAME_FMT = _HEADER_FMT + "H"
assert struct.calcsize(_FRAME_FMT) == FRAME_SIZE


class BadLength(ProtocolError):
    pass


class BadMagic(ProtocolError):
    pass


class BadVersion(ProtocolError):
    pass


class BadCrc(ProtocolError):
    pass


class BadPayload(ProtocolError):
    pass


def _build_crc_table():
    table = []
    for byte in range(256):
        crc = byte << 8
        for _ in range(8):
            crc = ((crc << 1) ^ 0x1021) & 0xFFFF if crc & 0x8000 else (crc << 1) & 0xFFFF
        table.append(crc)
    return tuple(table)


_CRC_TABLE = _build_crc_table()


def crc16_ccitt_false(data: bytes, crc: int = 0xFFFF) -> int:
    """CRC-16/CCITT-FALSE: poly 0x1021, init 0xFFFF, no reflection, xorout 0."""
    for b in data:
        crc = ((crc << 8) & 0xFFFF) ^ _CRC_TABLE[((crc >> 8) ^ b) & 0xFF]
    return crc


@dataclass(frozen=True)
class HapticFrame:
    """One rendered haptic state sample as carried on the wire."""

    seq: int
    timestamp_ms: int
    indentation_mm: tuple      # 4 floats, >= 0
    material_id: tuple         # 4 ints in {0, 1, 2, 3}
    velocity_mm_s: tuple       # 3 floats
    angular_velocity_rad_s: float


def _f32(x: float) -> float:
    return struct.unpack("<f", struct.pack("<f", x))[0]


def _validate_payload(frame: HapticFrame) -> None:
    if not (0 <= frame.seq <= 0xFFFF):
        raise BadPayload(f"seq {frame.seq} outside u16 range")
    if not (0 <= frame.timestamp_ms <= 0xFFFFFFFF):
        raise BadPayload(f"timestamp_ms {frame.timestamp_ms} outside u32 range")
    if len(frame.indentation_mm) != 4 or len(frame.material_id) != 4 \
            or len(frame.velocity_mm_s) != 3:
        raise BadPayload("payload arity must be 4 indentations, 4 materials, 3 velocities")
    for d in frame.indentation_mm:
        if not (d == d) or d in (float("inf"), float("-inf")) or d < 0:
            raise BadPayload(f"indentation {d!r} must be finite and non-negative")
    for m in frame.material_id:
        if m not in (0, 1, 2, 3):
            raise BadPayload(f"material id {m!r} outside {{0..3}}")
    for v in (*frame.velocity_mm_s, frame.angular_velocity_rad_s):
        if not (v == v) or v in (float("inf"), float("-inf")):
            raise BadPayload(f"velocity {v!r} must be finite")


def encode(frame: HapticFrame) -> bytes:
    """Serialize a frame to its 47-byte wire form; payload invariants enforced."""
    _validate_payload(frame)
    body = struct.pack(
        _HEADER_FMT, MAGIC, VERSION, frame.seq, frame.timestamp_ms,
        *frame.indentation_mm, *frame.material_id,
        *frame.velocity_mm_s, frame.angular_velocity_rad_s)
    return body + struct.pack("<H", crc16_ccitt_false(body))


def decode(data: bytes) -> HapticFrame:
    """Parse and verify 47 wire bytes; raises a distinct error per defect."""
    if len(data) != FRAME_SIZE:
        raise BadLength(f"frame must be {FRAME_SIZE} bytes, got {len(data)}")
    if data[0:2] != MAGIC:
        raise BadMagic(f"bad magic {data[0:2]!r}")
    if data[2] != VERSION:
        raise BadVersion(f"unsupported version {data[2]}")
    (stored_crc,) = struct.unpack_from("<H", data, FRAME_SIZE - 2)
    if crc16_ccitt_false(data[:FRAME_SIZE - 2]) != stored_crc:
        raise BadCrc("checksum mismatch")
    fields = struct.unpack(_HEADER_FMT, data[:FRAME_SIZE - 2])
    frame = HapticFrame(
        seq=fields[2], timestamp_ms=fields[3],
        indentation_mm=tuple(fields[4:8]),
        material_id=tuple(fields[8:12]),
        velocity_mm_s=tuple(fields[12:15]),
        angular_velocity_rad_s=fields[15])
    _validate_payload(frame)
    return frame


def make_frame(seq, timestamp_ms, indentation_mm, material_id, velocity_mm_s,
               angular_velocity_rad_s) -> HapticFrame:
    """Build a frame whose floats are pre-rounded to f32 for bit-exact round-trips."""
    return HapticFrame(
        seq=int(seq) & 0xFFFF,
        timestamp_ms=int(timestamp_ms) & 0xFFFFFFFF,
        indentation_mm=tuple(_f32(d) for d in indentation_mm),
        material_id=tuple(int(m) for m in material_id),
        velocity_mm_s=tuple(_f32(v) for v in velocity_mm_s),
        angular_velocity_rad_s=_f32(angular_velocity_rad_s))


def seq_newer(candidate: int, reference: int) -> bool:
    """Serial-number comparison with a 2^15 wrap window."""
    return 0 < ((candidate - reference) & 0xFFFF) < WRAP_WINDOW


class FrameReceiver:
    """Latest-wins collapse of a datagram stream, with drop accounting."""

    def __init__(self):
        self.latest: HapticFrame | None = None
        self.latest_arrival: float | None = None
        self.accepted = 0
        self.stale = 0
        self.duplicates = 0
        self.rejected = {}  # error class name -> count

    def push(self, data: bytes, arrival_time: float = 0.0) -> HapticFrame | None:
        """Feed one datagram; returns the frame iff it became the new state."""
        try:
            frame = decode(data)
        except ProtocolError as exc:
            name = type(exc).__name__
            self.rejected[name] = self.rejected.get(name, 0) + 1
            return None
        return self.push_frame(frame, arrival_time)

    def push_frame(self, frame: HapticFrame, arrival_time: float = 0.0) -> HapticFrame | None:
        if self.latest is None or seq_newer(frame.seq, self.latest.seq):
            self.latest = frame
            self.latest_arrival = arrival_time
            self.accepted += 1
            return frame
        if frame.seq == self.latest.seq:
            self.duplicates += 1
        else:
            self.stale += 1
        return None

    def counters(self) -> dict:
        return {"accepted": self.accepted, "stale": self.stale,
                "duplicates": self.duplicates,
                "rejected": dict(self.rejected)}


class UdpFrameSender:
    """Fire-and-forget datagram sender for encoded frames."""

    def __init__(self, host: str = "127.0.0.1", port: int = DEFAULT_PORT):
        self.addr = (host, port)
        self.sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)

    def send(self, frame: HapticFrame) -> None:
        self.sock.sendto(encode(frame), self.addr)

    def close(self) -> None:
        self.sock.close()


class UdpFrameReceiver:
    """Non-blocking datagram drain feeding a latest-wins FrameReceiver."""

    def __init__(self, port: int = DEFAULT_PORT, host: str = "127.0.0.1"):
        self.sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        self.sock.bind((host, port))
        self.sock.setblocking(False)
        self.port = self.sock.getsockname()[1]
        self.receiver = FrameReceiver()

    def poll(self, arrival_time: float = 0.0) -> HapticFrame | None:
        """Drain pending datagrams; returns the newest state (or None)."""
        while True:
            try:
                data, _ = self.sock.recvfrom(4096)
            except BlockingIOError:
                return self.receiver.latest
            self.receiver.push(data, arrival_time)

    def close(self) -> None:
        self.sock.close()
