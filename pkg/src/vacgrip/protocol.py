"""Framed byte protocol between the host and the suction controller.

Frame layout (one byte per cell unless noted):

    +------+--------+----------------+----------+
    | 0xAA | length | payload        | checksum |
    +------+--------+----------------+----------+

``length`` is the payload byte count (at most 16). ``checksum`` is the XOR
fold of the length byte and every payload byte. Payloads:

    command:  [opcode, channel]                   opcode 0x00 off / 0x01 on / 0x02 query
    status:   [0x03, channel, flags, p_lo, p_hi, fault]

Status ``flags``: bit 0 pump on, bit 1 valve closed. Pressure is gauge
pressure in centi-kPa, signed 16-bit little-endian: 0 at ambient, -6000 at
the pump's rated -60 kPa.

Decoding scans forward for the 0xAA start byte, so a receiver joining
mid-stream or hit by line noise recovers at the next frame boundary. A
corrupted candidate frame costs one byte of progress past its start byte
and the scan resumes, which keeps real frames behind garbage reachable.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

SOF = 0xAA
MAX_PAYLOAD = 16

OPCODE_TURN_OFF = 0x00
OPCODE_TURN_ON = 0x01
OPCODE_QUERY = 0x02
OPCODE_STATUS = 0x03

_COMMAND_PAYLOAD_LEN = 2
_STATUS_PAYLOAD_LEN = 6

PRESSURE_CENTI_KPA_MIN = -6000
PRESSURE_CENTI_KPA_MAX = 0


class CommandKind(IntEnum):
    TURN_OFF = OPCODE_TURN_OFF
    TURN_ON = OPCODE_TURN_ON
    QUERY = OPCODE_QUERY


class Channel(IntEnum):
    LEFT = 0x00
    RIGHT = 0x01


class Fault(IntEnum):
    NONE = 0
    PUMP_STALL = 1
    DESYNC = 2


class ProtocolError(Exception):
    """Base class for framing and codec errors."""


class Truncated(ProtocolError):
    """Not enough bytes yet for a complete frame.

    ``discard`` is the count of leading bytes that can never start a frame
    (garbage before the first 0xAA, or the whole buffer when it holds no
    0xAA). Everything after that prefix must be retained by the caller.
    """

    def __init__(self, discard: int = 0):
        super().__init__(f"incomplete frame (safe to discard {discard} leading bytes)")
        self.discard = discard


class ChecksumMismatch(ProtocolError):
    """Frame failed integrity checks (bad checksum or impossible length).

    ``consumed`` is how far the stream should advance: one byte past the
    candidate start byte, so scanning resumes inside the bad span.
    """

    def __init__(self, message: str, consumed: int):
        super().__init__(message)
        self.consumed = consumed


class UnknownOpcode(ProtocolError):
    """Well-framed payload with an opcode or field value we do not speak.

    The framing was intact, so ``consumed`` covers the entire frame.
    """

    def __init__(self, message: str, consumed: int):
        super().__init__(message)
        self.consumed = consumed


class RangeError(ProtocolError):
    """Field value outside its wire range at encode time."""


@dataclass(frozen=True)
class CommandFrame:
    kind: CommandKind
    channel: Channel


@dataclass(frozen=True)
class StatusFrame:
    channel: Channel
    pump_on: bool
    valve_closed: bool
    pressure_centi_kpa: int
    fault: Fault = Fault.NONE


@dataclass(frozen=True)
class RawFrame:
    """One framed unit as it appears on the wire."""

    length: int
    payload: bytes
    checksum: int

    def to_bytes(self) -> bytes:
        return bytes([SOF, self.length]) + self.payload + bytes([self.checksum])


def _xor_fold(data: bytes) -> int:
    ck = 0
    for b in data:
        ck ^= b
    return ck


def frame_payload(payload: bytes) -> bytes:
    """Wrap a raw payload in SOF / length / checksum framing."""
    if len(payload) > MAX_PAYLOAD:
        raise RangeError(f"payload of {len(payload)} bytes exceeds max {MAX_PAYLOAD}")
    length = len(payload)
    ck = _xor_fold(bytes([length]) + payload)
    return RawFrame(length, bytes(payload), ck).to_bytes()


def _scan_frame(data) -> tuple[bytes, int, int]:
    """Find and integrity-check the first complete frame in ``data``.

    Returns (payload, consumed, start) where ``consumed`` counts from the
    beginning of ``data`` through the end of the frame. Raises Truncated,
    or ChecksumMismatch with its own consumed count.
    """
    buf = bytes(data)
    start = buf.find(bytes([SOF]))
    if start < 0:
        raise Truncated(discard=len(buf))
    if len(buf) < start + 2:
        raise Truncated(discard=start)
    length = buf[start + 1]
    if length > MAX_PAYLOAD:
        raise ChecksumMismatch(
            f"length byte {length:#04x} exceeds max payload {MAX_PAYLOAD}",
            consumed=start + 1,
        )
    end = start + 2 + length + 1
    if len(buf) < end:
        raise Truncated(discard=start)
    payload = buf[start + 2 : end - 1]
    expect = _xor_fold(buf[start + 1 : end - 1])
    if buf[end - 1] != expect:
        raise ChecksumMismatch(
            f"checksum {buf[end - 1]:#04x} != computed {expect:#04x}",
            consumed=start + 1,
        )
    return payload, end, start


def encode_command(cmd: CommandFrame) -> bytes:
    return frame_payload(bytes([int(cmd.kind), int(cmd.channel)]))


def decode_command(data) -> tuple[CommandFrame, int]:
    """Decode the first complete command frame, resyncing past garbage.

    Returns (frame, consumed bytes). Consumed includes skipped garbage.
    """
    payload, consumed, _ = _scan_frame(data)
    if len(payload) != _COMMAND_PAYLOAD_LEN:
        raise UnknownOpcode(
            f"command payload must be {_COMMAND_PAYLOAD_LEN} bytes, got {len(payload)}",
            consumed=consumed,
        )
    opcode, channel = payload[0], payload[1]
    if opcode not in (OPCODE_TURN_OFF, OPCODE_TURN_ON, OPCODE_QUERY):
        raise UnknownOpcode(f"unknown command opcode {opcode:#04x}", consumed=consumed)
    if channel not in (Channel.LEFT, Channel.RIGHT):
        raise UnknownOpcode(f"unknown channel {channel:#04x}", consumed=consumed)
    return CommandFrame(CommandKind(opcode), Channel(channel)), consumed


def encode_status(st: StatusFrame) -> bytes:
    p = int(st.pressure_centi_kpa)
    if not PRESSURE_CENTI_KPA_MIN <= p <= PRESSURE_CENTI_KPA_MAX:
        raise RangeError(
            f"pressure {p} centi-kPa outside [{PRESSURE_CENTI_KPA_MIN}, {PRESSURE_CENTI_KPA_MAX}]"
        )
    flags = (1 if st.pump_on else 0) | (2 if st.valve_closed else 0)
    payload = bytes([OPCODE_STATUS, int(st.channel), flags]) + p.to_bytes(
        2, "little", signed=True
    ) + bytes([int(st.fault)])
    return frame_payload(payload)


def decode_status(data) -> tuple[StatusFrame, int]:
    """Decode the first complete status frame. Mirrors decode_command."""
    payload, consumed, _ = _scan_frame(data)
    if len(payload) != _STATUS_PAYLOAD_LEN:
        raise UnknownOpcode(
            f"status payload must be {_STATUS_PAYLOAD_LEN} bytes, got {len(payload)}",
            consumed=consumed,
        )
    if payload[0] != OPCODE_STATUS:
        raise UnknownOpcode(f"expected status opcode, got {payload[0]:#04x}", consumed=consumed)
    channel, flags, fault = payload[1], payload[2], payload[5]
    if channel not in (Channel.LEFT, Channel.RIGHT):
        raise UnknownOpcode(f"unknown channel {channel:#04x}", consumed=consumed)
    if flags & ~0b11:
        raise UnknownOpcode(f"reserved status flags set: {flags:#04x}", consumed=consumed)
    if fault not in (Fault.NONE, Fault.PUMP_STALL, Fault.DESYNC):
        raise UnknownOpcode(f"unknown fault code {fault:#04x}", consumed=consumed)
    pressure = int.from_bytes(payload[3:5], "little", signed=True)
    if not PRESSURE_CENTI_KPA_MIN <= pressure <= PRESSURE_CENTI_KPA_MAX:
        raise UnknownOpcode(f"pressure {pressure} centi-kPa out of range", consumed=consumed)
    return (
        StatusFrame(Channel(channel), bool(flags & 1), bool(flags & 2), pressure, Fault(fault)),
        consumed,
    )


class StreamDecoder:
    """Incremental decoder over an ordered byte stream.

    Owns a resync buffer; use one instance per stream and per calling
    thread. Malformed spans are dropped (counted in ``errors``) and
    scanning continues, so valid frames behind garbage still come out.
    """

    def __init__(self, kind: str = "command"):
        if kind == "command":
            self._decode = decode_command
        elif kind == "status":
            self._decode = decode_status
        else:
            raise ValueError(f"kind must be 'command' or 'status', got {kind!r}")
        self._buf = bytearray()
        self.errors = 0

    def feed(self, data: bytes) -> list:
        """Append bytes, return every complete frame now decodable."""
        self._buf.extend(data)
        frames = []
        while True:
            try:
                frame, consumed = self._decode(self._buf)
            except Truncated as exc:
                if exc.discard:
                    del self._buf[: exc.discard]
                break
            except (ChecksumMismatch, UnknownOpcode) as exc:
                self.errors += 1
                del self._buf[: exc.consumed]
                continue
            del self._buf[:consumed]
            frames.append(frame)
        return frames

    def pending(self) -> int:
        return len(self._buf)
