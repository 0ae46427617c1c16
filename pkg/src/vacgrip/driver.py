"""Host-side suction client: one confirmed-state connection per channel.

Every suction command is sent, then the driver blocks until the device's
status frame comes back (or the confirm timeout expires), so an API call
always ends in a confirmed state or a raised error; nothing is fire and
forget. The collection rig toggles at footswitch rates, so synchronous
confirmation costs nothing and removes a class of desync bugs.

Gripper width is NOT driven over this wire: the gripper has its own
vendor channel in the real stack, so width commands flow straight into
the simulator. Only suction takes the custom controller path.
"""

from __future__ import annotations

import socket
import time
from dataclasses import dataclass

from .firmware import DeviceEmulator, DeviceState
from .protocol import (
    Channel,
    ChecksumMismatch,
    CommandFrame,
    CommandKind,
    Fault,
    StatusFrame,
    StreamDecoder,
    encode_command,
)

DEFAULT_CONFIRM_TIMEOUT_S = 0.200
STALENESS_LIMIT_POLLS = 3


class DriverError(Exception):
    pass


class Timeout(DriverError):
    """No status frame arrived within the confirm timeout."""


class Desync(DriverError):
    """Device state no longer matches what the driver commanded."""


class PipeTransport:
    """In-process loopback straight into a DeviceEmulator.

    The emulator runs synchronously: bytes written produce reply bytes
    immediately, so the confirm timeout only fires when the pipe is
    severed.
    """

    def __init__(self, emulator: DeviceEmulator):
        self._emulator = emulator
        self._rx = bytearray()
        self.closed = False

    def send(self, data: bytes):
        if self.closed:
            raise Timeout("transport severed")
        self._rx += self._emulator.feed_bytes(data)

    def recv(self, timeout_s: float) -> bytes:
        if self.closed:
            return b""
        out = bytes(self._rx)
        self._rx.clear()
        return out

    def close(self):
        self.closed = True


class SocketTransport:
    """TCP byte stream to a device emulator served elsewhere."""

    def __init__(self, host: str, port: int):
        self._sock = socket.create_connection((host, port))
        self._sock.setblocking(False)

    def send(self, data: bytes):
        self._sock.setblocking(True)
        try:
            self._sock.sendall(data)
        finally:
            self._sock.setblocking(False)

    def recv(self, timeout_s: float) -> bytes:
        deadline = time.monotonic() + timeout_s
        while True:
            try:
                data = self._sock.recv(4096)
                return data
            except BlockingIOError:
                if time.monotonic() >= deadline:
                    return b""
                time.sleep(0.002)

    def close(self):
        self._sock.close()


@dataclass
class EffectorStatus:
    """Last confirmed device state for one channel."""

    device: DeviceState
    pressure_kpa: float
    staleness: int = 0  # consecutive confirm failures since last good status
    fault: Fault = Fault.NONE

    @property
    def suction_on(self) -> bool:
        return self.device.suction_active


class SuctionChannel:
    """Driver for one arm's suction line over one transport."""

    def __init__(
        self,
        channel: Channel,
        transport,
        confirm_timeout_s: float = DEFAULT_CONFIRM_TIMEOUT_S,
    ):
        self.channel = channel
        self.transport = transport
        self.confirm_timeout_s = confirm_timeout_s
        self._decoder = StreamDecoder("status")
        self._commanded_on = False
        self._failures = 0
        self.last_status: EffectorStatus | None = None

    def _fail(self) -> Exception:
        self._failures += 1
        if self._failures >= STALENESS_LIMIT_POLLS:
            return Desync(f"{self.channel.name}: {self._failures} consecutive confirm failures")
        return Timeout(f"no status within {self.confirm_timeout_s * 1000:.0f} ms")

    def _exchange(self, cmd: CommandFrame) -> StatusFrame:
        try:
            self.transport.send(encode_command(cmd))
        except (Timeout, OSError):
            raise self._fail() from None
        deadline = time.monotonic() + self.confirm_timeout_s
        while True:
            remaining = max(0.0, deadline - time.monotonic())
            data = self.transport.recv(remaining)
            if data:
                errors_before = self._decoder.errors
                frames = [f for f in self._decoder.feed(data) if f.channel == self.channel]
                if frames:
                    return frames[-1]
                if self._decoder.errors > errors_before:
                    # The reply arrived mangled; surface it rather than
                    # silently waiting out the timeout.
                    self._failures += 1
                    raise ChecksumMismatch(
                        f"{self.channel.name}: status reply failed integrity checks",
                        consumed=0,
                    )
            severed = getattr(self.transport, "closed", False)
            if severed or time.monotonic() >= deadline:
                raise self._fail()

    def _confirm(self, status: StatusFrame, expect_on: bool | None) -> EffectorStatus:
        self._failures = 0
        result = EffectorStatus(
            device=DeviceState(
                channel=status.channel,
                pump_on=status.pump_on,
                valve_closed=status.valve_closed,
            ),
            pressure_kpa=status.pressure_centi_kpa / 100.0,
            staleness=0,
            fault=status.fault,
        )
        self.last_status = result
        if status.fault == Fault.DESYNC:
            raise Desync(f"{self.channel.name}: device reports desync")
        if expect_on is not None and result.suction_on != expect_on:
            raise Desync(
                f"{self.channel.name}: commanded suction {expect_on}, device says {result.suction_on}"
            )
        return result

    def set_suction(self, on: bool) -> EffectorStatus:
        """Command suction and block for the device's confirmation."""
        kind = CommandKind.TURN_ON if on else CommandKind.TURN_OFF
        status = self._exchange(CommandFrame(kind, self.channel))
        self._commanded_on = on
        return self._confirm(status, expect_on=on)

    def poll_status(self) -> EffectorStatus:
        """Query without changing state; flags Desync on mismatch."""
        status = self._exchange(CommandFrame(CommandKind.QUERY, self.channel))
        return self._confirm(status, expect_on=self._commanded_on)

    @property
    def commanded_on(self) -> bool:
        return self._commanded_on

    def close(self):
        self.transport.close()


class EffectorDriver:
    """Both suction channels plus gripper-width pass-through.

    Width targets are tracked here only so teleop and policies have one
    surface for the whole end effector; the simulator consumes them
    directly.
    """

    def __init__(self, channels: dict[Channel, SuctionChannel]):
        self.channels = channels
        self.gripper_width = {Channel.LEFT: 0.0, Channel.RIGHT: 0.0}

    @classmethod
    def over_pipes(
        cls,
        emulators: dict[Channel, DeviceEmulator],
        confirm_timeout_s: float = DEFAULT_CONFIRM_TIMEOUT_S,
    ) -> "EffectorDriver":
        return cls(
            {
                ch: SuctionChannel(ch, PipeTransport(emu), confirm_timeout_s)
                for ch, emu in emulators.items()
            }
        )

    def set_suction(self, channel: Channel, on: bool) -> EffectorStatus:
        return self.channels[channel].set_suction(on)

    def poll_status(self, channel: Channel) -> EffectorStatus:
        return self.channels[channel].poll_status()

    def set_gripper_width(self, channel: Channel, width: float):
        if width < 0:
            raise ValueError("gripper width must be >= 0")
        self.gripper_width[channel] = width

    def suction_commanded(self, channel: Channel) -> bool:
        return self.channels[channel].commanded_on

    def close(self):
        for ch in self.channels.values():
            ch.close()
