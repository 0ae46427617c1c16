"""Emulates the controller chain behind one suction channel.

The real chain is an Arduino-class MCU driving a relay, motor driver and
solenoid valve. The observable contract is small: a turn-on command closes
the valve and starts the pump in one step (line sealed from atmosphere,
suction building), a turn-off vents the line and stops the pump, and every
command is answered with a status frame reflecting the post-command state.

Pump and valve always switch together, so the only reachable states are
"suction active" (pump on, valve closed) and "vented idle" (pump off,
valve open). Mixed states do not exist in the public API.

No debounce is applied to rapid on/off toggling; each command takes effect
immediately and is acknowledged after actuation.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

from .protocol import (
    Channel,
    CommandFrame,
    CommandKind,
    Fault,
    PRESSURE_CENTI_KPA_MAX,
    PRESSURE_CENTI_KPA_MIN,
    StatusFrame,
    StreamDecoder,
    encode_status,
)


class ChannelMismatch(Exception):
    """Command addressed to a different channel than this device."""


@dataclass(frozen=True)
class DeviceState:
    """Pump/valve state of one emulated channel."""

    channel: Channel
    pump_on: bool = False
    valve_closed: bool = False
    uptime_ticks: int = 0

    @property
    def suction_active(self) -> bool:
        return self.pump_on and self.valve_closed


def idle_state(channel: Channel) -> DeviceState:
    return DeviceState(channel=channel)


def pressure_to_centi_kpa(kpa: float) -> int:
    """Quantize a gauge pressure in kPa to the wire's centi-kPa field."""
    centi = round(kpa * 100.0)
    return max(PRESSURE_CENTI_KPA_MIN, min(PRESSURE_CENTI_KPA_MAX, centi))


def handle_command(
    state: DeviceState,
    cmd: CommandFrame,
    pressure_kpa: float = 0.0,
    fault: Fault = Fault.NONE,
) -> tuple[DeviceState, StatusFrame]:
    """Apply one command and produce the confirming status.

    Turn-on closes the valve and starts the pump together; turn-off vents
    and stops the pump together; query leaves the state alone. Repeated
    commands are idempotent. The status carries the post-command state and
    the supplied pressure reading.
    """
    if cmd.channel != state.channel:
        raise ChannelMismatch(f"command for {cmd.channel.name}, device is {state.channel.name}")
    if cmd.kind == CommandKind.TURN_ON:
        new = replace(state, pump_on=True, valve_closed=True)
    elif cmd.kind == CommandKind.TURN_OFF:
        new = replace(state, pump_on=False, valve_closed=False)
    else:
        new = state
    status = StatusFrame(
        channel=new.channel,
        pump_on=new.pump_on,
        valve_closed=new.valve_closed,
        pressure_centi_kpa=pressure_to_centi_kpa(pressure_kpa),
        fault=fault,
    )
    return new, status


class DeviceEmulator:
    """One channel's controller with a byte-level command interface.

    ``pressure_source`` is a zero-argument callable returning the current
    gauge pressure on this channel's line in kPa; the emulator only reads
    it. ``injected_fault`` exists for fault-path testing and is reported in
    every status until cleared.
    """

    def __init__(self, channel: Channel, pressure_source: Callable[[], float] | None = None):
        self.state = idle_state(channel)
        self.pressure_source = pressure_source or (lambda: 0.0)
        self.injected_fault = Fault.NONE
        self._decoder = StreamDecoder("command")

    @property
    def channel(self) -> Channel:
        return self.state.channel

    def handle(self, cmd: CommandFrame) -> StatusFrame:
        self.state, status = handle_command(
            self.state, cmd, self.pressure_source(), self.injected_fault
        )
        return status

    def feed_bytes(self, data: bytes) -> bytes:
        """Decode commands from raw bytes, apply them, return status bytes.

        Malformed input produces no state change and no reply; one status
        frame comes back per valid command, in order. Commands for the
        other channel are ignored (two channels can share one stream).
        """
        out = bytearray()
        for cmd in self._decoder.feed(data):
            if cmd.channel != self.state.channel:
                continue
            out += encode_status(self.handle(cmd))
        return bytes(out)

    def tick(self):
        self.state = replace(self.state, uptime_ticks=self.state.uptime_ticks + 1)


def run_device_loop(stream_in, stream_out, emulator: DeviceEmulator, chunk_size: int = 256):
    """Service loop: read bytes, answer each valid command with one status.

    ``stream_in``/``stream_out`` are binary file-like objects (sockets via
    ``makefile``). Returns cleanly when the input stream closes; a partial
    trailing frame emits nothing.
    """
    # read1 returns whatever is available instead of blocking for a full
    # chunk, which matters on buffered socket files.
    read = getattr(stream_in, "read1", stream_in.read)
    while True:
        data = read(chunk_size)
        if not data:
            return
        reply = emulator.feed_bytes(data)
        if reply:
            stream_out.write(reply)
            stream_out.flush()
