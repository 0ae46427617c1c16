"""Tour of the controller wire protocol: frames, corruption, resync.

Run: python3 demos/01_wire_protocol_tour.py
"""

from vacgrip.protocol import (
    Channel,
    ChecksumMismatch,
    CommandFrame,
    CommandKind,
    StatusFrame,
    StreamDecoder,
    decode_command,
    encode_command,
    encode_status,
)


def hexdump(data: bytes) -> str:
    return " ".join(f"{b:02X}" for b in data)


print("== command frames ==")
for kind in CommandKind:
    for channel in Channel:
        raw = encode_command(CommandFrame(kind, channel))
        print(f"{kind.name:>8} / {channel.name:<5} -> {hexdump(raw)}")

print("\n== status frame (pump on, sealed, -60.00 kPa) ==")
raw = encode_status(StatusFrame(Channel.LEFT, True, True, -6000))
print(hexdump(raw))

print("\n== corruption is detected, never misread ==")
good = bytearray(encode_command(CommandFrame(CommandKind.TURN_ON, Channel.LEFT)))
good[2] ^= 0x04  # flip one opcode bit
try:
    decode_command(bytes(good))
except ChecksumMismatch as exc:
    print(f"flipped one bit -> {exc}")

print("\n== a decoder joining mid-stream resynchronizes ==")
noise = bytes([0x13, 0x37, 0xAA, 0x05])  # includes a fake start byte
frame = encode_command(CommandFrame(CommandKind.QUERY, Channel.RIGHT))
decoder = StreamDecoder("command")
frames = decoder.feed(noise + frame * 2)
print(f"fed {len(noise)} noise bytes + 2 frames -> decoded {len(frames)}: {frames}")
print(f"framing errors skipped along the way: {decoder.errors}")
