"""Holding-force margins: the 537 g rice jar, two cups vs one venting cup.

Run: python3 demos/03_payload_margin.py
"""

from vacgrip.firmware import DeviceState
from vacgrip.pneumatics import (
    DEFAULT_MATERIALS,
    PneumaticParams,
    PressureState,
    holds_payload,
    step_pressure,
    suction_force,
)
from vacgrip.protocol import Channel

params = PneumaticParams(dt=0.005)
pumping = DeviceState(Channel.LEFT, pump_on=True, valve_closed=True)
glass = DEFAULT_MATERIALS["glass"]
MASS = 0.537
SF = 1.5
required = MASS * 9.81 * SF
print(f"payload {MASS * 1000:.0f} g, safety factor {SF}: need {required:.2f} N\n")

for label, cups in (("both cups sealed", (True, True)), ("one cup venting", (True, False))):
    ps = PressureState(
        cup_sealed=cups, contact_material=tuple(glass if c else None for c in cups)
    )
    for _ in range(int(3.0 / params.dt)):
        ps = step_pressure(ps, pumping, params)
    force = suction_force(ps, params)
    verdict = "HOLDS" if holds_payload(ps, MASS, params, SF) else "DROPS"
    print(
        f"{label:>18}: line settles at {ps.gauge_pressure:6.1f} kPa, "
        f"force {force:5.2f} N -> {verdict}"
    )

print("\nforce vs payload at full vacuum (two sealed cups):")
full = PressureState(
    gauge_pressure=-60.0, cup_sealed=(True, True), contact_material=(glass, glass)
)
capacity = suction_force(full, params)
for grams in (200, 537, 1000, 1440, 1500):
    need = grams / 1000 * 9.81 * SF
    mark = "ok" if need <= capacity else "too heavy"
    print(f"  {grams:>5} g: need {need:5.2f} N of {capacity:.2f} N available -> {mark}")
