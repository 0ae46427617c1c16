"""Close / open / suction pressure phases for each bench material.

Reproduces the qualitative bench result: the pump idles at ambient, pulls
a partial vacuum against two open cups, and plateaus at a material-
dependent level once sealed: glass deepest, porous cardboard shallowest.

Run: python3 demos/02_pressure_phases.py  (writes pressure_phases.csv;
plots to pressure_phases.png when matplotlib is importable)
"""

import csv

from vacgrip.pneumatics import DEFAULT_MATERIALS, PneumaticParams, phase_trace

MATERIALS = ("glass", "plastic", "leather", "cardboard")
params = PneumaticParams(dt=1.0 / 100.0)

traces = {name: phase_trace(DEFAULT_MATERIALS[name], params) for name in MATERIALS}

with open("pressure_phases.csv", "w", newline="") as fh:
    writer = csv.writer(fh)
    writer.writerow(["material", "time_s", "pressure_kpa", "phase"])
    for name, rows in traces.items():
        for t, p, phase in rows:
            writer.writerow([name, f"{t:.3f}", f"{p:.4f}", phase])
print("wrote pressure_phases.csv")

print(f"\n{'material':>10} {'open plateau':>14} {'suction plateau':>16}")
for name, rows in traces.items():
    open_p = [p for _, p, ph in rows if ph == "open"][-1]
    suction_p = rows[-1][1]
    print(f"{name:>10} {open_p:>12.1f} kPa {suction_p:>13.1f} kPa")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(8, 4.5))
    for name, rows in traces.items():
        ax.plot([t for t, _, _ in rows], [p for _, p, _ in rows], label=name)
    for boundary in (2.0, 5.0):
        ax.axvline(boundary, color="gray", lw=0.8, ls="--")
    ax.text(0.8, 2, "close")
    ax.text(3.2, 2, "open")
    ax.text(7.0, 2, "suction")
    ax.set_xlabel("time [s]")
    ax.set_ylabel("gauge pressure [kPa]")
    ax.set_ylim(-65, 8)
    ax.legend(loc="lower left")
    fig.tight_layout()
    fig.savefig("pressure_phases.png", dpi=120)
    print("wrote pressure_phases.png")
except ImportError:
    print("matplotlib not available; skipped the plot")
