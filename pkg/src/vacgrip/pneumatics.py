"""Line pressure and suction force model for one dual-cup channel.

Each arm has a single pump and a single solenoid valve feeding two cups on
one shared line, so one venting cup degrades the other (the underactuated
failure). Gauge pressure P (kPa, 0 ambient, negative under vacuum) follows
first-order dynamics:

    valve open:              dP/dt = k_vent * (0 - P)
    valve closed, pump on:   dP/dt = k_pump * (P_min - P) + K_leak * (0 - P)

where K_leak sums per-cup leak rates: a sealed cup leaks at its contact
material's rate, an open cup at ``k_open_cup``. The analytic steady state
under pumping is P_ss = P_min * k_pump / (k_pump + K_leak), which the
forward-Euler stepper converges to exactly (the fixed point of the update
is the ODE's). P is clamped to [P_min, 0].

Material leak coefficients are config defaults chosen to reproduce the
qualitative ordering glass < plastic < leather < cardboard (porous
surfaces seal worst); absolute plateau values are not calibrated against
any measurement.

Suction force is the vacuum across each sealed cup's nominal lip area,
F = sum over sealed cups of |P| * 1000 * pi * (d/2)^2, with no lip
deformation model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import yaml

from .firmware import DeviceState
from .protocol import Channel

GRAVITY = 9.81
CUPS_PER_CHANNEL = 2

# Internal Euler substep ceiling; keeps lam*dt well under 1 for default rates.
MAX_SUBSTEP_S = 0.010


@dataclass(frozen=True)
class MaterialProfile:
    """Seal quality of one contact material."""

    name: str
    leak_coeff: float  # per-second loss rate through a sealed cup, >= 0
    suctionable: bool = True

    def __post_init__(self):
        if self.leak_coeff < 0:
            raise ValueError(f"leak_coeff must be >= 0, got {self.leak_coeff}")


DEFAULT_MATERIALS = {
    "glass": MaterialProfile("glass", 0.0, True),
    "plastic": MaterialProfile("plastic", 0.5, True),
    "leather": MaterialProfile("leather", 1.0, True),
    "cardboard": MaterialProfile("cardboard", 5.0, True),
    "banana": MaterialProfile("banana", 0.0, False),
    "cucumber": MaterialProfile("cucumber", 0.0, False),
}


def load_materials(path: str | Path) -> dict[str, MaterialProfile]:
    """Load a material table: list of {name, leak_coeff, suctionable}."""
    with open(path, "r", encoding="utf-8") as fh:
        records = yaml.safe_load(fh)
    table = {}
    for rec in records:
        profile = MaterialProfile(
            name=str(rec["name"]),
            leak_coeff=float(rec["leak_coeff"]),
            suctionable=bool(rec.get("suctionable", True)),
        )
        table[profile.name] = profile
    return table


@dataclass(frozen=True)
class PneumaticParams:
    p_min: float = -60.0  # kPa, pump rating
    k_pump: float = 5.0  # 1/s, pull-down rate toward p_min
    k_vent: float = 20.0  # 1/s, vent rate with valve open
    k_open_cup: float = 15.0  # 1/s, leak through one unsealed cup
    cup_diameter: float = 0.015  # m
    dt: float = 1.0 / 30.0  # caller step; substepped internally

    def __post_init__(self):
        if min(self.k_pump, self.k_vent, self.k_open_cup) <= 0:
            raise ValueError("all rate constants must be > 0")
        if self.cup_diameter <= 0:
            raise ValueError("cup_diameter must be > 0")

    @property
    def cup_area(self) -> float:
        return math.pi * (self.cup_diameter / 2.0) ** 2


@dataclass(frozen=True)
class PressureState:
    """Gauge pressure of one channel's line plus per-cup seal status."""

    gauge_pressure: float = 0.0  # kPa, in [p_min, 0]
    cup_sealed: tuple[bool, bool] = (False, False)
    contact_material: tuple[MaterialProfile | None, MaterialProfile | None] = (None, None)

    def __post_init__(self):
        for sealed, mat in zip(self.cup_sealed, self.contact_material):
            if sealed and mat is None:
                raise ValueError("a sealed cup must have a contact material")

    def sealed_count(self) -> int:
        return sum(self.cup_sealed)


def leak_rate(ps: PressureState, params: PneumaticParams) -> float:
    """Total line leak K_leak over both cups."""
    total = 0.0
    for sealed, mat in zip(ps.cup_sealed, ps.contact_material):
        total += mat.leak_coeff if sealed else params.k_open_cup
    return total


def steady_state_pressure(ps: PressureState, dev: DeviceState, params: PneumaticParams) -> float:
    """Analytic steady state of the current ODE branch, in kPa."""
    if not dev.valve_closed:
        return 0.0
    if not dev.pump_on:
        return 0.0 if leak_rate(ps, params) > 0 else ps.gauge_pressure
    k_leak = leak_rate(ps, params)
    return params.p_min * params.k_pump / (params.k_pump + k_leak)


def step_pressure(ps: PressureState, dev: DeviceState, params: PneumaticParams) -> PressureState:
    """Advance line pressure by params.dt (forward Euler, fine substeps)."""
    n_sub = max(1, math.ceil(params.dt / MAX_SUBSTEP_S))
    h = params.dt / n_sub
    p = ps.gauge_pressure
    if not dev.valve_closed:
        for _ in range(n_sub):
            p += h * params.k_vent * (0.0 - p)
    else:
        k_leak = leak_rate(ps, params)
        pump = params.k_pump if dev.pump_on else 0.0
        for _ in range(n_sub):
            p += h * (pump * (params.p_min - p) + k_leak * (0.0 - p))
    p = min(0.0, max(params.p_min, p))
    return replace(ps, gauge_pressure=p)


@dataclass(frozen=True)
class SurfacePatch:
    """Flat rectangular face usable as a suction target.

    ``center`` sits on the face, ``normal`` points out of it, ``u_axis``
    spans the face with half extent ``half_u`` (``v = normal x u`` with
    ``half_v``). All vectors in the same world frame as the cup pose.
    """

    center: np.ndarray
    normal: np.ndarray
    u_axis: np.ndarray
    half_u: float
    half_v: float

    def v_axis(self) -> np.ndarray:
        return np.cross(self.normal, self.u_axis)


# Seal tolerances: nominal scripted trajectories seal reliably, 2 cm
# placement errors fail.
SEAL_ANGLE_TOL_DEG = 10.0
SEAL_STANDOFF_TOL = 0.003  # m


def seal_check(
    cup_position: np.ndarray,
    cup_axis: np.ndarray,
    patch: SurfacePatch,
    material: MaterialProfile,
    angle_tol_deg: float = SEAL_ANGLE_TOL_DEG,
    standoff_tol: float = SEAL_STANDOFF_TOL,
) -> bool:
    """True when a cup at ``cup_position`` pointing along ``cup_axis`` seals.

    Requires a suctionable material, the cup axis within the angular
    tolerance of the inward surface normal, the cup center inside the
    patch, and standoff within the contact tolerance.
    """
    if not material.suctionable:
        return False
    axis = np.asarray(cup_axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    normal = np.asarray(patch.normal, dtype=float)
    normal = normal / np.linalg.norm(normal)
    # Cup must point INTO the face: axis vs -normal.
    cos_angle = float(np.dot(axis, -normal))
    if cos_angle < math.cos(math.radians(angle_tol_deg)):
        return False
    rel = np.asarray(cup_position, dtype=float) - patch.center
    standoff = float(np.dot(rel, normal))
    if standoff > standoff_tol or standoff < -standoff_tol:
        return False
    u = float(np.dot(rel, patch.u_axis))
    v = float(np.dot(rel, patch.v_axis()))
    return abs(u) <= patch.half_u and abs(v) <= patch.half_v


def suction_force(ps: PressureState, params: PneumaticParams) -> float:
    """Holding force in newtons across this channel's sealed cups."""
    return ps.sealed_count() * abs(ps.gauge_pressure) * 1000.0 * params.cup_area


DEFAULT_SAFETY_FACTOR = 1.5


def holds_payload(
    ps: PressureState,
    mass_kg: float,
    params: PneumaticParams,
    safety_factor: float = DEFAULT_SAFETY_FACTOR,
) -> bool:
    """Whether current suction supports ``mass_kg`` with margin."""
    if mass_kg < 0:
        raise ValueError("mass must be >= 0")
    return suction_force(ps, params) >= mass_kg * GRAVITY * safety_factor


def phase_trace(
    material: MaterialProfile,
    params: PneumaticParams | None = None,
    close_s: float = 2.0,
    open_s: float = 3.0,
    suction_s: float = 5.0,
) -> list[tuple[float, float, str]]:
    """Pressure trace over the three bench phases for one material.

    Close: pump off, line vented. Open: pump on, no object (both cups
    leak to air). Suction: pump on, both cups sealed on the material.
    Returns (time_s, pressure_kpa, phase) rows at params.dt spacing.
    """
    params = params or PneumaticParams()
    channel_idle = DeviceState(channel=Channel.LEFT, pump_on=False, valve_closed=False)
    channel_on = DeviceState(channel=Channel.LEFT, pump_on=True, valve_closed=True)
    phases = [
        ("close", close_s, channel_idle, PressureState()),
        ("open", open_s, channel_on, PressureState()),
        (
            "suction",
            suction_s,
            channel_on,
            PressureState(cup_sealed=(True, True), contact_material=(material, material)),
        ),
    ]
    rows = []
    t = 0.0
    pressure = 0.0
    for name, duration, dev, seal_template in phases:
        ps = replace(seal_template, gauge_pressure=pressure)
        steps = round(duration / params.dt)
        for _ in range(steps):
            rows.append((t, ps.gauge_pressure, name))
            ps = step_pressure(ps, dev, params)
            t += params.dt
        pressure = ps.gauge_pressure
    rows.append((t, pressure, "suction"))
    return rows
