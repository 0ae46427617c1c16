"""Pressure dynamics, steady states, seal rules and holding force.

Expected values are frozen from the closed-form steady state
P_ss = p_min * k_pump / (k_pump + K_leak) and the lip-area force
F = n_sealed * |P| * 1000 * pi * (d/2)^2, computed independently here.
"""

import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vacgrip.firmware import DeviceState
from vacgrip.pneumatics import (
    DEFAULT_MATERIALS,
    GRAVITY,
    MaterialProfile,
    PneumaticParams,
    PressureState,
    SurfacePatch,
    holds_payload,
    leak_rate,
    load_materials,
    phase_trace,
    seal_check,
    steady_state_pressure,
    step_pressure,
    suction_force,
)
from vacgrip.protocol import Channel

PARAMS = PneumaticParams(dt=1.0 / 30.0)
PUMPING = DeviceState(Channel.LEFT, pump_on=True, valve_closed=True)
VENTED = DeviceState(Channel.LEFT, pump_on=False, valve_closed=False)


def sealed_state(material_name: str, cups=(True, True)) -> PressureState:
    mat = DEFAULT_MATERIALS[material_name]
    return PressureState(
        gauge_pressure=0.0,
        cup_sealed=cups,
        contact_material=tuple(mat if c else None for c in cups),
    )


def run_to(ps: PressureState, dev: DeviceState, seconds: float, params=PARAMS) -> PressureState:
    for _ in range(round(seconds / params.dt)):
        ps = step_pressure(ps, dev, params)
    return ps


def test_sealed_glass_converges_to_rating():
    ps = run_to(sealed_state("glass"), PUMPING, 1.0)
    assert ps.gauge_pressure == pytest.approx(-60.0, rel=0.02)


def test_cardboard_steady_state_matches_analytic():
    # K_leak = 2 * 5.0, P_ss = -60 * 5 / 15 = -20 kPa.
    ps = run_to(sealed_state("cardboard"), PUMPING, 5.0 / PARAMS.k_pump)
    assert ps.gauge_pressure == pytest.approx(-20.0, rel=0.01)


def test_vent_returns_to_ambient():
    ps = replace(sealed_state("glass"), gauge_pressure=-55.0)
    ps = run_to(ps, VENTED, 1.0)
    assert ps.gauge_pressure == pytest.approx(0.0, abs=1e-3)


def test_one_cup_open_steady_state():
    # One sealed glass cup, one open: K = 15, P_ss = -60 * 5 / 20 = -15.
    ps = sealed_state("glass", cups=(True, False))
    assert steady_state_pressure(ps, PUMPING, PARAMS) == pytest.approx(-15.0)
    ps = run_to(ps, PUMPING, 2.0)
    assert ps.gauge_pressure == pytest.approx(-15.0, rel=0.01)


def test_analytic_steady_state_random_draws():
    rng = np.random.default_rng(42)
    for _ in range(20):
        params = PneumaticParams(
            p_min=-60.0,
            k_pump=float(rng.uniform(1.0, 10.0)),
            k_vent=20.0,
            k_open_cup=float(rng.uniform(5.0, 20.0)),
            dt=1.0 / 30.0,
        )
        leak = float(rng.uniform(0.0, 6.0))
        mat = MaterialProfile("draw", leak)
        cups = (True, bool(rng.integers(0, 2)))
        ps = PressureState(
            cup_sealed=cups, contact_material=tuple(mat if c else None for c in cups)
        )
        expect = params.p_min * params.k_pump / (params.k_pump + leak_rate(ps, params))
        ps = run_to(ps, PUMPING, 5.0 / params.k_pump, params)
        assert ps.gauge_pressure == pytest.approx(expect, rel=0.01)


def test_material_plateau_ordering():
    plateaus = {}
    for name in ("glass", "plastic", "leather", "cardboard"):
        ps = run_to(sealed_state(name), PUMPING, 3.0)
        plateaus[name] = abs(ps.gauge_pressure)
    assert (
        plateaus["glass"] > plateaus["plastic"] > plateaus["leather"] > plateaus["cardboard"]
    )


def test_default_leak_ordering():
    leaks = [DEFAULT_MATERIALS[n].leak_coeff for n in ("glass", "plastic", "leather", "cardboard")]
    assert leaks == sorted(leaks)
    assert len(set(leaks)) == len(leaks)


def test_suction_force_two_sealed_cups_at_rating():
    ps = replace(sealed_state("glass"), gauge_pressure=-60.0)
    expect = 2 * 60000.0 * math.pi * 0.0075**2  # 21.2057... N
    assert suction_force(ps, PARAMS) == pytest.approx(expect)
    assert suction_force(ps, PARAMS) == pytest.approx(21.2058, abs=1e-3)


def test_suction_force_zero_cases():
    assert suction_force(PressureState(gauge_pressure=-60.0), PARAMS) == 0.0
    assert suction_force(sealed_state("glass"), PARAMS) == 0.0  # P = 0


def test_suction_force_continuous_in_pressure():
    ps = sealed_state("glass")
    forces = [
        suction_force(replace(ps, gauge_pressure=p), PARAMS)
        for p in np.linspace(0.0, -60.0, 61)
    ]
    diffs = np.diff(forces)
    assert forces[0] == 0.0
    assert np.all(diffs >= 0)
    assert np.allclose(diffs, diffs[0])


def test_holds_537g_jar_with_two_cups():
    # Required: 0.537 * 9.81 * 1.5 = 7.902 N <= 21.206 N.
    ps = replace(sealed_state("glass"), gauge_pressure=-60.0)
    assert 0.537 * GRAVITY * 1.5 == pytest.approx(7.9020, abs=1e-3)
    assert holds_payload(ps, 0.537, PARAMS, safety_factor=1.5)


def test_drops_537g_jar_with_one_cup_venting():
    # Steady state -15 kPa, one sealed cup: F = 2.651 N < 7.902 N.
    ps = replace(sealed_state("glass", cups=(True, False)), gauge_pressure=-15.0)
    assert suction_force(ps, PARAMS) == pytest.approx(2.6507, abs=1e-3)
    assert not holds_payload(ps, 0.537, PARAMS, safety_factor=1.5)


def test_zero_mass_always_holds():
    assert holds_payload(PressureState(), 0.0, PARAMS)


@given(
    st.lists(st.tuples(st.booleans(), st.floats(0.02, 0.5)), min_size=1, max_size=12),
    st.sampled_from(["glass", "plastic", "leather", "cardboard"]),
)
@settings(max_examples=60, deadline=None)
def test_pressure_monotone_and_bounded(schedule, material):
    """Random pump toggle schedules: P stays in range, moves monotonically
    toward whichever steady state the current branch has."""
    params = PARAMS
    ps = sealed_state(material)
    for pump_on, duration in schedule:
        dev = PUMPING if pump_on else VENTED
        target = steady_state_pressure(ps, dev, params)
        last_gap = abs(ps.gauge_pressure - target)
        for _ in range(round(duration / params.dt)):
            ps = step_pressure(ps, dev, params)
            assert -60.0 - 1e-9 <= ps.gauge_pressure <= 0.0
            gap = abs(ps.gauge_pressure - target)
            assert gap <= last_gap + 1e-12
            last_gap = gap


# -- seal geometry -----------------------------------------------------------

FLAT_PATCH = SurfacePatch(
    center=np.array([0.0, 0.0, 0.01]),
    normal=np.array([0.0, 0.0, 1.0]),
    u_axis=np.array([1.0, 0.0, 0.0]),
    half_u=0.10,
    half_v=0.05,
)
DOWN = np.array([0.0, 0.0, -1.0])


def test_seal_flush_on_glass():
    cup = np.array([0.02, 0.01, 0.0105])
    assert seal_check(cup, DOWN, FLAT_PATCH, DEFAULT_MATERIALS["glass"])


def test_seal_refused_on_unsuctionable_material():
    cup = np.array([0.0, 0.0, 0.01])
    assert not seal_check(cup, DOWN, FLAT_PATCH, DEFAULT_MATERIALS["banana"])


def test_seal_refused_beyond_angle_tolerance():
    tilted = np.array([math.sin(math.radians(20.0)), 0.0, -math.cos(math.radians(20.0))])
    cup = np.array([0.0, 0.0, 0.01])
    assert not seal_check(cup, tilted, FLAT_PATCH, DEFAULT_MATERIALS["glass"], angle_tol_deg=10.0)
    barely = np.array([math.sin(math.radians(8.0)), 0.0, -math.cos(math.radians(8.0))])
    assert seal_check(cup, barely, FLAT_PATCH, DEFAULT_MATERIALS["glass"], angle_tol_deg=10.0)


def test_seal_refused_off_patch_or_standing_off():
    assert not seal_check(
        np.array([0.12, 0.0, 0.01]), DOWN, FLAT_PATCH, DEFAULT_MATERIALS["glass"]
    )
    assert not seal_check(
        np.array([0.0, 0.0, 0.02]), DOWN, FLAT_PATCH, DEFAULT_MATERIALS["glass"]
    )


def test_two_centimeter_error_fails():
    cup = np.array([0.0, 0.05 + 0.02, 0.01])  # 2 cm past the patch edge
    assert not seal_check(cup, DOWN, FLAT_PATCH, DEFAULT_MATERIALS["glass"])


# -- phase trace and material table -------------------------------------------


def test_phase_trace_shape_and_plateaus():
    rows = phase_trace(DEFAULT_MATERIALS["cardboard"], PARAMS)
    phases = {name for _, _, name in rows}
    assert phases == {"close", "open", "suction"}
    close_end = max(p for t, p, n in rows if n == "close")
    assert close_end == pytest.approx(0.0, abs=1e-6)
    open_rows = [p for t, p, n in rows if n == "open"]
    # Open: pump on, both cups leaking to air: P_ss = -60*5/35.
    assert open_rows[-1] == pytest.approx(-60.0 * 5 / 35, rel=0.02)
    suction_rows = [p for t, p, n in rows if n == "suction"]
    assert suction_rows[-1] == pytest.approx(-20.0, rel=0.02)


def test_glass_trace_final_pressure_near_rating():
    rows = phase_trace(DEFAULT_MATERIALS["glass"], PARAMS)
    assert rows[-1][1] == pytest.approx(-60.0, rel=0.02)


def test_material_table_loads(tmp_path):
    path = tmp_path / "materials.yaml"
    path.write_text(
        "- {name: felt, leak_coeff: 2.5, suctionable: true}\n"
        "- {name: mesh, leak_coeff: 9.0, suctionable: false}\n"
    )
    table = load_materials(path)
    assert table["felt"].leak_coeff == 2.5
    assert not table["mesh"].suctionable
