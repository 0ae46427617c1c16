"""Scripted headless operator: opens the Task 3 drawer over the WebSocket.

Pure client-side logic: every decision comes from snapshot messages, and
in lockstep mode each input message advances exactly one sim tick, so
the recorded episode is deterministic.
"""

import math

import numpy as np

APPROACH_STANDOFF = 0.06
CONTACT_STANDOFF = 0.0005
TARGET_RPY = (math.pi / 2, 0.0, 0.0)  # tool pointing +y at the drawer front


def _arm_input(**kw):
    base = {
        "dx": 0.0,
        "dy": 0.0,
        "dz": 0.0,
        "droll": 0.0,
        "dpitch": 0.0,
        "dyaw": 0.0,
        "gripper_width": None,
        "suction_toggle_edge": False,
    }
    base.update(kw)
    return base


def _send(ws, right=None, record_control=None):
    msg = {
        "type": "input",
        "left": _arm_input(),
        "right": right or _arm_input(),
        "record_control": record_control,
    }
    ws.send_json(msg)
    ack = ws.receive_json()
    assert ack["type"] == "ack", ack
    return ack


def _right_state(ack):
    eff = ack["snapshot"]["effectors"]["right"]
    return np.array(eff["position"]), np.array(eff["rpy"]), eff


def _drawer(ack):
    for obj in ack["snapshot"]["objects"]:
        if obj["id"] == "drawer":
            return obj
    raise AssertionError("no drawer in snapshot")


def _face_center(drawer_obj):
    pos = np.array(drawer_obj["position"])
    half_y = drawer_obj["extents"][1] / 2.0
    return pos + np.array([0.0, -half_y, 0.0])


def _goto(ws, ack, target_pos, target_rpy, max_ticks=400):
    """P-control jog toward a pose; the session clamps per-tick speed."""
    target_rpy = np.asarray(target_rpy)
    for _ in range(max_ticks):
        pos, rpy, _ = _right_state(ack)
        dp = target_pos - pos
        dr = target_rpy - rpy
        if np.linalg.norm(dp) < 5e-4 and np.max(np.abs(dr)) < 5e-3:
            return ack
        ack = _send(
            ws,
            right=_arm_input(
                dx=float(dp[0]), dy=float(dp[1]), dz=float(dp[2]),
                droll=float(dr[0]), dpitch=float(dr[1]), dyaw=float(dr[2]),
            ),
        )
    raise AssertionError("jog did not converge")


def drive_task3(ws) -> dict:
    """Record one drawer-opening demonstration; returns the final ack."""
    ack = _send(
        ws,
        right=_arm_input(gripper_width=0.0),
        record_control={
            "kind": "start",
            "task_id": "3",
            "instruction": "open the handleless drawer",
            "arm": "right",
        },
    )
    assert ack["recording"]["active"]

    face = _face_center(_drawer(ack))
    ack = _goto(ws, ack, face + np.array([0.0, -APPROACH_STANDOFF, 0.0]), TARGET_RPY)

    # Footswitch press: exactly one edge, pump confirms on.
    ack = _send(ws, right=_arm_input(suction_toggle_edge=True))
    assert ack["suction"]["right"] is True

    ack = _send(
        ws,
        right=_arm_input(),
        record_control={"kind": "mark_subtask", "text": "use the right arm to suction the drawer"},
    )
    ack = _goto(ws, ack, face + np.array([0.0, -CONTACT_STANDOFF, 0.0]), TARGET_RPY)
    assert ack["snapshot"]["effectors"]["right"]["attached"] == "drawer"

    # Pull the drawer open past the 0.15 m goal.
    pos, _, _ = _right_state(ack)
    ack = _goto(ws, ack, pos + np.array([0.0, -0.18, 0.0]), TARGET_RPY)
    assert _drawer(ack)["displacement"] >= 0.15

    # Footswitch again: suction off.
    ack = _send(ws, right=_arm_input(suction_toggle_edge=True))
    assert ack["suction"]["right"] is False

    ack = _send(ws, record_control={"kind": "stop", "save": True})
    assert not ack["recording"]["active"]
    assert ack["last_saved"]
    return ack
