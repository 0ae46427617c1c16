"""Scripted prime actions: suction, grasp, and the move family.

Each primitive runs closed-loop against the scene, emitting one full
16-entry action per tick (approach, engage, actuate, retreat) so the
produced streams are valid episode steps. Feasibility is checked up
front from the same rules the scene enforces: an object wider than the
jaw stroke cannot be gripped, a non-suctionable material cannot be
sealed. Runtime failures (a seal that never forms, suction that cannot
build enough vacuum for the payload) surface as PrimitiveInfeasible with
the reason.

The non-acting arm holds its pose; its suction bit mirrors its device
state, so recorded actions only show edges where a toggle was commanded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import actions as act
from .pneumatics import GRAVITY, suction_force
from .protocol import Channel
from .scene import (
    Scene,
    SceneObject,
    V_MAX,
    W_MAX,
    rot_about_axis,
    rpy_from_matrix,
)

APPROACH_CLEARANCE = 0.06  # m above/off the target face
CONTACT_STANDOFF = 0.0005  # m, lands well inside the seal tolerance
CARRY_HEIGHT = 0.22  # m, transit height for held objects
MIN_DWELL_S = 0.2  # s, minimum vacuum build-up before lifting
MAX_DWELL_S = 3.0
MAX_MOVE_S = 20.0


class PrimitiveInfeasible(Exception):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


@dataclass(frozen=True)
class SuctionPick:
    target: str
    mode: str = "wide"  # "wide" | "point"

    def describe(self) -> str:
        return f"suction-pick[{self.mode}] {self.target}"


@dataclass(frozen=True)
class GraspPick:
    target: str

    def describe(self) -> str:
        return f"grasp-pick {self.target}"


@dataclass(frozen=True)
class Place:
    """Set the held object down, centered on a support or at (x, y)."""

    on: str | None = None
    x: float = 0.0
    y: float = 0.0
    dx: float = 0.0
    dy: float = 0.0

    def describe(self) -> str:
        where = self.on if self.on else f"({self.x:.2f}, {self.y:.2f})"
        return f"place on {where}"


@dataclass(frozen=True)
class Pull:
    target: str
    distance: float

    def describe(self) -> str:
        return f"pull {self.target} {self.distance:.2f} m"


@dataclass(frozen=True)
class Push:
    target: str
    distance: float | None = None  # None: push fully closed

    def describe(self) -> str:
        return f"push {self.target}"


@dataclass(frozen=True)
class Lift:
    target: str
    angle_deg: float  # absolute target hinge angle

    def describe(self) -> str:
        return f"lift {self.target} to {self.angle_deg:.0f} deg"


@dataclass(frozen=True)
class Press:
    target: str
    depth: float = 0.01

    def describe(self) -> str:
        return f"press {self.target}"


@dataclass(frozen=True)
class Release:
    retreat: float = 0.06

    def describe(self) -> str:
        return "release"


def rpy_for_face(normal: np.ndarray, u_axis: np.ndarray) -> np.ndarray:
    """Effector rpy that points the tool into a face, jaws along u."""
    tool = -np.asarray(normal, dtype=float)
    tool = tool / np.linalg.norm(tool)
    jaw = np.asarray(u_axis, dtype=float)
    jaw = jaw - np.dot(jaw, tool) * tool
    jaw = jaw / np.linalg.norm(jaw)
    r = np.column_stack([jaw, np.cross(-tool, jaw), -tool])
    return rpy_from_matrix(r)


def grasp_yaw(obj: SceneObject) -> float:
    """Yaw putting the jaw axis across the object's grip dimension."""
    half = obj.extents / 2.0
    local = np.array([0.0, 1.0, 0.0]) if half[1] <= half[0] else np.array([1.0, 0.0, 0.0])
    world = obj.rotation @ local
    return math.atan2(world[1], world[0])


class PrimeExecutor:
    """Drives one arm through primitives on a scene, emitting actions."""

    def __init__(self, scene: Scene, channel: Channel, on_step=None):
        self.scene = scene
        self.channel = channel
        self.on_step = on_step
        self.actions: list[np.ndarray] = []

    # -- low-level emission ------------------------------------------------

    def _effector(self):
        return self.scene.effectors[self.channel]

    def _other(self) -> Channel:
        return Channel.RIGHT if self.channel == Channel.LEFT else Channel.LEFT

    def _tick(self, position, rpy, width, suction_on: bool):
        scene = self.scene
        other = self._other()
        other_eff = scene.effectors[other]
        moving = scene.joint_map.joints_from_pose(position, rpy)
        holding = scene.joint_map.joints_from_pose(other_eff.position, other_eff.rpy)
        if self.channel == Channel.LEFT:
            left_j, right_j = moving, holding
            widths = [width, other_eff.gripper_width]
            bits = [1.0 if suction_on else 0.0, 1.0 if scene.suction_active(other) else 0.0]
        else:
            left_j, right_j = holding, moving
            widths = [other_eff.gripper_width, width]
            bits = [1.0 if scene.suction_active(other) else 0.0, 1.0 if suction_on else 0.0]
        action = act.assemble_action(left_j, right_j, widths, bits)
        if self.on_step is not None:
            self.on_step(scene, action)
        scene.step(action)
        self.actions.append(action)

    def _hold_tick(self):
        eff = self._effector()
        self._tick(eff.position, eff.rpy, eff.gripper_width, self.scene.suction_active(self.channel))

    def move_to(self, target_pos, target_rpy=None, width=None, max_s: float = MAX_MOVE_S):
        """Interpolate to a pose under the scene's own speed clamps."""
        scene = self.scene
        eff = self._effector()
        target_pos = np.asarray(target_pos, dtype=float)
        target_rpy = eff.rpy.copy() if target_rpy is None else np.asarray(target_rpy, dtype=float)
        width = eff.gripper_width if width is None else float(width)
        dt = scene.dt
        suction_on = scene.suction_active(self.channel)
        for _ in range(int(max_s / dt)):
            delta = target_pos - eff.position
            dist = float(np.linalg.norm(delta))
            step = V_MAX * dt
            next_pos = target_pos if dist <= step else eff.position + delta * (step / dist)
            next_rpy = eff.rpy + np.clip(target_rpy - eff.rpy, -W_MAX * dt, W_MAX * dt)
            self._tick(next_pos, next_rpy, width, suction_on)
            if (
                float(np.linalg.norm(eff.position - target_pos)) < 1e-9
                and float(np.max(np.abs(eff.rpy - target_rpy))) < 1e-9
                and abs(eff.gripper_width - width) < 1e-9
            ):
                return
        raise PrimitiveInfeasible(f"move did not converge within {max_s:.0f} s")

    def set_suction(self, on: bool):
        """One tick carrying the toggle edge."""
        eff = self._effector()
        self._tick(eff.position, eff.rpy, eff.gripper_width, on)

    def dwell(self, seconds: float):
        for _ in range(max(1, round(seconds / self.scene.dt))):
            self._hold_tick()

    # -- primitives ----------------------------------------------------------

    def run(self, primitive) -> list[np.ndarray]:
        start = len(self.actions)
        if isinstance(primitive, SuctionPick):
            self._suction_pick(primitive)
        elif isinstance(primitive, GraspPick):
            self._grasp_pick(primitive)
        elif isinstance(primitive, Place):
            self._place(primitive)
        elif isinstance(primitive, Pull):
            self._pull(primitive)
        elif isinstance(primitive, Push):
            self._push(primitive)
        elif isinstance(primitive, Lift):
            self._lift(primitive)
        elif isinstance(primitive, Press):
            self._press(primitive)
        elif isinstance(primitive, Release):
            self._release(primitive)
        else:
            raise PrimitiveInfeasible(f"unknown primitive {primitive!r}")
        return self.actions[start:]

    def _target(self, name: str) -> SceneObject:
        obj = self.scene.objects.get(name)
        if obj is None:
            raise PrimitiveInfeasible(f"no object named {name!r}")
        return obj

    def _suction_pick(self, prim: SuctionPick):
        scene = self.scene
        obj = self._target(prim.target)
        if not obj.material.suctionable:
            raise PrimitiveInfeasible(f"{prim.target} ({obj.material.name}) is not suctionable")
        if not obj.suction_faces:
            raise PrimitiveInfeasible(f"{prim.target} has no flat face to seal against")
        if self._effector().attached is not None:
            raise PrimitiveInfeasible("arm already holding something")
        width = scene.max_stroke if prim.mode == "wide" else 0.0
        patch = obj.world_patches()[0]
        rpy = rpy_for_face(patch.normal, patch.u_axis)
        normal = patch.normal / np.linalg.norm(patch.normal)
        self.move_to(patch.center + normal * APPROACH_CLEARANCE, rpy, width)
        self.set_suction(True)
        self.move_to(patch.center + normal * CONTACT_STANDOFF, rpy, width)
        eff = self._effector()
        waited = 0.0
        while eff.attached is None and waited < 1.0:
            self._hold_tick()
            waited += scene.dt
        if eff.attached is None:
            raise PrimitiveInfeasible(f"no seal formed on {prim.target}")
        if obj.articulation is None:
            required = obj.mass * GRAVITY * scene.safety_factor
            waited = 0.0
            while waited < MAX_DWELL_S:
                self._hold_tick()
                waited += scene.dt
                if waited >= MIN_DWELL_S and (
                    suction_force(scene.pressure[self.channel], scene.params) >= required
                ):
                    break
            else:
                raise PrimitiveInfeasible(
                    f"suction cannot hold {prim.target} ({obj.mass * 1000:.0f} g)"
                )
            lift = patch.center + normal * APPROACH_CLEARANCE
            self.move_to(lift, rpy, width)
            carry = lift.copy()
            carry[2] = max(carry[2], CARRY_HEIGHT)
            self.move_to(carry, rpy, width)

    def _grasp_pick(self, prim: GraspPick):
        scene = self.scene
        obj = self._target(prim.target)
        if obj.graspable_width is None:
            raise PrimitiveInfeasible(f"{prim.target} offers no grip for a parallel jaw")
        if obj.graspable_width > scene.max_stroke:
            raise PrimitiveInfeasible(
                f"{prim.target} needs {obj.graspable_width * 1000:.0f} mm, stroke is "
                f"{scene.max_stroke * 1000:.0f} mm"
            )
        if self._effector().attached is not None:
            raise PrimitiveInfeasible("arm already holding something")
        rpy = np.array([0.0, 0.0, grasp_yaw(obj)])
        open_width = min(scene.max_stroke, obj.graspable_width + 0.025)
        above = obj.position.copy()
        above[2] = obj.top_z + APPROACH_CLEARANCE
        self.move_to(above, rpy, open_width)
        at = obj.position.copy()
        self.move_to(at, rpy, open_width)
        # Close the jaws over a few ticks; attachment fires inside the
        # width tolerance window.
        eff = self._effector()
        close_ticks = 8
        for i in range(1, close_ticks + 1):
            w = open_width + (obj.graspable_width - open_width) * i / close_ticks
            self._tick(eff.position, eff.rpy, w, scene.suction_active(self.channel))
        if eff.attached is None or eff.attached.object_id != obj.id:
            raise PrimitiveInfeasible(f"grasp closed on empty air near {prim.target}")
        up = eff.position.copy()
        up[2] = CARRY_HEIGHT
        self.move_to(up, rpy, obj.graspable_width)

    def _support_z_at(self, obj: SceneObject, xy: np.ndarray) -> float:
        """Resting center height for obj if set down at xy."""
        probe = obj.position.copy()
        probe[0], probe[1] = xy[0], xy[1]
        _, support_z = self.scene.support_below(obj, at=probe)
        return support_z + 0.002 + obj.extents[2] / 2.0

    def _place(self, prim: Place):
        scene = self.scene
        eff = self._effector()
        if eff.attached is None:
            raise PrimitiveInfeasible("nothing held to place")
        obj = scene.objects[eff.attached.object_id]
        if prim.on is not None:
            base = self._target(prim.on)
            if base.cavity is not None:
                center = base.position + base.rotation @ np.array(
                    [0.0, 0.0, base.cavity.floor_z]
                )
            else:
                center = base.position
            xy = np.array([center[0] + prim.dx, center[1] + prim.dy])
        else:
            xy = np.array([prim.x + prim.dx, prim.y + prim.dy])
        target_center_z = self._support_z_at(obj, xy) + 0.001
        target_obj = np.array([xy[0], xy[1], target_center_z])
        was_suction = eff.attached.is_suction
        # Horizontal transit at carry height, then descend.
        transit = eff.position + (target_obj - obj.position)
        high = transit.copy()
        high[2] = max(eff.position[2], CARRY_HEIGHT)
        self.move_to(high)
        self.move_to(transit)
        if was_suction:
            self.set_suction(False)
        else:
            self._tick(eff.position, eff.rpy, obj.graspable_width + 0.03, False)
        retreat = eff.position.copy()
        retreat[2] += 0.08
        self.move_to(retreat)

    def _pull(self, prim: Pull):
        scene = self.scene
        obj = self._target(prim.target)
        eff = self._effector()
        if (
            eff.attached is None
            or eff.attached.object_id != obj.id
            or obj.articulation is None
            or obj.articulation.kind != "prismatic"
        ):
            raise PrimitiveInfeasible(f"pull needs a suction attachment on {prim.target}")
        art = obj.articulation
        goal = art.clamp(art.displacement + prim.distance)
        target = eff.position + (goal - art.displacement) * art.axis
        self.move_to(target)

    def _push(self, prim: Push):
        scene = self.scene
        obj = self._target(prim.target)
        if obj.articulation is None or obj.articulation.kind != "prismatic":
            raise PrimitiveInfeasible(f"{prim.target} is not a sliding fixture")
        if self._effector().attached is not None:
            raise PrimitiveInfeasible("cannot push while holding something")
        art = obj.articulation
        goal = art.lo if prim.distance is None else art.clamp(art.displacement - prim.distance)
        travel = art.displacement - goal
        if travel <= 0:
            return
        patch = obj.world_patches()[0]
        normal = patch.normal / np.linalg.norm(patch.normal)
        rpy = rpy_for_face(patch.normal, patch.u_axis)
        standoff = 0.04
        self.move_to(patch.center + normal * standoff, rpy, 0.0)
        eff = self._effector()
        target = eff.position - normal * (standoff + travel + 0.003)
        self.move_to(target, rpy, 0.0)
        self.move_to(eff.position + normal * APPROACH_CLEARANCE, rpy, 0.0)

    def _lift(self, prim: Lift):
        scene = self.scene
        obj = self._target(prim.target)
        eff = self._effector()
        if (
            eff.attached is None
            or eff.attached.object_id != obj.id
            or obj.articulation is None
            or obj.articulation.kind != "revolute"
        ):
            raise PrimitiveInfeasible(f"lift needs a suction attachment on {prim.target}")
        art = obj.articulation
        goal = art.clamp(math.radians(prim.angle_deg))
        dt = scene.dt
        for _ in range(int(MAX_MOVE_S / dt)):
            remaining = goal - art.displacement
            if abs(remaining) < 1e-6:
                return
            r_vec = eff.position - art.pivot
            radius = max(1e-6, float(np.linalg.norm(r_vec)))
            max_dtheta = min(V_MAX * dt / radius, W_MAX * dt)
            dtheta = math.copysign(min(abs(remaining), max_dtheta), remaining)
            rot = rot_about_axis(art.axis, dtheta)
            next_pos = art.pivot + rot @ r_vec
            next_rpy = rpy_from_matrix(rot @ eff.rotation)
            self._tick(next_pos, next_rpy, eff.gripper_width, True)
        raise PrimitiveInfeasible(f"lift stalled at {math.degrees(art.displacement):.0f} deg")

    def _press(self, prim: Press):
        obj = self._target(prim.target)
        if self._effector().attached is not None:
            raise PrimitiveInfeasible("cannot press while holding something")
        above = obj.position.copy()
        above[2] = obj.top_z + APPROACH_CLEARANCE
        rpy = np.zeros(3)
        self.move_to(above, rpy, 0.0)
        down = obj.position.copy()
        down[2] = max(0.0, obj.top_z - prim.depth)
        self.move_to(down, rpy, 0.0)
        self.move_to(above, rpy, 0.0)

    def _release(self, prim: Release):
        scene = self.scene
        eff = self._effector()
        back = eff.position - eff.tool_axis * prim.retreat
        if eff.attached is not None and eff.attached.is_suction:
            self.set_suction(False)
        elif eff.attached is not None:
            obj = scene.objects[eff.attached.object_id]
            self._tick(eff.position, eff.rpy, obj.graspable_width + 0.03, False)
        self.move_to(back)


def prime_action(
    scene: Scene, channel: Channel, primitive, on_step=None
) -> list[np.ndarray]:
    """Execute one primitive on the scene; returns the emitted actions."""
    return PrimeExecutor(scene, channel, on_step).run(primitive)
