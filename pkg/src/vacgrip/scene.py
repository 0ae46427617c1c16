"""Deterministic fixed-step kinematic world for the four household tasks.

Everything is kinematic: no dynamics, no friction, no collision response.
Gravity exists only as the payload hold check (a suction attachment to an
unsupported object breaks when the line's force drops below the object's
weight times the safety factor) and the drop-to-support rule on release.
The interesting physics lives in the pneumatics module; this module owns
poses, attachments and articulation.

Conventions:
  - World frame: z up, table surface at z = 0. Object poses are box
    centers with a full rotation matrix (free objects only ever rotate
    about z; articulated flaps tilt).
  - Effector frame at rpy = (0,0,0): tool axis points straight down, the
    two cups sit on the jaws at +-(width/2) along the x (jaw) axis, so
    cup spacing equals gripper width: maximal at full stroke, minimal at
    zero.
  - Arm actions are 8-vectors: six joint values, gripper width, suction
    bit. Joints map to effector pose through a linear JointMap stand-in
    (real arm kinematics are vendor-specific and out of scope).

Determinism: stepping is pure float arithmetic over ordered containers,
so identical (initial state, action stream) pairs produce bit-identical
trajectories; snapshots serialize losslessly through JSON.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from . import actions as act
from .firmware import DeviceEmulator
from .pneumatics import (
    DEFAULT_MATERIALS,
    DEFAULT_SAFETY_FACTOR,
    GRAVITY,
    MaterialProfile,
    PneumaticParams,
    PressureState,
    SurfacePatch,
    leak_rate,
    seal_check,
    step_pressure,
    suction_force,
)
from .protocol import Channel, CommandFrame, CommandKind

MAX_STROKE = 0.07  # m, vendor-typical parallel jaw stroke
V_MAX = 0.5  # m/s per-step effector speed clamp
W_MAX = 2.0  # rad/s per-step angular speed clamp
GRASP_TOL = 0.010  # m, jaw width window around graspable_width
CAPTURE_RADIUS = 0.04  # m, horizontal reach of a grasp attempt
SUPPORT_SNAP = 0.002  # m, rest height above a support surface


def rot_z(yaw: float) -> np.ndarray:
    c, s = math.cos(yaw), math.sin(yaw)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rot_rpy(roll: float, pitch: float, yaw: float) -> np.ndarray:
    """R = Rz(yaw) @ Ry(pitch) @ Rx(roll)."""
    cr, sr = math.cos(roll), math.sin(roll)
    cp, sp = math.cos(pitch), math.sin(pitch)
    cy, sy = math.cos(yaw), math.sin(yaw)
    return np.array(
        [
            [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
            [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
            [-sp, cp * sr, cp * cr],
        ]
    )


def rpy_from_matrix(r: np.ndarray) -> np.ndarray:
    """Inverse of rot_rpy for non-degenerate pitch."""
    pitch = -math.asin(max(-1.0, min(1.0, r[2, 0])))
    roll = math.atan2(r[2, 1], r[2, 2])
    yaw = math.atan2(r[1, 0], r[0, 0])
    return np.array([roll, pitch, yaw])


def rot_about_axis(axis: np.ndarray, angle: float) -> np.ndarray:
    """Rodrigues rotation about a unit axis."""
    x, y, z = axis
    c, s = math.cos(angle), math.sin(angle)
    k = np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])
    return np.eye(3) + s * k + (1 - c) * (k @ k)


@dataclass(frozen=True)
class JointMap:
    """Linear stand-in for arm kinematics: joints <-> effector pose.

    Joints 0..2 map affinely to position, joints 3..5 are roll/pitch/yaw
    directly. Bijective on the workspace by construction.
    """

    origin: tuple[float, float, float] = (0.0, 0.0, 0.0)
    scale: float = 1.0

    def pose_from_joints(self, joints: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        j = np.asarray(joints, dtype=float)
        return np.asarray(self.origin) + self.scale * j[:3], j[3:6].copy()

    def joints_from_pose(self, position: np.ndarray, rpy: np.ndarray) -> np.ndarray:
        p = (np.asarray(position, dtype=float) - np.asarray(self.origin)) / self.scale
        return np.concatenate([p, np.asarray(rpy, dtype=float)])


@dataclass
class LocalPatch:
    """Suction face in object-local coordinates."""

    center: np.ndarray
    normal: np.ndarray
    u_axis: np.ndarray
    half_u: float
    half_v: float

    def world(self, position: np.ndarray, rotation: np.ndarray) -> SurfacePatch:
        return SurfacePatch(
            center=position + rotation @ self.center,
            normal=rotation @ self.normal,
            u_axis=rotation @ self.u_axis,
            half_u=self.half_u,
            half_v=self.half_v,
        )


_FACE_DEFS = {
    # name: (normal, in-plane axes)
    "top": ((0, 0, 1), (0, 1)),
    "bottom": ((0, 0, -1), (0, 1)),
    "front": ((0, -1, 0), (0, 2)),
    "back": ((0, 1, 0), (0, 2)),
    "left": ((-1, 0, 0), (1, 2)),
    "right": ((1, 0, 0), (1, 2)),
}


def named_face_patch(extents: np.ndarray, name: str) -> LocalPatch:
    """Expand a named box face into a local patch, u along the longer side."""
    normal, (a, b) = _FACE_DEFS[name]
    normal = np.array(normal, dtype=float)
    half = np.asarray(extents, dtype=float) / 2.0
    center = normal * half[np.argmax(np.abs(normal))]
    axes = [np.zeros(3), np.zeros(3)]
    axes[0][a] = 1.0
    axes[1][b] = 1.0
    if half[a] >= half[b]:
        u, hu, hv = axes[0], half[a], half[b]
    else:
        u, hu, hv = axes[1], half[b], half[a]
    # Keep (u, v, normal) right-handed; v = normal x u.
    return LocalPatch(center=center, normal=normal, u_axis=u, half_u=hu, half_v=hv)


@dataclass
class Articulation:
    """One-DOF joint of a fixture's movable part.

    Prismatic: part pose = home pose translated by displacement * axis.
    Revolute: part pose = home pose rotated by displacement about the
    hinge line (pivot, axis); ref_dir is the zero-angle direction used to
    measure the drive angle from an effector position.
    """

    kind: str  # "prismatic" | "revolute"
    axis: np.ndarray
    lo: float
    hi: float
    displacement: float = 0.0
    pivot: np.ndarray | None = None
    ref_dir: np.ndarray | None = None

    def clamp(self, value: float) -> float:
        return min(self.hi, max(self.lo, value))


@dataclass
class Cavity:
    """Interior support volume of a container-like object (local frame)."""

    floor_z: float  # local z of the interior floor
    half_x: float
    half_y: float
    depth: float  # interior height above the floor


class AttachMode:
    GRASP = "grasp"
    SUCTION_WIDE = "suction_wide"
    SUCTION_POINT = "suction_point"


@dataclass
class Attachment:
    object_id: str
    mode: str
    # Rigid-follow reference (free objects).
    eff_position: np.ndarray | None = None
    eff_rotation: np.ndarray | None = None
    obj_position: np.ndarray | None = None
    obj_rotation: np.ndarray | None = None
    # Articulation drive reference.
    dof_offset: float = 0.0

    @property
    def is_suction(self) -> bool:
        return self.mode in (AttachMode.SUCTION_WIDE, AttachMode.SUCTION_POINT)


@dataclass
class AttachResult:
    """Outcome of a grasp or suction attempt, with per-cup diagnostics."""

    attached: bool
    object_id: str | None = None
    mode: str | None = None
    cup_sealed: tuple[bool, bool] = (False, False)
    reason: str = ""


@dataclass
class SceneObject:
    id: str
    extents: np.ndarray  # (3,) full box sizes
    position: np.ndarray  # (3,) center
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    mass: float = 0.1
    material: MaterialProfile = DEFAULT_MATERIALS["plastic"]
    graspable_width: float | None = None
    suction_faces: list[LocalPatch] = field(default_factory=list)
    articulation: Articulation | None = None
    cavity: Cavity | None = None
    fixture: bool = False  # static scenery, never jittered or moved
    supported_by: str = "table"
    # Home pose for articulated parts (world pose at displacement zero).
    home_position: np.ndarray | None = None
    home_rotation: np.ndarray | None = None

    def __post_init__(self):
        self.extents = np.asarray(self.extents, dtype=float)
        self.position = np.asarray(self.position, dtype=float)
        self.rotation = np.asarray(self.rotation, dtype=float)
        if self.articulation is not None and self.home_position is None:
            self.home_position = self.position.copy()
            self.home_rotation = self.rotation.copy()

    @property
    def base_z(self) -> float:
        return self.position[2] - self.extents[2] / 2.0

    @property
    def top_z(self) -> float:
        return self.position[2] + self.extents[2] / 2.0

    def world_patches(self) -> list[SurfacePatch]:
        return [p.world(self.position, self.rotation) for p in self.suction_faces]

    def apply_articulation(self):
        """Recompute world pose from home pose and current displacement."""
        art = self.articulation
        if art is None:
            return
        if art.kind == "prismatic":
            self.position = self.home_position + art.displacement * art.axis
            self.rotation = self.home_rotation.copy()
        else:
            r = rot_about_axis(art.axis, art.displacement)
            self.rotation = r @ self.home_rotation
            self.position = art.pivot + r @ (self.home_position - art.pivot)

    def cavity_contains(self, point: np.ndarray) -> bool:
        if self.cavity is None:
            return False
        local = self.rotation.T @ (np.asarray(point) - self.position)
        if abs(local[0]) > self.cavity.half_x or abs(local[1]) > self.cavity.half_y:
            return False
        return self.cavity.floor_z - 0.005 <= local[2] <= self.cavity.floor_z + self.cavity.depth

    def cavity_floor_world_z(self) -> float:
        return float(self.position[2] + self.cavity.floor_z)


@dataclass
class EndEffector:
    channel: Channel
    position: np.ndarray
    rpy: np.ndarray = field(default_factory=lambda: np.zeros(3))
    gripper_width: float = MAX_STROKE
    attached: Attachment | None = None

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)
        self.rpy = np.asarray(self.rpy, dtype=float)

    @property
    def rotation(self) -> np.ndarray:
        return rot_rpy(*self.rpy)

    @property
    def tool_axis(self) -> np.ndarray:
        return self.rotation @ np.array([0.0, 0.0, -1.0])

    @property
    def jaw_axis(self) -> np.ndarray:
        return self.rotation @ np.array([1.0, 0.0, 0.0])

    def cup_positions(self) -> tuple[np.ndarray, np.ndarray]:
        offset = (self.gripper_width / 2.0) * self.jaw_axis
        return self.position - offset, self.position + offset


class WorkspaceViolation(Exception):
    """Raised only when strict stepping is requested; normally a flag."""


class Scene:
    """The world: objects, dual effectors, devices and pneumatics."""

    def __init__(
        self,
        objects: list[SceneObject],
        effectors: dict[Channel, EndEffector],
        materials: dict[str, MaterialProfile] | None = None,
        params: PneumaticParams | None = None,
        workspace_lo=(-0.8, -0.8, 0.0),
        workspace_hi=(0.8, 0.8, 0.8),
        joint_map: JointMap | None = None,
        max_stroke: float = MAX_STROKE,
        safety_factor: float = DEFAULT_SAFETY_FACTOR,
        rate_hz: float = 30.0,
        name: str = "scene",
    ):
        self.name = name
        self.objects: dict[str, SceneObject] = {o.id: o for o in objects}
        self.effectors = effectors
        self.materials = materials or dict(DEFAULT_MATERIALS)
        self.rate_hz = rate_hz
        self.params = params or PneumaticParams(dt=1.0 / rate_hz)
        self.workspace_lo = np.asarray(workspace_lo, dtype=float)
        self.workspace_hi = np.asarray(workspace_hi, dtype=float)
        self.joint_map = joint_map or JointMap()
        self.max_stroke = max_stroke
        self.safety_factor = safety_factor
        self.pressure: dict[Channel, PressureState] = {
            ch: PressureState() for ch in effectors
        }
        self.devices: dict[Channel, DeviceEmulator] = {
            ch: DeviceEmulator(ch, pressure_source=self._pressure_reader(ch))
            for ch in effectors
        }
        self.tick_count = 0
        self.workspace_violations = 0
        self.events: list[tuple] = []

    def _pressure_reader(self, channel: Channel):
        return lambda: self.pressure[channel].gauge_pressure

    # -- queries ---------------------------------------------------------

    @property
    def dt(self) -> float:
        return 1.0 / self.rate_hz

    @property
    def time_s(self) -> float:
        return self.tick_count * self.dt

    def suction_active(self, channel: Channel) -> bool:
        return self.devices[channel].state.suction_active

    def proprio(self) -> np.ndarray:
        """Current 14-entry proprioception; carries no suction content."""
        left = self.effectors[Channel.LEFT]
        right = self.effectors[Channel.RIGHT]
        return act.assemble_proprio(
            self.joint_map.joints_from_pose(left.position, left.rpy),
            self.joint_map.joints_from_pose(right.position, right.rpy),
            [left.gripper_width, right.gripper_width],
        )

    def hold_action(self) -> np.ndarray:
        """Action that echoes the current state (a fixed point of step)."""
        left = self.effectors[Channel.LEFT]
        right = self.effectors[Channel.RIGHT]
        return act.assemble_action(
            self.joint_map.joints_from_pose(left.position, left.rpy),
            self.joint_map.joints_from_pose(right.position, right.rpy),
            [left.gripper_width, right.gripper_width],
            [1.0 if self.suction_active(Channel.LEFT) else 0.0,
             1.0 if self.suction_active(Channel.RIGHT) else 0.0],
        )

    def attached_object(self, channel: Channel) -> SceneObject | None:
        eff = self.effectors[channel]
        if eff.attached is None:
            return None
        return self.objects[eff.attached.object_id]

    # -- support and articulation ----------------------------------------

    def support_below(self, obj: SceneObject, at: np.ndarray | None = None) -> tuple[str, float]:
        """Highest support surface under an object's center: (id, top z).

        An object over a container rests on the interior floor when its
        footprint fits through the opening, otherwise on the rim (this is
        how a lid sits back on its container instead of falling in).
        """
        point = obj.position if at is None else np.asarray(at, dtype=float)
        half = np.abs(obj.rotation) @ (obj.extents / 2.0)
        base_z = point[2] - obj.extents[2] / 2.0
        best = ("table", 0.0)
        for other in self.objects.values():
            if other.id == obj.id or other.cavity is None:
                continue
            local = other.rotation.T @ (point - other.position)
            if abs(local[0]) > other.cavity.half_x or abs(local[1]) > other.cavity.half_y:
                continue
            fits = (
                half[0] <= other.cavity.half_x + 1e-9
                and half[1] <= other.cavity.half_y + 1e-9
            )
            cand = other.cavity_floor_world_z() if fits else other.top_z
            if cand > best[1] and cand <= base_z + 0.05:
                best = (other.id, cand)
        return best

    def drop_to_support(self, obj: SceneObject):
        support_id, support_z = self.support_below(obj)
        obj.position[2] = support_z + SUPPORT_SNAP + obj.extents[2] / 2.0
        obj.supported_by = support_id

    def object_supported(self, obj: SceneObject) -> bool:
        _, support_z = self.support_below(obj)
        return obj.base_z <= support_z + SUPPORT_SNAP + 0.002

    def _move_riders(self, fixture: SceneObject, delta: np.ndarray):
        for other in self.objects.values():
            if other.supported_by == fixture.id:
                other.position = other.position + delta

    def _set_displacement(self, obj: SceneObject, value: float):
        art = obj.articulation
        new = art.clamp(value)
        if new == art.displacement:
            return
        old_pos = obj.position.copy()
        art.displacement = new
        obj.apply_articulation()
        if art.kind == "prismatic":
            self._move_riders(obj, obj.position - old_pos)

    # -- suction command path ---------------------------------------------

    def set_suction(self, channel: Channel, on: bool):
        """Route a suction command through the channel's device emulator."""
        kind = CommandKind.TURN_ON if on else CommandKind.TURN_OFF
        self.devices[channel].handle(CommandFrame(kind, channel))
        if not on:
            self._clear_suction(channel)

    def _clear_suction(self, channel: Channel):
        eff = self.effectors[channel]
        self.pressure[channel] = replace(
            self.pressure[channel],
            cup_sealed=(False, False),
            contact_material=(None, None),
        )
        if eff.attached is not None and eff.attached.is_suction:
            obj = self.objects[eff.attached.object_id]
            eff.attached = None
            if obj.articulation is None:
                self.drop_to_support(obj)

    # -- attachment attempts ----------------------------------------------

    def _held_object_ids(self) -> list[str]:
        return [
            eff.attached.object_id
            for eff in self.effectors.values()
            if eff.attached is not None
        ]

    def try_suction(self, channel: Channel, mode: str | None = None) -> AttachResult:
        """Attempt to seal the channel's cups on one object and attach.

        Requires suction to be commanded on. Attaches when at least one
        cup seals and the predicted steady-state force meets the hold
        requirement (weight with margin for free objects, any vacuum for
        articulated parts).
        """
        eff = self.effectors[channel]
        if not self.suction_active(channel):
            return AttachResult(False, reason="suction not commanded on")
        if eff.attached is not None:
            return AttachResult(False, reason="arm already attached")
        if mode is None:
            mode = (
                AttachMode.SUCTION_WIDE
                if eff.gripper_width >= 0.5 * self.max_stroke
                else AttachMode.SUCTION_POINT
            )
        cups = eff.cup_positions()
        held = self._held_object_ids()
        target: SceneObject | None = None
        sealed = [False, False]
        for obj in self.objects.values():
            if not obj.suction_faces or not obj.material.suctionable:
                continue
            if obj.id in held:  # an object attaches to at most one arm
                continue
            hits = [
                any(
                    seal_check(cup, eff.tool_axis, patch, obj.material)
                    for patch in obj.world_patches()
                )
                for cup in cups
            ]
            if any(hits):
                target, sealed = obj, hits
                break
        if target is None:
            return AttachResult(False, cup_sealed=(False, False), reason="no seal")
        trial = replace(
            self.pressure[channel],
            cup_sealed=tuple(sealed),
            contact_material=tuple(target.material if s else None for s in sealed),
        )
        k_leak = leak_rate(trial, self.params)
        p_ss = self.params.p_min * self.params.k_pump / (self.params.k_pump + k_leak)
        force_ss = sum(sealed) * abs(p_ss) * 1000.0 * self.params.cup_area
        if target.articulation is None:
            required = target.mass * GRAVITY * self.safety_factor
        else:
            required = 0.0
        if force_ss < required:
            return AttachResult(
                False,
                object_id=target.id,
                cup_sealed=tuple(sealed),
                reason=f"steady-state force {force_ss:.2f} N < required {required:.2f} N",
            )
        self.pressure[channel] = trial
        attachment = Attachment(object_id=target.id, mode=mode)
        if target.articulation is None:
            attachment.eff_position = eff.position.copy()
            attachment.eff_rotation = eff.rotation.copy()
            attachment.obj_position = target.position.copy()
            attachment.obj_rotation = target.rotation.copy()
        else:
            attachment.dof_offset = (
                self._measure_dof(target, eff.position) - target.articulation.displacement
            )
        eff.attached = attachment
        return AttachResult(True, target.id, mode, tuple(sealed))

    def try_grasp(self, channel: Channel) -> AttachResult:
        """Attempt a two-finger grasp at the current jaw width."""
        eff = self.effectors[channel]
        if eff.attached is not None:
            return AttachResult(False, reason="arm already attached")
        best = None
        best_dist = CAPTURE_RADIUS
        held = self._held_object_ids()
        for obj in self.objects.values():
            if obj.graspable_width is None or obj.fixture or obj.id in held:
                continue
            if obj.graspable_width > self.max_stroke:
                continue
            if abs(eff.gripper_width - obj.graspable_width) > GRASP_TOL:
                continue
            horiz = float(np.linalg.norm((eff.position - obj.position)[:2]))
            if horiz > CAPTURE_RADIUS:
                continue
            if not (obj.base_z - 0.01 <= eff.position[2] <= obj.top_z + 0.02):
                continue
            if horiz < best_dist:
                best, best_dist = obj, horiz
        if best is None:
            return AttachResult(False, reason="no graspable object between jaws")
        eff.attached = Attachment(
            object_id=best.id,
            mode=AttachMode.GRASP,
            eff_position=eff.position.copy(),
            eff_rotation=eff.rotation.copy(),
            obj_position=best.position.copy(),
            obj_rotation=best.rotation.copy(),
        )
        return AttachResult(True, best.id, AttachMode.GRASP, (False, False))

    def _measure_dof(self, obj: SceneObject, eff_position: np.ndarray) -> float:
        art = obj.articulation
        if art.kind == "prismatic":
            return float(np.dot(eff_position - art.pivot, art.axis))
        r = eff_position - art.pivot
        r_perp = r - np.dot(r, art.axis) * art.axis
        norm = float(np.linalg.norm(r_perp))
        if norm < 1e-9:
            return art.displacement
        ref = art.ref_dir
        sin_term = float(np.dot(np.cross(ref, r_perp / norm), art.axis))
        cos_term = float(np.dot(ref, r_perp / norm))
        return math.atan2(sin_term, cos_term)

    # -- stepping ----------------------------------------------------------

    def step(self, action, dt: float | None = None) -> "Scene":
        """Advance one tick under a 16-entry action. Returns self."""
        dt = self.dt if dt is None else dt
        left_j, right_j, widths, suction = act.split_action(action)
        per_arm = {
            Channel.LEFT: (left_j, widths[0], suction[0]),
            Channel.RIGHT: (right_j, widths[1], suction[1]),
        }
        for channel, (joints, width, bit) in per_arm.items():
            eff = self.effectors[channel]
            prev_position = eff.position.copy()
            prev_rotation = eff.rotation.copy()

            target_pos, target_rpy = self.joint_map.pose_from_joints(joints)
            delta = target_pos - eff.position
            dist = float(np.linalg.norm(delta))
            max_step = V_MAX * dt
            if dist > max_step:
                eff.position = eff.position + delta * (max_step / dist)
            else:
                eff.position = target_pos.copy()
            dr = np.clip(target_rpy - eff.rpy, -W_MAX * dt, W_MAX * dt)
            eff.rpy = eff.rpy + dr

            clamped = np.clip(eff.position, self.workspace_lo, self.workspace_hi)
            if not np.array_equal(clamped, eff.position):
                self.workspace_violations += 1
                self.events.append(("workspace_violation", channel.name, self.tick_count))
                eff.position = clamped

            eff.gripper_width = float(min(self.max_stroke, max(0.0, width)))

            want_on = bool(bit)
            if want_on != self.suction_active(channel):
                self.set_suction(channel, want_on)

            self._follow_attachment(channel, prev_position, prev_rotation)

        self._push_contacts()
        self._auto_attach()
        self._grasp_release_check()
        for channel in self.effectors:
            self.pressure[channel] = step_pressure(
                self.pressure[channel], self.devices[channel].state, self.params
            )
        self._suction_break_check()
        for dev in self.devices.values():
            dev.tick()
        self.tick_count += 1
        return self

    def _follow_attachment(self, channel: Channel, prev_pos, prev_rot):
        eff = self.effectors[channel]
        if eff.attached is None:
            return
        obj = self.objects[eff.attached.object_id]
        if obj.articulation is not None:
            self._set_displacement(
                obj, self._measure_dof(obj, eff.position) - eff.attached.dof_offset
            )
            return
        a = eff.attached
        delta_rot = eff.rotation @ a.eff_rotation.T
        obj.rotation = delta_rot @ a.obj_rotation
        obj.position = eff.position + delta_rot @ (a.obj_position - a.eff_position)
        obj.supported_by = ""

    # An effector engages a fixture face only from just past the plane;
    # beyond this the jaw has clearly moved through open space instead.
    PUSH_ENGAGE = 0.05

    def _push_contacts(self):
        """Jaw contact closing articulated fixtures (no attachment needed)."""
        for obj in self.objects.values():
            art = obj.articulation
            if art is None or art.kind != "prismatic" or not obj.suction_faces:
                continue
            patch = obj.suction_faces[0]
            face_home = obj.home_position + obj.home_rotation @ patch.center
            face_offset = float(np.dot(face_home - art.pivot, art.axis))
            for eff in self.effectors.values():
                if eff.attached is not None and eff.attached.object_id == obj.id:
                    continue
                proj = float(np.dot(eff.position - art.pivot, art.axis)) - face_offset
                if not (art.displacement - self.PUSH_ENGAGE < proj < art.displacement):
                    continue
                face_now = face_home + art.displacement * art.axis
                world_u = obj.home_rotation @ patch.u_axis
                world_n = obj.home_rotation @ patch.normal
                world_v = np.cross(world_n, world_u)
                rel = eff.position - face_now
                if abs(float(np.dot(rel, world_u))) > patch.half_u + 0.01:
                    continue
                if abs(float(np.dot(rel, world_v))) > patch.half_v + 0.01:
                    continue
                self._set_displacement(obj, proj)

    def _auto_attach(self):
        for channel, eff in self.effectors.items():
            if eff.attached is not None:
                continue
            if self.suction_active(channel):
                self.try_suction(channel)
            else:
                self.try_grasp(channel)

    def _grasp_release_check(self):
        for channel, eff in self.effectors.items():
            if eff.attached is None or eff.attached.mode != AttachMode.GRASP:
                continue
            obj = self.objects[eff.attached.object_id]
            if eff.gripper_width > obj.graspable_width + GRASP_TOL:
                eff.attached = None
                self.drop_to_support(obj)

    def _suction_break_check(self):
        for channel, eff in self.effectors.items():
            if eff.attached is None or not eff.attached.is_suction:
                continue
            obj = self.objects[eff.attached.object_id]
            if not self.suction_active(channel):
                self._clear_suction(channel)
                continue
            if obj.articulation is not None:
                continue
            if self.object_supported(obj):
                continue
            force = suction_force(self.pressure[channel], self.params)
            required = obj.mass * GRAVITY * self.safety_factor
            if force < required:
                self.events.append(
                    ("attachment_lost", channel.name, obj.id, self.tick_count)
                )
                eff.attached = None
                self.pressure[channel] = replace(
                    self.pressure[channel],
                    cup_sealed=(False, False),
                    contact_material=(None, None),
                )
                self.drop_to_support(obj)

    # -- serialization -----------------------------------------------------

    def snapshot(self) -> dict:
        """Display-oriented view of the scene (not a full state capture)."""
        objects = []
        for obj in self.objects.values():
            rec = {
                "id": obj.id,
                "position": obj.position.tolist(),
                "yaw": float(math.atan2(obj.rotation[1, 0], obj.rotation[0, 0])),
                "extents": obj.extents.tolist(),
                "fixture": obj.fixture,
            }
            if obj.articulation is not None:
                rec["displacement"] = obj.articulation.displacement
            objects.append(rec)
        effectors = {}
        for channel, eff in self.effectors.items():
            sealed = self.pressure[channel].cup_sealed
            cups = eff.cup_positions()
            effectors[channel.name.lower()] = {
                "position": eff.position.tolist(),
                "rpy": eff.rpy.tolist(),
                "gripper_width": eff.gripper_width,
                "suction_on": self.suction_active(channel),
                "attached": eff.attached.object_id if eff.attached else None,
                "cups": [
                    {"position": cup.tolist(), "sealed": bool(s)}
                    for cup, s in zip(cups, sealed)
                ],
            }
        return {
            "tick": self.tick_count,
            "time_s": self.time_s,
            "objects": objects,
            "effectors": effectors,
            "pressure_kpa": {
                ch.name.lower(): self.pressure[ch].gauge_pressure for ch in self.effectors
            },
        }

    def to_dict(self) -> dict:
        """Full lossless state capture for replay and persistence."""
        objects = []
        for obj in self.objects.values():
            rec = {
                "id": obj.id,
                "extents": obj.extents.tolist(),
                "position": obj.position.tolist(),
                "rotation": obj.rotation.reshape(-1).tolist(),
                "mass": obj.mass,
                "material": obj.material.name,
                "graspable_width": obj.graspable_width,
                "fixture": obj.fixture,
                "supported_by": obj.supported_by,
                "suction_faces": [
                    {
                        "center": p.center.tolist(),
                        "normal": p.normal.tolist(),
                        "u_axis": p.u_axis.tolist(),
                        "half_u": p.half_u,
                        "half_v": p.half_v,
                    }
                    for p in obj.suction_faces
                ],
            }
            if obj.articulation is not None:
                art = obj.articulation
                rec["articulation"] = {
                    "kind": art.kind,
                    "axis": art.axis.tolist(),
                    "lo": art.lo,
                    "hi": art.hi,
                    "displacement": art.displacement,
                    "pivot": art.pivot.tolist() if art.pivot is not None else None,
                    "ref_dir": art.ref_dir.tolist() if art.ref_dir is not None else None,
                }
                rec["home_position"] = obj.home_position.tolist()
                rec["home_rotation"] = obj.home_rotation.reshape(-1).tolist()
            if obj.cavity is not None:
                rec["cavity"] = {
                    "floor_z": obj.cavity.floor_z,
                    "half_x": obj.cavity.half_x,
                    "half_y": obj.cavity.half_y,
                    "depth": obj.cavity.depth,
                }
            objects.append(rec)
        effectors = {}
        for channel, eff in self.effectors.items():
            rec = {
                "position": eff.position.tolist(),
                "rpy": eff.rpy.tolist(),
                "gripper_width": eff.gripper_width,
            }
            if eff.attached is not None:
                a = eff.attached
                rec["attached"] = {
                    "object_id": a.object_id,
                    "mode": a.mode,
                    "eff_position": a.eff_position.tolist() if a.eff_position is not None else None,
                    "eff_rotation": a.eff_rotation.reshape(-1).tolist()
                    if a.eff_rotation is not None
                    else None,
                    "obj_position": a.obj_position.tolist() if a.obj_position is not None else None,
                    "obj_rotation": a.obj_rotation.reshape(-1).tolist()
                    if a.obj_rotation is not None
                    else None,
                    "dof_offset": a.dof_offset,
                }
            effectors[channel.name.lower()] = rec
        return {
            "name": self.name,
            "rate_hz": self.rate_hz,
            "tick": self.tick_count,
            "workspace_lo": self.workspace_lo.tolist(),
            "workspace_hi": self.workspace_hi.tolist(),
            "max_stroke": self.max_stroke,
            "safety_factor": self.safety_factor,
            "joint_map": {"origin": list(self.joint_map.origin), "scale": self.joint_map.scale},
            "params": {
                "p_min": self.params.p_min,
                "k_pump": self.params.k_pump,
                "k_vent": self.params.k_vent,
                "k_open_cup": self.params.k_open_cup,
                "cup_diameter": self.params.cup_diameter,
                "dt": self.params.dt,
            },
            "materials": [
                {"name": m.name, "leak_coeff": m.leak_coeff, "suctionable": m.suctionable}
                for m in self.materials.values()
            ],
            "objects": objects,
            "effectors": effectors,
            "devices": {
                ch.name.lower(): {
                    "pump_on": dev.state.pump_on,
                    "valve_closed": dev.state.valve_closed,
                    "uptime_ticks": dev.state.uptime_ticks,
                }
                for ch, dev in self.devices.items()
            },
            "pressure": {
                ch.name.lower(): {
                    "gauge_pressure": ps.gauge_pressure,
                    "cup_sealed": list(ps.cup_sealed),
                    "contact_material": [
                        m.name if m is not None else None for m in ps.contact_material
                    ],
                }
                for ch, ps in self.pressure.items()
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Scene":
        materials = {
            m["name"]: MaterialProfile(m["name"], m["leak_coeff"], m["suctionable"])
            for m in data["materials"]
        }
        objects = []
        for rec in data["objects"]:
            art = None
            if "articulation" in rec:
                a = rec["articulation"]
                art = Articulation(
                    kind=a["kind"],
                    axis=np.array(a["axis"]),
                    lo=a["lo"],
                    hi=a["hi"],
                    displacement=a["displacement"],
                    pivot=np.array(a["pivot"]) if a["pivot"] is not None else None,
                    ref_dir=np.array(a["ref_dir"]) if a["ref_dir"] is not None else None,
                )
            cavity = None
            if "cavity" in rec:
                c = rec["cavity"]
                cavity = Cavity(c["floor_z"], c["half_x"], c["half_y"], c["depth"])
            obj = SceneObject(
                id=rec["id"],
                extents=np.array(rec["extents"]),
                position=np.array(rec["position"]),
                rotation=np.array(rec["rotation"]).reshape(3, 3),
                mass=rec["mass"],
                material=materials[rec["material"]],
                graspable_width=rec["graspable_width"],
                suction_faces=[
                    LocalPatch(
                        center=np.array(p["center"]),
                        normal=np.array(p["normal"]),
                        u_axis=np.array(p["u_axis"]),
                        half_u=p["half_u"],
                        half_v=p["half_v"],
                    )
                    for p in rec["suction_faces"]
                ],
                articulation=art,
                cavity=cavity,
                fixture=rec["fixture"],
                supported_by=rec["supported_by"],
                home_position=np.array(rec["home_position"]) if "home_position" in rec else None,
                home_rotation=np.array(rec["home_rotation"]).reshape(3, 3)
                if "home_rotation" in rec
                else None,
            )
            objects.append(obj)
        effectors = {}
        for name, rec in data["effectors"].items():
            channel = Channel.LEFT if name == "left" else Channel.RIGHT
            eff = EndEffector(
                channel=channel,
                position=np.array(rec["position"]),
                rpy=np.array(rec["rpy"]),
                gripper_width=rec["gripper_width"],
            )
            if "attached" in rec:
                a = rec["attached"]
                eff.attached = Attachment(
                    object_id=a["object_id"],
                    mode=a["mode"],
                    eff_position=np.array(a["eff_position"])
                    if a["eff_position"] is not None
                    else None,
                    eff_rotation=np.array(a["eff_rotation"]).reshape(3, 3)
                    if a["eff_rotation"] is not None
                    else None,
                    obj_position=np.array(a["obj_position"])
                    if a["obj_position"] is not None
                    else None,
                    obj_rotation=np.array(a["obj_rotation"]).reshape(3, 3)
                    if a["obj_rotation"] is not None
                    else None,
                    dof_offset=a["dof_offset"],
                )
            effectors[channel] = eff
        params = PneumaticParams(**data["params"])
        scene = cls(
            objects=objects,
            effectors=effectors,
            materials=materials,
            params=params,
            workspace_lo=data["workspace_lo"],
            workspace_hi=data["workspace_hi"],
            joint_map=JointMap(tuple(data["joint_map"]["origin"]), data["joint_map"]["scale"]),
            max_stroke=data["max_stroke"],
            safety_factor=data["safety_factor"],
            rate_hz=data["rate_hz"],
            name=data["name"],
        )
        scene.tick_count = data["tick"]
        for name, rec in data["devices"].items():
            channel = Channel.LEFT if name == "left" else Channel.RIGHT
            dev = scene.devices[channel]
            dev.state = replace(
                dev.state,
                pump_on=rec["pump_on"],
                valve_closed=rec["valve_closed"],
                uptime_ticks=rec["uptime_ticks"],
            )
        for name, rec in data["pressure"].items():
            channel = Channel.LEFT if name == "left" else Channel.RIGHT
            scene.pressure[channel] = PressureState(
                gauge_pressure=rec["gauge_pressure"],
                cup_sealed=tuple(rec["cup_sealed"]),
                contact_material=tuple(
                    materials[m] if m is not None else None for m in rec["contact_material"]
                ),
            )
        return scene

    def copy(self) -> "Scene":
        return Scene.from_dict(self.to_dict())


def step_scene(scene: Scene, left_arm, right_arm, dt: float | None = None) -> Scene:
    """Advance one tick from per-arm 8-vectors: [6 joints, width, suction]."""
    left_arm = np.asarray(left_arm, dtype=float)
    right_arm = np.asarray(right_arm, dtype=float)
    if left_arm.shape != (8,) or right_arm.shape != (8,):
        raise act.DimensionError("per-arm actions must have shape (8,)")
    action = act.assemble_action(
        left_arm[:6],
        right_arm[:6],
        [left_arm[6], right_arm[6]],
        [left_arm[7], right_arm[7]],
    )
    return scene.step(action, dt)


def proprio_from_sim(scene: Scene) -> np.ndarray:
    """Current 14-entry proprioception; suction state cannot appear here."""
    return scene.proprio()


def load_scene(path: str | Path, materials: dict[str, MaterialProfile] | None = None) -> Scene:
    """Build a scene from a .scene YAML description."""
    with open(path, "r", encoding="utf-8") as fh:
        spec = yaml.safe_load(fh)
    materials = dict(materials or DEFAULT_MATERIALS)
    objects = []
    for rec in spec.get("objects", []):
        extents = np.array(rec["extents"], dtype=float)
        material = materials[rec.get("material", "plastic")]
        faces = [named_face_patch(extents, name) for name in rec.get("suction_faces", [])]
        art = None
        if "articulation" in rec:
            a = rec["articulation"]
            axis = np.array(a["axis"], dtype=float)
            axis = axis / np.linalg.norm(axis)
            pivot = np.array(a["pivot"], dtype=float) if "pivot" in a else np.array(
                rec["position"], dtype=float
            )
            ref = np.array(a["ref_dir"], dtype=float) if "ref_dir" in a else None
            art = Articulation(
                kind=a["kind"],
                axis=axis,
                lo=float(a["range"][0]),
                hi=float(a["range"][1]),
                displacement=float(a.get("displacement", 0.0)),
                pivot=pivot,
                ref_dir=ref / np.linalg.norm(ref) if ref is not None else None,
            )
        cavity = None
        if "cavity" in rec:
            c = rec["cavity"]
            cavity = Cavity(
                floor_z=float(c["floor_z"]),
                half_x=float(c["half_x"]),
                half_y=float(c["half_y"]),
                depth=float(c.get("depth", extents[2])),
            )
        obj = SceneObject(
            id=rec["id"],
            extents=extents,
            position=np.array(rec["position"], dtype=float),
            rotation=rot_z(float(rec.get("yaw", 0.0))),
            mass=float(rec.get("mass", 0.1)),
            material=material,
            graspable_width=rec.get("graspable_width"),
            suction_faces=faces,
            articulation=art,
            cavity=cavity,
            fixture=bool(rec.get("fixture", False)),
            supported_by=rec.get("supported_by", "table"),
        )
        if art is not None:
            obj.apply_articulation()
        objects.append(obj)
    effectors = {}
    for name, rec in spec.get("effectors", {}).items():
        channel = Channel.LEFT if name == "left" else Channel.RIGHT
        effectors[channel] = EndEffector(
            channel=channel,
            position=np.array(rec["position"], dtype=float),
            rpy=np.array(rec.get("rpy", [0.0, 0.0, 0.0]), dtype=float),
            gripper_width=float(rec.get("gripper_width", MAX_STROKE)),
        )
    ws = spec.get("workspace", {})
    return Scene(
        objects=objects,
        effectors=effectors,
        materials=materials,
        workspace_lo=ws.get("lo", (-0.8, -0.8, 0.0)),
        workspace_hi=ws.get("hi", (0.8, 0.8, 0.8)),
        rate_hz=float(spec.get("rate_hz", 30.0)),
        name=str(spec.get("name", Path(path).stem)),
    )
