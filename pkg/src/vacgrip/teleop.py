"""Human-in-the-loop session: jog the arms, toggle suction, record.

The session owns the scene and advances it at a fixed collection rate;
operator input arrives asynchronously and is merged into the next tick
(pose deltas accumulate, width targets overwrite, toggle edges queue in
order). Suction toggles are edges, not levels, matching a footswitch:
each edge flips the commanded state through the effector driver, which
talks the wire protocol to the scene's device emulators, so a recorded
bit only changes where an edge was applied and every edge is confirmed
by a device status before the tick's action is assembled.

Recording appends one step per tick regardless of input rate: the
proprioception observed before the action, the commanded 16-entry
action, and both line pressures. The episode header carries the full
initial scene state, which makes the action stream replayable: feeding
the recorded actions back through a scene restored from that state
reproduces the recorded proprio stream bit-exactly.
"""

from __future__ import annotations

import queue
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import actions as act
from .driver import EffectorDriver
from .episodes import Episode, Step, read_episode, validate_episode, write_episode
from .protocol import Channel
from .scene import Scene, V_MAX, W_MAX

DEFAULT_RATE_HZ = 30.0
DISPLAY_HZ = 20.0
MAX_EPISODE_S = 600.0
INPUT_RATE_LIMIT_PER_S = 120

# Collection targets per task, tracked as session progress metadata.
TRAJECTORY_GOALS = {"1": 200, "2": 100, "3": 100, "4": 100}


class SessionClosed(Exception):
    pass


class BufferOverflow(Exception):
    """Episode buffer hit the configured maximum length."""


@dataclass
class ArmInput:
    dx: float = 0.0
    dy: float = 0.0
    dz: float = 0.0
    droll: float = 0.0
    dpitch: float = 0.0
    dyaw: float = 0.0
    gripper_width: float | None = None
    suction_toggle_edge: bool = False

    def pose_delta(self) -> np.ndarray:
        return np.array([self.dx, self.dy, self.dz, self.droll, self.dpitch, self.dyaw])


@dataclass
class TeleopInput:
    left: ArmInput = field(default_factory=ArmInput)
    right: ArmInput = field(default_factory=ArmInput)
    record_control: dict | None = None


def parse_input(msg: dict) -> TeleopInput:
    def arm(rec) -> ArmInput:
        rec = rec or {}
        width = rec.get("gripper_width")
        return ArmInput(
            dx=float(rec.get("dx", 0.0)),
            dy=float(rec.get("dy", 0.0)),
            dz=float(rec.get("dz", 0.0)),
            droll=float(rec.get("droll", 0.0)),
            dpitch=float(rec.get("dpitch", 0.0)),
            dyaw=float(rec.get("dyaw", 0.0)),
            gripper_width=None if width is None else float(width),
            suction_toggle_edge=bool(rec.get("suction_toggle_edge", False)),
        )

    return TeleopInput(
        left=arm(msg.get("left")),
        right=arm(msg.get("right")),
        record_control=msg.get("record_control"),
    )


class TeleopSession:
    """One scene, one driver seat, any number of snapshot subscribers."""

    def __init__(
        self,
        scene: Scene,
        episodes_dir: str | Path | None = None,
        rate_hz: float | None = None,
        max_episode_s: float = MAX_EPISODE_S,
        display_hz: float = DISPLAY_HZ,
        confirm_timeout_s: float = 0.2,
    ):
        self.scene = scene
        self.rate_hz = rate_hz or scene.rate_hz
        self.episodes_dir = Path(episodes_dir) if episodes_dir else None
        self.max_steps = int(max_episode_s * self.rate_hz)
        self.display_every = max(1, round(self.rate_hz / display_hz))
        self.driver = EffectorDriver.over_pipes(scene.devices, confirm_timeout_s)
        self.closed = False

        self._pending_delta = {Channel.LEFT: np.zeros(6), Channel.RIGHT: np.zeros(6)}
        self._pending_width: dict[Channel, float | None] = {
            Channel.LEFT: None,
            Channel.RIGHT: None,
        }
        self._pending_toggles: list[Channel] = []
        self._pending_controls: list[dict] = []
        self._inputs_this_tick = 0

        self.recording: Episode | None = None
        self.recording_overflow = False
        self.last_saved: str | None = None
        self.subtask: str | None = None
        self.saved_counts: dict[str, int] = {}
        self.toggle_log: list[tuple[int, str, bool]] = []
        self.tick_count = 0
        self.client_count = 0
        self._subscribers: list[queue.Queue] = []
        self._episode_seq = 0

    # -- input side --------------------------------------------------------

    @property
    def dt(self) -> float:
        return 1.0 / self.rate_hz

    def apply_input(self, tin: TeleopInput) -> dict:
        """Merge operator input into the next tick. Returns the raw ack."""
        if self.closed:
            raise SessionClosed("session is closed")
        self._inputs_this_tick += 1
        coalesced = self._inputs_this_tick > max(
            1, int(INPUT_RATE_LIMIT_PER_S / self.rate_hz)
        )
        for channel, arm in ((Channel.LEFT, tin.left), (Channel.RIGHT, tin.right)):
            self._pending_delta[channel] += arm.pose_delta()
            if arm.gripper_width is not None:
                self._pending_width[channel] = arm.gripper_width
            if arm.suction_toggle_edge:
                self._pending_toggles.append(channel)
        if tin.record_control is not None:
            self._pending_controls.append(tin.record_control)
        return {
            "type": "ack",
            "coalesced": coalesced,
            "suction": {
                "left": self.driver.suction_commanded(Channel.LEFT),
                "right": self.driver.suction_commanded(Channel.RIGHT),
            },
        }

    # -- record controls ------------------------------------------------------

    def _start_recording(self, task_id, instruction: str, arm: str | None):
        self.recording = Episode(
            task_id=str(task_id),
            instruction=str(instruction),
            rate_hz=self.rate_hz,
            metadata={
                "initial_scene": self.scene.to_dict(),
                "arm_designation": arm or "dual",
            },
        )
        self.recording_overflow = False
        self.subtask = None

    def _stop_recording(self, save: bool) -> str | None:
        ep = self.recording
        self.recording = None
        self.subtask = None
        if not save or ep is None or len(ep) == 0:
            return None
        validate_episode(ep)
        if self.episodes_dir is None:
            return None
        self.episodes_dir.mkdir(parents=True, exist_ok=True)
        # Next free index on disk, so concurrent sessions sharing a
        # directory never clobber each other.
        prefix = f"task{ep.task_id}_"
        taken = {p.stem for p in self.episodes_dir.glob(f"{prefix}*.ep")}
        while f"{prefix}{self._episode_seq:04d}" in taken:
            self._episode_seq += 1
        name = f"{prefix}{self._episode_seq:04d}.ep"
        self._episode_seq += 1
        write_episode(ep, self.episodes_dir / name)
        self.saved_counts[ep.task_id] = self.saved_counts.get(ep.task_id, 0) + 1
        return name

    def _handle_control(self, control: dict):
        kind = control.get("kind")
        if kind == "start":
            self._start_recording(
                control.get("task_id", "0"),
                control.get("instruction", ""),
                control.get("arm"),
            )
        elif kind == "stop":
            self._handle_stop(bool(control.get("save", True)))
        elif kind == "mark_subtask":
            self.subtask = str(control.get("text", "")) or None
        else:
            raise ValueError(f"unknown record control {kind!r}")

    def _handle_stop(self, save: bool):
        self.last_saved = self._stop_recording(save)

    # -- tick -------------------------------------------------------------------

    def tick(self):
        """Advance one collection-rate step, consuming pending input."""
        if self.closed:
            raise SessionClosed("session is closed")
        scene = self.scene
        for control in self._pending_controls:
            self._handle_control(control)
        self._pending_controls.clear()

        for channel in self._pending_toggles:
            on = not self.driver.suction_commanded(channel)
            self.driver.set_suction(channel, on)
            self.toggle_log.append((self.tick_count, channel.name.lower(), on))
        self._pending_toggles.clear()

        dt = self.dt
        targets = {}
        for channel in (Channel.LEFT, Channel.RIGHT):
            eff = scene.effectors[channel]
            delta = self._pending_delta[channel]
            pos_step = delta[:3]
            dist = float(np.linalg.norm(pos_step))
            if dist > V_MAX * dt:
                pos_step = pos_step * (V_MAX * dt / dist)
            rot_step = np.clip(delta[3:], -W_MAX * dt, W_MAX * dt)
            width = self._pending_width[channel]
            targets[channel] = (
                eff.position + pos_step,
                eff.rpy + rot_step,
                eff.gripper_width if width is None else width,
            )
            self._pending_delta[channel] = np.zeros(6)
            self._pending_width[channel] = None

        action = act.assemble_action(
            scene.joint_map.joints_from_pose(targets[Channel.LEFT][0], targets[Channel.LEFT][1]),
            scene.joint_map.joints_from_pose(
                targets[Channel.RIGHT][0], targets[Channel.RIGHT][1]
            ),
            [targets[Channel.LEFT][2], targets[Channel.RIGHT][2]],
            [
                1.0 if self.driver.suction_commanded(Channel.LEFT) else 0.0,
                1.0 if self.driver.suction_commanded(Channel.RIGHT) else 0.0,
            ],
        )

        if self.recording is not None:
            self._record_step(action)

        scene.step(action)
        self.tick_count += 1
        self._inputs_this_tick = 0
        if self.tick_count % self.display_every == 0:
            self._broadcast()

    def _record_step(self, action: np.ndarray):
        ep = self.recording
        if len(ep) >= self.max_steps:
            self.recording_overflow = True
            self.recording = None
            return
        scene = self.scene
        ep.append(
            Step(
                t=scene.tick_count * scene.dt,
                proprio=scene.proprio(),
                action=action,
                pressure=(
                    scene.pressure[Channel.LEFT].gauge_pressure,
                    scene.pressure[Channel.RIGHT].gauge_pressure,
                ),
                subtask=self.subtask,
            )
        )

    # -- snapshots ---------------------------------------------------------------

    def snapshot(self) -> dict:
        snap = self.scene.snapshot()
        snap["type"] = "snapshot"
        snap["clients"] = self.client_count
        snap["rate_hz"] = self.rate_hz
        snap["recording"] = {
            "active": self.recording is not None,
            "step_count": len(self.recording) if self.recording is not None else 0,
            "task_id": self.recording.task_id if self.recording is not None else None,
            "overflow": self.recording_overflow,
        }
        snap["progress"] = {
            task: {"saved": self.saved_counts.get(task, 0), "goal": goal}
            for task, goal in sorted(TRAJECTORY_GOALS.items())
        }
        for task, count in sorted(self.saved_counts.items()):
            if task not in TRAJECTORY_GOALS:
                snap["progress"][task] = {"saved": count, "goal": None}
        return snap

    def subscribe(self, maxsize: int = 8) -> queue.Queue:
        q = queue.Queue(maxsize=maxsize)
        self._subscribers.append(q)
        return q

    def unsubscribe(self, q: queue.Queue):
        if q in self._subscribers:
            self._subscribers.remove(q)

    def _broadcast(self):
        if not self._subscribers:
            return
        snap = self.snapshot()
        for q in self._subscribers:
            try:
                q.put_nowait(snap)
            except queue.Full:
                # Slow consumer: drop its oldest frame, never block the loop.
                try:
                    q.get_nowait()
                except queue.Empty:
                    pass
                try:
                    q.put_nowait(snap)
                except queue.Full:
                    pass

    def close(self):
        self.closed = True
        self.driver.close()


def replay_episode(ep: Episode) -> np.ndarray:
    """Re-run a recorded action stream from the stored initial state.

    Returns the proprio stream the replay produced; determinism means it
    equals the recorded one bit-exactly.
    """
    if "initial_scene" not in ep.metadata:
        raise ValueError("episode lacks initial_scene metadata; cannot replay")
    scene = Scene.from_dict(ep.metadata["initial_scene"])
    out = []
    for step in ep.steps:
        out.append(scene.proprio())
        scene.step(step.action)
    return np.stack(out) if out else np.zeros((0, 14))


def replay_matches(ep: Episode) -> bool:
    replayed = replay_episode(ep)
    return np.array_equal(replayed, ep.proprio_matrix())


def replay_final_scene(ep: Episode) -> Scene:
    """Replay to completion and hand back the resulting scene."""
    scene = Scene.from_dict(ep.metadata["initial_scene"])
    for step in ep.steps:
        scene.step(step.action)
    return scene


def load_and_replay(path: str | Path) -> tuple[Episode, bool]:
    ep = read_episode(path)
    return ep, replay_matches(ep)
