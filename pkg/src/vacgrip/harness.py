"""Task definitions, trial protocol and failure metrics.

Four long-horizon household tasks run under scripted prime-action
policies: clearing a tabletop into a tray, opening a sealed container and
stowing an object, opening a handleless drawer and stowing an object, and
opening a cardboard box. A trial succeeds only when every goal predicate
holds, in order, somewhere along the rollout; each task runs a 15-trial
budget with seeded initial-pose jitter.

Failure taxonomy mirrors how real evaluations get scored: a primitive
that was never feasible, an attachment lost mid-carry, goal predicates
unmet, or the oscillation rule: an end effector confined near one
position for over a minute counts as a failure regardless of anything
else (confinement stands in for "continuously oscillates", which is the
stricter reading).

The hybrid policy uses suction where the object demands it; the
grasp-only variant replaces every suction pick with a parallel-jaw
attempt, which is infeasible for all four tasks' critical objects (thin
glass, a lidded container, a handleless drawer, a box flap), scoring 0.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .episodes import Episode, Step
from .primitives import (
    GraspPick,
    Lift,
    Place,
    PrimeExecutor,
    PrimitiveInfeasible,
    Press,
    Pull,
    Push,
    Release,
    SuctionPick,
)
from .protocol import Channel
from .scene import Scene, load_scene

TRIAL_BUDGET = 15
JITTER_XY = 0.02  # m
JITTER_YAW_DEG = 5.0

OSCILLATION_WINDOW_S = 60.0
OSCILLATION_EPS = 0.02  # m


class FailureCause:
    NONE = "none"
    PREDICATE_UNMET = "predicate_unmet"
    OSCILLATION = "oscillation"
    PRIMITIVE_INFEASIBLE = "primitive_infeasible"
    ATTACHMENT_LOST = "attachment_lost"


class LidAbsent(Exception):
    """Task 2 metric requested on a scene without a lid/container pair."""


@dataclass(frozen=True)
class PolicyStep:
    """One stage of a scripted policy: a primitive plus fallbacks."""

    arm: Channel
    primitives: tuple
    label: str = ""

    def describe(self) -> str:
        return self.label or self.primitives[0].describe()


@dataclass
class TaskSpec:
    task_id: int
    instruction: str
    scene_name: str
    predicates: list[tuple[str, callable]]
    policy: list[PolicyStep]
    trial_budget: int = TRIAL_BUDGET
    jitter_xy: float = JITTER_XY
    jitter_yaw_deg: float = JITTER_YAW_DEG
    jitter_ids: tuple[str, ...] = ()


@dataclass
class TrialResult:
    task_id: int
    seed: int
    success: bool
    failure_cause: str
    prime_outcomes: list[tuple[str, bool, str]]
    duration_s: float
    error_offset_m: float | None = None
    trajectory_digest: str = ""
    episode: Episode | None = None


def scene_path(name: str) -> Path:
    return Path(resources.files("vacgrip") / "scenes" / f"{name}.scene")


class RolloutRecorder:
    """Captures each tick: proprio before the action, predicate values after.

    Also assembles a replayable episode: the header metadata carries the
    full initial scene state, so the action stream alone reproduces the
    proprio stream.
    """

    def __init__(self, scene: Scene, task: TaskSpec | None, record_episode: bool = True):
        self.scene = scene
        self.predicates = task.predicates if task else []
        self.pose_history: list[np.ndarray] = []
        self.predicate_trace: list[tuple[bool, ...]] = []
        self.episode: Episode | None = None
        self.subtask: str | None = None
        if record_episode:
            self.episode = Episode(
                task_id=str(task.task_id) if task else scene.name,
                instruction=task.instruction if task else "",
                rate_hz=scene.rate_hz,
                metadata={
                    "initial_scene": scene.to_dict(),
                    "arm_designation": "dual",
                },
            )

    def on_step(self, scene: Scene, action: np.ndarray):
        # Called before scene.step(action).
        if self.episode is not None:
            self.episode.append(
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
        left = scene.effectors[Channel.LEFT].position
        right = scene.effectors[Channel.RIGHT].position
        self.pose_history.append(np.concatenate([left, right]))

    def after_step(self):
        if self.predicates:
            self.predicate_trace.append(
                tuple(bool(fn(self.scene)) for _, fn in self.predicates)
            )

    def digest(self) -> str:
        h = hashlib.sha256()
        if self.pose_history:
            h.update(np.stack(self.pose_history).tobytes())
        h.update(json.dumps(self.scene.to_dict(), sort_keys=True).encode())
        return h.hexdigest()


def detect_oscillation(
    history: np.ndarray,
    rate_hz: float,
    window_s: float = OSCILLATION_WINDOW_S,
    eps: float = OSCILLATION_EPS,
) -> bool:
    """True when both arms stayed inside an eps-ball for a full window.

    ``history`` is (N, 6): left xyz then right xyz per tick. Confinement
    is measured against each window's own mean, so the check is
    translation invariant, and any sustained motion faster than
    eps/window breaks it.
    """
    history = np.asarray(history, dtype=float)
    w = int(round(window_s * rate_hz)) + 1
    n = history.shape[0]
    if n < w:
        return False
    for start in range(0, n - w + 1):
        window = history[start : start + w]
        confined = True
        for arm in (slice(0, 3), slice(3, 6)):
            pts = window[:, arm]
            mean = pts.mean(axis=0)
            if float(np.max(np.linalg.norm(pts - mean, axis=1))) > eps:
                confined = False
                break
        if confined:
            return True
    return False


def lid_offset(scene: Scene) -> float:
    """Planar distance between lid center and container mouth center."""
    lid = scene.objects.get("lid")
    container = scene.objects.get("container")
    if lid is None or container is None:
        raise LidAbsent("scene has no lid/container pair")
    return float(np.linalg.norm(lid.position[:2] - container.position[:2]))


def lid_capped(scene: Scene, offset_tol: float = 0.03) -> bool:
    lid = scene.objects["lid"]
    container = scene.objects["container"]
    seated = abs(lid.base_z - container.top_z) <= 0.01
    return seated and lid_offset(scene) <= offset_tol


# -- goal predicates ---------------------------------------------------------


def _in_cavity(holder_id: str, object_id: str):
    def check(scene: Scene) -> bool:
        return scene.objects[holder_id].cavity_contains(scene.objects[object_id].position)

    return check


def _lid_removed(scene: Scene) -> bool:
    lid = scene.objects["lid"]
    container = scene.objects["container"]
    return lid_offset(scene) > 0.12 or lid.top_z < container.top_z


def _displacement_at_least(object_id: str, value: float):
    def check(scene: Scene) -> bool:
        return scene.objects[object_id].articulation.displacement >= value

    return check


def _displacement_at_most(object_id: str, value: float):
    def check(scene: Scene) -> bool:
        return scene.objects[object_id].articulation.displacement <= value

    return check


# -- task table ---------------------------------------------------------------

L, R = Channel.LEFT, Channel.RIGHT


def _task1() -> TaskSpec:
    return TaskSpec(
        task_id=1,
        instruction=(
            "Place the glass slide, the banana, the cucumber and the wallet into the tray."
        ),
        scene_name="task1",
        predicates=[
            ("slide_in_tray", _in_cavity("tray", "slide")),
            ("banana_in_tray", _in_cavity("tray", "banana")),
            ("cucumber_in_tray", _in_cavity("tray", "cucumber")),
            ("wallet_in_tray", _in_cavity("tray", "wallet")),
        ],
        policy=[
            PolicyStep(L, (SuctionPick("slide", "wide"), GraspPick("slide"))),
            PolicyStep(L, (Place(on="tray", dy=0.06),)),
            PolicyStep(L, (GraspPick("banana"),)),
            PolicyStep(L, (Place(on="tray", dx=-0.06, dy=-0.03),)),
            PolicyStep(R, (GraspPick("cucumber"),)),
            PolicyStep(R, (Place(on="tray", dx=0.06, dy=-0.03),)),
            PolicyStep(L, (SuctionPick("wallet", "point"), GraspPick("wallet"))),
            PolicyStep(L, (Place(on="tray", dy=-0.06),)),
        ],
        jitter_ids=("slide", "banana", "cucumber", "wallet"),
    )


def _task2() -> TaskSpec:
    return TaskSpec(
        task_id=2,
        instruction=(
            "Open the sealed plastic container, place the banana inside, and close the container."
        ),
        scene_name="task2",
        predicates=[
            ("lid_removed", _lid_removed),
            ("banana_in_container", _in_cavity("container", "banana")),
            ("lid_capped", lid_capped),
        ],
        policy=[
            PolicyStep(R, (SuctionPick("lid", "point"), GraspPick("lid"))),
            PolicyStep(R, (Place(x=0.05, y=0.38),)),
            PolicyStep(L, (GraspPick("banana"),)),
            PolicyStep(L, (Place(on="container"),)),
            PolicyStep(R, (SuctionPick("lid", "point"), GraspPick("lid"))),
            PolicyStep(R, (Place(on="container"),)),
            PolicyStep(R, (Press("lid", 0.004),)),
        ],
        jitter_ids=("banana",),
    )


def _task3() -> TaskSpec:
    return TaskSpec(
        task_id=3,
        instruction="Open the handleless drawer, place the cucumber inside, and close the drawer.",
        scene_name="task3",
        predicates=[
            ("drawer_open", _displacement_at_least("drawer", 0.15)),
            ("cucumber_in_drawer", _in_cavity("drawer", "cucumber")),
            ("drawer_closed", _displacement_at_most("drawer", 0.02)),
        ],
        policy=[
            PolicyStep(R, (SuctionPick("drawer", "point"), GraspPick("drawer"))),
            PolicyStep(R, (Pull("drawer", 0.20),)),
            PolicyStep(R, (Release(),)),
            PolicyStep(R, (GraspPick("cucumber"),)),
            PolicyStep(R, (Place(on="drawer"),)),
            PolicyStep(R, (Push("drawer"),)),
        ],
        jitter_ids=("cucumber",),
    )


def _task4() -> TaskSpec:
    return TaskSpec(
        task_id=4,
        instruction="Open the delivery cardboard box.",
        scene_name="task4",
        predicates=[
            ("flap_open", _displacement_at_least("flap", math.pi / 2)),
        ],
        policy=[
            PolicyStep(L, (SuctionPick("flap", "point"), GraspPick("flap"))),
            PolicyStep(L, (Lift("flap", 100.0),)),
            PolicyStep(L, (Release(retreat=0.05),)),
        ],
        jitter_ids=(),
    )


_TASK_BUILDERS = {1: _task1, 2: _task2, 3: _task3, 4: _task4}


def get_task(task_id: int) -> TaskSpec:
    if task_id not in _TASK_BUILDERS:
        raise ValueError(f"task id must be one of {sorted(_TASK_BUILDERS)}, got {task_id}")
    return _TASK_BUILDERS[task_id]()


def grasp_only(task: TaskSpec) -> TaskSpec:
    """Policy variant with suction disabled: every pick is a jaw grasp."""
    steps = []
    for step in task.policy:
        prims = tuple(
            GraspPick(p.target) if isinstance(p, SuctionPick) else p for p in step.primitives
        )
        # No fallback duplicates once suction picks collapse to grasps.
        seen, unique = [], []
        for p in prims:
            if repr(p) not in seen:
                seen.append(repr(p))
                unique.append(p)
        steps.append(PolicyStep(step.arm, tuple(unique), step.label))
    return replace(task, policy=steps)


def build_scene(task: TaskSpec, seed: int, materials=None) -> Scene:
    """Load the task scene and apply seeded initial-pose jitter."""
    scene = load_scene(scene_path(task.scene_name), materials=materials)
    rng = np.random.default_rng(seed)
    for obj_id in task.jitter_ids:
        obj = scene.objects[obj_id]
        obj.position[0] += rng.uniform(-task.jitter_xy, task.jitter_xy)
        obj.position[1] += rng.uniform(-task.jitter_xy, task.jitter_xy)
        yaw = math.radians(rng.uniform(-task.jitter_yaw_deg, task.jitter_yaw_deg))
        c, s = math.cos(yaw), math.sin(yaw)
        rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
        obj.rotation = rot @ obj.rotation
    return scene


def _ordered_satisfaction(trace: list[tuple[bool, ...]], count: int) -> bool:
    """Do predicates become true in order along the trace?"""
    want = 0
    for row in trace:
        if want < count and row[want]:
            want += 1
    return want == count


class ScriptedPolicy:
    """Prime-action script with per-step fallbacks."""

    def __init__(self, steps: list[PolicyStep]):
        self.steps = steps


class _RecorderHook:
    """Records pre-step, then evaluates predicates post-step."""

    def __init__(self, recorder: RolloutRecorder):
        self.recorder = recorder
        self._pending = False

    def __call__(self, scene, action):
        if self._pending:
            self.recorder.after_step()
        self.recorder.on_step(scene, action)
        self._pending = True

    def finish(self):
        if self._pending:
            self.recorder.after_step()
            self._pending = False


class FreezePolicy:
    """Holds the current pose: the oscillation detector's canonical prey."""

    def __init__(self, duration_s: float):
        self.duration_s = duration_s

    def run(self, scene: Scene, recorder: RolloutRecorder) -> list[tuple[str, bool, str]]:
        hook = _RecorderHook(recorder)
        ticks = int(self.duration_s * scene.rate_hz)
        for _ in range(ticks):
            action = scene.hold_action()
            hook(scene, action)
            scene.step(action)
        hook.finish()
        return [("freeze", True, "")]


def run_trial(
    task: TaskSpec,
    seed: int,
    policy=None,
    variant: str = "hybrid",
    record_episode: bool = False,
    materials=None,
) -> TrialResult:
    """One seeded trial: deterministic in (task, seed, policy)."""
    spec = grasp_only(task) if variant == "grasp_only" else task
    scene = build_scene(spec, seed, materials=materials)
    recorder = RolloutRecorder(scene, spec, record_episode=record_episode)
    runner = policy or ScriptedPolicy(spec.policy)

    if isinstance(runner, ScriptedPolicy):
        outcomes = _run_scripted(runner, scene, recorder)
    else:
        outcomes = runner.run(scene, recorder)

    trace = recorder.predicate_trace
    predicates_ok = _ordered_satisfaction(trace, len(spec.predicates))
    oscillated = detect_oscillation(
        np.stack(recorder.pose_history) if recorder.pose_history else np.zeros((0, 6)),
        scene.rate_hz,
    )
    attachment_lost = any(e[0] == "attachment_lost" for e in scene.events)
    infeasible = any(not ok for _, ok, _ in outcomes)

    if oscillated:
        success, cause = False, FailureCause.OSCILLATION
    elif predicates_ok and not infeasible:
        success, cause = True, FailureCause.NONE
    elif infeasible:
        success, cause = False, FailureCause.PRIMITIVE_INFEASIBLE
    elif attachment_lost:
        success, cause = False, FailureCause.ATTACHMENT_LOST
    else:
        success, cause = False, FailureCause.PREDICATE_UNMET

    offset = None
    if spec.task_id == 2:
        try:
            offset = lid_offset(scene)
        except LidAbsent:
            offset = None

    return TrialResult(
        task_id=spec.task_id,
        seed=seed,
        success=success,
        failure_cause=cause,
        prime_outcomes=outcomes,
        duration_s=scene.time_s,
        error_offset_m=offset,
        trajectory_digest=recorder.digest(),
        episode=recorder.episode,
    )


def _run_scripted(runner: ScriptedPolicy, scene: Scene, recorder: RolloutRecorder):
    outcomes = []
    hook = _RecorderHook(recorder)
    for step in runner.steps:
        executor = PrimeExecutor(scene, step.arm, on_step=hook)
        last_error = ""
        done = False
        for prim in step.primitives:
            try:
                recorder.subtask = f"use the {step.arm.name.lower()} arm: {prim.describe()}"
                executor.run(prim)
                done = True
                break
            except PrimitiveInfeasible as exc:
                last_error = exc.reason
        outcomes.append((step.describe(), done, "" if done else last_error))
        if not done:
            break
    hook.finish()
    return outcomes


@dataclass
class SuiteResult:
    task_id: int
    variant: str
    trials: list[TrialResult]

    @property
    def successes(self) -> int:
        return sum(1 for t in self.trials if t.success)

    @property
    def rate(self) -> float:
        return self.successes / len(self.trials) if self.trials else 0.0

    def cause_breakdown(self) -> dict[str, int]:
        causes: dict[str, int] = {}
        for t in self.trials:
            causes[t.failure_cause] = causes.get(t.failure_cause, 0) + 1
        return dict(sorted(causes.items()))

    def mean_error_offset(self) -> float | None:
        offsets = [t.error_offset_m for t in self.trials if t.error_offset_m is not None]
        return float(np.mean(offsets)) if offsets else None

    def rows(self) -> list[dict]:
        return [
            {
                "task": t.task_id,
                "seed": t.seed,
                "success": t.success,
                "cause": t.failure_cause,
                "duration_s": round(t.duration_s, 3),
                "error_offset_m": "" if t.error_offset_m is None else round(t.error_offset_m, 4),
            }
            for t in self.trials
        ]


def run_suite(
    task_id: int,
    trials: int = TRIAL_BUDGET,
    seed_base: int = 0,
    variant: str = "hybrid",
    jitter: bool = True,
) -> SuiteResult:
    """Run the trial budget; trials are independent and sorted by seed."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    results = []
    for i in range(trials):
        task = get_task(task_id)
        if not jitter:
            task.jitter_ids = ()
        results.append(run_trial(task, seed_base + i, variant=variant))
    results.sort(key=lambda t: t.seed)
    return SuiteResult(task_id=task_id, variant=variant, trials=results)


def summary_table(suites: list[SuiteResult]) -> str:
    """Success-rate table shaped like a model/effector-by-task grid."""
    by_variant: dict[str, dict[int, SuiteResult]] = {}
    for s in suites:
        by_variant.setdefault(s.variant, {})[s.task_id] = s
    tasks = sorted({s.task_id for s in suites})
    lines = ["effector".ljust(24) + "".join(f"task{t}".rjust(10) for t in tasks)]
    names = {"hybrid": "suction-gripping", "grasp_only": "gripping"}
    for variant, per_task in by_variant.items():
        cells = []
        for t in tasks:
            suite = per_task.get(t)
            cells.append(f"{suite.rate * 100:.1f}%".rjust(10) if suite else "-".rjust(10))
        lines.append(names.get(variant, variant).ljust(24) + "".join(cells))
    return "\n".join(lines)
