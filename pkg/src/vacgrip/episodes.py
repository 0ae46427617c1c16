"""Demonstration episodes and their on-disk format.

An episode file is UTF-8 JSON lines. Record 1 is a header object carrying
the schema version, task id, instruction, collection rate and the layout
descriptor naming all 16 action indices; every following record is one
step:

    {"t": ..., "proprio": [14 floats], "action": [16 floats],
     "pressure": [left_kpa, right_kpa], "subtask": "...", "image_refs": [...]}

``subtask`` and ``image_refs`` are optional. Camera frames are never
stored; ``image_refs`` holds opaque external references only.

The format is appendable during live recording and greppable afterwards.
Floats survive the JSON round trip bit-exactly (Python serializes the
shortest repr), which the replay checks rely on.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .actions import (
    ACTION_LAYOUT,
    DimensionError,
    validate_action,
    validate_proprio,
)

SCHEMA_NAME = "vacgrip-episode"
SCHEMA_VERSION = 1


class SchemaVersionMismatch(Exception):
    """File declares a schema this reader does not understand."""


class CorruptRecord(Exception):
    """A step record failed to parse or validate.

    ``step_index`` is the zero-based index of the offending step (the
    header is not a step).
    """

    def __init__(self, step_index: int, message: str):
        super().__init__(f"step {step_index}: {message}")
        self.step_index = step_index


@dataclass(frozen=True)
class Step:
    """One recorded timestep."""

    t: float
    proprio: np.ndarray  # (14,)
    action: np.ndarray  # (16,)
    pressure: tuple[float, float]  # gauge kPa, (left, right)
    subtask: str | None = None
    image_refs: tuple[str, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "proprio", validate_proprio(self.proprio))
        object.__setattr__(self, "action", validate_action(self.action))
        if len(self.pressure) != 2:
            raise DimensionError("pressure must be (left, right)")
        object.__setattr__(self, "pressure", (float(self.pressure[0]), float(self.pressure[1])))

    def __eq__(self, other):
        if not isinstance(other, Step):
            return NotImplemented
        return (
            self.t == other.t
            and np.array_equal(self.proprio, other.proprio)
            and np.array_equal(self.action, other.action)
            and self.pressure == other.pressure
            and self.subtask == other.subtask
            and self.image_refs == other.image_refs
        )


@dataclass
class Episode:
    """One demonstration: instruction, metadata and timestep records."""

    task_id: str
    instruction: str
    rate_hz: float
    steps: list[Step] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def append(self, step: Step):
        if self.steps and step.t <= self.steps[-1].t:
            raise ValueError(
                f"timestamps must be strictly increasing: {step.t} after {self.steps[-1].t}"
            )
        self.steps.append(step)

    def __len__(self) -> int:
        return len(self.steps)

    def action_matrix(self) -> np.ndarray:
        if not self.steps:
            return np.zeros((0, len(ACTION_LAYOUT)))
        return np.stack([s.action for s in self.steps])

    def proprio_matrix(self) -> np.ndarray:
        if not self.steps:
            return np.zeros((0, 14))
        return np.stack([s.proprio for s in self.steps])

    def subtasks(self) -> list[tuple[tuple[int, int], str]]:
        """Contiguous (start, end) step ranges per subtask annotation.

        Ranges are half-open; unannotated stretches are skipped.
        """
        ranges = []
        current = None
        start = 0
        for i, step in enumerate(self.steps):
            if step.subtask != current:
                if current is not None:
                    ranges.append(((start, i), current))
                current = step.subtask
                start = i
        if current is not None:
            ranges.append(((start, len(self.steps)), current))
        return ranges

    def __eq__(self, other):
        if not isinstance(other, Episode):
            return NotImplemented
        return (
            self.task_id == other.task_id
            and self.instruction == other.instruction
            and self.rate_hz == other.rate_hz
            and self.metadata == other.metadata
            and self.steps == other.steps
        )


def validate_episode(ep: Episode):
    """Re-check every invariant over a built episode.

    Step construction already enforces the vector contracts; this guards
    episodes assembled or mutated by other paths before persistence.
    """
    last_t = None
    for i, step in enumerate(ep.steps):
        try:
            validate_proprio(step.proprio)
            validate_action(step.action)
        except DimensionError as exc:
            raise CorruptRecord(i, str(exc)) from exc
        if last_t is not None and step.t <= last_t:
            raise CorruptRecord(i, f"timestamp {step.t} not after {last_t}")
        last_t = step.t


def _step_to_record(step: Step) -> dict:
    rec = {
        "t": step.t,
        "proprio": step.proprio.tolist(),
        "action": step.action.tolist(),
        "pressure": list(step.pressure),
    }
    if step.subtask is not None:
        rec["subtask"] = step.subtask
    if step.image_refs is not None:
        rec["image_refs"] = list(step.image_refs)
    return rec


def _step_from_record(rec: dict, index: int) -> Step:
    try:
        refs = rec.get("image_refs")
        return Step(
            t=float(rec["t"]),
            proprio=rec["proprio"],
            action=rec["action"],
            pressure=tuple(rec["pressure"]),
            subtask=rec.get("subtask"),
            image_refs=tuple(refs) if refs is not None else None,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptRecord(index, str(exc)) from exc


def write_episode(ep: Episode, path: str | Path):
    """Persist an episode; validates before touching the file."""
    validate_episode(ep)
    header = {
        "schema": SCHEMA_NAME,
        "version": SCHEMA_VERSION,
        "task_id": ep.task_id,
        "instruction": ep.instruction,
        "rate_hz": ep.rate_hz,
        "layout": list(ACTION_LAYOUT),
        "metadata": ep.metadata,
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header) + "\n")
        for step in ep.steps:
            fh.write(json.dumps(_step_to_record(step)) + "\n")


def read_episode(path: str | Path) -> Episode:
    """Load and validate an episode file.

    Raises SchemaVersionMismatch on a foreign or future header, and
    CorruptRecord (with the step index) on a truncated or malformed step.
    """
    with open(path, "r", encoding="utf-8") as fh:
        header_line = fh.readline()
        if not header_line.strip():
            raise SchemaVersionMismatch("missing header record")
        try:
            header = json.loads(header_line)
        except json.JSONDecodeError as exc:
            raise SchemaVersionMismatch(f"unparseable header: {exc}") from exc
        if not isinstance(header, dict) or header.get("schema") != SCHEMA_NAME:
            raise SchemaVersionMismatch(f"not a {SCHEMA_NAME} file")
        if header.get("version") != SCHEMA_VERSION:
            raise SchemaVersionMismatch(
                f"schema version {header.get('version')!r} (reader supports {SCHEMA_VERSION})"
            )
        ep = Episode(
            task_id=str(header.get("task_id", "")),
            instruction=str(header.get("instruction", "")),
            rate_hz=float(header.get("rate_hz", 0.0)),
            metadata=header.get("metadata", {}),
        )
        for index, line in enumerate(fh):
            if not line.strip():
                raise CorruptRecord(index, "blank record")
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorruptRecord(index, f"unparseable record: {exc}") from exc
            step = _step_from_record(rec, index)
            try:
                ep.append(step)
            except ValueError as exc:
                raise CorruptRecord(index, str(exc)) from exc
    return ep


def list_episode_files(directory: str | Path) -> list[Path]:
    return sorted(Path(directory).glob("*.ep"))
