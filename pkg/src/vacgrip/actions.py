"""Action and proprioception layouts for the dual-arm hybrid effector.

The action vector has 16 entries in a fixed order:

    [0..5]   left arm joints (rad)
    [6..11]  right arm joints (rad)
    [12]     left gripper width (m)
    [13]     right gripper width (m)
    [14]     left suction command, 0 or 1
    [15]     right suction command, 0 or 1

Proprioception has 14 entries: both joint blocks plus both gripper widths,
same order, with NO suction entries. Suction state is deliberately
output-only: it barely changes across a demonstration, so a model fed its
own suction state as input learns to copy it instead of deciding it. The
14-entry layout makes that copy structurally impossible, and every
boundary in this package rejects a 15- or 16-entry "proprio".

Chunking slices an episode's action sequence into fixed-horizon windows.
A suction toggle edge is a step whose suction entry differs from the
previous step's; chunks are charged with the edges whose step index falls
inside them, so an edge landing exactly on a chunk boundary belongs to the
chunk that starts there.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ACTION_DIM = 16
PROPRIO_DIM = 14
JOINTS_PER_ARM = 6

LEFT_JOINTS = slice(0, 6)
RIGHT_JOINTS = slice(6, 12)
LEFT_WIDTH = 12
RIGHT_WIDTH = 13
LEFT_SUCTION = 14
RIGHT_SUCTION = 15

ACTION_LAYOUT = (
    "left_joint_0",
    "left_joint_1",
    "left_joint_2",
    "left_joint_3",
    "left_joint_4",
    "left_joint_5",
    "right_joint_0",
    "right_joint_1",
    "right_joint_2",
    "right_joint_3",
    "right_joint_4",
    "right_joint_5",
    "left_gripper_width",
    "right_gripper_width",
    "left_suction",
    "right_suction",
)

PROPRIO_LAYOUT = ACTION_LAYOUT[:PROPRIO_DIM]


class DimensionError(ValueError):
    """A vector arrived with the wrong shape or out-of-domain entries."""


def _as_float_vector(values, dim: int, what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.shape != (dim,):
        raise DimensionError(f"{what} must have shape ({dim},), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DimensionError(f"{what} contains non-finite entries")
    return arr


def validate_action(action) -> np.ndarray:
    """Check shape and domain of one action vector; returns a float copy."""
    arr = _as_float_vector(action, ACTION_DIM, "action")
    for idx in (LEFT_SUCTION, RIGHT_SUCTION):
        if arr[idx] not in (0.0, 1.0):
            raise DimensionError(f"suction entry [{idx}] must be 0 or 1, got {arr[idx]}")
    if arr[LEFT_WIDTH] < 0 or arr[RIGHT_WIDTH] < 0:
        raise DimensionError("gripper widths must be >= 0")
    return arr


def validate_proprio(proprio) -> np.ndarray:
    """Check shape of one proprio vector; returns a float copy.

    14 entries, structurally suction-free: anything longer is rejected
    here rather than silently truncated.
    """
    return _as_float_vector(proprio, PROPRIO_DIM, "proprio")


def assemble_action(left_joints, right_joints, widths, suction) -> np.ndarray:
    """Build one 16-entry action from its 6/6/2/2 components."""
    lj = _as_float_vector(left_joints, JOINTS_PER_ARM, "left joints")
    rj = _as_float_vector(right_joints, JOINTS_PER_ARM, "right joints")
    w = _as_float_vector(widths, 2, "gripper widths")
    s = _as_float_vector(suction, 2, "suction flags")
    return validate_action(np.concatenate([lj, rj, w, s]))


def split_action(action) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Inverse of assemble_action: (left joints, right joints, widths, suction)."""
    arr = validate_action(action)
    return (
        arr[LEFT_JOINTS].copy(),
        arr[RIGHT_JOINTS].copy(),
        arr[[LEFT_WIDTH, RIGHT_WIDTH]].copy(),
        arr[[LEFT_SUCTION, RIGHT_SUCTION]].copy(),
    )


def assemble_proprio(left_joints, right_joints, widths) -> np.ndarray:
    lj = _as_float_vector(left_joints, JOINTS_PER_ARM, "left joints")
    rj = _as_float_vector(right_joints, JOINTS_PER_ARM, "right joints")
    w = _as_float_vector(widths, 2, "gripper widths")
    return np.concatenate([lj, rj, w])


def action_suction(action) -> tuple[bool, bool]:
    arr = validate_action(action)
    return bool(arr[LEFT_SUCTION]), bool(arr[RIGHT_SUCTION])


@dataclass(frozen=True)
class ActionChunk:
    """One horizon-H window of an episode's action sequence.

    ``pad_len`` counts trailing steps filled by repeating the final real
    action (keeps suction constant, so padding introduces no edges).
    """

    start_index: int
    actions: np.ndarray  # (H, 16)
    pad_len: int = 0

    def __post_init__(self):
        if self.actions.ndim != 2 or self.actions.shape[1] != ACTION_DIM:
            raise DimensionError(f"chunk actions must be (H, {ACTION_DIM})")
        if self.horizon < 1:
            raise DimensionError("chunk horizon must be >= 1")
        if not 0 <= self.pad_len < max(self.horizon, 1) + 1:
            raise DimensionError("pad_len out of range")

    @property
    def horizon(self) -> int:
        return self.actions.shape[0]


class EmptyEpisode(ValueError):
    """Chunking or statistics requested over an episode with no steps."""


def chunk_actions(actions: np.ndarray, horizon: int, stride: int | None = None) -> list[ActionChunk]:
    """Slice an (N, 16) action array into horizon-H chunks.

    Stride defaults to the horizon (back-to-back chunks). The last chunk
    pads by repeating the final action and records the pad length.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    stride = horizon if stride is None else stride
    if stride < 1:
        raise ValueError("stride must be >= 1")
    actions = np.asarray(actions, dtype=float)
    n = actions.shape[0]
    if n == 0:
        raise EmptyEpisode("no steps to chunk")
    chunks = []
    for start in range(0, n, stride):
        window = actions[start : start + horizon]
        pad = horizon - window.shape[0]
        if pad > 0:
            window = np.vstack([window, np.repeat(window[-1:], pad, axis=0)])
        chunks.append(ActionChunk(start_index=start, actions=window, pad_len=pad))
    return chunks


def flatten_chunks(chunks: list[ActionChunk]) -> np.ndarray:
    """Reassemble back-to-back chunks into the original action sequence.

    Only valid for stride == horizon chunking; declared padding is
    dropped.
    """
    parts = []
    for chunk in chunks:
        keep = chunk.horizon - chunk.pad_len
        parts.append(chunk.actions[:keep])
    return np.vstack(parts)


def toggle_edge_steps(actions: np.ndarray) -> np.ndarray:
    """Step indices where either suction entry differs from the previous step."""
    actions = np.asarray(actions, dtype=float)
    if actions.shape[0] < 2:
        return np.zeros(0, dtype=int)
    suction = actions[:, [LEFT_SUCTION, RIGHT_SUCTION]]
    changed = np.any(suction[1:] != suction[:-1], axis=1)
    return np.nonzero(changed)[0] + 1


@dataclass
class SparsityStats:
    """How rare suction toggles are at a given chunking."""

    horizon: int
    stride: int
    total_chunks: int = 0
    chunks_with_toggle: int = 0
    toggle_histogram: dict[int, int] = field(default_factory=dict)
    per_task: dict[str, tuple[int, int]] = field(default_factory=dict)

    @property
    def toggle_fraction(self) -> float:
        if self.total_chunks == 0:
            return 0.0
        return self.chunks_with_toggle / self.total_chunks

    def per_task_fraction(self) -> dict[str, float]:
        return {
            task: (with_toggle / total if total else 0.0)
            for task, (with_toggle, total) in self.per_task.items()
        }

    def to_dict(self) -> dict:
        return {
            "horizon": self.horizon,
            "stride": self.stride,
            "total_chunks": self.total_chunks,
            "chunks_with_toggle": self.chunks_with_toggle,
            "toggle_fraction": self.toggle_fraction,
            "toggle_histogram": {str(k): v for k, v in sorted(self.toggle_histogram.items())},
            "per_task_fraction": self.per_task_fraction(),
        }


def toggle_sparsity(
    episodes,
    horizon: int,
    stride: int | None = None,
) -> SparsityStats:
    """Fraction of action chunks containing at least one suction toggle.

    ``episodes`` yields objects with ``.task_id`` and ``.action_matrix()``
    (or bare (N, 16) arrays, counted under task "unknown"). Edges are
    counted on each episode's full action sequence and charged to the
    chunk whose [start, start+H) range contains them.
    """
    stride = horizon if stride is None else stride
    stats = SparsityStats(horizon=horizon, stride=stride)
    seen_any = False
    for ep in episodes:
        seen_any = True
        if hasattr(ep, "action_matrix"):
            actions = ep.action_matrix()
            task = str(ep.task_id)
        else:
            actions = np.asarray(ep, dtype=float)
            task = "unknown"
        n = actions.shape[0]
        if n == 0:
            raise EmptyEpisode("episode with no steps")
        edges = toggle_edge_steps(actions)
        starts = np.arange(0, n, stride)
        # Edges per chunk: count edge indices falling in [start, start+H).
        counts = np.zeros(len(starts), dtype=int)
        if len(edges):
            lo = np.searchsorted(edges, starts, side="left")
            hi = np.searchsorted(edges, np.minimum(starts + horizon, n), side="left")
            counts = hi - lo
        with_toggle, total = stats.per_task.get(task, (0, 0))
        stats.per_task[task] = (with_toggle + int(np.sum(counts > 0)), total + len(starts))
        stats.total_chunks += len(starts)
        stats.chunks_with_toggle += int(np.sum(counts > 0))
        for c in counts:
            stats.toggle_histogram[int(c)] = stats.toggle_histogram.get(int(c), 0) + 1
    if not seen_any:
        raise EmptyEpisode("empty dataset")
    return stats
