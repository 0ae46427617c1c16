"""Episode model and file format: round trips, corruption, versioning."""

import json

import numpy as np
import pytest

from vacgrip.actions import DimensionError
from vacgrip.episodes import (
    CorruptRecord,
    Episode,
    SCHEMA_VERSION,
    SchemaVersionMismatch,
    Step,
    read_episode,
    validate_episode,
    write_episode,
)


def make_episode(n_steps=20, rate=30.0, with_subtasks=True) -> Episode:
    rng = np.random.default_rng(7)
    ep = Episode(task_id="3", instruction="open the drawer", rate_hz=rate,
                 metadata={"arm_designation": "right"})
    suction = 0.0
    for i in range(n_steps):
        if i == 8:
            suction = 1.0
        action = rng.uniform(-1, 1, 16)
        action[12:14] = np.abs(action[12:14])
        action[14] = suction
        action[15] = 0.0
        ep.append(
            Step(
                t=i / rate,
                proprio=rng.uniform(-1, 1, 14),
                action=action,
                pressure=(-12.5 * suction, 0.0),
                subtask="approach the drawer" if with_subtasks and i < 10 else None,
                image_refs=("cam/base/000.png",) if i == 0 else None,
            )
        )
    return ep


def test_write_read_round_trip(tmp_path):
    ep = make_episode()
    path = tmp_path / "demo.ep"
    write_episode(ep, path)
    loaded = read_episode(path)
    assert loaded == ep


def test_step_rejects_bad_vectors():
    with pytest.raises(DimensionError):
        Step(t=0.0, proprio=np.zeros(15), action=np.zeros(16), pressure=(0, 0))
    with pytest.raises(DimensionError):
        Step(t=0.0, proprio=np.zeros(14), action=np.zeros(15), pressure=(0, 0))
    bad = np.zeros(16)
    bad[14] = 0.5
    with pytest.raises(DimensionError):
        Step(t=0.0, proprio=np.zeros(14), action=bad, pressure=(0, 0))


def test_append_requires_increasing_time():
    ep = make_episode(5)
    with pytest.raises(ValueError):
        ep.append(Step(t=0.0, proprio=np.zeros(14), action=np.zeros(16), pressure=(0, 0)))


def test_truncated_file_reports_step_index(tmp_path):
    ep = make_episode(12)
    path = tmp_path / "demo.ep"
    write_episode(ep, path)
    text = path.read_text().splitlines()
    # Chop the final record mid-JSON.
    text[-1] = text[-1][: len(text[-1]) // 2]
    path.write_text("\n".join(text) + "\n")
    with pytest.raises(CorruptRecord) as exc:
        read_episode(path)
    assert exc.value.step_index == 11


def test_fifteen_dim_proprio_in_file_rejected_with_index(tmp_path):
    ep = make_episode(6)
    path = tmp_path / "demo.ep"
    write_episode(ep, path)
    lines = path.read_text().splitlines()
    rec = json.loads(lines[3])
    rec["proprio"] = rec["proprio"] + [0.0]  # smuggle a 15th entry
    lines[3] = json.dumps(rec)
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(CorruptRecord) as exc:
        read_episode(path)
    assert exc.value.step_index == 2


def test_version_bump_is_explicit_mismatch(tmp_path):
    ep = make_episode(3)
    path = tmp_path / "demo.ep"
    write_episode(ep, path)
    lines = path.read_text().splitlines()
    header = json.loads(lines[0])
    header["version"] = SCHEMA_VERSION + 1
    header["new_unrelated_field"] = {"future": True}
    lines[0] = json.dumps(header)
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(SchemaVersionMismatch):
        read_episode(path)


def test_foreign_file_rejected(tmp_path):
    path = tmp_path / "other.ep"
    path.write_text('{"schema": "something-else", "version": 1}\n')
    with pytest.raises(SchemaVersionMismatch):
        read_episode(path)
    empty = tmp_path / "empty.ep"
    empty.write_text("")
    with pytest.raises(SchemaVersionMismatch):
        read_episode(empty)


def test_subtask_ranges():
    ep = make_episode(20)
    ranges = ep.subtasks()
    assert ranges == [(((0, 10)), "approach the drawer")]


def test_floats_survive_bit_exactly(tmp_path):
    ep = make_episode(10)
    path = tmp_path / "demo.ep"
    write_episode(ep, path)
    loaded = read_episode(path)
    assert np.array_equal(loaded.proprio_matrix(), ep.proprio_matrix())
    assert np.array_equal(loaded.action_matrix(), ep.action_matrix())
    assert [s.t for s in loaded.steps] == [s.t for s in ep.steps]


def test_validate_episode_catches_injected_corruption():
    ep = make_episode(5)
    ep.steps[2] = Step(
        t=ep.steps[2].t,
        proprio=np.zeros(14),
        action=np.zeros(16),
        pressure=(0.0, 0.0),
    )
    object.__setattr__(ep.steps[2], "proprio", np.zeros(15))
    with pytest.raises(CorruptRecord) as exc:
        validate_episode(ep)
    assert exc.value.step_index == 2
