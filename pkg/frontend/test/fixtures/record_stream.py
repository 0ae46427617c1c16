"""Regenerate the canned server-message stream used by the thin-client test.

Drives a short lockstep session against the real service and saves every
server message (hello, acks with snapshots) as JSON lines.

Run from the repository root:
    python3 frontend/test/fixtures/record_stream.py
"""

import json
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from vacgrip.harness import scene_path
from vacgrip.server import create_app

OUT = Path(__file__).parent / "stream.jsonl"


def arm(**kw):
    base = {"dx": 0.0, "dy": 0.0, "dz": 0.0, "droll": 0.0, "dpitch": 0.0,
            "dyaw": 0.0, "gripper_width": None, "suction_toggle_edge": False}
    base.update(kw)
    return base


def main():
    app = create_app(
        scene_path("task1"),
        episodes_dir=tempfile.mkdtemp(),
        rate_hz=30.0,
        lockstep=True,
    )
    messages = []
    with TestClient(app) as client:
        with client.websocket_connect("/session/fixture") as ws:
            messages.append(ws.receive_json())
            script = [
                {"record_control": {"kind": "start", "task_id": "1",
                                    "instruction": "clear the table"}},
                {"right": arm(dx=-0.01, dy=0.01)},
                {"right": arm(dx=-0.01, dy=0.01)},
                {"right": arm(suction_toggle_edge=True)},
                {"right": arm(dz=-0.005)},
                {"right": arm(gripper_width=0.03)},
                {"right": arm(suction_toggle_edge=True)},
                {"record_control": {"kind": "mark_subtask", "text": "approach"}},
                {"right": arm(dy=0.01)},
                {"record_control": {"kind": "stop", "save": True}},
                {},
            ]
            for extra in script:
                msg = {"type": "input", "left": arm(), "right": arm(),
                       "record_control": None}
                msg.update(extra)
                ws.send_json(msg)
                messages.append(ws.receive_json())
    with open(OUT, "w", encoding="utf-8") as fh:
        for msg in messages:
            fh.write(json.dumps(msg) + "\n")
    print(f"wrote {len(messages)} messages to {OUT}")


if __name__ == "__main__":
    main()
