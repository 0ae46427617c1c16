import { describe, expect, it } from "vitest";

import { InputMapper, JOG_SPEED, WIDTH_STEP } from "../src/input.js";
import { isTeleopInput } from "../src/messages.js";

const DT = 1 / 30;

function drain(mapper: InputMapper, ticks = 8) {
  const out = [];
  for (let i = 0; i < ticks; i++) {
    const msg = mapper.buildInput(DT);
    if (msg) out.push(msg);
  }
  return out;
}

describe("suction toggle edges", () => {
  it("one press emits exactly one edge", () => {
    const mapper = new InputMapper();
    mapper.handleKey("Space", "down");
    mapper.handleKey("Space", "up");
    const msgs = drain(mapper);
    const edges = msgs.filter((m) => m.right.suction_toggle_edge).length;
    expect(edges).toBe(1);
    expect(msgs.every((m) => !m.left.suction_toggle_edge)).toBe(true);
  });

  it("held space autorepeat is suppressed", () => {
    const mapper = new InputMapper();
    mapper.handleKey("Space", "down", false);
    for (let i = 0; i < 10; i++) mapper.handleKey("Space", "down", true);
    mapper.handleKey("Space", "up");
    const msgs = drain(mapper, 12);
    expect(msgs.filter((m) => m.right.suction_toggle_edge).length).toBe(1);
  });

  it("two distinct presses are two edges, never merged", () => {
    const mapper = new InputMapper();
    mapper.handleKey("Space", "down");
    mapper.handleKey("Space", "up");
    mapper.handleKey("Space", "down");
    mapper.handleKey("Space", "up");
    expect(mapper.pendingToggleCount("right")).toBe(2);
    const msgs = drain(mapper);
    expect(msgs.filter((m) => m.right.suction_toggle_edge).length).toBe(2);
  });

  it("toggle goes to the Tab-selected arm", () => {
    const mapper = new InputMapper();
    mapper.handleKey("Tab", "down");
    expect(mapper.selectedArm).toBe("left");
    mapper.handleKey("Space", "down");
    const [msg] = drain(mapper);
    expect(msg.left.suction_toggle_edge).toBe(true);
    expect(msg.right.suction_toggle_edge).toBe(false);
  });
});

describe("jog keys", () => {
  it("held keys keep contributing (autorepeat allowed)", () => {
    const mapper = new InputMapper();
    mapper.handleKey("KeyW", "down");
    const msgs = drain(mapper, 3);
    expect(msgs.length).toBe(3);
    for (const m of msgs) {
      expect(m.right.dy).toBeCloseTo(JOG_SPEED * DT, 10);
    }
    mapper.handleKey("KeyW", "up");
    expect(mapper.buildInput(DT)).toBeNull();
  });

  it("opposed keys cancel", () => {
    const mapper = new InputMapper();
    mapper.handleKey("KeyA", "down");
    mapper.handleKey("KeyD", "down");
    const [msg] = drain(mapper, 1);
    expect(msg.right.dx).toBeCloseTo(0, 12);
  });
});

describe("gripper width nudges", () => {
  it("brackets step and clamp the width", () => {
    const mapper = new InputMapper();
    mapper.handleKey("BracketLeft", "down");
    let [msg] = drain(mapper, 1);
    expect(msg.right.gripper_width).toBeCloseTo(0.07 - WIDTH_STEP, 10);
    for (let i = 0; i < 40; i++) mapper.handleKey("BracketRight", "down");
    [msg] = drain(mapper, 1);
    expect(msg.right.gripper_width).toBe(0.07);
  });
});

describe("record controls", () => {
  it("R starts, Shift+S stops with save, Shift+X discards", () => {
    const mapper = new InputMapper({
      requestStart: () => ({ task_id: "3", instruction: "open the drawer" }),
    });
    mapper.handleKey("KeyR", "down");
    mapper.handleShiftS();
    mapper.handleKey("KeyX", "down", false, true);
    const msgs = drain(mapper);
    expect(msgs.map((m) => m.record_control?.kind)).toEqual(["start", "stop", "stop"]);
    expect(msgs[0].record_control).toMatchObject({ task_id: "3" });
    expect(msgs[1].record_control).toMatchObject({ save: true });
    expect(msgs[2].record_control).toMatchObject({ save: false });
  });

  it("stop-with-save persists and the progress counter is server-owned", () => {
    // The mapper only emits the control; progress comes back in
    // snapshots (covered by the viewmodel tests). Here: no local state.
    const mapper = new InputMapper();
    mapper.handleShiftS();
    const [msg] = drain(mapper);
    expect(msg.record_control).toEqual({ kind: "stop", save: true });
  });

  it("T requests a subtask annotation", () => {
    let asked = 0;
    const mapper = new InputMapper({ requestSubtask: () => { asked += 1; } });
    mapper.handleKey("KeyT", "down");
    expect(asked).toBe(1);
    mapper.markSubtask("use the right arm to suction the glass");
    const [msg] = drain(mapper);
    expect(msg.record_control).toEqual({
      kind: "mark_subtask",
      text: "use the right arm to suction the glass",
    });
  });
});

describe("message discipline", () => {
  it("unbound keys are ignored", () => {
    const mapper = new InputMapper();
    expect(mapper.handleKey("KeyY", "down")).toBe(false);
    expect(mapper.buildInput(DT)).toBeNull();
  });

  it("everything emitted is a schema-valid TeleopInput", () => {
    const mapper = new InputMapper({
      requestStart: () => ({ task_id: "1", instruction: "x" }),
    });
    mapper.handleKey("KeyW", "down");
    mapper.handleKey("Space", "down");
    mapper.handleKey("BracketLeft", "down");
    mapper.handleKey("KeyR", "down");
    mapper.handleShiftS();
    for (const msg of drain(mapper, 6)) {
      expect(isTeleopInput(msg)).toBe(true);
    }
  });

  it("idle mapper emits nothing at all", () => {
    const mapper = new InputMapper();
    expect(drain(mapper, 5)).toEqual([]);
  });
});
