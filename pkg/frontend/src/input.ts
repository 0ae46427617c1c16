/** Keyboard-to-TeleopInput mapping.
 *
 * Jog keys are level-based: held keys contribute pose deltas every tick.
 * The spacebar is the footswitch analog: strictly edge-based, autorepeat
 * suppressed, one toggle per physical press. Record controls are edges
 * too. Stop uses Shift+S (save) / Shift+X (discard) because plain S is
 * the backward jog key.
 *
 * The mapper is DOM-free: callers feed (code, kind, repeat) triples and
 * pull one message per transmit tick, which also makes it directly
 * testable.
 */

import { ArmInputMsg, RecordControl, TeleopInputMsg, neutralArm } from "./messages.js";

export type Arm = "left" | "right";

export const JOG_SPEED = 0.15; // m/s commanded while a jog key is held
export const ROT_SPEED = 0.8; // rad/s
export const WIDTH_STEP = 0.005; // m per bracket press

// code -> [field, sign]
const JOG_KEYS: Record<string, [keyof ArmInputMsg, number]> = {
  KeyW: ["dy", +1],
  KeyS: ["dy", -1],
  KeyA: ["dx", -1],
  KeyD: ["dx", +1],
  KeyQ: ["dz", -1],
  KeyE: ["dz", +1],
  ArrowUp: ["dpitch", +1],
  ArrowDown: ["dpitch", -1],
  ArrowLeft: ["dyaw", +1],
  ArrowRight: ["dyaw", -1],
  KeyZ: ["droll", +1],
  KeyC: ["droll", -1],
};

export const KEY_HELP: ReadonlyArray<[string, string]> = [
  ["W/A/S/D", "jog selected arm in the plane"],
  ["Q/E", "jog down / up"],
  ["arrows", "pitch and yaw"],
  ["Z/C", "roll"],
  ["[ / ]", "close / open gripper"],
  ["space", "suction toggle (footswitch)"],
  ["Tab", "select arm"],
  ["R", "start recording"],
  ["Shift+S", "stop and save"],
  ["Shift+X", "stop and discard"],
  ["T", "mark subtask"],
];

export interface MapperHooks {
  /** Called when the operator asks for a subtask annotation (T). */
  requestSubtask?: () => void;
  /** Called when recording should start (R); supplies task metadata. */
  requestStart?: () => { task_id: string; instruction: string; arm?: string } | null;
}

export class InputMapper {
  selectedArm: Arm = "right";
  gripperWidth: Record<Arm, number> = { left: 0.07, right: 0.07 };
  maxStroke = 0.07;

  private held = new Set<string>();
  private pendingToggles: Record<Arm, number> = { left: 0, right: 0 };
  private pendingWidth: Record<Arm, number | null> = { left: null, right: null };
  private pendingControls: RecordControl[] = [];
  private hooks: MapperHooks;

  constructor(hooks: MapperHooks = {}) {
    this.hooks = hooks;
  }

  /** Feed one key transition. Returns true when the key was consumed. */
  handleKey(code: string, kind: "down" | "up", repeat = false, shift = false): boolean {
    if (kind === "up") {
      return this.held.delete(code);
    }
    if (code in JOG_KEYS) {
      if (shift) return false; // Shift+S is a record control, not a jog
      this.held.add(code);
      return true; // autorepeat harmless: level-based
    }
    switch (code) {
      case "Space":
        if (!repeat) this.pendingToggles[this.selectedArm] += 1;
        return true; // held space autorepeat emits nothing further
      case "Tab":
        if (!repeat) this.selectedArm = this.selectedArm === "left" ? "right" : "left";
        return true;
      case "BracketLeft":
        this.nudgeWidth(-WIDTH_STEP);
        return true;
      case "BracketRight":
        this.nudgeWidth(+WIDTH_STEP);
        return true;
      case "KeyR":
        if (!repeat) {
          const meta = this.hooks.requestStart?.() ?? {
            task_id: "0",
            instruction: "",
          };
          if (meta) this.pendingControls.push({ kind: "start", ...meta });
        }
        return true;
      case "KeyX":
        if (shift && !repeat) {
          this.pendingControls.push({ kind: "stop", save: false });
          return true;
        }
        return false;
      case "KeyT":
        if (!repeat) this.hooks.requestSubtask?.();
        return true;
      default:
        return false;
    }
  }

  /** Shift+S arrives as a jog code; route it before handleKey. */
  handleShiftS(repeat = false): void {
    if (!repeat) this.pendingControls.push({ kind: "stop", save: true });
  }

  markSubtask(text: string): void {
    this.pendingControls.push({ kind: "mark_subtask", text });
  }

  private nudgeWidth(delta: number): void {
    const arm = this.selectedArm;
    const next = Math.min(this.maxStroke, Math.max(0, this.gripperWidth[arm] + delta));
    this.gripperWidth[arm] = next;
    this.pendingWidth[arm] = next;
  }

  /** Width as last confirmed by the server (keeps nudges relative). */
  syncWidths(left: number, right: number): void {
    if (this.pendingWidth.left === null) this.gripperWidth.left = left;
    if (this.pendingWidth.right === null) this.gripperWidth.right = right;
  }

  /** Build the message for one transmit tick; null when idle. */
  buildInput(dtSeconds: number): TeleopInputMsg | null {
    const arms: Record<Arm, ArmInputMsg> = { left: neutralArm(), right: neutralArm() };
    let any = false;

    const active = arms[this.selectedArm];
    for (const code of this.held) {
      const jog = JOG_KEYS[code];
      if (!jog) continue;
      const [field, sign] = jog;
      const speed = field === "dx" || field === "dy" || field === "dz" ? JOG_SPEED : ROT_SPEED;
      (active[field] as number) += sign * speed * dtSeconds;
      any = true;
    }
    for (const arm of ["left", "right"] as Arm[]) {
      // Edge semantics: every queued press becomes exactly one edge
      // message; two presses need two ticks but are never merged away.
      if (this.pendingToggles[arm] > 0) {
        arms[arm].suction_toggle_edge = true;
        this.pendingToggles[arm] -= 1;
        any = true;
      }
      if (this.pendingWidth[arm] !== null) {
        arms[arm].gripper_width = this.pendingWidth[arm];
        this.pendingWidth[arm] = null;
        any = true;
      }
    }
    const control = this.pendingControls.shift() ?? null;
    if (control) any = true;
    if (!any) return null;
    return { type: "input", left: arms.left, right: arms.right, record_control: control };
  }

  pendingToggleCount(arm: Arm): number {
    return this.pendingToggles[arm];
  }
}
