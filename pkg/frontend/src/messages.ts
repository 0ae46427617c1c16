/** Wire schema shared with the teleop service (JSON text records). */

export interface ArmInputMsg {
  dx: number;
  dy: number;
  dz: number;
  droll: number;
  dpitch: number;
  dyaw: number;
  gripper_width: number | null;
  suction_toggle_edge: boolean;
}

export type RecordControl =
  | { kind: "start"; task_id: string; instruction: string; arm?: string }
  | { kind: "stop"; save: boolean }
  | { kind: "mark_subtask"; text: string };

export interface TeleopInputMsg {
  type: "input";
  left: ArmInputMsg;
  right: ArmInputMsg;
  record_control: RecordControl | null;
}

export interface CupView {
  position: number[];
  sealed: boolean;
}

export interface EffectorView {
  position: number[];
  rpy: number[];
  gripper_width: number;
  suction_on: boolean;
  attached: string | null;
  cups: CupView[];
}

export interface ObjectView {
  id: string;
  position: number[];
  yaw: number;
  extents: number[];
  fixture: boolean;
  displacement?: number;
}

export interface RecordingView {
  active: boolean;
  step_count: number;
  task_id: string | null;
  overflow: boolean;
}

export interface Snapshot {
  type?: string;
  tick: number;
  time_s: number;
  clients?: number;
  rate_hz?: number;
  objects: ObjectView[];
  effectors: { left: EffectorView; right: EffectorView };
  pressure_kpa: { left: number; right: number };
  recording: RecordingView;
  progress: Record<string, { saved: number; goal: number | null }>;
}

export interface AckMsg {
  type: "ack";
  coalesced: boolean;
  suction: { left: boolean; right: boolean };
  recording: RecordingView;
  snapshot: Snapshot;
  last_saved: string | null;
}

export type ServerMsg =
  | AckMsg
  | (Snapshot & { type: "snapshot" })
  | { type: "hello"; lockstep: boolean; role: string }
  | { type: "error"; message: string }
  | { type: "pong" };

export function neutralArm(): ArmInputMsg {
  return {
    dx: 0,
    dy: 0,
    dz: 0,
    droll: 0,
    dpitch: 0,
    dyaw: 0,
    gripper_width: null,
    suction_toggle_edge: false,
  };
}

const ARM_NUMERIC: Array<keyof ArmInputMsg> = ["dx", "dy", "dz", "droll", "dpitch", "dyaw"];

function isArmInput(value: unknown): value is ArmInputMsg {
  if (typeof value !== "object" || value === null) return false;
  const rec = value as Record<string, unknown>;
  for (const key of ARM_NUMERIC) {
    if (typeof rec[key] !== "number" || !Number.isFinite(rec[key] as number)) return false;
  }
  const width = rec["gripper_width"];
  if (width !== null && (typeof width !== "number" || width < 0)) return false;
  return typeof rec["suction_toggle_edge"] === "boolean";
}

function isRecordControl(value: unknown): boolean {
  if (typeof value !== "object" || value === null) return false;
  const rec = value as Record<string, unknown>;
  switch (rec["kind"]) {
    case "start":
      return typeof rec["task_id"] === "string" && typeof rec["instruction"] === "string";
    case "stop":
      return typeof rec["save"] === "boolean";
    case "mark_subtask":
      return typeof rec["text"] === "string";
    default:
      return false;
  }
}

/** Structural check: everything the console emits must satisfy this. */
export function isTeleopInput(value: unknown): value is TeleopInputMsg {
  if (typeof value !== "object" || value === null) return false;
  const rec = value as Record<string, unknown>;
  if (rec["type"] !== "input") return false;
  if (!isArmInput(rec["left"]) || !isArmInput(rec["right"])) return false;
  const control = rec["record_control"];
  return control === null || isRecordControl(control);
}
