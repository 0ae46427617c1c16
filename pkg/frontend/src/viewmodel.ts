/** Console state derived purely from server messages.
 *
 * Thin-client rule: nothing in here computes physics or anticipates the
 * simulator. Every rendered value is a field of the latest snapshot (or
 * ack), reshaped for display at most. Replaying a recorded message
 * stream through handleMessage must reproduce the exact same render
 * state, which the tests assert.
 */

import { AckMsg, ServerMsg, Snapshot } from "./messages.js";

export type Connection = "connecting" | "open" | "stale" | "closed";

export const STALE_AFTER_MS = 2000;

export interface GaugeState {
  kpa: number;
  /** 0 at ambient, 1 at the -60 kPa full-scale mark. */
  fraction: number;
}

export interface RenderState {
  connection: Connection;
  staleBanner: boolean;
  snapshot: Snapshot | null;
  gauges: { left: GaugeState; right: GaugeState } | null;
  suctionLamps: { left: boolean; right: boolean } | null;
  recording: { active: boolean; stepCount: number; taskId: string | null } | null;
  progress: Array<{ task: string; saved: number; goal: number | null }>;
  lastSaved: string | null;
  lastError: string | null;
}

const GAUGE_FULL_SCALE_KPA = -60;

export class ConsoleViewModel {
  connection: Connection = "connecting";
  lastSnapshot: Snapshot | null = null;
  lastSaved: string | null = null;
  lastError: string | null = null;
  lockstep = false;
  private lastMessageAt: number | null = null;

  handleOpen(nowMs: number): void {
    this.connection = "open";
    this.lastMessageAt = nowMs;
  }

  handleClose(): void {
    this.connection = "closed";
  }

  handleMessage(msg: ServerMsg, nowMs: number): void {
    this.lastMessageAt = nowMs;
    if (this.connection !== "closed") this.connection = "open";
    switch (msg.type) {
      case "hello":
        this.lockstep = msg.lockstep;
        break;
      case "snapshot":
        this.lastSnapshot = msg as Snapshot;
        break;
      case "ack": {
        const ack = msg as AckMsg;
        this.lastSnapshot = ack.snapshot;
        if (ack.last_saved) this.lastSaved = ack.last_saved;
        break;
      }
      case "error":
        this.lastError = msg.message;
        break;
      case "pong":
        break;
    }
  }

  stale(nowMs: number): boolean {
    return this.lastMessageAt !== null && nowMs - this.lastMessageAt > STALE_AFTER_MS;
  }

  renderState(nowMs: number): RenderState {
    const snap = this.lastSnapshot;
    const stale = this.stale(nowMs);
    const gauge = (kpa: number): GaugeState => ({
      kpa,
      fraction: Math.min(1, Math.max(0, kpa / GAUGE_FULL_SCALE_KPA)),
    });
    return {
      connection: stale && this.connection === "open" ? "stale" : this.connection,
      staleBanner: stale,
      snapshot: snap,
      gauges: snap
        ? { left: gauge(snap.pressure_kpa.left), right: gauge(snap.pressure_kpa.right) }
        : null,
      suctionLamps: snap
        ? {
            left: snap.effectors.left.suction_on,
            right: snap.effectors.right.suction_on,
          }
        : null,
      recording: snap
        ? {
            active: snap.recording.active,
            stepCount: snap.recording.step_count,
            taskId: snap.recording.task_id,
          }
        : null,
      progress: snap
        ? Object.entries(snap.progress).map(([task, p]) => ({
            task,
            saved: p.saved,
            goal: p.goal,
          }))
        : [],
      lastSaved: this.lastSaved,
      lastError: this.lastError,
    };
  }
}
