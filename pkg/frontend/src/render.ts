/** Canvas rendering: top-down scene view, gauges, lamps, progress.
 *
 * Pure presentation over RenderState; every number drawn comes from the
 * server snapshot (or a recorded episode in replay mode).
 */

import { EpisodeData } from "./episodes.js";
import { ObjectView, Snapshot } from "./messages.js";
import { RenderState } from "./viewmodel.js";

// World window drawn in the top-down view (meters).
const VIEW = { xMin: -0.75, xMax: 0.75, yMin: -0.45, yMax: 0.75 };

const COLORS: Record<string, string> = {
  fixture: "#8a8177",
  object: "#c8913a",
  effectorLeft: "#2b6cb0",
  effectorRight: "#b03a2b",
  sealed: "#2f9e44",
  unsealed: "#adb5bd",
  grid: "#e9ecef",
};

function worldToCanvas(
  canvas: HTMLCanvasElement,
  x: number,
  y: number,
): [number, number] {
  const px = ((x - VIEW.xMin) / (VIEW.xMax - VIEW.xMin)) * canvas.width;
  const py = canvas.height - ((y - VIEW.yMin) / (VIEW.yMax - VIEW.yMin)) * canvas.height;
  return [px, py];
}

function scale(canvas: HTMLCanvasElement, meters: number): number {
  return (meters / (VIEW.xMax - VIEW.xMin)) * canvas.width;
}

function drawBox(
  ctx: CanvasRenderingContext2D,
  canvas: HTMLCanvasElement,
  obj: ObjectView,
): void {
  const [cx, cy] = worldToCanvas(canvas, obj.position[0], obj.position[1]);
  ctx.save();
  ctx.translate(cx, cy);
  ctx.rotate(-obj.yaw);
  const w = scale(canvas, obj.extents[0]);
  const h = scale(canvas, obj.extents[1]);
  ctx.fillStyle = obj.fixture ? COLORS.fixture : COLORS.object;
  ctx.globalAlpha = obj.fixture ? 0.45 : 0.85;
  ctx.fillRect(-w / 2, -h / 2, w, h);
  ctx.globalAlpha = 1;
  ctx.strokeStyle = "#495057";
  ctx.strokeRect(-w / 2, -h / 2, w, h);
  ctx.restore();
  ctx.fillStyle = "#343a40";
  ctx.font = "11px sans-serif";
  const label =
    obj.displacement !== undefined
      ? `${obj.id} (${obj.displacement.toFixed(2)})`
      : obj.id;
  ctx.fillText(label, cx + 4, cy - 4);
}

export function drawScene(canvas: HTMLCanvasElement, snapshot: Snapshot): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);

  ctx.strokeStyle = COLORS.grid;
  for (let gx = Math.ceil(VIEW.xMin * 10) / 10; gx <= VIEW.xMax; gx += 0.1) {
    const [px] = worldToCanvas(canvas, gx, 0);
    ctx.beginPath();
    ctx.moveTo(px, 0);
    ctx.lineTo(px, canvas.height);
    ctx.stroke();
  }
  for (let gy = Math.ceil(VIEW.yMin * 10) / 10; gy <= VIEW.yMax; gy += 0.1) {
    const [, py] = worldToCanvas(canvas, 0, gy);
    ctx.beginPath();
    ctx.moveTo(0, py);
    ctx.lineTo(canvas.width, py);
    ctx.stroke();
  }

  for (const obj of snapshot.objects) drawBox(ctx, canvas, obj);

  for (const side of ["left", "right"] as const) {
    const eff = snapshot.effectors[side];
    const [px, py] = worldToCanvas(canvas, eff.position[0], eff.position[1]);
    ctx.strokeStyle = side === "left" ? COLORS.effectorLeft : COLORS.effectorRight;
    ctx.lineWidth = 2;
    const r = 9;
    ctx.beginPath();
    ctx.moveTo(px - r, py);
    ctx.lineTo(px + r, py);
    ctx.moveTo(px, py - r);
    ctx.lineTo(px, py + r);
    ctx.stroke();
    ctx.lineWidth = 1;
    for (const cup of eff.cups) {
      const [ux, uy] = worldToCanvas(canvas, cup.position[0], cup.position[1]);
      ctx.fillStyle = cup.sealed ? COLORS.sealed : COLORS.unsealed;
      ctx.beginPath();
      ctx.arc(ux, uy, 4, 0, Math.PI * 2);
      ctx.fill();
    }
    ctx.fillStyle = ctx.strokeStyle;
    ctx.font = "11px sans-serif";
    const z = eff.position[2].toFixed(2);
    ctx.fillText(`${side} z=${z} w=${(eff.gripper_width * 1000).toFixed(0)}mm`, px + 8, py + 14);
  }
}

export function drawGauge(
  canvas: HTMLCanvasElement,
  label: string,
  kpa: number,
  fraction: number,
  lampOn: boolean,
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const barX = 26;
  const barW = 26;
  const barH = canvas.height - 36;
  ctx.strokeStyle = "#495057";
  ctx.strokeRect(barX, 10, barW, barH);
  const fillH = barH * fraction;
  ctx.fillStyle = fraction > 0.85 ? "#2f9e44" : "#4dabf7";
  ctx.fillRect(barX, 10 + (barH - fillH), barW, fillH);
  ctx.fillStyle = "#343a40";
  ctx.font = "10px sans-serif";
  ctx.fillText("0", barX + barW + 4, 16);
  ctx.fillText("-60", barX + barW + 4, 12 + barH);
  ctx.font = "12px sans-serif";
  ctx.fillText(`${label} ${kpa.toFixed(1)} kPa`, 4, canvas.height - 8);
  // Suction lamp
  ctx.beginPath();
  ctx.arc(12, 16, 6, 0, Math.PI * 2);
  ctx.fillStyle = lampOn ? "#fa5252" : "#ced4da";
  ctx.fill();
}

export function drawStatusLine(el: HTMLElement, state: RenderState): void {
  const parts: string[] = [];
  parts.push(`link: ${state.connection}`);
  if (state.recording?.active) {
    parts.push(`REC ● ${state.recording.stepCount} steps (task ${state.recording.taskId})`);
  }
  if (state.lastSaved) parts.push(`saved: ${state.lastSaved}`);
  if (state.lastError) parts.push(`error: ${state.lastError}`);
  el.textContent = parts.join("   ");
  el.classList.toggle("recording", Boolean(state.recording?.active));
}

export function drawProgress(el: HTMLElement, state: RenderState): void {
  el.textContent = state.progress
    .map((p) => `task ${p.task}: ${p.saved}/${p.goal ?? "-"}`)
    .join("   ");
}

/** Replay panel: joint-space traces plus pressure and suction timelines. */
export function drawReplay(
  canvas: HTMLCanvasElement,
  data: EpisodeData,
  index: number,
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const steps = data.steps;
  if (steps.length === 0) return;
  const n = steps.length;
  const half = canvas.height / 2;

  const traceBounds = { min: Infinity, max: -Infinity };
  for (const s of steps) {
    for (const v of [s.proprio[0], s.proprio[1], s.proprio[6], s.proprio[7]]) {
      traceBounds.min = Math.min(traceBounds.min, v);
      traceBounds.max = Math.max(traceBounds.max, v);
    }
  }
  const span = Math.max(1e-6, traceBounds.max - traceBounds.min);
  const toY = (v: number) => half - 14 - ((v - traceBounds.min) / span) * (half - 24);
  const toX = (i: number) => (i / (n - 1 || 1)) * canvas.width;

  const channels: Array<[number, string]> = [
    [0, "#2b6cb0"],
    [1, "#74a9d8"],
    [6, "#b03a2b"],
    [7, "#d88a74"],
  ];
  for (const [idx, color] of channels) {
    ctx.strokeStyle = color;
    ctx.beginPath();
    steps.forEach((s, i) => {
      const x = toX(i);
      const y = toY(s.proprio[idx]);
      if (i === 0) ctx.moveTo(x, y);
      else ctx.lineTo(x, y);
    });
    ctx.stroke();
  }
  ctx.fillStyle = "#343a40";
  ctx.font = "10px sans-serif";
  ctx.fillText("arm joint traces (L blue, R red)", 6, 12);

  // Pressure traces, -60..0 mapped into the lower band.
  const pToY = (kpa: number) => canvas.height - 14 + (kpa / 60) * (half - 36);
  for (const [ch, color] of [[0, "#2b6cb0"], [1, "#b03a2b"]] as Array<[number, string]>) {
    ctx.strokeStyle = color;
    ctx.beginPath();
    steps.forEach((s, i) => {
      const x = toX(i);
      const y = pToY(s.pressure[ch]);
      if (i === 0) ctx.moveTo(x, y);
      else ctx.lineTo(x, y);
    });
    ctx.stroke();
  }
  // Suction bits as thick marks where the commanded state is on.
  ctx.fillStyle = "#fa525233";
  steps.forEach((s, i) => {
    if (s.action[14] > 0 || s.action[15] > 0) {
      ctx.fillRect(toX(i), half + 2, Math.max(1, canvas.width / n), 8);
    }
  });
  ctx.fillStyle = "#343a40";
  ctx.fillText("line pressure (0 to -60 kPa) + suction-on band", 6, half + 24);

  // Cursor
  ctx.strokeStyle = "#212529";
  ctx.beginPath();
  ctx.moveTo(toX(index), 0);
  ctx.lineTo(toX(index), canvas.height);
  ctx.stroke();
  const step = steps[index];
  ctx.fillText(
    `t=${step.t.toFixed(2)}s  step ${index + 1}/${n}` +
      (step.subtask ? `  [${step.subtask}]` : ""),
    6,
    canvas.height - 2,
  );
}
