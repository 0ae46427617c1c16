/** Operator console wiring: DOM, keyboard, transmit loop, render loop. */

import { ConsoleClient } from "./client.js";
import { ReplayCursor, fetchEpisode, fetchEpisodeList } from "./episodes.js";
import { InputMapper, KEY_HELP } from "./input.js";
import {
  drawGauge,
  drawProgress,
  drawReplay,
  drawScene,
  drawStatusLine,
} from "./render.js";
import { ConsoleViewModel } from "./viewmodel.js";

const TRANSMIT_HZ = 30;

function byId<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
}

function sessionUrl(): string {
  const params = new URLSearchParams(window.location.search);
  const sid = params.get("session") ?? "console";
  const proto = window.location.protocol === "https:" ? "wss" : "ws";
  return `${proto}://${window.location.host}/session/${sid}?role=driver`;
}

function main(): void {
  const sceneCanvas = byId<HTMLCanvasElement>("scene");
  const gaugeLeft = byId<HTMLCanvasElement>("gauge-left");
  const gaugeRight = byId<HTMLCanvasElement>("gauge-right");
  const statusEl = byId<HTMLElement>("status");
  const progressEl = byId<HTMLElement>("progress");
  const armEl = byId<HTMLElement>("arm");
  const bannerEl = byId<HTMLElement>("banner");
  const helpEl = byId<HTMLElement>("help");
  const episodeListEl = byId<HTMLElement>("episodes");
  const replayCanvas = byId<HTMLCanvasElement>("replay");

  helpEl.innerHTML = KEY_HELP.map(([k, d]) => `<b>${k}</b> ${d}`).join(" &middot; ");

  const vm = new ConsoleViewModel();
  const mapper = new InputMapper({
    requestSubtask: () => {
      const text = window.prompt("subtask annotation:");
      if (text) mapper.markSubtask(text);
    },
    requestStart: () => {
      const task = window.prompt("task id (1-4):", "1");
      if (task === null) return null;
      const instruction = window.prompt("instruction:", "") ?? "";
      return { task_id: task, instruction, arm: mapper.selectedArm };
    },
  });
  const client = new ConsoleClient(sessionUrl(), vm);
  client.connect();

  window.addEventListener("keydown", (ev) => {
    if (ev.code === "KeyS" && ev.shiftKey) {
      mapper.handleShiftS(ev.repeat);
      ev.preventDefault();
      return;
    }
    if (mapper.handleKey(ev.code, "down", ev.repeat, ev.shiftKey)) ev.preventDefault();
  });
  window.addEventListener("keyup", (ev) => {
    if (mapper.handleKey(ev.code, "up")) ev.preventDefault();
  });

  window.setInterval(() => {
    const snap = vm.lastSnapshot;
    if (snap) {
      mapper.syncWidths(
        snap.effectors.left.gripper_width,
        snap.effectors.right.gripper_width,
      );
    }
    const msg = mapper.buildInput(1 / TRANSMIT_HZ);
    if (msg) client.send(msg);
  }, 1000 / TRANSMIT_HZ);

  // Episode browser.
  let replay: ReplayCursor | null = null;
  async function refreshEpisodes(): Promise<void> {
    try {
      const list = await fetchEpisodeList();
      episodeListEl.innerHTML = "";
      for (const ep of list) {
        const li = document.createElement("li");
        const a = document.createElement("a");
        a.href = "#";
        a.textContent = `${ep.name} (task ${ep.task_id}, ${ep.steps} steps)`;
        a.onclick = async (ev) => {
          ev.preventDefault();
          const data = await fetchEpisode(ep.name);
          replay = new ReplayCursor(data);
          replay.playing = true;
        };
        li.appendChild(a);
        episodeListEl.appendChild(li);
      }
    } catch {
      episodeListEl.innerHTML = "<li>episode list unavailable</li>";
    }
  }
  byId<HTMLElement>("refresh-episodes").onclick = () => void refreshEpisodes();
  replayCanvas.onclick = (ev) => {
    if (replay) replay.seekFraction(ev.offsetX / replayCanvas.width);
  };
  void refreshEpisodes();

  let lastFrame = performance.now();
  function frame(now: number): void {
    const dt = (now - lastFrame) / 1000;
    lastFrame = now;
    const state = vm.renderState(now);
    bannerEl.style.display = state.staleBanner || state.connection === "closed" ? "block" : "none";
    bannerEl.textContent =
      state.connection === "closed" ? "connection lost, retrying..." : "stream stale...";
    if (state.snapshot) drawScene(sceneCanvas, state.snapshot);
    if (state.gauges && state.suctionLamps) {
      drawGauge(gaugeLeft, "left", state.gauges.left.kpa, state.gauges.left.fraction,
        state.suctionLamps.left);
      drawGauge(gaugeRight, "right", state.gauges.right.kpa, state.gauges.right.fraction,
        state.suctionLamps.right);
    }
    drawStatusLine(statusEl, state);
    drawProgress(progressEl, state);
    armEl.textContent = `selected arm: ${mapper.selectedArm}`;
    if (replay) {
      replay.advance(dt, (replay.data.header["rate_hz"] as number) ?? 30);
      drawReplay(replayCanvas, replay.data, replay.index);
    }
    requestAnimationFrame(frame);
  }
  requestAnimationFrame(frame);
}

window.addEventListener("DOMContentLoaded", main);
