/** Episode browser: list, fetch and step through recorded episodes.
 *
 * Replay here means re-rendering recorded signals on a timeline (arm
 * joint traces, gripper widths, suction bits, line pressures). Object
 * motion is not reconstructed: that would need the simulator, and the
 * console never computes physics.
 */

export interface EpisodeSummary {
  name: string;
  task_id: string;
  instruction: string;
  steps: number;
  rate_hz: number;
}

export interface EpisodeStep {
  t: number;
  proprio: number[];
  action: number[];
  pressure: number[];
  subtask?: string;
}

export interface EpisodeData {
  header: Record<string, unknown>;
  layout: string[];
  steps: EpisodeStep[];
}

export function parseEpisodeText(text: string): EpisodeData {
  const lines = text.split("\n").filter((line) => line.trim().length > 0);
  if (lines.length === 0) throw new Error("empty episode file");
  const header = JSON.parse(lines[0]) as Record<string, unknown>;
  if (header["schema"] !== "vacgrip-episode") throw new Error("not an episode file");
  const steps: EpisodeStep[] = [];
  for (const line of lines.slice(1)) {
    const rec = JSON.parse(line) as EpisodeStep;
    steps.push(rec);
  }
  return { header, layout: (header["layout"] as string[]) ?? [], steps };
}

export async function fetchEpisodeList(base = ""): Promise<EpisodeSummary[]> {
  const res = await fetch(`${base}/episodes`);
  if (!res.ok) throw new Error(`episode list failed: ${res.status}`);
  return (await res.json()) as EpisodeSummary[];
}

export async function fetchEpisode(name: string, base = ""): Promise<EpisodeData> {
  const res = await fetch(`${base}/episodes/${encodeURIComponent(name)}`);
  if (!res.ok) throw new Error(`episode fetch failed: ${res.status}`);
  return parseEpisodeText(await res.text());
}

/** Playback cursor advancing by wall time against the recorded rate. */
export class ReplayCursor {
  readonly data: EpisodeData;
  index = 0;
  playing = false;
  private carrySeconds = 0;

  constructor(data: EpisodeData) {
    this.data = data;
  }

  get step(): EpisodeStep | null {
    return this.data.steps[this.index] ?? null;
  }

  get done(): boolean {
    return this.index >= this.data.steps.length - 1;
  }

  advance(dtSeconds: number, rateHz: number): void {
    if (!this.playing) return;
    this.carrySeconds += dtSeconds;
    const stride = 1 / rateHz;
    while (this.carrySeconds >= stride && !this.done) {
      this.carrySeconds -= stride;
      this.index += 1;
    }
    if (this.done) this.playing = false;
  }

  seekFraction(f: number): void {
    const clamped = Math.min(1, Math.max(0, f));
    this.index = Math.min(
      this.data.steps.length - 1,
      Math.floor(clamped * this.data.steps.length),
    );
  }
}
