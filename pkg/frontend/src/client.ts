/** WebSocket link to the teleop service with reconnect handling. */

import { ServerMsg, TeleopInputMsg, isTeleopInput } from "./messages.js";
import { ConsoleViewModel } from "./viewmodel.js";

export class ConsoleClient {
  private ws: WebSocket | null = null;
  private url: string;
  private vm: ConsoleViewModel;
  private reconnectTimer: number | null = null;

  constructor(url: string, vm: ConsoleViewModel) {
    this.url = url;
    this.vm = vm;
  }

  connect(): void {
    this.ws = new WebSocket(this.url);
    this.ws.onopen = () => this.vm.handleOpen(performance.now());
    this.ws.onmessage = (ev) => {
      const msg = JSON.parse(ev.data as string) as ServerMsg;
      this.vm.handleMessage(msg, performance.now());
    };
    this.ws.onclose = () => {
      this.vm.handleClose();
      this.scheduleReconnect();
    };
    this.ws.onerror = () => {
      this.ws?.close();
    };
  }

  private scheduleReconnect(): void {
    if (this.reconnectTimer !== null) return;
    this.reconnectTimer = window.setTimeout(() => {
      this.reconnectTimer = null;
      this.connect();
    }, 1000);
  }

  /** Sends only schema-valid TeleopInput messages; anything else throws. */
  send(msg: TeleopInputMsg): void {
    if (!isTeleopInput(msg)) {
      throw new Error("refusing to send a malformed input message");
    }
    if (this.ws && this.ws.readyState === WebSocket.OPEN) {
      this.ws.send(JSON.stringify(msg));
    }
  }

  get open(): boolean {
    return this.ws?.readyState === WebSocket.OPEN;
  }
}
