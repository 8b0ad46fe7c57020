/** WebSocket session client: receives frames into the view state and
 * pumps input samples out at a fixed rate. */

import { InputBinding } from "./input.js";
import type { ControlMessage, InputMessage } from "./protocol.js";
import { applyRaw, initialState, type ViewState } from "./state.js";

export const SEND_HZ = 30;

export class SessionClient {
  state: ViewState = initialState();
  onChange: (s: ViewState) => void = () => {};

  private ws: WebSocket | null = null;
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(
    public readonly url: string,
    public readonly binding: InputBinding,
  ) {}

  connect(): void {
    this.ws = new WebSocket(this.url);
    this.ws.onmessage = (ev) => {
      this.state = applyRaw(this.state, String(ev.data));
      this.onChange(this.state);
    };
    this.ws.onclose = () => {
      if (this.state.status === "connected") {
        this.state = { ...this.state, status: "disconnected" };
        this.onChange(this.state);
      }
      this.stopPump();
    };
    this.ws.onopen = () => this.startPump();
  }

  control(msg: ControlMessage): void {
    this.ws?.send(JSON.stringify(msg));
  }

  close(): void {
    this.stopPump();
    this.ws?.close();
    this.ws = null;
  }

  private startPump(): void {
    const period = 1 / SEND_HZ;
    this.timer = setInterval(() => {
      if (!this.ws || this.ws.readyState !== WebSocket.OPEN) return;
      const sample = this.binding.sample(performance.now() / 1000, period);
      const msg: InputMessage = { type: "input", ...sample };
      this.ws.send(JSON.stringify(msg));
    }, 1000 / SEND_HZ);
  }

  private stopPump(): void {
    if (this.timer !== null) clearInterval(this.timer);
    this.timer = null;
  }
}
