// WebSocket session against the bus: hello/register handshake, frame
// dispatch, automatic retry with backoff. Works with the browser
// WebSocket and with the `ws` package (both expose onopen/onmessage).

import type { Frame } from "./protocol.js";
import { helloFrame, parseFrame, registerFrame } from "./protocol.js";

export interface WebSocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
}

export type SocketFactory = (url: string) => WebSocketLike;

export interface SessionHooks {
  onFrame(frame: Frame): void;
  onStatus(status: "connecting" | "connected" | "retrying"): void;
}

const RETRY_BASE_MS = 500;
const RETRY_MAX_MS = 10_000;

export class BusSession {
  private socket: WebSocketLike | null = null;
  private attempts = 0;
  private closed = false;
  private retryTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private readonly url: string,
    private readonly operatorId: string,
    private readonly hooks: SessionHooks,
    private readonly makeSocket: SocketFactory,
  ) {}

  connect(): void {
    this.hooks.onStatus(this.attempts === 0 ? "connecting" : "retrying");
    const socket = this.makeSocket(this.url);
    this.socket = socket;
    socket.onopen = () => {
      socket.send(JSON.stringify(helloFrame()));
    };
    socket.onmessage = (ev) => {
      const frame = parseFrame(String(ev.data));
      if (frame === null) {
        return;
      }
      if (frame.type === "hello") {
        this.attempts = 0;
        socket.send(JSON.stringify(registerFrame(this.operatorId)));
        this.hooks.onStatus("connected");
        return;
      }
      this.hooks.onFrame(frame);
    };
    socket.onclose = () => this.scheduleRetry();
    socket.onerror = () => {
      // onclose follows; nothing to do here
    };
  }

  sendFrame(frame: Frame): void {
    this.socket?.send(JSON.stringify(frame));
  }

  close(): void {
    this.closed = true;
    if (this.retryTimer !== null) {
      clearTimeout(this.retryTimer);
    }
    this.socket?.close();
  }

  private scheduleRetry(): void {
    if (this.closed) {
      return;
    }
    this.hooks.onStatus("retrying");
    const backoff = Math.min(RETRY_BASE_MS * 2 ** this.attempts, RETRY_MAX_MS);
    this.attempts += 1;
    this.retryTimer = setTimeout(() => this.connect(), backoff);
  }
}
