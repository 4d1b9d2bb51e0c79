// WebSocket session client. The socket constructor and the timer are
// injected so reconnect behavior runs under test with fake sockets and a
// fake clock. Reconnects use a capped backoff ladder and stop for good once
// the run has ended or close() was called; the view model is only ever
// touched from the frame callback.

import { parseFrame, masterFrame, type ServerFrame } from "./protocol.js";

export interface SocketLike {
  onopen: (() => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: (() => void) | null;
  onerror: (() => void) | null;
  readyState: number;
  send(data: string): void;
  close(): void;
}

export type SocketFactory = (url: string) => SocketLike;
export type Schedule = (fn: () => void, ms: number) => void;

export interface ClientHooks {
  onFrame(frame: ServerFrame): void;
  onOpen?(): void;
  onDown?(): void; // closed unexpectedly, reconnect pending
}

export const BACKOFF_MS = [250, 500, 1000, 2000, 5000];
const OPEN = 1;

export class SessionClient {
  private ws: SocketLike | null = null;
  private attempts = 0;
  private done = false;
  malformed = 0;

  constructor(
    readonly url: string,
    readonly hooks: ClientHooks,
    private readonly factory: SocketFactory = (u) =>
      new WebSocket(u) as unknown as SocketLike,
    private readonly schedule: Schedule = (fn, ms) => {
      setTimeout(fn, ms);
    }
  ) {}

  connect(): void {
    if (this.done) return;
    const ws = this.factory(this.url);
    this.ws = ws;
    ws.onopen = () => {
      this.attempts = 0;
      this.hooks.onOpen?.();
    };
    ws.onmessage = (ev) => {
      const frame = parseFrame(String(ev.data));
      if (frame === null) {
        this.malformed += 1;
        return;
      }
      if (frame.type === "end") this.done = true; // run is over, do not reconnect
      this.hooks.onFrame(frame);
    };
    ws.onclose = () => {
      if (this.ws !== ws) return; // superseded socket
      this.ws = null;
      if (this.done) return;
      this.hooks.onDown?.();
      const delay = BACKOFF_MS[Math.min(this.attempts, BACKOFF_MS.length - 1)];
      this.attempts += 1;
      this.schedule(() => this.connect(), delay);
    };
    ws.onerror = () => {
      // the close handler owns recovery
    };
  }

  get isOpen(): boolean {
    return this.ws !== null && this.ws.readyState === OPEN;
  }

  sendMaster(x: [number, number], tClientMs: number): boolean {
    if (!this.isOpen) return false;
    this.ws!.send(masterFrame(x, tClientMs));
    return true;
  }

  close(): void {
    this.done = true;
    if (this.ws !== null) {
      const ws = this.ws;
      this.ws = null;
      ws.close();
    }
  }
}
