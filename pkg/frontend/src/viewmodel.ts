// Console state. The model only records what the server said and when; it
// never advances positions between frames, so the view is a pure function of
// (latest frame, drag state) and cannot extrapolate past the telemetry.

import type {
  EndFrame,
  HelloFrame,
  LinkState,
  ServerFrame,
  StateFrame,
  Verdict,
} from "./protocol.js";

export const STALE_AFTER_MS = 500;
export const AMBER_FRACTION = 0.8;

export type LinkColor = "green" | "amber" | "red";
export type Status = "connecting" | "live" | "ended" | "disconnected";

export interface EnergySample {
  t: number;
  Vp: number | null;
  V1: number | null;
  V2: number | null;
  bound: number | null;
}

export interface MarginBar {
  label: string;
  distMargin: number; // r_bar - dist, > 0 means inside the certified band
  mismatchMargin: number | null; // kappa*eps - |dist_delayed - dist|
  color: LinkColor;
}

export class ConsoleModel {
  hello: HelloFrame | null = null;
  frame: StateFrame | null = null;
  verdict: Verdict | null = null;
  status: Status = "connecting";
  lastFrameAtMs = -Infinity;
  target: [number, number] | null = null;
  history: EnergySample[] = [];
  historyCap: number;

  constructor(historyCap = 900) {
    this.historyCap = historyCap;
  }

  ingest(frame: ServerFrame, nowMs: number): void {
    switch (frame.type) {
      case "hello":
        this.hello = frame;
        this.status = "live";
        break;
      case "state":
        this.frame = frame;
        this.lastFrameAtMs = nowMs;
        if (this.status === "connecting" || this.status === "disconnected") {
          this.status = "live";
        }
        this.history.push({ t: frame.t, ...frame.energy });
        if (this.history.length > this.historyCap) {
          this.history.splice(0, this.history.length - this.historyCap);
        }
        break;
      case "end":
        this.verdict = (frame as EndFrame).verdict;
        this.status = "ended";
        break;
    }
  }

  noteDisconnect(): void {
    if (this.status !== "ended") this.status = "disconnected";
  }

  noteConnecting(): void {
    if (this.status !== "ended") this.status = "connecting";
  }

  // no frame for half a second while supposedly live: flag it, keep the view
  isStale(nowMs: number): boolean {
    if (this.status !== "live" || this.frame === null) return false;
    return nowMs - this.lastFrameAtMs > STALE_AFTER_MS;
  }

  linkColor(link: LinkState): LinkColor {
    if (!link.alive) return "red";
    const rBar = this.hello ? this.hello.r_bar : Infinity;
    return link.dist > AMBER_FRACTION * rBar ? "amber" : "green";
  }

  marginBars(): MarginBar[] {
    if (!this.frame || !this.hello) return [];
    const { r_bar, kappa_eps } = this.hello;
    return this.frame.links.map((l) => ({
      label: `${l.ij[0]}-${l.ij[1]}`,
      distMargin: r_bar - l.dist,
      mismatchMargin:
        l.dist_delayed === null
          ? null
          : kappa_eps - Math.abs(l.dist_delayed - l.dist),
      color: this.linkColor(l),
    }));
  }

  statusText(nowMs: number): string {
    if (this.status === "ended" && this.verdict) {
      return this.verdict.ok ? "ended: PASS" : "ended: FAIL";
    }
    if (this.isStale(nowMs)) return "live (stale)";
    return this.status;
  }
}
