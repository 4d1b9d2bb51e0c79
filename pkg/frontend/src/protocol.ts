// Wire types for the teleoperation service. The server speaks JSON text
// frames; everything here mirrors that protocol and nothing else. Parsing is
// defensive: a frame that does not match the schema yields null instead of an
// exception, mirroring how the server drops malformed operator frames.

export interface HelloFrame {
  type: "hello";
  session: string;
  scenario: string;
  mode: string;
  n_robots: number;
  n_dim: number;
  edges: [number, number][];
  h: number;
  duration_s: number;
  r: number;
  r_bar: number;
  kappa_eps: number;
  f_bar: number;
  bound: number | null;
}

export interface SlaveState {
  x: number[];
  v: number[];
}

export interface LinkState {
  ij: [number, number];
  dist: number;
  dist_delayed: number | null;
  alive: boolean;
}

export interface EnergyLadder {
  Vp: number | null;
  V1: number | null;
  V2: number | null;
  bound: number | null;
}

export interface StateFrame {
  type: "state";
  t: number;
  x0: number[];
  slaves: SlaveState[];
  links: LinkState[];
  energy: EnergyLadder;
  f: number[];
  K: number[];
}

export interface CheckResult {
  ok: boolean;
  mandatory: boolean;
  worst_margin: number;
  first_violation_t: number | null;
  description: string;
}

export interface Verdict {
  ok: boolean;
  mode: string;
  aborted: boolean;
  abort_reason: string | null;
  connectivity_lost: boolean;
  checks: Record<string, CheckResult>;
  [extra: string]: unknown;
}

export interface EndFrame {
  type: "end";
  verdict: Verdict;
}

export type ServerFrame = HelloFrame | StateFrame | EndFrame;

export interface MasterFrame {
  type: "master";
  x: [number, number];
  t_client: number;
}

function isNum(v: unknown): v is number {
  return typeof v === "number" && Number.isFinite(v);
}

function isVec(v: unknown): v is number[] {
  return Array.isArray(v) && v.length > 0 && v.every(isNum);
}

function isHello(d: any): d is HelloFrame {
  return (
    typeof d.session === "string" &&
    typeof d.scenario === "string" &&
    typeof d.mode === "string" &&
    isNum(d.n_robots) &&
    isNum(d.n_dim) &&
    Array.isArray(d.edges) &&
    isNum(d.h) &&
    isNum(d.duration_s) &&
    isNum(d.r) &&
    isNum(d.r_bar) &&
    isNum(d.kappa_eps) &&
    isNum(d.f_bar)
  );
}

function isState(d: any): d is StateFrame {
  return (
    isNum(d.t) &&
    isVec(d.x0) &&
    Array.isArray(d.slaves) &&
    d.slaves.every((s: any) => s && isVec(s.x) && isVec(s.v)) &&
    Array.isArray(d.links) &&
    d.links.every(
      (l: any) =>
        l &&
        Array.isArray(l.ij) &&
        l.ij.length === 2 &&
        isNum(l.dist) &&
        typeof l.alive === "boolean"
    ) &&
    d.energy !== undefined &&
    isVec(d.f) &&
    isVec(d.K)
  );
}

function isEnd(d: any): d is EndFrame {
  return d.verdict && typeof d.verdict.ok === "boolean";
}

export function parseFrame(raw: string): ServerFrame | null {
  let d: any;
  try {
    d = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof d !== "object" || d === null) return null;
  switch (d.type) {
    case "hello":
      return isHello(d) ? (d as HelloFrame) : null;
    case "state":
      return isState(d) ? (d as StateFrame) : null;
    case "end":
      return isEnd(d) ? (d as EndFrame) : null;
    default:
      return null;
  }
}

export function masterFrame(x: [number, number], tClientMs: number): string {
  const frame: MasterFrame = { type: "master", x, t_client: tClientMs };
  return JSON.stringify(frame);
}
