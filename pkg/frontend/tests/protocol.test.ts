import { describe, expect, it } from "vitest";
import { masterFrame, parseFrame } from "../src/protocol.js";

const hello = {
  type: "hello",
  session: "abc",
  scenario: "live_delayed",
  mode: "delayed",
  n_robots: 3,
  n_dim: 2,
  edges: [
    [1, 2],
    [1, 3],
  ],
  h: 0.001,
  duration_s: 120,
  r: 0.1,
  r_bar: 0.06,
  kappa_eps: 0.04,
  f_bar: 0.5,
  bound: 0.01,
};

const state = {
  type: "state",
  t: 0.25,
  x0: [0.01, 0.02],
  slaves: [
    { x: [0, 0], v: [0, 0] },
    { x: [0.015, 0], v: [0, 0] },
    { x: [-0.015, 0], v: [0, 0] },
  ],
  links: [
    { ij: [1, 2], dist: 0.015, dist_delayed: 0.016, alive: true },
    { ij: [1, 3], dist: 0.015, dist_delayed: null, alive: true },
  ],
  energy: { Vp: 0.001, V1: 0.002, V2: 0.003, bound: 0.01 },
  f: [0.1, 0.0],
  K: [1.2, 1.1, 1.1],
};

describe("parseFrame", () => {
  it("accepts the three server frame types", () => {
    expect(parseFrame(JSON.stringify(hello))?.type).toBe("hello");
    expect(parseFrame(JSON.stringify(state))?.type).toBe("state");
    const end = { type: "end", verdict: { ok: true, checks: {} } };
    const parsed = parseFrame(JSON.stringify(end));
    expect(parsed?.type).toBe("end");
    if (parsed?.type === "end") expect(parsed.verdict.ok).toBe(true);
  });

  it("rejects garbage without throwing", () => {
    expect(parseFrame("not json")).toBeNull();
    expect(parseFrame("42")).toBeNull();
    expect(parseFrame("null")).toBeNull();
    expect(parseFrame(JSON.stringify({ type: "mystery" }))).toBeNull();
    expect(parseFrame(JSON.stringify({ type: "end" }))).toBeNull();
  });

  it("rejects frames with missing or non-finite fields", () => {
    const noRadius = { ...hello } as Record<string, unknown>;
    delete noRadius.r_bar;
    expect(parseFrame(JSON.stringify(noRadius))).toBeNull();

    const badT = { ...state, t: "soon" };
    expect(parseFrame(JSON.stringify(badT))).toBeNull();

    // JSON has no NaN literal; a null sneaking into a vector must not parse
    const badX = { ...state, x0: [0.01, null] };
    expect(parseFrame(JSON.stringify(badX))).toBeNull();

    const badSlave = { ...state, slaves: [{ x: [0, 0] }] };
    expect(parseFrame(JSON.stringify(badSlave))).toBeNull();
  });

  it("keeps state payload values intact", () => {
    const parsed = parseFrame(JSON.stringify(state));
    expect(parsed).not.toBeNull();
    if (parsed?.type !== "state") throw new Error("expected state");
    expect(parsed.t).toBe(0.25);
    expect(parsed.links[1].dist_delayed).toBeNull();
    expect(parsed.energy.bound).toBe(0.01);
  });
});

describe("masterFrame", () => {
  it("serializes the outbound command with the client timestamp", () => {
    const raw = masterFrame([0.25, -0.1], 1234);
    const d = JSON.parse(raw);
    expect(d).toEqual({ type: "master", x: [0.25, -0.1], t_client: 1234 });
  });
});
