import { describe, expect, it } from "vitest";
import { BACKOFF_MS, SessionClient, type SocketLike } from "../src/client.js";
import type { ServerFrame } from "../src/protocol.js";

class FakeSocket implements SocketLike {
  onopen: (() => void) | null = null;
  onmessage: ((ev: { data: unknown }) => void) | null = null;
  onclose: (() => void) | null = null;
  onerror: (() => void) | null = null;
  readyState = 0;
  sent: string[] = [];
  closedByClient = false;

  send(data: string): void {
    this.sent.push(data);
  }
  close(): void {
    this.closedByClient = true;
  }
  open(): void {
    this.readyState = 1;
    this.onopen?.();
  }
  message(data: unknown): void {
    this.onmessage?.({ data });
  }
  drop(): void {
    this.readyState = 3;
    this.onclose?.();
  }
}

function harness() {
  const sockets: FakeSocket[] = [];
  const scheduled: { fn: () => void; ms: number }[] = [];
  const frames: ServerFrame[] = [];
  let downs = 0;
  const client = new SessionClient(
    "ws://test/session/s1",
    {
      onFrame: (f) => frames.push(f),
      onDown: () => {
        downs += 1;
      },
    },
    () => {
      const s = new FakeSocket();
      sockets.push(s);
      return s;
    },
    (fn, ms) => {
      scheduled.push({ fn, ms });
    }
  );
  return { client, sockets, scheduled, frames, downs: () => downs };
}

const endRaw = JSON.stringify({ type: "end", verdict: { ok: true } });

describe("SessionClient", () => {
  it("dispatches parsed frames and counts malformed ones", () => {
    const h = harness();
    h.client.connect();
    h.sockets[0].open();
    h.sockets[0].message(JSON.stringify({ type: "state", t: 1 })); // malformed state
    h.sockets[0].message("garbage");
    h.sockets[0].message(endRaw);
    expect(h.frames.map((f) => f.type)).toEqual(["end"]);
    expect(h.client.malformed).toBe(2);
  });

  it("reconnects on unexpected close with the backoff ladder", () => {
    const h = harness();
    h.client.connect();
    expect(h.sockets).toHaveLength(1);

    h.sockets[0].open();
    h.sockets[0].drop();
    expect(h.downs()).toBe(1);
    expect(h.scheduled.map((s) => s.ms)).toEqual([BACKOFF_MS[0]]);

    h.scheduled[0].fn(); // timer fires, second socket dialed
    expect(h.sockets).toHaveLength(2);
    h.sockets[1].drop(); // never opened, drops again
    h.sockets[1].drop = () => undefined;
    expect(h.scheduled.map((s) => s.ms)).toEqual([BACKOFF_MS[0], BACKOFF_MS[1]]);

    h.scheduled[1].fn();
    h.sockets[2].drop();
    expect(h.scheduled.map((s) => s.ms)).toEqual([
      BACKOFF_MS[0],
      BACKOFF_MS[1],
      BACKOFF_MS[2],
    ]);

    // a successful open resets the ladder
    h.scheduled[2].fn();
    h.sockets[3].open();
    h.sockets[3].drop();
    expect(h.scheduled[3].ms).toBe(BACKOFF_MS[0]);
  });

  it("stops reconnecting after the end frame", () => {
    const h = harness();
    h.client.connect();
    h.sockets[0].open();
    h.sockets[0].message(endRaw);
    h.sockets[0].drop(); // server closes after the verdict
    expect(h.scheduled).toHaveLength(0);
    expect(h.sockets).toHaveLength(1);
  });

  it("stops reconnecting after an intentional close", () => {
    const h = harness();
    h.client.connect();
    h.sockets[0].open();
    h.client.close();
    expect(h.sockets[0].closedByClient).toBe(true);
    h.sockets[0].drop();
    expect(h.scheduled).toHaveLength(0);
  });

  it("only sends master frames while the socket is open", () => {
    const h = harness();
    expect(h.client.sendMaster([0.1, 0.2], 7)).toBe(false);
    h.client.connect();
    expect(h.client.sendMaster([0.1, 0.2], 7)).toBe(false); // dialing, not open
    h.sockets[0].open();
    expect(h.client.sendMaster([0.1, 0.2], 7)).toBe(true);
    expect(JSON.parse(h.sockets[0].sent[0])).toEqual({
      type: "master",
      x: [0.1, 0.2],
      t_client: 7,
    });
    h.sockets[0].drop();
    expect(h.client.sendMaster([0.3, 0.4], 8)).toBe(false);
  });
});
