import { describe, expect, it } from "vitest";
import { RateLimiter } from "../src/ratelimit.js";

describe("RateLimiter", () => {
  it("passes at most 60 sends per second under a pointer event flood", () => {
    const lim = new RateLimiter(60);
    let sent = 0;
    // 1 kHz of pointer events for one second
    for (let k = 0; k < 1000; k++) {
      if (lim.tryAcquire(k)) sent += 1;
    }
    expect(sent).toBeLessThanOrEqual(61);
    expect(sent).toBeGreaterThanOrEqual(59);
  });

  it("spaces accepted sends by at least the minimum interval", () => {
    const lim = new RateLimiter(60);
    const accepted: number[] = [];
    for (let k = 0; k < 3000; k++) {
      const now = k * 0.377; // irregular sub-interval event times
      if (lim.tryAcquire(now)) accepted.push(now);
    }
    for (let i = 1; i < accepted.length; i++) {
      expect(accepted[i] - accepted[i - 1]).toBeGreaterThanOrEqual(
        lim.minIntervalMs
      );
    }
  });

  it("lets sparse events through untouched", () => {
    const lim = new RateLimiter(60);
    expect(lim.tryAcquire(0)).toBe(true);
    expect(lim.tryAcquire(100)).toBe(true);
    expect(lim.tryAcquire(105)).toBe(false);
    expect(lim.tryAcquire(200)).toBe(true);
  });

  it("rejects a non-positive rate", () => {
    expect(() => new RateLimiter(0)).toThrow();
  });
});
