// Outbound command gate: at most maxHz sends per second no matter how fast
// pointer events arrive. Pure bookkeeping over caller-supplied clocks so the
// limit is testable without timers.

export class RateLimiter {
  readonly minIntervalMs: number;
  private lastMs = -Infinity;

  constructor(maxHz: number) {
    if (!(maxHz > 0)) throw new Error("maxHz must be positive");
    this.minIntervalMs = 1000 / maxHz;
  }

  tryAcquire(nowMs: number): boolean {
    if (nowMs - this.lastMs < this.minIntervalMs) return false;
    this.lastMs = nowMs;
    return true;
  }
}
