// Fixed viewport transform between workspace coordinates (meters, y up) and
// canvas pixels (y down). Isotropic: one scale for both axes, so distances
// on screen are proportional to distances in the workspace. Drag positions
// clamp to the workspace box, which bounds every outbound command.

export class Viewport {
  readonly scale: number; // px per meter
  readonly cx: number;
  readonly cy: number;

  constructor(
    readonly centerX: number,
    readonly centerY: number,
    readonly span: number, // workspace box edge length, meters
    readonly widthPx: number,
    readonly heightPx: number
  ) {
    if (!(span > 0)) throw new Error("span must be positive");
    this.scale = Math.min(widthPx, heightPx) / span;
    this.cx = widthPx / 2;
    this.cy = heightPx / 2;
  }

  worldToScreen(p: [number, number]): [number, number] {
    return [
      this.cx + (p[0] - this.centerX) * this.scale,
      this.cy - (p[1] - this.centerY) * this.scale,
    ];
  }

  screenToWorld(q: [number, number]): [number, number] {
    return [
      this.centerX + (q[0] - this.cx) / this.scale,
      this.centerY - (q[1] - this.cy) / this.scale,
    ];
  }

  clampWorld(p: [number, number]): [number, number] {
    const half = this.span / 2;
    const clip = (v: number, c: number) =>
      Math.min(c + half, Math.max(c - half, v));
    return [clip(p[0], this.centerX), clip(p[1], this.centerY)];
  }

  // n = 3 scenarios render the third coordinate as marker size
  markerRadiusPx(basePx: number, z: number | undefined): number {
    if (z === undefined) return basePx;
    return Math.max(2, basePx * (1 + 4 * z));
  }
}
