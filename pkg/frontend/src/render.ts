// Canvas painting. Reads the model, draws, changes nothing: all state lives
// in ConsoleModel and all geometry in Viewport.

import type { ConsoleModel, LinkColor } from "./viewmodel.js";
import type { Viewport } from "./transform.js";

const LINK_RGB: Record<LinkColor, string> = {
  green: "#2e9e4f",
  amber: "#d99a1b",
  red: "#c0392b",
};

export class SwarmCanvas {
  private ctx: CanvasRenderingContext2D;

  constructor(readonly canvas: HTMLCanvasElement, readonly view: Viewport) {
    const ctx = canvas.getContext("2d");
    if (!ctx) throw new Error("2d canvas context unavailable");
    this.ctx = ctx;
  }

  draw(model: ConsoleModel, nowMs: number): void {
    const { ctx, view } = this;
    ctx.clearRect(0, 0, view.widthPx, view.heightPx);
    const fr = model.frame;
    if (!fr) return;

    // links first so the markers sit on top
    for (const link of fr.links) {
      const a = fr.slaves[link.ij[0] - 1];
      const b = fr.slaves[link.ij[1] - 1];
      if (!a || !b) continue;
      const [ax, ay] = view.worldToScreen([a.x[0], a.x[1]]);
      const [bx, by] = view.worldToScreen([b.x[0], b.x[1]]);
      ctx.strokeStyle = LINK_RGB[model.linkColor(link)];
      ctx.lineWidth = 2;
      ctx.beginPath();
      ctx.moveTo(ax, ay);
      ctx.lineTo(bx, by);
      ctx.stroke();
    }

    // operator target cross and the master point
    const [tx, ty] = view.worldToScreen([fr.x0[0], fr.x0[1]]);
    ctx.strokeStyle = "#555";
    ctx.beginPath();
    ctx.moveTo(tx - 6, ty);
    ctx.lineTo(tx + 6, ty);
    ctx.moveTo(tx, ty - 6);
    ctx.lineTo(tx, ty + 6);
    ctx.stroke();
    if (model.target) {
      const [dx, dy] = view.worldToScreen(model.target);
      ctx.strokeStyle = "#999";
      ctx.strokeRect(dx - 4, dy - 4, 8, 8);
    }

    // robots; robot 1 is the informed one and gets a ring
    fr.slaves.forEach((s, i) => {
      const [px, py] = view.worldToScreen([s.x[0], s.x[1]]);
      const rad = view.markerRadiusPx(5, s.x[2]);
      ctx.fillStyle = i === 0 ? "#1d5fbf" : "#333";
      ctx.beginPath();
      ctx.arc(px, py, rad, 0, 2 * Math.PI);
      ctx.fill();
      if (i === 0) {
        ctx.strokeStyle = "#1d5fbf";
        ctx.beginPath();
        ctx.arc(px, py, rad + 3, 0, 2 * Math.PI);
        ctx.stroke();
      }
    });

    if (model.isStale(nowMs)) {
      ctx.fillStyle = "rgba(200, 200, 200, 0.45)";
      ctx.fillRect(0, 0, view.widthPx, view.heightPx);
    }
  }
}

export class EnergyStrip {
  private ctx: CanvasRenderingContext2D;

  constructor(readonly canvas: HTMLCanvasElement) {
    const ctx = canvas.getContext("2d");
    if (!ctx) throw new Error("2d canvas context unavailable");
    this.ctx = ctx;
  }

  draw(model: ConsoleModel): void {
    const { ctx } = this;
    const w = this.canvas.width;
    const h = this.canvas.height;
    ctx.clearRect(0, 0, w, h);
    const hist = model.history;
    if (hist.length < 2) return;
    const series: [keyof (typeof hist)[0], string][] = [
      ["Vp", "#2e9e4f"],
      ["V1", "#1d5fbf"],
      ["V2", "#7d3fbf"],
      ["bound", "#c0392b"],
    ];
    let top = 0;
    for (const s of hist) {
      for (const [key] of series) {
        const v = s[key];
        if (typeof v === "number" && Number.isFinite(v)) top = Math.max(top, v);
      }
    }
    if (top <= 0) return;
    const xAt = (i: number) => (i / (hist.length - 1)) * w;
    const yAt = (v: number) => h - (v / top) * (h - 4) - 2;
    for (const [key, color] of series) {
      ctx.strokeStyle = color;
      ctx.lineWidth = key === "bound" ? 1 : 2;
      ctx.beginPath();
      let pen = false;
      hist.forEach((s, i) => {
        const v = s[key];
        if (typeof v !== "number" || !Number.isFinite(v)) {
          pen = false;
          return;
        }
        if (pen) ctx.lineTo(xAt(i), yAt(v));
        else ctx.moveTo(xAt(i), yAt(v));
        pen = true;
      });
      ctx.stroke();
    }
  }
}

export function renderBars(model: ConsoleModel, el: HTMLElement): void {
  const bars = model.marginBars();
  el.textContent = "";
  for (const bar of bars) {
    const row = document.createElement("div");
    row.className = "bar-row";
    const label = document.createElement("span");
    label.textContent = `link ${bar.label}`;
    label.style.color = LINK_RGB[bar.color];
    const dist = document.createElement("span");
    dist.textContent = ` dist margin ${bar.distMargin.toFixed(4)}`;
    row.appendChild(label);
    row.appendChild(dist);
    if (bar.mismatchMargin !== null) {
      const mm = document.createElement("span");
      mm.textContent = ` mismatch margin ${bar.mismatchMargin.toFixed(4)}`;
      row.appendChild(mm);
    }
    el.appendChild(row);
  }
}
