// Wires the console together: create a session over HTTP, stream telemetry
// over the WebSocket, push drag targets back at no more than 60 Hz. All
// thresholds come from the hello frame; nothing physical is hardcoded here.

import { SessionClient } from "./client.js";
import { RateLimiter } from "./ratelimit.js";
import { ConsoleModel } from "./viewmodel.js";
import { Viewport } from "./transform.js";
import { SwarmCanvas, EnergyStrip, renderBars } from "./render.js";

const COMMAND_HZ = 60;
const WORKSPACE_SPAN_M = 1.2;

function wsUrl(sessionId: string): string {
  const proto = location.protocol === "https:" ? "wss:" : "ws:";
  return `${proto}//${location.host}/session/${sessionId}`;
}

async function createSession(scenario: string): Promise<string> {
  const resp = await fetch("/session", {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify({ scenario }),
  });
  if (!resp.ok) throw new Error(`session create failed: ${resp.status}`);
  const body = await resp.json();
  return body.session_id as string;
}

async function boot(): Promise<void> {
  const canvas = document.getElementById("swarm") as HTMLCanvasElement;
  const strip = document.getElementById("energy") as HTMLCanvasElement;
  const statusEl = document.getElementById("status") as HTMLElement;
  const barsEl = document.getElementById("bars") as HTMLElement;
  const stopBtn = document.getElementById("stop") as HTMLButtonElement;

  const params = new URLSearchParams(location.search);
  const scenario = params.get("scenario") ?? "live_delayed";

  const model = new ConsoleModel();
  const view = new Viewport(0, 0, WORKSPACE_SPAN_M, canvas.width, canvas.height);
  const swarm = new SwarmCanvas(canvas, view);
  const energy = new EnergyStrip(strip);
  const limiter = new RateLimiter(COMMAND_HZ);

  let sessionId: string;
  try {
    sessionId = await createSession(scenario);
  } catch (err) {
    statusEl.textContent = String(err);
    return;
  }

  const client = new SessionClient(wsUrl(sessionId), {
    onFrame: (frame) => model.ingest(frame, performance.now()),
    onDown: () => model.noteDisconnect(),
    onOpen: () => model.noteConnecting(),
  });
  client.connect();

  // drag handling: pointer position -> workspace coordinates, clamped
  let dragging = false;
  const toWorld = (ev: PointerEvent): [number, number] => {
    const rect = canvas.getBoundingClientRect();
    return view.clampWorld(
      view.screenToWorld([ev.clientX - rect.left, ev.clientY - rect.top])
    );
  };
  canvas.addEventListener("pointerdown", (ev) => {
    dragging = true;
    canvas.setPointerCapture(ev.pointerId);
    model.target = toWorld(ev);
  });
  canvas.addEventListener("pointermove", (ev) => {
    if (dragging) model.target = toWorld(ev);
  });
  const release = () => {
    dragging = false;
  };
  canvas.addEventListener("pointerup", release);
  canvas.addEventListener("pointercancel", release);

  // command pump: latest target, gated to 60 Hz
  setInterval(() => {
    if (dragging && model.target && limiter.tryAcquire(performance.now())) {
      client.sendMaster(model.target, Date.now());
    }
  }, 1000 / (4 * COMMAND_HZ));

  stopBtn.addEventListener("click", () => {
    void fetch(`/session/${sessionId}/stop`, { method: "POST" });
  });

  const paint = () => {
    const now = performance.now();
    swarm.draw(model, now);
    energy.draw(model);
    renderBars(model, barsEl);
    statusEl.textContent = `${scenario} ${model.statusText(now)}`;
    requestAnimationFrame(paint);
  };
  requestAnimationFrame(paint);
}

void boot();
