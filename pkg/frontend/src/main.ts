// Browser entry point: wires the Session to a plain-DOM operator panel.

import { TelemetryChart, ShellView } from "./chart.js";
import { silhouette } from "./geometry.js";
import { BehaviorInfo } from "./protocol.js";
import { Session, SessionView, Transport } from "./session.js";

function wsTransport(url: string): Transport {
  const ws = new WebSocket(url);
  const transport: Transport = {
    send: (text) => ws.send(text),
    close: () => ws.close(),
    onmessage: null,
    onopen: null,
    onclose: null,
  };
  ws.onopen = () => transport.onopen?.();
  ws.onmessage = (ev) => transport.onmessage?.(String(ev.data));
  ws.onclose = () => transport.onclose?.();
  ws.onerror = () => undefined; // onclose follows
  return transport;
}

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing #${id}`);
  return el as T;
};

const defaultUrl = `ws://${location.hostname || "127.0.0.1"}:7422`;

let session: Session | null = null;
let chart: TelemetryChart | null = null;
let shellView: ShellView | null = null;
let registryRendered = "";

function connect(): void {
  session?.close();
  const url = ($("url") as HTMLInputElement).value || defaultUrl;
  session = new Session(url, wsTransport);
  session.onChange(render);
  session.connect();
}

function sliderRange(key: string, value: number): [number, number, number] {
  if (key === "amplitude" || key.endsWith("duty") || key.endsWith("fraction")) {
    return [0.05, 1, 0.01];
  }
  if (key.endsWith("_s")) return [0.1, Math.max(10, value * 2), 0.1];
  if (key.startsWith("bpm")) return [1, 30, 1];
  if (key.endsWith("_hz")) return [1, 60, 1];
  return [0, Math.max(1, value * 2), 0.01];
}

function renderRegistry(view: SessionView): void {
  // re-render only when the set of behaviors or their states change;
  // slider drags must survive telemetry updates
  const signature = JSON.stringify(
    view.behaviors.map((b) => [b.id, b.active, b.phase, Object.keys(b.params)]),
  );
  if (signature === registryRendered) return;
  registryRendered = signature;

  const root = $("registry");
  root.textContent = "";
  for (const b of view.behaviors) {
    root.appendChild(behaviorCard(b));
  }
}

function behaviorCard(b: BehaviorInfo): HTMLElement {
  const card = document.createElement("div");
  card.className = `behavior${b.active ? " active" : ""}`;

  const head = document.createElement("div");
  head.className = "behavior-head";
  const name = document.createElement("strong");
  name.textContent = b.id;
  head.appendChild(name);
  if (b.phase) {
    const phase = document.createElement("span");
    phase.className = "phase";
    phase.textContent = b.phase;
    head.appendChild(phase);
  }
  card.appendChild(head);

  const desc = document.createElement("div");
  desc.className = "desc";
  desc.textContent = b.description;
  card.appendChild(desc);

  for (const note of b.notes) {
    const warn = document.createElement("div");
    warn.className = "desc";
    warn.textContent = `note: ${note}`;
    card.appendChild(warn);
  }

  const buttons = document.createElement("div");
  buttons.className = "buttons";
  const mk = (label: string, fn: () => void, cls = "") => {
    const btn = document.createElement("button");
    btn.textContent = label;
    if (cls) btn.className = cls;
    btn.onclick = fn;
    buttons.appendChild(btn);
  };
  mk("start", () => void session?.start(b.id));
  mk("preempt", () => void session?.start(b.id, {}, true), "warn");
  mk("stop", () => void session?.stop(b.id), "stop");
  card.appendChild(buttons);

  for (const [key, value] of Object.entries(b.params)) {
    if (typeof value !== "number") continue;
    const row = document.createElement("label");
    row.className = "param";
    const caption = document.createElement("span");
    caption.textContent = `${key} = ${value}`;
    const slider = document.createElement("input");
    slider.type = "range";
    const [min, max, step] = sliderRange(key, value);
    slider.min = String(min);
    slider.max = String(max);
    slider.step = String(step);
    slider.value = String(value);
    slider.oninput = () => {
      caption.textContent = `${key} = ${slider.value}`;
    };
    slider.onchange = () => {
      void session?.setParam(b.id, key, Number(slider.value));
    };
    row.appendChild(caption);
    row.appendChild(slider);
    card.appendChild(row);
  }
  return card;
}

function render(view: SessionView): void {
  $("state").textContent = view.connection;
  $("state").dataset.state = view.connection;
  $("active").textContent = view.activeId
    ? `${view.activeId}${view.activePhase ? ` / ${view.activePhase}` : ""}`
    : "idle";

  renderRegistry(view);

  const logEl = $("log");
  logEl.textContent = view.log.slice(-12).join("\n");

  const latest = view.telemetry[view.telemetry.length - 1];
  if (latest) {
    chart?.render(view.telemetry);
    const shell = view.server?.shell;
    if (shell && latest.height_mm !== undefined && latest.bulge_mm !== undefined) {
      shellView?.render(
        silhouette(latest.height_mm, latest.bulge_mm, shell.attach_radius_mm),
        latest.height_mm,
        latest.led0,
      );
    }
    $("readout").textContent =
      `t=${(latest.t_ms / 1000).toFixed(2)} s   compression=${latest.compression.toFixed(3)}` +
      `   vib=${latest.vib.toFixed(3)}` +
      (latest.height_mm !== undefined
        ? `   height=${latest.height_mm.toFixed(1)} mm   bulge=${latest.bulge_mm?.toFixed(1)} mm`
        : "");
  }
}

window.addEventListener("load", () => {
  ($("url") as HTMLInputElement).value = defaultUrl;
  chart = new TelemetryChart(
    $("chart") as HTMLCanvasElement,
    [
      { key: "compression", color: "#6fc3ff", label: "compression" },
      { key: "vib", color: "#ff8a6f", label: "vibration" },
    ],
  );
  shellView = new ShellView($("shell") as HTMLCanvasElement);
  $("connect").onclick = connect;
  for (const kind of ["Tilt", "TwoTilts", "Flip", "TouchStart", "TouchEnd"]) {
    const btn = document.createElement("button");
    btn.textContent = kind;
    btn.onclick = () => void session?.injectEvent(kind);
    $("events").appendChild(btn);
  }
  connect();
});
