// Tiny dependency-free canvas chart for the rolling telemetry window.

import { TelemetryFrame } from "./protocol.js";

export interface Series {
  key: "compression" | "vib";
  color: string;
  label: string;
}

export class TelemetryChart {
  private ctx: CanvasRenderingContext2D;

  constructor(private canvas: HTMLCanvasElement, private series: Series[],
              private windowMs = 60_000) {
    const ctx = canvas.getContext("2d");
    if (!ctx) throw new Error("canvas 2d context unavailable");
    this.ctx = ctx;
  }

  render(frames: TelemetryFrame[]): void {
    const { ctx, canvas } = this;
    const w = canvas.width;
    const h = canvas.height;
    ctx.clearRect(0, 0, w, h);
    ctx.fillStyle = "#10151c";
    ctx.fillRect(0, 0, w, h);
    if (frames.length < 2) return;

    const tEnd = frames[frames.length - 1].t_ms;
    const tStart = tEnd - this.windowMs;
    const x = (t: number) => ((t - tStart) / this.windowMs) * w;
    const y = (v: number) => h - 4 - v * (h - 8);

    ctx.strokeStyle = "#2a3442";
    ctx.lineWidth = 1;
    for (let sec = Math.ceil(tStart / 10_000) * 10_000; sec <= tEnd; sec += 10_000) {
      ctx.beginPath();
      ctx.moveTo(x(sec), 0);
      ctx.lineTo(x(sec), h);
      ctx.stroke();
    }

    for (const s of this.series) {
      ctx.strokeStyle = s.color;
      ctx.lineWidth = 1.5;
      ctx.beginPath();
      let started = false;
      for (const f of frames) {
        if (f.t_ms < tStart) continue;
        const px = x(f.t_ms);
        const py = y(f[s.key]);
        if (!started) {
          ctx.moveTo(px, py);
          started = true;
        } else {
          ctx.lineTo(px, py);
        }
      }
      ctx.stroke();
    }

    ctx.font = "11px system-ui, sans-serif";
    let lx = 8;
    for (const s of this.series) {
      ctx.fillStyle = s.color;
      ctx.fillText(s.label, lx, 14);
      lx += ctx.measureText(s.label).width + 14;
    }
  }
}

export class ShellView {
  private ctx: CanvasRenderingContext2D;

  constructor(private canvas: HTMLCanvasElement) {
    const ctx = canvas.getContext("2d");
    if (!ctx) throw new Error("canvas 2d context unavailable");
    this.ctx = ctx;
  }

  render(points: Array<[number, number]>, heightMm: number, led: [number, number, number]): void {
    const { ctx, canvas } = this;
    const w = canvas.width;
    const h = canvas.height;
    ctx.clearRect(0, 0, w, h);
    ctx.fillStyle = "#10151c";
    ctx.fillRect(0, 0, w, h);
    if (!points.length) return;

    const scale = (h - 30) / 170; // fits the default 150 mm shell with margin
    const cx = w / 2;
    const cy = h / 2;
    const toPx = ([mx, my]: [number, number]): [number, number] =>
      [cx + mx * scale, cy - my * scale];

    ctx.fillStyle = `rgba(${led[0]}, ${led[1]}, ${led[2]}, 0.25)`;
    ctx.strokeStyle = "#d8e0ea";
    ctx.lineWidth = 2;
    ctx.beginPath();
    const right = points.map(toPx);
    const left = points.map(([mx, my]) => toPx([-mx, my]));
    ctx.moveTo(right[0][0], right[0][1]);
    for (const [px, py] of right.slice(1)) ctx.lineTo(px, py);
    for (const [px, py] of left.reverse()) ctx.lineTo(px, py);
    ctx.closePath();
    ctx.fill();
    ctx.stroke();

    // cap and base plates
    ctx.strokeStyle = "#8b97a5";
    ctx.lineWidth = 3;
    for (const sign of [1, -1]) {
      const [x1, y1] = toPx([-42, (sign * heightMm) / 2]);
      const [x2, y2] = toPx([42, (sign * heightMm) / 2]);
      ctx.beginPath();
      ctx.moveTo(x1, y1);
      ctx.lineTo(x2, y2);
      ctx.stroke();
    }
  }
}
