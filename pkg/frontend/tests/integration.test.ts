// End-to-end: the Session against a real simulator service. The browser
// console uses the WebSocket port; here the same Session runs over the raw
// stream port through a line-framed transport, so everything above the
// framing (handshake, correlation, telemetry, phases) is exercised for real.

import { ChildProcess, spawn } from "node:child_process";
import net from "node:net";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { Session, Transport } from "../src/session.js";

let proc: ChildProcess;
let controlPort = 0;

function lineTransport(url: string): Transport {
  const port = Number(new URL(url).port);
  const sock = net.createConnection({ host: "127.0.0.1", port });
  sock.setNoDelay(true);
  const transport: Transport = {
    send: (text) => sock.write(text + "\n"),
    close: () => sock.destroy(),
    onmessage: null,
    onopen: null,
    onclose: null,
  };
  let buf = "";
  sock.on("connect", () => transport.onopen?.());
  sock.on("data", (chunk) => {
    buf += chunk.toString("utf-8");
    let nl;
    while ((nl = buf.indexOf("\n")) >= 0) {
      const line = buf.slice(0, nl);
      buf = buf.slice(nl + 1);
      if (line.trim()) transport.onmessage?.(line);
    }
  });
  sock.on("close", () => transport.onclose?.());
  sock.on("error", () => undefined);
  return transport;
}

function until(predicate: () => boolean, timeoutMs = 10_000): Promise<void> {
  return new Promise((resolve, reject) => {
    const t0 = Date.now();
    const poll = () => {
      if (predicate()) return resolve();
      if (Date.now() - t0 > timeoutMs) return reject(new Error("timed out"));
      setTimeout(poll, 20);
    };
    poll();
  });
}

beforeAll(async () => {
  proc = spawn("python3", ["tests/serve_for_test.py"], {
    cwd: new URL("..", import.meta.url).pathname,
    stdio: ["ignore", "pipe", "inherit"],
  });
  const ports = await new Promise<{ control: number }>((resolve, reject) => {
    let out = "";
    proc.stdout!.on("data", (chunk) => {
      out += chunk.toString();
      const nl = out.indexOf("\n");
      if (nl >= 0) resolve(JSON.parse(out.slice(0, nl)));
    });
    proc.on("exit", (code) => reject(new Error(`sim exited early (${code})`)));
    setTimeout(() => reject(new Error("sim did not start")), 15_000);
  });
  controlPort = ports.control;
}, 20_000);

afterAll(() => {
  proc?.kill("SIGKILL");
});

describe("console session against a live simulator", () => {
  it("handshakes, lists behaviors, and round-trips start/stop acks", async () => {
    const session = new Session(`tcp://127.0.0.1:${controlPort}`, lineTransport, {
      schedule: () => undefined,
    });
    session.connect();
    await until(() => session.view.connection === "ready");
    expect(session.view.behaviors.map((b) => b.id)).toContain("slow");
    expect(session.view.server?.shell?.strip_length_mm).toBe(150);

    const startAck = await session.start("slow");
    expect(startAck.kind).toBe("ack");

    const busy = await session.start("dragon");
    expect(busy.kind).toBe("error");
    expect((busy.payload as any).code).toBe("Busy");

    const stopAck = await session.stop("slow");
    expect(stopAck.kind).toBe("ack");
    session.close();
  }, 15_000);

  it("streams telemetry at >= 10 Hz with raw t_ms stamps", async () => {
    const session = new Session(`tcp://127.0.0.1:${controlPort}`, lineTransport, {
      schedule: () => undefined,
    });
    session.connect();
    await until(() => session.view.connection === "ready");

    const before = session.view.telemetry.length;
    const t0 = Date.now();
    await until(() => session.view.telemetry.length >= before + 15);
    const elapsedS = (Date.now() - t0) / 1000;
    expect(15 / elapsedS).toBeGreaterThanOrEqual(10);

    const stamps = session.view.telemetry.map((f) => f.t_ms);
    for (const s of stamps) expect(s % 10).toBe(0);
    for (let i = 1; i < stamps.length; i++) {
      expect(stamps[i]).toBeGreaterThan(stamps[i - 1]);
    }
    session.close();
  }, 15_000);

  it("dismisses the circadian alarm via an injected Flip", async () => {
    const session = new Session(`tcp://127.0.0.1:${controlPort}`, lineTransport, {
      schedule: () => undefined,
    });
    session.connect();
    await until(() => session.view.connection === "ready");

    const ack = await session.start("circadian", { alarm_s: 0.5 }, true);
    expect(ack.kind).toBe("ack");
    await until(
      () => session.view.activeId === "circadian" && session.view.activePhase === "alarm",
    );

    const flipAck = await session.injectEvent("Flip");
    expect(flipAck.kind).toBe("ack");
    await until(() => session.view.activePhase === "dismissed");
    // and the behavior winds down to idle shortly after
    await until(() => session.view.activeId === null, 10_000);
    session.close();
  }, 20_000);
});
