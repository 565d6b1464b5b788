import { describe, expect, it } from "vitest";

import { Message, encode } from "../src/protocol.js";
import { Session, Transport } from "../src/session.js";

class FakeTransport implements Transport {
  sent: Message[] = [];
  onmessage: ((text: string) => void) | null = null;
  onopen: (() => void) | null = null;
  onclose: (() => void) | null = null;
  closed = false;

  send(text: string): void {
    this.sent.push(JSON.parse(text));
  }

  close(): void {
    this.closed = true;
  }

  open(): void {
    this.onopen?.();
  }

  reply(msg: Message): void {
    this.onmessage?.(encode(msg));
  }

  ackFor(kind: string, payload: Record<string, unknown> = {}): void {
    const req = this.sent.find((m) => m.kind === kind);
    if (!req) throw new Error(`no ${kind} request sent`);
    this.reply({ v: 1, id: req.id, kind: "ack", payload });
  }
}

const LISTING = {
  behaviors: [
    {
      id: "slow", channels: ["servo"], params: { amplitude: 0.7 },
      active: false, phase: null, notes: [], description: "",
    },
  ],
};

async function flush(): Promise<void> {
  await new Promise((resolve) => setTimeout(resolve, 0));
}

async function completeHandshake(transport: FakeTransport): Promise<void> {
  // each ack resolves an await inside handshake(); flush lets the next
  // request go out before we answer it
  transport.ackFor("hello", { server: "lantern-sim", proto: 1, tick_ms: 10 });
  await flush();
  transport.ackFor("list", LISTING);
  await flush();
  transport.ackFor("subscribe", { every: 5 });
  await flush();
}

async function readySession(): Promise<{ session: Session; transport: FakeTransport }> {
  const transport = new FakeTransport();
  const session = new Session("fake://", () => transport, {
    schedule: () => undefined,  // no automatic reconnect during unit tests
  });
  session.connect();
  transport.open();
  await completeHandshake(transport);
  return { session, transport };
}

describe("session", () => {
  it("handshakes hello -> list -> subscribe and becomes ready", async () => {
    const { session, transport } = await readySession();
    expect(session.view.connection).toBe("ready");
    expect(transport.sent.map((m) => m.kind)).toEqual(["hello", "list", "subscribe"]);
    expect(session.view.behaviors.map((b) => b.id)).toEqual(["slow"]);
  });

  it("assigns unique increasing request ids", async () => {
    const { session, transport } = await readySession();
    void session.start("slow");
    void session.stop("slow");
    void session.injectEvent("Flip");
    const ids = transport.sent.map((m) => m.id);
    expect(new Set(ids).size).toBe(ids.length);
    expect([...ids].sort((a, b) => a - b)).toEqual(ids);
  });

  it("correlates acks with their requests", async () => {
    const { session, transport } = await readySession();
    const startPromise = session.start("slow");
    const req = transport.sent.find((m) => m.kind === "start")!;
    transport.reply({ v: 1, id: req.id, kind: "ack", payload: {} });
    const reply = await startPromise;
    expect(reply.kind).toBe("ack");
    expect(reply.id).toBe(req.id);
    expect(session.view.log.some((l) => l.includes(`start #${req.id} -> ack`))).toBe(true);
  });

  it("renders correlated errors", async () => {
    const { session, transport } = await readySession();
    const promise = session.start("dragon");
    const req = transport.sent.find(
      (m) => m.kind === "start" && (m.payload as any).behavior === "dragon",
    )!;
    transport.reply({
      v: 1, id: req.id, kind: "error",
      payload: { code: "Busy", detail: "channels busy: ['servo']" },
    });
    const reply = await promise;
    expect(reply.kind).toBe("error");
    expect(session.view.log.some((l) => l.includes("Busy"))).toBe(true);
  });

  it("ignores malformed frames with a warning and stays alive", async () => {
    const { session, transport } = await readySession();
    transport.onmessage?.("{nonsense");
    transport.onmessage?.('{"v":9,"id":0,"kind":"ack","payload":{}}');
    expect(session.view.connection).toBe("ready");
    expect(session.view.log.filter((l) => l.includes("ignored malformed")).length).toBe(2);
  });

  it("keeps a rolling telemetry window and tracks the active behavior", async () => {
    const { session, transport } = await readySession();
    for (let k = 0; k <= 700; k++) {
      transport.reply({
        v: 1, id: 0, kind: "telemetry",
        payload: {
          t_ms: k * 100, compression: 0.5, vib: 0, led0: [0, 0, 0],
          active: "slow",
        },
      });
    }
    const window = session.view.telemetry;
    expect(window[window.length - 1].t_ms).toBe(70_000);
    expect(window[0].t_ms).toBeGreaterThanOrEqual(70_000 - 65_000);
    expect(session.view.activeId).toBe("slow");
    // chart timestamps are the raw t_ms values, no resampling
    expect(window.every((f, i) => i === 0 || f.t_ms - window[i - 1].t_ms === 100)).toBe(true);
  });

  it("applies phase events to the view", async () => {
    const { session, transport } = await readySession();
    transport.reply({
      v: 1, id: 0, kind: "event",
      payload: { kind: "phase", behavior: "circadian", phase: "alarm" },
    });
    expect(session.view.activeId).toBe("circadian");
    expect(session.view.activePhase).toBe("alarm");
  });

  it("schedules a reconnect when the transport drops", async () => {
    const scheduled: Array<() => void> = [];
    const transports: FakeTransport[] = [];
    const session = new Session(
      "fake://",
      () => {
        const t = new FakeTransport();
        transports.push(t);
        return t;
      },
      { schedule: (fn) => scheduled.push(fn) },
    );
    session.connect();
    transports[0].open();
    await completeHandshake(transports[0]);
    expect(session.view.connection).toBe("ready");

    transports[0].onclose?.();
    expect(session.view.connection).toBe("disconnected");
    expect(scheduled.length).toBe(1);

    scheduled[0]();  // fire the retry timer
    transports[1].open();
    await completeHandshake(transports[1]);
    expect(session.view.connection).toBe("ready");
    // resubscribed on the new connection
    expect(transports[1].sent.map((m) => m.kind)).toContain("subscribe");
  });
});
