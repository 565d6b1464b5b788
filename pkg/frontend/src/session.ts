// Operator session: request/ack correlation, view state, reconnection.
//
// The session is transport-agnostic so the same logic runs over a browser
// WebSocket and over the test harness's raw stream transport. All view
// state derives purely from received protocol messages.

import {
  BehaviorInfo,
  Message,
  PROTOCOL_VERSION,
  ShellInfo,
  TelemetryFrame,
  decode,
  encode,
} from "./protocol.js";

export interface Transport {
  send(text: string): void;
  close(): void;
  onmessage: ((text: string) => void) | null;
  onopen: (() => void) | null;
  onclose: (() => void) | null;
}

export type TransportFactory = (url: string) => Transport;

export type ConnectionState = "disconnected" | "connecting" | "ready";

export interface ServerInfo {
  name: string;
  tickMs: number;
  shell: ShellInfo | null;
}

export interface SessionView {
  connection: ConnectionState;
  server: ServerInfo | null;
  behaviors: BehaviorInfo[];
  activeId: string | null;
  activePhase: string | null;
  telemetry: TelemetryFrame[];
  log: string[];
}

export interface SessionOptions {
  telemetryEvery?: number;
  windowMs?: number;       // rolling telemetry window, default 65 s
  reconnectMs?: number;    // retry delay after a drop, default 1000
  logLimit?: number;
  schedule?: (fn: () => void, ms: number) => unknown; // injectable for tests
}

interface Pending {
  kind: string;
  resolve: (msg: Message) => void;
}

export class Session {
  private factory: TransportFactory;
  private url: string;
  private transport: Transport | null = null;
  private nextId = 1;
  private pending = new Map<number, Pending>();
  private listeners: Array<(view: SessionView) => void> = [];
  private closed = false;
  private opts: Required<Omit<SessionOptions, "schedule">> & {
    schedule: (fn: () => void, ms: number) => unknown;
  };

  readonly view: SessionView = {
    connection: "disconnected",
    server: null,
    behaviors: [],
    activeId: null,
    activePhase: null,
    telemetry: [],
    log: [],
  };

  constructor(url: string, factory: TransportFactory, opts: SessionOptions = {}) {
    this.url = url;
    this.factory = factory;
    this.opts = {
      telemetryEvery: opts.telemetryEvery ?? 5,
      windowMs: opts.windowMs ?? 65_000,
      reconnectMs: opts.reconnectMs ?? 1000,
      logLimit: opts.logLimit ?? 50,
      schedule: opts.schedule ?? ((fn, ms) => setTimeout(fn, ms)),
    };
  }

  onChange(fn: (view: SessionView) => void): void {
    this.listeners.push(fn);
  }

  connect(): void {
    if (this.closed) return;
    this.view.connection = "connecting";
    this.notify();
    let transport: Transport;
    try {
      transport = this.factory(this.url);
    } catch (err) {
      this.dropped(`connect failed: ${String(err)}`);
      return;
    }
    this.transport = transport;
    transport.onopen = () => void this.handshake();
    transport.onmessage = (text) => this.receive(text);
    transport.onclose = () => this.dropped("connection closed");
  }

  close(): void {
    this.closed = true;
    this.transport?.close();
    this.transport = null;
    this.view.connection = "disconnected";
    this.notify();
  }

  // -- operator actions ------------------------------------------------

  start(id: string, params: Record<string, unknown> = {}, preempt = false): Promise<Message> {
    return this.request("start", { behavior: id, params, preempt });
  }

  stop(id: string): Promise<Message> {
    return this.request("stop", { behavior: id });
  }

  setParam(id: string, key: string, value: number | string): Promise<Message> {
    return this.request("set_param", { behavior: id, key, value });
  }

  injectEvent(kind: string): Promise<Message> {
    return this.request("event", { kind });
  }

  refreshList(): Promise<Message> {
    return this.request("list", {});
  }

  // -- wiring ------------------------------------------------------------

  private async handshake(): Promise<void> {
    try {
      const hello = await this.request("hello", {});
      const payload = hello.payload as Record<string, unknown>;
      this.view.server = {
        name: String(payload.server ?? "?"),
        tickMs: Number(payload.tick_ms ?? 10),
        shell: (payload.shell as ShellInfo | undefined) ?? null,
      };
      await this.refreshList();
      await this.request("subscribe", { every: this.opts.telemetryEvery });
      this.view.connection = "ready";
      this.log("session ready");
    } catch (err) {
      this.log(`handshake failed: ${String(err)}`);
    }
    this.notify();
  }

  request(kind: string, payload: Record<string, unknown>): Promise<Message> {
    const transport = this.transport;
    if (!transport) {
      return Promise.reject(new Error("not connected"));
    }
    const id = this.nextId++;
    const msg: Message = { v: PROTOCOL_VERSION, id, kind: kind as Message["kind"], payload };
    return new Promise((resolve) => {
      this.pending.set(id, { kind, resolve });
      transport.send(encode(msg));
    });
  }

  private receive(text: string): void {
    let msg: Message;
    try {
      msg = decode(text);
    } catch (err) {
      // robustness rule: warn and keep the session alive
      this.log(`ignored malformed frame: ${String(err)}`);
      this.notify();
      return;
    }
    if (msg.kind === "telemetry") {
      this.pushTelemetry(msg.payload as unknown as TelemetryFrame);
      return;
    }
    if (msg.kind === "event") {
      this.handleEvent(msg.payload);
      return;
    }
    const pending = this.pending.get(msg.id);
    if (pending) {
      this.pending.delete(msg.id);
      if (msg.kind === "error") {
        const p = msg.payload as { code?: string; detail?: string };
        this.log(`${pending.kind} #${msg.id} -> error ${p.code ?? "?"}${p.detail ? `: ${p.detail}` : ""}`);
      } else if (pending.kind === "list") {
        this.view.behaviors = ((msg.payload.behaviors as BehaviorInfo[]) ?? []);
        this.syncActive();
      } else if (!["hello", "subscribe"].includes(pending.kind)) {
        this.log(`${pending.kind} #${msg.id} -> ack`);
      }
      pending.resolve(msg);
      this.notify();
      return;
    }
    this.log(`unmatched ${msg.kind} #${msg.id}`);
    this.notify();
  }

  private handleEvent(payload: Record<string, unknown>): void {
    if (payload.kind === "phase") {
      const behavior = String(payload.behavior);
      const phase = String(payload.phase);
      this.view.activeId = behavior;
      this.view.activePhase = phase;
      for (const b of this.view.behaviors) {
        if (b.id === behavior) {
          b.active = true;
          b.phase = phase;
        }
      }
      this.log(`phase: ${behavior} -> ${phase}`);
      // a transition can mean a behavior ended; refresh quietly
      void this.refreshList().catch(() => undefined);
    }
    this.notify();
  }

  private pushTelemetry(frame: TelemetryFrame): void {
    const window = this.view.telemetry;
    window.push(frame);
    const cutoff = frame.t_ms - this.opts.windowMs;
    let drop = 0;
    while (drop < window.length && window[drop].t_ms < cutoff) drop++;
    if (drop > 0) window.splice(0, drop);
    if (frame.active !== this.view.activeId) {
      this.view.activeId = frame.active;
      if (frame.active === null) this.view.activePhase = null;
      this.syncActive();
    }
    this.notify();
  }

  private syncActive(): void {
    for (const b of this.view.behaviors) {
      if (b.id !== this.view.activeId && b.active && this.view.activeId !== null) {
        b.active = false;
        b.phase = null;
      }
      if (b.id === this.view.activeId) {
        b.active = true;
        this.view.activePhase = b.phase ?? this.view.activePhase;
      }
    }
  }

  private dropped(reason: string): void {
    if (this.view.connection === "disconnected" && !this.transport) {
      // already handled (close() or a previous drop)
      if (this.closed) return;
    }
    this.transport = null;
    this.pending.clear();
    if (this.closed) return;
    this.view.connection = "disconnected";
    this.log(`${reason}; retrying in ${this.opts.reconnectMs} ms`);
    this.notify();
    this.opts.schedule(() => this.connect(), this.opts.reconnectMs);
  }

  private log(line: string): void {
    this.view.log.push(line);
    if (this.view.log.length > this.opts.logLimit) {
      this.view.log.splice(0, this.view.log.length - this.opts.logLimit);
    }
  }

  private notify(): void {
    for (const fn of this.listeners) fn(this.view);
  }
}
