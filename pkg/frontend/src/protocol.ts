// Message layer for the lantern control protocol (see ../PROTOCOL.md).
// One JSON object per WebSocket text frame / stream line.

export const PROTOCOL_VERSION = 1;

export type Kind =
  | "hello"
  | "list"
  | "start"
  | "stop"
  | "set_param"
  | "subscribe"
  | "telemetry"
  | "event"
  | "ack"
  | "error";

const KINDS: ReadonlySet<string> = new Set([
  "hello", "list", "start", "stop", "set_param", "subscribe",
  "telemetry", "event", "ack", "error",
]);

export interface Message {
  v: number;
  id: number;
  kind: Kind;
  payload: Record<string, unknown>;
}

export interface BehaviorInfo {
  id: string;
  channels: string[];
  params: Record<string, number | string>;
  active: boolean;
  phase: string | null;
  notes: string[];
  description: string;
}

export interface TelemetryFrame {
  t_ms: number;
  compression: number;
  vib: number;
  led0: [number, number, number];
  active: string | null;
  height_mm?: number;
  bulge_mm?: number;
}

export interface ShellInfo {
  strip_length_mm: number;
  attach_radius_mm: number;
  max_compression_mm: number;
}

export function encode(msg: Message): string {
  // canonical field order: v, id, kind, payload
  return JSON.stringify({ v: msg.v, id: msg.id, kind: msg.kind, payload: msg.payload });
}

/** Parse one inbound line/frame; throws on anything malformed. */
export function decode(text: string): Message {
  let obj: unknown;
  obj = JSON.parse(text);
  if (typeof obj !== "object" || obj === null || Array.isArray(obj)) {
    throw new Error("message must be a JSON object");
  }
  const rec = obj as Record<string, unknown>;
  if (rec.v !== PROTOCOL_VERSION) {
    throw new Error(`unsupported protocol version ${String(rec.v)}`);
  }
  if (typeof rec.id !== "number" || !Number.isInteger(rec.id) || rec.id < 0) {
    throw new Error("id must be a non-negative integer");
  }
  if (typeof rec.kind !== "string" || !KINDS.has(rec.kind)) {
    throw new Error(`unknown kind ${String(rec.kind)}`);
  }
  const payload = rec.payload ?? {};
  if (typeof payload !== "object" || payload === null || Array.isArray(payload)) {
    throw new Error("payload must be an object");
  }
  return {
    v: PROTOCOL_VERSION,
    id: rec.id,
    kind: rec.kind as Kind,
    payload: payload as Record<string, unknown>,
  };
}

export function isTelemetry(msg: Message): boolean {
  return msg.kind === "telemetry";
}

export function telemetryFrame(msg: Message): TelemetryFrame {
  return msg.payload as unknown as TelemetryFrame;
}
