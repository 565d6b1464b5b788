"""Wire message codec.

Messages are newline-delimited UTF-8 JSON objects, one per line:

    {"v": 1, "id": 7, "kind": "start", "payload": {"behavior": "slow"}}

Encoding always emits the canonical field order (v, id, kind, payload);
decoding accepts any order and ignores unknown fields. Requests carry a
client-assigned positive id; unsolicited server pushes (telemetry, event)
use id 0. PROTOCOL.md documents the payload schemas.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import ProtocolError

PROTOCOL_VERSION = 1

KINDS = frozenset({
    "hello", "list", "start", "stop", "set_param", "subscribe",
    "telemetry", "event", "ack", "error",
})

REQUEST_KINDS = frozenset({
    "hello", "list", "start", "stop", "set_param", "subscribe", "event",
})


@dataclass(frozen=True)
class ProtocolMessage:
    v: int
    id: int
    kind: str
    payload: dict = field(default_factory=dict)


def encode(msg: ProtocolMessage) -> bytes:
    """Canonical single-line encoding, newline terminated."""
    obj = {"v": msg.v, "id": msg.id, "kind": msg.kind, "payload": msg.payload}
    return (json.dumps(obj, separators=(",", ":")) + "\n").encode("utf-8")


def decode(line: bytes | str) -> ProtocolMessage:
    if isinstance(line, bytes):
        try:
            line = line.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ProtocolError("BadEncoding", str(exc)) from exc
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ProtocolError("BadJson", str(exc)) from exc
    if not isinstance(obj, dict):
        raise ProtocolError("BadJson", "message must be a JSON object")
    version = obj.get("v")
    if version != PROTOCOL_VERSION:
        raise ProtocolError("UnsupportedVersion", f"got {version!r}")
    msg_id = obj.get("id")
    if not isinstance(msg_id, int) or isinstance(msg_id, bool) or msg_id < 0:
        raise ProtocolError("BadField", "id must be a non-negative integer")
    kind = obj.get("kind")
    if kind not in KINDS:
        raise ProtocolError("BadKind", f"unknown kind {kind!r}")
    payload = obj.get("payload", {})
    if not isinstance(payload, dict):
        raise ProtocolError("BadField", "payload must be an object")
    return ProtocolMessage(v=version, id=msg_id, kind=kind, payload=payload)


def ack(request_id: int, payload: dict | None = None) -> ProtocolMessage:
    return ProtocolMessage(v=PROTOCOL_VERSION, id=request_id, kind="ack",
                           payload=payload or {})


def error(request_id: int, code: str, detail: str = "") -> ProtocolMessage:
    payload = {"code": code}
    if detail:
        payload["detail"] = detail
    return ProtocolMessage(v=PROTOCOL_VERSION, id=request_id, kind="error",
                           payload=payload)


def telemetry(payload: dict) -> ProtocolMessage:
    return ProtocolMessage(v=PROTOCOL_VERSION, id=0, kind="telemetry",
                           payload=payload)


def event(payload: dict) -> ProtocolMessage:
    return ProtocolMessage(v=PROTOCOL_VERSION, id=0, kind="event",
                           payload=payload)
