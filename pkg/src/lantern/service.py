"""Network service: remote control and telemetry for a running engine.

Two listeners expose the same message protocol:

  * control port (default 7421): newline-delimited JSON over a raw stream
  * browser port (default 7422): the same messages in WebSocket text frames

The engine runs on its own control-loop thread (EngineLoop). All client
requests are serialized onto that thread between ticks, so the engine never
sees concurrent mutation. Telemetry fans out through per-client bounded
queues with drop-oldest overflow: a stalled subscriber loses frames, never
the engine's cadence. Replies are never dropped.
"""

from __future__ import annotations

import base64
import hashlib
import socket
import struct
import threading
import time
from collections import deque

from . import protocol
from .engine import Engine, Event
from .errors import ProtocolError

_WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"


class EngineLoop:
    """Single-owner control loop: paces ticks and serializes requests.

    accel multiplies the simulated rate against wall time; 0 means unpaced
    (as fast as the host can tick).
    """

    def __init__(self, engine: Engine, device=None, accel: float = 1.0):
        self.engine = engine
        self.device = device
        self.accel = accel
        self._requests: deque = deque()
        self._req_lock = threading.Lock()
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None

    def submit(self, fn):
        """Run fn() on the control thread between ticks; returns its result."""
        if self._thread is None or not self._thread.is_alive():
            return fn()  # library mode: no loop running, caller is the owner
        done = threading.Event()
        slot = {}

        def wrapped():
            try:
                slot["result"] = fn()
            except Exception as exc:  # surfaced to the requesting client
                slot["error"] = exc
            done.set()

        with self._req_lock:
            self._requests.append(wrapped)
        done.wait(timeout=10.0)
        if "error" in slot:
            raise slot["error"]
        return slot.get("result")

    def start(self):
        if self._thread is not None:
            return
        self._stop.clear()
        self._thread = threading.Thread(target=self._run, name="engine-loop", daemon=True)
        self._thread.start()

    def stop(self):
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=5.0)
            self._thread = None

    def _run(self):
        tick_s = self.engine.cfg.tick_ms / 1000.0
        wall_per_tick = tick_s / self.accel if self.accel > 0 else 0.0
        t0 = time.perf_counter()
        k = 0
        while not self._stop.is_set():
            while True:
                with self._req_lock:
                    if not self._requests:
                        break
                    fn = self._requests.popleft()
                fn()
            self.engine.tick()
            k += 1
            if wall_per_tick:
                target = t0 + k * wall_per_tick
                now = time.perf_counter()
                if now > target + 1.0:
                    # fell far behind (host hiccup); resync rather than sprint
                    t0 = now - k * wall_per_tick
                elif target - now > 0.0005:
                    time.sleep(target - now)


class _Outbox:
    """Per-client send queue: replies are reliable, telemetry is lossy."""

    def __init__(self, telemetry_limit: int):
        self._cond = threading.Condition()
        self._reliable: deque[bytes] = deque()
        self._telemetry: deque[bytes] = deque(maxlen=telemetry_limit)
        self.closed = False
        self.dropped = 0

    def push_reliable(self, blob: bytes):
        with self._cond:
            self._reliable.append(blob)
            self._cond.notify()

    def push_telemetry(self, blob: bytes):
        with self._cond:
            if len(self._telemetry) == self._telemetry.maxlen:
                self.dropped += 1
            self._telemetry.append(blob)
            self._cond.notify()

    def pop(self, timeout: float = 0.5) -> bytes | None:
        with self._cond:
            if not self._reliable and not self._telemetry:
                self._cond.wait(timeout)
            if self._reliable:
                return self._reliable.popleft()
            if self._telemetry:
                return self._telemetry.popleft()
            return None

    def close(self):
        with self._cond:
            self.closed = True
            self._cond.notify_all()


class _Client:
    def __init__(self, sock: socket.socket, framing: str, telemetry_limit: int):
        self.sock = sock
        self.framing = framing  # "line" | "ws"
        self.outbox = _Outbox(telemetry_limit)
        self.every: int | None = None
        self.alive = True

    def frame_blob(self, msg: protocol.ProtocolMessage) -> bytes:
        raw = protocol.encode(msg)
        if self.framing == "ws":
            return _ws_text_frame(raw.rstrip(b"\n"))
        return raw

    def send(self, msg: protocol.ProtocolMessage):
        self.outbox.push_reliable(self.frame_blob(msg))

    def send_telemetry(self, msg: protocol.ProtocolMessage):
        self.outbox.push_telemetry(self.frame_blob(msg))


def _ws_text_frame(payload: bytes) -> bytes:
    header = b"\x81"  # FIN + text opcode
    n = len(payload)
    if n < 126:
        return header + bytes([n]) + payload
    if n < 1 << 16:
        return header + b"\x7e" + struct.pack(">H", n) + payload
    return header + b"\x7f" + struct.pack(">Q", n) + payload


def _ws_handshake(sock: socket.socket) -> bool:
    data = b""
    sock.settimeout(5.0)
    while b"\r\n\r\n" not in data:
        chunk = sock.recv(4096)
        if not chunk:
            return False
        data += chunk
        if len(data) > 65536:
            return False
    head = data.split(b"\r\n\r\n", 1)[0].decode("latin-1")
    key = None
    for line in head.split("\r\n")[1:]:
        name, _, value = line.partition(":")
        if name.strip().lower() == "sec-websocket-key":
            key = value.strip()
    if key is None:
        sock.sendall(b"HTTP/1.1 400 Bad Request\r\n\r\n")
        return False
    accept = base64.b64encode(
        hashlib.sha1((key + _WS_GUID).encode("ascii")).digest()
    ).decode("ascii")
    sock.sendall(
        (
            "HTTP/1.1 101 Switching Protocols\r\n"
            "Upgrade: websocket\r\n"
            "Connection: Upgrade\r\n"
            f"Sec-WebSocket-Accept: {accept}\r\n\r\n"
        ).encode("ascii")
    )
    sock.settimeout(None)
    return True


class _WsReader:
    """Incremental server-side WebSocket frame parser (client frames are
    masked; fragmentation is not supported and closes the connection)."""

    def __init__(self, sock: socket.socket):
        self.sock = sock
        self.buf = b""

    def _need(self, n: int) -> bool:
        while len(self.buf) < n:
            chunk = self.sock.recv(4096)
            if not chunk:
                return False
            self.buf += chunk
        return True

    def messages(self):
        while True:
            if not self._need(2):
                return
            b0, b1 = self.buf[0], self.buf[1]
            fin = b0 & 0x80
            opcode = b0 & 0x0F
            masked = b1 & 0x80
            length = b1 & 0x7F
            offset = 2
            if length == 126:
                if not self._need(4):
                    return
                length = struct.unpack(">H", self.buf[2:4])[0]
                offset = 4
            elif length == 127:
                if not self._need(10):
                    return
                length = struct.unpack(">Q", self.buf[2:10])[0]
                offset = 10
            mask = b""
            if masked:
                if not self._need(offset + 4):
                    return
                mask = self.buf[offset:offset + 4]
                offset += 4
            if not self._need(offset + length):
                return
            payload = self.buf[offset:offset + length]
            self.buf = self.buf[offset + length:]
            if mask:
                payload = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
            if opcode == 0x8:  # close
                yield ("close", payload)
                return
            if opcode == 0x9:  # ping
                yield ("ping", payload)
                continue
            if opcode == 0xA:  # pong
                continue
            if not fin or opcode not in (0x1, 0x2):
                yield ("close", b"")
                return
            yield ("text", payload)


class SimService:
    """Accepts protocol clients and bridges them to the engine loop."""

    def __init__(self, loop: EngineLoop, control_port: int = 7421,
                 browser_port: int = 7422, telemetry_every: int = 5,
                 telemetry_limit: int = 256, host: str = "127.0.0.1"):
        self.loop = loop
        self.host = host
        self.control_port = control_port
        self.browser_port = browser_port
        self.telemetry_every = telemetry_every
        self.telemetry_limit = telemetry_limit
        self._clients: list[_Client] = []
        self._clients_lock = threading.Lock()
        self._listeners: list[socket.socket] = []
        self._threads: list[threading.Thread] = []
        self._running = False
        self._frame_idx = 0

    # -- lifecycle -----------------------------------------------------

    def start(self):
        if self._running:
            return
        self._running = True
        self.loop.engine.add_frame_listener(self._on_frame)
        self.loop.engine.add_phase_listener(self._on_phase)
        for attr, framing in (("control_port", "line"), ("browser_port", "ws")):
            srv = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
            srv.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
            srv.bind((self.host, getattr(self, attr)))
            setattr(self, attr, srv.getsockname()[1])  # resolve port 0
            srv.listen(16)
            srv.settimeout(0.5)
            self._listeners.append(srv)
            t = threading.Thread(
                target=self._accept_loop, args=(srv, framing),
                name=f"lantern-accept-{framing}", daemon=True,
            )
            t.start()
            self._threads.append(t)

    def stop(self):
        self._running = False
        for srv in self._listeners:
            try:
                srv.close()
            except OSError:
                pass
        self._listeners.clear()
        with self._clients_lock:
            clients = list(self._clients)
        for client in clients:
            self._drop(client)

    @property
    def ports(self) -> tuple[int, int]:
        return self.control_port, self.browser_port

    # -- engine-loop callbacks (must not block) --------------------------

    def _on_frame(self, frame):
        self._frame_idx += 1
        with self._clients_lock:
            subscribers = [c for c in self._clients if c.every]
        if not subscribers:
            return
        payload = None
        for client in subscribers:
            if self._frame_idx % client.every:
                continue
            if payload is None:
                payload = self._telemetry_payload(frame)
            client.send_telemetry(protocol.telemetry(payload))

    def _telemetry_payload(self, frame) -> dict:
        geometry = None
        if self.loop.device is not None:
            geometry = self.loop.device.snapshot().geometry
        led0 = frame.led[0] if frame.led else (0, 0, 0)
        payload = {
            "t_ms": frame.t_ms,
            "compression": frame.servo_compression,
            "vib": frame.vibration_amplitude,
            "led0": list(led0),
            "active": frame.active_behavior,
        }
        if geometry is not None:
            payload["height_mm"] = geometry.height_mm
            payload["bulge_mm"] = geometry.bulge_radius_mm
        return payload

    def _on_phase(self, behavior_id: str, phase: str):
        msg = protocol.event({"kind": "phase", "behavior": behavior_id, "phase": phase})
        with self._clients_lock:
            subscribers = [c for c in self._clients if c.every]
        for client in subscribers:
            client.send(msg)

    # -- client plumbing -------------------------------------------------

    def _accept_loop(self, srv: socket.socket, framing: str):
        while self._running:
            try:
                conn, _addr = srv.accept()
            except socket.timeout:
                continue
            except OSError:
                return
            conn.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            client = _Client(conn, framing, self.telemetry_limit)
            with self._clients_lock:
                self._clients.append(client)
            threading.Thread(target=self._serve_client, args=(client,),
                             name="lantern-client", daemon=True).start()
            threading.Thread(target=self._sender, args=(client,),
                             name="lantern-sender", daemon=True).start()

    def _drop(self, client: _Client):
        client.alive = False
        client.outbox.close()
        try:
            client.sock.close()
        except OSError:
            pass
        with self._clients_lock:
            if client in self._clients:
                self._clients.remove(client)

    def _sender(self, client: _Client):
        while client.alive:
            blob = client.outbox.pop()
            if blob is None:
                if client.outbox.closed:
                    return
                continue
            try:
                client.sock.sendall(blob)
            except OSError:
                self._drop(client)
                return

    def _serve_client(self, client: _Client):
        try:
            if client.framing == "ws":
                if not _ws_handshake(client.sock):
                    return
                for kind, payload in _WsReader(client.sock).messages():
                    if kind == "close":
                        break
                    if kind == "ping":
                        client.outbox.push_reliable(b"\x8a" + bytes([len(payload)]) + payload)
                        continue
                    self._handle_line(client, payload)
            else:
                buf = b""
                while client.alive:
                    chunk = client.sock.recv(4096)
                    if not chunk:
                        break
                    buf += chunk
                    while b"\n" in buf:
                        line, buf = buf.split(b"\n", 1)
                        if line.strip():
                            self._handle_line(client, line)
        except OSError:
            pass
        finally:
            self._drop(client)

    def _handle_line(self, client: _Client, line: bytes):
        try:
            msg = protocol.decode(line)
        except ProtocolError as exc:
            client.send(protocol.error(0, exc.code, exc.detail))
            return
        if msg.kind not in protocol.REQUEST_KINDS:
            client.send(protocol.error(msg.id, "BadKind",
                                       f"{msg.kind} is server-to-client only"))
            return
        try:
            reply = self._dispatch(client, msg)
        except ProtocolError as exc:
            reply = protocol.error(msg.id, exc.code, exc.detail)
        except Exception as exc:  # keep the connection alive
            reply = protocol.error(msg.id, "Internal", str(exc))
        client.send(reply)

    def _dispatch(self, client: _Client, msg: protocol.ProtocolMessage):
        engine = self.loop.engine
        payload = msg.payload
        if msg.kind == "hello":
            payload = {
                "server": "lantern-sim",
                "proto": protocol.PROTOCOL_VERSION,
                "tick_ms": engine.cfg.tick_ms,
            }
            if self.loop.device is not None:
                shell = self.loop.device.shell
                payload["shell"] = {
                    "strip_length_mm": shell.strip_length_mm,
                    "attach_radius_mm": shell.attach_radius_mm,
                    "max_compression_mm": shell.max_compression_mm,
                }
            return protocol.ack(msg.id, payload)
        if msg.kind == "list":
            behaviors = self.loop.submit(engine.list)
            return protocol.ack(msg.id, {"behaviors": behaviors})
        if msg.kind == "start":
            behavior = _required_str(payload, "behavior")
            params = payload.get("params", {})
            if not isinstance(params, dict):
                raise ProtocolError("BadField", "params must be an object")
            preempt = bool(payload.get("preempt", False))
            result = self.loop.submit(
                lambda: engine.start(behavior, params, preempt=preempt)
            )
            return _result_to_message(msg.id, result)
        if msg.kind == "stop":
            behavior = _required_str(payload, "behavior")
            result = self.loop.submit(lambda: engine.stop(behavior))
            return _result_to_message(msg.id, result)
        if msg.kind == "set_param":
            behavior = _required_str(payload, "behavior")
            key = _required_str(payload, "key")
            if "value" not in payload:
                raise ProtocolError("BadField", "set_param needs a value")
            value = payload["value"]
            result = self.loop.submit(lambda: engine.set_param(behavior, key, value))
            return _result_to_message(msg.id, result)
        if msg.kind == "subscribe":
            every = payload.get("every", self.telemetry_every)
            if not isinstance(every, int) or isinstance(every, bool) or every < 1:
                raise ProtocolError("BadField", "every must be a positive integer")
            client.every = every
            return protocol.ack(msg.id, {"every": every})
        if msg.kind == "event":
            kind = _required_str(payload, "kind")
            data = payload.get("data", {})
            if not isinstance(data, dict):
                raise ProtocolError("BadField", "data must be an object")
            self.loop.submit(lambda: engine.inject(Event(kind=kind, data=data)))
            return protocol.ack(msg.id, {})
        raise ProtocolError("BadKind", msg.kind)


def _required_str(payload: dict, key: str) -> str:
    value = payload.get(key)
    if not isinstance(value, str) or not value:
        raise ProtocolError("BadField", f"{key} must be a non-empty string")
    return value


def _result_to_message(request_id: int, result) -> protocol.ProtocolMessage:
    if result.ok:
        return protocol.ack(request_id, {})
    code = {"busy": "Busy", "not_found": "NotFound", "invalid": "Invalid"}[result.status]
    return protocol.error(request_id, code, result.message)


def serve(engine: Engine, device=None, control_port: int = 7421,
          browser_port: int = 7422, accel: float = 1.0,
          telemetry_every: int = 5, host: str = "127.0.0.1"
          ) -> tuple[EngineLoop, SimService]:
    """Spin up the control loop and both listeners; returns (loop, service)."""
    loop = EngineLoop(engine, device, accel=accel)
    service = SimService(loop, control_port, browser_port,
                         telemetry_every=telemetry_every, host=host)
    service.start()
    loop.start()
    return loop, service
