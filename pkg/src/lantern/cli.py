"""Command line driver.

    lantern run --behavior postop --reps 2 --accel 10 --out trace.csv
    lantern run --behavior slow --duration 30 --out trace.csv
    lantern run --serve --port 7421 --accel 1
    lantern validate lantern.toml
    lantern connect --endpoint 127.0.0.1:7421
    lantern analyze trace.csv --json

`--accel` multiplies the simulated rate against wall time (0 = as fast as
possible); it never changes tick semantics, so runs are bit-identical at
any acceleration. LANTERN_CONFIG is the config-file fallback.
"""

from __future__ import annotations

import argparse
import os
import shlex
import sys
import time

from . import analysis, protocol
from .config import ENV_VAR, load_config, validate_file
from .devicesim import SensorReplay
from .engine import TraceWriter
from .errors import ConfigError, LanternError, StreamError
from .registry import build_sim
from .service import serve


def _parse_value(text: str):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            continue
    return text


def _parse_params(pairs):
    params = {}
    for pair in pairs or []:
        key, sep, value = pair.partition("=")
        if not sep or not key:
            raise ConfigError(f"--params expects k=v, got {pair!r}")
        params[key] = _parse_value(value)
    return params


def _load_stack(args):
    path = args.config or os.environ.get(ENV_VAR)
    return load_config(path)


def cmd_run(args) -> int:
    stack = _load_stack(args)
    if args.seed is not None:
        import dataclasses

        stack = dataclasses.replace(
            stack, device=dataclasses.replace(stack.device, seed=args.seed)
        )
    engine, device = build_sim(stack)

    replay = None
    if args.sensors:
        replay = SensorReplay.from_trace(args.sensors)

    params = _parse_params(args.params)
    if args.reps is not None:
        params["reps"] = args.reps

    if args.behavior:
        result = engine.start(args.behavior, params)
        if result.status == "not_found":
            known = ", ".join(e["id"] for e in engine.list())
            print(f"unknown behavior {args.behavior!r}; registered: {known}",
                  file=sys.stderr)
            return 2
        if not result.ok:
            print(f"could not start {args.behavior}: {result.message}", file=sys.stderr)
            return 2
        for note in next(
            b["notes"] for b in engine.list() if b["id"] == args.behavior
        ):
            print(f"note: {note}", file=sys.stderr)

    out_fh = open(args.out, "w") if args.out else None
    writer = TraceWriter(out_fh) if out_fh else None

    try:
        if args.serve:
            return _run_serving(args, stack, engine, device, writer)
        if args.behavior is None and args.duration is None:
            print("nothing to do: need --behavior, --duration or --serve",
                  file=sys.stderr)
            return 2
        _run_headless(engine, device, replay, writer,
                      duration_s=args.duration, accel=args.accel)
        return 0
    finally:
        if out_fh:
            out_fh.close()


def _run_headless(engine, device, replay, writer, duration_s, accel):
    tick_ms = engine.cfg.tick_ms
    duration_ms = None if duration_s is None else int(round(duration_s * 1000))
    wall_per_tick = (tick_ms / 1000.0) / accel if accel > 0 else 0.0
    t0 = time.perf_counter()
    k = 0
    while True:
        if duration_ms is not None:
            if engine.clock_ms >= duration_ms:
                break
        elif engine.idle() and (replay is None or replay.exhausted()):
            break
        if replay is not None:
            replay.pump(engine)
        frame = engine.tick()
        if writer is not None:
            writer.write(frame, device)
        k += 1
        if wall_per_tick:
            target = t0 + k * wall_per_tick
            now = time.perf_counter()
            if target - now > 0.0005:
                time.sleep(target - now)


def _run_serving(args, stack, engine, device, writer) -> int:
    if writer is not None:
        engine.add_frame_listener(lambda frame: writer.write(frame, device))
    control_port = args.port if args.port else stack.service.control_port
    browser_port = control_port + 1 if args.port else stack.service.browser_port
    accel = args.accel if args.accel > 0 else 1.0  # serving is always paced
    loop, service = serve(
        engine, device,
        control_port=control_port, browser_port=browser_port,
        accel=accel, telemetry_every=stack.service.telemetry_every,
    )
    print(f"serving on {control_port} (stream) / {browser_port} (browser), "
          f"accel {accel:g}x", file=sys.stderr)
    try:
        if args.duration is not None:
            deadline_ms = int(round(args.duration * 1000))
            while engine.clock_ms < deadline_ms:
                time.sleep(0.05)
        else:
            while True:
                time.sleep(0.5)
    except KeyboardInterrupt:
        pass
    finally:
        loop.stop()
        service.stop()
    return 0


def cmd_validate(args) -> int:
    problems = validate_file(args.file)
    if problems:
        for p in problems:
            print(p, file=sys.stderr)
        return 2
    print("ok")
    return 0


def cmd_analyze(args) -> int:
    trace = analysis.load_trace(args.trace)
    report = analysis.analyze_trace(trace)
    if args.json:
        print(report.to_json())
        return 0
    print(f"rows:            {report.rows}")
    print(f"duration:        {report.duration_s:.2f} s")
    print(f"compression:     [{report.compression_min:.4f}, {report.compression_max:.4f}]")
    period = f"{report.period_s:.4f} s" if report.period_s else "none"
    print(f"dominant period: {period}")
    print(f"maxima:          {len(report.maxima_times_s)}")
    if report.rise_durations_s:
        rises = ", ".join(f"{d:.2f}" for d in report.rise_durations_s[:12])
        print(f"rise durations:  {rises}")
    if report.pulse_spacing_s:
        spacing = ", ".join(f"{d:.3f}" for d in report.pulse_spacing_s[:12])
        print(f"pulse spacing:   {spacing}")
    print(f"led first/last:  {report.led_first} -> {report.led_last}")
    print(f"behaviors:       {', '.join(report.behaviors_seen) or 'none'}")
    return 0


def cmd_connect(args) -> int:
    import socket

    host, _, port = args.endpoint.rpartition(":")
    try:
        sock = socket.create_connection((host or "127.0.0.1", int(port)), timeout=5.0)
    except OSError as exc:
        print(f"cannot connect to {args.endpoint}: {exc}", file=sys.stderr)
        return 2
    sock_file = sock.makefile("rwb")
    next_id = [1]

    def send(kind, payload):
        msg = protocol.ProtocolMessage(v=1, id=next_id[0], kind=kind, payload=payload)
        next_id[0] += 1
        sock_file.write(protocol.encode(msg))
        sock_file.flush()

    import threading

    def reader():
        for line in sock_file:
            try:
                msg = protocol.decode(line)
            except LanternError:
                continue
            if msg.kind == "telemetry":
                p = msg.payload
                print(f"[t={p['t_ms']} ms] c={p['compression']:.3f} "
                      f"vib={p['vib']:.3f} active={p.get('active')}")
            elif msg.kind == "event":
                print(f"[event] {msg.payload}")
            else:
                print(f"[{msg.kind} #{msg.id}] {msg.payload}")

    threading.Thread(target=reader, daemon=True).start()
    send("hello", {})
    print("commands: list | start <id> [k=v ...] [preempt] | stop <id> | "
          "set <id> <key> <value> | sub [every] | event <kind> | quit",
          file=sys.stderr)
    try:
        for raw in sys.stdin:
            words = shlex.split(raw)
            if not words:
                continue
            cmd = words[0]
            if cmd == "quit":
                break
            elif cmd == "list":
                send("list", {})
            elif cmd == "start" and len(words) >= 2:
                params = _parse_params([w for w in words[2:] if "=" in w])
                preempt = "preempt" in words[2:]
                send("start", {"behavior": words[1], "params": params,
                               "preempt": preempt})
            elif cmd == "stop" and len(words) == 2:
                send("stop", {"behavior": words[1]})
            elif cmd == "set" and len(words) == 4:
                send("set_param", {"behavior": words[1], "key": words[2],
                                   "value": _parse_value(words[3])})
            elif cmd == "sub":
                payload = {"every": int(words[1])} if len(words) > 1 else {}
                send("subscribe", payload)
            elif cmd == "event" and len(words) == 2:
                send("event", {"kind": words[1]})
            else:
                print(f"unrecognized: {raw.strip()}", file=sys.stderr)
        time.sleep(0.2)  # let trailing replies print
    except KeyboardInterrupt:
        pass
    finally:
        sock.close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lantern")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run behaviors on the embedded simulator")
    run.add_argument("--behavior")
    run.add_argument("--params", action="append", metavar="K=V")
    run.add_argument("--duration", type=float, help="simulated seconds")
    run.add_argument("--reps", type=int)
    run.add_argument("--accel", type=float, default=1.0,
                     help="sim-rate multiplier; 0 = unpaced")
    run.add_argument("--seed", type=int)
    run.add_argument("--config")
    run.add_argument("--out", help="telemetry CSV path")
    run.add_argument("--sensors", help="scripted IMU trace to replay")
    run.add_argument("--serve", action="store_true")
    run.add_argument("--port", type=int)
    run.set_defaults(fn=cmd_run)

    validate = sub.add_parser("validate", help="check a config file")
    validate.add_argument("file")
    validate.set_defaults(fn=cmd_validate)

    analyze = sub.add_parser("analyze", help="report on a telemetry CSV")
    analyze.add_argument("trace")
    analyze.add_argument("--json", action="store_true")
    analyze.set_defaults(fn=cmd_analyze)

    connect = sub.add_parser("connect", help="interactive remote session")
    connect.add_argument("--endpoint", default="127.0.0.1:7421")
    connect.set_defaults(fn=cmd_connect)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, StreamError) as exc:
        print(str(exc), file=sys.stderr)
        return 2
    except OSError as exc:
        print(str(exc), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
