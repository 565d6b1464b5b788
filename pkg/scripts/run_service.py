#!/usr/bin/env python3
"""Start the simulator service for console / remote-control sessions.

    python scripts/run_service.py [--config lantern.toml] [--accel 1.0]

Equivalent to `lantern run --serve`, kept as a script so a demo host can
tweak it quickly.
"""

import argparse
import os
import time

from lantern.config import ENV_VAR, load_config
from lantern.registry import build_sim
from lantern.service import serve


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--config", default=os.environ.get(ENV_VAR))
    ap.add_argument("--accel", type=float, default=1.0)
    args = ap.parse_args()

    stack = load_config(args.config)
    engine, device = build_sim(stack)
    loop, service = serve(
        engine, device,
        control_port=stack.service.control_port,
        browser_port=stack.service.browser_port,
        accel=args.accel,
        telemetry_every=stack.service.telemetry_every,
    )
    print(f"control: 127.0.0.1:{service.control_port}   "
          f"browser: ws://127.0.0.1:{service.browser_port}")
    print("behaviors:", ", ".join(e["id"] for e in engine.list()))
    try:
        while True:
            time.sleep(1.0)
    except KeyboardInterrupt:
        pass
    finally:
        loop.stop()
        service.stop()


if __name__ == "__main__":
    main()
