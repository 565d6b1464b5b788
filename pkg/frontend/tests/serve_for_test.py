"""Start a paced simulator service on ephemeral ports for frontend tests.

Prints one JSON line with the bound ports, then serves until killed.
"""

import json
import sys
import time

from lantern.registry import build_sim
from lantern.service import EngineLoop, SimService

engine, device = build_sim()
loop = EngineLoop(engine, device, accel=1.0)
service = SimService(loop, control_port=0, browser_port=0)
service.start()
loop.start()
print(json.dumps({"control": service.control_port, "browser": service.browser_port}),
      flush=True)
try:
    while True:
        time.sleep(0.5)
except KeyboardInterrupt:
    pass
finally:
    loop.stop()
    service.stop()
    sys.exit(0)
