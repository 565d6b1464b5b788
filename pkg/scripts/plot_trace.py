#!/usr/bin/env python3
"""Plot a telemetry CSV: compression/height/bulge, vibration, LED color.

    python scripts/plot_trace.py trace.csv [out.png]
"""

import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from lantern.analysis import load_trace


def main():
    if len(sys.argv) < 2:
        print(__doc__)
        return 2
    trace = load_trace(sys.argv[1])
    out = sys.argv[2] if len(sys.argv) > 2 else "trace.png"

    fig, axes = plt.subplots(3, 1, figsize=(11, 7), sharex=True)
    t = trace.t_s

    axes[0].plot(t, trace.compression, lw=0.8, label="commanded compression")
    ax_h = axes[0].twinx()
    ax_h.plot(t, trace.bulge_mm, lw=0.8, color="tab:orange", label="bulge (mm)")
    axes[0].set_ylabel("compression")
    ax_h.set_ylabel("bulge mm")
    axes[0].legend(loc="upper left")
    ax_h.legend(loc="upper right")

    axes[1].plot(t, trace.vib, lw=0.6, color="tab:red")
    axes[1].set_ylabel("vibration")

    rgb = trace.led0 / 255.0
    axes[2].imshow(
        rgb[None, :, :], aspect="auto",
        extent=(t[0], t[-1], 0, 1), interpolation="nearest",
    )
    axes[2].set_yticks([])
    axes[2].set_ylabel("led0")
    axes[2].set_xlabel("t (s)")

    fig.tight_layout()
    fig.savefig(out, dpi=120)
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
