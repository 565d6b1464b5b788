"""Shell deformation kinematics.

The shell is a ring of thin plastic strips clamped between the top cap and
the base. Winding the belt pulls the cap down; each strip, being effectively
inextensible, has to bow outwards. We model one strip as a planar circular
arc of fixed length L whose chord is the current cap-to-base height h:

    sin(theta) / theta = h / L        (theta = half the subtended angle)
    sagitta = (L / (2 theta)) * (1 - cos(theta))

The bulge radius is the attachment-circle radius plus the sagitta. The servo
maps to height through a linear belt take-up: delta_h = pulley_radius * angle,
clamped at the mechanical stop.

All functions here are pure and safe to call from any thread.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import ConfigError, DomainError

# Bisection bracket for the arc equation. The endpoints stay strictly inside
# (0, pi) where sin(t) - r*t changes sign exactly once; the Newton polish
# afterwards takes the coarse bracket to machine precision.
_THETA_EPS = 1e-12
_THETA_TOL = 1e-6


@dataclass(frozen=True)
class ShellConfig:
    """Physical dimensions of one shell build.

    max_compression_mm defaults to 0.35 * strip_length_mm (the mechanical
    stop) when left unset.
    """

    strip_length_mm: float = 150.0
    strip_count: int = 18
    attach_radius_mm: float = 40.0
    pulley_radius_mm: float = 8.0
    max_compression_mm: float = field(default=0.0)

    def __post_init__(self):
        if self.strip_length_mm <= 0:
            raise ConfigError("shell.strip_length_mm must be > 0")
        if self.strip_count < 3:
            raise ConfigError("shell.strip_count must be >= 3")
        if self.attach_radius_mm <= 0:
            raise ConfigError("shell.attach_radius_mm must be > 0")
        if self.pulley_radius_mm <= 0:
            raise ConfigError("shell.pulley_radius_mm must be > 0")
        if self.max_compression_mm == 0.0:
            object.__setattr__(self, "max_compression_mm", 0.35 * self.strip_length_mm)
        if not 0 < self.max_compression_mm < self.strip_length_mm:
            raise ConfigError(
                "shell.max_compression_mm must be in (0, strip_length_mm)"
            )


@dataclass(frozen=True)
class ShellGeometry:
    """Instantaneous shape: cap-to-base height, outer bulge, arc half-angle."""

    height_mm: float
    bulge_radius_mm: float
    arc_half_angle_rad: float
    compression: float


def solve_arc(chord_ratio: float) -> tuple[float, float]:
    """Solve the arc equation for a given chord/arc-length ratio.

    Returns (arc_half_angle_rad, sagitta_ratio) where sagitta_ratio is the
    strip's radial bow divided by its free length. chord_ratio = 1 is the
    undeformed strip (returns (0, 0) exactly); the ratio must lie in (0, 1].
    """
    if not 0.0 < chord_ratio <= 1.0:
        raise DomainError(f"chord_ratio must be in (0, 1], got {chord_ratio}")
    if chord_ratio == 1.0:
        return 0.0, 0.0

    sin, cos = math.sin, math.cos
    lo, hi = _THETA_EPS, math.pi - _THETA_EPS
    # f(t) = sin(t) - r*t is positive at lo and negative at hi for r in (0,1).
    while hi - lo > _THETA_TOL:
        mid = 0.5 * (lo + hi)
        if sin(mid) - chord_ratio * mid > 0.0:
            lo = mid
        else:
            hi = mid
    theta = 0.5 * (lo + hi)
    # Newton polish from the converged bracket; f' never vanishes at the
    # root inside (0, pi), and this pushes arc-length reconstruction to
    # machine precision even for near-degenerate chords.
    for _ in range(4):
        step = (sin(theta) - chord_ratio * theta) / (cos(theta) - chord_ratio)
        nxt = theta - step
        if not 0.0 < nxt < math.pi:
            break
        theta = nxt
        if abs(step) < 1e-15:
            break
    return theta, sagitta_ratio(theta)


def sagitta_ratio(theta: float) -> float:
    """Sagitta / arc length for half-angle theta; continuous through 0."""
    if theta == 0.0:
        return 0.0
    # 1 - cos(t) = 2 sin^2(t/2), which keeps precision for small t.
    s = math.sin(0.5 * theta)
    return s * s / theta


def servo_to_height(servo_angle_rad: float, cfg: ShellConfig) -> float:
    """Cap-to-base height for a wound servo angle (linear belt take-up)."""
    if servo_angle_rad < 0:
        raise DomainError(f"servo angle must be >= 0, got {servo_angle_rad}")
    length = cfg.strip_length_mm
    take_up = cfg.pulley_radius_mm * servo_angle_rad
    return max(length - cfg.max_compression_mm, length - take_up)


def height_to_compression(height_mm: float, cfg: ShellConfig) -> float:
    """Normalized compression in [0, 1] for a height, clamped at the stops."""
    c = (cfg.strip_length_mm - height_mm) / cfg.max_compression_mm
    return min(1.0, max(0.0, c))


def compression_to_height(compression: float, cfg: ShellConfig) -> float:
    return cfg.strip_length_mm - compression * cfg.max_compression_mm


def compression_to_angle(compression: float, cfg: ShellConfig) -> float:
    """Servo angle that produces a given compression (inverse of the take-up)."""
    return compression * cfg.max_compression_mm / cfg.pulley_radius_mm


def max_servo_angle(cfg: ShellConfig) -> float:
    """Wind angle at the mechanical stop."""
    return cfg.max_compression_mm / cfg.pulley_radius_mm


def geometry_at(compression: float, cfg: ShellConfig) -> ShellGeometry:
    """Full shell geometry at a normalized compression in [0, 1]."""
    if not 0.0 <= compression <= 1.0:
        raise DomainError(f"compression must be in [0, 1], got {compression}")
    height = compression_to_height(compression, cfg)
    theta, sag = solve_arc(height / cfg.strip_length_mm)
    return ShellGeometry(
        height_mm=height,
        bulge_radius_mm=cfg.attach_radius_mm + cfg.strip_length_mm * sag,
        arc_half_angle_rad=theta,
        compression=compression,
    )
