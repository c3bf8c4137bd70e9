"""Closed-form bearing, imbalance and antenna formulas.

Bearing defect frequencies::

    f_inner = (N_b/2) * f_shaft * (1 + (D_b/D_p) * cos(beta))
    f_outer = (N_b/2) * f_shaft * (1 - (D_b/D_p) * cos(beta))

Imbalance force ``F = m * r * omega**2``, reactive near-field radius
``0.62 * sqrt(L**3 / lambda)`` and reflection coefficient
``(Z_i - Z_o) / (Z_i + Z_o)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from scipy.constants import speed_of_light

from .errors import DomainError

__all__ = [
    "BearingGeometry",
    "ImbalanceSpec",
    "AntennaSpec",
    "ImpedancePair",
    "HY6201",
    "inner_race_frequency",
    "outer_race_frequency",
    "imbalance_force",
    "reactive_near_field_radius",
    "reflection_coefficient",
]


@dataclass(frozen=True)
class BearingGeometry:
    """Rolling-element bearing geometry. Diameters in mm, angle in degrees."""

    n_balls: int
    ball_diameter: float
    pitch_diameter: float
    contact_angle: float = 0.0

    def __post_init__(self):
        if self.n_balls < 1:
            raise DomainError(f"n_balls must be >= 1, got {self.n_balls}")
        if not self.ball_diameter > 0:
            raise DomainError(f"ball_diameter must be > 0, got {self.ball_diameter}")
        if not self.pitch_diameter > self.ball_diameter:
            raise DomainError(
                f"pitch_diameter ({self.pitch_diameter}) must exceed "
                f"ball_diameter ({self.ball_diameter})"
            )
        if not 0.0 <= self.contact_angle < 90.0:
            raise DomainError(f"contact_angle must be in [0, 90) degrees, got {self.contact_angle}")

    @property
    def ratio_cos(self) -> float:
        """(D_b / D_p) * cos(beta)."""
        return (self.ball_diameter / self.pitch_diameter) * math.cos(math.radians(self.contact_angle))


HY6201 = BearingGeometry(n_balls=7, ball_diameter=6.0, pitch_diameter=22.0, contact_angle=0.0)


@dataclass(frozen=True)
class ImbalanceSpec:
    """Unbalanced mass (kg) at radius (m) spinning at angular_speed (rad/s)."""

    mass: float = 0.01
    radius: float = 0.05
    angular_speed: float = 2.0 * math.pi * 25.0

    def __post_init__(self):
        for name in ("mass", "radius", "angular_speed"):
            value = getattr(self, name)
            if not (value >= 0 and math.isfinite(value)):
                raise DomainError(f"{name} must be finite and >= 0, got {value}")


@dataclass(frozen=True)
class AntennaSpec:
    largest_dimension: float
    carrier_frequency: float
    wavelength: float = field(init=False)

    def __post_init__(self):
        if not self.largest_dimension > 0:
            raise DomainError(f"largest_dimension must be > 0, got {self.largest_dimension}")
        if not self.carrier_frequency > 0:
            raise DomainError(f"carrier_frequency must be > 0, got {self.carrier_frequency}")
        object.__setattr__(self, "wavelength", speed_of_light / self.carrier_frequency)


@dataclass(frozen=True)
class ImpedancePair:
    z_input: complex
    z_reference: complex

    def __post_init__(self):
        if abs(complex(self.z_input) + complex(self.z_reference)) == 0:
            raise DomainError("z_input + z_reference must be nonzero")


def _check_shaft(shaft_frequency: float) -> None:
    if not (shaft_frequency > 0 and math.isfinite(shaft_frequency)):
        raise DomainError(f"shaft_frequency must be finite and > 0, got {shaft_frequency}")


def inner_race_frequency(geom: BearingGeometry, shaft_frequency: float) -> float:
    """Ball-pass frequency of the inner race (Hz)."""
    _check_shaft(shaft_frequency)
    return 0.5 * geom.n_balls * shaft_frequency * (1.0 + geom.ratio_cos)


def outer_race_frequency(geom: BearingGeometry, shaft_frequency: float) -> float:
    """Ball-pass frequency of the outer race (Hz)."""
    _check_shaft(shaft_frequency)
    return 0.5 * geom.n_balls * shaft_frequency * (1.0 - geom.ratio_cos)


def imbalance_force(spec: ImbalanceSpec) -> float:
    """Centrifugal force of an unbalanced mass, in newtons."""
    return spec.mass * spec.radius * spec.angular_speed**2


def reactive_near_field_radius(antenna: AntennaSpec) -> float:
    """Outer bound (m) of the reactive near-field region of an antenna."""
    lam = antenna.wavelength
    if not lam > 0:
        raise DomainError(f"wavelength must be > 0, got {lam}")
    return 0.62 * math.sqrt(antenna.largest_dimension**3 / lam)


def reflection_coefficient(imp: ImpedancePair) -> complex:
    z_i = complex(imp.z_input)
    z_o = complex(imp.z_reference)
    denom = z_i + z_o
    if denom == 0:
        raise DomainError("z_input + z_reference must be nonzero")
    return (z_i - z_o) / denom
