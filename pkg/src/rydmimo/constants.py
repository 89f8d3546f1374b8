"""Physical constants for the vapor-cell receiver model."""

from dataclasses import dataclass, field

import numpy as np

SPEED_OF_LIGHT = 299792458.0  # m/s

PLANCK_H = 6.626e-34          # J*s
ELECTRON_CHARGE = 1.602e-19   # C
BOHR_RADIUS = 5.292e-11       # m

# Transition dipole moment magnitude along the y axis, in units of q*a0.
DIPOLE_MOMENT_QA0 = 1785.9

DEFAULT_CARRIER_HZ = 5e9


@dataclass(frozen=True)
class PhysicalConstants:
    """Constants entering the channel coefficients.

    mu_eg is the transition dipole moment as a real 3-vector (C*m); the
    default points along y. omega_eg is the transition angular frequency
    (rad/s), which sets the carrier wavelength.
    """

    h: float = PLANCK_H
    q: float = ELECTRON_CHARGE
    a0: float = BOHR_RADIUS
    mu_eg: np.ndarray = field(
        default_factory=lambda: np.array(
            [0.0, DIPOLE_MOMENT_QA0 * ELECTRON_CHARGE * BOHR_RADIUS, 0.0]
        )
    )
    omega_eg: float = 2.0 * np.pi * DEFAULT_CARRIER_HZ

    @property
    def hbar(self) -> float:
        return self.h / (2.0 * np.pi)

    @property
    def wavelength(self) -> float:
        """Carrier wavelength lambda = 2*pi*c / omega_eg, meters."""
        return 2.0 * np.pi * SPEED_OF_LIGHT / self.omega_eg


def default_constants() -> PhysicalConstants:
    return PhysicalConstants()
