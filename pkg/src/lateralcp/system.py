"""Physical inputs: the atomic transition, its position, and the dielectric bodies."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import constants as const

C = const.c
EPS0 = const.epsilon_0
MU0 = const.mu_0
HBAR = const.hbar

# Cs D2 defaults
WAVELENGTH_CS_D2 = 852e-9
DIPOLE_CS_D2 = 1.9e-29
MASS_CS = 2.207e-25

FIBER_RADIUS = 250e-9
SILICA_INDEX = 1.45 + 2.05e-7j

POLARIZATIONS = ("sigma_plus", "sigma_minus", "pi")


def dipole_vector(label: str, magnitude: float = DIPOLE_CS_D2) -> np.ndarray:
    """Raising matrix element ``d10 = <1|d|0>`` in Cartesian (x, y, z) components.

    The quantisation axis is y.  For ``sigma_plus`` the emission amplitude
    ``d01 = <0|d|1>`` is ``magnitude * (i, 0, 1)``, so ``d10`` is its conjugate
    ``magnitude * (-i, 0, 1)``.  ``sigma_minus`` swaps the two; ``pi`` points
    along y with the same norm.
    """
    if label == "sigma_plus":
        return magnitude * np.array([-1j, 0.0, 1.0])
    if label == "sigma_minus":
        return magnitude * np.array([1j, 0.0, 1.0])
    if label == "pi":
        return magnitude * np.sqrt(2.0) * np.array([0.0, 1.0, 0.0], dtype=complex)
    raise ValueError(f"unknown polarization {label!r}; expected one of {POLARIZATIONS}")


@dataclass(frozen=True)
class AtomTransition:
    omega10: float
    d10: np.ndarray
    mass: float = MASS_CS
    label: str = "custom"

    def __post_init__(self):
        d = np.asarray(self.d10, dtype=complex)
        if d.shape != (3,):
            raise ValueError("d10 must be a 3-vector")
        if not np.linalg.norm(d) > 0:
            raise ValueError("d10 must be non-zero")
        object.__setattr__(self, "d10", d)
        if not self.omega10 > 0:
            raise ValueError("omega10 must be positive")

    @classmethod
    def cesium_d2(cls, polarization: str = "sigma_plus", wavelength: float = WAVELENGTH_CS_D2,
                  dipole: float = DIPOLE_CS_D2, mass: float = MASS_CS) -> "AtomTransition":
        return cls(2 * np.pi * C / wavelength, dipole_vector(polarization, dipole), mass, polarization)

    @property
    def k10(self) -> float:
        return self.omega10 / C

    @property
    def wavelength(self) -> float:
        return 2 * np.pi / self.k10

    @property
    def d01(self) -> np.ndarray:
        return self.d10.conj()

    def scaled(self, factor: complex) -> "AtomTransition":
        return replace(self, d10=self.d10 * factor)

    @property
    def gamma_free(self) -> float:
        """Free-space decay rate ``omega^3 |d|^2 / (3 pi eps0 hbar c^3)``."""
        d2 = float(np.vdot(self.d10, self.d10).real)
        return self.omega10**3 * d2 / (3 * np.pi * EPS0 * HBAR * C**3)


@dataclass(frozen=True)
class Fiber:
    radius: float = FIBER_RADIUS
    index: complex = SILICA_INDEX

    def __post_init__(self):
        n = complex(self.index)
        object.__setattr__(self, "index", n)
        if not self.radius > 0:
            raise ValueError("fiber radius must be positive")
        if not n.real > 1:
            raise ValueError("fiber index must have Re(n) > 1")
        if n.imag < 0:
            raise ValueError("fiber index must have Im(n) >= 0 (passive medium)")

    def lossless(self) -> "Fiber":
        return replace(self, index=complex(self.index.real))

    def v_number(self, omega: float) -> float:
        return omega / C * self.radius * np.sqrt(self.index.real**2 - 1)


@dataclass(frozen=True)
class AtomPosition:
    """Atom on the x axis at ``x_A``; ``distance`` is measured from the surface."""

    x_A: float
    radius: float = FIBER_RADIUS

    def __post_init__(self):
        if not self.x_A > self.radius:
            raise ValueError(f"atom at x_A={self.x_A} is not outside the fiber (R={self.radius})")

    @classmethod
    def at_distance(cls, d_A: float, fiber: Fiber) -> "AtomPosition":
        return cls(fiber.radius + d_A, fiber.radius)

    @property
    def distance(self) -> float:
        return self.x_A - self.radius


@dataclass(frozen=True)
class HalfSpace:
    """Dielectric filling ``x < 0``; vacuum on the atom side ``x > 0``."""

    index: complex = SILICA_INDEX

    def __post_init__(self):
        n = complex(self.index)
        object.__setattr__(self, "index", n)
        if n.real < 1 or n.imag < 0:
            raise ValueError("half-space index needs Re(n) >= 1 and Im(n) >= 0")
