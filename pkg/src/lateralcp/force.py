"""Lateral force from the mode decomposition, recoil per photon, and its decay in time."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .emission import ModeDecomposition, mode_decomposition
from .system import HBAR, AtomPosition, AtomTransition, Fiber


@dataclass(frozen=True)
class LateralForceResult:
    """Force on the excited atom at ``t = 0`` and the momentum it leaves behind.

    ``momentum_kick = F_z0 / Gamma`` and ``velocity_gain = momentum_kick / mass``.
    """

    F_z0: float
    Gamma: float
    momentum_kick: float
    velocity_gain: float
    alpha: float


def lateral_force_modes(atom: AtomTransition, pos: AtomPosition, fiber: Fiber) -> float:
    """``F = -hbar [sum f beta gamma_fp + sum_m,p int kz gamma dkz]`` in newtons."""
    return mode_decomposition(atom, pos, fiber).force


def recoil_from_decomposition(atom: AtomTransition, dec: ModeDecomposition) -> LateralForceResult:
    gamma = dec.Gamma
    if not gamma > 0:
        raise ValueError("decay rate must be positive")
    force = dec.force
    kick = force / gamma
    return LateralForceResult(force, gamma, kick, kick / atom.mass, dec.alpha)


def recoil_observables(atom: AtomTransition, pos: AtomPosition, fiber: Fiber) -> LateralForceResult:
    return recoil_from_decomposition(atom, mode_decomposition(atom, pos, fiber))


def force_time_profile(result: LateralForceResult, t):
    """``F_z0 exp(-Gamma t)`` for ``t >= 0``."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("time must be non-negative")
    out = result.F_z0 * np.exp(-result.Gamma * t)
    return float(out) if out.ndim == 0 else out
