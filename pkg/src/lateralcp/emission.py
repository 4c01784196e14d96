"""Partial decay rates into guided and radiation modes, and the emission directionality.

The atom sits at ``phi = 0`` on the x axis, so its Cartesian dipole
``(d_x, d_y, d_z)`` coincides with the cylindrical ``(d_r, d_phi, d_z)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .fiber_modes import GuidedMode, guided_profile, radiation_profiles, solve_guided_mode
from .numerics import Interval, QuadratureSpec, integrate_adaptive
from .system import EPS0, HBAR, AtomPosition, AtomTransition, Fiber

GRAZING_SLIVER = 1e-10
DEFAULT_QUAD = QuadratureSpec(rel_tol=1e-9, abs_tol=0.0, max_subdivisions=4000)


class MSumConvergenceError(RuntimeError):
    """The sum over azimuthal orders did not settle before the order limit."""


@lru_cache(maxsize=64)
def _guided_mode_cached(radius: float, index_real: float, omega: float) -> GuidedMode:
    return solve_guided_mode(Fiber(radius, index_real), omega)


def guided_mode_for(fiber: Fiber, omega: float) -> GuidedMode:
    return _guided_mode_cached(fiber.radius, fiber.index.real, omega)


@dataclass(frozen=True)
class RateBreakdown:
    gamma_g_plus: float
    gamma_g_minus: float
    gamma_r_plus: float
    gamma_r_minus: float

    @property
    def Gamma(self) -> float:
        return self.gamma_g_plus + self.gamma_g_minus + self.gamma_r_plus + self.gamma_r_minus


@dataclass(frozen=True)
class ModeDecomposition:
    """Everything the mode method needs at one atom position.

    ``guided_momentum`` is ``sum f beta gamma_fp`` and ``radiation_momentum`` is
    ``sum_m,p int kz gamma dkz`` (both in rad/s per metre).
    """

    rates: RateBreakdown
    guided: dict
    guided_momentum: float
    radiation_momentum: float
    beta: float
    k10: float
    m_max: int

    @property
    def Gamma(self) -> float:
        return self.rates.Gamma

    @property
    def alpha(self) -> float:
        return (self.guided_momentum + self.radiation_momentum) / (self.k10 * self.Gamma)

    @property
    def force(self) -> float:
        return -HBAR * (self.guided_momentum + self.radiation_momentum)


def guided_partial_rates(atom: AtomTransition, pos: AtomPosition, fiber: Fiber) -> dict:
    """``{(f, p): gamma_fp}`` with ``gamma = omega beta' |d10 . e_fp(r_A)|^2 / (2 eps0 hbar)``."""
    mode = guided_mode_for(fiber, atom.omega10)
    pref = atom.omega10 * mode.beta_prime / (2 * EPS0 * HBAR)
    out = {}
    for f in (1, -1):
        for p in (1, -1):
            e = guided_profile(mode.oriented(f, p), pos.x_A)
            out[(f, p)] = float(pref * abs(atom.d10 @ e) ** 2)
    return out


def radiation_integrand(atom: AtomTransition, pos: AtomPosition, fiber: Fiber, m: int, kz):
    """``sum_p gamma_{kz m p}`` on an array of ``kz`` (rad/s per unit kz)."""
    prof = radiation_profiles(fiber, atom.omega10, kz, m, pos.x_A)
    coupling = np.abs(prof @ atom.d10) ** 2
    return atom.omega10 / (2 * EPS0 * HBAR) * coupling.sum(axis=-1)


def _order_contribution(atom, pos, fiber, m, quad):
    """Half-space rates and kz moment of order m: ``[g_minus, g_plus, moment]``."""
    # the integrand vanishes at grazing incidence; the last 1e-10 k of the
    # interval is dropped because the mode basis loses precision there
    k = atom.k10 * (1 - GRAZING_SLIVER)

    def f(kz):
        g = radiation_integrand(atom, pos, fiber, m, kz)
        return np.stack([g, kz * g], axis=-1)

    lo, _ = integrate_adaptive(f, Interval(-k, 0.0), quad)
    hi, _ = integrate_adaptive(f, Interval(0.0, k), quad)
    return np.array([lo[0], hi[0], lo[1] + hi[1]]).real


def radiation_partial_rates(atom: AtomTransition, pos: AtomPosition, fiber: Fiber,
                            m_max: int | None = None, quad: QuadratureSpec = DEFAULT_QUAD,
                            m_floor: int = 5, m_limit: int = 80, rel_tol: float = 1e-6):
    """Radiation rates into the ``+z`` and ``-z`` half spaces.

    Orders are summed as ``|m| = 0, 1, 2, ...`` (pairing ``m`` with ``-m``).  With
    ``m_max=None`` the sum stops once three consecutive orders each add less
    than ``rel_tol`` of the running total (never before ``m_floor``).

    Returns
    -------
    gamma_plus, gamma_minus, radiation_momentum, m_used
    """
    total = np.zeros(3)
    small = 0
    last = None
    limit = m_limit if m_max is None else m_max
    for order in range(limit + 1):
        ms = (0,) if order == 0 else (order, -order)
        inc = sum(_order_contribution(atom, pos, fiber, m, quad) for m in ms)
        total = total + inc
        if m_max is not None:
            continue
        scale = total[0] + total[1]
        last = (inc[0] + inc[1]) / scale if scale > 0 else 0.0
        small = small + 1 if abs(last) < rel_tol else 0
        if order >= m_floor and small >= 3:
            return total[1], total[0], total[2], order
    if m_max is None:
        raise MSumConvergenceError(
            f"radiation m-sum not converged at |m| = {limit}; last relative increment {last:.3e}")
    return total[1], total[0], total[2], m_max


def mode_decomposition(atom: AtomTransition, pos: AtomPosition, fiber: Fiber,
                       quad: QuadratureSpec = DEFAULT_QUAD) -> ModeDecomposition:
    fiber = fiber.lossless()
    mode = guided_mode_for(fiber, atom.omega10)
    guided = guided_partial_rates(atom, pos, fiber)
    g_plus = guided[(1, 1)] + guided[(1, -1)]
    g_minus = guided[(-1, 1)] + guided[(-1, -1)]
    r_plus, r_minus, r_mom, m_used = radiation_partial_rates(atom, pos, fiber, quad=quad)
    rates = RateBreakdown(g_plus, g_minus, float(r_plus), float(r_minus))
    return ModeDecomposition(
        rates=rates, guided=guided,
        guided_momentum=mode.beta * (g_plus - g_minus),
        radiation_momentum=float(r_mom),
        beta=mode.beta, k10=atom.k10, m_max=m_used)


def total_rate_and_split(atom: AtomTransition, pos: AtomPosition, fiber: Fiber) -> RateBreakdown:
    return mode_decomposition(atom, pos, fiber).rates


def directionality(atom: AtomTransition, pos: AtomPosition, fiber: Fiber) -> float:
    """Rate-weighted mean axial photon momentum in units of ``hbar k10``."""
    return mode_decomposition(atom, pos, fiber).alpha
