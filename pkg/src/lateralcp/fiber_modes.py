"""Exact guided (HE11) and radiation modes of a step-index fiber in vacuum.

Fields are built from the axial components ``E_z`` and ``Z0 H_z`` of a mode
``~ exp(i (kz z + m phi - omega t))``; the transverse parts follow from

    E_r   = i/kr^2 [kz dEz/dr + k (i m / r) Z0Hz]
    E_phi = i/kr^2 [kz (i m / r) Ez - k dZ0Hz/dr]
    Z0H_phi = i/kr^2 [kz (i m / r) Z0Hz + k n^2 dEz/dr]

with ``kr^2 = n^2 k^2 - kz^2`` in each region.  Profiles are returned in
cylindrical components ``(e_r, e_phi, e_z)`` at ``phi = 0``.

Normalisation (``e`` in units of s^(1/2)/m):

* guided:    ``2 pi int n^2 |e|^2 r dr = 1``
* radiation: ``int n^2 e . e'* dA = delta(omega - omega')`` at fixed ``kz, m``;
  fixed through the large-r amplitudes ``sum_j |C_j|^2 + |D_j|^2 = h^2/(4 pi k c)``
  where ``E_z ~ sum_j C_j H^(j)_m(h r)`` and ``Z0 H_z ~ sum_j D_j H^(j)_m(h r)``.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
import math
import warnings

import numpy as np
from scipy import special

from .numerics import Interval, QuadratureSpec, find_root, integrate_adaptive
from .system import C, Fiber

SECOND_MODE_CUTOFF = 2.404825557695773  # first zero of J0


class GeometryError(ValueError):
    """No guided-mode root exists in the light-line window."""


class EvanescentIndexError(ValueError):
    """A radiation mode was requested with |kz| > omega/c."""


def _transverse(kz, m, k, n2, kr2, r, ez, dez, hz, dhz):
    """Transverse E and tangential Z0 H from the axial fields (see module docstring)."""
    im_r = 1j * m / r
    pre = 1j / kr2
    e_r = pre * (kz * dez + k * im_r * hz)
    e_phi = pre * (kz * im_r * ez - k * dhz)
    h_phi = pre * (kz * im_r * hz + k * n2 * dez)
    return e_r, e_phi, h_phi


# ---------------------------------------------------------------------------
# Guided mode
# ---------------------------------------------------------------------------

def characteristic_function(fiber: Fiber, omega: float, neff, m: int = 1):
    """Exact hybrid-mode eigenvalue function (zero at a guided mode).

    ``(J'/uJ + K'/wK)(n^2 J'/uJ + K'/wK) - (m neff)^2 (1/u^2 + 1/w^2)^2`` with
    ``u = h R``, ``w = q R``; dimensionless, order one away from roots.
    """
    n = fiber.index.real
    k = omega / C
    neff = np.asarray(neff, dtype=float)
    u = k * fiber.radius * np.sqrt(n**2 - neff**2)
    w = k * fiber.radius * np.sqrt(neff**2 - 1)
    jj = special.jvp(m, u) / (u * special.jv(m, u))
    kk = special.kvp(m, w) / (w * special.kv(m, w))
    return (jj + kk) * (n**2 * jj + kk) - (m * neff) ** 2 * (1 / u**2 + 1 / w**2) ** 2


def _he11_neff(fiber: Fiber, omega: float, scan: int = 400) -> float:
    n = fiber.index.real
    eps = 1e-12
    grid = np.linspace(1 + eps, n - eps, scan)
    vals = characteristic_function(fiber, omega, grid)
    # HE11 has the largest propagation constant: scan downward from the core line
    for i in range(scan - 1, 0, -1):
        a, b = vals[i - 1], vals[i]
        if np.isfinite(a) and np.isfinite(b) and np.sign(a) != np.sign(b):
            lo, hi = grid[i - 1], grid[i]
            # reject sign flips across poles of J'/J
            mid = characteristic_function(fiber, omega, 0.5 * (lo + hi))
            if abs(mid) < 10 * (abs(a) + abs(b)):
                return find_root(lambda x: float(characteristic_function(fiber, omega, x)),
                                 Interval(lo, hi), tol=1e-15)
    raise GeometryError(
        f"no HE11 root with 1 < neff < {n} (R={fiber.radius}, omega={omega})")


@dataclass(frozen=True)
class GuidedMode:
    """Fundamental HE11 mode; ``f`` is the propagation direction, ``p`` the handedness."""

    omega: float
    beta: float
    beta_prime: float
    radius: float
    index: float
    f: int = 1
    p: int = 1
    single_mode: bool = True
    norm: float = 1.0  # amplitude factor applied to the unit-Ez profile

    @property
    def k(self) -> float:
        return self.omega / C

    @property
    def h(self) -> float:
        return math.sqrt(self.index**2 * self.k**2 - self.beta**2)

    @property
    def q(self) -> float:
        return math.sqrt(self.beta**2 - self.k**2)

    def oriented(self, f: int, p: int) -> "GuidedMode":
        if f not in (1, -1) or p not in (1, -1):
            raise ValueError("f and p must be +1 or -1")
        return replace(self, f=f, p=p)


def _raw_guided(mode: GuidedMode, r):
    """Unnormalised (e_r, e_phi, e_z, Z0h_phi, Z0h_z) with E_z = J1(h r) inside."""
    r = np.asarray(r, dtype=float)
    k, h, q, R, n = mode.k, mode.h, mode.q, mode.radius, mode.index
    kz = mode.f * mode.beta
    m = mode.p
    jR, djR = special.jv(1, h * R), special.jvp(1, h * R)
    kR, dkR = special.kv(1, q * R), special.kvp(1, q * R)
    # Ez and Hz continuity fix the outer amplitudes; E_phi continuity fixes B/A
    b_over_a = (1j * m * kz / (k * R)) * (1 / h**2 + 1 / q**2) * jR / (djR / h + jR * dkR / (q * kR))
    inside = r < R
    rr = np.where(r == 0, 1e-30 * R, r)
    ji, dji = special.jv(1, h * rr), h * special.jvp(1, h * rr)
    ko, dko = special.kv(1, q * rr) / kR * jR, q * special.kvp(1, q * rr) / kR * jR
    ez = np.where(inside, ji, ko)
    dez = np.where(inside, dji, dko)
    hz, dhz = b_over_a * ez, b_over_a * dez
    kr2 = np.where(inside, h**2, -q**2)
    n2 = np.where(inside, n**2, 1.0)
    e_r, e_phi, h_phi = _transverse(kz, m, k, n2, kr2, rr, ez, dez, hz, dhz)
    # global phase -i: e_r real, e_phi and e_z imaginary
    return -1j * e_r, -1j * e_phi, -1j * ez, -1j * h_phi, -1j * hz


def _guided_norm_integral(mode: GuidedMode, quad: QuadratureSpec) -> float:
    def dens(r):
        e_r, e_phi, e_z, _, _ = _raw_guided(mode, r)
        n2 = np.where(r < mode.radius, mode.index**2, 1.0)
        return 2 * np.pi * n2 * (abs(e_r) ** 2 + abs(e_phi) ** 2 + abs(e_z) ** 2) * r

    inner, _ = integrate_adaptive(dens, Interval(0.0, mode.radius), quad)
    outer, _ = integrate_adaptive(dens, Interval(mode.radius, mode.radius + 40.0 / mode.q), quad)
    return float(inner + outer)


def _beta(fiber: Fiber, omega: float) -> float:
    return _he11_neff(fiber, omega) * omega / C


def solve_guided_mode(fiber: Fiber, omega: float, quad: QuadratureSpec = QuadratureSpec(1e-11)) -> GuidedMode:
    """Propagation constant, group delay ``dbeta/domega`` and normalisation of HE11.

    Uses ``Re(n)`` only.  Outside the single-mode window a ``RuntimeWarning``
    is issued and ``single_mode`` is False.
    """
    lossless = fiber.lossless()
    v = lossless.v_number(omega)
    single = v < SECOND_MODE_CUTOFF
    if not single:
        warnings.warn(f"V = {v:.3f} exceeds the single-mode cutoff {SECOND_MODE_CUTOFF:.3f}",
                      RuntimeWarning, stacklevel=2)
    beta = _beta(lossless, omega)
    step = 1e-3 * omega
    d1 = (_beta(lossless, omega + step) - _beta(lossless, omega - step)) / (2 * step)
    d2 = (_beta(lossless, omega + step / 2) - _beta(lossless, omega - step / 2)) / step
    beta_prime = (4 * d2 - d1) / 3
    mode = GuidedMode(omega, beta, beta_prime, fiber.radius, lossless.index.real, single_mode=single)
    norm = _guided_norm_integral(mode, quad)
    return replace(mode, norm=1 / math.sqrt(norm))


def guided_profile(mode: GuidedMode, r) -> np.ndarray:
    """Normalised ``e_{omega f p}(r)`` as an array ``(..., 3)`` of (e_r, e_phi, e_z)."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("radial coordinate must be non-negative")
    e_r, e_phi, e_z, _, _ = _raw_guided(mode, r)
    return mode.norm * np.stack([e_r, e_phi, e_z], axis=-1)


def guided_tangential(mode: GuidedMode, r) -> np.ndarray:
    """Tangential fields ``(e_phi, e_z, Z0 h_phi, Z0 h_z)``, all continuous at r = R."""
    e_r, e_phi, e_z, h_phi, h_z = _raw_guided(mode, r)
    return mode.norm * np.stack([e_phi, e_z, h_phi, h_z], axis=-1)


# ---------------------------------------------------------------------------
# Radiation modes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RadiationModeIndex:
    omega: float
    kz: float
    m: int
    p: int = 0

    def __post_init__(self):
        if abs(self.kz) > self.omega / C:
            raise EvanescentIndexError(
                f"evanescent index requested: |kz| = {abs(self.kz):.6g} > omega/c = {self.omega / C:.6g}")


def _column(kz, m, k, n2, kr, r, zfun, dzfun):
    """Axial/transverse tangential fields at ``r`` for unit Ez and unit Z0Hz amplitudes."""
    z = zfun(abs(m), kr * r)
    dz = kr * dzfun(abs(m), kr * r)
    kr2 = kr**2
    zero = np.zeros_like(z)
    e_r_e, e_phi_e, h_phi_e = _transverse(kz, m, k, n2, kr2, r, z, dz, zero, zero)
    e_r_h, e_phi_h, h_phi_h = _transverse(kz, m, k, n2, kr2, r, zero, zero, z, dz)
    # rows: e_r, e_phi, e_z, Z0h_phi, Z0h_z
    col_e = np.stack([e_r_e, e_phi_e, z, h_phi_e, zero], axis=-1)
    col_h = np.stack([e_r_h, e_phi_h, zero, h_phi_h, z], axis=-1)
    return col_e, col_h


_TANGENTIAL = [1, 2, 3, 4]  # e_phi, e_z, Z0h_phi, Z0h_z


def _radial_wavenumbers(k, n, kz):
    h1 = np.sqrt(n**2 * k**2 - kz**2)
    # factored form keeps h accurate at grazing incidence
    h = np.sqrt(np.maximum((k - kz) * (k + kz), 0.0))
    return h1, h


def radiation_basis(fiber: Fiber, omega: float, kz, m: int):
    """Delta-normalised radiation modes for an array of ``kz``.

    Returns ``coeffs`` of shape ``(N, 6, 2)``: the two orthonormal polarisation
    solutions as amplitudes of ``[Ez_in(J), Z0Hz_in(J), Ez(J), Ez(Y), Z0Hz(J), Z0Hz(Y)]``.
    The exterior uses the J/Y pair (better conditioned than H1/H2 near
    grazing); ``a J + b Y`` carries Hankel weight ``(|a|^2 + |b|^2)/2``.
    """
    kz = np.atleast_1d(np.asarray(kz, dtype=float))
    k = omega / C
    n = fiber.index.real
    R = fiber.radius
    h1, h = _radial_wavenumbers(k, n, kz)
    ie, ih = _column(kz, m, k, n**2, h1, R, special.jv, special.jvp)
    oje, ojh = _column(kz, m, k, 1.0, h, R, special.jv, special.jvp)
    oye, oyh = _column(kz, m, k, 1.0, h, R, special.yv, special.yvp)
    mat = np.stack([ie, ih, -oje, -oye, -ojh, -oyh], axis=-1)[:, _TANGENTIAL, :]
    scale = np.linalg.norm(mat, axis=1, keepdims=True)
    _, _, vh = np.linalg.svd(mat / scale)
    null = vh[:, -2:, :].conj().transpose(0, 2, 1) / scale.transpose(0, 2, 1)
    outer = null[:, 2:, :]
    gram = 0.5 * np.einsum("nip,niq->npq", outer.conj(), outer)
    target = h**2 / (4 * np.pi * k * C)
    w, q = np.linalg.eigh(gram)
    t = q * np.sqrt(target[:, None, None] / w[:, None, :])
    return null @ t


def _radiation_fields(fiber, omega, kz, m, coeffs, r):
    """Apply basis coefficients at radius ``r``; returns ``(N, 2, 5)``."""
    k = omega / C
    n = fiber.index.real
    h1, h = _radial_wavenumbers(k, n, kz)
    if r < fiber.radius:
        ce, ch = _column(kz, m, k, n**2, h1, r, special.jv, special.jvp)
        cols = np.stack([ce, ch], axis=-1)
        amp = coeffs[:, :2, :]
    else:
        oje, ojh = _column(kz, m, k, 1.0, h, r, special.jv, special.jvp)
        oye, oyh = _column(kz, m, k, 1.0, h, r, special.yv, special.yvp)
        cols = np.stack([oje, oye, ojh, oyh], axis=-1)
        amp = coeffs[:, 2:, :]
    return np.einsum("nci,nip->npc", cols, amp)


def radiation_profiles(fiber: Fiber, omega: float, kz, m: int, r: float) -> np.ndarray:
    """Both polarisation profiles ``(N, 2, 3)`` of (e_r, e_phi, e_z) at radius ``r``."""
    kz = np.atleast_1d(np.asarray(kz, dtype=float))
    if np.any(np.abs(kz) > omega / C):
        raise EvanescentIndexError("evanescent index requested: |kz| > omega/c")
    coeffs = radiation_basis(fiber, omega, kz, m)
    return _radiation_fields(fiber, omega, kz, m, coeffs, r)[..., :3]


def radiation_profile(fiber: Fiber, index: RadiationModeIndex, r: float) -> np.ndarray:
    """Profile ``e_{omega kz m p}(r)`` in (e_r, e_phi, e_z); ``p`` in {0, 1}."""
    if index.p not in (0, 1):
        raise ValueError("radiation polarisation index must be 0 or 1")
    return radiation_profiles(fiber, index.omega, index.kz, index.m, r)[0, index.p]


def radiation_tangential(fiber: Fiber, omega: float, kz, m: int, r: float) -> np.ndarray:
    """Tangential components ``(N, 2, 4)`` = (e_phi, e_z, Z0h_phi, Z0h_z)."""
    kz = np.atleast_1d(np.asarray(kz, dtype=float))
    coeffs = radiation_basis(fiber, omega, kz, m)
    return _radiation_fields(fiber, omega, kz, m, coeffs, r)[..., 1:]
