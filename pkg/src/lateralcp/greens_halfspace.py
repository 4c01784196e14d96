"""Dielectric half-space: Fresnel coefficients, scattering Green tensor, lateral force.

Geometry: the medium fills ``x < 0``; the atom side is ``x > 0`` and (y, z) are
the in-plane directions.  A wave with in-plane vector ``k_par (0, cos psi, sin psi)``
has normal wavenumber ``kx = sqrt(k^2 - k_par^2)`` (``Im kx >= 0``), and

    G1(r, r') = i/(8 pi^2) int d^2k_par / kx  e^{i k_par.(rho - rho') + i kx (x + x')}
                [r_s e_s e_s + r_p e_p+ e_p-]

with ``e_s = (0, -sin psi, cos psi)`` and ``e_p+- = (k_par x^ -+ kx u^) / k``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from .numerics import Interval, QuadratureSpec, integrate_adaptive
from .system import C, HBAR, MU0, AtomTransition, HalfSpace

DEFAULT_QUAD = QuadratureSpec(rel_tol=1e-10, abs_tol=0.0, max_subdivisions=4000)
# evanescent cut-off: exp(-2 q d) below this
TAIL_DECAY = 1e-10
REGIME_MIN_WAVELENGTHS = 2.0


def _kx(k, k_par, eps=1.0):
    s = np.sqrt(np.asarray(eps * k**2 - np.asarray(k_par) ** 2, dtype=complex))
    return np.where(s.imag < 0, -s, s)


def fresnel(n: complex, k_parallel, omega: float):
    """``(r_TE, r_TM)`` for a wave incident from vacuum on medium ``n``.

    ``r_TM`` is the magnetic-field ratio, so both equal ``(n-1)/(n+1)`` in
    magnitude at normal incidence with ``r_TM = (n-1)/(n+1)``.
    """
    k = omega / C
    eps = complex(n) ** 2
    kx = _kx(k, k_parallel)
    kx1 = _kx(k, k_parallel, eps)
    return (kx - kx1) / (kx + kx1), (eps * kx - kx1) / (eps * kx + kx1)


def _angular_coeffs(ky_hat, kz_hat, kx_over_k, kp_over_k, r_s, r_p, deriv_lat):
    """Polarisation dyad as a function of psi, sampled on 8 equispaced angles.

    Returns samples with shape ``(N, 8, 3, 3)``; ``deriv_lat`` multiplies by
    ``i k_par sin psi`` (d/dz on the field point), in units of k.
    """
    psi = 2 * np.pi * np.arange(8) / 8
    c, s = np.cos(psi), np.sin(psi)
    zero = np.zeros_like(psi)
    es = np.stack([zero, -s, c], axis=-1)                       # (8, 3)
    u = np.stack([zero, c, s], axis=-1)
    xhat = np.array([1.0, 0.0, 0.0])
    kp = kp_over_k[:, None, None]
    kx = kx_over_k[:, None, None]
    ep_plus = kp * xhat - kx * u[None]                          # (N, 8, 3)
    ep_minus = kp * xhat + kx * u[None]
    dyad = r_s[:, None, None, None] * np.einsum("pa,pb->pab", es, es)[None] \
        + r_p[:, None, None, None] * np.einsum("npa,npb->npab", ep_plus, ep_minus)
    if deriv_lat:
        dyad = dyad * (1j * kp_over_k[:, None] * s[None])[:, :, None, None]
    return dyad


def _angular_integral(samples, u, theta):
    """``int_0^{2 pi} P(psi) e^{i u cos(psi - theta)} dpsi`` for a degree <= 3 trig polynomial.

    ``P`` is given by its 8 samples; Fourier coefficients via the DFT.
    """
    coeffs = np.fft.fft(samples, axis=1) / 8                    # coefficient of e^{i p psi}, p mod 8
    out = 0.0
    for p in range(-3, 4):
        c_p = coeffs[:, p % 8]
        weight = 2 * np.pi * (1j**p) * special.jv(p, u) * np.exp(1j * p * theta)
        out = out + weight[:, None, None] * c_p
    return out


def planar_scattering_green(halfspace: HalfSpace, r, r_prime, omega: float,
                            quad: QuadratureSpec = DEFAULT_QUAD, deriv_z: bool = False) -> np.ndarray:
    """Complex ``G1(r, r', omega)`` above the half-space (1/m), Cartesian.

    With ``deriv_z=True`` returns ``d/dz G1`` acting on the field point.
    """
    r = np.asarray(r, dtype=float)
    rp = np.asarray(r_prime, dtype=float)
    if r[0] <= 0 or rp[0] <= 0:
        raise ValueError("both points must lie on the vacuum side x > 0")
    k = omega / C
    n = halfspace.index
    h = r[0] + rp[0]
    dy, dz = r[1] - rp[1], r[2] - rp[2]
    lat = np.hypot(dy, dz)
    theta = np.arctan2(dz, dy)

    def body(kp, kx):
        r_s, r_p = fresnel(n, kp, omega)
        samples = _angular_coeffs(None, None, kx / k, kp / k, r_s, r_p, deriv_z)
        ang = _angular_integral(samples, kp * lat, theta)
        if deriv_z:
            ang = ang * k
        return ang * np.exp(1j * kx * h)[:, None, None]

    # propagating: kappa dkappa / kx = -dkx, kx from k to 0
    def prop(t):
        kx = t + 0j
        kp = np.sqrt(np.maximum(k**2 - t**2, 0.0)) + 0j
        return body(kp, kx)

    # evanescent: kx = i q, kappa dkappa / kx = -i dq
    def evan(q):
        kx = 1j * q
        kp = np.sqrt(k**2 + q**2) + 0j
        return -1j * body(kp, kx)

    q_max = -np.log(TAIL_DECAY) / h
    # integrate real and imaginary parts together
    stack = lambda f: (lambda t: np.concatenate([f(t).real, f(t).imag], axis=1))
    # one breakpoint per period of exp(i kx h) keeps far distances resolvable
    periods = int(k * h / (2 * np.pi))
    if quad.abs_tol == 0:
        # far from the surface G1 is a small remainder of O(k) integrands
        scale = k / (6 * np.pi) * (k if deriv_z else 1.0)
        quad = QuadratureSpec(quad.rel_tol, 1e-12 * scale, quad.max_subdivisions)
    cuts = np.linspace(0.0, k, periods + 2)[1:-1]
    pquad = QuadratureSpec(quad.rel_tol, quad.abs_tol, max(quad.max_subdivisions, 40 * (periods + 1)))
    a, _ = integrate_adaptive(stack(prop), Interval(0.0, k), pquad, breakpoints=cuts)
    b, _ = integrate_adaptive(stack(evan), Interval(0.0, q_max), quad)
    tot = a + b
    val = tot[:3] + 1j * tot[3:]
    return 1j / (8 * np.pi**2) * val


@dataclass(frozen=True)
class PlanarObservables:
    Gamma: float
    F_z: float
    alpha: float


def planar_observables(atom: AtomTransition, d_A: float, halfspace: HalfSpace,
                       quad: QuadratureSpec = DEFAULT_QUAD) -> PlanarObservables:
    """Numeric decay rate and lateral force from the planar G1 (atom at ``x = d_A``)."""
    w = atom.omega10
    pos = np.array([d_A, 0.0, 0.0])
    g1 = planar_scattering_green(halfspace, pos, pos, w, quad)
    dg1 = planar_scattering_green(halfspace, pos, pos, w, quad, deriv_z=True)
    im_g = g1.imag + w / (6 * np.pi * C) * np.eye(3)
    gamma = float(((2 * MU0 / HBAR) * w**2 * (atom.d10 @ im_g @ atom.d01)).real)
    force = float((2j * MU0 * w**2 * (atom.d10 @ dg1.imag @ atom.d01)).real)
    return PlanarObservables(gamma, force, -force / (HBAR * atom.k10 * gamma))


@dataclass(frozen=True)
class RetardedForce:
    force: float
    in_regime: bool


def retarded_lateral_force(atom: AtomTransition, d_A: float, halfspace: HalfSpace) -> RetardedForce:
    """Far-zone lateral force from the normal-incidence image dipole.

    ``F = -mu0 w^2 r sin(2 k d) Im(d10_x d01_z) / (4 pi d^2)`` with
    ``r = Re[(n-1)/(n+1)]``.  ``in_regime`` is False for ``d_A < 2 lambda``,
    where the neglected ``1/d^3`` terms are not small.
    """
    if not d_A > 0:
        raise ValueError("d_A must be positive")
    n = halfspace.index
    r_normal = ((n - 1) / (n + 1)).real
    k = atom.k10
    chir = (atom.d10[0] * atom.d01[2]).imag
    force = -MU0 * atom.omega10**2 * r_normal * np.sin(2 * k * d_A) * chir / (4 * np.pi * d_A**2)
    return RetardedForce(float(force), bool(d_A >= REGIME_MIN_WAVELENGTHS * atom.wavelength))


def force_zeros(k10: float, d_min: float, d_max: float) -> np.ndarray:
    """Distances ``q pi / (2 k10)`` inside ``[d_min, d_max]``."""
    step = np.pi / (2 * k10)
    q = np.arange(np.ceil(d_min / step), np.floor(d_max / step) + 1)
    return q * step
