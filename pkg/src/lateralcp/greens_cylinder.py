"""Scattering Green tensor of a dielectric cylinder and the observables built on it.

Vector wave functions (``e^{i(ang phi + kz z)}`` stripped, cylindrical components)

    M = [(i ang / rho) Z,  -kr Z',  0]
    N = (1/kj) [i kz kr Z',  -(ang kz / rho) Z,  kr^2 Z]

with ``Z = Z_|m|(kr rho)``.  Outside the cylinder

    G1(r, r') = i/(8 pi) sum_m int dkz  (1/kr^2) sum_{p,p'} r_{pp'} W^H_{p; m, kz}(r) (x) W^H_{p'; -m, -kz}(r')

where ``r_{pp'}`` is the outgoing amplitude of wave ``p`` excited by a regular
(J-type) incident wave ``p'``.  The same expansion with J at the field point
reproduces the free-space tensor for ``rho < rho'``.

The guided-mode poles sit on (or just off) the real kz axis inside
``k < |kz| < n k``; the contour is detoured below the axis for ``kz > 0`` and
above it for ``kz < 0``, which is the causal side of both poles.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special
from scipy.integrate import trapezoid

from .emission import MSumConvergenceError
from .numerics import Interval, QuadratureError, QuadratureSpec, integrate_adaptive
from .system import C, HBAR, MU0, AtomPosition, AtomTransition, Fiber

TAIL_QR = 500.0
DEFAULT_QUAD = QuadratureSpec(rel_tol=1e-8, abs_tol=0.0, max_subdivisions=4000)


class BoundaryConditioningError(np.linalg.LinAlgError):
    """The 4x4 interface system is numerically singular."""


@dataclass(frozen=True)
class ContourSpec:
    """kz path: detour of height ``height * k`` between ``k`` and ``end * k``."""

    height: float = 0.1
    end: float | None = None  # default Re(n) + 0.25
    tail_tol: float = 1e-6


def _branch_sqrt(w):
    """Square root on the physical sheet, ``Im >= 0``."""
    s = np.sqrt(np.asarray(w, dtype=complex))
    return np.where(s.imag < 0, -s, s)


def _scaled_cyl(kind, order, x):
    """Cylinder function and derivative divided by ``e^{|Im x|}`` (J) or ``e^{i x}`` (H)."""
    fn = {"J": special.jve, "H": special.hankel1e}[kind]
    return fn(order, x), 0.5 * (fn(order - 1, x) - fn(order + 1, x))


def _waves(z, dz, ang, kz, kj, kr, rho):
    zero = np.zeros_like(z)
    m_vec = np.stack([1j * ang / rho * z, -kr * dz, zero], axis=-1)
    n_vec = np.stack([1j * kz * kr * dz, -(ang * kz / rho) * z, kr**2 * z], axis=-1) / kj
    return m_vec, n_vec


def vector_waves(kind, order, ang, kz, kj, kr, rho):
    """M and N of the module docstring, shape ``(N, 3)`` each."""
    fn, dfn = {"J": (special.jv, special.jvp), "H": (special.hankel1, special.h1vp)}[kind]
    x = kr * rho
    return _waves(fn(order, x), dfn(order, x), ang, kz, kj, kr, rho)


def cyl_wave_function(k_z, m: int, p: str, omega: float, position) -> np.ndarray:
    """Outgoing wave ``M`` (``p='TE'``) or ``N`` (``p='TM'``) at a Cartesian point.

    Includes the ``e^{i(m phi + k_z z)}`` factor; returns Cartesian components.
    """
    x, y, z = np.asarray(position, dtype=float)
    rho, phi = np.hypot(x, y), np.arctan2(y, x)
    k = omega / C
    kz = np.atleast_1d(complex(k_z))
    kr = _branch_sqrt(k**2 - kz**2)
    mv, nv = vector_waves("H", abs(m), m, kz, complex(k), kr, rho)
    vec = {"TE": mv, "TM": nv}[p][0] * np.exp(1j * (m * phi + kz[0] * z))
    return _rotation(phi) @ vec


def reflection_matrix(fiber: Fiber, kz, m: int, k, normalized: bool = False) -> np.ndarray:
    """``r[..., p, p']`` with p, p' in (M=TE, N=TM), for array ``kz``.

    Solves continuity of ``E_phi, E_z, Z0 H_phi, Z0 H_z`` at the surface.
    ``k`` may be complex (imaginary frequencies).  With ``normalized=True``
    the exterior J and H waves are scaled to unit radial function at the
    surface, which keeps high orders inside double range; the physical
    coefficient is then ``r * J_m(kr R) / H_m(kr R)``.
    """
    kz = np.atleast_1d(np.asarray(kz, dtype=complex))
    n = fiber.index
    R = fiber.radius
    order = abs(m)
    kr = _branch_sqrt(k**2 - kz**2)
    kr1 = _branch_sqrt((n * k) ** 2 - kz**2)
    k = complex(k)
    x, x1 = kr * R, kr1 * R
    if normalized:
        ext_j = [np.ones_like(x), _log_deriv("J", order, x)]
        ext_h = [np.ones_like(x), _log_deriv("H", order, x)]
        inner = [np.ones_like(x1), _log_deriv("J", order, x1)]
    else:
        ext_j = [special.jv(order, x), special.jvp(order, x)]
        ext_h = [special.hankel1(order, x), special.h1vp(order, x)]
        inner = [special.jv(order, x1), special.jvp(order, x1)]
    mj, nj = _waves(*ext_j, m, kz, k, kr, R)
    mh, nh = _waves(*ext_h, m, kz, k, kr, R)
    m1, n1 = _waves(*inner, m, kz, n * k, kr1, R)

    # tangential rows: E_phi, E_z, Z0H_phi, Z0H_z ; Z0 H = -i n (a N + b M)
    def tang(e_vec, h_vec, nmed):
        return np.stack([e_vec[:, 1], e_vec[:, 2], -1j * nmed * h_vec[:, 1], -1j * nmed * h_vec[:, 2]], axis=-1)

    cols = [tang(mh, nh, 1.0), tang(nh, mh, 1.0), -tang(m1, n1, n), -tang(n1, m1, n)]
    mat = np.stack(cols, axis=-1)
    rhs = -np.stack([tang(mj, nj, 1.0), tang(nj, mj, 1.0)], axis=-1)
    scale = np.max(np.abs(mat), axis=1, keepdims=True)
    scale = np.where(scale == 0, 1.0, scale)
    scaled = mat / scale
    cond = np.linalg.cond(scaled)
    if np.any(~np.isfinite(cond)) or np.any(cond > 1e14):
        raise BoundaryConditioningError(
            f"interface system singular for m={m} near kz={kz[np.argmax(cond)]:.6g}")
    sol = np.linalg.solve(scaled, rhs) / scale.transpose(0, 2, 1)
    return sol[:, :2, :]


def _log_deriv(kind, order, x):
    z, dz = _scaled_cyl(kind, order, x)
    return dz / z


def _kernel(fiber, k, kz, m, rho, rho_p):
    """Cylindrical-component integrand ``(N, 3, 3)`` for fixed m, no angular/axial phase."""
    kr = _branch_sqrt(k**2 - kz**2)
    order = abs(m)
    R = fiber.radius
    r_hat = reflection_matrix(fiber, kz, m, k, normalized=True)
    jr, _ = _scaled_cyl("J", order, kr * R)
    hr, _ = _scaled_cyl("H", order, kr * R)
    hf, dhf = _scaled_cyl("H", order, kr * rho)
    hs, dhs = _scaled_cyl("H", order, kr * rho_p)
    mh, nh = _waves(hf / hr, dhf / hr, m, kz, complex(k), kr, rho)
    ms, ns = _waves(hs / hr, dhs / hr, -m, -kz, complex(k), kr, rho_p)
    field = np.stack([mh, nh], axis=1)     # (N, p, 3)
    source = np.stack([ms, ns], axis=1)    # (N, p', 3)
    t = np.einsum("npq,npa,nqb->nab", r_hat, field, source)
    # J_m H_m at the surface and the stripped exponentials of the scaled functions
    pref = jr * hr * np.exp(np.abs((kr * R).imag) + 1j * kr * (rho + rho_p - R))
    return t * (1j / (8 * np.pi) * pref / kr**2)[:, None, None]


def _rotation(phi):
    c, s = np.cos(phi), np.sin(phi)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _segments(k_real, n_real, spec: ContourSpec):
    """Straight pieces of the kz > 0 path as ``(start, stop)`` pairs.

    The path leaves the real axis at ``k/2``, passes below the branch point
    ``k`` and the guided pole, and rejoins the axis at ``end``.
    """
    k = k_real
    eta = spec.height * k
    end = (spec.end if spec.end is not None else n_real + 0.25) * k
    pts = [0.0, 0.5 * k, k - 1j * eta, end - 1j * eta, end]
    return list(zip(pts[:-1], pts[1:])), end


def _integrate_order(fiber, k, m, rho, rho_p, dphi, dz, quad, contour, want, deriv_too):
    """Integrate one azimuthal order over the full kz path.

    ``want`` is ``"imag"`` (real integrand = Im of the complex one; used at
    coincident points where only Im G enters) or ``"complex"``.
    Returns array ``(D, 3, 3)`` (complex) with D = 2 if ``deriv_too`` else 1.
    """
    n_real = fiber.index.real
    if np.imag(k) != 0:
        # imaginary frequency: no poles or branch points on the real kz axis
        end = abs(k)
        segs = [(0.0, end)]
    else:
        segs, end = _segments(k, n_real, contour)
    angular = np.exp(1j * m * dphi)
    kabs = abs(k)

    def make(start, stop, sign):
        def f(t):
            kz = start + t * (stop - start)
            dk = np.full_like(kz, stop - start)
            if sign < 0:
                kz, dk = -kz, -dk
            base = _kernel(fiber, k, kz, m, rho, rho_p) * (angular * np.exp(1j * kz * dz) * dk)[:, None, None]
            parts = [base]
            if deriv_too:
                # divided by |k| so both parts share units; undone below
                parts.append(base * (1j * kz / kabs)[:, None, None])
            out = np.stack(parts, axis=1)
            if want == "imag":
                return out.imag
            return np.concatenate([out.real, out.imag], axis=1)
        return f

    total = 0.0
    for sign in (1, -1):
        for start, stop in segs:
            try:
                val, _ = integrate_adaptive(make(complex(start), complex(stop), sign), Interval(0.0, 1.0), quad)
            except QuadratureError as exc:
                raise QuadratureError(
                    f"m={m}: kz integral failed near the guided-mode pole region "
                    f"[{abs(k):.4g}, {end:.4g}] x sign {sign}: {exc}", exc.value, exc.error_estimate) from exc
            # the kz<0 half runs from -inf to 0: reverse orientation
            total = total + (val if sign > 0 else -val)
        # evanescent tail, grown until it stops contributing
        lo = end
        tail_total = 0.0
        # hard stop once the surface factor exp(-2 q d) is far below double precision
        gap = rho + rho_p - 2 * fiber.radius
        kz_cap = np.sqrt(max(TAIL_QR / fiber.radius, 80.0 / gap) ** 2 + abs(k) ** 2)
        while lo < kz_cap:
            hi = min(2 * lo, kz_cap)
            val, _ = integrate_adaptive(make(complex(lo), complex(hi), sign), Interval(0.0, 1.0), quad)
            val = val if sign > 0 else -val
            tail_total = tail_total + val
            ref = np.max(np.abs(total + tail_total))
            if ref == 0 or np.max(np.abs(val)) < contour.tail_tol * ref:
                break
            lo = hi
        total = total + tail_total
    if want == "imag":
        out = 1j * total
    else:
        d = total.shape[0] // 2
        out = total[:d] + 1j * total[d:]
    if deriv_too:
        out[1] *= kabs
    return out


def _msum(fiber, k, rho, rho_p, dphi, dz, quad, contour, want, deriv_too,
          m_floor=5, m_limit=120, rel_tol=1e-6, m_max=None, scale=None):
    # increments are judged against the free-space radiative scale unless given
    if scale is None:
        scale = (abs(k) / (6 * np.pi), abs(k) ** 2 / (6 * np.pi))
    scale = np.array(scale)[: 2 if deriv_too else 1]
    total = 0.0
    small = 0
    limit = m_limit if m_max is None else m_max
    for order in range(limit + 1):
        ms = (0,) if order == 0 else (order, -order)
        inc = sum(_integrate_order(fiber, k, m, rho, rho_p, dphi, dz, quad, contour, want, deriv_too)
                  for m in ms)
        total = total + inc
        if m_max is not None:
            continue
        rel = np.max(np.abs(inc).reshape(len(scale), -1).max(axis=1) / scale)
        small = small + 1 if rel < rel_tol else 0
        if order >= m_floor and small >= 3:
            return total, order
    if m_max is None:
        raise MSumConvergenceError(f"Green-tensor m-sum not converged at |m| = {limit}")
    return total, m_max


def scattering_green_tensor(fiber: Fiber, r, r_prime, omega: float,
                            quad: QuadratureSpec = DEFAULT_QUAD, m_max: int | None = None,
                            contour: ContourSpec = ContourSpec()) -> np.ndarray:
    """Complex ``G1(r, r', omega)`` (Cartesian, 1/m) for two points outside the cylinder.

    ``r`` and ``r_prime`` are Cartesian 3-vectors.
    """
    r = np.asarray(r, dtype=float)
    rp = np.asarray(r_prime, dtype=float)
    rho, phi = np.hypot(r[0], r[1]), np.arctan2(r[1], r[0])
    rho_p, phi_p = np.hypot(rp[0], rp[1]), np.arctan2(rp[1], rp[0])
    if rho <= fiber.radius or rho_p <= fiber.radius:
        raise ValueError("both points must lie outside the cylinder")
    k = omega / C
    cyl, _ = _msum(fiber, k, rho, rho_p, phi - phi_p, r[2] - rp[2], quad, contour,
                   "complex", False, m_max=m_max)
    return _rotation(phi) @ cyl[0] @ _rotation(phi_p).T


def coincident_imag_green(fiber: Fiber, x_A: float, omega: float,
                          quad: QuadratureSpec = DEFAULT_QUAD, contour: ContourSpec = ContourSpec(),
                          m_max: int | None = None):
    """``(Im G1, d/dz Im G1, m_used)`` at ``r = r' = (x_A, 0, 0)``, Cartesian.

    The derivative acts on the field-point argument.
    """
    k = omega / C
    if quad.abs_tol == 0:
        # floor far below the free-space scale k/(6 pi); relative targets alone
        # stall on high orders whose net contribution nearly cancels
        quad = QuadratureSpec(quad.rel_tol, 1e-10 * k / (6 * np.pi), quad.max_subdivisions)
    tot, m_used = _msum(fiber, k, x_A, x_A, 0.0, 0.0, quad, contour, "imag", True, m_max=m_max)
    return tot[0].imag, tot[1].imag, m_used


def free_space_imag_green(omega: float) -> np.ndarray:
    return omega / (6 * np.pi * C) * np.eye(3)


@dataclass(frozen=True)
class GreenObservables:
    Gamma: float
    F_z: float
    alpha: float
    im_g1: np.ndarray
    dz_im_g1: np.ndarray
    m_max: int

    @property
    def alpha_tensor_form(self) -> float:
        """Directionality from ``-2/k dz Im G1_xz / (Im G_xx + Im G_zz)`` (sigma-type dipoles)."""
        return self._alpha_tensor

    _alpha_tensor: float = 0.0


def green_observables(atom: AtomTransition, pos: AtomPosition, fiber: Fiber,
                      quad: QuadratureSpec = DEFAULT_QUAD, contour: ContourSpec = ContourSpec()):
    """Total decay rate, resonant lateral force and directionality from G1.

    ``Gamma = 2 mu0 w^2 / hbar d10 . Im G . d01`` and
    ``F_z = 2 i mu0 w^2 d10 . dz Im G1 . d01``; ``alpha = -F_z / (hbar k Gamma)``.
    """
    w = atom.omega10
    im_g1, dz_im_g1, m_used = coincident_imag_green(fiber, pos.x_A, w, quad, contour)
    im_g = im_g1 + free_space_imag_green(w)
    d10, d01 = atom.d10, atom.d01
    gamma = (2 * MU0 / HBAR) * w**2 * (d10 @ im_g @ d01)
    force = 2j * MU0 * w**2 * (d10 @ dz_im_g1 @ d01)
    gamma, force = float(gamma.real), float(force.real)
    alpha = -force / (HBAR * atom.k10 * gamma)
    alpha_t = -2 / atom.k10 * dz_im_g1[0, 2] / (im_g[0, 0] + im_g[2, 2])
    return GreenObservables(gamma, force, alpha, im_g1, dz_im_g1, m_used, float(alpha_t))


def nonresonant_lateral_check(atom: AtomTransition, pos: AtomPosition, fiber: Fiber, xi_grid,
                              quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Lateral component of the off-resonant force of a ground-state atom.

    ``F = -(2 mu0/pi) int dxi xi^2 w/(w^2 + xi^2) dz [d01 . S G1(r, r_A, i xi) . d10]``
    with ``S`` the symmetric part; trapezoidal over ``xi_grid``.  The index is
    taken frequency independent.
    """
    xi = np.asarray(xi_grid, dtype=float)
    if xi.ndim != 1 or len(xi) < 2 or np.any(xi <= 0):
        raise ValueError("xi_grid needs at least two positive imaginary frequencies")
    w = atom.omega10
    d = pos.distance
    vals = []
    for x in xi:
        k = 1j * x / C
        # quasi-static image scale of G1 near the surface
        near = 1.0 / (4 * np.pi * d**3 * abs(k) ** 2)
        spec = QuadratureSpec(quad.rel_tol, 1e-10 * near / d, quad.max_subdivisions)
        tot, _ = _msum(fiber, k, pos.x_A, pos.x_A, 0.0, 0.0, spec, ContourSpec(height=0.0), "complex", True,
                       scale=(near, near / d))
        dz = tot[1]
        sym = 0.5 * (dz + dz.T)
        vals.append(x**2 * w / (w**2 + x**2) * (atom.d01 @ sym @ atom.d10))
    return float((-(2 * MU0 / np.pi) * trapezoid(np.array(vals), xi)).real)
