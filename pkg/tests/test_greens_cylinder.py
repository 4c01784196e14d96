from types import SimpleNamespace

import numpy as np
import pytest
from scipy.special import jv, jvp

from lateralcp.greens_cylinder import (_branch_sqrt, _rotation, coincident_imag_green, cyl_wave_function,
                                       free_space_imag_green, green_observables, reflection_matrix,
                                       vector_waves)
from lateralcp.greens_halfspace import fresnel
from lateralcp.numerics import Interval, QuadratureSpec, integrate_adaptive
from lateralcp.system import C, HBAR, MU0, AtomPosition, AtomTransition, Fiber

FIBER = Fiber()
ATOM = AtomTransition.cesium_d2()
K = ATOM.k10
OMEGA = ATOM.omega10


def _closed_form_g0(r, rp):
    v = r - rp
    dist = np.linalg.norm(v)
    u = v / dist
    x = K * dist
    return np.exp(1j * x) / (4 * np.pi * dist) * ((1 + 1j / x - 1 / x**2) * np.eye(3)
                                                 + (-1 - 3j / x + 3 / x**2) * np.outer(u, u))


def test_free_space_expansion_matches_closed_form():
    # regular waves at the inner point, outgoing at the outer one
    rho, phi, z = 300e-9, 0.3, 0.0
    rhop, phip, zp = 450e-9, -0.2, 80e-9

    def order(m):
        def f(kz):
            kz = kz + 0j
            kr = _branch_sqrt(K**2 - kz**2)
            mj, nj = vector_waves("J", abs(m), m, kz, K, kr, rho)
            ms, ns = vector_waves("H", abs(m), -m, -kz, K, kr, rhop)
            t = np.einsum("na,nb->nab", mj, ms) + np.einsum("na,nb->nab", nj, ns)
            phase = np.exp(1j * m * (phi - phip) + 1j * kz * (z - zp))
            return t * (1j / (8 * np.pi) * phase / kr**2)[:, None, None]
        return f

    total = 0
    for m in range(-45, 46):
        for a, b in [(-25 * K, -K), (-K, 0.0), (0.0, K), (K, 25 * K)]:
            total = total + integrate_adaptive(order(m), Interval(a, b), QuadratureSpec(1e-9, 0, 8000))[0]
    r = np.array([rho * np.cos(phi), rho * np.sin(phi), z])
    rp = np.array([rhop * np.cos(phip), rhop * np.sin(phip), zp])
    got = _rotation(phi) @ total @ _rotation(phip).T
    ref = _closed_form_g0(r, rp)
    assert np.abs(got - ref).max() < 1e-5 * np.abs(ref).max()


def test_vacuum_cylinder_has_no_reflection():
    vac = SimpleNamespace(radius=250e-9, index=1.0 + 0j)
    kz = np.array([0.2, 0.9, 1.3, 3.0]) * K + 0j
    for m in (0, 1, -3):
        assert np.abs(reflection_matrix(vac, kz, m, K)).max() < 1e-12


def test_m0_polarisations_decouple():
    r = reflection_matrix(FIBER, np.array([0.4, 1.2]) * K + 0j, 0, K)
    assert np.abs(r[:, 0, 1]).max() < 1e-12 and np.abs(r[:, 1, 0]).max() < 1e-12


def _mie_tm(n, x, m):
    # textbook 2D scattering coefficient, E along the axis
    from scipy.special import h1vp, hankel1
    a = n * jvp(m, n * x) * jv(m, x) - jv(m, n * x) * jvp(m, x)
    b = n * jvp(m, n * x) * hankel1(m, x) - jv(m, n * x) * h1vp(m, x)
    return -a / b


@pytest.mark.parametrize("radius", [250e-9, 20 * 852e-9])
def test_normal_incidence_matches_mie_series(radius):
    fiber = Fiber(radius, 1.45)
    x = K * radius
    for m in (0, 1, 4, 9):
        r = reflection_matrix(fiber, np.array([0j]), m, K)[0]
        assert abs(r[1, 1] - _mie_tm(1.45, x, m)) < 1e-10
        assert abs(r[0, 1]) < 1e-12


def test_large_radius_reflection_tends_to_fresnel():
    # field scattered back at the surface point facing the incident wave; loss
    # removes the light returning from the far side
    n = 1.45 + 0.3j
    fiber = Fiber(20 * ATOM.wavelength, n)
    x = K * fiber.radius
    from scipy.special import hankel1
    orders = np.arange(-400, 401)
    rm = np.array([reflection_matrix(fiber, np.array([0j]), m, K)[0, 1, 1] for m in orders])
    scat = np.sum((-1j) ** np.abs(orders) * rm * hankel1(np.abs(orders), x))
    r_te, _ = fresnel(n, 0.0, OMEGA)
    # planar mirror: incident e^{-ikx} reflects to r e^{ik(x - 2R)}
    assert abs(scat / (r_te * np.exp(-1j * x)) - 1) < 0.02


def test_cyl_wave_function_properties():
    p = np.array([400e-9, 0.0, 0.0])
    te0 = cyl_wave_function(0.3 * K, 0, "TE", OMEGA, p)
    assert abs(te0[2]) == 0.0
    # divergence-free TE wave, central differences
    h = 1e-11
    pos = np.array([350e-9, 120e-9, 40e-9])
    div = 0
    for i in range(3):
        step = np.zeros(3)
        step[i] = h
        div += (cyl_wave_function(0.4 * K, 2, "TE", OMEGA, pos + step)[i]
                - cyl_wave_function(0.4 * K, 2, "TE", OMEGA, pos - step)[i]) / (2 * h)
    scale = np.linalg.norm(cyl_wave_function(0.4 * K, 2, "TE", OMEGA, pos)) * K
    assert abs(div) < 1e-6 * scale
    # Hankel envelope at kr rho = 50
    kz = 0.6 * K
    kr = np.sqrt(K**2 - kz**2)
    far = cyl_wave_function(kz, 1, "TE", OMEGA, np.array([50 / kr, 0, 0]))
    assert abs(abs(far[1]) / (kr * np.sqrt(2 / (np.pi * 50))) - 1) < 0.01


def test_free_space_rate_identity():
    im_g0 = free_space_imag_green(OMEGA)
    gamma = (2 * MU0 / HBAR) * OMEGA**2 * (ATOM.d10 @ im_g0 @ ATOM.d01)
    assert abs(gamma.real / ATOM.gamma_free - 1) < 1e-11


def test_passivity_random_dipoles():
    im_g1, _, _ = coincident_imag_green(FIBER, FIBER.radius + 30e-9, OMEGA)
    im_g = im_g1 + free_space_imag_green(OMEGA)
    rng = np.random.default_rng(7)
    for _ in range(100):
        d = rng.normal(size=3) + 1j * rng.normal(size=3)
        assert (d @ im_g @ d.conj()).real >= 0


def test_contour_height_independence():
    a, da, _ = coincident_imag_green(FIBER, 320e-9, OMEGA)
    from lateralcp.greens_cylinder import ContourSpec
    b, db, _ = coincident_imag_green(FIBER, 320e-9, OMEGA, contour=ContourSpec(height=0.3))
    assert np.abs(a - b).max() < 1e-7 * np.abs(a).max()
    assert np.abs(da - db).max() < 1e-7 * np.abs(da).max()


def test_alpha_forms_agree_and_identity():
    obs = green_observables(ATOM, AtomPosition.at_distance(60e-9, FIBER), FIBER)
    assert abs(obs.alpha - obs.alpha_tensor_form) < 1e-12
    assert abs(obs.F_z / obs.Gamma + obs.alpha * HBAR * K) < 1e-9 * abs(obs.alpha * HBAR * K)
    assert obs.F_z < 0 < obs.alpha


def test_points_inside_rejected():
    from lateralcp.greens_cylinder import scattering_green_tensor
    with pytest.raises(ValueError):
        scattering_green_tensor(FIBER, [100e-9, 0, 0], [400e-9, 0, 0], OMEGA)


def test_weak_guide_recovers_free_space():
    fiber = Fiber(250e-9, 1.001)
    obs = green_observables(ATOM, AtomPosition.at_distance(100e-9, fiber), fiber)
    assert abs(obs.Gamma / ATOM.gamma_free - 1) < 1e-2
    assert abs(obs.alpha) < 1e-3
