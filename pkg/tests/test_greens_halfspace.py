import numpy as np
import pytest
from scipy.integrate import simpson

from lateralcp.greens_halfspace import (force_zeros, fresnel, planar_observables,
                                        planar_scattering_green, retarded_lateral_force)
from lateralcp.system import AtomTransition, HalfSpace

ATOM = AtomTransition.cesium_d2()
K = ATOM.k10
OMEGA = ATOM.omega10
SILICA = HalfSpace(1.45 + 2.05e-7j)


def test_fresnel_limits():
    n = 1.45
    r_te, r_tm = fresnel(n, 0.0, OMEGA)
    assert abs(r_tm - (n - 1) / (n + 1)) < 1e-15 and abs(r_te + (n - 1) / (n + 1)) < 1e-15
    r_te, r_tm = fresnel(n, K, OMEGA)
    assert abs(r_te + 1) < 1e-12 and abs(r_tm + 1) < 1e-12
    assert np.all(np.abs(fresnel(1.0, np.array([0.0, 0.5 * K, 3 * K]), OMEGA)) < 1e-15)


def _rate_ratio_oracle(n, d, n_pts=200001):
    # normalised perpendicular and parallel rates on a fixed grid
    eps = n**2
    kd = K * d

    def rs_rp(s, sz):
        sz1 = np.sqrt(eps - s**2 + 0j)
        return (sz - sz1) / (sz + sz1), (eps * sz - sz1) / (eps * sz + sz1)

    t = np.linspace(0, np.pi / 2, n_pts)          # s = sin t
    s, sz = np.sin(t), np.cos(t) + 0j
    rs, rp = rs_rp(s, sz)
    ph = np.exp(2j * kd * sz)
    perp = simpson(s**3 * rp * ph, x=t)
    par = simpson(s * (rs - sz**2 * rp) * ph, x=t)
    u = np.linspace(0, np.arcsinh(40 / kd), n_pts)  # s = cosh u
    s, sz = np.cosh(u), 1j * np.sinh(u)
    rs, rp = rs_rp(s, sz)
    ph = np.exp(2j * kd * sz)
    perp += -1j * simpson(s**3 * rp * ph, x=u)
    par += -1j * simpson(s * (rs - sz**2 * rp) * ph, x=u)
    return 1 + 1.5 * perp.real, 1 + 0.75 * par.real


@pytest.mark.parametrize("d", [100e-9, 600e-9])
def test_decay_rate_matches_fixed_grid_oracle(d):
    n = 1.45
    perp, par = _rate_ratio_oracle(n, d)
    obs = planar_observables(ATOM, d, HalfSpace(n))
    # sigma+ has equal normal (x) and tangential (z) weight
    expected = 0.5 * (perp + par)
    assert abs(obs.Gamma / ATOM.gamma_free / expected - 1) < 1e-6


def test_vacuum_has_no_scattering():
    g = planar_scattering_green(HalfSpace(1.0), [200e-9, 0, 0], [300e-9, 50e-9, -20e-9], OMEGA)
    assert np.abs(g).max() == 0.0


def test_reciprocity_and_derivative_antisymmetry():
    r = np.array([200e-9, 30e-9, 10e-9])
    rp = np.array([350e-9, -40e-9, 90e-9])
    a = planar_scattering_green(SILICA, r, rp, OMEGA)
    b = planar_scattering_green(SILICA, rp, r, OMEGA)
    assert np.abs(a - b.T).max() < 1e-8 * np.abs(a).max()
    dz = planar_scattering_green(SILICA, [300e-9, 0, 0], [300e-9, 0, 0], OMEGA, deriv_z=True)
    assert np.abs(dz + dz.T).max() < 1e-8 * np.abs(dz).max()


def test_vacuum_side_only():
    with pytest.raises(ValueError):
        planar_scattering_green(SILICA, [-1e-7, 0, 0], [1e-7, 0, 0], OMEGA)


def test_linear_dipoles_feel_no_lateral_force():
    for d10 in ([0, 0, 1e-29], [1e-29, 0, 0], [1e-29, 0, 1e-29]):
        atom = AtomTransition(OMEGA, np.array(d10, dtype=complex))
        assert retarded_lateral_force(atom, 3 * ATOM.wavelength, SILICA).force == 0.0
        obs = planar_observables(atom, 400e-9, SILICA)
        assert abs(obs.F_z) < 1e-12 * obs.Gamma * 1.054e-34 * K


def test_zeros_and_regime_flag():
    lam = ATOM.wavelength
    for z in force_zeros(K, 2 * lam, 5 * lam):
        assert abs(retarded_lateral_force(ATOM, z, SILICA).force) < 1e-12 * abs(
            retarded_lateral_force(ATOM, z + lam / 8, SILICA).force)
    assert not retarded_lateral_force(ATOM, 1.9 * lam, SILICA).in_regime
    assert retarded_lateral_force(ATOM, 2.0 * lam, SILICA).in_regime
    with pytest.raises(ValueError):
        retarded_lateral_force(ATOM, 0.0, SILICA)


def test_numeric_force_envelope_scales_as_inverse_square():
    lam = ATOM.wavelength
    peaks = (np.arange(16, 48) + 0.5) * np.pi / (2 * K)
    peaks = peaks[(peaks >= 2 * lam) & (peaks <= 6 * lam)]
    env = np.array([abs(planar_observables(ATOM, d, SILICA).F_z) * d**2 for d in peaks])
    assert env.max() / env.min() - 1 < 0.10


def test_numeric_force_tends_to_closed_form_far_away():
    for q in (160, 640):
        d = (q + 0.5) * np.pi / (2 * K)
        ratio = planar_observables(ATOM, d, SILICA).F_z / retarded_lateral_force(ATOM, d, SILICA).force
        assert abs(ratio - 1) < 5 * 2.88 / (K * d) ** 2 + 1e-6
