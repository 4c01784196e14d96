import numpy as np
import pytest
from scipy import special

from lateralcp.numerics import (BracketError, Interval, QuadratureError, QuadratureSpec,
                                bessel_eval, find_root, integrate_adaptive)


@pytest.mark.parametrize("m", [0, 1, 5, 20])
@pytest.mark.parametrize("x", [0.3, 2.0, 17.5])
def test_bessel_wronskian(m, x):
    # J_m Y_m' - J_m' Y_m = 2 / (pi x)
    j, dj = bessel_eval("J", m, x)
    y, dy = bessel_eval("Y", m, x)
    w = (j * dy - dj * y).real
    assert abs(w * np.pi * x / 2 - 1) < 1e-10


def test_modified_bessel_wronskian():
    for m in (0, 1, 3):
        for x in (0.1, 1.0, 8.0):
            i, di = bessel_eval("I", m, x)
            k, dk = bessel_eval("K", m, x)
            assert abs((i * dk - di * k).real * x + 1) < 1e-10


def test_recurrence():
    x = 3.7
    for m in range(1, 10):
        lhs = bessel_eval("J", m - 1, x)[0] + bessel_eval("J", m + 1, x)[0]
        assert abs(lhs - 2 * m / x * bessel_eval("J", m, x)[0]) < 1e-12


def test_origin_and_errors():
    assert bessel_eval("J", 0, 0) == (1, 0)
    assert bessel_eval("J", 1, 0) == (0, 0.5)
    with pytest.raises(ValueError):
        bessel_eval("K", 1, 0.0)
    with pytest.raises(ValueError):
        bessel_eval("J", 65, 1.0)
    with pytest.raises(ValueError):
        bessel_eval("Q", 0, 1.0)
    with pytest.raises(OverflowError):
        bessel_eval("I", 0, 1000.0)


def test_hankel_consistency():
    h, dh = bessel_eval("H1", 2, 4.2)
    assert abs(h - (special.jv(2, 4.2) + 1j * special.yv(2, 4.2))) < 1e-14


def test_polynomial_exactness():
    # K15 integrates degree <= 22 exactly on one panel
    val, err = integrate_adaptive(lambda x: x**22, Interval(0.0, 1.0))
    assert abs(val - 1 / 23) < 1e-15


def test_sine_integral_oracle():
    val, _ = integrate_adaptive(lambda x: np.sinc(x / np.pi), Interval(0.0, 10 * np.pi),
                                QuadratureSpec(1e-12))
    assert abs(val - special.sici(10 * np.pi)[0]) < 1e-11


def test_vector_valued_and_singular_endpoint():
    f = lambda x: np.stack([np.sqrt(x), 1 / np.sqrt(x)], axis=-1)
    val, _ = integrate_adaptive(f, Interval(0.0, 1.0), QuadratureSpec(1e-9, 0, 5000))
    assert np.allclose(val, [2 / 3, 2.0], rtol=1e-8)


def test_breakpoints_and_failure():
    val, _ = integrate_adaptive(np.abs, Interval(-1.0, 2.0), breakpoints=[0.0])
    assert abs(val - 2.5) < 1e-14
    with pytest.raises(QuadratureError) as info, np.errstate(divide="ignore"):
        integrate_adaptive(lambda x: 1 / (x - 0.3) ** 2, Interval(0.0, 1.0), QuadratureSpec(1e-10, 0, 50))
    assert info.value.error_estimate is not None


def test_interval_validation():
    with pytest.raises(ValueError):
        Interval(1.0, 1.0)
    with pytest.raises(ValueError):
        Interval(0.0, np.inf)


def test_find_root():
    assert abs(find_root(lambda x: x * x - 2, Interval(0.0, 2.0)) - np.sqrt(2)) < 1e-14
    assert abs(find_root(np.cos, Interval(1.0, 2.0)) - np.pi / 2) < 1e-14
    with pytest.raises(BracketError):
        find_root(lambda x: x * x + 1, Interval(-1.0, 1.0))


def test_deterministic():
    f = lambda x: np.exp(-x) * np.sin(40 * x)
    a = integrate_adaptive(f, Interval(0.0, 5.0), QuadratureSpec(1e-12))
    b = integrate_adaptive(f, Interval(0.0, 5.0), QuadratureSpec(1e-12))
    assert a[0] == b[0]
