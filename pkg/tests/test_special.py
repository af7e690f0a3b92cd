import numpy as np

from heatq.special import cos_sqrt, csinc, free_wave, free_wave_deriv, sinc_sqrt


def test_sinc_sqrt_branches():
    d = np.array([4.0, 1.0, 1e-9, 0.0, -1e-9, -1.0, -4.0])
    expected = np.array(
        [
            np.sin(2.0) / 2.0,
            np.sin(1.0),
            1.0 - 1e-9 / 6.0,
            1.0,
            1.0 + 1e-9 / 6.0,
            np.sinh(1.0),
            np.sinh(2.0) / 2.0,
        ]
    )
    np.testing.assert_allclose(sinc_sqrt(d), expected, rtol=1e-12)


def test_cos_sqrt_branches():
    np.testing.assert_allclose(cos_sqrt(np.pi**2), -1.0, rtol=1e-12)
    np.testing.assert_allclose(cos_sqrt(-4.0), np.cosh(2.0), rtol=1e-12)
    np.testing.assert_allclose(cos_sqrt(0.0), 1.0, rtol=1e-15)


def test_series_matches_direct_at_crossover():
    # Continuity across the series/direct switch.
    for d in (9e-7, 1.1e-6, -9e-7, -1.1e-6):
        direct = np.sin(np.sqrt(d)) / np.sqrt(d) if d > 0 else np.sinh(np.sqrt(-d)) / np.sqrt(-d)
        np.testing.assert_allclose(sinc_sqrt(d), direct, rtol=1e-12)


def test_csinc_complex():
    z = np.array([1.0 + 0j, 2j, 1e-6 + 1e-6j, 0j])
    np.testing.assert_allclose(csinc(z[0]), np.sin(1.0), rtol=1e-12)
    np.testing.assert_allclose(csinc(z[1]), np.sinh(2.0) / 2.0, rtol=1e-12)
    assert abs(csinc(z[3]) - 1.0) < 1e-14


def test_free_wave_is_entire_in_nu():
    y = np.linspace(0.0, 1.0, 11)
    np.testing.assert_allclose(free_wave(0.0, y), y, atol=1e-12)
    nu = 7.3
    np.testing.assert_allclose(
        free_wave(nu, y), np.sin(np.sqrt(nu) * y) / np.sqrt(nu), rtol=1e-12
    )
    np.testing.assert_allclose(
        free_wave(-nu, y), np.sinh(np.sqrt(nu) * y) / np.sqrt(nu), rtol=1e-12
    )
    np.testing.assert_allclose(free_wave_deriv(nu, y), np.cos(np.sqrt(nu) * y), rtol=1e-12)
