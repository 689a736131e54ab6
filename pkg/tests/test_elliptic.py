import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from artifact.elliptic import (
    EllipticDomainError,
    carlson_rc,
    carlson_rf,
    carlson_rj,
    complete_pi,
    legendre_pi,
    legendre_pi_array,
    legendre_pi_quad,
)


def test_rf_lemniscate():
    # R_F(0, 1, 2) = Γ(1/4)² / (4 sqrt(2π))
    assert carlson_rf(0, 1, 2) == pytest.approx(math.gamma(0.25) ** 2 / (4 * math.sqrt(2 * math.pi)), rel=1e-14)


def test_rc_elementary():
    assert carlson_rc(0, 1) == pytest.approx(math.pi / 2, rel=1e-14)
    assert carlson_rc(2, 1) == pytest.approx(math.atanh(math.sqrt(0.5)) / math.sqrt(1), rel=1e-13)


def test_rj_equal_args():
    assert carlson_rj(2, 2, 2, 2) == pytest.approx(2 ** -1.5, rel=1e-14)


@pytest.mark.parametrize("x,y,z,p", [(0.5, 1.0, 2.0, 1.5), (1.0, 2.0, 3.0, 0.25), (0.0, 1.0, 2.0, 3.0)])
def test_rj_against_mpmath(x, y, z, p):
    assert carlson_rj(x, y, z, p) == pytest.approx(float(mpmath.elliprj(x, y, z, p)), rel=1e-13)


def test_zero_characteristic_and_modulus():
    for phi in (0.1, 1.0, 2.5, 7.0):
        assert legendre_pi(0.0, phi, 0.0) == pytest.approx(phi, rel=1e-14)


@settings(max_examples=80, deadline=None)
@given(
    st.floats(min_value=-0.9, max_value=0.9),
    st.floats(min_value=-12.0, max_value=12.0),
    st.floats(min_value=0.0, max_value=0.95),
)
def test_carlson_matches_mpmath(n, phi, m):
    got = legendre_pi(n, phi, m)
    want = float(mpmath.ellippi(n, phi, m))
    assert got == pytest.approx(want, rel=1e-11, abs=1e-12)


@pytest.mark.parametrize("n,phi,m", [(0.3, 1.2, 0.4), (-0.5, 4.0, 0.2), (0.8, 9.3, 0.7)])
def test_carlson_matches_quadrature(n, phi, m):
    assert legendre_pi(n, phi, m) == pytest.approx(legendre_pi_quad(n, phi, m), rel=1e-10, abs=1e-12)


def test_zero_amplitude():
    assert legendre_pi(0.7, 0.0, 0.4) == 0.0


def test_odd_and_quasi_periodic():
    n, m = 0.4, 0.3
    assert legendre_pi(n, -1.1, m) == pytest.approx(-legendre_pi(n, 1.1, m), rel=1e-14)
    shift = legendre_pi(n, 1.1 + math.pi, m) - legendre_pi(n, 1.1, m)
    assert shift == pytest.approx(2 * complete_pi(n, m), rel=1e-12)


def test_array_version():
    phis = np.linspace(0, 10, 7)
    out = legendre_pi_array(0.2, phis, 0.1)
    assert np.allclose(out, [legendre_pi(0.2, p, 0.1) for p in phis], rtol=1e-14)


def test_domain_errors():
    with pytest.raises(EllipticDomainError):
        legendre_pi(1.0, 2.0, 0.2)
    with pytest.raises(EllipticDomainError):
        legendre_pi(2.0, 1.0, 0.2)
    with pytest.raises(EllipticDomainError):
        legendre_pi(0.2, 1.6, 1.0)
    with pytest.raises(ValueError):
        legendre_pi(0.2, 0.5, 0.3, method="bogus")
