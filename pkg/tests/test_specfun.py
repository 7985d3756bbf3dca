"""Gamma-family functions against mpmath at high precision."""

import math

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cddgeo.specfun import digamma, log_gamma, trigamma

mpmath.mp.dps = 30

# Sample points spanning the solver's actual usage: 1 + a + i b t with
# a = omega_T/omega_c up to ~1e3 and |b t| up to similar size.
POINTS = [
    0.1 + 0.0j,
    0.5 + 0.3j,
    1.0 + 0.0j,
    1.34 + 0.6283j,
    2.0 - 5.0j,
    7.5 + 0.01j,
    10.0 + 10.0j,
    250.0 - 80.0j,
    1001.0 + 628.0j,
]


@pytest.mark.parametrize("z", POINTS)
def test_log_gamma_matches_mpmath(z):
    ref = complex(mpmath.loggamma(mpmath.mpc(z)))
    got = log_gamma(z)
    assert abs(got - ref) <= 1e-12 * max(1.0, abs(ref))


@pytest.mark.parametrize("z", POINTS)
def test_digamma_matches_mpmath(z):
    ref = complex(mpmath.digamma(mpmath.mpc(z)))
    got = digamma(z)
    assert abs(got - ref) <= 1e-12 * max(1.0, abs(ref))


@pytest.mark.parametrize("z", POINTS)
def test_trigamma_matches_mpmath(z):
    ref = complex(mpmath.polygamma(1, mpmath.mpc(z)))
    got = trigamma(z)
    assert abs(got - ref) <= 1e-12 * max(1.0, abs(ref))


_args = st.complex_numbers(
    min_magnitude=1e-3, max_magnitude=1e3, allow_nan=False, allow_infinity=False
).filter(lambda z: z.real > 1e-3)


@given(_args)
@settings(max_examples=200, deadline=None)
def test_digamma_recurrence(z):
    # psi(z + 1) = psi(z) + 1/z
    lhs = digamma(z + 1.0)
    rhs = digamma(z) + 1.0 / z
    assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))


@given(_args)
@settings(max_examples=200, deadline=None)
def test_trigamma_recurrence(z):
    # psi'(z + 1) = psi'(z) - 1/z^2
    lhs = trigamma(z + 1.0)
    rhs = trigamma(z) - 1.0 / (z * z)
    assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))


@given(_args)
@settings(max_examples=200, deadline=None)
def test_log_gamma_recurrence(z):
    # log Gamma(z + 1) = log Gamma(z) + log z, exact off the branch cut
    # for Re z > 0
    lhs = log_gamma(z + 1.0)
    rhs = log_gamma(z) + complex(mpmath.log(mpmath.mpc(z)))
    assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))


@given(_args)
@settings(max_examples=100, deadline=None)
def test_conjugation_symmetry(z):
    for f in (log_gamma, digamma, trigamma):
        assert abs(f(z.conjugate()) - f(z).conjugate()) <= 1e-12 * max(
            1.0, abs(f(z))
        )


def test_digamma_is_log_gamma_derivative():
    z = 1.7 + 0.9j
    h = 1e-6
    fd = (log_gamma(z + h) - log_gamma(z - h)) / (2.0 * h)
    assert abs(fd - digamma(z)) <= 1e-8


def test_trigamma_is_digamma_derivative():
    z = 2.2 - 1.1j
    h = 1e-6
    fd = (digamma(z + h) - digamma(z - h)) / (2.0 * h)
    assert abs(fd - trigamma(z)) <= 1e-8


def test_known_real_values():
    euler = 0.5772156649015328606
    assert abs(digamma(1.0) + euler) <= 1e-13
    assert abs(trigamma(1.0) - math.pi**2 / 6.0) <= 1e-13
    assert abs(log_gamma(5.0) - math.log(24.0)) <= 1e-13


@pytest.mark.parametrize("bad", [0.0, -1.0, -0.5 + 2.0j, complex("nan")])
def test_domain_rejected(bad):
    for f in (log_gamma, digamma, trigamma):
        with pytest.raises(ValueError):
            f(bad)
