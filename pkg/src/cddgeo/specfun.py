"""Complex gamma-family special functions.

The noise model needs log|Gamma| and the first two polygamma functions at
complex argument.  scipy only covers the real axis for trigamma, so the
three functions are implemented here: Lanczos series for log-gamma,
upward recurrence into the asymptotic regime for digamma and trigamma.
All take a complex (or real) scalar with Re z > 0 and return complex.
"""

import cmath
import math

__all__ = ["log_gamma", "digamma", "trigamma"]

# Lanczos approximation, g = 7, 9 coefficients.
_LANCZOS_G = 7.0
_LANCZOS_C = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)

_LN_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)

# Asymptotic tail coefficients B_2n/(2n) and B_2n for n = 1..7.
_DIGAMMA_TAIL = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
)
_TRIGAMMA_TAIL = (
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
)

# Recurrence target: asymptotic series are applied once Re z exceeds this.
_ASYMPTOTIC_EDGE = 10.0


def _check_domain(z: complex) -> complex:
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ValueError(f"non-finite argument {z!r}")
    if z.real <= 0.0:
        raise ValueError(f"argument must have positive real part, got {z!r}")
    return z


def log_gamma(z) -> complex:
    """Principal branch of log Gamma(z) for Re z > 0."""
    z = _check_domain(z)
    if z.real < 0.5:
        # One reflection step keeps the Lanczos sum well conditioned.
        return (
            math.log(math.pi)
            - cmath.log(cmath.sin(math.pi * z))
            - log_gamma(1.0 - z)
        )
    w = z - 1.0
    acc = _LANCZOS_C[0]
    for k in range(1, len(_LANCZOS_C)):
        acc += _LANCZOS_C[k] / (w + k)
    t = w + _LANCZOS_G + 0.5
    return _LN_SQRT_2PI + (w + 0.5) * cmath.log(t) - t + cmath.log(acc)


def digamma(z) -> complex:
    """psi(z) = d/dz log Gamma(z) for Re z > 0."""
    z = _check_domain(z)
    acc = 0.0 + 0.0j
    while z.real < _ASYMPTOTIC_EDGE:
        acc -= 1.0 / z
        z = z + 1.0
    inv = 1.0 / z
    inv2 = inv * inv
    tail = 0.0 + 0.0j
    p = inv2
    for c in _DIGAMMA_TAIL:
        tail += c * p
        p *= inv2
    return acc + cmath.log(z) - 0.5 * inv - tail


def trigamma(z) -> complex:
    """psi'(z), the derivative of digamma, for Re z > 0."""
    z = _check_domain(z)
    acc = 0.0 + 0.0j
    while z.real < _ASYMPTOTIC_EDGE:
        acc += 1.0 / (z * z)
        z = z + 1.0
    inv = 1.0 / z
    inv2 = inv * inv
    tail = 0.0 + 0.0j
    p = inv * inv2
    for c in _TRIGAMMA_TAIL:
        tail += c * p
        p *= inv2
    return acc + inv + 0.5 * inv2 + tail
