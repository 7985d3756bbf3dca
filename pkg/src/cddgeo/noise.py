"""Ohmic dephasing bath: coherence factor, correlation kernel, and the
engineered qubit-ancilla coupling that reproduces the bath in the purified
picture.

Conventions: hbar = 1; frequencies in units of 1/tau.  The bath is Ohmic
with exponent fixed to 1, cutoff omega_c, coupling eta, and temperature
expressed as a frequency omega_T = k_B T / hbar.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .specfun import digamma, log_gamma, trigamma

__all__ = [
    "NoiseParams",
    "ScalarTrace",
    "NoiseTables",
    "coherence_factor",
    "coherence_factor_deriv",
    "zero_time_rate",
    "ancilla_coupling",
    "bath_correlation",
    "drift_hamiltonian",
    "tabulate",
]

# Below this time the closed-form h(t) limit is used; the direct quotient
# loses all precision to cancellation in 1 - mu^2.
_SMALL_TIME = 1e-7


@dataclass(frozen=True)
class NoiseParams:
    """Bath parameters.  eta = 0 switches the bath off entirely."""

    eta: float = 0.34
    omega_c: float = math.pi / 5.0
    omega_T: float = math.pi / 5.0
    tau: float = 1.0

    def __post_init__(self):
        if self.eta < 0.0:
            raise ValueError("eta must be >= 0")
        if self.omega_c <= 0.0:
            raise ValueError("omega_c must be > 0")
        if self.omega_T < 0.0:
            raise ValueError("omega_T must be >= 0")
        if self.tau <= 0.0:
            raise ValueError("tau must be > 0")

    @property
    def correlation_time(self) -> float:
        return 2.0 * math.pi / self.omega_c


def coherence_factor(t: float, p: NoiseParams) -> float:
    """Free-dephasing coherence decay mu(t), with mu(0) = 1.

    mu = { |Gamma(1 + a + i b t)|^4 / [(1 + omega_c^2 t^2) Gamma(1+a)^4] }^(2 eta)
    with a = omega_T/omega_c and b = omega_T.  Evaluated in log space so
    large gamma magnitudes never overflow.
    """
    if p.eta == 0.0:
        return 1.0
    a = p.omega_T / p.omega_c
    b = p.omega_T
    log_body = -math.log1p((p.omega_c * t) ** 2)
    if b != 0.0:
        log_body += 4.0 * (
            log_gamma(1.0 + a + 1.0j * b * t).real - log_gamma(1.0 + a).real
        )
    return math.exp(2.0 * p.eta * log_body)


def coherence_factor_deriv(t: float, p: NoiseParams) -> float:
    """d mu / dt, analytic via the digamma function."""
    if p.eta == 0.0:
        return 0.0
    a = p.omega_T / p.omega_c
    b = p.omega_T
    rate = -2.0 * p.omega_c**2 * t / (1.0 + (p.omega_c * t) ** 2)
    if b != 0.0:
        rate += -4.0 * b * digamma(1.0 + a + 1.0j * b * t).imag
    return coherence_factor(t, p) * 2.0 * p.eta * rate


def zero_time_rate(p: NoiseParams) -> float:
    """Curvature rate lambda_0 = C(0)/hbar^2 = eta omega_c^2 + 2 eta omega_T^2 psi'(1 + omega_T/omega_c)."""
    lam = p.eta * p.omega_c**2
    if p.omega_T != 0.0:
        lam += 2.0 * p.eta * p.omega_T**2 * trigamma(1.0 + p.omega_T / p.omega_c).real
    return lam


def ancilla_coupling(t: float, p: NoiseParams) -> float:
    """Coupling strength h(t) between qubit and purifying ancilla.

    h = mu' / (2 sqrt(1 - mu^2)); the t -> 0 limit is -sqrt(lambda_0),
    negative because mu decreases from 1.
    """
    if p.eta == 0.0:
        return 0.0
    if abs(t) < _SMALL_TIME:
        return -math.sqrt(zero_time_rate(p))
    mu = coherence_factor(t, p)
    return coherence_factor_deriv(t, p) / (2.0 * math.sqrt((1.0 - mu) * (1.0 + mu)))


def bath_correlation(t: float, p: NoiseParams) -> complex:
    """Two-time bath correlation C(t) (hbar = 1).

    C(t) = eta omega_c^2 [ 1/(1 + i omega_c t)^2
             + 2 (omega_T/omega_c)^2 Re psi'(1 + (omega_T/omega_c)(1 - i omega_c t)) ]
    Satisfies C(-t) = conj(C(t)) and C(0) = lambda_0.
    """
    if p.eta == 0.0:
        return 0.0 + 0.0j
    r = p.omega_T / p.omega_c
    val = (1.0 + 1.0j * p.omega_c * t) ** -2
    if r != 0.0:
        val += 2.0 * r**2 * trigamma(1.0 + r * (1.0 - 1.0j * p.omega_c * t)).real
    return p.eta * p.omega_c**2 * val


def drift_hamiltonian(t: float, p: NoiseParams) -> np.ndarray:
    """Purified drift -h(t) sigma_z (x) sigma_z as a dense 4x4 array.

    Basis order is |qubit, ancilla> = |00>, |01>, |10>, |11>.
    """
    h = ancilla_coupling(t, p)
    out = np.zeros((4, 4), dtype=complex)
    out[0, 0] = -h
    out[1, 1] = h
    out[2, 2] = h
    out[3, 3] = -h
    return out


@dataclass(frozen=True)
class ScalarTrace:
    """Samples of a scalar signal on a uniform time grid."""

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        v = np.asarray(self.values)
        if g.ndim != 1 or g.size < 2 or v.shape != g.shape:
            raise ValueError("grid and values must be matching 1-d arrays")
        steps = np.diff(g)
        if np.any(steps <= 0.0):
            raise ValueError("grid must be strictly increasing")
        if not np.allclose(steps, steps[0], rtol=1e-9, atol=1e-12):
            raise ValueError("grid must be uniform")
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "values", v)

    @property
    def dt(self) -> float:
        return float(self.grid[1] - self.grid[0])


@dataclass(frozen=True)
class NoiseTables:
    """Grid samples of mu, h, and C(k dt) shared by the solvers."""

    params: NoiseParams
    mu: ScalarTrace
    h: ScalarTrace
    corr: ScalarTrace = field(repr=False)

    @property
    def grid(self) -> np.ndarray:
        return self.mu.grid


def tabulate(p: NoiseParams, n_steps: int, t_end: float | None = None) -> NoiseTables:
    """Sample mu, h and the correlation kernel on n_steps+1 uniform nodes."""
    if n_steps < 2:
        raise ValueError("n_steps must be >= 2")
    t_end = p.tau if t_end is None else float(t_end)
    grid = np.linspace(0.0, t_end, n_steps + 1)
    mu = np.array([coherence_factor(t, p) for t in grid])
    h = np.array([ancilla_coupling(t, p) for t in grid])
    corr = np.array([bath_correlation(t, p) for t in grid])
    return NoiseTables(
        params=p,
        mu=ScalarTrace(grid, mu),
        h=ScalarTrace(grid, h),
        corr=ScalarTrace(grid, corr),
    )
