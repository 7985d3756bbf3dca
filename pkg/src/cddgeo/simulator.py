"""Open-system verification of synthesized controls.

Integrates the second-order dephasing master equation, the effective
purified equation, the exact no-control solution, and the post-RWA
amplitude-damping equation, then reduces trajectories to fidelities,
Bloch curves, and energy costs.  All densities are interaction-picture.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .algebra import SIGMA_X, SIGMA_Y, SIGMA_Z, ID2, unitary_log
from .fields import ControlField
from .noise import (
    NoiseParams,
    ancilla_coupling,
    bath_correlation,
    coherence_factor,
    coherence_factor_deriv,
    zero_time_rate,
)

__all__ = [
    "DensityTrajectory",
    "SimulationError",
    "schrodinger_us",
    "sampled_coupling",
    "solve_master_dephasing",
    "solve_effective_master",
    "solve_lambda0_master",
    "solve_summed_dephasing",
    "exact_no_control",
    "solve_jc_amplitude_damping",
    "fidelity_t",
    "avg_fidelity_t",
    "trivial_hamiltonian",
    "energy_cost",
    "bloch_export",
    "trace_distance",
    "solver_equivalence_checks",
    "PAULI_EIGENSTATES",
]

_TRACE_TOL = 1e-10
_EIG_TOL = 1e-9


class SimulationError(RuntimeError):
    """Trajectory integration left its validity envelope."""


def _solver_eig_tol(dt: float) -> float:
    # Heun undershoot of the smallest eigenvalue converges as O(dt^2)
    return max(_EIG_TOL, 0.1 * dt * dt)


@dataclass(frozen=True)
class DensityTrajectory:
    """Interaction-picture density matrices sampled on a uniform grid.

    eig_tol widens the positivity bound for second-order solver output,
    whose eigenvalue undershoot scales with dt^2; direct constructions
    keep the strict default.
    """

    grid: np.ndarray
    rho: np.ndarray
    eig_tol: float = _EIG_TOL

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        rho = np.asarray(self.rho, dtype=complex)
        if rho.shape != (grid.size, 2, 2):
            raise ValueError("rho must have shape (len(grid), 2, 2)")
        herm = np.max(np.abs(rho - rho.conj().transpose(0, 2, 1)))
        if herm > 1e-9:
            raise ValueError(f"non-Hermitian density (dev {herm:.2e})")
        tr = np.abs(np.trace(rho, axis1=1, axis2=2) - 1.0)
        if np.max(tr) > _TRACE_TOL:
            raise ValueError(f"trace drift {np.max(tr):.2e} exceeds {_TRACE_TOL}")
        evals = np.linalg.eigvalsh(rho)
        if np.min(evals) < -self.eig_tol:
            raise ValueError(f"negative eigenvalue {np.min(evals):.2e}")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "rho", rho)

    @property
    def final(self) -> np.ndarray:
        return self.rho[-1]


def _check_density(rho0) -> np.ndarray:
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != (2, 2):
        raise ValueError("rho0 must be 2x2")
    if np.max(np.abs(rho0 - rho0.conj().T)) > 1e-10:
        raise ValueError("rho0 must be Hermitian")
    if abs(np.trace(rho0) - 1.0) > 1e-10:
        raise ValueError("rho0 must have unit trace")
    if np.min(np.linalg.eigvalsh(rho0)) < -1e-10:
        raise ValueError("rho0 must be positive semidefinite")
    return rho0


def schrodinger_us(field: ControlField) -> np.ndarray:
    """Control propagators U_S(t_n) from i dU_S/dt = H_c(t) U_S, U_S(0) = I.

    Classic RK4 with per-step re-orthonormalization; H_c linearly
    interpolated at stage midpoints.
    """
    n = field.n_steps
    dt = field.dt
    hx, hy, hz = field.wx, field.wy, field.wz
    out = np.empty((n + 1, 2, 2), dtype=complex)
    u = np.eye(2, dtype=complex)
    out[0] = u

    def ham(wx, wy, wz):
        return np.array(
            [[wz, wx - 1.0j * wy], [wx + 1.0j * wy, -wz]], dtype=complex
        )

    for i in range(n):
        h0 = ham(hx[i], hy[i], hz[i])
        h1 = ham(hx[i + 1], hy[i + 1], hz[i + 1])
        hm = 0.5 * (h0 + h1)
        k1 = -1.0j * h0 @ u
        k2 = -1.0j * hm @ (u + 0.5 * dt * k1)
        k3 = -1.0j * hm @ (u + 0.5 * dt * k2)
        k4 = -1.0j * h1 @ (u + dt * k3)
        u = u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        # Gram-Schmidt keeps the columns unitary; RK4 alone drifts O(dt^4).
        c0 = u[:, 0] / np.linalg.norm(u[:, 0])
        c1 = u[:, 1] - (c0.conj() @ u[:, 1]) * c0
        c1 = c1 / np.linalg.norm(c1)
        u = np.column_stack((c0, c1))
        out[i + 1] = u
    dev = np.max(np.abs(out[-1].conj().T @ out[-1] - ID2))
    if dev > 1e-8:
        raise SimulationError(f"propagator lost unitarity (dev {dev:.2e})")
    return out


def sampled_coupling(us: np.ndarray, coupling: np.ndarray = SIGMA_Z) -> np.ndarray:
    """Interaction-picture coupling S(t_n) = U_S(t_n)^dag C U_S(t_n)."""
    return np.einsum("nji,jk,nkl->nil", us.conj(), coupling, us)


def _grid_of(field: ControlField) -> tuple[np.ndarray, float, int]:
    return field.grid, field.dt, field.n_steps


def _memory_weights(n: int) -> np.ndarray:
    # trapezoid weights over history points 0..n
    w = np.ones(n + 1)
    w[0] = 0.5
    w[-1] = 0.5
    return w


def solve_master_dephasing(
    field: ControlField,
    p: NoiseParams,
    rho0,
    coupling: np.ndarray = SIGMA_Z,
    kernel: np.ndarray | None = None,
) -> DensityTrajectory:
    """Time-local second-order master equation with the bath kernel.

    d rho/dt = -integral_0^t dt' { C(t-t')[S(t)S(t')rho(t) - S(t')rho(t)S(t)]
    + h.c. }.  The memory integral is a trapezoid over the sampled coupling
    history; the outer stepper is Heun.  The kernel argument overrides the
    sampled C(k dt) values (used by the equivalence checks).
    """
    rho = _check_density(rho0)
    grid, dt, n = _grid_of(field)
    us = schrodinger_us(field)
    s = sampled_coupling(us, coupling)
    if kernel is None:
        kernel = np.array([bath_correlation(k * dt, p) for k in range(n + 1)])
    else:
        kernel = np.asarray(kernel, dtype=complex)
        if kernel.shape != (n + 1,):
            raise ValueError("kernel must be sampled on the grid")

    # g[m] = int_0^{t_m} C(t_m - t') S(t') dt', computable upfront because
    # the coupling history does not depend on rho.
    g = np.zeros((n + 1, 2, 2), dtype=complex)
    for m in range(1, n + 1):
        w = _memory_weights(m)
        g[m] = dt * np.einsum("m,mij->ij", w * kernel[m::-1], s[: m + 1])

    def rhs(m, r):
        sm, gm = s[m], g[m]
        t1 = sm @ gm @ r - gm @ r @ sm
        return -(t1 + t1.conj().T)

    out = np.empty((n + 1, 2, 2), dtype=complex)
    out[0] = rho
    for i in range(n):
        k1 = rhs(i, rho)
        pred = rho + dt * k1
        k2 = rhs(i + 1, pred)
        rho = rho + 0.5 * dt * (k1 + k2)
        rho = 0.5 * (rho + rho.conj().T)
        out[i + 1] = rho
    drift = np.max(np.abs(np.trace(out, axis1=1, axis2=2) - 1.0))
    if drift > 1e-6:
        raise SimulationError(f"trace drift {drift:.2e} exceeds 1e-6")
    return DensityTrajectory(grid=grid, rho=out, eig_tol=_solver_eig_tol(dt))


def solve_effective_master(
    field: ControlField, p: NoiseParams, rho0
) -> DensityTrajectory:
    """Purified-picture effective equation with the full density history.

    d rho/dt = -h(t) integral_0^t dt' h(t') [S(t), [S(t'), rho(t')]].
    The inner commutator history accumulates one trapezoid panel per step,
    so the stepping stays O(1) per step.
    """
    rho = _check_density(rho0)
    grid, dt, n = _grid_of(field)
    us = schrodinger_us(field)
    s = sampled_coupling(us)
    h = np.array([ancilla_coupling(t, p) for t in grid])

    def comm(a, b):
        return a @ b - b @ a

    out = np.empty((n + 1, 2, 2), dtype=complex)
    out[0] = rho
    # k accumulates int_0^{t_i} h(t') [S(t'), rho(t')] dt'
    k = np.zeros((2, 2), dtype=complex)
    m_prev = h[0] * comm(s[0], rho)
    for i in range(n):
        f1 = -h[i] * comm(s[i], k)
        pred = rho + dt * f1
        pred = 0.5 * (pred + pred.conj().T)
        m_pred = h[i + 1] * comm(s[i + 1], pred)
        k_pred = k + 0.5 * dt * (m_prev + m_pred)
        f2 = -h[i + 1] * comm(s[i + 1], k_pred)
        rho = rho + 0.5 * dt * (f1 + f2)
        rho = 0.5 * (rho + rho.conj().T)
        m_new = h[i + 1] * comm(s[i + 1], rho)
        k = k + 0.5 * dt * (m_prev + m_new)
        m_prev = m_new
        out[i + 1] = rho
    drift = np.max(np.abs(np.trace(out, axis1=1, axis2=2) - 1.0))
    if drift > 1e-6:
        raise SimulationError(f"trace drift {drift:.2e} exceeds 1e-6")
    return DensityTrajectory(grid=grid, rho=out, eig_tol=_solver_eig_tol(dt))


def solve_lambda0_master(
    field: ControlField, p: NoiseParams, rho0
) -> DensityTrajectory:
    """Slow-bath limit: constant kernel lambda0 and time-local density.

    d rho/dt = -lambda0 integral_0^t dt' [S(t), [S(t'), rho(t)]].
    """
    rho = _check_density(rho0)
    grid, dt, n = _grid_of(field)
    us = schrodinger_us(field)
    s = sampled_coupling(us)
    lam0 = zero_time_rate(p)

    # w[m] = int_0^{t_m} S(t') dt' accumulated by trapezoid
    w = np.zeros((n + 1, 2, 2), dtype=complex)
    for m in range(1, n + 1):
        w[m] = w[m - 1] + 0.5 * dt * (s[m - 1] + s[m])

    def rhs(m, r):
        inner = w[m] @ r - r @ w[m]
        return -lam0 * (s[m] @ inner - inner @ s[m])

    out = np.empty((n + 1, 2, 2), dtype=complex)
    out[0] = rho
    for i in range(n):
        k1 = rhs(i, rho)
        k2 = rhs(i + 1, rho + dt * k1)
        rho = rho + 0.5 * dt * (k1 + k2)
        rho = 0.5 * (rho + rho.conj().T)
        out[i + 1] = rho
    return DensityTrajectory(grid=grid, rho=out, eig_tol=_solver_eig_tol(dt))


def solve_summed_dephasing(
    field: ControlField, p: NoiseParams, rho0
) -> DensityTrajectory:
    """All-orders resummation for couplings that commute with the control.

    d rho/dt = (mu'/2 mu) [rho - S rho S], valid when S(t) is constant
    (zero or sigma_z-only control); S is pinned to sigma_z here.
    """
    rho = _check_density(rho0)
    grid, dt, n = _grid_of(field)
    if np.max(np.abs(field.wx)) > 0 or np.max(np.abs(field.wy)) > 0:
        raise ValueError("summed form needs sigma_z-commuting control")
    rate = np.empty(n + 1)
    for i, t in enumerate(grid):
        mu = coherence_factor(t, p)
        rate[i] = coherence_factor_deriv(t, p) / (2.0 * mu)

    def rhs(m, r):
        return rate[m] * (r - SIGMA_Z @ r @ SIGMA_Z)

    out = np.empty((n + 1, 2, 2), dtype=complex)
    out[0] = rho
    for i in range(n):
        k1 = rhs(i, rho)
        rm = 0.5 * (rate[i] + rate[i + 1])
        k2 = rm * ((rho + 0.5 * dt * k1) - SIGMA_Z @ (rho + 0.5 * dt * k1) @ SIGMA_Z)
        k3 = rm * ((rho + 0.5 * dt * k2) - SIGMA_Z @ (rho + 0.5 * dt * k2) @ SIGMA_Z)
        k4 = rhs(i + 1, rho + dt * k3)
        rho = rho + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        rho = 0.5 * (rho + rho.conj().T)
        out[i + 1] = rho
    return DensityTrajectory(grid=grid, rho=out)


def exact_no_control(
    p: NoiseParams, rho0, n_steps: int = 1000, t_end: float | None = None
) -> DensityTrajectory:
    """Closed-form dephasing: diagonal frozen, coherence scaled by mu(t)."""
    rho = _check_density(rho0)
    t_end = p.tau if t_end is None else t_end
    grid = np.linspace(0.0, t_end, n_steps + 1)
    mu = np.array([coherence_factor(t, p) for t in grid])
    out = np.empty((n_steps + 1, 2, 2), dtype=complex)
    out[:] = rho
    out[:, 0, 1] = rho[0, 1] * mu
    out[:, 1, 0] = rho[1, 0] * mu
    return DensityTrajectory(grid=grid, rho=out)


def solve_jc_amplitude_damping(
    field: ControlField,
    p: NoiseParams,
    rho0,
    omega0: float,
) -> DensityTrajectory:
    """Post-RWA amplitude-damping channel for permuted f-fields.

    The propagator picture uses H_eff = H_c + omega0 sigma_z and the bath
    couples through sigma_x, so this is the dephasing machinery with a
    shifted z field and a rotated coupling operator.
    """
    from .ampdamp import rwa_check

    report = rwa_check(omega0, p)
    if not report.valid:
        import warnings

        warnings.warn(report.message, stacklevel=2)
    shifted = ControlField(
        grid=field.grid, wx=field.wx, wy=field.wy, wz=field.wz + omega0
    )
    return solve_master_dephasing(shifted, p, rho0, coupling=SIGMA_X)


def fidelity_t(traj: DensityTrajectory, rho0=None) -> np.ndarray:
    """F(t) = Tr[rho(0) rho(t)] against a pure reference state."""
    ref = traj.rho[0] if rho0 is None else _check_density(rho0)
    purity = float(np.trace(ref @ ref).real)
    if purity < 1.0 - 1e-9:
        raise ValueError("fidelity reduction needs a pure reference state")
    f = np.einsum("ij,nji->n", ref, traj.rho).real
    return f


PAULI_EIGENSTATES = tuple(
    np.outer(v, v.conj())
    for v in (
        np.array([1.0, 1.0]) / math.sqrt(2.0),
        np.array([1.0, -1.0]) / math.sqrt(2.0),
        np.array([1.0, 1.0j]) / math.sqrt(2.0),
        np.array([1.0, -1.0j]) / math.sqrt(2.0),
        np.array([1.0, 0.0]),
        np.array([0.0, 1.0]),
    )
)


def avg_fidelity_t(solver, field: ControlField, p: NoiseParams, **kw) -> np.ndarray:
    """Mean survival fidelity over the six Pauli eigenstates.

    solver(field, p, rho0, **kw) -> DensityTrajectory is called once per
    eigenstate; the shared field and noise tables are immutable.
    """
    acc = None
    for rho0 in PAULI_EIGENSTATES:
        traj = solver(field, p, rho0, **kw)
        f = np.einsum("ij,nji->n", rho0, traj.rho).real
        acc = f if acc is None else acc + f
    return acc / float(len(PAULI_EIGENSTATES))


def trivial_hamiltonian(target: np.ndarray, grid: np.ndarray) -> ControlField:
    """Constant field whose bare exponential implements the target.

    H = i log(U_target) / tau on the supplied grid.
    """
    grid = np.asarray(grid, dtype=float)
    tau = grid[-1] - grid[0]
    gen = 1.0j * unitary_log(np.asarray(target, dtype=complex)) / tau
    wx = float(np.trace(gen @ SIGMA_X).real / 2.0)
    wy = float(np.trace(gen @ SIGMA_Y).real / 2.0)
    wz = float(np.trace(gen @ SIGMA_Z).real / 2.0)
    n = grid.size
    return ControlField(
        grid=grid,
        wx=np.full(n, wx),
        wy=np.full(n, wy),
        wz=np.full(n, wz),
    )


def energy_cost(field: ControlField) -> float:
    """(1/2) int Tr_norm[H_c(t)^2] dt = (1/2) int (wx^2+wy^2+wz^2) dt."""
    mag = field.wx**2 + field.wy**2 + field.wz**2
    return float(0.5 * np.trapezoid(mag, field.grid))


def bloch_export(traj: DensityTrajectory) -> np.ndarray:
    """Rows (x, y, z, purity) per grid point."""
    rho = traj.rho
    x = np.einsum("ij,nji->n", SIGMA_X, rho).real
    y = np.einsum("ij,nji->n", SIGMA_Y, rho).real
    z = np.einsum("ij,nji->n", SIGMA_Z, rho).real
    pur = np.einsum("nij,nji->n", rho, rho).real
    return np.column_stack((x, y, z, pur))


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    """(1/2) Tr |a - b| for Hermitian a, b."""
    d = np.asarray(a) - np.asarray(b)
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(d))))


def _plus_state() -> np.ndarray:
    v = np.array([1.0, 1.0]) / math.sqrt(2.0)
    return np.outer(v, v.conj())


def solver_equivalence_checks(
    p: NoiseParams, n_steps: int = 1500
) -> dict:
    """Cross-validate the three dephasing solvers in their shared regimes.

    (a) zero control: the history-kernel effective equation must agree
        with the resummed (mu'/2mu) form.
    (b) slow bath (omega_c = 0.01/tau, same temperature ratio): both
        master equations must agree with the constant-kernel form under a
        gentle sinusoidal drive.
    """
    rho0 = _plus_state()
    grid = np.linspace(0.0, p.tau, n_steps + 1)
    zero = ControlField.zeros(grid)

    eff = solve_effective_master(zero, p, rho0)
    summed = solve_summed_dephasing(zero, p, rho0)
    dev_a = max(
        trace_distance(a, b) for a, b in zip(eff.rho[:: n_steps // 20], summed.rho[:: n_steps // 20])
    )

    ratio = p.omega_T / p.omega_c
    slow = NoiseParams(
        eta=p.eta, omega_c=0.01 / p.tau, omega_T=0.01 * ratio / p.tau, tau=p.tau
    )
    drive = ControlField(
        grid=grid,
        wx=0.5 * np.sin(math.pi * grid / p.tau),
        wy=np.zeros(grid.size),
        wz=np.zeros(grid.size),
    )
    full = solve_master_dephasing(drive, slow, rho0)
    eff_b = solve_effective_master(drive, slow, rho0)
    lam = solve_lambda0_master(drive, slow, rho0)
    dev_full = max(
        trace_distance(a, b) for a, b in zip(full.rho[:: n_steps // 20], lam.rho[:: n_steps // 20])
    )
    dev_eff = max(
        trace_distance(a, b) for a, b in zip(eff_b.rho[:: n_steps // 20], lam.rho[:: n_steps // 20])
    )
    return {
        "constant_s_dev": float(dev_a),
        "constant_s_pass": bool(dev_a <= 1e-4),
        "slow_bath_dev_master": float(dev_full),
        "slow_bath_dev_effective": float(dev_eff),
        "slow_bath_pass": bool(max(dev_full, dev_eff) <= 1e-3),
    }
