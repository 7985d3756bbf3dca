"""Geodesic boundary-value solver on the purified unitary group.

A costate Lambda(0) in the six-dimensional subalgebra is flowed by

    i dU/dt = { H_D(t) + W_q[U Lambda(0) U^dag] } U,      hbar = 1,

where H_D = -h(t) sigma_z (x) sigma_z is the drift and W_q keeps the
control part of its argument and scales the coupling part by 1/q
(q = inf drops it: the sub-Riemannian limit).  Solving a gate means
finding Lambda(0) such that U(tau) hits target (x) 1.  The solver chain
is: seed costate -> quasi-Newton infidelity minimization -> Newton
shooting -> penalty homotopy that multiplies q upward in small jumps and
re-seeds each solve from the previous one.

Internally the flow runs on two su(2) block quaternions (see _kernels);
every public object speaks dense 4x4 matrices.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.optimize

from ._kernels import geodesic_rk4
from .algebra import axis_from_target, infidelity, target_from_axis
from .fields import ControlField
from .noise import NoiseParams, ancilla_coupling, zero_time_rate

__all__ = [
    "DEFAULT_GRID_N",
    "PropagationError",
    "HomotopySchedule",
    "GeodesicSolution",
    "MinimizeResult",
    "ShootResult",
    "HomotopyResult",
    "propagate_penalized",
    "propagate_sub_riemannian",
    "seed_costate",
    "minimize_infidelity",
    "shoot_newton",
    "solve_homotopy",
    "extract_control",
    "penalized_energy",
]

DEFAULT_GRID_N = 1000


class PropagationError(RuntimeError):
    """Unitarity drift exceeded tolerance; the step count is too small."""


# ---------------------------------------------------------------------------
# Quaternion plumbing.  A block unitary w*1 - i(x sx + y sy + z sz) is the
# real 4-vector (w, x, y, z); the two blocks live on the ancilla sigma_z
# eigenspaces (+1 -> indices {0, 2}, -1 -> indices {1, 3}).


def _quat_from_su2(u2: np.ndarray) -> np.ndarray:
    u2 = np.asarray(u2, dtype=complex)
    if u2.shape != (2, 2):
        raise ValueError("target must be a 2x2 matrix")
    if np.max(np.abs(u2.conj().T @ u2 - np.eye(2))) > 1e-8:
        raise ValueError("target must be unitary")
    det = complex(u2[0, 0] * u2[1, 1] - u2[0, 1] * u2[1, 0])
    su = u2 / complex(det) ** 0.5
    q = np.array(
        [
            (su[0, 0] + su[1, 1]).real / 2.0,
            (1.0j * (su[0, 1] + su[1, 0])).real / 2.0,
            (su[1, 0] - su[0, 1]).real / 2.0,
            (1.0j * (su[0, 0] - su[1, 1])).real / 2.0,
        ]
    )
    return q / np.linalg.norm(q)


def _su2_from_quat(q) -> np.ndarray:
    w, x, y, z = q
    return np.array(
        [[w - 1.0j * z, -y - 1.0j * x], [y - 1.0j * x, w + 1.0j * z]],
        dtype=complex,
    )


def _su4_from_quats(qp, qm) -> np.ndarray:
    up = _su2_from_quat(qp)
    um = _su2_from_quat(qm)
    out = np.zeros((4, 4), dtype=complex)
    out[np.ix_((0, 2), (0, 2))] = up
    out[np.ix_((1, 3), (1, 3))] = um
    return out


def _quat_mul(a, b):
    # Composition matching matrix product: (a0 - i a.s)(b0 - i b.s).
    a0, a1, a2, a3 = a
    b0, b1, b2, b3 = b
    return (
        a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
        a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2,
        a0 * b2 + a2 * b0 + a3 * b1 - a1 * b3,
        a0 * b3 + a3 * b0 + a1 * b2 - a2 * b1,
    )


def _rotate_many(quats: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Apply U (a.sigma) U^dag for a batch of quaternions; returns (n, 3)."""
    w = quats[:, 0:1]
    v = quats[:, 1:4]
    ww = w * w - np.sum(v * v, axis=1, keepdims=True)
    dot = v @ a
    cross = np.cross(v, np.broadcast_to(a, v.shape))
    return ww * a + 2.0 * (w * cross + dot[:, None] * v)


@lru_cache(maxsize=64)
def _h_nodes(p: NoiseParams, n_steps: int, t_end: float) -> np.ndarray:
    grid = np.linspace(0.0, t_end, n_steps + 1)
    h = np.array([ancilla_coupling(t, p) for t in grid])
    h.setflags(write=False)
    return h


def _q_inv(q: float) -> float:
    if q == math.inf:
        return 0.0
    if not q > 0.0:
        raise ValueError("penalty q must be > 0 or inf")
    return 1.0 / q


def _final_quats(lam, q_inv, h, dt, n_steps):
    qp = np.empty((1, 4))
    qm = np.empty((1, 4))
    geodesic_rk4(lam, q_inv, h, dt, n_steps, 0, qp, qm)
    return qp[0], qm[0]


def _block_infidelity(qp, qm, tq) -> float:
    return 1.0 - 0.5 * abs(float(qp @ tq) + float(qm @ tq))


# ---------------------------------------------------------------------------
# Public propagation.


@dataclass(frozen=True)
class GeodesicSolution:
    """Flow of one costate, sampled on the grid."""

    costate0: np.ndarray
    q: float
    grid: np.ndarray
    quats_plus: np.ndarray = field(repr=False)
    quats_minus: np.ndarray = field(repr=False)
    target: np.ndarray | None = None
    achieved_infidelity: float | None = None
    unitarity_drift: float = 0.0

    @property
    def trajectory(self) -> np.ndarray:
        """Dense (n_nodes, 4, 4) unitaries."""
        n = self.grid.size
        out = np.zeros((n, 4, 4), dtype=complex)
        for i in range(n):
            out[i] = _su4_from_quats(self.quats_plus[i], self.quats_minus[i])
        return out

    @property
    def final_unitary(self) -> np.ndarray:
        return _su4_from_quats(self.quats_plus[-1], self.quats_minus[-1])

    def to_json_dict(self, q_max: float | None = None) -> dict:
        ctrl = extract_control(self)
        if q_max is None and self.q != math.inf:
            q_max = self.q
        u = None
        if self.target is not None:
            try:
                u = [float(x) for x in axis_from_target(self.target)]
            except ValueError:
                u = None
        return {
            "u": u,
            "lambda0": [float(x) for x in self.costate0],
            "q_max": None if q_max is None else float(q_max),
            "infidelity": None
            if self.achieved_infidelity is None
            else float(self.achieved_infidelity),
            "grid_n": int(self.grid.size - 1),
            "control": {
                "t": ctrl.grid.tolist(),
                "wx": ctrl.wx.tolist(),
                "wy": ctrl.wy.tolist(),
                "wz": ctrl.wz.tolist(),
            },
        }


def propagate_penalized(
    costate0,
    q: float,
    p: NoiseParams,
    n_steps: int = DEFAULT_GRID_N,
    target: np.ndarray | None = None,
    drift_tol: float = 1e-8,
) -> GeodesicSolution:
    """Integrate the penalized flow and sample it at every grid node."""
    lam = np.ascontiguousarray(costate0, dtype=float)
    if lam.shape != (6,):
        raise ValueError("costate must have 6 components")
    if n_steps < 100:
        raise ValueError("n_steps must be >= 100")
    qi = _q_inv(q)
    h = _h_nodes(p, n_steps, p.tau)
    dt = p.tau / n_steps
    qp = np.empty((n_steps + 1, 4))
    qm = np.empty((n_steps + 1, 4))
    drift = geodesic_rk4(lam, qi, h, dt, n_steps, 1, qp, qm)
    if drift > drift_tol:
        raise PropagationError(
            f"unitarity drift {drift:.2e} above {drift_tol:.0e}; raise n_steps"
        )
    inf = None
    if target is not None:
        tq = _quat_from_su2(target)
        inf = _block_infidelity(qp[-1], qm[-1], tq)
    return GeodesicSolution(
        costate0=lam,
        q=q,
        grid=np.linspace(0.0, p.tau, n_steps + 1),
        quats_plus=qp,
        quats_minus=qm,
        target=None if target is None else np.asarray(target, dtype=complex),
        achieved_infidelity=inf,
        unitarity_drift=drift,
    )


def propagate_sub_riemannian(
    costate0,
    p: NoiseParams,
    n_steps: int = DEFAULT_GRID_N,
    target: np.ndarray | None = None,
    drift_tol: float = 1e-8,
) -> GeodesicSolution:
    """Penalty-free limit: the coupling part of the costate is dropped
    from the generator (it still feeds back through the transport)."""
    return propagate_penalized(
        costate0, math.inf, p, n_steps=n_steps, target=target, drift_tol=drift_tol
    )


def _transported_costate(sol: GeodesicSolution):
    """Control and coupling triplets of U Lambda(0) U^dag on the grid."""
    lam = sol.costate0
    a_plus = lam[:3] + lam[3:]
    a_minus = lam[:3] - lam[3:]
    b_plus = _rotate_many(sol.quats_plus, a_plus)
    b_minus = _rotate_many(sol.quats_minus, a_minus)
    return 0.5 * (b_plus + b_minus), 0.5 * (b_plus - b_minus)


def extract_control(sol: GeodesicSolution) -> ControlField:
    """Control components: qubit-local part of the transported costate."""
    w, _ = _transported_costate(sol)
    return ControlField(sol.grid, w[:, 0], w[:, 1], w[:, 2])


def penalized_energy(sol: GeodesicSolution) -> float:
    """Cost functional of the flow that produced the solution.

    The metric charges |control|^2 plus |coupling|^2 / q; at q = inf only
    the control part survives and this equals the control-field energy.
    """
    w, v = _transported_costate(sol)
    dens = np.einsum("ij,ij->i", w, w)
    if not math.isinf(sol.q):
        dens = dens + np.einsum("ij,ij->i", v, v) / sol.q
    return 0.5 * float(np.trapezoid(dens, sol.grid))


# ---------------------------------------------------------------------------
# Boundary-value machinery.


def seed_costate(target: np.ndarray, q: float, p: NoiseParams) -> np.ndarray:
    """Canonical starting costate for a penalized solve.

    Control part from the constant generator of the target (principal
    log), coupling part q*h(0) on the z component so the weighted
    generator cancels the drift at t = 0.  A target with an eigenphase on
    the branch cut is nudged by a 1e-8 global phase first.
    """
    if q == math.inf or not q > 0.0:
        raise ValueError("seeding needs a finite penalty q > 0")
    tq = _quat_from_su2(target)
    # Principal log of the SU(2) representative: theta in [0, pi].
    vec_norm = float(np.linalg.norm(tq[1:]))
    theta = math.atan2(vec_norm, float(tq[0]))
    if vec_norm < 1e-12:
        u = np.zeros(3)
        if theta > math.pi / 2:
            # Target is -1: same nudge as a branch-cut eigenphase.
            rotated = np.asarray(target, dtype=complex) * math.e ** (-1e-8j)
            return seed_costate(rotated, q, p)
    else:
        u = theta * tq[1:] / vec_norm
    lam = np.zeros(6)
    lam[:3] = u / p.tau
    lam[5] = q * ancilla_coupling(0.0, p)
    return lam


@dataclass(frozen=True)
class MinimizeResult:
    costate: np.ndarray
    infidelity: float
    n_evals: int
    converged: bool
    stagnated: bool = False


class _EarlyStop(Exception):
    pass


class _Objective:
    """Tracks the best costate seen; stops early below stop_tol or after a
    long stagnation (no improvement > 1e-12 for stall_evals evaluations)."""

    def __init__(self, fn, stop_tol, stall_evals=600):
        self.fn = fn
        self.stop_tol = stop_tol
        self.stall_evals = stall_evals
        self.best_val = math.inf
        self.best_x = None
        self.n_evals = 0
        self.since_improved = 0
        self.stagnated = False

    def __call__(self, x):
        val = self.fn(x)
        self.n_evals += 1
        if val < self.best_val - 1e-12:
            self.since_improved = 0
        else:
            self.since_improved += 1
        if val < self.best_val:
            self.best_val = val
            self.best_x = np.array(x, dtype=float)
        if self.best_val < self.stop_tol:
            raise _EarlyStop
        if self.since_improved > self.stall_evals:
            self.stagnated = True
            raise _EarlyStop
        return val


def minimize_infidelity(
    seed,
    target: np.ndarray,
    q: float,
    p: NoiseParams,
    tol: float = 1e-4,
    n_steps: int = DEFAULT_GRID_N,
    max_evals: int = 2000,
    stop_tol: float | None = None,
) -> MinimizeResult:
    """Quasi-Newton descent of the endpoint infidelity over costates.

    Never returns anything worse than the seed.  Falls back to a simplex
    search when the gradient-based run fails to improve.
    """
    lam0 = np.ascontiguousarray(seed, dtype=float)
    tq = _quat_from_su2(target)
    qi = _q_inv(q)
    h = _h_nodes(p, n_steps, p.tau)
    dt = p.tau / n_steps
    stop = tol if stop_tol is None else stop_tol

    def raw(x):
        x = np.ascontiguousarray(x, dtype=float)
        fp, fm = _final_quats(x, qi, h, dt, n_steps)
        return _block_infidelity(fp, fm, tq)

    obj = _Objective(raw, stop)
    seed_val = math.inf
    try:
        seed_val = obj(lam0)
        scipy.optimize.minimize(
            obj,
            lam0,
            method="L-BFGS-B",
            options={"maxfun": max_evals, "ftol": 1e-15, "gtol": 1e-12},
        )
    except _EarlyStop:
        pass
    gradient_failed = (
        not math.isfinite(obj.best_val) or obj.best_val >= seed_val - 1e-15
    )
    if gradient_failed and not obj.best_val < stop:
        start = lam0 if obj.best_x is None else obj.best_x
        try:
            scipy.optimize.minimize(
                obj,
                start,
                method="Nelder-Mead",
                options={"maxfev": max_evals, "fatol": 1e-14, "xatol": 1e-10},
            )
        except _EarlyStop:
            pass
    return MinimizeResult(
        costate=obj.best_x,
        infidelity=obj.best_val,
        n_evals=obj.n_evals,
        converged=obj.best_val <= tol,
        stagnated=obj.stagnated,
    )


@dataclass(frozen=True)
class ShootResult:
    costate: np.ndarray
    infidelity: float
    residual_norm: float
    converged: bool
    diverged: bool
    n_iters: int


def _residual(qp, qm, tq):
    """Six-component defect: subalgebra coordinates of i log(error unitary),
    with the target sign chosen on the double cover to match the state."""
    s = 1.0 if (float(qp @ tq) + float(qm @ tq)) >= 0.0 else -1.0
    t_al = (s * tq[0], s * tq[1], s * tq[2], s * tq[3])
    out = np.empty(6)
    for idx, blk in enumerate((qp, qm)):
        e = _quat_mul((t_al[0], -t_al[1], -t_al[2], -t_al[3]), tuple(blk))
        vec = np.array(e[1:])
        vn = float(np.linalg.norm(vec))
        theta = math.atan2(vn, e[0])
        g = (theta / vn) * vec if vn > 1e-300 else np.zeros(3)
        if idx == 0:
            gp = g
        else:
            gm = g
    out[:3] = 0.5 * (gp + gm)
    out[3:] = 0.5 * (gp - gm)
    return out


def shoot_newton(
    costate,
    target: np.ndarray,
    q: float,
    p: NoiseParams,
    n_steps: int = DEFAULT_GRID_N,
    max_iters: int = 12,
    fd_step: float = 1e-6,
    residual_tol: float = 1e-9,
) -> ShootResult:
    """Newton iteration on the endpoint defect with a forward-difference
    Jacobian.  A step is kept only if it lowers the infidelity; the first
    rejected step ends the iteration (diverged when nothing was kept)."""
    tq = _quat_from_su2(target)
    qi = _q_inv(q)
    h = _h_nodes(p, n_steps, p.tau)
    dt = p.tau / n_steps

    def shot(x):
        fp, fm = _final_quats(np.ascontiguousarray(x, dtype=float), qi, h, dt, n_steps)
        return fp, fm

    lam = np.array(costate, dtype=float)
    fp, fm = shot(lam)
    best_inf = _block_infidelity(fp, fm, tq)
    res = _residual(fp, fm, tq)
    n_done = 0
    diverged = False
    while n_done < max_iters and np.linalg.norm(res) > residual_tol:
        jac = np.empty((6, 6))
        for k in range(6):
            pert = lam.copy()
            pert[k] += fd_step
            jp, jm = shot(pert)
            jac[:, k] = (_residual(jp, jm, tq) - res) / fd_step
        try:
            step = np.linalg.solve(jac, -res)
        except np.linalg.LinAlgError:
            step, *_ = np.linalg.lstsq(jac, -res, rcond=None)
        cand = lam + step
        cp, cm = shot(cand)
        cand_inf = _block_infidelity(cp, cm, tq)
        n_done += 1
        if not (cand_inf < best_inf):
            diverged = n_done == 1
            break
        lam, best_inf, res = cand, cand_inf, _residual(cp, cm, tq)
    return ShootResult(
        costate=lam,
        infidelity=best_inf,
        residual_norm=float(np.linalg.norm(res)),
        converged=float(np.linalg.norm(res)) <= residual_tol,
        diverged=diverged,
        n_iters=n_done,
    )


# ---------------------------------------------------------------------------
# Penalty homotopy.


@dataclass(frozen=True)
class HomotopySchedule:
    """Geometric ramp of the penalty from q_start to q_stop in n_jumps."""

    q_start: float = 10.0
    q_stop: float = 2000.0
    n_jumps: int = 100

    def __post_init__(self):
        if not 0.0 < self.q_start < self.q_stop:
            raise ValueError("need 0 < q_start < q_stop")
        if self.n_jumps < 1:
            raise ValueError("n_jumps must be >= 1")

    @property
    def chi(self) -> float:
        """log10 of the per-jump multiplier."""
        return math.log10(self.q_stop / self.q_start) / self.n_jumps


@dataclass(frozen=True)
class HomotopyResult:
    solution: GeodesicSolution
    costate: np.ndarray
    infidelity: float
    q_reached: float
    converged: bool
    relaxed: bool
    n_retries: int
    history: list = field(repr=False, default_factory=list)


def _refine(lam, target, q, p, tol, n_steps, max_evals, stop_tol=None):
    stop = tol if stop_tol is None else stop_tol
    res = minimize_infidelity(
        lam, target, q, p, tol=tol, n_steps=n_steps, max_evals=max_evals,
        stop_tol=stop,
    )
    best_lam, best_inf = res.costate, res.infidelity
    if best_inf > stop:
        sh = shoot_newton(best_lam, target, q, p, n_steps=n_steps)
        if sh.infidelity < best_inf:
            best_lam, best_inf = sh.costate, sh.infidelity
    return best_lam, best_inf


def solve_homotopy(
    target: np.ndarray,
    p: NoiseParams,
    schedule: HomotopySchedule | None = None,
    tol: float = 1e-4,
    tol_relaxed: float = 5e-3,
    n_steps: int = DEFAULT_GRID_N,
    max_evals_per_jump: int = 500,
    final_max_evals: int = 4000,
    costate0: np.ndarray | None = None,
) -> HomotopyResult:
    """Ramp the penalty upward, re-seeding each solve from the last, then
    take the penalty-free limit.

    Each jump must stay below the running tolerance; a failed jump is
    retried with the per-jump exponent chi halved (up to three times),
    after which the best attempt is kept and the tolerance is relaxed for
    the remainder of the ramp.  Never raises on non-convergence: the
    result carries the best solution found and a converged flag.
    """
    sched = schedule or HomotopySchedule()
    q = sched.q_start
    if costate0 is None:
        lam = seed_costate(target, q, p)
    else:
        lam = np.asarray(costate0, dtype=float)
        if lam.shape != (6,):
            raise ValueError("costate0 must have shape (6,)")
    cur_tol = tol
    history = []
    n_retries = 0

    lam, inf = _refine(lam, target, q, p, cur_tol, n_steps, max_evals_per_jump)
    history.append((q, inf))

    for _ in range(sched.n_jumps):
        if q >= sched.q_stop * (1.0 - 1e-12):
            break
        attempts = []
        chi = sched.chi
        for _retry in range(4):
            q_next = min(q * 10.0**chi, sched.q_stop)
            cand_lam, cand_inf = _refine(
                lam, target, q_next, p, cur_tol, n_steps, max_evals_per_jump
            )
            attempts.append((cand_inf, q_next, cand_lam))
            if cand_inf <= cur_tol:
                break
            chi *= 0.5
            n_retries += 1
        best = min(attempts, key=lambda a: a[0])
        if best[0] > cur_tol:
            cur_tol = tol_relaxed
        q, lam = best[1], best[2]
        history.append((q, best[0]))

    lam_sub, inf_sub = _refine(
        lam, target, math.inf, p, tol_relaxed, n_steps, final_max_evals,
        stop_tol=1e-8,
    )
    sol = propagate_sub_riemannian(lam_sub, p, n_steps=n_steps, target=target)
    return HomotopyResult(
        solution=sol,
        costate=lam_sub,
        infidelity=inf_sub,
        q_reached=q,
        converged=inf_sub <= tol_relaxed,
        relaxed=cur_tol != tol,
        n_retries=n_retries,
        history=history,
    )
