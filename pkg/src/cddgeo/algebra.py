"""Dense linear algebra on the purified two-qubit space.

The controls act on the qubit alone while the engineered noise couples the
qubit to an ancilla through sigma_z.  Everything generated along the way
therefore lives in the six-dimensional subalgebra spanned by

    basis[0..2] = sigma_k (x) 1,   basis[3..5] = sigma_k (x) sigma_z,

orthonormal under the normalized trace Tr_norm = Tr/dim.  Basis order on
the 4-dimensional space is |qubit, ancilla> = |00>, |01>, |10>, |11>.
"""

import cmath
import math

import numpy as np
import scipy.linalg

__all__ = [
    "SIGMA_X",
    "SIGMA_Y",
    "SIGMA_Z",
    "ID2",
    "ALGEBRA_BASIS",
    "BranchCutError",
    "trace_norm_inner",
    "from_coeffs",
    "to_coeffs",
    "project_control",
    "project_coupling",
    "penalty_weight",
    "penalty_weight_inv",
    "unitary_exp",
    "unitary_log",
    "infidelity",
    "uhlmann_jozsa_fidelity",
    "target_from_axis",
    "axis_from_target",
]

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
ID2 = np.eye(2, dtype=complex)

_PAULIS = (SIGMA_X, SIGMA_Y, SIGMA_Z)

ALGEBRA_BASIS = tuple(
    [np.kron(s, ID2) for s in _PAULIS] + [np.kron(s, SIGMA_Z) for s in _PAULIS]
)
for _m in (SIGMA_X, SIGMA_Y, SIGMA_Z, ID2) + ALGEBRA_BASIS:
    _m.setflags(write=False)


class BranchCutError(ValueError):
    """A matrix logarithm hit an eigenphase at the +/- pi branch cut."""


def trace_norm_inner(a: np.ndarray, b: np.ndarray) -> complex:
    """Normalized Hilbert-Schmidt inner product Tr(a^dag b)/dim."""
    return complex(np.trace(a.conj().T @ b)) / a.shape[0]


def from_coeffs(coeffs) -> np.ndarray:
    """Assemble sum_k coeffs[k] * basis[k] as a dense 4x4 Hermitian array."""
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape != (6,):
        raise ValueError("expected 6 real coefficients")
    out = np.zeros((4, 4), dtype=complex)
    for c, g in zip(coeffs, ALGEBRA_BASIS):
        out += c * g
    return out


def to_coeffs(mat: np.ndarray) -> np.ndarray:
    """Coefficients of the subalgebra part of a Hermitian matrix.

    coeffs[k] = Tr_norm(mat basis[k]); components of mat outside the span
    are simply dropped.
    """
    return np.array([(np.trace(mat @ g).real) / 4.0 for g in ALGEBRA_BASIS])


def project_control(mat: np.ndarray) -> np.ndarray:
    """Projection onto the qubit-local directions sigma_k (x) 1."""
    c = to_coeffs(mat)
    c[3:] = 0.0
    return from_coeffs(c)


def project_coupling(mat: np.ndarray) -> np.ndarray:
    """Projection onto the ancilla-coupling directions sigma_k (x) sigma_z."""
    c = to_coeffs(mat)
    c[:3] = 0.0
    return from_coeffs(c)


def penalty_weight(mat: np.ndarray, q: float) -> np.ndarray:
    """Control part plus coupling part scaled by 1/q."""
    if not q > 0.0:
        raise ValueError("penalty q must be > 0")
    c = to_coeffs(mat)
    c[3:] /= q
    return from_coeffs(c)


def penalty_weight_inv(mat: np.ndarray, q: float) -> np.ndarray:
    """Inverse of penalty_weight: coupling part scaled by q."""
    if not q > 0.0:
        raise ValueError("penalty q must be > 0")
    c = to_coeffs(mat)
    c[3:] *= q
    return from_coeffs(c)


def unitary_exp(skew: np.ndarray) -> np.ndarray:
    """exp(A) for skew-Hermitian A, via eigendecomposition of iA."""
    herm = 1.0j * np.asarray(skew, dtype=complex)
    w, v = np.linalg.eigh(herm)
    return (v * np.exp(-1.0j * w)) @ v.conj().T


def unitary_log(u: np.ndarray, branch_tol: float = 1e-10) -> np.ndarray:
    """Principal skew-Hermitian logarithm of a unitary matrix.

    Raises BranchCutError when an eigenphase sits within branch_tol of
    +/- pi, where the principal branch is discontinuous.
    """
    u = np.asarray(u, dtype=complex)
    t, z = scipy.linalg.schur(u, output="complex")
    ev = np.diag(t)
    if np.max(np.abs(np.abs(ev) - 1.0)) > 1e-8:
        raise ValueError("matrix is not unitary")
    phases = np.angle(ev)
    if np.any(np.abs(np.abs(phases) - math.pi) < branch_tol):
        raise BranchCutError("eigenphase at the principal branch cut")
    log = (z * (1.0j * phases)) @ z.conj().T
    return 0.5 * (log - log.conj().T)


def infidelity(u1: np.ndarray, u2: np.ndarray) -> float:
    """Phase-insensitive gate infidelity 1 - |Tr(u1^dag u2)| / dim."""
    return 1.0 - abs(np.trace(u1.conj().T @ u2)) / u1.shape[0]


def _psd_sqrt(rho: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(rho)
    if w.min() < -1e-10:
        raise ValueError(f"state has negative eigenvalue {w.min():.3e}")
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


def uhlmann_jozsa_fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """State fidelity [Tr sqrt(sqrt(rho) sigma sqrt(rho))]^2.

    Uses the conventional (unnormalized) trace; both arguments must be
    unit-trace positive semidefinite.
    """
    for m in (rho, sigma):
        if abs(np.trace(m).real - 1.0) > 1e-8:
            raise ValueError("state trace must be 1")
    s = _psd_sqrt(rho)
    w = np.linalg.eigvalsh(s @ sigma @ s)
    if w.min() < -1e-10:
        raise ValueError(f"inner matrix has negative eigenvalue {w.min():.3e}")
    return float(np.sum(np.sqrt(np.clip(w, 0.0, None))) ** 2)


def target_from_axis(u) -> np.ndarray:
    """Axis-angle to SU(2): exp(-i u . sigma) = cos|u| - i sin|u| (u_hat . sigma)."""
    u = np.asarray(u, dtype=float)
    if u.shape != (3,):
        raise ValueError("expected a 3-vector")
    theta = float(np.linalg.norm(u))
    if theta == 0.0:
        return ID2.copy()
    n = u / theta
    gen = n[0] * SIGMA_X + n[1] * SIGMA_Y + n[2] * SIGMA_Z
    return math.cos(theta) * ID2 - 1.0j * math.sin(theta) * gen


def axis_from_target(u2: np.ndarray) -> np.ndarray:
    """Inverse of target_from_axis up to global phase, |result| in [0, pi).

    Strips the determinant phase first, so any 2x2 unitary is accepted;
    raises BranchCutError for rotations by exactly pi (axis undefined
    at that antipode).
    """
    u2 = np.asarray(u2, dtype=complex)
    su = u2 / cmath.sqrt(np.linalg.det(u2))
    c = complex(np.trace(su)) / 2.0
    # Remaining sign freedom from the sqrt branch: pick Re Tr >= 0.
    if c.real < 0.0:
        su = -su
        c = -c
    theta = math.acos(min(1.0, max(-1.0, c.real)))
    if abs(theta - math.pi) < 1e-10 or abs(theta) < 1e-14:
        if abs(theta) < 1e-14:
            return np.zeros(3)
        raise BranchCutError("rotation angle at pi, axis ambiguous")
    v = np.array(
        [
            (1.0j * np.trace(su @ s) / 2.0).real
            for s in (SIGMA_X, SIGMA_Y, SIGMA_Z)
        ]
    )
    n = v / np.linalg.norm(v)
    return theta * n
