"""Subalgebra projections, exponential maps, and fidelity measures.

The batch loops run 1000 random instances each; the tolerances are the
ones the solvers rely on.
"""

import cmath
import math

import numpy as np
import pytest

from cddgeo.algebra import (
    ALGEBRA_BASIS,
    ID2,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    BranchCutError,
    axis_from_target,
    from_coeffs,
    infidelity,
    penalty_weight,
    penalty_weight_inv,
    project_control,
    project_coupling,
    target_from_axis,
    to_coeffs,
    trace_norm_inner,
    uhlmann_jozsa_fidelity,
    unitary_exp,
    unitary_log,
)

N_INSTANCES = 1000


def _rng():
    return np.random.default_rng(20240817)


def _random_hermitian(rng, dim=4, scale=1.0):
    a = rng.normal(size=(dim, dim)) + 1.0j * rng.normal(size=(dim, dim))
    return scale * 0.5 * (a + a.conj().T)


def test_basis_orthonormal_under_trace_norm():
    for i, a in enumerate(ALGEBRA_BASIS):
        for j, b in enumerate(ALGEBRA_BASIS):
            inner = trace_norm_inner(a, b)
            want = 1.0 if i == j else 0.0
            assert abs(inner - want) <= 1e-15


def test_coeff_round_trip_batch():
    rng = _rng()
    coeffs = rng.normal(size=(N_INSTANCES, 6), scale=5.0)
    for c in coeffs:
        back = to_coeffs(from_coeffs(c))
        assert np.max(np.abs(back - c)) <= 1e-12


def test_projector_algebra_batch():
    # P + Q restricted to the span is the identity; P and Q are idempotent
    # and mutually annihilating
    rng = _rng()
    for _ in range(N_INSTANCES):
        m = from_coeffs(rng.normal(size=6, scale=3.0))
        pm = project_control(m)
        qm = project_coupling(m)
        assert np.max(np.abs(pm + qm - m)) <= 1e-12
        assert np.max(np.abs(project_control(pm) - pm)) <= 1e-12
        assert np.max(np.abs(project_coupling(qm) - qm)) <= 1e-12
        assert np.max(np.abs(project_control(qm))) <= 1e-12
        assert np.max(np.abs(project_coupling(pm))) <= 1e-12


def test_projection_drops_outside_components():
    rng = _rng()
    m = _random_hermitian(rng)
    sub = from_coeffs(to_coeffs(m))
    # projecting twice changes nothing: the outside part is already gone
    assert np.max(np.abs(to_coeffs(sub) - to_coeffs(m))) <= 1e-12
    pm = project_control(m)
    assert np.max(np.abs(project_control(pm) - pm)) <= 1e-12


def test_penalty_weight_inverse_round_trip_batch():
    rng = _rng()
    for _ in range(N_INSTANCES):
        q = float(rng.uniform(0.1, 1e4))
        m = from_coeffs(rng.normal(size=6, scale=4.0))
        back = penalty_weight_inv(penalty_weight(m, q), q)
        assert np.max(np.abs(back - m)) <= 1e-9
        fwd = penalty_weight(penalty_weight_inv(m, q), q)
        assert np.max(np.abs(fwd - m)) <= 1e-9


def test_penalty_weight_rejects_nonpositive_q():
    m = from_coeffs(np.ones(6))
    for q in (0.0, -2.0):
        with pytest.raises(ValueError):
            penalty_weight(m, q)
        with pytest.raises(ValueError):
            penalty_weight_inv(m, q)


def test_commutator_closure_batch():
    # i[a, b] stays inside the six-dimensional span
    rng = _rng()
    for _ in range(N_INSTANCES):
        a = from_coeffs(rng.normal(size=6))
        b = from_coeffs(rng.normal(size=6))
        comm = 1.0j * (a @ b - b @ a)
        back = from_coeffs(to_coeffs(comm))
        assert np.max(np.abs(back - comm)) <= 1e-10


def test_basis_commutator_table_closes():
    for a in ALGEBRA_BASIS:
        for b in ALGEBRA_BASIS:
            comm = 1.0j * (a @ b - b @ a)
            back = from_coeffs(to_coeffs(comm))
            assert np.max(np.abs(back - comm)) <= 1e-12


def test_exp_log_round_trip_batch():
    rng = _rng()
    for _ in range(N_INSTANCES):
        # keep eigenphases away from the principal branch cut
        herm = _random_hermitian(rng)
        radius = np.max(np.abs(np.linalg.eigvalsh(herm)))
        herm *= rng.uniform(0.05, 2.9) / radius
        skew = -1.0j * herm
        u = unitary_exp(skew)
        assert np.max(np.abs(u.conj().T @ u - np.eye(4))) <= 1e-12
        back = unitary_log(u)
        assert np.max(np.abs(back - skew)) <= 1e-9


def test_log_branch_cut_raises():
    u = np.diag([cmath.exp(1.0j * math.pi), 1.0, 1.0, 1.0])
    with pytest.raises(BranchCutError):
        unitary_log(u)
    with pytest.raises(ValueError):
        unitary_log(2.0 * np.eye(4))


def test_infidelity_phase_invariance_batch():
    rng = _rng()
    for _ in range(200):
        u = unitary_exp(-1.0j * _random_hermitian(rng, scale=0.4))
        phase = cmath.exp(1.0j * rng.uniform(-math.pi, math.pi))
        assert infidelity(u, u) <= 1e-12
        assert abs(infidelity(u, phase * u)) <= 1e-12


def test_uhlmann_jozsa_pure_state_reduction():
    rng = _rng()
    for _ in range(200):
        v = rng.normal(size=2) + 1.0j * rng.normal(size=2)
        v /= np.linalg.norm(v)
        w = rng.normal(size=2) + 1.0j * rng.normal(size=2)
        w /= np.linalg.norm(w)
        rho = np.outer(v, v.conj())
        sig = np.outer(w, w.conj())
        overlap = abs(np.vdot(v, w)) ** 2
        # near-orthogonal pairs lose half the digits to the eigenvalue sqrt
        assert abs(uhlmann_jozsa_fidelity(rho, sig) - overlap) <= 1e-7


def test_uhlmann_jozsa_rejects_unnormalized():
    with pytest.raises(ValueError):
        uhlmann_jozsa_fidelity(2.0 * np.eye(2), 0.5 * np.eye(2))


def test_axis_round_trip_batch():
    # coordinates are canonical only on the |u| < pi/2 hemisphere
    rng = _rng()
    count = 0
    while count < N_INSTANCES:
        u = rng.normal(size=3, scale=0.6)
        norm = np.linalg.norm(u)
        if norm < 1e-6 or norm > math.pi / 2.0 - 1e-3:
            continue
        count += 1
        back = axis_from_target(target_from_axis(u))
        assert np.max(np.abs(back - u)) <= 1e-9


def test_axis_canonicalizes_long_coordinates():
    # |u| beyond pi/2 maps to the short representative of the same gate
    rng = _rng()
    for _ in range(200):
        n = rng.normal(size=3)
        n /= np.linalg.norm(n)
        u = rng.uniform(math.pi / 2.0 + 1e-3, math.pi - 1e-3) * n
        target = target_from_axis(u)
        back = axis_from_target(target)
        assert np.linalg.norm(back) <= math.pi / 2.0 + 1e-12
        assert infidelity(target_from_axis(back), target) <= 1e-12


def test_axis_from_target_strips_global_phase():
    u = np.array([0.3, -0.4, 0.2])
    m = cmath.exp(0.7j) * target_from_axis(u)
    assert np.max(np.abs(axis_from_target(m) - u)) <= 1e-10


def test_axis_half_turn_maps_to_identity_coordinates():
    # exp(-i pi n.sigma) = -1: same gate as the identity up to phase
    m = target_from_axis(np.array([math.pi, 0.0, 0.0]))
    assert np.max(np.abs(axis_from_target(m))) <= 1e-12


def test_axis_zero_is_identity():
    assert np.allclose(target_from_axis(np.zeros(3)), ID2)
    assert np.allclose(axis_from_target(ID2), np.zeros(3))


def test_pauli_identities():
    assert np.allclose(SIGMA_X @ SIGMA_Y, 1.0j * SIGMA_Z)
    assert np.allclose(SIGMA_Y @ SIGMA_Z, 1.0j * SIGMA_X)
    assert np.allclose(SIGMA_Z @ SIGMA_X, 1.0j * SIGMA_Y)
    for s in (SIGMA_X, SIGMA_Y, SIGMA_Z):
        assert np.allclose(s @ s, ID2)


def test_basis_is_immutable():
    with pytest.raises(ValueError):
        ALGEBRA_BASIS[0][0, 0] = 5.0
