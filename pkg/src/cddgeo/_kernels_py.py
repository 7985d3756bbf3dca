"""Pure-Python fallback for the hot propagation kernel.

The costate flow never leaves the subalgebra spanned by sigma_k (x) 1 and
sigma_k (x) sigma_z, which splits into two commuting su(2) blocks (ancilla
sigma_z eigenvalue +1 / -1).  Each block unitary is held as a real
quaternion (w, x, y, z) meaning w*1 - i(x sx + y sy + z sz), so one RK4
step is a handful of float operations and re-unitarization is a vector
renormalization.  The Cython twin implements the identical arithmetic.
"""

from math import sqrt

__all__ = ["geodesic_rk4", "BACKEND"]

BACKEND = "pure"


def _deriv(hv, q_inv, apx, apy, apz, amx, amy, amz, s):
    p0, p1, p2, p3, m0, m1, m2, m3 = s

    # Transported costate per block: b = R(quat) a with
    # b = (w^2-|v|^2) a + 2 w (v x a) + 2 (v.a) v.
    ww = p0 * p0 - (p1 * p1 + p2 * p2 + p3 * p3)
    dot = p1 * apx + p2 * apy + p3 * apz
    bpx = ww * apx + 2.0 * (p0 * (p2 * apz - p3 * apy) + dot * p1)
    bpy = ww * apy + 2.0 * (p0 * (p3 * apx - p1 * apz) + dot * p2)
    bpz = ww * apz + 2.0 * (p0 * (p1 * apy - p2 * apx) + dot * p3)

    ww = m0 * m0 - (m1 * m1 + m2 * m2 + m3 * m3)
    dot = m1 * amx + m2 * amy + m3 * amz
    bmx = ww * amx + 2.0 * (m0 * (m2 * amz - m3 * amy) + dot * m1)
    bmy = ww * amy + 2.0 * (m0 * (m3 * amx - m1 * amz) + dot * m2)
    bmz = ww * amz + 2.0 * (m0 * (m1 * amy - m2 * amx) + dot * m3)

    # Generator coefficients: control part kept, coupling part scaled by
    # 1/q (q_inv = 0 drops it), drift -h on the z coupling component.
    cx = 0.5 * (bpx + bmx)
    cy = 0.5 * (bpy + bmy)
    cz = 0.5 * (bpz + bmz)
    gx = q_inv * 0.5 * (bpx - bmx)
    gy = q_inv * 0.5 * (bpy - bmy)
    gz = q_inv * 0.5 * (bpz - bmz) - hv

    wpx = cx + gx
    wpy = cy + gy
    wpz = cz + gz
    wmx = cx - gx
    wmy = cy - gy
    wmz = cz - gz

    # dU = -i (w.sigma) U  ==>  (v0', v') = (-w.v, v0 w + w x v).
    return (
        -(wpx * p1 + wpy * p2 + wpz * p3),
        p0 * wpx + (wpy * p3 - wpz * p2),
        p0 * wpy + (wpz * p1 - wpx * p3),
        p0 * wpz + (wpx * p2 - wpy * p1),
        -(wmx * m1 + wmy * m2 + wmz * m3),
        m0 * wmx + (wmy * m3 - wmz * m2),
        m0 * wmy + (wmz * m1 - wmx * m3),
        m0 * wmz + (wmx * m2 - wmy * m1),
    )


def geodesic_rk4(lam, q_inv, h_nodes, dt, n_steps, store_every, qp_out, qm_out):
    """RK4 costate flow; returns the worst unitarity drift before correction.

    lam: 6 costate coefficients at t = 0.  q_inv: 1/q penalty weight (0 for
    the sub-Riemannian limit).  h_nodes: drift coupling at the n_steps+1
    grid nodes (midpoints are linearly interpolated).  If store_every > 0
    the block quaternions are written to qp_out/qm_out at every
    store_every-th node (n_steps must divide evenly); store_every == 0
    stores only the final state in row 0.
    """
    lam = list(map(float, lam))
    hs = list(map(float, h_nodes))
    q_inv = float(q_inv)
    dt = float(dt)

    apx = lam[0] + lam[3]
    apy = lam[1] + lam[4]
    apz = lam[2] + lam[5]
    amx = lam[0] - lam[3]
    amy = lam[1] - lam[4]
    amz = lam[2] - lam[5]

    s = (1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0)
    row = 0
    if store_every > 0:
        qp_out[0, 0], qp_out[0, 1], qp_out[0, 2], qp_out[0, 3] = s[0:4]
        qm_out[0, 0], qm_out[0, 1], qm_out[0, 2], qm_out[0, 3] = s[4:8]
        row = 1

    half = 0.5 * dt
    sixth = dt / 6.0
    drift = 0.0

    for i in range(n_steps):
        h0 = hs[i]
        h1 = hs[i + 1]
        hm = 0.5 * (h0 + h1)

        k1 = _deriv(h0, q_inv, apx, apy, apz, amx, amy, amz, s)
        s2 = tuple(s[j] + half * k1[j] for j in range(8))
        k2 = _deriv(hm, q_inv, apx, apy, apz, amx, amy, amz, s2)
        s3 = tuple(s[j] + half * k2[j] for j in range(8))
        k3 = _deriv(hm, q_inv, apx, apy, apz, amx, amy, amz, s3)
        s4 = tuple(s[j] + dt * k3[j] for j in range(8))
        k4 = _deriv(h1, q_inv, apx, apy, apz, amx, amy, amz, s4)

        s = tuple(
            s[j] + sixth * (k1[j] + 2.0 * (k2[j] + k3[j]) + k4[j])
            for j in range(8)
        )

        np2 = s[0] * s[0] + s[1] * s[1] + s[2] * s[2] + s[3] * s[3]
        nm2 = s[4] * s[4] + s[5] * s[5] + s[6] * s[6] + s[7] * s[7]
        d = abs(np2 - 1.0)
        if d > drift:
            drift = d
        d = abs(nm2 - 1.0)
        if d > drift:
            drift = d
        fp = 1.0 / sqrt(np2)
        fm = 1.0 / sqrt(nm2)
        s = (
            s[0] * fp,
            s[1] * fp,
            s[2] * fp,
            s[3] * fp,
            s[4] * fm,
            s[5] * fm,
            s[6] * fm,
            s[7] * fm,
        )

        if store_every > 0 and (i + 1) % store_every == 0:
            qp_out[row, 0], qp_out[row, 1], qp_out[row, 2], qp_out[row, 3] = s[0:4]
            qm_out[row, 0], qm_out[row, 1], qm_out[row, 2], qm_out[row, 3] = s[4:8]
            row += 1

    if store_every == 0:
        qp_out[0, 0], qp_out[0, 1], qp_out[0, 2], qp_out[0, 3] = s[0:4]
        qm_out[0, 0], qm_out[0, 1], qm_out[0, 2], qm_out[0, 3] = s[4:8]

    return drift
