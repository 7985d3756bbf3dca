# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled twin of _kernels_py: RK4 costate flow on two su(2) block
quaternions.  Arithmetic mirrors the pure version operation for operation."""

from libc.math cimport fabs, sqrt

BACKEND = "compiled"


cdef inline void _deriv(double hv, double q_inv,
                        double apx, double apy, double apz,
                        double amx, double amy, double amz,
                        double* s, double* d) noexcept nogil:
    cdef double p0 = s[0], p1 = s[1], p2 = s[2], p3 = s[3]
    cdef double m0 = s[4], m1 = s[5], m2 = s[6], m3 = s[7]
    cdef double ww, dot
    cdef double bpx, bpy, bpz, bmx, bmy, bmz
    cdef double cx, cy, cz, gx, gy, gz
    cdef double wpx, wpy, wpz, wmx, wmy, wmz

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

    d[0] = -(wpx * p1 + wpy * p2 + wpz * p3)
    d[1] = p0 * wpx + (wpy * p3 - wpz * p2)
    d[2] = p0 * wpy + (wpz * p1 - wpx * p3)
    d[3] = p0 * wpz + (wpx * p2 - wpy * p1)
    d[4] = -(wmx * m1 + wmy * m2 + wmz * m3)
    d[5] = m0 * wmx + (wmy * m3 - wmz * m2)
    d[6] = m0 * wmy + (wmz * m1 - wmx * m3)
    d[7] = m0 * wmz + (wmx * m2 - wmy * m1)


def geodesic_rk4(const double[::1] lam, double q_inv, const double[::1] h_nodes,
                 double dt, int n_steps, int store_every,
                 double[:, ::1] qp_out, double[:, ::1] qm_out):
    """Same contract as the pure-Python geodesic_rk4."""
    cdef double apx = lam[0] + lam[3]
    cdef double apy = lam[1] + lam[4]
    cdef double apz = lam[2] + lam[5]
    cdef double amx = lam[0] - lam[3]
    cdef double amy = lam[1] - lam[4]
    cdef double amz = lam[2] - lam[5]

    cdef double s[8]
    cdef double s2[8]
    cdef double k1[8]
    cdef double k2[8]
    cdef double k3[8]
    cdef double k4[8]
    cdef int i, j, row
    cdef double h0, h1, hm, np2, nm2, dd, fp, fm
    cdef double half = 0.5 * dt
    cdef double sixth = dt / 6.0
    cdef double drift = 0.0

    s[0] = 1.0
    s[4] = 1.0
    for j in range(1, 4):
        s[j] = 0.0
        s[j + 4] = 0.0

    row = 0
    if store_every > 0:
        for j in range(4):
            qp_out[0, j] = s[j]
            qm_out[0, j] = s[j + 4]
        row = 1

    with nogil:
        for i in range(n_steps):
            h0 = h_nodes[i]
            h1 = h_nodes[i + 1]
            hm = 0.5 * (h0 + h1)

            _deriv(h0, q_inv, apx, apy, apz, amx, amy, amz, s, k1)
            for j in range(8):
                s2[j] = s[j] + half * k1[j]
            _deriv(hm, q_inv, apx, apy, apz, amx, amy, amz, s2, k2)
            for j in range(8):
                s2[j] = s[j] + half * k2[j]
            _deriv(hm, q_inv, apx, apy, apz, amx, amy, amz, s2, k3)
            for j in range(8):
                s2[j] = s[j] + dt * k3[j]
            _deriv(h1, q_inv, apx, apy, apz, amx, amy, amz, s2, k4)

            for j in range(8):
                s[j] = s[j] + sixth * (k1[j] + 2.0 * (k2[j] + k3[j]) + k4[j])

            np2 = s[0] * s[0] + s[1] * s[1] + s[2] * s[2] + s[3] * s[3]
            nm2 = s[4] * s[4] + s[5] * s[5] + s[6] * s[6] + s[7] * s[7]
            dd = fabs(np2 - 1.0)
            if dd > drift:
                drift = dd
            dd = fabs(nm2 - 1.0)
            if dd > drift:
                drift = dd
            fp = 1.0 / sqrt(np2)
            fm = 1.0 / sqrt(nm2)
            for j in range(4):
                s[j] = s[j] * fp
                s[j + 4] = s[j + 4] * fm

            if store_every > 0 and (i + 1) % store_every == 0:
                for j in range(4):
                    qp_out[row, j] = s[j]
                    qm_out[row, j] = s[j + 4]
                row += 1

    if store_every == 0:
        for j in range(4):
            qp_out[0, j] = s[j]
            qm_out[0, j] = s[j + 4]

    return drift
