# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled RK4 loop for polynomial vector fields.

Must stay operation-for-operation identical to ``_rk4_py.integrate_kernel``.
"""

from libc.math cimport sqrt, atan2, fabs, floor, isfinite, pow, M_PI
from libc.stdlib cimport malloc, free
from libc.stdint cimport int64_t


cdef inline void _field(const int64_t[:, ::1] exps, const double[::1] coefs,
                        const int64_t[::1] comp, int n, int maxe,
                        const double* x, double* pw, double* out) noexcept nogil:
    cdef int i, e, k
    cdef Py_ssize_t t
    cdef double p, v
    for i in range(n):
        p = 1.0
        for e in range(maxe + 1):
            pw[i * (maxe + 1) + e] = p
            p = p * x[i]
        out[i] = 0.0
    for t in range(coefs.shape[0]):
        v = coefs[t]
        for i in range(n):
            v = v * pw[i * (maxe + 1) + exps[t, i]]
        k = <int>comp[t]
        out[k] = out[k] + v


cdef inline double _norm(const double* x, int n) noexcept nogil:
    cdef double s = 0.0
    cdef int i
    for i in range(n):
        s = s + x[i] * x[i]
    return sqrt(s)


def integrate_kernel(const int64_t[:, ::1] exps, const double[::1] coefs,
                     const int64_t[::1] comp, const double[::1] x0,
                     double h, double speed_power, double conv_radius,
                     double blowup_radius, double tube_radius, long long max_steps,
                     long long record_every, double[::1] times_out,
                     double[:, ::1] states_out):
    """Run the integration; see ``_rk4_py.integrate_kernel`` for the contract."""
    cdef int n = x0.shape[0]
    cdef int maxe = 0
    cdef Py_ssize_t t
    cdef int i, j, shrink
    for t in range(exps.shape[0]):
        for i in range(n):
            if exps[t, i] > maxe:
                maxe = <int>exps[t, i]
    cdef double* buf = <double*>malloc(sizeof(double) * (9 * n + n * (maxe + 1)))
    if buf == NULL:
        raise MemoryError()
    cdef double* x = buf
    cdef double* xn = buf + n
    cdef double* k1 = buf + 2 * n
    cdef double* k2 = buf + 3 * n
    cdef double* k3 = buf + 4 * n
    cdef double* k4 = buf + 5 * n
    cdef double* tmp = buf + 6 * n
    cdef double* xprev = buf + 7 * n
    cdef double* xc = buf + 8 * n
    cdef double* pw = buf + 9 * n

    cdef long long cap = times_out.shape[0]
    cdef long long nrec = 0
    cdef long long step = 0
    cdef double time = 0.0
    cdef double r, rn, he, wind = 0.0, dphi, s, dist, twopi = 2.0 * M_PI
    cdef double wind_prev
    cdef int code = 3
    cdef int nonfinite = 0
    cdef double norm0

    for i in range(n):
        x[i] = x0[i]
    norm0 = _norm(x, n)

    with nogil:
        times_out[0] = 0.0
        for i in range(n):
            states_out[0, i] = x[i]
        nrec = 1
        if not isfinite(norm0):
            code = 2
            nonfinite = 1
        elif norm0 <= conv_radius:
            code = 0
        elif norm0 >= blowup_radius:
            code = 2
        else:
            while step < max_steps:
                r = _norm(x, n)
                he = h
                if speed_power != 0.0:
                    he = h / pow(r, speed_power)
                shrink = 0
                while True:
                    _field(exps, coefs, comp, n, maxe, x, pw, k1)
                    for i in range(n):
                        tmp[i] = x[i] + 0.5 * he * k1[i]
                    _field(exps, coefs, comp, n, maxe, tmp, pw, k2)
                    for i in range(n):
                        tmp[i] = x[i] + 0.5 * he * k2[i]
                    _field(exps, coefs, comp, n, maxe, tmp, pw, k3)
                    for i in range(n):
                        tmp[i] = x[i] + he * k3[i]
                    _field(exps, coefs, comp, n, maxe, tmp, pw, k4)
                    for i in range(n):
                        xn[i] = x[i] + (he / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
                    rn = _norm(xn, n)
                    if isfinite(rn) and fabs(rn - r) <= 0.1 * r:
                        break
                    if shrink >= 40:
                        break
                    he = 0.5 * he
                    shrink = shrink + 1
                for i in range(n):
                    xprev[i] = x[i]
                    x[i] = xn[i]
                step = step + 1
                time = time + he
                if step % record_every == 0 and nrec < cap - 1:
                    times_out[nrec] = time
                    for i in range(n):
                        states_out[nrec, i] = x[i]
                    nrec = nrec + 1
                if not isfinite(rn):
                    code = 2
                    nonfinite = 1
                    break
                if rn >= blowup_radius:
                    code = 2
                    break
                if rn <= conv_radius:
                    code = 0
                    break
                if n == 2:
                    dphi = atan2(xprev[0] * x[1] - xprev[1] * x[0],
                                 xprev[0] * x[0] + xprev[1] * x[1])
                    wind_prev = wind
                    wind = wind + dphi
                    if floor(fabs(wind) / twopi) > floor(fabs(wind_prev) / twopi):
                        s = (twopi * floor(fabs(wind) / twopi) - fabs(wind_prev)) / (fabs(wind) - fabs(wind_prev))
                        dist = 0.0
                        for i in range(n):
                            xc[i] = xprev[i] + s * (x[i] - xprev[i])
                            dist = dist + (xc[i] - x0[i]) * (xc[i] - x0[i])
                        if sqrt(dist) <= tube_radius:
                            code = 1
                            break
        if nrec == 0 or times_out[nrec - 1] != time:
            if nrec >= cap:
                nrec = cap - 1
            times_out[nrec] = time
            for i in range(n):
                states_out[nrec, i] = x[i]
            nrec = nrec + 1

    final = [x[i] for i in range(n)]
    free(buf)
    return code, nonfinite, step, time, wind, nrec, final
