"""Pure-Python twin of the compiled RK4 loop in ``_rk4.pyx``.

Same arithmetic in the same order, so both backends produce the same
trajectories up to libm differences in ``atan2``/``pow``.
"""

from __future__ import annotations

import math

CONVERGED, PERIODIC, DIVERGED, BUDGET = 0, 1, 2, 3


def _field(exps, coefs, comp, n, maxe, x, out):
    pw = []
    for i in range(n):
        p = 1.0
        row = []
        for _ in range(maxe + 1):
            row.append(p)
            p = p * x[i]
        pw.append(row)
        out[i] = 0.0
    for t in range(len(coefs)):
        v = coefs[t]
        e = exps[t]
        for i in range(n):
            v = v * pw[i][e[i]]
        k = comp[t]
        out[k] = out[k] + v


def _norm(x):
    s = 0.0
    for v in x:
        s = s + v * v
    return math.sqrt(s)


def integrate_kernel(exps, coefs, comp, x0, h, speed_power, conv_radius, blowup_radius,
                     tube_radius, max_steps, record_every, times_out, states_out):
    """Fixed-step RK4 with the step scaled by ``1/|x|^speed_power``.

    Writes recorded samples into ``times_out``/``states_out`` and returns
    ``(code, nonfinite, steps, time, winding, nrecorded, final_state)`` where
    ``code`` is 0 converged, 1 periodic return, 2 diverged, 3 budget hit.
    """
    n = len(x0)
    exps = [[int(e) for e in row] for row in exps]
    coefs = [float(c) for c in coefs]
    comp = [int(c) for c in comp]
    x0 = [float(v) for v in x0]
    maxe = max((e for row in exps for e in row), default=0)
    cap = len(times_out)
    x = list(x0)
    xn = [0.0] * n
    k1, k2, k3, k4 = ([0.0] * n for _ in range(4))
    tmp = [0.0] * n
    xprev = [0.0] * n
    twopi = 2.0 * math.pi
    step = 0
    time = 0.0
    wind = 0.0
    code = BUDGET
    nonfinite = 0

    times_out[0] = 0.0
    states_out[0, :] = x
    nrec = 1
    norm0 = _norm(x)
    if not math.isfinite(norm0):
        code, nonfinite = DIVERGED, 1
    elif norm0 <= conv_radius:
        code = CONVERGED
    elif norm0 >= blowup_radius:
        code = DIVERGED
    else:
        while step < max_steps:
            r = _norm(x)
            he = h
            if speed_power != 0.0:
                he = h / math.pow(r, speed_power)
            shrink = 0
            while True:
                _field(exps, coefs, comp, n, maxe, x, k1)
                for i in range(n):
                    tmp[i] = x[i] + 0.5 * he * k1[i]
                _field(exps, coefs, comp, n, maxe, tmp, k2)
                for i in range(n):
                    tmp[i] = x[i] + 0.5 * he * k2[i]
                _field(exps, coefs, comp, n, maxe, tmp, k3)
                for i in range(n):
                    tmp[i] = x[i] + he * k3[i]
                _field(exps, coefs, comp, n, maxe, tmp, k4)
                for i in range(n):
                    xn[i] = x[i] + (he / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
                try:
                    rn = _norm(xn)
                except OverflowError:
                    rn = math.inf
                if math.isfinite(rn) and abs(rn - r) <= 0.1 * r:
                    break
                if shrink >= 40:
                    break
                he = 0.5 * he
                shrink += 1
            for i in range(n):
                xprev[i] = x[i]
                x[i] = xn[i]
            step += 1
            time = time + he
            if step % record_every == 0 and nrec < cap - 1:
                times_out[nrec] = time
                states_out[nrec, :] = x
                nrec += 1
            if not math.isfinite(rn):
                code, nonfinite = DIVERGED, 1
                break
            if rn >= blowup_radius:
                code = DIVERGED
                break
            if rn <= conv_radius:
                code = CONVERGED
                break
            if n == 2:
                dphi = math.atan2(xprev[0] * x[1] - xprev[1] * x[0], xprev[0] * x[0] + xprev[1] * x[1])
                wind_prev = wind
                wind = wind + dphi
                if math.floor(abs(wind) / twopi) > math.floor(abs(wind_prev) / twopi):
                    s = (twopi * math.floor(abs(wind) / twopi) - abs(wind_prev)) / (abs(wind) - abs(wind_prev))
                    dist = 0.0
                    for i in range(n):
                        c = xprev[i] + s * (x[i] - xprev[i])
                        dist = dist + (c - x0[i]) * (c - x0[i])
                    if math.sqrt(dist) <= tube_radius:
                        code = PERIODIC
                        break
    if times_out[nrec - 1] != time:
        times_out[nrec] = time
        states_out[nrec, :] = x
        nrec += 1
    return code, nonfinite, step, time, wind, nrec, list(x)
