"""Compiled inner loops for the closed-loop simulator.

Everything here is a scalar-loop re-expression of the closed forms in
`dynamics`, `potential` and `control`, shaped for numba. The public modules
stay the readable reference; equivalence tests pin the two against each
other. When numba is unavailable the same functions run as plain Python
(correct but far too slow for the long adaptive horizons).

State layout for N robots, flat float64 of length 6N:

    y[0:2N]    joint angles q, robot-major (q1_0, q2_0, q1_1, ...)
    y[2N:4N]   joint velocities dq
    y[4N:6N]   auxiliary: filter state xhat (output feedback)
                          or parameter estimate theta_hat (adaptive)

Drivers integrate with fixed-step RK4, saturate inside every stage, detect
events on accepted states, and fill caller-allocated log arrays every
`stride` steps plus one final row. Status codes: 0 horizon reached,
1 link break, 2 singular configuration.
"""

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def deco(func):
            return func

        return deco


STATUS_DONE = 0
STATUS_LINK_BREAK = 1
STATUS_SINGULAR = 2


# ---------------------------------------------------------------------------
# output feedback
# ---------------------------------------------------------------------------

@njit(cache=True)
def rhs_of(y, dy, f_out, sat_out, x, e, phys, ei, ej, rho, kap, zet, fbar, r2, Q):
    """Closed-loop derivative under the filtered position-feedback law.

    Also reports the saturated wrench and per-component saturation flags at
    this state, so log rows come for free from the first RK4 stage.
    """
    N = phys.shape[0]
    two_n = 2 * N
    four_n = 4 * N

    for i in range(N):
        q1 = y[2 * i]
        q2 = y[2 * i + 1]
        l1 = phys[i, 2]
        l2 = phys[i, 3]
        x[i, 0] = l1 * np.cos(q1) + l2 * np.cos(q1 + q2)
        x[i, 1] = l1 * np.sin(q1) + l2 * np.sin(q1 + q2)

    for i in range(N):
        e[i, 0] = 0.0
        e[i, 1] = 0.0
    a = r2 + Q
    for k in range(ei.shape[0]):
        i = ei[k]
        j = ej[k]
        d0 = x[i, 0] - x[j, 0]
        d1 = x[i, 1] - x[j, 1]
        s = d0 * d0 + d1 * d1
        den = a - s
        if den < 1e-9:
            den = 1e-9  # far past a break; the run is already terminal
        pp = a / (den * den)
        g0 = 2.0 * pp * d0
        g1 = 2.0 * pp * d1
        e[i, 0] += g0
        e[i, 1] += g1
        e[j, 0] -= g0
        e[j, 1] -= g1

    for i in range(N):
        m1 = phys[i, 0]
        m2 = phys[i, 1]
        l1 = phys[i, 2]
        l2 = phys[i, 3]
        grav = phys[i, 4]
        q1 = y[2 * i]
        q2 = y[2 * i + 1]
        dq1 = y[two_n + 2 * i]
        dq2 = y[two_n + 2 * i + 1]
        xh0 = y[four_n + 2 * i]
        xh1 = y[four_n + 2 * i + 1]

        c1 = np.cos(q1)
        s1 = np.sin(q1)
        c2 = np.cos(q2)
        s2 = np.sin(q2)
        c12 = np.cos(q1 + q2)
        s12 = np.sin(q1 + q2)

        J11 = -l1 * s1 - l2 * s12
        J12 = -l2 * s12
        J21 = l1 * c1 + l2 * c12
        J22 = l2 * c12

        gq0 = (m1 + m2) * grav * l1 * c1 + m2 * grav * l2 * c12
        gq1 = m2 * grav * l2 * c12

        dxh0 = -zet[i] * xh0 + x[i, 0]
        dxh1 = -zet[i] * xh1 + x[i, 1]

        gs0 = 0.0
        gs1 = 0.0
        if grav != 0.0:
            det_j = J11 * J22 - J12 * J21
            if det_j >= 0.0 and det_j < 1e-12:
                det_j = 1e-12  # saturation bounds the resulting command
            elif det_j < 0.0 and det_j > -1e-12:
                det_j = -1e-12
            gs0 = (J22 * gq0 - J21 * gq1) / det_j
            gs1 = (-J12 * gq0 + J11 * gq1) / det_j

        fh0 = -rho[i] * e[i, 0] - kap[i] * dxh0 + gs0
        fh1 = -rho[i] * e[i, 1] - kap[i] * dxh1 + gs1

        fb0 = fbar[i, 0]
        fb1 = fbar[i, 1]
        sat_out[i, 0] = 1.0 if (fh0 > fb0 or fh0 < -fb0) else 0.0
        sat_out[i, 1] = 1.0 if (fh1 > fb1 or fh1 < -fb1) else 0.0
        f0 = min(max(fh0, -fb0), fb0)
        f1 = min(max(fh1, -fb1), fb1)
        f_out[i, 0] = f0
        f_out[i, 1] = f1

        tau0 = J11 * f0 + J21 * f1
        tau1 = J12 * f0 + J22 * f1

        h = -m2 * l1 * l2 * s2
        cdq0 = h * dq2 * dq1 + h * (dq1 + dq2) * dq2
        cdq1 = -h * dq1 * dq1

        r0 = tau0 - cdq0 - gq0
        r1 = tau1 - cdq1 - gq1

        M11 = m1 * l1 * l1 + m2 * (l1 * l1 + l2 * l2 + 2.0 * l1 * l2 * c2)
        M12 = m2 * (l2 * l2 + l1 * l2 * c2)
        M22 = m2 * l2 * l2
        det_m = M11 * M22 - M12 * M12

        dy[2 * i] = dq1
        dy[2 * i + 1] = dq2
        dy[two_n + 2 * i] = (M22 * r0 - M12 * r1) / det_m
        dy[two_n + 2 * i + 1] = (M11 * r1 - M12 * r0) / det_m
        dy[four_n + 2 * i] = dxh0
        dy[four_n + 2 * i + 1] = dxh1


# ---------------------------------------------------------------------------
# adaptive
# ---------------------------------------------------------------------------

@njit(cache=True)
def rhs_ad(y, dy, f_out, sat_out, bsat_out, x, v, e, de,
           phys, ei, ej, kap, mu, beta, alpha, delta, lo, hi, fbar, r2, Q):
    """Closed-loop derivative under the adaptive law.

    The plant integrates with the true masses in `phys`; the control terms
    use theta_hat from the state vector plus the known kinematics. bsat_out
    flags agents whose feedforward-plus-velocity-damping command alone
    exceeded the limits at this state (kappa_hat collapsed to zero).
    """
    N = phys.shape[0]
    two_n = 2 * N
    four_n = 4 * N

    for i in range(N):
        q1 = y[2 * i]
        q2 = y[2 * i + 1]
        dq1 = y[two_n + 2 * i]
        dq2 = y[two_n + 2 * i + 1]
        l1 = phys[i, 2]
        l2 = phys[i, 3]
        s1 = np.sin(q1)
        c1 = np.cos(q1)
        s12 = np.sin(q1 + q2)
        c12 = np.cos(q1 + q2)
        x[i, 0] = l1 * c1 + l2 * c12
        x[i, 1] = l1 * s1 + l2 * s12
        v[i, 0] = (-l1 * s1 - l2 * s12) * dq1 + (-l2 * s12) * dq2
        v[i, 1] = (l1 * c1 + l2 * c12) * dq1 + (l2 * c12) * dq2

    for i in range(N):
        e[i, 0] = 0.0
        e[i, 1] = 0.0
        de[i, 0] = 0.0
        de[i, 1] = 0.0
    a = r2 + Q
    for k in range(ei.shape[0]):
        i = ei[k]
        j = ej[k]
        d0 = x[i, 0] - x[j, 0]
        d1 = x[i, 1] - x[j, 1]
        s = d0 * d0 + d1 * d1
        den = a - s
        if den < 1e-9:
            den = 1e-9
        pp = a / (den * den)
        ppp = 2.0 * a / (den * den * den)
        g0 = 2.0 * pp * d0
        g1 = 2.0 * pp * d1
        e[i, 0] += g0
        e[i, 1] += g1
        e[j, 0] -= g0
        e[j, 1] -= g1
        dv0 = v[i, 0] - v[j, 0]
        dv1 = v[i, 1] - v[j, 1]
        dot = d0 * dv0 + d1 * dv1
        h0 = 2.0 * pp * dv0 + 4.0 * ppp * dot * d0
        h1 = 2.0 * pp * dv1 + 4.0 * ppp * dot * d1
        de[i, 0] += h0
        de[i, 1] += h1
        de[j, 0] -= h0
        de[j, 1] -= h1

    for i in range(N):
        m1 = phys[i, 0]
        m2 = phys[i, 1]
        l1 = phys[i, 2]
        l2 = phys[i, 3]
        grav = phys[i, 4]
        q1 = y[2 * i]
        q2 = y[2 * i + 1]
        dq1 = y[two_n + 2 * i]
        dq2 = y[two_n + 2 * i + 1]
        th0 = y[four_n + 2 * i]
        th1 = y[four_n + 2 * i + 1]

        c1 = np.cos(q1)
        s1 = np.sin(q1)
        c2 = np.cos(q2)
        s2 = np.sin(q2)
        c12 = np.cos(q1 + q2)
        s12 = np.sin(q1 + q2)

        J11 = -l1 * s1 - l2 * s12
        J12 = -l2 * s12
        J21 = l1 * c1 + l2 * c12
        J22 = l2 * c12
        det_j = J11 * J22 - J12 * J21
        if det_j >= 0.0 and det_j < 1e-12:
            det_j = 1e-12
        elif det_j < 0.0 and det_j > -1e-12:
            det_j = -1e-12

        al = alpha[i]
        s_0 = v[i, 0] + al * e[i, 0]
        s_1 = v[i, 1] + al * e[i, 1]
        vr0 = -al * e[i, 0]
        vr1 = -al * e[i, 1]
        ar0 = -al * de[i, 0]
        ar1 = -al * de[i, 1]

        # u = J^-1 v_ref ; w = J^-1 a_ref - J^-1 Jdot u
        u0 = (J22 * vr0 - J12 * vr1) / det_j
        u1 = (-J21 * vr0 + J11 * vr1) / det_j
        d1_ = dq1
        d12_ = dq1 + dq2
        Jd11 = -l1 * c1 * d1_ - l2 * c12 * d12_
        Jd12 = -l2 * c12 * d12_
        Jd21 = -l1 * s1 * d1_ - l2 * s12 * d12_
        Jd22 = -l2 * s12 * d12_
        ju0 = Jd11 * u0 + Jd12 * u1
        ju1 = Jd21 * u0 + Jd22 * u1
        w0 = (J22 * (ar0 - ju0) - J12 * (ar1 - ju1)) / det_j
        w1 = (-J21 * (ar0 - ju0) + J11 * (ar1 - ju1)) / det_j

        # regressor columns (unit-mass slices mapped through J^-T)
        dM2_11 = l1 * l1 + l2 * l2 + 2.0 * l1 * l2 * c2
        dM2_12 = l2 * l2 + l1 * l2 * c2
        dM2_22 = l2 * l2
        h1m = -l1 * l2 * s2  # Christoffel factor at unit m2
        b1_0 = l1 * l1 * w0 + grav * l1 * c1
        b1_1 = 0.0
        b2_0 = dM2_11 * w0 + dM2_12 * w1 + h1m * dq2 * u0 + h1m * (dq1 + dq2) * u1 \
            + grav * l1 * c1 + grav * l2 * c12
        b2_1 = dM2_12 * w0 + dM2_22 * w1 - h1m * dq1 * u0 + grav * l2 * c12
        P11 = (J22 * b1_0 - J21 * b1_1) / det_j
        P21 = (-J12 * b1_0 + J11 * b1_1) / det_j
        P12 = (J22 * b2_0 - J21 * b2_1) / det_j
        P22 = (-J12 * b2_0 + J11 * b2_1) / det_j

        base0 = P11 * th0 + P12 * th1 - mu[i] * v[i, 0]
        base1 = P21 * th0 + P22 * th1 - mu[i] * v[i, 1]

        fb0 = fbar[i, 0]
        fb1 = fbar[i, 1]
        if base0 > fb0 or base0 < -fb0 or base1 > fb1 or base1 < -fb1:
            bsat_out[i] = 1.0
            khat = 0.0
            f0 = min(max(base0, -fb0), fb0)
            f1 = min(max(base1, -fb1), fb1)
        else:
            bsat_out[i] = 0.0
            khat = kap[i]
            if s_0 != 0.0:
                sgn = 1.0 if s_0 > 0.0 else -1.0
                room = (fb0 + sgn * base0) / abs(s_0)
                if room < khat:
                    khat = room
            if s_1 != 0.0:
                sgn = 1.0 if s_1 > 0.0 else -1.0
                room = (fb1 + sgn * base1) / abs(s_1)
                if room < khat:
                    khat = room
            if khat < 0.0:
                khat = 0.0
            f0 = min(max(base0 - khat * s_0, -fb0), fb0)
            f1 = min(max(base1 - khat * s_1, -fb1), fb1)
        sat_out[i, 0] = 1.0 if (base0 - kap[i] * s_0 > fb0 or base0 - kap[i] * s_0 < -fb0) else 0.0
        sat_out[i, 1] = 1.0 if (base1 - kap[i] * s_1 > fb1 or base1 - kap[i] * s_1 < -fb1) else 0.0
        f_out[i, 0] = f0
        f_out[i, 1] = f1

        # projected adaptation flow
        om0 = -beta[i] * (P11 * s_0 + P21 * s_1)
        om1 = -beta[i] * (P12 * s_0 + P22 * s_1)
        dl = delta[i]
        if om0 < 0.0 and th0 <= lo[i, 0] + dl:
            ups = (lo[i, 0] + dl - th0) / dl
            if ups > 1.0:
                ups = 1.0
            om0 = (1.0 - ups) * om0
        elif om0 > 0.0 and th0 >= hi[i, 0] - dl:
            ups = (th0 - hi[i, 0] + dl) / dl
            if ups > 1.0:
                ups = 1.0
            om0 = (1.0 - ups) * om0
        if om1 < 0.0 and th1 <= lo[i, 1] + dl:
            ups = (lo[i, 1] + dl - th1) / dl
            if ups > 1.0:
                ups = 1.0
            om1 = (1.0 - ups) * om1
        elif om1 > 0.0 and th1 >= hi[i, 1] - dl:
            ups = (th1 - hi[i, 1] + dl) / dl
            if ups > 1.0:
                ups = 1.0
            om1 = (1.0 - ups) * om1

        # plant with true masses
        tau0 = J11 * f0 + J21 * f1
        tau1 = J12 * f0 + J22 * f1
        h = -m2 * l1 * l2 * s2
        cdq0 = h * dq2 * dq1 + h * (dq1 + dq2) * dq2
        cdq1 = -h * dq1 * dq1
        gq0 = (m1 + m2) * grav * l1 * c1 + m2 * grav * l2 * c12
        gq1 = m2 * grav * l2 * c12
        r0 = tau0 - cdq0 - gq0
        r1 = tau1 - cdq1 - gq1
        M11 = m1 * l1 * l1 + m2 * (l1 * l1 + l2 * l2 + 2.0 * l1 * l2 * c2)
        M12 = m2 * (l2 * l2 + l1 * l2 * c2)
        M22 = m2 * l2 * l2
        det_m = M11 * M22 - M12 * M12

        dy[2 * i] = dq1
        dy[2 * i + 1] = dq2
        dy[two_n + 2 * i] = (M22 * r0 - M12 * r1) / det_m
        dy[two_n + 2 * i + 1] = (M11 * r1 - M12 * r0) / det_m
        dy[four_n + 2 * i] = om0
        dy[four_n + 2 * i + 1] = om1


# ---------------------------------------------------------------------------
# shared post-step checks
# ---------------------------------------------------------------------------

@njit(cache=True)
def _positions(y, phys, x):
    N = phys.shape[0]
    for i in range(N):
        q1 = y[2 * i]
        q2 = y[2 * i + 1]
        l1 = phys[i, 2]
        l2 = phys[i, 3]
        x[i, 0] = l1 * np.cos(q1) + l2 * np.cos(q1 + q2)
        x[i, 1] = l1 * np.sin(q1) + l2 * np.sin(q1 + q2)


@njit(cache=True)
def _edge_distances(x, ei, ej, d_out):
    for k in range(ei.shape[0]):
        d0 = x[ei[k], 0] - x[ej[k], 0]
        d1 = x[ei[k], 1] - x[ej[k], 1]
        d_out[k] = np.sqrt(d0 * d0 + d1 * d1)


@njit(cache=True)
def _first_broken_edge(d, r):
    for k in range(d.shape[0]):
        if d[k] >= r:
            return k
    return -1


@njit(cache=True)
def _first_singular(y, phys, tol):
    N = phys.shape[0]
    for i in range(N):
        q2 = y[2 * i + 1]
        l1 = phys[i, 2]
        l2 = phys[i, 3]
        c2 = np.cos(q2)
        s2 = np.sin(q2)
        g11 = l1 * l1 + l2 * l2 + 2.0 * l1 * l2 * c2
        g22 = l2 * l2
        tr = g11 + g22
        det = (l1 * l2 * s2) ** 2
        disc = tr * tr - 4.0 * det
        if disc < 0.0:
            disc = 0.0
        lam = 0.5 * (tr - np.sqrt(disc))
        if lam < 0.0:
            lam = 0.0
        if np.sqrt(lam) <= tol:
            return i
    return -1


@njit(cache=True)
def _max_pairwise(x):
    N = x.shape[0]
    best = 0.0
    for i in range(N):
        for j in range(i + 1, N):
            d0 = x[i, 0] - x[j, 0]
            d1 = x[i, 1] - x[j, 1]
            d = np.sqrt(d0 * d0 + d1 * d1)
            if d > best:
                best = d
    return best


# ---------------------------------------------------------------------------
# drivers
# ---------------------------------------------------------------------------

@njit(cache=True)
def drive_of(y0, phys, ei, ej, rho, kap, zet, fbar, r, Q, dt, n_steps, stride,
             sing_tol, conv_tol, conv_hold_steps,
             log_t, log_y, log_f, log_sat, log_d):
    """Integrate the output-feedback loop. See module docstring for codes.

    Returns (status, event_step, event_index, n_logged, converged_step, y).
    event_index is the broken edge's index or the singular agent's index.
    """
    N = phys.shape[0]
    y = y0.copy()
    dy1 = np.empty_like(y)
    dy2 = np.empty_like(y)
    dy3 = np.empty_like(y)
    dy4 = np.empty_like(y)
    yt = np.empty_like(y)
    f = np.empty((N, 2))
    sat = np.empty((N, 2))
    xs = np.empty((N, 2))
    es = np.empty((N, 2))
    dists = np.empty(ei.shape[0])
    r2 = r * r

    row = 0
    status = STATUS_DONE
    event_step = -1
    event_index = -1
    conv_step = -1
    conv_run_start = -1

    for k in range(n_steps):
        rhs_of(y, dy1, f, sat, xs, es, phys, ei, ej, rho, kap, zet, fbar, r2, Q)
        if k % stride == 0:
            log_t[row] = k * dt
            log_y[row, :] = y
            log_f[row, :, :] = f
            log_sat[row, :, :] = sat
            _edge_distances(xs, ei, ej, dists)
            log_d[row, :] = dists
            row += 1
        for m in range(y.shape[0]):
            yt[m] = y[m] + 0.5 * dt * dy1[m]
        rhs_of(yt, dy2, f, sat, xs, es, phys, ei, ej, rho, kap, zet, fbar, r2, Q)
        for m in range(y.shape[0]):
            yt[m] = y[m] + 0.5 * dt * dy2[m]
        rhs_of(yt, dy3, f, sat, xs, es, phys, ei, ej, rho, kap, zet, fbar, r2, Q)
        for m in range(y.shape[0]):
            yt[m] = y[m] + dt * dy3[m]
        rhs_of(yt, dy4, f, sat, xs, es, phys, ei, ej, rho, kap, zet, fbar, r2, Q)
        for m in range(y.shape[0]):
            y[m] = y[m] + (dt / 6.0) * (dy1[m] + 2.0 * dy2[m] + 2.0 * dy3[m] + dy4[m])

        # accepted-state checks
        _positions(y, phys, xs)
        _edge_distances(xs, ei, ej, dists)
        broken = _first_broken_edge(dists, r)
        if broken >= 0:
            status = STATUS_LINK_BREAK
            event_step = k + 1
            event_index = broken
            break
        singular = _first_singular(y, phys, sing_tol)
        if singular >= 0:
            status = STATUS_SINGULAR
            event_step = k + 1
            event_index = singular
            break
        if conv_step < 0:
            if _max_pairwise(xs) < conv_tol:
                if conv_run_start < 0:
                    conv_run_start = k + 1
                if (k + 1) - conv_run_start >= conv_hold_steps:
                    conv_step = k + 1
            else:
                conv_run_start = -1

    if n_steps > 0:
        steps_done = event_step if status != STATUS_DONE else n_steps
        rhs_of(y, dy1, f, sat, xs, es, phys, ei, ej, rho, kap, zet, fbar, r2, Q)
        log_t[row] = steps_done * dt
        log_y[row, :] = y
        log_f[row, :, :] = f
        log_sat[row, :, :] = sat
        _edge_distances(xs, ei, ej, dists)
        log_d[row, :] = dists
        row += 1

    return status, event_step, event_index, row, conv_step, y


@njit(cache=True)
def drive_ad(y0, phys, ei, ej, kap, mu, beta, alpha, delta, lo, hi, fbar, r, Q,
             dt, n_steps, stride, sing_tol, conv_tol, conv_hold_steps,
             log_t, log_y, log_f, log_sat, log_d):
    """Integrate the adaptive loop.

    Returns (status, event_step, event_index, n_logged, converged_step,
    base_sat_step, base_sat_agent, clamp_count, y). theta_hat is hard
    clamped to its box after every accepted step; clamp_count reports how
    often that actually moved a component (it should stay 0, the in-stage
    projection already confines the flow).
    """
    N = phys.shape[0]
    four_n = 4 * N
    y = y0.copy()
    dy1 = np.empty_like(y)
    dy2 = np.empty_like(y)
    dy3 = np.empty_like(y)
    dy4 = np.empty_like(y)
    yt = np.empty_like(y)
    f = np.empty((N, 2))
    sat = np.empty((N, 2))
    bsat = np.empty(N)
    xs = np.empty((N, 2))
    vs = np.empty((N, 2))
    es = np.empty((N, 2))
    des = np.empty((N, 2))
    dists = np.empty(ei.shape[0])
    r2 = r * r

    row = 0
    status = STATUS_DONE
    event_step = -1
    event_index = -1
    conv_step = -1
    conv_run_start = -1
    base_sat_step = -1
    base_sat_agent = -1
    clamp_count = 0

    for k in range(n_steps):
        rhs_ad(y, dy1, f, sat, bsat, xs, vs, es, des, phys, ei, ej,
               kap, mu, beta, alpha, delta, lo, hi, fbar, r2, Q)
        if base_sat_step < 0:
            for i in range(N):
                if bsat[i] > 0.0:
                    base_sat_step = k
                    base_sat_agent = i
                    break
        if k % stride == 0:
            log_t[row] = k * dt
            log_y[row, :] = y
            log_f[row, :, :] = f
            log_sat[row, :, :] = sat
            _edge_distances(xs, ei, ej, dists)
            log_d[row, :] = dists
            row += 1
        for m in range(y.shape[0]):
            yt[m] = y[m] + 0.5 * dt * dy1[m]
        rhs_ad(yt, dy2, f, sat, bsat, xs, vs, es, des, phys, ei, ej,
               kap, mu, beta, alpha, delta, lo, hi, fbar, r2, Q)
        for m in range(y.shape[0]):
            yt[m] = y[m] + 0.5 * dt * dy2[m]
        rhs_ad(yt, dy3, f, sat, bsat, xs, vs, es, des, phys, ei, ej,
               kap, mu, beta, alpha, delta, lo, hi, fbar, r2, Q)
        for m in range(y.shape[0]):
            yt[m] = y[m] + dt * dy3[m]
        rhs_ad(yt, dy4, f, sat, bsat, xs, vs, es, des, phys, ei, ej,
               kap, mu, beta, alpha, delta, lo, hi, fbar, r2, Q)
        for m in range(y.shape[0]):
            y[m] = y[m] + (dt / 6.0) * (dy1[m] + 2.0 * dy2[m] + 2.0 * dy3[m] + dy4[m])

        for i in range(N):
            for c in range(2):
                idx = four_n + 2 * i + c
                if y[idx] < lo[i, c]:
                    y[idx] = lo[i, c]
                    clamp_count += 1
                elif y[idx] > hi[i, c]:
                    y[idx] = hi[i, c]
                    clamp_count += 1

        _positions(y, phys, xs)
        _edge_distances(xs, ei, ej, dists)
        broken = _first_broken_edge(dists, r)
        if broken >= 0:
            status = STATUS_LINK_BREAK
            event_step = k + 1
            event_index = broken
            break
        singular = _first_singular(y, phys, sing_tol)
        if singular >= 0:
            status = STATUS_SINGULAR
            event_step = k + 1
            event_index = singular
            break
        if conv_step < 0:
            if _max_pairwise(xs) < conv_tol:
                if conv_run_start < 0:
                    conv_run_start = k + 1
                if (k + 1) - conv_run_start >= conv_hold_steps:
                    conv_step = k + 1
            else:
                conv_run_start = -1

    if n_steps > 0:
        steps_done = event_step if status != STATUS_DONE else n_steps
        rhs_ad(y, dy1, f, sat, bsat, xs, vs, es, des, phys, ei, ej,
               kap, mu, beta, alpha, delta, lo, hi, fbar, r2, Q)
        log_t[row] = steps_done * dt
        log_y[row, :] = y
        log_f[row, :, :] = f
        log_sat[row, :, :] = sat
        _edge_distances(xs, ei, ej, dists)
        log_d[row, :] = dists
        row += 1

    return (status, event_step, event_index, row, conv_step,
            base_sat_step, base_sat_agent, clamp_count, y)
