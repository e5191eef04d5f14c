"""Hot numeric kernels shared by the propagators and solvers.

Every function here is written in plain scalar/ndarray style so it can be
compiled by numba or run as-is. Compilation is on by default; set
``UPSTAGE_DISABLE_NUMBA=1`` before import to select the pure-numpy
fallback path (used by the benchmark and as an escape hatch on platforms
where numba is unavailable or misbehaving).

Status codes returned by the right-hand sides and the propagator driver:

    0  success
    1  pitch law unsolvable at the attempted state
    2  mass depleted
    3  velocity costate vanished
    4  step size underflow / step budget exhausted
"""
from __future__ import annotations

import math
import os

import numpy as np

_flag = os.environ.get("UPSTAGE_DISABLE_NUMBA", "0").strip().lower()
USING_NUMBA = _flag not in ("1", "true", "yes")

if USING_NUMBA:
    from numba import njit

    def jit(func):
        return njit(cache=True)(func)
else:
    def jit(func):
        return func

STATUS_OK = 0
STATUS_NO_PITCH = 1
STATUS_MASS_DEPLETED = 2
STATUS_SINGULAR_COSTATE = 3
STATUS_STEP_FAILURE = 4

KIND_CLOSED_LOOP = 0
KIND_EXTREMAL = 1

# Bisection termination width (rad) for the pitch solve.
PITCH_TOL = 1e-12
# Bracket endpoints are pulled inside the open interval by this factor to
# keep the square root in the branch function strictly positive.
PITCH_EDGE = 1.0 - 1e-12


@jit
def grav_accel(mu, px, py):
    r = math.hypot(px, py)
    c = -mu / (r * r * r)
    return c * px, c * py


@jit
def pitch_bound_kernel(mu, r, v):
    q = math.sqrt(mu / r) / v
    return math.asin(1.0 / math.sqrt(3.0 + q * q))


@jit
def branch_gamma_kernel(theta, vc_over_v, sign):
    """Flight path angle reached by pitch ``theta`` on one branch.

    Returns NaN outside the branch domain.
    """
    s = math.sin(theta)
    q = 1.0 - 3.0 * s * s
    if q <= 0.0:
        return math.nan
    a = vc_over_v * s / math.sqrt(q)
    if a < -1.0 or a > 1.0:
        return math.nan
    return theta + sign * math.asin(a)


@jit
def solve_pitch_kernel(mu, r, v, gamma):
    """Invert the ascending branch of the pitch law by bisection.

    The ascending branch is strictly increasing on the open pitch
    interval, so a sign bracket is also a uniqueness proof. Returns NaN
    when ``gamma`` is outside the reachable range.
    """
    vc_over_v = math.sqrt(mu / r) / v
    tm = math.asin(1.0 / math.sqrt(3.0 + vc_over_v * vc_over_v))
    lo = -tm * PITCH_EDGE
    hi = tm * PITCH_EDGE
    flo = branch_gamma_kernel(lo, vc_over_v, 1.0) - gamma
    fhi = branch_gamma_kernel(hi, vc_over_v, 1.0) - gamma
    if math.isnan(flo) or math.isnan(fhi) or flo > 0.0 or fhi < 0.0:
        return math.nan
    for _ in range(200):
        if hi - lo <= PITCH_TOL:
            break
        mid = 0.5 * (lo + hi)
        fm = branch_gamma_kernel(mid, vc_over_v, 1.0) - gamma
        if fm < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@jit
def angular_rate_kernel(mu, r, v, gamma, theta):
    """Pitch rate implied by a (pitch, flight path angle) pair.

    The vertical-at-rest degeneracy (both sines zero) takes the negative
    square-root convention so the rate stays continuous with the
    ascending-branch limit. Returns NaN when the pair is inconsistent
    enough to make the formula singular.
    """
    st = math.sin(theta)
    stg = math.sin(theta - gamma)
    if stg == 0.0:
        if st == 0.0:
            return -math.sqrt(mu / (r * r * r))
        return math.nan
    return mu * st / (r * r * v * stg)


@jit
def rhs(kind, mu, thrust, ve, y, dy):
    """Time derivative of the propagated vector, written into ``dy``.

    kind 0: (x, y, vx, vy, m) with the closed-loop pitch law.
    kind 1: (x, y, vx, vy, m, prx, pry, pvx, pvy, pm) with thrust along
            the velocity costate.
    """
    px = y[0]
    py = y[1]
    vx = y[2]
    vy = y[3]
    m = y[4]
    if m <= 0.0:
        return STATUS_MASS_DEPLETED
    gx, gy = grav_accel(mu, px, py)
    if kind == KIND_CLOSED_LOOP:
        r = math.hypot(px, py)
        v = math.hypot(vx, vy)
        gamma = math.atan2(px * vx + py * vy, abs(px * vy - py * vx))
        theta = solve_pitch_kernel(mu, r, v, gamma)
        if math.isnan(theta):
            return STATUS_NO_PITCH
        rel = theta - math.atan2(py, px)
        ux = math.sin(rel)
        uy = math.cos(rel)
    else:
        pvx = y[7]
        pvy = y[8]
        pv = math.hypot(pvx, pvy)
        if pv < 1e-30:
            return STATUS_SINGULAR_COSTATE
        ux = pvx / pv
        uy = pvy / pv
    acc = thrust / m
    dy[0] = vx
    dy[1] = vy
    dy[2] = gx + acc * ux
    dy[3] = gy + acc * uy
    dy[4] = -thrust / ve
    if kind == KIND_EXTREMAL:
        prx = y[5]
        pry = y[6]
        pvx = y[7]
        pvy = y[8]
        pv = math.hypot(pvx, pvy)
        r = math.hypot(px, py)
        c = mu / (r * r * r)
        ex = px / r
        ey = py / r
        gxx = c * (3.0 * ex * ex - 1.0)
        gxy = c * 3.0 * ex * ey
        gyy = c * (3.0 * ey * ey - 1.0)
        dy[5] = -(gxx * pvx + gxy * pvy)
        dy[6] = -(gxy * pvx + gyy * pvy)
        dy[7] = -prx
        dy[8] = -pry
        dy[9] = thrust * pv / (m * m)
    return STATUS_OK


# Dormand-Prince 5(4) tableau. The last row of A equals B5, so the final
# stage evaluation is reusable as the first stage of the next step.
_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = (19372.0 / 6561.0, -25360.0 / 2187.0,
                          64448.0 / 6561.0, -212.0 / 729.0)
_A61, _A62, _A63, _A64, _A65 = (9017.0 / 3168.0, -355.0 / 33.0,
                                46732.0 / 5247.0, 49.0 / 176.0,
                                -5103.0 / 18656.0)
_B1, _B3, _B4, _B5, _B6 = (35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0,
                           -2187.0 / 6784.0, 11.0 / 84.0)
# Fifth-order minus fourth-order weights, applied to the seven stages.
_E1, _E3, _E4, _E5, _E6, _E7 = (71.0 / 57600.0, -71.0 / 16695.0,
                                71.0 / 1920.0, -17253.0 / 339200.0,
                                22.0 / 525.0, -1.0 / 40.0)

_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0
_SAFETY = 0.9


@jit
def propagate(kind, mu, thrust, ve, y0, t0, t_out, rtol, atol, fixed_dt,
              max_steps):
    """Integrate one of the two flight systems over ``t_out``.

    Adaptive embedded 5(4) pairs are used unless ``fixed_dt`` is positive,
    in which case classic fourth-order steps of that size run instead
    (cross-check mode). Output rows are produced by stepping exactly onto
    each requested time.

    Returns:
        (status, t_reached, out) where ``out`` has one row per entry of
        ``t_out``. Rows past a failure are left unfilled.
    """
    n = y0.shape[0]
    nout = t_out.shape[0]
    out = np.empty((nout, n))
    y = y0.copy()
    ynew = np.empty(n)
    t = t0
    iout = 0
    while iout < nout and t_out[iout] <= t0:
        for j in range(n):
            out[iout, j] = y[j]
        iout += 1
    if iout >= nout:
        return STATUS_OK, t, out

    t_end = t_out[nout - 1]
    span = t_end - t0
    k = np.empty((7, n))
    ytmp = np.empty(n)

    status = rhs(kind, mu, thrust, ve, y, k[0])
    if status != STATUS_OK:
        return status, t, out

    if fixed_dt > 0.0:
        # Fixed-step fourth-order cross-check path.
        steps = 0
        while iout < nout:
            if steps >= max_steps:
                return STATUS_STEP_FAILURE, t, out
            h = fixed_dt
            landing = False
            if t + h > t_out[iout]:
                h = t_out[iout] - t
                landing = True
            status = rhs(kind, mu, thrust, ve, y, k[0])
            if status != STATUS_OK:
                return status, t, out
            for j in range(n):
                ytmp[j] = y[j] + 0.5 * h * k[0, j]
            status = rhs(kind, mu, thrust, ve, ytmp, k[1])
            if status != STATUS_OK:
                return status, t, out
            for j in range(n):
                ytmp[j] = y[j] + 0.5 * h * k[1, j]
            status = rhs(kind, mu, thrust, ve, ytmp, k[2])
            if status != STATUS_OK:
                return status, t, out
            for j in range(n):
                ytmp[j] = y[j] + h * k[2, j]
            status = rhs(kind, mu, thrust, ve, ytmp, k[3])
            if status != STATUS_OK:
                return status, t, out
            for j in range(n):
                y[j] += h / 6.0 * (k[0, j] + 2.0 * k[1, j] + 2.0 * k[2, j]
                                   + k[3, j])
            t = t_out[iout] if landing else t + h
            steps += 1
            while iout < nout and t_out[iout] <= t:
                for j in range(n):
                    out[iout, j] = y[j]
                iout += 1
        return STATUS_OK, t, out

    h = span * 1e-3
    if h > 10.0:
        h = 10.0
    steps = 0
    while iout < nout:
        if steps >= max_steps:
            return STATUS_STEP_FAILURE, t, out
        if h < 1e-12 * span:
            return STATUS_STEP_FAILURE, t, out
        clamped = False
        h_use = h
        if t + h_use >= t_out[iout]:
            h_use = t_out[iout] - t
            clamped = True

        stage_fail = False

        for j in range(n):
            ytmp[j] = y[j] + h_use * _A21 * k[0, j]
        status = rhs(kind, mu, thrust, ve, ytmp, k[1])
        if status != STATUS_OK:
            stage_fail = True
        if not stage_fail:
            for j in range(n):
                ytmp[j] = y[j] + h_use * (_A31 * k[0, j] + _A32 * k[1, j])
            status = rhs(kind, mu, thrust, ve, ytmp, k[2])
            if status != STATUS_OK:
                stage_fail = True
        if not stage_fail:
            for j in range(n):
                ytmp[j] = y[j] + h_use * (_A41 * k[0, j] + _A42 * k[1, j]
                                          + _A43 * k[2, j])
            status = rhs(kind, mu, thrust, ve, ytmp, k[3])
            if status != STATUS_OK:
                stage_fail = True
        if not stage_fail:
            for j in range(n):
                ytmp[j] = y[j] + h_use * (_A51 * k[0, j] + _A52 * k[1, j]
                                          + _A53 * k[2, j] + _A54 * k[3, j])
            status = rhs(kind, mu, thrust, ve, ytmp, k[4])
            if status != STATUS_OK:
                stage_fail = True
        if not stage_fail:
            for j in range(n):
                ytmp[j] = y[j] + h_use * (_A61 * k[0, j] + _A62 * k[1, j]
                                          + _A63 * k[2, j] + _A64 * k[3, j]
                                          + _A65 * k[4, j])
            status = rhs(kind, mu, thrust, ve, ytmp, k[5])
            if status != STATUS_OK:
                stage_fail = True
        if not stage_fail:
            for j in range(n):
                ynew[j] = y[j] + h_use * (_B1 * k[0, j] + _B3 * k[2, j]
                                          + _B4 * k[3, j] + _B5 * k[4, j]
                                          + _B6 * k[5, j])
            status = rhs(kind, mu, thrust, ve, ynew, k[6])
            if status != STATUS_OK:
                stage_fail = True

        steps += 1
        if stage_fail:
            # A lookahead stage left the feasible region. Shrink toward
            # the current (feasible) state; report the failure only once
            # the step has collapsed onto it.
            if h_use < 1e-12 * span or h_use < 1e-9:
                return status, t, out
            h = 0.25 * h_use
            continue

        err = 0.0
        bad = False
        for j in range(n):
            ej = h_use * (_E1 * k[0, j] + _E3 * k[2, j] + _E4 * k[3, j]
                          + _E5 * k[4, j] + _E6 * k[5, j] + _E7 * k[6, j])
            ay = abs(y[j])
            an = abs(ynew[j])
            sc = atol[j] + rtol * (ay if ay > an else an)
            q = ej / sc
            err += q * q
            if not math.isfinite(ynew[j]):
                bad = True
        err = math.sqrt(err / n)

        if bad or not math.isfinite(err):
            h = 0.25 * h_use
            continue

        if err <= 1.0:
            t = t + h_use
            for j in range(n):
                y[j] = ynew[j]
                k[0, j] = k[6, j]
            if clamped:
                t = t_out[iout]
            while iout < nout and t_out[iout] <= t:
                for j in range(n):
                    out[iout, j] = y[j]
                iout += 1
            if err == 0.0:
                factor = _MAX_FACTOR
            else:
                factor = _SAFETY * err ** -0.2
                if factor > _MAX_FACTOR:
                    factor = _MAX_FACTOR
                elif factor < _MIN_FACTOR:
                    factor = _MIN_FACTOR
            if clamped:
                # The step was shortened only to land on an output time;
                # keep the natural step so it cannot ratchet to zero.
                if h_use * factor > h:
                    h = h_use * factor
            else:
                h = h_use * factor
        else:
            factor = _SAFETY * err ** -0.2
            if factor < 0.1:
                factor = 0.1
            h = h_use * factor
    return STATUS_OK, t, out
