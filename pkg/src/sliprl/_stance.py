"""Compiled stance-phase integrator.

Adaptive Dormand-Prince RK45 on the planar spring-leg dynamics with
event localization (liftoff / ground contact) by bisection on the step
size. Kept free of Python objects so numba can compile it once and the
grid / rollout loops stay cheap.
"""

import numpy as np
from numba import njit

# stance termination codes
LIFTOFF = 0
FALL = 1
NO_EVENT = 2
STEP_UNDERFLOW = 3

_T_MAX = 10.0  # hard cap; physical stance lasts a fraction of a second


@njit(cache=True)
def _rhs(u, x_f, k_over_m, l0, g):
    dx = u[0] - x_f
    l = np.sqrt(dx * dx + u[1] * u[1])
    a = k_over_m * (l0 - l) / l
    out = np.empty(4)
    out[0] = u[2]
    out[1] = u[3]
    out[2] = a * dx
    out[3] = a * u[1] - g
    return out


@njit(cache=True)
def _dopri_step(u, h, x_f, k_over_m, l0, g):
    """One RK45(4) step. Returns (5th-order solution, embedded error)."""
    k1 = _rhs(u, x_f, k_over_m, l0, g)
    k2 = _rhs(u + h * (0.2 * k1), x_f, k_over_m, l0, g)
    k3 = _rhs(u + h * (3.0 / 40.0 * k1 + 9.0 / 40.0 * k2), x_f, k_over_m, l0, g)
    k4 = _rhs(u + h * (44.0 / 45.0 * k1 - 56.0 / 15.0 * k2 + 32.0 / 9.0 * k3),
              x_f, k_over_m, l0, g)
    k5 = _rhs(u + h * (19372.0 / 6561.0 * k1 - 25360.0 / 2187.0 * k2
                       + 64448.0 / 6561.0 * k3 - 212.0 / 729.0 * k4),
              x_f, k_over_m, l0, g)
    k6 = _rhs(u + h * (9017.0 / 3168.0 * k1 - 355.0 / 33.0 * k2
                       + 46732.0 / 5247.0 * k3 + 49.0 / 176.0 * k4
                       - 5103.0 / 18656.0 * k5),
              x_f, k_over_m, l0, g)
    u5 = u + h * (35.0 / 384.0 * k1 + 500.0 / 1113.0 * k3 + 125.0 / 192.0 * k4
                  - 2187.0 / 6784.0 * k5 + 11.0 / 84.0 * k6)
    k7 = _rhs(u5, x_f, k_over_m, l0, g)
    u4 = u + h * (5179.0 / 57600.0 * k1 + 7571.0 / 16695.0 * k3
                  + 393.0 / 640.0 * k4 - 92097.0 / 339200.0 * k5
                  + 187.0 / 2100.0 * k6 + 1.0 / 40.0 * k7)
    return u5, u5 - u4


@njit(cache=True)
def _err_norm(err, u, u_new, rel_tol, abs_tol):
    s = 0.0
    for i in range(4):
        sc = abs_tol + rel_tol * max(abs(u[i]), abs(u_new[i]))
        e = err[i] / sc
        s += e * e
    return np.sqrt(s / 4.0)


@njit(cache=True)
def _leg_len(u, x_f, l0):
    dx = u[0] - x_f
    return np.sqrt(dx * dx + u[1] * u[1])


@njit(cache=True)
def _locate(u, h, x_f, k_over_m, l0, g, event_tol, mode):
    """Bisect the step size until the event residual is below event_tol.

    mode 0: liftoff, residual l - l0 (negative before the event).
    mode 1: fall, residual y (positive before the event).
    Returns (h_event, state at event).
    """
    lo = 0.0
    hi = h
    u_ev, _ = _dopri_step(u, hi, x_f, k_over_m, l0, g)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        u_mid, _ = _dopri_step(u, mid, x_f, k_over_m, l0, g)
        if mode == 0:
            resid = _leg_len(u_mid, x_f, l0) - l0
        else:
            resid = u_mid[1]
        if abs(resid) < event_tol:
            return mid, u_mid
        crossed = resid >= 0.0 if mode == 0 else resid <= 0.0
        if crossed:
            hi = mid
            u_ev = u_mid
        else:
            lo = mid
        if hi - lo <= 1e-16 * max(1.0, hi):
            break
    return hi, u_ev


@njit(cache=True)
def integrate_stance(x, y, vx, vy, x_f, m, k, l0, g,
                     rel_tol, abs_tol, event_tol, max_step):
    """Integrate from touchdown until liftoff (l = l0) or ground contact
    (y = 0). Returns (code, t, x, y, vx, vy)."""
    k_over_m = k / m
    u = np.empty(4)
    u[0] = x
    u[1] = y
    u[2] = vx
    u[3] = vy
    t = 0.0
    h = min(1e-4, max_step)
    prev_lift = _leg_len(u, x_f, l0) - l0  # 0 at touchdown, then compresses
    while t < _T_MAX:
        if h < 1e-14:
            return STEP_UNDERFLOW, t, u[0], u[1], u[2], u[3]
        u_new, err = _dopri_step(u, h, x_f, k_over_m, l0, g)
        en = _err_norm(err, u, u_new, rel_tol, abs_tol)
        if en <= 1.0:
            lift = _leg_len(u_new, x_f, l0) - l0
            h_lift = -1.0
            h_fall = -1.0
            if prev_lift < 0.0 and lift >= 0.0:
                h_lift, u_lift = _locate(u, h, x_f, k_over_m, l0, g,
                                         event_tol, 0)
            if u_new[1] <= 0.0:
                h_fall, u_fall = _locate(u, h, x_f, k_over_m, l0, g,
                                         event_tol, 1)
            if h_lift >= 0.0 and (h_fall < 0.0 or h_lift <= h_fall):
                return (LIFTOFF, t + h_lift,
                        u_lift[0], u_lift[1], u_lift[2], u_lift[3])
            if h_fall >= 0.0:
                return (FALL, t + h_fall,
                        u_fall[0], u_fall[1], u_fall[2], u_fall[3])
            t += h
            u = u_new
            prev_lift = lift
        fac = 0.9 * en ** -0.2 if en > 0.0 else 5.0
        if fac < 0.2:
            fac = 0.2
        elif fac > 5.0:
            fac = 5.0
        h = min(h * fac, max_step)
    return NO_EVENT, t, u[0], u[1], u[2], u[3]
