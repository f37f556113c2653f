"""Pure-Python Dormand-Prince 4(5) integrator for the driven Bloch equations.

Algorithmically identical to the compiled twin in ``_bloch_core.pyx``; kept
in plain scalar arithmetic so both implementations execute the same
floating-point expressions in the same order.

The equation of motion is

    dv/dt = h(t) x v - (g2 vx, g2 vy, g1 (vz + 1))

with the field (all angular, rad/us)

    h(t) = (cx0 + cx1 cos(om_a t + ph_a), 0, cz0 + cz1 cos(om_b t + ph_b)).
"""
import math

import numpy as np


class IntegrationError(RuntimeError):
    """Raised on step-size underflow or a non-finite state."""


# Dormand-Prince coefficients (DOPRI5, FSAL).
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
# b - b* (embedded 4th-order error weights)
_E1, _E3, _E4, _E5, _E6, _E7 = (71.0 / 57600.0, -71.0 / 16695.0,
                                71.0 / 1920.0, -17253.0 / 339200.0,
                                22.0 / 525.0, -1.0 / 40.0)

_C2, _C3, _C4, _C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0

_MAX_REJECTS = 60


def bloch_evolve(cx0, cx1, om_a, ph_a, cz0, cz1, om_b, ph_b, g1, g2,
                 v0, t_eval, rtol, atol, max_step):
    """Integrate the Bloch equations from t=0, sampling at ``t_eval``.

    Returns an array of shape ``(len(t_eval), 3)``.
    """
    t_eval = np.ascontiguousarray(t_eval, dtype=float)
    n_out = t_eval.shape[0]
    out = np.empty((n_out, 3), dtype=float)
    if n_out == 0:
        return out
    if t_eval[0] < 0.0:
        raise ValueError("t_eval must start at or after 0")

    vx, vy, vz = float(v0[0]), float(v0[1]), float(v0[2])
    t = 0.0
    i_out = 0
    while i_out < n_out and t_eval[i_out] <= 0.0:
        out[i_out, 0], out[i_out, 1], out[i_out, 2] = vx, vy, vz
        i_out += 1
    if i_out == n_out:
        return out

    def rhs(tt, x, y, z):
        hx = cx0 + cx1 * math.cos(om_a * tt + ph_a)
        hz = cz0 + cz1 * math.cos(om_b * tt + ph_b)
        return (-hz * y - g2 * x,
                hz * x - hx * z - g2 * y,
                hx * y - g1 * (z + 1.0))

    k1x, k1y, k1z = rhs(t, vx, vy, vz)
    h_prop = max_step
    rejects = 0

    while i_out < n_out:
        t_target = t_eval[i_out]
        h = h_prop
        if h > max_step:
            h = max_step
        clipped = False
        if t + h >= t_target:
            h = t_target - t
            clipped = True
        if h <= 1e-15 * max(1.0, abs(t)):
            if clipped:
                # Output time effectively reached.
                t = t_target
                out[i_out, 0], out[i_out, 1], out[i_out, 2] = vx, vy, vz
                i_out += 1
                continue
            raise IntegrationError(f"step size underflow at t={t:.6e} us")

        # Stage evaluations.
        ax = vx + h * _A21 * k1x
        ay = vy + h * _A21 * k1y
        az = vz + h * _A21 * k1z
        k2x, k2y, k2z = rhs(t + _C2 * h, ax, ay, az)

        ax = vx + h * (_A31 * k1x + _A32 * k2x)
        ay = vy + h * (_A31 * k1y + _A32 * k2y)
        az = vz + h * (_A31 * k1z + _A32 * k2z)
        k3x, k3y, k3z = rhs(t + _C3 * h, ax, ay, az)

        ax = vx + h * (_A41 * k1x + _A42 * k2x + _A43 * k3x)
        ay = vy + h * (_A41 * k1y + _A42 * k2y + _A43 * k3y)
        az = vz + h * (_A41 * k1z + _A42 * k2z + _A43 * k3z)
        k4x, k4y, k4z = rhs(t + _C4 * h, ax, ay, az)

        ax = vx + h * (_A51 * k1x + _A52 * k2x + _A53 * k3x + _A54 * k4x)
        ay = vy + h * (_A51 * k1y + _A52 * k2y + _A53 * k3y + _A54 * k4y)
        az = vz + h * (_A51 * k1z + _A52 * k2z + _A53 * k3z + _A54 * k4z)
        k5x, k5y, k5z = rhs(t + _C5 * h, ax, ay, az)

        ax = vx + h * (_A61 * k1x + _A62 * k2x + _A63 * k3x + _A64 * k4x
                       + _A65 * k5x)
        ay = vy + h * (_A61 * k1y + _A62 * k2y + _A63 * k3y + _A64 * k4y
                       + _A65 * k5y)
        az = vz + h * (_A61 * k1z + _A62 * k2z + _A63 * k3z + _A64 * k4z
                       + _A65 * k5z)
        k6x, k6y, k6z = rhs(t + h, ax, ay, az)

        nx = vx + h * (_B1 * k1x + _B3 * k3x + _B4 * k4x + _B5 * k5x
                       + _B6 * k6x)
        ny = vy + h * (_B1 * k1y + _B3 * k3y + _B4 * k4y + _B5 * k5y
                       + _B6 * k6y)
        nz = vz + h * (_B1 * k1z + _B3 * k3z + _B4 * k4z + _B5 * k5z
                       + _B6 * k6z)
        k7x, k7y, k7z = rhs(t + h, nx, ny, nz)

        ex = h * (_E1 * k1x + _E3 * k3x + _E4 * k4x + _E5 * k5x + _E6 * k6x
                  + _E7 * k7x)
        ey = h * (_E1 * k1y + _E3 * k3y + _E4 * k4y + _E5 * k5y + _E6 * k6y
                  + _E7 * k7y)
        ez = h * (_E1 * k1z + _E3 * k3z + _E4 * k4z + _E5 * k5z + _E6 * k6z
                  + _E7 * k7z)

        sx = atol + rtol * max(abs(vx), abs(nx))
        sy = atol + rtol * max(abs(vy), abs(ny))
        sz = atol + rtol * max(abs(vz), abs(nz))
        err = math.sqrt(((ex / sx) ** 2 + (ey / sy) ** 2
                         + (ez / sz) ** 2) / 3.0)

        if err == 0.0:
            fac = 5.0
        else:
            fac = 0.9 * err ** -0.2
            if fac < 0.2:
                fac = 0.2
            elif fac > 5.0:
                fac = 5.0

        if err <= 1.0:
            t = t_target if clipped else t + h
            vx, vy, vz = nx, ny, nz
            k1x, k1y, k1z = k7x, k7y, k7z  # FSAL
            if not (math.isfinite(vx) and math.isfinite(vy)
                    and math.isfinite(vz)):
                raise IntegrationError(f"non-finite state at t={t:.6e} us")
            rejects = 0
            if clipped:
                out[i_out, 0], out[i_out, 1], out[i_out, 2] = vx, vy, vz
                i_out += 1
                # A clipped step says nothing about the controller's
                # preferred size; keep the standing proposal.
                h_prop = max(h_prop, h * fac)
            else:
                h_prop = h * fac
        else:
            rejects += 1
            if rejects > _MAX_REJECTS:
                raise IntegrationError(
                    f"step control failed to converge at t={t:.6e} us")
            h_prop = h * fac

    return out
