# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Dormand-Prince 4(5) integrator for the driven Bloch equations.

Twin of ``_bloch_pure.bloch_evolve``; same algorithm, same step control,
same floating-point expression order. See that module for the equations.
"""
from libc.math cimport cos, fabs, isfinite, sqrt

import numpy as np

from qubitvna._bloch_pure import IntegrationError


DEF A21 = 1.0 / 5.0
DEF A31 = 3.0 / 40.0
DEF A32 = 9.0 / 40.0
DEF A41 = 44.0 / 45.0
DEF A42 = -56.0 / 15.0
DEF A43 = 32.0 / 9.0
DEF A51 = 19372.0 / 6561.0
DEF A52 = -25360.0 / 2187.0
DEF A53 = 64448.0 / 6561.0
DEF A54 = -212.0 / 729.0
DEF A61 = 9017.0 / 3168.0
DEF A62 = -355.0 / 33.0
DEF A63 = 46732.0 / 5247.0
DEF A64 = 49.0 / 176.0
DEF A65 = -5103.0 / 18656.0
DEF B1 = 35.0 / 384.0
DEF B3 = 500.0 / 1113.0
DEF B4 = 125.0 / 192.0
DEF B5 = -2187.0 / 6784.0
DEF B6 = 11.0 / 84.0
DEF E1 = 71.0 / 57600.0
DEF E3 = -71.0 / 16695.0
DEF E4 = 71.0 / 1920.0
DEF E5 = -17253.0 / 339200.0
DEF E6 = 22.0 / 525.0
DEF E7 = -1.0 / 40.0
DEF C2 = 1.0 / 5.0
DEF C3 = 3.0 / 10.0
DEF C4 = 4.0 / 5.0
DEF C5 = 8.0 / 9.0
DEF MAX_REJECTS = 60


def bloch_evolve(double cx0, double cx1, double om_a, double ph_a,
                 double cz0, double cz1, double om_b, double ph_b,
                 double g1, double g2, v0, t_eval,
                 double rtol, double atol, double max_step):
    """Integrate the Bloch equations from t=0, sampling at ``t_eval``."""
    cdef double[::1] tv = np.ascontiguousarray(t_eval, dtype=np.float64)
    cdef Py_ssize_t n_out = tv.shape[0]
    out_arr = np.empty((n_out, 3), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    if n_out == 0:
        return out_arr
    if tv[0] < 0.0:
        raise ValueError("t_eval must start at or after 0")

    cdef double vx = v0[0], vy = v0[1], vz = v0[2]
    cdef double t = 0.0
    cdef Py_ssize_t i_out = 0
    while i_out < n_out and tv[i_out] <= 0.0:
        out[i_out, 0] = vx
        out[i_out, 1] = vy
        out[i_out, 2] = vz
        i_out += 1
    if i_out == n_out:
        return out_arr

    cdef double hx, hz
    cdef double k1x, k1y, k1z, k2x, k2y, k2z, k3x, k3y, k3z
    cdef double k4x, k4y, k4z, k5x, k5y, k5z, k6x, k6y, k6z
    cdef double k7x, k7y, k7z
    cdef double ax, ay, az, nx, ny, nz, ex, ey, ez, sx, sy, sz
    cdef double h, h_prop, fac, err, t_target, tt, lim
    cdef int rejects = 0
    cdef bint clipped

    hx = cx0 + cx1 * cos(ph_a)
    hz = cz0 + cz1 * cos(ph_b)
    k1x = -hz * vy - g2 * vx
    k1y = hz * vx - hx * vz - g2 * vy
    k1z = hx * vy - g1 * (vz + 1.0)
    h_prop = max_step

    while i_out < n_out:
        t_target = tv[i_out]
        h = h_prop
        if h > max_step:
            h = max_step
        clipped = False
        if t + h >= t_target:
            h = t_target - t
            clipped = True
        lim = 1.0 if fabs(t) < 1.0 else fabs(t)
        if h <= 1e-15 * lim:
            if clipped:
                t = t_target
                out[i_out, 0] = vx
                out[i_out, 1] = vy
                out[i_out, 2] = vz
                i_out += 1
                continue
            raise IntegrationError(f"step size underflow at t={t:.6e} us")

        ax = vx + h * A21 * k1x
        ay = vy + h * A21 * k1y
        az = vz + h * A21 * k1z
        tt = t + C2 * h
        hx = cx0 + cx1 * cos(om_a * tt + ph_a)
        hz = cz0 + cz1 * cos(om_b * tt + ph_b)
        k2x = -hz * ay - g2 * ax
        k2y = hz * ax - hx * az - g2 * ay
        k2z = hx * ay - g1 * (az + 1.0)

        ax = vx + h * (A31 * k1x + A32 * k2x)
        ay = vy + h * (A31 * k1y + A32 * k2y)
        az = vz + h * (A31 * k1z + A32 * k2z)
        tt = t + C3 * h
        hx = cx0 + cx1 * cos(om_a * tt + ph_a)
        hz = cz0 + cz1 * cos(om_b * tt + ph_b)
        k3x = -hz * ay - g2 * ax
        k3y = hz * ax - hx * az - g2 * ay
        k3z = hx * ay - g1 * (az + 1.0)

        ax = vx + h * (A41 * k1x + A42 * k2x + A43 * k3x)
        ay = vy + h * (A41 * k1y + A42 * k2y + A43 * k3y)
        az = vz + h * (A41 * k1z + A42 * k2z + A43 * k3z)
        tt = t + C4 * h
        hx = cx0 + cx1 * cos(om_a * tt + ph_a)
        hz = cz0 + cz1 * cos(om_b * tt + ph_b)
        k4x = -hz * ay - g2 * ax
        k4y = hz * ax - hx * az - g2 * ay
        k4z = hx * ay - g1 * (az + 1.0)

        ax = vx + h * (A51 * k1x + A52 * k2x + A53 * k3x + A54 * k4x)
        ay = vy + h * (A51 * k1y + A52 * k2y + A53 * k3y + A54 * k4y)
        az = vz + h * (A51 * k1z + A52 * k2z + A53 * k3z + A54 * k4z)
        tt = t + C5 * h
        hx = cx0 + cx1 * cos(om_a * tt + ph_a)
        hz = cz0 + cz1 * cos(om_b * tt + ph_b)
        k5x = -hz * ay - g2 * ax
        k5y = hz * ax - hx * az - g2 * ay
        k5z = hx * ay - g1 * (az + 1.0)

        ax = vx + h * (A61 * k1x + A62 * k2x + A63 * k3x + A64 * k4x
                       + A65 * k5x)
        ay = vy + h * (A61 * k1y + A62 * k2y + A63 * k3y + A64 * k4y
                       + A65 * k5y)
        az = vz + h * (A61 * k1z + A62 * k2z + A63 * k3z + A64 * k4z
                       + A65 * k5z)
        tt = t + h
        hx = cx0 + cx1 * cos(om_a * tt + ph_a)
        hz = cz0 + cz1 * cos(om_b * tt + ph_b)
        k6x = -hz * ay - g2 * ax
        k6y = hz * ax - hx * az - g2 * ay
        k6z = hx * ay - g1 * (az + 1.0)

        nx = vx + h * (B1 * k1x + B3 * k3x + B4 * k4x + B5 * k5x + B6 * k6x)
        ny = vy + h * (B1 * k1y + B3 * k3y + B4 * k4y + B5 * k5y + B6 * k6y)
        nz = vz + h * (B1 * k1z + B3 * k3z + B4 * k4z + B5 * k5z + B6 * k6z)
        k7x = -hz * ny - g2 * nx
        k7y = hz * nx - hx * nz - g2 * ny
        k7z = hx * ny - g1 * (nz + 1.0)

        ex = h * (E1 * k1x + E3 * k3x + E4 * k4x + E5 * k5x + E6 * k6x
                  + E7 * k7x)
        ey = h * (E1 * k1y + E3 * k3y + E4 * k4y + E5 * k5y + E6 * k6y
                  + E7 * k7y)
        ez = h * (E1 * k1z + E3 * k3z + E4 * k4z + E5 * k5z + E6 * k6z
                  + E7 * k7z)

        sx = atol + rtol * (fabs(vx) if fabs(vx) > fabs(nx) else fabs(nx))
        sy = atol + rtol * (fabs(vy) if fabs(vy) > fabs(ny) else fabs(ny))
        sz = atol + rtol * (fabs(vz) if fabs(vz) > fabs(nz) else fabs(nz))
        err = sqrt(((ex / sx) * (ex / sx) + (ey / sy) * (ey / sy)
                    + (ez / sz) * (ez / sz)) / 3.0)

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
            vx = nx
            vy = ny
            vz = nz
            k1x = k7x
            k1y = k7y
            k1z = k7z
            if not (isfinite(vx) and isfinite(vy) and isfinite(vz)):
                raise IntegrationError(f"non-finite state at t={t:.6e} us")
            rejects = 0
            if clipped:
                out[i_out, 0] = vx
                out[i_out, 1] = vy
                out[i_out, 2] = vz
                i_out += 1
                # keep standing proposal after a clipped step
                if h * fac > h_prop:
                    h_prop = h * fac
            else:
                h_prop = h * fac
        else:
            rejects += 1
            if rejects > MAX_REJECTS:
                raise IntegrationError(
                    f"step control failed to converge at t={t:.6e} us")
            h_prop = h * fac

    return out_arr
