"""Rotation algebra on Bloch vectors.

Rotation-rate vectors are angular (rad/us). The sign convention is fixed by
the generators below: ``L_Z`` maps the x axis onto the y axis for a positive
angle, so ``exp(t * w . L) v`` rotates ``v`` right-handedly about ``w``.
"""
import numpy as np

_L_X = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]])
_L_Y = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 0.0], [-1.0, 0.0, 0.0]])
_L_Z = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
for _m in (_L_X, _L_Y, _L_Z):
    _m.flags.writeable = False

_AXES = {"x": _L_X, "y": _L_Y, "z": _L_Z}

# Below this total angle the Rodrigues coefficients switch to their series
# expansions to avoid 0/0.
_SMALL_ANGLE = 1e-6


def generator(axis):
    """Return a copy of the rotation generator L_x, L_y or L_z.

    ``axis`` is ``"x"``, ``"y"`` or ``"z"`` (case-insensitive).
    """
    try:
        return _AXES[axis.lower()].copy()
    except (KeyError, AttributeError):
        raise ValueError(f"axis must be one of 'x', 'y', 'z', got {axis!r}")


def skew(w):
    """Cross-product matrix of ``w``: ``skew(w) @ v == np.cross(w, v)``."""
    w = np.asarray(w, dtype=float)
    return np.array([[0.0, -w[2], w[1]],
                     [w[2], 0.0, -w[0]],
                     [-w[1], w[0], 0.0]])


def _rodrigues_coeffs(theta):
    """Coefficients (a, b) with exp(K) = I + a K + b K^2, K = skew(w), theta=|w|."""
    if theta < _SMALL_ANGLE:
        t2 = theta * theta
        return 1.0 - t2 / 6.0, 0.5 - t2 / 24.0
    return np.sin(theta) / theta, (1.0 - np.cos(theta)) / (theta * theta)


def rotation_matrix(rate, t):
    """Proper rotation ``exp(t * rate . L)`` via the Rodrigues closed form.

    ``rate`` is the angular-rate 3-vector (rad/us), ``t`` the duration (us).
    A zero rate returns the identity.
    """
    w = np.asarray(rate, dtype=float) * float(t)
    if not np.all(np.isfinite(w)):
        raise ValueError("rotation rate * time must be finite")
    theta = float(np.linalg.norm(w))
    K = skew(w)
    a, b = _rodrigues_coeffs(theta)
    return np.eye(3) + a * K + b * (K @ K)


def rotate(rate, t, v):
    """Apply ``rotation_matrix(rate, t)`` to a Bloch vector."""
    return rotation_matrix(rate, t) @ np.asarray(v, dtype=float)


def rotate_series(rate, times, v0):
    """Evaluate ``exp(t_k * rate . L) v0`` on a whole time grid at once.

    Returns an array of shape ``(len(times), 3)``. This is the closed-form
    trajectory of a uniform rotation and the workhorse of every fit model.
    """
    w = np.asarray(rate, dtype=float)
    times = np.asarray(times, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    speed = float(np.linalg.norm(w))
    if speed == 0.0:
        return np.tile(v0, (times.size, 1))
    n = w / speed
    v_par = np.dot(n, v0) * n
    v_perp = v0 - v_par
    n_cross_v = np.cross(n, v0)
    ang = speed * times
    return (v_par[None, :]
            + np.cos(ang)[:, None] * v_perp[None, :]
            + np.sin(ang)[:, None] * n_cross_v[None, :])


def rotate_about_axis(axis, angle, v):
    """Rotate ``v`` by ``angle`` (rad) about a coordinate axis."""
    rate = np.zeros(3)
    rate["xyz".index(axis.lower())] = 1.0
    return rotate(rate, float(angle), v)


def dexp_right(w):
    """Right Jacobian J_r of the exponential map at ``w``.

    Satisfies ``exp(skew(w + d)) ~= exp(skew(w)) @ exp(skew(J_r @ d))`` for
    small ``d``; used for analytic fit Jacobians.
    """
    w = np.asarray(w, dtype=float)
    theta = float(np.linalg.norm(w))
    K = skew(w)
    if theta < _SMALL_ANGLE:
        t2 = theta * theta
        b = 0.5 - t2 / 24.0
        c = 1.0 / 6.0 - t2 / 120.0
    else:
        b = (1.0 - np.cos(theta)) / (theta * theta)
        c = (theta - np.sin(theta)) / (theta ** 3)
    return np.eye(3) - b * K + c * (K @ K)
