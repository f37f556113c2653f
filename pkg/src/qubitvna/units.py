"""Unit conventions and phase helpers.

All user-facing frequencies and amplitudes are cyclic (MHz, i.e. inverse
microseconds); everything handed to rotation generators or integrators is
angular (rad/us). The conversion happens here and nowhere else.
"""
import numpy as np

TWO_PI = 2.0 * np.pi


def to_angular(f_mhz):
    """Cyclic MHz -> angular rad/us."""
    return TWO_PI * np.asarray(f_mhz, dtype=float)


def to_cyclic(w_rad_per_us):
    """Angular rad/us -> cyclic MHz."""
    return np.asarray(w_rad_per_us, dtype=float) / TWO_PI


def wrap_phase(phi):
    """Wrap angle(s) to the half-open interval (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(phi, dtype=float), TWO_PI)
