"""Time evolution of the driven two-level system.

The model, with all rates angular (rad/us) and ``sigma = (sx, sy, sz)``:

    H/hbar = w0/2 sz + ax cos(wx t + px) sx + az cos(wz t + pz) sz

which for Bloch vectors means ``dv/dt = h(t) x v`` with

    h(t) = (2 ax cos(wx t + px), 0, w0 + 2 az cos(wz t + pz)).

In the frame co-rotating with the x drive (Bloch rotation
``exp(-(wx t + px) L_z)``) the co-rotating part of the field is

    h'(t) = (ax, 0, dw + 2 az cos(wz t + pz)),      dw = w0 - wx,

dropping the counter-rotating x term (valid for ax << w0). Diagonalizing the
static part gives the dressed splitting OmegaR = sqrt(Ax^2 + dw^2); in the
frame co-rotating with the dressed precession at wz ~ OmegaR the z drive
reduces to a static field of magnitude omegaR = Az Ax / OmegaR along the
axis (0, -sin pz, cos pz), valid for omegaR << OmegaR.

User-facing frequencies/amplitudes here are cyclic MHz; conversion to
angular units happens at the integrator boundary only.

Relaxation is modeled as Bloch damping: rate 1/T1 pulls z toward -1 (the
ground state), rate 1/T2 damps x and y.
"""
import math
import warnings
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import so3
from .backend import bloch_evolve
from .units import TWO_PI, to_angular, wrap_phase

# First rotating-wave approximation (drive vs carrier) and second
# (dressed drive vs dressed splitting) validity thresholds.
RWA_DRIVE_PASS = 0.01
RWA_DRIVE_WARN = 0.05
RWA_DRESSED_PASS = 0.10
RWA_DRESSED_WARN = 0.25
# Two-level description degrades as the dressed splitting approaches a
# transmon-like anharmonicity.
ANHARMONICITY_MHZ = 300.0
TWO_LEVEL_WARN_FRACTION = 0.8

DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-12

GROUND_STATE = np.array([0.0, 0.0, -1.0])
GROUND_STATE.flags.writeable = False


class Frame(Enum):
    LAB = "lab"
    FIRST = "first"
    FIRST_DIAG = "first_diag"
    SECOND = "second"


class FrameError(ValueError):
    """Operation applied to a trajectory/record in the wrong frame."""


@dataclass(frozen=True)
class DriveConfig:
    """All drive knobs: frequencies/amplitudes cyclic MHz, phases rad."""

    omega0: float
    ax: float = 0.0
    phix: float = 0.0
    omegax: float = 0.0
    az: float = 0.0
    phiz: float = 0.0
    omegaz: float = 0.0
    z_enabled: bool = False

    def __post_init__(self):
        vals = (self.omega0, self.ax, self.phix, self.omegax,
                self.az, self.phiz, self.omegaz)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("drive parameters must be finite")
        if self.omega0 <= 0:
            raise ValueError("omega0 must be positive")
        if self.ax < 0 or self.az < 0:
            raise ValueError("drive amplitudes must be non-negative")
        for name in ("phix", "phiz"):
            p = getattr(self, name)
            if not (-math.pi < p <= math.pi):
                raise ValueError(f"{name} must lie in (-pi, pi], got {p}")

    @property
    def delta_omega(self):
        """Detuning of the x drive from the qubit (cyclic MHz)."""
        return self.omega0 - self.omegax

    def effective_az(self):
        """z-drive amplitude as seen by the dynamics (0 when disabled)."""
        return self.az if self.z_enabled else 0.0


@dataclass(frozen=True)
class DecoherenceParams:
    """Relaxation times in us; ``math.inf`` disables a channel."""

    t1: float = math.inf
    t2: float = math.inf

    def __post_init__(self):
        if self.t1 <= 0 or self.t2 <= 0:
            raise ValueError("relaxation times must be positive")
        if math.isfinite(self.t1) and math.isfinite(self.t2):
            if self.t2 > 2.0 * self.t1 + 1e-12:
                raise ValueError("t2 must not exceed 2 * t1")

    @property
    def gamma1(self):
        return 0.0 if math.isinf(self.t1) else 1.0 / self.t1

    @property
    def gamma2(self):
        return 0.0 if math.isinf(self.t2) else 1.0 / self.t2

    @property
    def coherent(self):
        return math.isinf(self.t1) and math.isinf(self.t2)


NO_DECOHERENCE = DecoherenceParams()


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    frame: Frame

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=float)
        if self.times.ndim != 1 or np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be a strictly increasing 1-d grid")
        if self.states.shape != (self.times.size, 3):
            raise ValueError("need exactly one 3-component state per time")


def rabi_frequency(ax, delta_omega):
    """Dressed splitting sqrt(Ax^2 + dw^2) (cyclic MHz)."""
    if ax < 0:
        raise ValueError("ax must be non-negative")
    return math.hypot(ax, delta_omega)


def dressed_drive_rate(az, ax, omega_big_r):
    """Slow drive rate of the dressed system, Az*Ax/OmegaR (cyclic MHz)."""
    if omega_big_r <= 0:
        raise ValueError("dressed splitting must be positive (undriven system)")
    return az * ax / omega_big_r


def mixing_angle(ax, delta_omega):
    """Tilt -arctan(dw/Ax) of the dressed axis off x, in (-pi/2, pi/2] for Ax>0."""
    if ax == 0 and delta_omega == 0:
        raise ValueError("mixing angle undefined for ax = delta_omega = 0")
    if ax < 0:
        raise ValueError("ax must be non-negative")
    return -math.atan2(delta_omega, ax)


def _check_times(times):
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ValueError("times must be a non-empty 1-d array")
    if times[0] < 0 or np.any(np.diff(times) <= 0):
        raise ValueError("times must be non-negative and strictly increasing")
    return times


def evolve_lab(drive, dec, v0, times, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL):
    """Integrate the full lab-frame Bloch equations (carrier resolved).

    The step ceiling is 1/20 of the fastest period in the problem, so the
    carrier at ``omega0`` is always resolved.
    """
    times = _check_times(times)
    dec = dec or NO_DECOHERENCE
    if math.isfinite(dec.t2) and times[-1] > 50.0 * dec.t2:
        raise ValueError("grid extends beyond 50*T2; signal is pure noise there")
    az = drive.effective_az()
    f_max = max(drive.omega0, abs(drive.omegax), abs(drive.omegaz),
                drive.ax, az, 1.0)
    states = bloch_evolve(
        0.0, 2.0 * to_angular(drive.ax), to_angular(drive.omegax), drive.phix,
        to_angular(drive.omega0), 2.0 * to_angular(az),
        to_angular(drive.omegaz), drive.phiz,
        dec.gamma1, dec.gamma2,
        np.asarray(v0, dtype=float), times, rtol, atol,
        1.0 / (20.0 * f_max))
    return Trajectory(times, states, Frame.LAB)


def to_first_frame(traj, omegax, phix):
    """Rotate a lab trajectory into the frame co-rotating with the x drive.

    Pointwise Bloch rotation ``exp(-(2 pi omegax t + phix) L_z)``.
    """
    if traj.frame is not Frame.LAB:
        raise FrameError(f"expected a lab-frame trajectory, got {traj.frame}")
    states = _rotate_z_series(traj.states, -(to_angular(omegax) * traj.times + phix))
    return Trajectory(traj.times, states, Frame.FIRST)


def to_lab_frame(traj, omegax, phix):
    """Inverse of :func:`to_first_frame`."""
    if traj.frame is not Frame.FIRST:
        raise FrameError(f"expected a first-frame trajectory, got {traj.frame}")
    states = _rotate_z_series(traj.states, to_angular(omegax) * traj.times + phix)
    return Trajectory(traj.times, states, Frame.LAB)


def _rotate_z_series(states, angles):
    c, s = np.cos(angles), np.sin(angles)
    out = np.empty_like(states)
    out[:, 0] = c * states[:, 0] - s * states[:, 1]
    out[:, 1] = s * states[:, 0] + c * states[:, 1]
    out[:, 2] = states[:, 2]
    return out


def evolve_first_frame(drive, v0, times, dec=None,
                       rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL):
    """Evolve in the first rotating frame.

    Without a z drive and without relaxation this is the exact closed-form
    rotation at rate 2 pi (Ax, 0, dw); otherwise the Bloch equations with
    the sinusoidal z field are integrated.
    """
    times = _check_times(times)
    dec = dec or NO_DECOHERENCE
    v0 = np.asarray(v0, dtype=float)
    az = drive.effective_az()
    dw = drive.delta_omega
    if az == 0.0 and dec.coherent:
        rate = to_angular(np.array([drive.ax, 0.0, dw]))
        return Trajectory(times, so3.rotate_series(rate, times, v0), Frame.FIRST)
    f_max = max(drive.ax, abs(dw), abs(drive.omegaz), az, 1.0)
    states = bloch_evolve(
        to_angular(drive.ax), 0.0, 0.0, 0.0,
        to_angular(dw), 2.0 * to_angular(az),
        to_angular(drive.omegaz), drive.phiz,
        dec.gamma1, dec.gamma2,
        v0, times, rtol, atol, 1.0 / (20.0 * f_max))
    return Trajectory(times, states, Frame.FIRST)


def second_frame_axis(phiz):
    """Unit rotation axis (0, -sin phiz, cos phiz) of the doubly-dressed drive."""
    return np.array([0.0, -math.sin(phiz), math.cos(phiz)])


def evolve_second_frame(omega_big_r, omega_small_r, phiz, v0, times):
    """Closed-form evolution in the second rotating frame.

    A uniform rotation of ``v0`` about ``(0, -sin phiz, cos phiz)`` at
    angular rate ``2 pi omega_small_r``; ``omega_big_r`` is carried for the
    validity ratio only.
    """
    times = _check_times(times)
    if omega_small_r < 0:
        raise ValueError("omega_small_r must be non-negative")
    if omega_big_r > 0 and omega_small_r / omega_big_r > RWA_DRESSED_WARN:
        warnings.warn("omega_R/Omega_R exceeds the dressed-frame validity "
                      "range; the closed form is unreliable here")
    rate = to_angular(omega_small_r) * second_frame_axis(phiz)
    return Trajectory(times, so3.rotate_series(rate, times, np.asarray(v0, float)),
                      Frame.SECOND)


class RwaLevel(Enum):
    PASS = "pass"
    WARN = "warn"
    FAIL = "fail"


@dataclass
class RwaReport:
    """Validity ratios of the two rotating-wave approximations."""

    drive_ratio: float            # Ax / omega0
    dressed_ratio: float          # omega_R / Omega_R
    drive_level: RwaLevel
    dressed_level: RwaLevel
    omega_big_r: float            # cyclic MHz
    two_level_warning: bool
    notes: list = field(default_factory=list)

    @property
    def level(self):
        order = (RwaLevel.PASS, RwaLevel.WARN, RwaLevel.FAIL)
        worst = max(self.drive_level, self.dressed_level,
                    key=lambda lv: order.index(lv))
        return worst


def _grade(ratio, pass_lim, warn_lim):
    if ratio < pass_lim:
        return RwaLevel.PASS
    if ratio <= warn_lim:
        return RwaLevel.WARN
    return RwaLevel.FAIL


def rwa_validity(drive, anharmonicity_mhz=ANHARMONICITY_MHZ):
    """Grade both rotating-wave approximations for a drive configuration."""
    drive_ratio = drive.ax / drive.omega0
    omega_big_r = rabi_frequency(drive.ax, drive.delta_omega)
    az = drive.effective_az()
    dressed_ratio = (dressed_drive_rate(az, drive.ax, omega_big_r)
                     / omega_big_r) if omega_big_r > 0 and az > 0 else 0.0
    report = RwaReport(
        drive_ratio=drive_ratio,
        dressed_ratio=dressed_ratio,
        drive_level=_grade(drive_ratio, RWA_DRIVE_PASS, RWA_DRIVE_WARN),
        dressed_level=_grade(dressed_ratio, RWA_DRESSED_PASS, RWA_DRESSED_WARN),
        omega_big_r=omega_big_r,
        two_level_warning=(omega_big_r
                           >= TWO_LEVEL_WARN_FRACTION * anharmonicity_mhz),
    )
    if report.two_level_warning:
        report.notes.append(
            f"dressed splitting {omega_big_r:.1f} MHz approaches the "
            f"two-level-model limit (~{anharmonicity_mhz:.0f} MHz)")
    return report


def detuned_rabi_peak_excursion(ax, delta_omega):
    """Peak excursion of <sz> from -1 under detuned driving: 2 Ax^2/OmegaR^2."""
    big = rabi_frequency(ax, delta_omega)
    if big == 0:
        return 0.0
    return 2.0 * ax * ax / (big * big)
