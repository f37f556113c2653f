"""The virtual experiment: tomography records with shot noise.

A record holds the shot-averaged Bloch components of the driven qubit,
reconstructed in the first rotating frame, for a sweep of pulse durations.
Readout is a per-axis binomial draw; every (duration, axis) point uses its
own counter-based RNG stream keyed by (seed, duration index, axis), so
records are bit-identical for a given seed regardless of evaluation order.

Injectable imperfections mirror what a real setup does:

* spontaneous detuning: the qubit frequency shifts while a strong x drive
  is on, adding to the detuning in both scan types;
* tomography phase error: the tomography axes are rotated about z with
  respect to the drive axes, so recorded components are
  ``exp(-err * L_z) v``;
* readout infidelity: a symmetric bit flip shrinking <sigma> by
  ``2 * fidelity - 1``.
"""
import csv
import json
import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from . import dynamics, so3
from .dynamics import DriveConfig, Frame
from .units import to_angular

AXES = ("x", "y", "z")

MIN_GRID_BUDGET = 16
POINTS_PER_PERIOD_MIN = 8
PERIODS_MIN = 2.0
PERIODS_MAX = 4.0


class CoverageWarning(UserWarning):
    """Duration grid too short to resolve the expected slow oscillation."""


@dataclass(frozen=True)
class ImperfectionConfig:
    spontaneous_detuning_mhz: float = 0.0
    detuning_ax_threshold_mhz: float = 0.0
    tomography_phase_error_rad: float = 0.0
    readout_fidelity: float = 1.0

    def __post_init__(self):
        if not 0.5 < self.readout_fidelity <= 1.0:
            raise ValueError("readout fidelity must lie in (0.5, 1]")

    def detuning_shift(self, ax_mhz):
        if (self.spontaneous_detuning_mhz != 0.0
                and ax_mhz > self.detuning_ax_threshold_mhz):
            return self.spontaneous_detuning_mhz
        return 0.0


NO_IMPERFECTIONS = ImperfectionConfig()


@dataclass
class TomographyRecord:
    """Per-duration, per-axis expectation-value estimates.

    ``shots == 0`` marks a noise-free record (exact projections).
    """

    durations: np.ndarray          # us, strictly increasing
    estimates: np.ndarray          # (n, 3), columns x, y, z in [-1, 1]
    shots: int
    frame: Frame
    metadata: dict

    def __post_init__(self):
        self.durations = np.asarray(self.durations, dtype=float)
        self.estimates = np.asarray(self.estimates, dtype=float)
        if np.any(np.diff(self.durations) <= 0):
            raise ValueError("durations must be strictly increasing")
        if self.estimates.shape != (self.durations.size, 3):
            raise ValueError("need one estimate per duration and axis")
        if np.any(np.abs(self.estimates) > 1.0 + 1e-12):
            raise ValueError("estimates must lie in [-1, 1]")
        if self.shots < 0:
            raise ValueError("shots must be >= 1 (0 = noise-free)")

    def to_csv(self, path, sidecar_path=None):
        with open(path, "w", newline="\n") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["duration_us", "axis", "estimate", "shots"])
            for i, t in enumerate(self.durations):
                for j, axis in enumerate(AXES):
                    writer.writerow([f"{t:.9g}", axis,
                                     f"{self.estimates[i, j]:.9g}",
                                     str(self.shots)])
        if sidecar_path is not None:
            side = dict(self.metadata)
            side["frame"] = self.frame.value
            side["shots"] = self.shots
            with open(sidecar_path, "w") as fh:
                json.dump(side, fh, indent=2, sort_keys=True)
                fh.write("\n")

    @classmethod
    def from_csv(cls, path, sidecar_path=None):
        rows = {}
        shots = 0
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header != ["duration_us", "axis", "estimate", "shots"]:
                raise ValueError(f"unexpected record CSV header: {header}")
            for t_s, axis, est, shots_s in reader:
                rows.setdefault(float(t_s), {})[axis] = float(est)
                shots = int(shots_s)
        durations = np.array(sorted(rows))
        estimates = np.array([[rows[t][a] for a in AXES] for t in durations])
        frame = Frame.FIRST
        metadata = {}
        if sidecar_path is not None:
            with open(sidecar_path) as fh:
                metadata = json.load(fh)
            frame = Frame(metadata.pop("frame", "first"))
            metadata.pop("shots", None)
        return cls(durations, estimates, shots, frame, metadata)


def rng_stream(seed, *key):
    """Counter-based generator for the sub-stream addressed by ``key``."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(key))
    return np.random.Generator(np.random.Philox(ss))


def sample_expectation(v, axis, shots, rng, readout_fidelity=1.0):
    """Shot-averaged estimate of one Bloch component.

    Draws ``k ~ Binomial(shots, (1 + <sigma_axis> * (2 fid - 1)) / 2)`` and
    returns ``2 k / shots - 1``. ``rng`` is a seed or a Generator.
    """
    v = np.asarray(v, dtype=float)
    if np.linalg.norm(v) > 1.0 + 1e-9:
        raise ValueError(f"unphysical Bloch vector with norm {np.linalg.norm(v)}")
    if shots < 1:
        raise ValueError("shots must be >= 1")
    if not isinstance(rng, np.random.Generator):
        rng = rng_stream(int(rng))
    component = float(v[AXES.index(axis)])
    fidelity_factor = 2.0 * readout_fidelity - 1.0
    p = 0.5 * (1.0 + component * fidelity_factor)
    p = min(max(p, 0.0), 1.0)
    k = rng.binomial(int(shots), p)
    return 2.0 * k / shots - 1.0


def _scan(drive, durations, shots, imperfections, seed, dec):
    imp = imperfections or NO_IMPERFECTIONS
    durations = np.asarray(durations, dtype=float)
    shift = imp.detuning_shift(drive.ax)
    drive_eff = (replace(drive, omega0=drive.omega0 + shift) if shift
                 else drive)
    traj = dynamics.evolve_first_frame(drive_eff, dynamics.GROUND_STATE,
                                       durations, dec=dec)
    states = traj.states
    err = imp.tomography_phase_error_rad
    if err != 0.0:
        rot = so3.rotation_matrix(np.array([0.0, 0.0, -1.0]), err)
        states = states @ rot.T
    if shots == 0:
        estimates = np.clip(states, -1.0, 1.0)
    else:
        estimates = np.empty_like(states)
        for i in range(durations.size):
            for j, axis in enumerate(AXES):
                rng = rng_stream(seed, i, j)
                estimates[i, j] = sample_expectation(
                    states[i], axis, shots, rng, imp.readout_fidelity)
    metadata = {
        "seed": int(seed),
        "drive": {
            "omega0_mhz": drive.omega0, "ax_mhz": drive.ax,
            "phix_rad": drive.phix, "omegax_mhz": drive.omegax,
            "az_mhz": drive.az, "phiz_rad": drive.phiz,
            "omegaz_mhz": drive.omegaz, "z_enabled": drive.z_enabled,
        },
        "imperfections": {
            "spontaneous_detuning_mhz": imp.spontaneous_detuning_mhz,
            "detuning_ax_threshold_mhz": imp.detuning_ax_threshold_mhz,
            "tomography_phase_error_rad": imp.tomography_phase_error_rad,
            "readout_fidelity": imp.readout_fidelity,
        },
    }
    return TomographyRecord(durations, estimates, shots, Frame.FIRST,
                            metadata)


def run_rabi_scan(drive, durations, shots, imperfections=None, seed=0,
                  dec=None, extra_metadata=None):
    """Duration sweep with the z drive off; record in the first frame."""
    if drive.z_enabled:
        raise ValueError("rabi scan requires the z drive to be disabled")
    record = _scan(drive, durations, shots, imperfections, seed, dec)
    record.metadata["scan"] = "rabi"
    record.metadata.update(extra_metadata or {})
    return record


def run_dressed_scan(drive, durations, shots, imperfections=None, seed=0,
                     dec=None, extra_metadata=None):
    """Duration sweep with simultaneous x and z drives.

    Warns when the grid spans less than 1.5 periods of the expected slow
    oscillation; the downstream fit is ill-conditioned in that case.
    """
    if not drive.z_enabled:
        raise ValueError("dressed scan requires the z drive to be enabled")
    if drive.omegaz <= 0:
        raise ValueError("dressed scan requires a positive z-drive frequency")
    omega_big = dynamics.rabi_frequency(drive.ax, drive.delta_omega)
    coverage_ok = True
    if omega_big > 0 and drive.az > 0:
        omega_small = dynamics.dressed_drive_rate(drive.az, drive.ax,
                                                  omega_big)
        span = float(np.max(durations))
        if omega_small > 0 and span < 1.5 / omega_small:
            coverage_ok = False
            warnings.warn(
                f"duration span {span:.3g} us covers less than 1.5 periods "
                f"of the expected {omega_small:.3g} MHz oscillation",
                CoverageWarning)
    record = _scan(drive, durations, shots, imperfections, seed, dec)
    record.metadata["scan"] = "dressed"
    record.metadata["coverage_ok"] = coverage_ok
    record.metadata.update(extra_metadata or {})
    return record


@dataclass(frozen=True)
class GridSpec:
    durations: np.ndarray
    step_us: float
    periods: float
    points_per_period: float
    aliases_fast_axis: bool

    def flags(self):
        return {
            "grid_step_us": self.step_us,
            "grid_periods": self.periods,
            "grid_points_per_period": self.points_per_period,
            "grid_aliases_fast_axis": self.aliases_fast_axis,
        }


def choose_sampling_grid(omega_big_r, omega_small_r, budget,
                         max_periods=PERIODS_MAX):
    """Duration grid resolving the slow rate with a fixed point budget.

    Guarantees >= 8 points per period over >= 2 periods of
    ``omega_small_r``. The fast axis at ``omega_big_r`` may be left
    sub-Nyquist; that is flagged, not an error.
    """
    if budget < MIN_GRID_BUDGET:
        raise ValueError(f"budget must be >= {MIN_GRID_BUDGET}, got {budget}")
    if omega_small_r <= 0:
        raise ValueError("expected slow rate must be positive")
    periods = min(max_periods, max(PERIODS_MIN, budget / (2.0 * POINTS_PER_PERIOD_MIN)))
    points_per_period = budget / periods
    if points_per_period < POINTS_PER_PERIOD_MIN:
        periods = budget / POINTS_PER_PERIOD_MIN
        points_per_period = POINTS_PER_PERIOD_MIN
    step = 1.0 / (points_per_period * omega_small_r)
    durations = step * np.arange(1, budget + 1)
    aliased = step > 1.0 / (2.0 * omega_big_r) if omega_big_r > 0 else False
    return GridSpec(durations, step, durations[-1] * omega_small_r,
                    points_per_period, bool(aliased))
