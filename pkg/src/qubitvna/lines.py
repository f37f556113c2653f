"""Ground-truth and estimated transfer functions of the z control line.

A transfer function maps frequency (cyclic MHz) to the complex ratio
between the signal arriving at the qubit and the signal programmed at the
generator. Parametric models evaluate anywhere; sampled ones carry
per-point uncertainties and interpolate inside their coverage only.

All emitted phases are wrapped to (-pi, pi]; unwrapping is internal to the
delay fit.
"""
import csv
import math
from dataclasses import dataclass, replace

import numpy as np

from .units import TWO_PI, wrap_phase

# |H| below this is treated as a true singularity when dividing.
DIVISION_FLOOR = 1e-6

CSV_HEADER = ["freq_mhz", "amp", "phase_rad", "amp_sigma", "phase_sigma"]


class CoverageError(ValueError):
    """Evaluation requested outside a sampled transfer function's grid."""


class GridMismatchError(ValueError):
    """Two sampled transfer functions do not share a frequency grid."""


class DivisionFloorError(ValueError):
    """De-embedding attempted against a baseline below the amplitude floor."""

    def __init__(self, freqs):
        self.freqs = list(freqs)
        super().__init__("baseline amplitude below floor at "
                         f"{len(self.freqs)} frequencies: "
                         + ", ".join(f"{f:g} MHz" for f in self.freqs[:8]))


class TransferFunction:
    """Base class; subclasses implement ``response``."""

    def response(self, freqs_mhz):
        """Complex H at the given frequencies (cyclic MHz)."""
        raise NotImplementedError

    def amplitude_phase(self, freqs_mhz):
        """(|H|, arg H wrapped to (-pi, pi]); phase is NaN where |H| = 0."""
        h = self.response(freqs_mhz)
        amp = np.abs(h)
        phase = wrap_phase(np.angle(h))
        phase = np.where(amp == 0.0, np.nan, phase)
        return amp, phase

    def sample(self, freqs_mhz):
        """Evaluate onto a grid, producing a sampled transfer function."""
        freqs = np.asarray(freqs_mhz, dtype=float)
        amp, phase = self.amplitude_phase(freqs)
        zeros = np.zeros_like(freqs)
        return SampledTransferFunction(freqs, amp, np.nan_to_num(phase),
                                       zeros, zeros)


class UnityLine(TransferFunction):
    """Perfectly transparent line."""

    def response(self, freqs_mhz):
        return np.ones_like(np.asarray(freqs_mhz, dtype=float),
                            dtype=complex)


@dataclass(frozen=True)
class DelayLine(TransferFunction):
    """Pure delay: amplitude 1, phase -2 pi f tau."""

    tau_ns: float

    def __post_init__(self):
        if not math.isfinite(self.tau_ns):
            raise ValueError("delay must be finite")

    def response(self, freqs_mhz):
        f_ghz = np.asarray(freqs_mhz, dtype=float) * 1e-3
        return np.exp(-1j * TWO_PI * f_ghz * self.tau_ns)


@dataclass(frozen=True)
class StubParams:
    """Short-circuited shunt stub on a matched line.

    ``electrical_delay_ns`` is the one-way propagation time; the physical
    length never enters. ``loss_db_per_ns`` is the one-way attenuation per
    nanosecond of electrical delay at 1 GHz, scaled linearly in frequency.
    """

    electrical_delay_ns: float
    impedance_ratio: float = 1.0
    loss_db_per_ns: float = 0.0

    def __post_init__(self):
        if self.electrical_delay_ns <= 0:
            raise ValueError("electrical delay must be positive")
        if self.impedance_ratio <= 0:
            raise ValueError("impedance ratio must be positive")
        if self.loss_db_per_ns < 0:
            raise ValueError("loss must be non-negative")

    def notch_frequency_mhz(self, n=1):
        """n-th transmission notch, at n / (2 tau_e)."""
        if n < 1:
            raise ValueError("notch index starts at 1")
        return 1e3 * n / (2.0 * self.electrical_delay_ns)


@dataclass(frozen=True)
class ShortedStub(TransferFunction):
    """Transmission past a shorted shunt stub.

    Lossless: H = 2jr tan(th) / (1 + 2jr tan(th)), th = 2 pi f tau_e,
    evaluated in the numerically stable sin/cos form. Loss enters through a
    complex propagation angle with attenuation proportional to frequency.
    """

    params: StubParams

    def response(self, freqs_mhz):
        f_ghz = np.asarray(freqs_mhz, dtype=float) * 1e-3
        r = self.params.impedance_ratio
        theta = TWO_PI * f_ghz * self.params.electrical_delay_ns
        if self.params.loss_db_per_ns == 0.0:
            s, c = np.sin(theta), np.cos(theta)
            return 2j * r * s / (c + 2j * r * s)
        alpha = (math.log(10.0) / 20.0 * self.params.loss_db_per_ns
                 * self.params.electrical_delay_ns) * f_ghz
        gl = alpha + 1j * theta
        sh, ch = np.sinh(gl), np.cosh(gl)
        return 2.0 * r * sh / (ch + 2.0 * r * sh)


@dataclass(frozen=True)
class FirstOrderLowpass(TransferFunction):
    """Single-pole lowpass H = 1 / (1 + j f/fc)."""

    cutoff_mhz: float

    def __post_init__(self):
        if self.cutoff_mhz <= 0:
            raise ValueError("cutoff must be positive")

    def response(self, freqs_mhz):
        f = np.asarray(freqs_mhz, dtype=float)
        return 1.0 / (1.0 + 1j * f / self.cutoff_mhz)


@dataclass(frozen=True)
class CascadeLine(TransferFunction):
    """Pointwise product of parametric elements."""

    elements: tuple

    def response(self, freqs_mhz):
        out = np.ones_like(np.asarray(freqs_mhz, dtype=float), dtype=complex)
        for el in self.elements:
            out = out * el.response(freqs_mhz)
        return out


@dataclass(frozen=True)
class RatioLine(TransferFunction):
    """Pointwise quotient numerator/denominator with a division floor."""

    numerator: TransferFunction
    denominator: TransferFunction
    floor: float = DIVISION_FLOOR

    def response(self, freqs_mhz):
        freqs = np.atleast_1d(np.asarray(freqs_mhz, dtype=float))
        den = self.denominator.response(freqs)
        bad = np.abs(den) < self.floor
        if np.any(bad):
            raise DivisionFloorError(freqs[bad])
        out = self.numerator.response(freqs) / den
        return out if np.ndim(freqs_mhz) else out[0]


class SampledTransferFunction(TransferFunction):
    """H on a finite grid with per-point 1-sigma uncertainties."""

    def __init__(self, freq_mhz, amp, phase_rad, amp_sigma=None,
                 phase_sigma=None):
        self.freq_mhz = np.asarray(freq_mhz, dtype=float)
        self.amp = np.asarray(amp, dtype=float)
        self.phase_rad = wrap_phase(phase_rad)
        n = self.freq_mhz.size
        self.amp_sigma = (np.zeros(n) if amp_sigma is None
                          else np.asarray(amp_sigma, dtype=float))
        self.phase_sigma = (np.zeros(n) if phase_sigma is None
                            else np.asarray(phase_sigma, dtype=float))
        if self.freq_mhz.ndim != 1:
            raise ValueError("frequency grid must be one-dimensional")
        if np.any(self.freq_mhz <= 0) or np.any(np.diff(self.freq_mhz) <= 0):
            raise ValueError("frequencies must be positive and strictly "
                             "increasing")
        for arr, name in ((self.amp, "amp"), (self.phase_rad, "phase_rad"),
                          (self.amp_sigma, "amp_sigma"),
                          (self.phase_sigma, "phase_sigma")):
            if arr.shape != (n,):
                raise ValueError(f"{name} must have one entry per frequency")
        if np.any(self.amp < 0):
            raise ValueError("amplitudes must be non-negative")

    def __len__(self):
        return self.freq_mhz.size

    def same_grid(self, other, rel=1e-12):
        if len(self) != len(other):
            return False
        return np.allclose(self.freq_mhz, other.freq_mhz, rtol=rel, atol=0.0)

    def response(self, freqs_mhz):
        """Interpolate |H| and unwrapped phase linearly inside coverage."""
        freqs = np.atleast_1d(np.asarray(freqs_mhz, dtype=float))
        lo, hi = self.freq_mhz[0], self.freq_mhz[-1]
        outside = (freqs < lo) | (freqs > hi)
        if np.any(outside):
            raise CoverageError(
                f"frequencies outside sampled coverage [{lo:g}, {hi:g}] MHz: "
                + ", ".join(f"{f:g}" for f in freqs[outside][:8]))
        amp = np.interp(freqs, self.freq_mhz, self.amp)
        phase = np.interp(freqs, self.freq_mhz, np.unwrap(self.phase_rad))
        out = amp * np.exp(1j * phase)
        return out if np.ndim(freqs_mhz) else out[0]

    def amplitude_phase(self, freqs_mhz):
        h = self.response(freqs_mhz)
        amp = np.abs(h)
        phase = wrap_phase(np.angle(h))
        phase = np.where(amp == 0.0, np.nan, phase)
        return amp, phase


def unity_line():
    return UnityLine()


def delay_line(tau_ns):
    return DelayLine(tau_ns)


def shorted_stub(params):
    return ShortedStub(params)


def first_order_lowpass(cutoff_mhz):
    return FirstOrderLowpass(cutoff_mhz)


def stub_loss_for_notch_depth(params, depth_db, n=1):
    """Loss setting that puts the n-th notch ``depth_db`` below unity.

    Solved numerically on the lossy stub model; useful to construct
    benchmark elements with a known dynamic range.
    """
    if depth_db <= 0:
        raise ValueError("depth must be positive dB")
    f_notch = params.notch_frequency_mhz(n)
    target = 10.0 ** (-depth_db / 20.0)
    lo, hi = 0.0, 1.0
    while _notch_amp(params, hi, f_notch) < target:
        hi *= 2.0
        if hi > 1e6:
            raise RuntimeError("loss solve failed to bracket")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _notch_amp(params, mid, f_notch) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _notch_amp(params, loss, f_notch):
    stub = ShortedStub(replace(params, loss_db_per_ns=loss))
    return float(np.abs(stub.response(np.array([f_notch]))[0]))


def _combine_sigmas(amp_out, amp1, s1, amp2, s2):
    """Quadrature on log-amplitude; identical for products and quotients."""
    rel1 = np.where(amp1 > 0, s1 / np.where(amp1 > 0, amp1, 1.0), 0.0)
    rel2 = np.where(amp2 > 0, s2 / np.where(amp2 > 0, amp2, 1.0), 0.0)
    return amp_out * np.hypot(rel1, rel2)


def cascade(a, b):
    """Complex product of two transfer functions.

    Sampled operands must share an identical grid (no implicit resampling);
    a parametric operand is evaluated on the sampled one's grid.
    """
    a_s = isinstance(a, SampledTransferFunction)
    b_s = isinstance(b, SampledTransferFunction)
    if not a_s and not b_s:
        return CascadeLine((a, b))
    if a_s and b_s:
        if not a.same_grid(b):
            raise GridMismatchError("sampled transfer functions must share "
                                    "an identical frequency grid")
    elif a_s:
        b = b.sample(a.freq_mhz)
    else:
        a = a.sample(b.freq_mhz)
    amp = a.amp * b.amp
    phase = wrap_phase(a.phase_rad + b.phase_rad)
    amp_sigma = _combine_sigmas(amp, a.amp, a.amp_sigma, b.amp, b.amp_sigma)
    phase_sigma = np.hypot(a.phase_sigma, b.phase_sigma)
    return SampledTransferFunction(a.freq_mhz, amp, phase, amp_sigma,
                                   phase_sigma)


def de_embed(with_element, baseline, floor=DIVISION_FLOOR):
    """Divide out a baseline response to isolate an inserted element.

    Uncertainties combine in quadrature on log-amplitude and on phase.
    """
    w_s = isinstance(with_element, SampledTransferFunction)
    b_s = isinstance(baseline, SampledTransferFunction)
    if not w_s and not b_s:
        return RatioLine(with_element, baseline, floor)
    if w_s and b_s:
        if not with_element.same_grid(baseline):
            raise GridMismatchError("de-embedding requires identical grids")
    elif w_s:
        baseline = baseline.sample(with_element.freq_mhz)
    else:
        with_element = with_element.sample(baseline.freq_mhz)
    low = baseline.amp < floor
    if np.any(low):
        raise DivisionFloorError(baseline.freq_mhz[low])
    amp = with_element.amp / baseline.amp
    phase = wrap_phase(with_element.phase_rad - baseline.phase_rad)
    amp_sigma = _combine_sigmas(amp, with_element.amp,
                                with_element.amp_sigma, baseline.amp,
                                baseline.amp_sigma)
    phase_sigma = np.hypot(with_element.phase_sigma, baseline.phase_sigma)
    return SampledTransferFunction(with_element.freq_mhz, amp, phase,
                                   amp_sigma, phase_sigma)


def apply_line(h, freq_mhz, a_prog_mhz, phi_prog_rad):
    """Drive parameters at the qubit for a programmed amplitude and phase.

    Returns ``(|H(f)| * A_prog, wrap(phi_prog + arg H(f)))``.
    """
    resp = h.response(np.array([float(freq_mhz)]))[0]
    amp = abs(resp)
    phase = float(wrap_phase(phi_prog_rad + np.angle(resp)))
    return amp * a_prog_mhz, phase


@dataclass
class DelayFitResult:
    """Outcome of removing the linear phase component."""

    residual: SampledTransferFunction
    tau_ns: float
    tau_sigma_ns: float
    intercept_rad: float
    unwrap_warning: bool


def fit_and_subtract_delay(h):
    """Fit unwrapped phase to ``-2 pi f tau + c`` and remove the slope.

    Weighted by the per-point phase uncertainties when present. The
    intercept stays in the residual; only the delay slope is removed.
    """
    if not isinstance(h, SampledTransferFunction):
        raise TypeError("delay fitting needs a sampled transfer function")
    if len(h) < 3:
        raise ValueError("need at least 3 points to fit a delay")
    phase = np.unwrap(h.phase_rad)
    steps = np.abs(np.diff(phase))
    unwrap_warning = bool(np.any(steps > 0.95 * np.pi))
    f_ghz = h.freq_mhz * 1e-3
    design = np.column_stack([-TWO_PI * f_ghz, np.ones_like(f_ghz)])
    if np.all(h.phase_sigma > 0):
        w = 1.0 / h.phase_sigma
        known_var = True
    else:
        w = np.ones_like(phase)
        known_var = False
    sol, res_ss, _, _ = np.linalg.lstsq(design * w[:, None], phase * w,
                                        rcond=None)
    tau, intercept = float(sol[0]), float(sol[1])
    cov = np.linalg.inv((design * w[:, None]).T @ (design * w[:, None]))
    if not known_var:
        dof = max(len(h) - 2, 1)
        resid = phase - design @ sol
        cov = cov * float(resid @ resid) / dof
    tau_sigma = math.sqrt(max(cov[0, 0], 0.0))
    residual_phase = wrap_phase(phase + TWO_PI * f_ghz * tau)
    residual = SampledTransferFunction(h.freq_mhz, h.amp, residual_phase,
                                       h.amp_sigma, h.phase_sigma)
    return DelayFitResult(residual, tau, tau_sigma, intercept,
                          unwrap_warning)


def write_transfer_csv(h, path, extra_columns=None):
    """Serialize a sampled transfer function (9 significant digits).

    ``extra_columns`` is an optional mapping of column name -> array.
    """
    extra = extra_columns or {}
    header = CSV_HEADER + list(extra)
    with open(path, "w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for i in range(len(h)):
            row = [h.freq_mhz[i], h.amp[i], h.phase_rad[i],
                   h.amp_sigma[i], h.phase_sigma[i]]
            row += [extra[k][i] for k in extra]
            writer.writerow(f"{v:.9g}" for v in row)


def read_transfer_csv(path):
    """Load a sampled transfer function; extra columns are ignored."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:5] != CSV_HEADER:
            raise ValueError(f"unexpected transfer CSV header: {header[:5]}")
        rows = [[float(x) for x in row[:5]] for row in reader if row]
    data = np.asarray(rows, dtype=float)
    if data.size == 0:
        raise ValueError("transfer CSV contains no data rows")
    return SampledTransferFunction(data[:, 0], data[:, 1], data[:, 2],
                                   data[:, 3], data[:, 4])
