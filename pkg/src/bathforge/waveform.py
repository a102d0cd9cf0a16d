"""Control programs, noise composition, IQ conversion, quantization, export.

A control program is an ordered list of segments with constant Rabi
amplitude, drive phase and static detuning.  Composition samples the program
on a grid, folds in up to one dephasing and one amplitude noise realization,
and yields the polar pair (Omega(t), phi(t)); ``to_iq`` converts to the
Cartesian baseband pair I = Omega cos(phi), Q = Omega sin(phi) that a vector
signal generator consumes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ValidationError
from .grid import TimeGrid
from .noise import NoiseRealization, Quadrature


@dataclass(frozen=True)
class Segment:
    """One constant-control interval."""

    duration: float
    omega_c: float = 0.0     # Rabi amplitude, rad/s
    phi_c: float = 0.0       # drive phase, rad
    detuning: float = 0.0    # static detuning, rad/s

    def __post_init__(self):
        if self.duration <= 0:
            raise ValidationError("segment durations must be positive")


@dataclass(frozen=True)
class ControlProgram:
    """Contiguous sequence of segments starting at t = 0."""

    segments: tuple

    def __post_init__(self):
        segs = tuple(self.segments)
        object.__setattr__(self, "segments", segs)
        if not segs:
            raise ValidationError("a control program needs at least one segment")

    @property
    def duration(self) -> float:
        return sum(s.duration for s in self.segments)

    def boundaries(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum([s.duration for s in self.segments])])

    @staticmethod
    def pi_pulse(omega: float, phi: float = 0.0) -> "ControlProgram":
        return ControlProgram((Segment(duration=math.pi / omega, omega_c=omega, phi_c=phi),))

    @staticmethod
    def pi_half_pulse(omega: float, phi: float = 0.0) -> "ControlProgram":
        return ControlProgram((Segment(duration=0.5 * math.pi / omega, omega_c=omega, phi_c=phi),))

    @staticmethod
    def delay(duration: float) -> "ControlProgram":
        return ControlProgram((Segment(duration=duration),))


@dataclass(frozen=True)
class QuantizedIQ:
    """Integer sample codes for an IQ pair at a given bit depth."""

    codes_i: np.ndarray
    codes_q: np.ndarray
    bits: int
    full_scale: float
    snr_db: float

    @property
    def step(self) -> float:
        return self.full_scale / 2 ** (self.bits - 1)


@dataclass(frozen=True)
class IQWaveform:
    """Uniformly sampled baseband I/Q pair, optionally with quantized codes."""

    sample_rate: float
    i: np.ndarray
    q: np.ndarray
    quantized: Optional[QuantizedIQ] = None

    def __post_init__(self):
        if len(self.i) != len(self.q):
            raise ValidationError("I and Q must have equal length")
        if self.sample_rate <= 0:
            raise ValidationError("sample rate must be positive")


def compose(program: ControlProgram, grid: TimeGrid,
            dephasing: Optional[NoiseRealization] = None,
            amplitude: Optional[NoiseRealization] = None,
            amplitude_mode: str = "multiplicative",
            omega_ref: Optional[float] = None):
    """Sample the program with noise folded in; returns (Omega, phi, meta).

    Dephasing noise adds its accumulated phase: phi = phi_C + phi_N.
    Amplitude noise scales the drive, Omega = Omega_C (1 + beta), or adds to
    it, Omega = Omega_C + Omega_ref * beta, depending on ``amplitude_mode``
    (exactly one mode; ``omega_ref`` defaults to the largest segment
    amplitude for the additive mode).  Noise realizations must be sampled on
    the same grid used here.
    """
    if amplitude_mode not in ("multiplicative", "additive"):
        raise ValidationError("amplitude_mode must be 'multiplicative' or 'additive'")
    t = grid.times()
    if grid.t0 < -1e-15 or grid.duration > program.duration * (1 + 1e-12):
        raise ValidationError("grid extends beyond the program duration")
    for real, name in ((dephasing, "dephasing"), (amplitude, "amplitude")):
        if real is not None and real.grid != grid:
            raise ValidationError(f"{name} noise grid does not match the sampling grid")
    if dephasing is not None and dephasing.spec.quadrature is not Quadrature.DEPHASING:
        raise ValidationError("dephasing argument must carry a dephasing realization")
    if amplitude is not None and amplitude.spec.quadrature is not Quadrature.AMPLITUDE:
        raise ValidationError("amplitude argument must carry an amplitude realization")
    bounds = program.boundaries()
    idx = np.clip(np.searchsorted(bounds, t, side="right") - 1, 0, len(program.segments) - 1)
    om_c = np.array([s.omega_c for s in program.segments])[idx]
    phi_c = np.array([s.phi_c for s in program.segments])[idx]
    omega = om_c.astype(float)
    phi = phi_c.astype(float)
    if dephasing is not None:
        phi = phi + dephasing.phi_n
    if amplitude is not None:
        if amplitude_mode == "multiplicative":
            omega = omega * (1.0 + amplitude.beta)
        else:
            if omega_ref is None:
                omega_ref = max(s.omega_c for s in program.segments)
            omega = omega + omega_ref * amplitude.beta
    meta = {"amplitude_mode": amplitude_mode if amplitude is not None else None,
            "dephasing_spec": dephasing.spec.spec_hash() if dephasing else None,
            "amplitude_spec": amplitude.spec.spec_hash() if amplitude else None}
    return omega, phi, meta


def to_iq(omega: np.ndarray, phi: np.ndarray, sample_rate: float) -> IQWaveform:
    """Polar-to-Cartesian transform: I = Omega cos(phi), Q = Omega sin(phi)."""
    omega = np.asarray(omega, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if omega.shape != phi.shape:
        raise ValidationError("Omega and phi must have equal length")
    return IQWaveform(sample_rate=sample_rate,
                      i=omega * np.cos(phi), q=omega * np.sin(phi))


def to_polar(w: IQWaveform) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of :func:`to_iq`: (Omega, phi mod 2pi); phase is arbitrary where Omega = 0."""
    omega = np.hypot(w.i, w.q)
    phi = np.mod(np.arctan2(w.q, w.i), 2.0 * math.pi)
    return omega, phi


def quantize(w: IQWaveform, bits: int = 16,
             full_scale: Optional[float] = None) -> IQWaveform:
    """Symmetric mid-tread quantization to ``2**bits`` levels.

    Codes are round(x / step) with step = full_scale / 2**(bits-1); valid
    codes span +-(2**(bits-1) - 1), and samples that would round outside
    raise instead of clipping silently.  When ``full_scale`` is omitted it
    is chosen so the waveform peak maps exactly to the top code.  The
    injected error is at most half a step per sample; the resulting SNR is
    reported on the quantized block.
    """
    if bits < 2 or bits > 32:
        raise ValidationError("bits must be in [2, 32]")
    levels = 2 ** (bits - 1)
    peak = float(max(np.max(np.abs(w.i), initial=0.0), np.max(np.abs(w.q), initial=0.0)))
    if full_scale is None:
        full_scale = peak * levels / (levels - 1) if peak > 0 else 1.0
    if full_scale <= 0:
        raise ValidationError("full scale must be positive")
    step = full_scale / levels
    ci = np.round(w.i / step)
    cq = np.round(w.q / step)
    top = levels - 1
    if np.any(np.abs(ci) > top) or np.any(np.abs(cq) > top):
        raise ValidationError(
            f"samples exceed the representable range +-{top * step:g} "
            f"(full scale {full_scale:g}, {bits} bits); refusing to clip")
    dtype = np.int16 if bits <= 16 else np.int32
    err = np.sum((w.i - ci * step) ** 2) + np.sum((w.q - cq * step) ** 2)
    sig = np.sum(w.i**2) + np.sum(w.q**2)
    snr_db = math.inf if err == 0 else 10.0 * math.log10(sig / err)
    qz = QuantizedIQ(codes_i=ci.astype(dtype), codes_q=cq.astype(dtype),
                     bits=bits, full_scale=float(full_scale), snr_db=snr_db)
    return IQWaveform(sample_rate=w.sample_rate, i=w.i, q=w.q, quantized=qz)


@dataclass(frozen=True)
class ContinuityReport:
    """Worst inter-sample jumps and the record-boundary discontinuity."""

    max_jump_i: float
    max_jump_q: float
    boundary_jump_i: float
    boundary_jump_q: float
    threshold: Optional[float]
    flagged: bool


def continuity_report(w: IQWaveform, threshold: Optional[float] = None) -> ContinuityReport:
    """Report discontinuities that an interpolating baseband generator would ring on.

    The boundary jump compares the last sample against the first, which is
    what matters when a waveform is looped.
    """
    ji = float(np.max(np.abs(np.diff(w.i)))) if len(w.i) > 1 else 0.0
    jq = float(np.max(np.abs(np.diff(w.q)))) if len(w.q) > 1 else 0.0
    bi = float(abs(w.i[-1] - w.i[0]))
    bq = float(abs(w.q[-1] - w.q[0]))
    flagged = threshold is not None and max(ji, jq, bi, bq) > threshold
    return ContinuityReport(max_jump_i=ji, max_jump_q=jq,
                            boundary_jump_i=bi, boundary_jump_q=bq,
                            threshold=threshold, flagged=flagged)


def export_csv(w: IQWaveform, path, t0: float = 0.0) -> None:
    """CSV of (t, I, Q) rows."""
    dt = 1.0 / w.sample_rate
    with open(path, "w") as fh:
        fh.write("t,i,q\n")
        for k in range(len(w.i)):
            fh.write("%.17g,%.17g,%.17g\n" % (t0 + k * dt, w.i[k], w.q[k]))


def export_binary(w: IQWaveform, path, header_path=None, spec_hash: str = "") -> None:
    """Interleaved little-endian signed 16-bit I,Q codes plus a text sidecar.

    The sidecar records everything needed to reconstruct physical units:
    sample rate, full scale, bit depth, sample count and the source spec
    hash.  The waveform must already be quantized to at most 16 bits.
    """
    if w.quantized is None:
        raise ValidationError("quantize the waveform before binary export")
    if w.quantized.bits > 16:
        raise ValidationError("binary export supports at most 16-bit codes")
    inter = np.empty(2 * len(w.i), dtype="<i2")
    inter[0::2] = w.quantized.codes_i
    inter[1::2] = w.quantized.codes_q
    with open(path, "wb") as fh:
        fh.write(inter.tobytes())
    if header_path is None:
        header_path = str(path) + ".hdr"
    with open(header_path, "w") as fh:
        fh.write(f"format = interleaved_iq_int16_le\n"
                 f"sample_rate_hz = {w.sample_rate!r}\n"
                 f"full_scale = {w.quantized.full_scale!r}\n"
                 f"bits = {w.quantized.bits}\n"
                 f"n_samples = {len(w.i)}\n"
                 f"spec_hash = {spec_hash}\n")


def read_binary(path, sample_rate: float, full_scale: float, bits: int = 16) -> IQWaveform:
    """Reload a binary export into reconstructed floating-point I/Q."""
    raw = np.fromfile(path, dtype="<i2")
    step = full_scale / 2 ** (bits - 1)
    return IQWaveform(sample_rate=sample_rate,
                      i=raw[0::2].astype(float) * step,
                      q=raw[1::2].astype(float) * step)
