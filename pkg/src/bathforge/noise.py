"""Frequency-comb noise: specifications, stochastic realizations, analytic oracles.

A noise bath is a finite comb of J equally spaced sinusoids with random
phases.  The envelope F(j) of the tooth amplitudes sets the power law of the
resulting power spectral density:

* dephasing quadrature: the carrier phase is modulated by
  ``phi_N(t) = alpha * sum_j F(j) sin(j*omega0*t + psi_j)`` and the physical
  noise is the instantaneous detuning ``beta_z = d(phi_N)/dt``,
* amplitude quadrature: the drive strength is modulated fractionally by
  ``beta_Omega(t) = alpha * sum_j F(j) cos(j*omega0*t + psi_j)``.

For a target PSD scaling ``S(j*omega0) ~ (j*omega0)**p`` the envelopes are
``F(j) = j**(p/2 - 1)`` (dephasing) and ``F(j) = j**(p/2)`` (amplitude).
"""

from __future__ import annotations

import enum
import hashlib
import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import AmplitudeRangeWarning, NyquistError, ValidationError
from .grid import TimeGrid

_MAX_SEED = 2**64 - 1


class Quadrature(enum.Enum):
    DEPHASING = "dephasing"
    AMPLITUDE = "amplitude"


@dataclass(frozen=True)
class NoiseSpec:
    """Full description of an engineered comb bath.

    Parameters
    ----------
    quadrature : Quadrature
        Which control quadrature the noise enters.
    alpha : float
        Global dimensionless noise strength, >= 0.
    omega0 : float
        Base (lowest) angular frequency of the comb in rad/s.  The upper
        cutoff is the derived quantity ``teeth * omega0``, never stored.
    teeth : int
        Number of comb teeth J >= 1.
    p : float, optional
        Power-law exponent of the target PSD.  Mutually exclusive with
        ``envelope``.
    envelope : tuple of float, optional
        Explicit tabulated F(j) values, length ``teeth``, all finite.
    seed : int
        64-bit seed from which every realization's phases derive.
    """

    quadrature: Quadrature
    alpha: float
    omega0: float
    teeth: int
    p: Optional[float] = None
    envelope: Optional[tuple] = None
    seed: int = 0

    def __post_init__(self):
        if not isinstance(self.quadrature, Quadrature):
            raise ValidationError(f"quadrature must be a Quadrature, got {self.quadrature!r}")
        if self.teeth < 1:
            raise ValidationError(f"teeth must be >= 1, got {self.teeth}")
        if self.omega0 <= 0:
            raise ValidationError(f"omega0 must be positive, got {self.omega0}")
        if self.alpha < 0:
            raise ValidationError(f"alpha must be >= 0, got {self.alpha}")
        if not (0 <= self.seed <= _MAX_SEED):
            raise ValidationError("seed must fit in 64 bits")
        if (self.p is None) == (self.envelope is None):
            raise ValidationError("exactly one of p or envelope must be given")
        if self.envelope is not None:
            object.__setattr__(self, "envelope", tuple(float(v) for v in self.envelope))
            if len(self.envelope) != self.teeth:
                raise ValidationError(
                    f"envelope length {len(self.envelope)} != teeth {self.teeth}")
            if not all(math.isfinite(v) for v in self.envelope):
                raise ValidationError("explicit envelope entries must be finite")

    @property
    def omega_cutoff(self) -> float:
        """Upper frequency cutoff J*omega0 (rad/s), always derived."""
        return self.teeth * self.omega0

    def tooth_frequencies(self) -> np.ndarray:
        """Angular frequencies j*omega0 for j = 1..J."""
        return self.omega0 * np.arange(1, self.teeth + 1)

    def envelope_table(self) -> np.ndarray:
        """F(j) for j = 1..J, from the power law or the explicit table."""
        if self.envelope is not None:
            return np.asarray(self.envelope, dtype=float)
        return envelope_values(self)

    def spec_hash(self) -> str:
        """Short stable hash identifying this spec in file headers."""
        env = "p=%r" % self.p if self.p is not None else "env=%r" % (self.envelope,)
        key = "|".join([self.quadrature.value, repr(float(self.alpha)),
                        repr(float(self.omega0)), str(self.teeth), env, str(self.seed)])
        return hashlib.sha256(key.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class PhaseDraw:
    """One vector of J random tooth phases in [0, 2*pi)."""

    psi: np.ndarray
    realization_index: int = 0

    def __post_init__(self):
        psi = np.asarray(self.psi, dtype=float)
        object.__setattr__(self, "psi", psi)
        if psi.ndim != 1:
            raise ValidationError("psi must be a 1-d vector")


@dataclass(frozen=True)
class NoiseRealization:
    """A sampled noise trajectory plus the draw and grid that produced it.

    ``beta`` is beta_z in rad/s for dephasing specs and the dimensionless
    fractional modulation beta_Omega for amplitude specs.  ``phi_n`` holds
    the accumulated phase waveform (rad) for dephasing specs only.
    """

    spec: NoiseSpec
    draw: PhaseDraw
    grid: TimeGrid
    beta: np.ndarray
    phi_n: Optional[np.ndarray] = None


def envelope_values(spec: NoiseSpec) -> np.ndarray:
    """Tooth envelope F(j), j = 1..J, for a power-law spec.

    Dephasing combs use ``F(j) = j**(p/2 - 1)`` because the physical noise is
    the time derivative of the phase modulation, which promotes each tooth by
    one power of frequency; amplitude combs use ``F(j) = j**(p/2)`` directly.
    """
    if spec.p is None:
        raise ValidationError("envelope_values requires a power-law spec; "
                              "use spec.envelope_table() for explicit tables")
    j = np.arange(1, spec.teeth + 1, dtype=float)
    if spec.quadrature is Quadrature.DEPHASING:
        return j ** (spec.p / 2.0 - 1.0)
    return j ** (spec.p / 2.0)


def draw_phases(spec: NoiseSpec, realization_index: int) -> PhaseDraw:
    """Deterministic phase draw for one ensemble member.

    Streams are keyed by (seed, realization_index) so distinct indices are
    statistically independent and any subset can be generated in any order,
    on any number of workers, with identical results.
    """
    if realization_index < 0:
        raise ValidationError("realization_index must be >= 0")
    ss = np.random.SeedSequence(entropy=spec.seed, spawn_key=(realization_index,))
    rng = np.random.default_rng(ss)
    psi = rng.uniform(0.0, 2.0 * np.pi, spec.teeth)
    return PhaseDraw(psi=psi, realization_index=realization_index)


def draw_phase_matrix(spec: NoiseSpec, indices: Sequence[int]) -> np.ndarray:
    """Stack of phase vectors, shape (len(indices), J), one row per index."""
    return np.stack([draw_phases(spec, int(i)).psi for i in indices])


def _comb_eval(times: np.ndarray, omegas: np.ndarray, amps: np.ndarray,
               psi: np.ndarray, kind: str) -> np.ndarray:
    """Evaluate ``sum_j amps[j] * trig(omegas[j]*t + psi[..., j])`` on ``times``.

    ``psi`` may be (J,) for a single draw or (n, J) for a batch.  The
    time-dependent factors are shared across the batch, so the batched case
    reduces to two (n, J) @ (J, m) matrix products.
    """
    times = np.asarray(times, dtype=float)
    wt = times[None, :] * omegas[:, None]          # (J, m)
    sin_wt, cos_wt = np.sin(wt), np.cos(wt)
    psi = np.asarray(psi, dtype=float)
    single = psi.ndim == 1
    psi2 = psi[None, :] if single else psi
    a_cos = amps * np.cos(psi2)                    # (n, J)
    a_sin = amps * np.sin(psi2)
    if kind == "sin":
        # sin(wt + psi) = sin(wt) cos(psi) + cos(wt) sin(psi)
        out = a_cos @ sin_wt + a_sin @ cos_wt
    elif kind == "cos":
        # cos(wt + psi) = cos(wt) cos(psi) - sin(wt) sin(psi)
        out = a_cos @ cos_wt - a_sin @ sin_wt
    else:  # pragma: no cover
        raise ValueError(kind)
    return out[0] if single else out


def _check_nyquist(spec: NoiseSpec, dt: float):
    limit = math.pi / spec.omega_cutoff
    if dt > limit:
        raise NyquistError(
            f"grid dt={dt:g} s exceeds the Nyquist limit pi/(J*omega0)={limit:g} s "
            f"for the highest comb tooth")


def phase_waveform_at(spec: NoiseSpec, psi: np.ndarray, times: np.ndarray) -> np.ndarray:
    """phi_N evaluated at arbitrary times (no Nyquist check); batch-aware."""
    if spec.quadrature is not Quadrature.DEPHASING:
        raise ValidationError("phase waveform is defined for dephasing specs only")
    F = spec.envelope_table()
    return spec.alpha * _comb_eval(times, spec.tooth_frequencies(), F, psi, "sin")


def detuning_waveform_at(spec: NoiseSpec, psi: np.ndarray, times: np.ndarray) -> np.ndarray:
    """beta_z evaluated at arbitrary times (no Nyquist check); batch-aware."""
    if spec.quadrature is not Quadrature.DEPHASING:
        raise ValidationError("detuning waveform is defined for dephasing specs only")
    j = np.arange(1, spec.teeth + 1, dtype=float)
    amps = j * spec.envelope_table()
    return spec.alpha * spec.omega0 * _comb_eval(
        times, spec.tooth_frequencies(), amps, psi, "cos")


def amplitude_waveform_at(spec: NoiseSpec, psi: np.ndarray, times: np.ndarray) -> np.ndarray:
    """beta_Omega evaluated at arbitrary times (no Nyquist check); batch-aware."""
    if spec.quadrature is not Quadrature.AMPLITUDE:
        raise ValidationError("amplitude waveform is defined for amplitude specs only")
    F = spec.envelope_table()
    total = spec.alpha * np.sum(np.abs(F))
    if total >= 1.0:
        warnings.warn(
            f"alpha * sum|F(j)| = {total:.3g} >= 1: the modulated field amplitude "
            "can go negative", AmplitudeRangeWarning, stacklevel=2)
    return spec.alpha * _comb_eval(times, spec.tooth_frequencies(), F, psi, "cos")


def dephasing_phase_waveform(spec: NoiseSpec, draw: PhaseDraw, grid: TimeGrid) -> np.ndarray:
    """phi_N(t) = alpha * sum_j F(j) sin(j*omega0*t + psi_j) on the grid."""
    _check_nyquist(spec, grid.dt)
    return phase_waveform_at(spec, draw.psi, grid.times())


def detuning_waveform(spec: NoiseSpec, draw: PhaseDraw, grid: TimeGrid) -> np.ndarray:
    """beta_z(t) = d(phi_N)/dt, evaluated analytically (not by differencing).

    beta_z(t) = alpha * omega0 * sum_j j*F(j) cos(j*omega0*t + psi_j), rad/s.
    """
    _check_nyquist(spec, grid.dt)
    return detuning_waveform_at(spec, draw.psi, grid.times())


def amplitude_waveform(spec: NoiseSpec, draw: PhaseDraw, grid: TimeGrid) -> np.ndarray:
    """beta_Omega(t) = alpha * sum_j F(j) cos(j*omega0*t + psi_j), dimensionless."""
    _check_nyquist(spec, grid.dt)
    return amplitude_waveform_at(spec, draw.psi, grid.times())


def realize(spec: NoiseSpec, grid: TimeGrid, realization_index: int) -> NoiseRealization:
    """Draw phases for one ensemble member and sample its waveforms."""
    draw = draw_phases(spec, realization_index)
    if spec.quadrature is Quadrature.DEPHASING:
        beta = detuning_waveform(spec, draw, grid)
        phi_n = dephasing_phase_waveform(spec, draw, grid)
        return NoiseRealization(spec=spec, draw=draw, grid=grid, beta=beta, phi_n=phi_n)
    beta = amplitude_waveform(spec, draw, grid)
    return NoiseRealization(spec=spec, draw=draw, grid=grid, beta=beta)


@dataclass(frozen=True)
class AnalyticComb:
    """Positive-frequency delta-comb of a spec's PSD.

    ``weights[j]`` is the coefficient multiplying ``delta(omega - omega[j])``
    in the two-sided PSD; a mirror tooth of equal weight at ``-omega[j]`` is
    implied by ``two_sided``.  With the transform pair
    ``C(tau) = (1/2pi) int S(omega) e^{i omega tau} d omega`` each tooth pair
    contributes ``weights[j]/pi`` to the variance C(0).
    """

    omega: np.ndarray
    weights: np.ndarray
    two_sided: bool = True

    def variance(self) -> float:
        """C(0) implied by the comb, i.e. sum of 2*w_j/(2*pi)."""
        return float(np.sum(self.weights) / np.pi)


def analytic_psd(spec: NoiseSpec) -> AnalyticComb:
    """Exact delta-comb PSD of the spec.

    Dephasing: S_z(omega) = (pi alpha^2 omega0^2 / 2) sum_j (j F(j))^2
    [delta(omega - omega_j) + delta(omega + omega_j)]; the amplitude
    quadrature drops the omega0^2 j^2 factor.
    """
    F = spec.envelope_table()
    j = np.arange(1, spec.teeth + 1, dtype=float)
    if spec.quadrature is Quadrature.DEPHASING:
        w = 0.5 * np.pi * spec.alpha**2 * spec.omega0**2 * (j * F) ** 2
    else:
        w = 0.5 * np.pi * spec.alpha**2 * F**2
    return AnalyticComb(omega=spec.tooth_frequencies(), weights=w)


def analytic_autocorrelation(spec: NoiseSpec, tau) -> np.ndarray | float:
    """Exact autocorrelation C(tau) of the comb process.

    Dephasing: C(tau) = (alpha^2 omega0^2 / 2) sum_j (j F(j))^2 cos(omega_j tau);
    amplitude: C(tau) = (alpha^2 / 2) sum_j F(j)^2 cos(omega_j tau).
    """
    tau_arr = np.atleast_1d(np.asarray(tau, dtype=float))
    F = spec.envelope_table()
    j = np.arange(1, spec.teeth + 1, dtype=float)
    wj = spec.tooth_frequencies()
    if spec.quadrature is Quadrature.DEPHASING:
        coeff = 0.5 * spec.alpha**2 * spec.omega0**2 * (j * F) ** 2
    else:
        coeff = 0.5 * spec.alpha**2 * F**2
    out = np.cos(np.outer(tau_arr, wj)) @ coeff
    return float(out[0]) if np.isscalar(tau) or np.ndim(tau) == 0 else out


def export_realization_csv(realization: NoiseRealization, path) -> None:
    """Write (t, beta[, phi_n]) rows with a header naming the spec hash."""
    t = realization.grid.times()
    cols = [t, realization.beta]
    names = ["t", "beta"]
    if realization.phi_n is not None:
        cols.append(realization.phi_n)
        names.append("phi_n")
    with open(path, "w") as fh:
        fh.write(f"# bathforge realization spec={realization.spec.spec_hash()} "
                 f"index={realization.draw.realization_index}\n")
        fh.write(",".join(names) + "\n")
        for row in zip(*cols):
            fh.write(",".join("%.17g" % v for v in row) + "\n")
