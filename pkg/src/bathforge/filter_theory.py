"""Analytic coherence predictions for free evolution under comb dephasing.

Ramsey fringe visibility decays as ``W(tau) = exp(-chi(tau))``.  For a
two-sided PSD the coherence integral is

    chi(tau) = (2/pi) * int_0^inf  S(omega)/omega^2 * sin^2(omega*tau/2) domega

and for a delta-comb the integral collapses to a finite sum over the teeth.
For the dephasing comb this gives

    chi(tau) = alpha^2 omega0^2 sum_j (j F(j))^2 sin^2(j omega0 tau / 2) / (j omega0)^2

which equals half the ensemble variance of the phase accumulated between the
Ramsey pulses, the quantity the Monte-Carlo visibility actually measures.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import ApproximationWarning, ValidationError
from .noise import AnalyticComb, NoiseSpec, Quadrature


@dataclass(frozen=True)
class CoherenceCurve:
    """chi(tau) on a grid with a coarse regime annotation."""

    tau: np.ndarray
    chi: np.ndarray
    regime: str  # "linear" | "quadratic" | "mixed"


def fid_filter(omega, tau) -> np.ndarray:
    """Free-induction-decay filter sin^2(omega*tau/2); divide by omega^2 to weight a PSD."""
    return np.sin(np.asarray(omega) * tau / 2.0) ** 2


def chi_from_comb(comb: AnalyticComb, filter_values: np.ndarray) -> float:
    """Generic coherence sum (2/pi) * sum_j w_j * f_j / omega_j^2.

    ``filter_values`` are the caller's filter function evaluated at the tooth
    frequencies; with the FID filter this reproduces :func:`chi_fid_comb`
    exactly, since integrating delta teeth is the discrete sum by
    construction.  The same entry point serves amplitude-noise combs with a
    caller-supplied driven-evolution filter, for which no closed form is
    claimed here.
    """
    f = np.asarray(filter_values, dtype=float)
    if f.shape != comb.omega.shape:
        raise ValidationError("filter_values must match the comb teeth")
    return float((2.0 / np.pi) * np.sum(comb.weights * f / comb.omega**2))


def chi_fid_comb(spec: NoiseSpec, tau) -> np.ndarray | float:
    """Exact free-evolution chi(tau) for a dephasing comb.

    Evaluates alpha^2 omega0^2 sum_j (jF)^2 sin^2(j omega0 tau/2)/(j omega0)^2.
    """
    if spec.quadrature is not Quadrature.DEPHASING:
        raise ValidationError("chi_fid_comb requires a dephasing spec")
    tau_arr = np.atleast_1d(np.asarray(tau, dtype=float))
    F = spec.envelope_table()
    j = np.arange(1, spec.teeth + 1, dtype=float)
    wj = spec.tooth_frequencies()
    coeff = (spec.alpha * spec.omega0) ** 2 * (j * F) ** 2 / wj**2
    out = np.sin(np.outer(tau_arr, wj) / 2.0) ** 2 @ coeff
    return float(out[0]) if np.ndim(tau) == 0 else out


def chi_white_analytic(alpha: float, tau) -> np.ndarray | float:
    """Continuum white-noise result chi = tau * alpha^2 / 2.

    Here alpha^2 is the flat two-sided PSD level S(omega) = alpha^2.  A comb
    with strength a approximates this continuum with
    alpha^2 = pi a^2 omega0 / 2, so the same-symbol identification is exact
    only when pi*omega0/2 = 1 (omega0 ~ 2*pi*0.101 rad/s).
    """
    tau_arr = np.asarray(tau, dtype=float)
    out = 0.5 * alpha**2 * tau_arr
    return float(out) if np.ndim(tau) == 0 else out


def chi_quadratic_limit(spec: NoiseSpec, tau) -> np.ndarray | float:
    """Small-angle (quasi-static) limit of the comb sum.

    Replaces sin^2(j omega0 tau/2) by its argument squared, giving
    chi = C(0) * tau^2 / 2 with C(0) the comb variance; valid while the
    highest tooth satisfies J*omega0*tau << 1.
    """
    if spec.quadrature is not Quadrature.DEPHASING:
        raise ValidationError("chi_quadratic_limit requires a dephasing spec")
    tau_arr = np.atleast_1d(np.asarray(tau, dtype=float))
    worst = spec.omega_cutoff * float(np.max(np.abs(tau_arr)))
    if worst > 0.5:
        warnings.warn(
            f"J*omega0*tau = {worst:.3g} > 0.5: quadratic limit is not valid here",
            ApproximationWarning, stacklevel=2)
    F = spec.envelope_table()
    j = np.arange(1, spec.teeth + 1, dtype=float)
    c0 = 0.5 * (spec.alpha * spec.omega0) ** 2 * np.sum((j * F) ** 2)
    out = 0.5 * c0 * tau_arr**2
    return float(out[0]) if np.ndim(tau) == 0 else out


def fidelity_from_chi(chi) -> np.ndarray | float:
    """First-order averaged operation fidelity F_av = (1 + exp(-chi)) / 2."""
    chi_arr = np.asarray(chi, dtype=float)
    if np.any(chi_arr < 0):
        raise ValidationError("chi must be non-negative")
    out = 0.5 * (1.0 + np.exp(-chi_arr))
    return float(out) if np.ndim(chi) == 0 else out


def predicted_t2(spec: NoiseSpec, tau_min: float | None = None,
                 tau_max: float | None = None) -> float:
    """1/e coherence time: the first crossing of chi(tau) = 1.

    Scans the window geometrically for a bracket and polishes it with Brent's
    method, so the result satisfies |chi(T2) - 1| < 1e-9 even though the comb
    chi is oscillatory at long tau.  Raises ValidationError when chi never
    reaches 1 in the window (alpha too small: the comb variance bounds chi).
    """
    if tau_min is None:
        tau_min = 1e-9 * 2.0 * np.pi / spec.omega_cutoff
    if tau_max is None:
        tau_max = 1e4 * 2.0 * np.pi / spec.omega0
    f = lambda t: chi_fid_comb(spec, t) - 1.0
    lo = tau_min
    if f(lo) >= 0:
        raise ValidationError("chi already exceeds 1 at the lower search bound")
    hi = lo
    while True:
        hi_next = min(hi * 1.5, tau_max)
        if f(hi_next) >= 0:
            lo, hi = hi, hi_next
            break
        lo = hi = hi_next
        if hi >= tau_max:
            raise ValidationError(
                "chi(tau) does not reach 1 within the search window; "
                "noise too weak for a T2 in range")
    t2 = brentq(f, lo, hi, xtol=1e-18, rtol=8.9e-16, maxiter=200)
    if abs(chi_fid_comb(spec, t2) - 1.0) > 1e-9:
        raise ValidationError("T2 root did not converge to |chi-1| < 1e-9")
    return float(t2)


def coherence_curve(spec: NoiseSpec, tau: np.ndarray) -> CoherenceCurve:
    """chi over a grid, annotated linear/quadratic/mixed by simple heuristics."""
    tau = np.asarray(tau, dtype=float)
    chi = chi_fid_comb(spec, tau)
    if spec.omega_cutoff * float(np.max(tau)) <= 0.5:
        regime = "quadratic"
    else:
        # linear if a straight line through the data explains it tightly
        A = np.vstack([tau, np.ones_like(tau)]).T
        coef, *_ = np.linalg.lstsq(A, chi, rcond=None)
        resid = chi - A @ coef
        ss_tot = float(np.sum((chi - chi.mean()) ** 2))
        r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
        regime = "linear" if r2 > 0.995 else "mixed"
    return CoherenceCurve(tau=tau, chi=chi, regime=regime)
