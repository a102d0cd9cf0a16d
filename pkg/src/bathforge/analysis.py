"""Decay-envelope fitting of fringe records and the noise-strength scaling study."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import least_squares

from .errors import FitError, ValidationError
from .filter_theory import predicted_t2
from .noise import NoiseSpec
from .qubit import ExperimentRecord, ramsey

_MODELS = ("exponential", "gaussian")
_PARAM_NAMES = ("amplitude", "t_decay", "frequency", "phase", "offset")


@dataclass
class DecayFit:
    """Fitted decaying fringe A * env(t/T) * cos(delta t + phi0) + c.

    ``env`` is exp(-t/T) for the exponential model and exp(-(t/T)^2) for the
    Gaussian model; either way ``t_decay`` is the 1/e time of the envelope.
    """

    model: str
    params: dict
    covariance: np.ndarray
    residual_norm: float
    r_squared: float
    weighted: bool
    flags: list = field(default_factory=list)

    @property
    def t2(self) -> float:
        return self.params["t_decay"]

    @property
    def param_errors(self) -> dict:
        err = np.sqrt(np.clip(np.diag(self.covariance), 0.0, None))
        return dict(zip(_PARAM_NAMES, err))


def _model_eval(model: str, t: np.ndarray, p: np.ndarray) -> np.ndarray:
    a, T, f, ph, c = p
    env = np.exp(-((t / T) ** 2)) if model == "gaussian" else np.exp(-t / T)
    return a * env * np.cos(f * t + ph) + c


def _initial_frequency(t: np.ndarray, y: np.ndarray) -> float:
    """Fringe frequency seed from the periodogram peak (uniform grids only)."""
    d = np.diff(t)
    if len(d) and np.max(np.abs(d - d[0])) < 1e-9 * d[0]:
        spec = np.abs(np.fft.rfft(y - y.mean()))
        freqs = 2.0 * math.pi * np.fft.rfftfreq(len(y), d[0])
        k = 1 + int(np.argmax(spec[1:]))
        if spec[k] > 0:
            return float(freqs[k])
    span = t[-1] - t[0]
    return 2.0 * math.pi * 3.0 / span


def _initial_decay(t: np.ndarray, y: np.ndarray) -> float:
    """Decay-time seed from the envelope of |signal - mean|."""
    env = np.abs(y - y.mean())
    t_span = t[-1] - t[0]
    head = env[: max(3, len(env) // 4)].mean()
    tail = env[-max(3, len(env) // 4):].mean()
    if head > 0 and 0 < tail < head:
        # env ~ exp(-t/T): one e-folding across the window scaled by the drop
        return float(t_span / max(math.log(head / tail), 0.5))
    return float(t_span / 2.0)


def fit_decay(record: ExperimentRecord, model: str = "exponential") -> DecayFit:
    """Weighted least-squares fit of a decaying fringe to a record.

    Uses deterministic multi-start Levenberg-style optimization: the
    frequency seed comes from the FFT peak, the decay seed from the
    rectified-signal envelope, and eight fixed jitters of (T, phase) guard
    against the local minima fringe fits are prone to.  Weights are
    1/stderr^2; all-zero stderr falls back to an unweighted fit and flags it.
    """
    if model not in _MODELS:
        raise ValidationError(f"model must be one of {_MODELS}")
    t = np.asarray(record.sweep, dtype=float)
    y = np.asarray(record.mean, dtype=float)
    se = np.asarray(record.stderr, dtype=float)
    if len(t) < 8:
        raise FitError("need at least 8 points to fit a decaying fringe")
    if float(np.ptp(y)) < 1e-12:
        raise FitError("constant signal: fringe amplitude ~ 0, decay time unidentifiable")
    flags = []
    if np.any(se <= 0):
        flags.append("unweighted: degenerate stderr")
        sigma = np.ones_like(y)
        weighted = False
    else:
        sigma = se
        weighted = True

    f0 = _initial_frequency(t, y)
    T0 = _initial_decay(t, y)
    a0 = min(max(2.0 * float(np.std(y)), 1e-3), 1.05)
    c0 = float(np.mean(y))
    lower = [0.0, 1e-12, 0.0, -2.0 * math.pi, -0.5]
    upper = [1.05, np.inf, np.inf, 2.0 * math.pi, 1.5]
    starts = [(T0 * ft, ph) for ft in (1.0, 0.35, 3.0)
              for ph in (0.0, 0.5 * math.pi, math.pi, -0.5 * math.pi)][:8]

    def resid(p):
        return (_model_eval(model, t, p) - y) / sigma

    best = None
    for T_start, ph_start in starts:
        p0 = np.clip([a0, T_start, f0, ph_start, c0], lower, upper)
        try:
            sol = least_squares(resid, p0, bounds=(lower, upper), method="trf")
        except Exception:
            continue
        if not sol.success:
            continue
        if best is None or sol.cost < best.cost:
            best = sol
    if best is None:
        raise FitError("fit did not converge from any start")

    p = best.x
    r = resid(p)
    dof = max(len(t) - len(p), 1)
    jtj = best.jac.T @ best.jac
    try:
        cov = np.linalg.inv(jtj)
    except np.linalg.LinAlgError:
        cov = np.linalg.pinv(jtj)
    if not weighted:
        cov = cov * float(r @ r) / dof
    fit_y = _model_eval(model, t, p)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum((y - fit_y) ** 2)) / ss_tot if ss_tot > 0 else 0.0
    params = dict(zip(_PARAM_NAMES, (float(v) for v in p)))
    if params["amplitude"] < 3.0 * math.sqrt(max(cov[0, 0], 0.0)) and params["amplitude"] < 0.05:
        raise FitError("fringe amplitude consistent with zero: decay time unidentifiable")
    return DecayFit(model=model, params=params, covariance=cov,
                    residual_norm=float(np.linalg.norm(r)), r_squared=r2,
                    weighted=weighted, flags=flags)


@dataclass
class AlphaScanResult:
    """T2 versus noise strength plus the fitted power-law exponent."""

    alphas: np.ndarray
    t2: np.ndarray
    t2_err: np.ndarray
    exponent: float
    exponent_err: float
    records: list = field(default_factory=list)
    fits: list = field(default_factory=list)


def fit_rate_exponent(alphas: np.ndarray, t2: np.ndarray,
                      t2_err: np.ndarray) -> tuple[float, float]:
    """Weighted log-log regression of the decay rate 1/T2 against alpha."""
    alphas = np.asarray(alphas, dtype=float)
    if len(alphas) < 2 or np.ptp(alphas) == 0:
        raise ValidationError("need at least two distinct alpha values")
    x = np.log(alphas)
    y = np.log(1.0 / np.asarray(t2, dtype=float))
    sig = np.asarray(t2_err, dtype=float) / np.asarray(t2, dtype=float)
    sig = np.where(sig > 0, sig, np.max(sig, initial=1e-6) or 1e-6)
    w = 1.0 / sig**2
    A = np.vstack([x, np.ones_like(x)]).T
    Aw = A * np.sqrt(w)[:, None]
    yw = y * np.sqrt(w)
    coef, *_ = np.linalg.lstsq(Aw, yw, rcond=None)
    cov = np.linalg.inv(Aw.T @ Aw)
    return float(coef[0]), float(math.sqrt(max(cov[0, 0], 0.0)))


def alpha_scaling(base_spec: NoiseSpec, alphas: Sequence[float], *,
                  n_realizations: int = 500, pulse_rabi: float = 2.0 * math.pi * 1e4,
                  n_tau: int = 36, tau_span_t2: float = 2.5,
                  fringe_periods: float = 4.0) -> AlphaScanResult:
    """Measure T2(alpha) by Monte-Carlo Ramsey plus exponential fits.

    For each alpha the tau grid spans ``tau_span_t2`` predicted decay times
    and the fringe detuning is set to put ``fringe_periods`` oscillations in
    the window, so every fit sees both fringes and decay regardless of
    scale.  A fit failure is re-raised with the alpha it occurred at.
    """
    alphas = np.asarray(list(alphas), dtype=float)
    if len(alphas) < 4:
        raise ValidationError("need at least 4 alpha values for a scaling fit")
    if np.ptp(alphas) == 0:
        raise ValidationError("alpha values must not all be equal")
    t2s, errs, records, fits = [], [], [], []
    for a in alphas:
        spec = NoiseSpec(quadrature=base_spec.quadrature, alpha=float(a),
                         omega0=base_spec.omega0, teeth=base_spec.teeth,
                         p=base_spec.p, envelope=base_spec.envelope,
                         seed=base_spec.seed)
        t2_pred = predicted_t2(spec)
        tau_max = tau_span_t2 * t2_pred
        taus = np.linspace(tau_max / n_tau, tau_max, n_tau)
        detuning = 2.0 * math.pi * fringe_periods / tau_max
        rec = ramsey(spec, fringe_detuning=detuning, pulse_rabi=pulse_rabi,
                     taus=taus, n_realizations=n_realizations)
        try:
            fit = fit_decay(rec, model="exponential")
        except FitError as exc:
            raise FitError(f"decay fit failed at alpha={a:g}: {exc}") from exc
        t2s.append(fit.t2)
        errs.append(fit.param_errors["t_decay"])
        records.append(rec)
        fits.append(fit)
    exponent, exp_err = fit_rate_exponent(alphas, np.array(t2s), np.array(errs))
    return AlphaScanResult(alphas=alphas, t2=np.array(t2s), t2_err=np.array(errs),
                           exponent=exponent, exponent_err=exp_err,
                           records=records, fits=fits)


def export_scan_csv(result: AlphaScanResult, path) -> None:
    """CSV of (alpha, t2, t2_err) plus a trailing exponent summary line."""
    with open(path, "w") as fh:
        fh.write("alpha,t2,t2_err\n")
        for a, t, e in zip(result.alphas, result.t2, result.t2_err):
            fh.write("%.17g,%.17g,%.17g\n" % (a, t, e))
        fh.write(f"# exponent = {result.exponent:.6f} +- {result.exponent_err:.6f}\n")
