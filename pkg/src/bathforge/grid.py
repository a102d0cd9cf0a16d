"""Uniform time grids shared by noise synthesis, waveform compilation and simulation."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class TimeGrid:
    """Uniform sampling grid: ``n`` samples at ``t0 + k*dt`` for k = 0..n-1.

    The sample at ``t0 + n*dt`` is excluded, so a grid spanning exactly one
    period of a periodic signal contains each phase point once.
    """

    t0: float
    dt: float
    n: int

    def __post_init__(self):
        if self.dt <= 0:
            raise ValidationError(f"grid dt must be positive, got {self.dt}")
        if self.n < 1:
            raise ValidationError(f"grid must have at least one sample, got n={self.n}")

    @property
    def duration(self) -> float:
        return self.n * self.dt

    @property
    def sample_rate(self) -> float:
        return 1.0 / self.dt

    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n)

    @classmethod
    def from_span(cls, t0: float, t1: float, n: int) -> "TimeGrid":
        """Grid of ``n`` samples covering [t0, t1) endpoint-exclusive."""
        if t1 <= t0:
            raise ValidationError("grid span must have t1 > t0")
        return cls(t0=t0, dt=(t1 - t0) / n, n=n)

    @classmethod
    def periods_of(cls, omega0: float, k: int, samples_per_period: int,
                   t0: float = 0.0) -> "TimeGrid":
        """Grid covering exactly ``k`` base periods 2*pi/omega0.

        Snapping records to whole periods keeps comb waveforms continuous
        across the record boundary and puts every tooth on an FFT bin.
        """
        if omega0 <= 0:
            raise ValidationError("omega0 must be positive")
        if k < 1 or samples_per_period < 2:
            raise ValidationError("need k >= 1 periods and >= 2 samples per period")
        period = 2.0 * math.pi / omega0
        n = k * samples_per_period
        return cls(t0=t0, dt=k * period / n, n=n)
