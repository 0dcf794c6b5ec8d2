"""Total photon number of m identically squeezed vacua: truncated negative binomial."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

DEFAULT_CUTOFF = 50.0


def most_probable_n(m: int, r: float) -> int:
    """2 * floor((m/2 - 1) sinh^2 r)."""
    if m < 2:
        raise ValueError("most_probable_n needs m >= 2")
    if r < 0:
        raise ValueError("squeezing must be non-negative")
    return 2 * int(math.floor((m / 2 - 1) * math.sinh(r) ** 2))


@dataclass(frozen=True)
class SqueezeSetup:
    m: int
    r: float
    cutoff: float = DEFAULT_CUTOFF

    def __post_init__(self):
        if self.m < 2:
            raise ValueError("need at least two modes")
        if self.r < 0 or not math.isfinite(self.r):
            raise ValueError("squeezing must be finite and non-negative")
        if self.cutoff <= 0:
            raise ValueError("cutoff multiplier must be positive")

    @property
    def n_most(self) -> int:
        return most_probable_n(self.m, self.r)

    @property
    def n_max(self) -> int:
        # n_most is floored at 2 so tiny squeezing still keeps the tail
        scaled = self.cutoff * max(self.n_most, 2)
        return max(2, 2 * int(math.floor(scaled / 2)))


@dataclass(frozen=True)
class PhotonCountPmf:
    """Renormalised P_n over n = 0, 2, ..., N; ``raw_mass`` is the mass before renormalisation."""

    n_values: np.ndarray
    probs: np.ndarray
    raw_mass: float
    cdf: np.ndarray = field(repr=False)

    def prob(self, n: int) -> float:
        if n % 2 or n < 0 or n > self.n_values[-1]:
            return 0.0
        return float(self.probs[n // 2])

    @property
    def mode(self) -> int:
        return int(self.n_values[np.argmax(self.probs)])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "prob"])
        for n, p in zip(self.n_values, self.probs):
            w.writerow([int(n), repr(float(p))])
        return buf.getvalue()


def log_raw_prob(n: int | np.ndarray, m: int, r: float):
    """log of C((m+n)/2 - 1, n/2) tanh^n r / cosh^m r for even n."""
    n = np.asarray(n, dtype=float)
    a = (m + n) / 2 - 1
    logc = gammaln(a + 1) - gammaln(n / 2 + 1) - gammaln(a - n / 2 + 1)
    log_cosh = np.logaddexp(r, -r) - math.log(2.0)
    if r == 0:
        return np.where(n == 0, 0.0, -np.inf)
    return logc + n * math.log(math.tanh(r)) - m * log_cosh


def photon_count_pmf(setup: SqueezeSetup) -> PhotonCountPmf:
    n_values = np.arange(0, setup.n_max + 1, 2)
    if setup.r == 0:
        n_values = np.array([0])
    raw = np.exp(log_raw_prob(n_values, setup.m, setup.r))
    raw_mass = float(raw.sum())
    probs = raw / raw_mass
    cdf = np.cumsum(probs)
    cdf[-1] = 1.0
    return PhotonCountPmf(n_values=n_values, probs=probs, raw_mass=raw_mass, cdf=cdf)


def sample_photon_count(pmf: PhotonCountPmf, rng: np.random.Generator) -> int:
    """Inverse-CDF draw using one uniform."""
    u = rng.random()
    return int(pmf.n_values[np.searchsorted(pmf.cdf, u, side="right")])
