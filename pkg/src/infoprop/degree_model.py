"""Degree distributions for configuration-model networks.

Three kinds are supported: a discrete power law ``pmf(k) ~ k**-gamma_prime``,
a Poisson law truncated to ``[k_min, k_max]`` and an arbitrary empirical pmf.
Every distribution is stored as a dense probability vector over the integer
support ``k_min..k_max`` and is immutable once built.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import special, stats

__all__ = [
    "DegreeDistribution",
    "ParameterError",
    "natural_cutoff",
    "mean_degree",
    "second_moment",
    "molloy_reed_ok",
    "molloy_reed_value",
    "sample_degree",
    "sample_degrees",
    "power_law_cutoff_closed_form",
    "power_law_mean_closed_form",
    "poisson_cutoff_closed_form",
]

POWER_LAW = "powerlaw"
POISSON = "poisson"
EMPIRICAL = "empirical"
KINDS = (POWER_LAW, POISSON, EMPIRICAL)

# Upper bound on the support scanned when searching for a cutoff.
_MAX_SCAN = 10**9


class ParameterError(ValueError):
    """Raised for out-of-domain model parameters."""


def _check_power_law(gamma_prime, k_min):
    if not gamma_prime > 2:
        raise ParameterError(
            f"power-law exponent gamma_prime must be > 2 (got {gamma_prime}); "
            "the maximum degree does not exist otherwise"
        )
    if int(k_min) != k_min or k_min < 1:
        raise ParameterError(f"k_min must be an integer >= 1 (got {k_min})")


def _check_poisson(gamma, k_min):
    if not gamma > 0:
        raise ParameterError(f"Poisson parameter gamma must be > 0 (got {gamma})")
    if int(k_min) != k_min or k_min < 0:
        raise ParameterError(f"k_min must be an integer >= 0 (got {k_min})")


def _tail_power_law(k, gamma_prime, k_min):
    # P(K > k) for the untruncated discrete power law on k >= k_min
    k = np.maximum(np.asarray(k, dtype=float), k_min - 1)
    return special.zeta(gamma_prime, k + 1) / special.zeta(gamma_prime, k_min)


def _tail_poisson(k, gamma, k_min):
    k = np.maximum(np.asarray(k, dtype=float), k_min - 1)
    return stats.poisson.sf(k, gamma) / stats.poisson.sf(k_min - 1, gamma)


def _first_k_below(tail, k_min, bound):
    """Smallest integer k >= k_min with tail(k) <= bound (tail non-increasing)."""
    if tail(k_min) <= bound:
        return int(k_min)
    lo, hi = k_min, max(2 * k_min, k_min + 1)
    while tail(hi) > bound:
        lo, hi = hi, 2 * hi
        if hi > _MAX_SCAN:
            raise ParameterError("cutoff search did not converge")
    # invariant: tail(lo) > bound >= tail(hi)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if tail(mid) <= bound:
            hi = mid
        else:
            lo = mid
    return int(hi)


@dataclass(frozen=True)
class DegreeDistribution:
    """Probability mass function over node degrees ``k_min..k_max``.

    Use the :meth:`power_law`, :meth:`poisson` and :meth:`empirical`
    constructors rather than instantiating directly.
    """

    kind: str
    k_min: int
    k_max: int
    pmf: np.ndarray
    gamma: float | None = None
    gamma_prime: float | None = None
    _cdf: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown distribution kind {self.kind!r}")
        if self.k_max < self.k_min:
            raise ParameterError(f"k_max ({self.k_max}) < k_min ({self.k_min})")
        pmf = np.asarray(self.pmf, dtype=float).copy()
        if pmf.shape != (self.k_max - self.k_min + 1,):
            raise ParameterError("pmf length does not match the support")
        if np.any(pmf < 0) or not np.all(np.isfinite(pmf)):
            raise ParameterError("pmf entries must be finite and non-negative")
        total = math.fsum(pmf)
        if total <= 0:
            raise ParameterError("pmf has no mass")
        pmf /= total
        pmf.flags.writeable = False
        cdf = np.cumsum(pmf)
        cdf[-1] = 1.0
        cdf.flags.writeable = False
        object.__setattr__(self, "pmf", pmf)
        object.__setattr__(self, "_cdf", cdf)

    @classmethod
    def power_law(cls, gamma_prime, k_min=2, k_max=None, n=None):
        """Discrete power law, ``pmf(k) ~ k**-gamma_prime``.

        Exactly one of ``k_max`` or ``n`` should be given; with ``n`` the
        natural cutoff for a network of ``n`` nodes is used.
        """
        _check_power_law(gamma_prime, k_min)
        if k_max is None:
            if n is None:
                raise ParameterError("power law needs k_max or n")
            k_max = _first_k_below(
                lambda k: _tail_power_law(k, gamma_prime, k_min), k_min, 1.0 / n
            )
        k = np.arange(k_min, k_max + 1, dtype=float)
        return cls(POWER_LAW, int(k_min), int(k_max), k**-gamma_prime,
                   gamma_prime=float(gamma_prime))

    @classmethod
    def poisson(cls, gamma, k_min=1, k_max=None, n=None):
        """Poisson law with mean parameter ``gamma`` truncated to the support."""
        _check_poisson(gamma, k_min)
        if k_max is None:
            if n is None:
                raise ParameterError("Poisson law needs k_max or n")
            k_max = _first_k_below(
                lambda k: _tail_poisson(k, gamma, k_min), k_min, 1.0 / n
            )
        k = np.arange(k_min, k_max + 1)
        return cls(POISSON, int(k_min), int(k_max), stats.poisson.pmf(k, gamma),
                   gamma=float(gamma))

    @classmethod
    def empirical(cls, probabilities):
        """Build from a ``{degree: probability}`` mapping."""
        if not probabilities:
            raise ParameterError("empirical pmf is empty")
        ks = sorted(int(k) for k in probabilities)
        if ks[0] < 0:
            raise ParameterError("degrees must be non-negative")
        pmf = np.zeros(ks[-1] - ks[0] + 1)
        for k, p in probabilities.items():
            pmf[int(k) - ks[0]] += p
        return cls(EMPIRICAL, ks[0], ks[-1], pmf)

    @classmethod
    def from_file(cls, path):
        """Read a two-column ``k probability`` text file (``#`` starts a comment)."""
        probs = {}
        for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ParameterError(f"{path}:{lineno}: expected 'k probability'")
            k, p = int(parts[0]), float(parts[1])
            probs[k] = probs.get(k, 0.0) + p
        return cls.empirical(probs)

    @property
    def degrees(self):
        return np.arange(self.k_min, self.k_max + 1)

    @property
    def cdf(self):
        return self._cdf

    def prob(self, k):
        """pmf value at degree ``k`` (zero outside the support)."""
        if k < self.k_min or k > self.k_max:
            return 0.0
        return float(self.pmf[k - self.k_min])

    def as_dict(self):
        return {int(k): float(p) for k, p in zip(self.degrees, self.pmf) if p > 0}

    def tail(self, k):
        """P(K > k) of the untruncated law (of the stored pmf for empirical)."""
        if self.kind == POWER_LAW:
            return float(_tail_power_law(k, self.gamma_prime, self.k_min))
        if self.kind == POISSON:
            return float(_tail_poisson(k, self.gamma, self.k_min))
        if k < self.k_min:
            return 1.0
        if k >= self.k_max:
            return 0.0
        return float(math.fsum(self.pmf[k - self.k_min + 1:]))


def natural_cutoff(dist, n):
    """Smallest degree ``k`` whose tail mass ``P(K > k)`` is at most ``1/n``.

    The tail is evaluated exactly from the untruncated pmf of ``dist``; the
    stored ``k_max`` of a parametric distribution is ignored.
    """
    if n < 1:
        raise ParameterError(f"n must be >= 1 (got {n})")
    return _first_k_below(dist.tail, dist.k_min, 1.0 / n)


def mean_degree(dist):
    return float(np.dot(dist.degrees, dist.pmf))


def second_moment(dist):
    k = dist.degrees.astype(float)
    return float(np.dot(k * k, dist.pmf))


def molloy_reed_value(dist):
    """``E[K^2] - 2 E[K]``; a giant component exists when positive."""
    return second_moment(dist) - 2.0 * mean_degree(dist)


def molloy_reed_ok(dist):
    return molloy_reed_value(dist) > 0


def sample_degrees(dist, size, rng):
    """Draw ``size`` degrees by inverse-CDF lookup."""
    u = rng.random(size)
    return dist.k_min + np.searchsorted(dist.cdf, u, side="right")


def sample_degree(dist, rng):
    return int(sample_degrees(dist, 1, rng)[0])


# Closed-form references from the continuous approximation. They are not used
# by the simulation or the solver; the discrete pmf is authoritative.

def power_law_cutoff_closed_form(gamma_prime, k_min, n):
    """Continuous natural cutoff ``k_min * n**(1/(gamma_prime-1))``."""
    _check_power_law(gamma_prime, k_min)
    return k_min * n ** (1.0 / (gamma_prime - 1.0))


def power_law_mean_closed_form(gamma_prime, k_min, n):
    """Continuous power-law mean with the finite-``n`` cutoff correction."""
    _check_power_law(gamma_prime, k_min)
    g = gamma_prime
    return ((g - 1) / (g - 2)) * k_min * (1 - n ** (-(g - 2) / (g - 1))) / (1 - 1.0 / n)


def poisson_cutoff_closed_form(gamma, n):
    """``e**gamma * (1 - 1/n)``.

    Kept for reference only: it does not satisfy the tail-mass definition of
    the cutoff, use :func:`natural_cutoff` instead.
    """
    return math.exp(gamma) * (1 - 1.0 / n)
