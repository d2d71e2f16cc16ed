"""Degree-based SI mean-field baseline.

``rho[k]`` is the probability that a node of degree ``k`` is informed.  It
grows as ``mu * k * (1 - rho[k]) * theta`` where ``theta`` is the probability
that a randomly followed edge leads to an informed node.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .degree_model import DegreeDistribution

__all__ = ["MeanFieldCurve", "StepSizeError", "drho_dt", "integrate", "DEFAULT_DT"]

DEFAULT_DT = 1e-3
OVERSHOOT_TOL = 1e-3


class StepSizeError(RuntimeError):
    """``rho`` left ``[0, 1]`` by more than the clamp tolerance."""


def drho_dt(rho, degrees, p_tot, mu=1.0):
    k = np.asarray(degrees, dtype=float)
    p = np.asarray(p_tot, dtype=float)
    rho = np.asarray(rho, dtype=float)
    theta = np.dot(rho * k, p) / np.dot(k, p)
    return mu * k * (1.0 - rho) * theta


@dataclass
class MeanFieldCurve:
    """Informed fraction over time; ``rho`` is stored every ``record_every`` steps."""

    n: int
    i0: int
    mu: float
    degrees: np.ndarray
    p_tot: np.ndarray
    t: np.ndarray
    fraction: np.ndarray
    t_rho: np.ndarray
    rho: np.ndarray
    max_clamp: float = 0.0

    @property
    def i(self):
        return self.fraction * self.n

    def time_at_fraction(self, f):
        # fraction is non-decreasing; drop plateaus so interp sees increasing x
        frac, idx = np.unique(self.fraction, return_index=True)
        return np.interp(f, frac, self.t[idx], left=np.nan, right=np.nan)

    def time_at(self, i):
        return self.time_at_fraction(np.asarray(i) / self.n)


def integrate(p_tot, n, i0=5, mu=1.0, dt=DEFAULT_DT, t_end=50.0, *,
              degrees=None, seeding="uniform", record_every=10):
    """Fixed-step RK4 integration from ``i0`` informed nodes.

    ``seeding="uniform"`` starts every degree class at ``i0 / n``;
    ``"degree"`` starts at ``i0 * k / (n * E[k])``, clipped at 1.
    Time 0 is the moment the informed fraction equals ``i0 / n``.  Stops at
    ``t_end`` or once the fraction reaches ``1 - 1e-6``.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive (got {dt})")
    if i0 < 1:
        raise ValueError(f"i0 must be >= 1 (got {i0})")
    if isinstance(p_tot, DegreeDistribution):
        k, p = p_tot.degrees.astype(float), p_tot.pmf.astype(float)
    else:
        k, p = np.asarray(degrees, dtype=float), np.asarray(p_tot, dtype=float)
        p = p / p.sum()
    f0 = i0 / n
    if seeding == "uniform":
        rho = np.full(k.size, f0)
    elif seeding == "degree":
        rho = np.clip(f0 * k / np.dot(k, p), 0.0, 1.0)
    else:
        raise ValueError(f"unknown seeding {seeding!r}")

    def rhs(r):
        return drho_dt(r, k, p, mu)

    ts, fs = [0.0], [float(np.dot(rho, p))]
    t_rho, rhos = [0.0], [rho.copy()]
    max_clamp = 0.0
    t = 0.0
    step = 0
    while t < t_end - 1e-12 and fs[-1] < 1.0 - 1e-6:
        k1 = rhs(rho)
        k2 = rhs(rho + 0.5 * dt * k1)
        k3 = rhs(rho + 0.5 * dt * k2)
        k4 = rhs(rho + dt * k3)
        new = rho + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        over = max(float(new.max()) - 1.0, -float(new.min()), 0.0)
        if over > OVERSHOOT_TOL:
            raise StepSizeError(f"rho left [0, 1] by {over:.3g} at t={t:.6g}; reduce dt")
        max_clamp = max(max_clamp, over)
        rho = np.clip(new, 0.0, 1.0)
        step += 1
        t = step * dt
        ts.append(t)
        fs.append(float(np.dot(rho, p)))
        if step % record_every == 0:
            t_rho.append(t)
            rhos.append(rho.copy())
    if t_rho[-1] != ts[-1]:
        t_rho.append(ts[-1])
        rhos.append(rho.copy())
    return MeanFieldCurve(int(n), int(i0), float(mu), k.astype(int), p,
                          np.array(ts), np.array(fs), np.array(t_rho),
                          np.array(rhos), max_clamp)
