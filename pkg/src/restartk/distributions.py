"""Restart and initial distributions.

A distribution must be able to sample exactly and to integrate functions
against itself; closed-form moments are provided where the law admits them.
On finite state spaces, states are indices and a distribution is a weight
vector; on continuous spaces it is a point mass, a finite mixture of point
masses, or an absolutely continuous law given by a density and an exact
sampler.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import partial

import numpy as np
from scipy import integrate

from .errors import DomainError
from .spaces import FiniteSet, HalfLinePositive, RealLine


def gaussian_raw_moment(k, mean, std):
    """E[(mean + std*Z)^k] for standard normal Z, by the binomial expansion.

    Odd central moments vanish; even ones are std^j * (j-1)!!.
    """
    k = int(k)
    if k < 0:
        raise DomainError(f"moment order must be nonnegative, got {k}")
    total = 0.0
    for j in range(0, k + 1, 2):
        total += math.comb(k, j) * mean ** (k - j) * std**j * _double_factorial_odd(j - 1)
    return total


def _double_factorial_odd(m):
    # (-1)!! = 1 by convention
    out = 1.0
    while m > 1:
        out *= m
        m -= 2
    return out


@dataclass(frozen=True)
class PointMass:
    """All mass at a single state.

    On a finite space the state is an index; on a continuous space a float.
    """

    x: object

    def sample(self, rng):
        return self.x

    def expect(self, f):
        return f(self.x)

    def moment(self, k):
        return float(self.x) ** k

    def supported_in(self, space):
        return space.contains(self.x)

    def weights(self, space):
        w = np.zeros(space.n)
        w[int(self.x)] = 1.0
        return w


@dataclass(frozen=True)
class FiniteSupport:
    """A finite mixture of point masses: ((state, weight), ...)."""

    points: tuple

    def __post_init__(self):
        pts = tuple((s, float(w)) for s, w in self.points)
        if not pts:
            raise DomainError("finite-support distribution needs at least one atom")
        wsum = 0.0
        for s, w in pts:
            if w < 0.0 or not math.isfinite(w):
                raise DomainError(f"weight {w} at state {s} is not a finite nonnegative number")
            wsum += w
        if abs(wsum - 1.0) > 1e-12:
            raise DomainError(f"weights sum to {wsum!r}, expected 1 within 1e-12")
        object.__setattr__(self, "points", pts)

    def sample(self, rng):
        probs = [w for _, w in self.points]
        i = rng.choice(len(self.points), p=probs)
        return self.points[i][0]

    def expect(self, f):
        return sum(w * f(s) for s, w in self.points)

    def moment(self, k):
        return sum(w * float(s) ** k for s, w in self.points)

    def supported_in(self, space):
        return all(space.contains(s) for s, _ in self.points)

    def weights(self, space):
        w = np.zeros(space.n)
        for s, p in self.points:
            w[int(s)] += p
        return w


class DensityDistribution:
    """An absolutely continuous law on a continuous space.

    Parameters
    ----------
    pdf : callable
        Density, evaluated pointwise.
    sampler : callable
        rng -> one exact draw.
    support : (float, float)
        Interval outside which the density vanishes.
    moment_fn : callable or None
        k -> k-th raw moment in closed form, when known.  Without it
        ``moment`` returns None and downstream formulas fall back to
        quadrature against the density.
    """

    def __init__(self, pdf, sampler, support, moment_fn=None, name=None):
        self.pdf = pdf
        self._sampler = sampler
        self.support = (float(support[0]), float(support[1]))
        self._moment_fn = moment_fn
        self.name = name or "density"

    def __repr__(self):
        return f"DensityDistribution({self.name})"

    def sample(self, rng):
        return self._sampler(rng)

    def expect(self, f, rel_tol=1e-10):
        a, b = self.support
        val, _ = integrate.quad(
            lambda y: f(y) * self.pdf(y), a, b, epsabs=1e-12, epsrel=rel_tol, limit=200
        )
        return val

    def moment(self, k):
        if self._moment_fn is None:
            return None
        return self._moment_fn(int(k))

    def total_mass(self):
        """Integral of the density over its support; should be 1."""
        a, b = self.support
        val, _ = integrate.quad(self.pdf, a, b, epsabs=1e-13, epsrel=1e-11, limit=200)
        return val

    def supported_in(self, space):
        if isinstance(space, FiniteSet):
            return False
        if isinstance(space, HalfLinePositive):
            return self.support[0] >= 0.0
        return isinstance(space, RealLine)


# pdf/sampler/moment helpers live at module level (not closures) so the
# distributions they build stay picklable for multi-process simulation


def _gauss_pdf(y, mean, std):
    z = (y - mean) / std
    return math.exp(-0.5 * z * z) / (std * math.sqrt(2.0 * math.pi))


def _gauss_sample(rng, mean, std):
    return mean + std * rng.standard_normal()


def _gauss_moment(k, mean, std):
    return gaussian_raw_moment(k, mean, std)


def gaussian(mean, std):
    """Normal law with the given mean and standard deviation."""
    mean, std = float(mean), float(std)
    if std <= 0.0:
        raise DomainError(f"standard deviation must be positive, got {std}")
    return DensityDistribution(
        partial(_gauss_pdf, mean=mean, std=std),
        partial(_gauss_sample, mean=mean, std=std),
        (-math.inf, math.inf),
        moment_fn=partial(_gauss_moment, mean=mean, std=std),
        name=f"gaussian(mean={mean}, std={std})",
    )


def _exp_pdf(y, rate):
    return rate * math.exp(-rate * y) if y >= 0.0 else 0.0


def _exp_sample(rng, rate):
    return rng.exponential(1.0 / rate)


def _exp_moment(k, rate):
    return math.factorial(k) / rate**k


def exponential(rate):
    """Exponential law on (0, inf) with the given rate."""
    rate = float(rate)
    if rate <= 0.0:
        raise DomainError(f"rate must be positive, got {rate}")
    return DensityDistribution(
        partial(_exp_pdf, rate=rate),
        partial(_exp_sample, rate=rate),
        (0.0, math.inf),
        moment_fn=partial(_exp_moment, rate=rate),
        name=f"exponential(rate={rate})",
    )


def _lognorm_pdf(y, m, s):
    if y <= 0.0:
        return 0.0
    z = (math.log(y) - m) / s
    return math.exp(-0.5 * z * z) / (y * s * math.sqrt(2.0 * math.pi))


def _lognorm_sample(rng, m, s):
    return math.exp(m + s * rng.standard_normal())


def _lognorm_moment(k, m, s):
    return math.exp(k * m + 0.5 * k * k * s * s)


def lognormal(log_mean, log_std):
    """Law of exp(N(log_mean, log_std^2)) on (0, inf)."""
    m, s = float(log_mean), float(log_std)
    if s <= 0.0:
        raise DomainError(f"log-standard deviation must be positive, got {s}")
    return DensityDistribution(
        partial(_lognorm_pdf, m=m, s=s),
        partial(_lognorm_sample, m=m, s=s),
        (0.0, math.inf),
        moment_fn=partial(_lognorm_moment, m=m, s=s),
        name=f"lognormal(log_mean={m}, log_std={s})",
    )


def nu_weights(nu, space):
    """Weight vector of a restart distribution on a finite space."""
    if not isinstance(space, FiniteSet):
        raise DomainError("weight vectors only exist on finite state spaces")
    if not hasattr(nu, "weights"):
        raise DomainError(f"{type(nu).__name__} cannot be represented on a finite space")
    return nu.weights(space)


def cdf_of(dist, grid):
    """Distribution function of ``dist`` evaluated on a grid, where available.

    Used by statistical tests comparing empirical post-restart states to the
    restart law.
    """
    grid = np.asarray(grid, dtype=float)
    if isinstance(dist, PointMass):
        return (grid >= float(dist.x)).astype(float)
    if isinstance(dist, FiniteSupport):
        out = np.zeros_like(grid)
        for s, w in dist.points:
            out += w * (grid >= float(s))
        return out
    if isinstance(dist, DensityDistribution):
        a, _ = dist.support
        out = np.empty_like(grid)
        for i, g in enumerate(grid):
            lo = a if math.isfinite(a) else min(g - 50.0, -50.0)
            out[i], _ = integrate.quad(dist.pdf, lo, g, epsabs=1e-11, epsrel=1e-9, limit=200)
        return np.clip(out, 0.0, 1.0)
    raise DomainError(f"no distribution function for {type(dist).__name__}")


__all__ = [
    "PointMass",
    "FiniteSupport",
    "DensityDistribution",
    "gaussian",
    "exponential",
    "lognormal",
    "gaussian_raw_moment",
    "nu_weights",
    "cdf_of",
]
