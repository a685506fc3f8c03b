"""Concrete Markov kernels with closed-form transition laws.

Drifted Brownian motion on the line, geometric Brownian motion on the
positive half line, and finite-state chains in continuous time given by a
generator matrix.  All three expose exact densities/matrices, exact samplers
and closed-form moments, so they serve both as base processes for restarting
and as the analytic reference in tests.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm
from scipy.special import ndtr

from .distributions import gaussian_raw_moment
from .errors import DomainError
from .kernels import MarkovKernel
from .spaces import FiniteSet, HalfLinePositive, Interval, RealLine, indicator

_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class BrownianWithDrift(MarkovKernel):
    """X(t) = x + mu*t + sigma*W(t) on the real line."""

    mu: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        if not (self.sigma > 0.0) or not math.isfinite(self.sigma):
            raise DomainError(f"sigma must be positive and finite, got {self.sigma}")
        if not math.isfinite(self.mu):
            raise DomainError(f"mu must be finite, got {self.mu}")

    @property
    def space(self):
        return RealLine()

    def transition_density(self, t, x, z):
        if not (t > 0.0):
            raise DomainError(f"density needs t > 0, got t={t}")
        sd = self.sigma * math.sqrt(t)
        u = (z - x - self.mu * t) / sd
        return math.exp(-0.5 * u * u) / (sd * _SQRT_2PI)

    def transition_probability(self, t, x, target):
        if t < 0.0 or math.isnan(t):
            raise DomainError(f"time must be nonnegative, got {t}")
        if t == 0.0:
            return indicator(target, x)
        sd = self.sigma * math.sqrt(t)
        m = x + self.mu * t
        return float(ndtr((target.upper - m) / sd) - ndtr((target.lower - m) / sd))

    def sample_transition(self, t, x, rng):
        if t < 0.0:
            raise DomainError(f"time must be nonnegative, got {t}")
        return x + self.mu * t + self.sigma * math.sqrt(t) * rng.standard_normal()

    def moment(self, k, t, x):
        return gaussian_raw_moment(k, x + self.mu * t, self.sigma * math.sqrt(t))

    def density_envelope(self, z, s_min):
        # the Gaussian peak is the prefactor; past s_min it only flattens
        return (1.0 / (self.sigma * math.sqrt(2.0 * math.pi * s_min)), 0.0)

    def certifies_absolute_moment(self, k):
        return True


@dataclass(frozen=True)
class GeometricBrownian(MarkovKernel):
    """dX = mu*X dt + sigma*X dW on (0, inf), solved exactly in log space."""

    mu: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        if not (self.sigma > 0.0) or not math.isfinite(self.sigma):
            raise DomainError(f"sigma must be positive and finite, got {self.sigma}")
        if not math.isfinite(self.mu):
            raise DomainError(f"mu must be finite, got {self.mu}")

    @property
    def space(self):
        return HalfLinePositive()

    def _log_params(self, t, x):
        return math.log(x) + (self.mu - 0.5 * self.sigma**2) * t, self.sigma * math.sqrt(t)

    def transition_density(self, t, x, z):
        if not (t > 0.0):
            raise DomainError(f"density needs t > 0, got t={t}")
        if x <= 0.0 or z <= 0.0:
            raise DomainError(f"states must be positive, got x={x}, z={z}")
        m, sd = self._log_params(t, x)
        u = (math.log(z) - m) / sd
        return math.exp(-0.5 * u * u) / (z * sd * _SQRT_2PI)

    def transition_probability(self, t, x, target):
        if t < 0.0 or math.isnan(t):
            raise DomainError(f"time must be nonnegative, got {t}")
        if x <= 0.0:
            raise DomainError(f"state must be positive, got x={x}")
        if t == 0.0:
            return indicator(target, x)
        m, sd = self._log_params(t, x)
        hi = ndtr((math.log(target.upper) - m) / sd) if target.upper > 0 else 0.0
        lo = ndtr((math.log(target.lower) - m) / sd) if target.lower > 0 else 0.0
        return float(hi - lo)

    def sample_transition(self, t, x, rng):
        if t < 0.0:
            raise DomainError(f"time must be nonnegative, got {t}")
        if x <= 0.0:
            raise DomainError(f"state must be positive, got x={x}")
        if t == 0.0:
            return x
        m, sd = self._log_params(t, x)
        return math.exp(m + sd * rng.standard_normal())

    def moment_growth_rate(self, k):
        """Exponential rate eta_k of E_x[X(t)^k] = x^k * exp(eta_k * t)."""
        k = float(k)
        return k * (self.mu - 0.5 * self.sigma**2) + 0.5 * k * k * self.sigma**2

    def moment(self, k, t, x):
        return x**k * math.exp(self.moment_growth_rate(k) * t)

    def density_envelope(self, z, s_min):
        if z <= 0.0:
            raise DomainError(f"state must be positive, got z={z}")
        return (1.0 / (z * self.sigma * math.sqrt(2.0 * math.pi * s_min)), 0.0)

    def certifies_absolute_moment(self, k):
        return True


class FiniteCTMC(MarkovKernel):
    """Continuous-time chain on n labelled states, given by generator Q.

    Q must have nonnegative off-diagonal entries and zero row sums; the
    transition matrix is the matrix exponential exp(Q*t).
    """

    def __init__(self, Q, state_values=None):
        Q = np.asarray(Q, dtype=float)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise DomainError(f"generator must be square, got shape {Q.shape}")
        n = Q.shape[0]
        if not np.all(np.isfinite(Q)):
            raise DomainError("generator entries must be finite")
        for i in range(n):
            for j in range(n):
                if i != j and Q[i, j] < 0.0:
                    raise DomainError(f"off-diagonal entry Q[{i},{j}]={Q[i, j]} is negative")
        rowsums = Q.sum(axis=1)
        bad = np.nonzero(np.abs(rowsums) > 1e-12 * max(1.0, float(np.abs(Q).max())))[0]
        if bad.size:
            i = int(bad[0])
            raise DomainError(f"row {i} of the generator sums to {rowsums[i]!r}, expected 0")
        if state_values is None:
            state_values = np.arange(n, dtype=float)
        values = np.asarray(state_values, dtype=float)
        if values.shape != (n,):
            raise DomainError(f"need {n} state labels, got shape {values.shape}")
        self.Q = Q
        self.values = values
        self._space = FiniteSet(tuple(values))

    def __repr__(self):
        return f"FiniteCTMC(n={self.space.n})"

    @property
    def space(self):
        return self._space

    def state_value(self, x):
        return float(self.values[int(x)])

    def transition_matrix(self, t):
        if t < 0.0 or math.isnan(t):
            raise DomainError(f"time must be nonnegative, got {t}")
        if t == 0.0:
            return np.eye(self.space.n)
        with np.errstate(over="ignore", invalid="ignore"):
            P = expm(self.Q * t)
        if not np.all(np.isfinite(P)):
            raise DomainError(
                f"matrix exponential overflowed at ||Q||*t = {np.abs(self.Q).max() * t:.3e}; "
                "rescale the generator"
            )
        return P

    def transition_probability(self, t, x, target):
        if t == 0.0:
            return indicator(target, x)
        row = self.transition_matrix(t)[int(x)]
        return float(sum(row[i] for i in target.indices))

    def sample_transition(self, t, x, rng):
        if t < 0.0:
            raise DomainError(f"time must be nonnegative, got {t}")
        n = self.space.n
        state = int(x)
        elapsed = 0.0
        while True:
            rate = -self.Q[state, state]
            if rate <= 0.0:
                return state
            elapsed += rng.exponential(1.0 / rate)
            if elapsed >= t:
                return state
            probs = self.Q[state].copy()
            probs[state] = 0.0
            state = int(rng.choice(n, p=probs / rate))

    def moment(self, k, t, x):
        row = self.transition_matrix(t)[int(x)]
        return float(row @ self.values**k)

    def certifies_absolute_moment(self, k):
        return True

    # exact linear-algebra companions, used as independent references

    def stationary_distribution(self):
        """Solve pi Q = 0, pi summing to 1, by least squares."""
        n = self.space.n
        A = np.vstack([self.Q.T, np.ones(n)])
        b = np.zeros(n + 1)
        b[-1] = 1.0
        pi, *_ = np.linalg.lstsq(A, b, rcond=None)
        return pi

    def resolvent_matrix(self, lam):
        """(lam*I - Q)^(-1), the Laplace transform of the transition matrices."""
        if lam <= 0.0:
            raise DomainError(f"resolvent needs a positive rate, got {lam}")
        return np.linalg.inv(lam * np.eye(self.space.n) - self.Q)

    def restarted_generator(self, lam, nu_vec):
        """Generator of the chain with rate-lam restarts redrawn from nu_vec."""
        nu_vec = np.asarray(nu_vec, dtype=float)
        n = self.space.n
        return self.Q + lam * (np.outer(np.ones(n), nu_vec) - np.eye(n))


def ctmc_from_dict(data):
    """Build a FiniteCTMC from {"Q": [[...]], "values": [...]}."""
    if not isinstance(data, dict):
        raise DomainError(f"expected an object with a 'Q' entry, got {type(data).__name__}")
    if "Q" not in data:
        raise DomainError("missing required entry 'Q'")
    extra = set(data) - {"Q", "values"}
    if extra:
        raise DomainError(f"unknown entries {sorted(extra)}; expected only 'Q' and 'values'")
    Q = data["Q"]
    if not isinstance(Q, list) or not all(isinstance(r, list) for r in Q):
        raise DomainError("'Q' must be a list of rows")
    n = len(Q)
    for i, row in enumerate(Q):
        if len(row) != n:
            raise DomainError(f"row {i} has {len(row)} entries, expected {n}")
        for j, v in enumerate(row):
            if not isinstance(v, (int, float)) or isinstance(v, bool):
                raise DomainError(f"entry at row {i}, column {j} is not a number: {v!r}")
    return FiniteCTMC(Q, data.get("values"))


def ctmc_from_json(path):
    """Load a chain description from a JSON file."""
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DomainError(f"{path} is not valid JSON: {exc}") from None
    return ctmc_from_dict(data)
