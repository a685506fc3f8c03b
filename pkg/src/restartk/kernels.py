"""Markov kernel contracts and composition with a Poisson restart clock.

A :class:`MarkovKernel` is an exact description of a time-homogeneous Markov
process: interval or subset probabilities, an exact sampler, and (where the
law admits them) densities, matrices and closed-form moments.

:class:`RestartedProcess` wraps a kernel together with a
:class:`RestartSpec` (rate lam, redraw law nu) and is itself a MarkovKernel.
Its transition law splits over the age of the restart clock: with weight
exp(-lam*t) no restart happened and the base kernel acts for the full time,
otherwise the state was redrawn from nu at some time t-s in the past and the
base kernel acts for the remaining s, which is exponentially distributed and
independent of everything before.  Every quantity of the restarted process is
therefore an exponentially weighted time integral of the corresponding base
quantity, evaluated here by certified quadrature.  Letting the horizon grow
gives the invariant law, which the restarted process always has, no matter
how badly the base process escapes.
"""

from __future__ import annotations

import abc
import math
from dataclasses import dataclass

import numpy as np

from .distributions import DensityDistribution, nu_weights
from .errors import DomainError, SingularityAtOrigin
from .quadrature import DEFAULT_ABS_TOL, DEFAULT_REL_TOL, exp_weighted_integral
from .spaces import FiniteSet, indicator, validate_target


class MarkovKernel(abc.ABC):
    """Transition function of a homogeneous Markov process."""

    @property
    @abc.abstractmethod
    def space(self):
        """The state space the kernel acts on."""

    @abc.abstractmethod
    def transition_probability(self, t, x, target):
        """P(t, x, target) for t >= 0; t = 0 gives the indicator of x in target."""

    @abc.abstractmethod
    def sample_transition(self, t, x, rng):
        """One exact draw of the state at time t started from x."""

    def transition_density(self, t, x, z):
        raise NotImplementedError(f"{type(self).__name__} has no transition density")

    def transition_matrix(self, t):
        raise NotImplementedError(f"{type(self).__name__} has no transition matrix")

    def moment(self, k, t, x):
        """E_x[X(t)^k] in closed form, or None when the kernel has none."""
        return None

    def state_value(self, x):
        """Numeric value of a state (the label, for finite spaces)."""
        return float(x)

    def density_envelope(self, z, s_min):
        """(C, eta) with p(s, y, z) <= C*exp(eta*s) for all y and s >= s_min.

        Used to truncate semi-infinite time integrals of the density.  The
        default refuses, which keeps kernels without a certified envelope
        out of density-based stationary computations.
        """
        raise NotImplementedError(f"{type(self).__name__} has no density envelope")

    def certifies_absolute_moment(self, k):
        """Whether E_x|X(s)|^k is finite for all s in compacts, with a proof.

        Backing for interchanging the time integral and the expectation in
        moment formulas; kernels that cannot certify it leave downstream
        moment evaluations flagged.
        """
        return False


def _check_time(t):
    t = float(t)
    if t < 0.0 or math.isnan(t):
        raise DomainError(f"time must be nonnegative, got {t}")
    return t


@dataclass(frozen=True)
class RestartSpec:
    """Restart clock: Poisson rate and the redraw distribution.

    rate = 0 is the degenerate no-restart case; it is accepted so the
    simulator can run the plain kernel, but stationary quantities then do
    not exist and the corresponding operations fail.
    """

    rate: float
    nu: object

    def __post_init__(self):
        r = float(self.rate)
        if r < 0.0 or not math.isfinite(r):
            raise DomainError(f"restart rate must be finite and nonnegative, got {self.rate}")
        object.__setattr__(self, "rate", r)


class RestartedProcess(MarkovKernel):
    """A Markov kernel run under an independent Poisson restart clock."""

    def __init__(self, base, restart):
        if not restart.nu.supported_in(base.space):
            raise DomainError(
                f"restart distribution {restart.nu!r} is not supported in {base.space!r}"
            )
        self.base = base
        self.restart = restart

    @property
    def space(self):
        return self.base.space

    @property
    def rate(self):
        return self.restart.rate

    def state_value(self, x):
        return self.base.state_value(x)

    def certifies_absolute_moment(self, k):
        return self.base.certifies_absolute_moment(k)

    def no_restart_weight(self, t):
        """Probability that the clock has not fired by time t."""
        return math.exp(-self.rate * _check_time(t))

    # -- transition law -------------------------------------------------

    def transition_probability(self, t, x, target, rel_tol=DEFAULT_REL_TOL):
        t = _check_time(t)
        validate_target(self.space, target)
        if t == 0.0:
            return indicator(target, x)
        lam = self.rate
        term1 = math.exp(-lam * t) * self.base.transition_probability(t, x, target)
        if lam == 0.0:
            return term1
        return term1 + self._nu_expect(
            lambda y: self._weighted(
                lambda s: self.base.transition_probability(s, y, target), t, rel_tol
            ),
            rel_tol,
        )

    def transition_density(self, t, x, z, rel_tol=DEFAULT_REL_TOL):
        t = float(t)
        if t == 0.0:
            raise SingularityAtOrigin("the transition law at t=0 is a point mass, not a density")
        t = _check_time(t)
        lam = self.rate
        term1 = math.exp(-lam * t) * self.base.transition_density(t, x, z)
        if lam == 0.0:
            return term1
        return term1 + self._nu_expect(
            lambda y: self._weighted(lambda s: self.base.transition_density(s, y, z), t, rel_tol),
            rel_tol,
        )

    def transition_matrix(self, t, rel_tol=DEFAULT_REL_TOL):
        t = _check_time(t)
        P = self.base.transition_matrix(t)
        lam = self.rate
        if lam == 0.0 or t == 0.0:
            return P
        w = nu_weights(self.restart.nu, self.space)
        M = exp_weighted_integral(
            self.base.transition_matrix, lam, t, rel_tol=rel_tol
        ).value
        return math.exp(-lam * t) * P + np.outer(np.ones(self.space.n), w @ M)

    def sample_transition(self, t, x, rng):
        t = _check_time(t)
        lam = self.rate
        state = x
        elapsed = 0.0
        while True:
            gap = rng.exponential(1.0 / lam) if lam > 0.0 else math.inf
            if elapsed + gap >= t:
                dt = t - elapsed
                if dt > 0.0:
                    state = self.base.sample_transition(dt, state, rng)
                return state
            if gap > 0.0:
                state = self.base.sample_transition(gap, state, rng)
            state = self.restart.nu.sample(rng)
            elapsed += gap

    def moment(self, k, t, x, rel_tol=DEFAULT_REL_TOL):
        """E_x[X(t)^k] by weighting the base kernel's closed-form moments."""
        t = _check_time(t)
        if t == 0.0:
            return self.base.state_value(x) ** k
        term1_base = self.base.moment(k, t, x)
        if term1_base is None:
            return None
        lam = self.rate
        term1 = math.exp(-lam * t) * term1_base
        if lam == 0.0:
            return term1
        return term1 + self._nu_expect(
            lambda y: self._weighted(lambda s: self.base.moment(k, s, y), t, rel_tol),
            rel_tol,
        )

    # -- stationary law --------------------------------------------------

    def invariant_measure(self, target, rel_tol=DEFAULT_REL_TOL):
        """Mass the unique invariant law puts on the target set."""
        validate_target(self.space, target)
        self._positive_rate()
        return self._nu_expect(
            lambda y: self._weighted(
                lambda s: self.base.transition_probability(s, y, target), math.inf, rel_tol
            ),
            rel_tol,
        )

    def invariant_density(self, z, rel_tol=DEFAULT_REL_TOL):
        """Density of the invariant law at z, for kernels with densities."""
        lam = self._positive_rate()
        s_min = min(1.0 / lam, 1.0)
        env = self.base.density_envelope(z, s_min)
        return self._nu_expect(
            lambda y: self._weighted(
                lambda s: self.base.transition_density(s, y, z),
                math.inf,
                rel_tol,
                growth_bound=env,
                bound_valid_from=s_min,
            ),
            rel_tol,
        )

    def invariant_vector(self, rel_tol=DEFAULT_REL_TOL):
        """Invariant weight vector on a finite state space."""
        lam = self._positive_rate()
        if not isinstance(self.space, FiniteSet):
            raise DomainError("invariant_vector needs a finite state space")
        w = nu_weights(self.restart.nu, self.space)
        M = exp_weighted_integral(
            self.base.transition_matrix, lam, math.inf, rel_tol=rel_tol
        ).value
        return w @ M

    # -- helpers ---------------------------------------------------------

    def _positive_rate(self):
        if self.rate == 0.0:
            raise DomainError("rate 0 never restarts; no stationary law exists")
        return self.rate

    def _weighted(self, f, upper, rel_tol, **kw):
        return exp_weighted_integral(
            f, self.rate, upper, rel_tol=rel_tol, abs_tol=DEFAULT_ABS_TOL, **kw
        ).value

    def _nu_expect(self, inner, rel_tol):
        nu = self.restart.nu
        if isinstance(nu, DensityDistribution):
            # nested quadrature: inner time integral per y, outer over nu
            return nu.expect(inner, rel_tol=max(rel_tol, 1e-10))
        return nu.expect(inner)


def resolvent(kernel, lam, y, target, rel_tol=DEFAULT_REL_TOL):
    """R_lam(y, target) = int_0^inf exp(-lam*s) P(s, y, target) ds.

    The invariant law of the restarted process is lam times the nu-average
    of this resolvent.
    """
    lam = float(lam)
    if lam <= 0.0:
        raise DomainError(f"resolvent needs a positive rate, got {lam}")
    validate_target(kernel.space, target)
    weighted = exp_weighted_integral(
        lambda s: kernel.transition_probability(s, y, target), lam, math.inf, rel_tol=rel_tol
    ).value
    return weighted / lam
