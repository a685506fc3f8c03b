"""State spaces and the measurable sets used to address them.

Three state spaces are supported: the real line, the strictly positive half
line, and finite sets of labelled states.  Probabilities are always requested
for a *target*: an :class:`Interval` on a continuous space, or a
:class:`Subset` of state indices on a finite space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, UnsupportedTarget


@dataclass(frozen=True)
class RealLine:
    """The real line."""

    def contains(self, x):
        return bool(np.isfinite(x))


@dataclass(frozen=True)
class HalfLinePositive:
    """The open half line (0, inf)."""

    def contains(self, x):
        return bool(np.isfinite(x)) and x > 0.0


@dataclass(frozen=True)
class FiniteSet:
    """A finite state set with distinct real-valued labels.

    States are addressed by index; ``values[i]`` is the numeric label of
    state ``i`` (used when taking moments of a finite-state process).
    """

    values: tuple

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if len(vals) == 0:
            raise DomainError("a finite state set needs at least one state")
        if not all(math.isfinite(v) for v in vals):
            raise DomainError("state labels must be finite")
        if len(set(vals)) != len(vals):
            raise DomainError("state labels must be distinct")
        object.__setattr__(self, "values", vals)

    @property
    def n(self):
        return len(self.values)

    def contains(self, x):
        return isinstance(x, (int, np.integer)) and 0 <= int(x) < self.n


@dataclass(frozen=True)
class Interval:
    """A closed interval [lower, upper]; either side may be infinite."""

    lower: float = -math.inf
    upper: float = math.inf

    def __post_init__(self):
        lo, hi = float(self.lower), float(self.upper)
        if math.isnan(lo) or math.isnan(hi):
            raise DomainError("interval bounds must not be NaN")
        if lo > hi:
            raise DomainError(f"empty interval: lower={lo} > upper={hi}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    def contains(self, x):
        return self.lower <= x <= self.upper


@dataclass(frozen=True)
class Subset:
    """A subset of a finite state set, given by state indices."""

    indices: frozenset

    def __init__(self, indices):
        object.__setattr__(self, "indices", frozenset(int(i) for i in indices))

    def contains(self, x):
        return int(x) in self.indices


def whole_space(space):
    """The target describing all of ``space``."""
    if isinstance(space, FiniteSet):
        return Subset(range(space.n))
    if isinstance(space, HalfLinePositive):
        return Interval(0.0, math.inf)
    return Interval(-math.inf, math.inf)


def validate_target(space, target):
    """Check that ``target`` makes sense on ``space``.

    Raises UnsupportedTarget on a space/target mismatch and DomainError for
    out-of-range indices.
    """
    if isinstance(space, FiniteSet):
        if not isinstance(target, Subset):
            raise UnsupportedTarget(
                f"finite state space takes Subset targets, got {type(target).__name__}"
            )
        bad = [i for i in target.indices if i < 0 or i >= space.n]
        if bad:
            raise DomainError(f"state indices {sorted(bad)} out of range for n={space.n}")
    elif isinstance(space, (RealLine, HalfLinePositive)):
        if not isinstance(target, Interval):
            raise UnsupportedTarget(
                f"continuous state space takes Interval targets, got {type(target).__name__}"
            )
    else:
        raise UnsupportedTarget(f"unknown state space {type(space).__name__}")


def indicator(target, x):
    """1.0 if x lies in the target, else 0.0."""
    return 1.0 if target.contains(x) else 0.0
