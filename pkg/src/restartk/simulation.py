"""Exact event-driven simulation of restarted processes.

No time discretisation anywhere: restart times are drawn from the
exponential clock, the base kernel is sampled exactly over each inter-event
interval, and the state is recorded on the requested grid.  Path i of a run
seeded with s draws from the substream SeedSequence((s, i)), so results are
reproducible path by path and independent of how paths are distributed over
workers.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, MomentUnstable, WindowTooNarrow
from .spaces import FiniteSet

# heavy-tail diagnostics for Monte Carlo moments: excess kurtosis of the
# k-th powers, and the largest single path's share of their absolute sum
KURTOSIS_THRESHOLD = 1000.0
MAX_SHARE_THRESHOLD = 0.2


@dataclass(frozen=True)
class PathConfig:
    """What to simulate: clock seed, horizon, recording grid, ensemble size."""

    seed: int
    horizon: float
    record_grid: tuple
    n_paths: int
    initial: object

    def __post_init__(self):
        if not isinstance(self.seed, (int, np.integer)) or self.seed < 0:
            raise DomainError(f"seed must be a nonnegative integer, got {self.seed!r}")
        h = float(self.horizon)
        if not (h > 0.0) or not math.isfinite(h):
            raise DomainError(f"horizon must be positive and finite, got {self.horizon}")
        grid = tuple(float(g) for g in self.record_grid)
        if not grid:
            raise DomainError("record_grid must contain at least one time")
        if any(g < 0.0 or g > h for g in grid):
            raise DomainError(f"record_grid must lie within [0, {h}]")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise DomainError("record_grid must be strictly increasing")
        if int(self.n_paths) < 1:
            raise DomainError(f"n_paths must be at least 1, got {self.n_paths}")
        object.__setattr__(self, "horizon", h)
        object.__setattr__(self, "record_grid", grid)
        object.__setattr__(self, "n_paths", int(self.n_paths))


@dataclass
class PathSample:
    """One simulated path: recorded states and the restart bookkeeping."""

    states: np.ndarray
    restart_times: np.ndarray
    n_restarts_at_horizon: int


@dataclass(frozen=True)
class EstimatorReport:
    """A Monte Carlo estimate with its standard error and sample size."""

    estimate: float
    std_error: float
    n: int
    heavy_tailed: bool = False


@dataclass
class EnsembleResult:
    """Grid-aligned arrays across an ensemble of paths.

    states[i, j] is path i at grid time j (a state index for finite
    spaces), restart_counts[i, j] the number of restarts up to that time,
    and ages[i, j] the time since the last restart (NaN before the first).
    """

    grid: np.ndarray
    states: np.ndarray
    restart_counts: np.ndarray
    ages: np.ndarray
    n_restarts_at_horizon: np.ndarray


def path_rng(seed, path_index):
    """The dedicated random stream of one path."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, path_index))))


def draw_restart_times(rng, rate, horizon):
    """All restart times in (0, horizon], drawn as cumulative exponential gaps."""
    if rate == 0.0:
        return np.empty(0)
    times = []
    total = 0.0
    chunk = max(16, int(rate * horizon + 6.0 * math.sqrt(rate * horizon) + 10.0))
    while total <= horizon:
        gaps = rng.exponential(1.0 / rate, size=chunk)
        gaps[0] += total
        cum = np.cumsum(gaps)
        times.append(cum)
        total = float(cum[-1])
        chunk = 16
    times = np.concatenate(times)
    return times[times <= horizon]


def _run_path(proc, config, path_index, events=None):
    """Walk one path over the grid; optionally collect per-event rows."""
    rng = path_rng(config.seed, path_index)
    state = config.initial.sample(rng)
    restarts = draw_restart_times(rng, proc.rate, config.horizon)
    grid = config.record_grid
    states = np.empty(len(grid))
    counts = np.empty(len(grid), dtype=np.int64)
    ages = np.empty(len(grid))
    base = proc.base
    nu = proc.restart.nu
    ri = 0
    now = 0.0
    for j, g in enumerate(grid):
        while ri < len(restarts) and restarts[ri] <= g:
            dt = restarts[ri] - now
            if dt > 0.0:
                state = base.sample_transition(dt, state, rng)
            state = nu.sample(rng)
            now = restarts[ri]
            ri += 1
            if events is not None:
                events.append((now, state, "restart"))
        dt = g - now
        if dt > 0.0:
            state = base.sample_transition(dt, state, rng)
        now = g
        states[j] = state
        counts[j] = ri
        ages[j] = now - restarts[ri - 1] if ri > 0 else math.nan
        if events is not None:
            events.append((g, state, "grid"))
    if events is not None:
        # event logs also cover restarts between the last grid time and the
        # horizon; grid recordings above are unaffected
        while ri < len(restarts):
            dt = restarts[ri] - now
            if dt > 0.0:
                state = base.sample_transition(dt, state, rng)
            state = nu.sample(rng)
            now = restarts[ri]
            ri += 1
            events.append((now, state, "restart"))
    return states, counts, ages, restarts


def simulate_path(proc, config, path_index=0):
    """One exact path of the restarted process."""
    _check_initial(proc, config)
    states, counts, ages, restarts = _run_path(proc, config, path_index)
    return PathSample(states, restarts, int(len(restarts)))


def _ensemble_chunk(proc, config, lo, hi):
    m = hi - lo
    g = len(config.record_grid)
    states = np.empty((m, g))
    counts = np.empty((m, g), dtype=np.int64)
    ages = np.empty((m, g))
    n_restarts = np.empty(m, dtype=np.int64)
    for i in range(lo, hi):
        s, c, a, r = _run_path(proc, config, i)
        states[i - lo] = s
        counts[i - lo] = c
        ages[i - lo] = a
        n_restarts[i - lo] = len(r)
    return states, counts, ages, n_restarts


def run_ensemble(proc, config, workers=1):
    """Simulate the whole ensemble; worker count never changes the draws.

    Parallel execution needs the process and config to be picklable, which
    holds for all kernels and distributions shipped here.
    """
    _check_initial(proc, config)
    n = config.n_paths
    workers = max(1, int(workers))
    if workers == 1 or n < 2 * workers:
        parts = [_ensemble_chunk(proc, config, 0, n)]
    else:
        bounds = np.linspace(0, n, workers + 1).astype(int)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(
                pool.map(
                    _ensemble_chunk,
                    [proc] * workers,
                    [config] * workers,
                    bounds[:-1],
                    bounds[1:],
                )
            )
    return EnsembleResult(
        np.asarray(config.record_grid),
        np.concatenate([p[0] for p in parts]),
        np.concatenate([p[1] for p in parts]),
        np.concatenate([p[2] for p in parts]),
        np.concatenate([p[3] for p in parts]),
    )


def _check_initial(proc, config):
    if not config.initial.supported_in(proc.space):
        raise DomainError(
            f"initial distribution {config.initial!r} is not supported in {proc.space!r}"
        )


def _grid_index(config, t):
    grid = np.asarray(config.record_grid)
    hits = np.nonzero(np.isclose(grid, t, rtol=0.0, atol=1e-12))[0]
    if hits.size == 0:
        raise DomainError(f"t={t} is not on the record grid {list(grid)}")
    return int(hits[0])


def state_labels(proc, states):
    """Map recorded states to their numeric values (labels on finite spaces)."""
    if isinstance(proc.space, FiniteSet):
        return np.asarray(proc.space.values)[states.astype(int)]
    return states


def monte_carlo_moment(proc, config, k, t, ensemble=None, workers=1):
    """Estimate E[X(t)^k] over the ensemble, with heavy-tail diagnostics.

    Emits MomentUnstable (and flags the report) when the k-th powers show
    heavy-tail symptoms: enormous excess kurtosis or one path dominating
    their absolute sum.  The standard error is then unreliable and the
    moment itself may not exist.
    """
    j = _grid_index(config, t)
    if ensemble is None:
        ensemble = run_ensemble(proc, config, workers=workers)
    vals = state_labels(proc, ensemble.states[:, j]) ** k
    n = len(vals)
    est = float(np.mean(vals))
    se = float(np.std(vals, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    heavy = _heavy_tailed(vals)
    if heavy:
        warnings.warn(
            f"moment k={k} at t={t}: heavy-tail symptoms in the sample; "
            "standard error unreliable, moment may be infinite",
            MomentUnstable,
        )
    return EstimatorReport(est, se, n, heavy)


def _heavy_tailed(vals):
    n = len(vals)
    if n < 16:
        return False
    centered = vals - np.mean(vals)
    m2 = float(np.mean(centered**2))
    if m2 == 0.0:
        return False
    m4 = float(np.mean(centered**4))
    kurtosis = m4 / m2**2 - 3.0
    absvals = np.abs(vals)
    total = float(np.sum(absvals))
    share = float(np.max(absvals)) / total if total > 0.0 else 0.0
    return kurtosis > KURTOSIS_THRESHOLD or share > MAX_SHARE_THRESHOLD


@dataclass
class AgeReport:
    """Empirical law of the time since the last restart versus theory."""

    grid: np.ndarray
    empirical: np.ndarray
    theoretical: np.ndarray
    max_deviation: float
    threshold: float
    n_paths: int
    passed: bool


def age_distribution_test(proc, t, n_paths, seed, grid_points=200):
    """Check that the age of the restart clock at time t is truncated-exponential.

    P[age <= s, at least one restart] should equal 1 - exp(-lam*s) for
    s in [0, t].  Only the clock matters, so paths are reduced to their
    restart times.  Deviations are compared on a uniform grid against a
    3/sqrt(n) band.
    """
    lam = proc.rate
    if lam <= 0.0:
        raise DomainError("age test needs a positive restart rate")
    t = float(t)
    if t <= 0.0:
        raise DomainError(f"t must be positive, got {t}")
    last = np.full(n_paths, -math.inf)
    for i in range(n_paths):
        rng = path_rng(seed, i)
        restarts = draw_restart_times(rng, lam, t)
        if len(restarts):
            last[i] = restarts[-1]
    ages = np.sort(t - last)  # inf where no restart happened
    grid = np.linspace(0.0, t, grid_points)
    empirical = np.searchsorted(ages, grid, side="right") / n_paths
    theoretical = 1.0 - np.exp(-lam * grid)
    dev = float(np.max(np.abs(empirical - theoretical)))
    threshold = 3.0 / math.sqrt(n_paths)
    return AgeReport(grid, empirical, theoretical, dev, threshold, n_paths, dev < threshold)


@dataclass
class HistogramReport:
    """Binned empirical law at one grid time, optionally against a reference."""

    bin_edges: np.ndarray
    empirical_masses: np.ndarray
    outside_mass: float
    reference_masses: np.ndarray
    reference_outside: float
    tv_distance: float
    noise_floor: float
    n: int


def empirical_distribution(
    proc,
    config,
    t,
    bins,
    window,
    reference_pdf=None,
    reference_cdf=None,
    ensemble=None,
    workers=1,
):
    """Histogram of the ensemble at time t on a continuous state space.

    When a reference law is supplied (as a density or a distribution
    function), the report carries the total variation distance on the bin
    partition, an 'outside the window' cell included.  The window must hold
    all but 1e-4 of the reference mass, otherwise WindowTooNarrow is
    raised.  The sampling noise floor sqrt(bins/n) calibrates how small a
    TV distance can meaningfully get.
    """
    if isinstance(proc.space, FiniteSet):
        raise DomainError("histograms are for continuous state spaces; use state frequencies")
    a, b = float(window[0]), float(window[1])
    if not (a < b):
        raise DomainError(f"window must be a nonempty interval, got ({a}, {b})")
    bins = int(bins)
    if bins < 1:
        raise DomainError(f"need at least one bin, got {bins}")
    j = _grid_index(config, t)
    if ensemble is None:
        ensemble = run_ensemble(proc, config, workers=workers)
    vals = ensemble.states[:, j]
    n = len(vals)
    edges = np.linspace(a, b, bins + 1)
    counts, _ = np.histogram(vals, bins=edges)
    emp = counts / n
    emp_out = 1.0 - float(emp.sum())

    ref = None
    ref_out = math.nan
    tv = math.nan
    if reference_cdf is not None or reference_pdf is not None:
        ref = _reference_masses(edges, reference_pdf, reference_cdf)
        ref_out = 1.0 - float(ref.sum())
        if ref_out > 1e-4:
            raise WindowTooNarrow(
                f"window ({a}, {b}) misses {ref_out:.3e} of the reference mass (limit 1e-4)"
            )
        tv = 0.5 * (float(np.abs(emp - ref).sum()) + abs(emp_out - ref_out))
    return HistogramReport(
        edges, emp, emp_out, ref, ref_out, tv, math.sqrt(bins / n), n
    )


def _reference_masses(edges, pdf, cdf):
    if cdf is not None:
        vals = np.asarray([cdf(e) for e in edges], dtype=float)
        return np.diff(vals)
    from scipy.integrate import quad

    masses = np.empty(len(edges) - 1)
    for i in range(len(masses)):
        masses[i], _ = quad(pdf, edges[i], edges[i + 1], epsabs=1e-12, epsrel=1e-9)
    return masses


def histogram_tv(masses_a, outside_a, masses_b, outside_b):
    """Total variation distance between two binned laws on the same partition."""
    return 0.5 * (float(np.abs(np.asarray(masses_a) - np.asarray(masses_b)).sum()) + abs(outside_a - outside_b))


def write_path_csv(proc, config, out):
    """Stream every path as CSV rows: path_id,time,state,event_type.

    A row is written at each restart (state just after the redraw) and at
    each grid time, in time order; restart rows precede a grid row at the
    same instant.  States on finite spaces are written as labels.
    """
    _check_initial(proc, config)
    own = isinstance(out, str)
    fh = open(out, "w") if own else out
    try:
        fh.write("path_id,time,state,event_type\n")
        for i in range(config.n_paths):
            events = []
            _run_path(proc, config, i, events=events)
            for time, state, kind in events:
                label = proc.state_value(state) if isinstance(proc.space, FiniteSet) else state
                fh.write(f"{i},{format(time, '.17g')},{format(label, '.17g')},{kind}\n")
    finally:
        if own:
            fh.close()
