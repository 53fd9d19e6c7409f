"""Monte Carlo reliability estimation over continuous-time Markov models.

Trials follow the standard stochastic-simulation recipe: in state i the
holding time is exponential with the state's total exit rate, and the next
state is chosen among competitors with probability proportional to its
rate.  Trial t draws its randomness exclusively from the counter-based
cell ``(seed, trial=t, substream)`` (see :mod:`securakit.rng`), and
estimates reduce per-trial outcomes in trial-index order, so results are
bit-identical no matter how many worker threads execute the trials.

Reliability estimation is horizon-limited on the absorbing variant of the
chain (Eq.-10 style sample mean of survival indicators); MTTF estimation
collects uncapped times to absorption (Eq.-11 style sample mean) with an
event-count cap as a runaway guard.  The two are deliberately separate
operations: collecting TTFs only up to a horizon would bias MTTF downward.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import markov
from .errors import ConvergenceError, DomainError
from .markov import Ctmc
from .rng import TRIAL_BOUND, CounterRng, uniform_block
from .securability import ChainSubsystem, RoutOfNSystem

_Z95 = 1.959963984540054  # two-sided 95% normal quantile


@dataclass(frozen=True)
class MonteCarloConfig:
    """Trial count, mission horizon, reproducibility seed, and threshold.

    ``threshold`` is the minimum fraction of subsystems that must be up in
    threshold-criterion systems.  ``max_events`` caps the per-trial event
    count of uncapped simulations; exceeding it signals an effectively
    unreachable failure set.  ``horizon`` is permitted to be zero for the
    degenerate instant mission (reliability exactly 1).
    """

    n_trials: int
    horizon: float
    seed: int
    threshold: float = 1.0
    max_events: int = 10 ** 9

    def __post_init__(self):
        if not (isinstance(self.n_trials, int) and 1 <= self.n_trials < TRIAL_BOUND):
            raise DomainError(f"n_trials must be an int in [1, 2**32), got {self.n_trials!r}")
        if not (math.isfinite(self.horizon) and self.horizon >= 0):
            raise DomainError(f"horizon must be finite and >= 0, got {self.horizon}")
        if not (isinstance(self.seed, int) and 0 <= self.seed < 2 ** 64):
            raise DomainError(f"seed must be an int in [0, 2**64), got {self.seed!r}")
        if not 0 < self.threshold <= 1:
            raise DomainError(f"threshold must lie in (0, 1], got {self.threshold}")
        if self.max_events < 1:
            raise DomainError("max_events must be >= 1")


@dataclass(frozen=True)
class Trajectory:
    """One sampled path: (time, state) transitions plus how it ended.

    ``absorbed_at`` is the entry time into a state with no outgoing rates;
    ``None`` means the path survived to the horizon.
    """

    events: tuple[tuple[float, int], ...]
    absorbed_at: float | None = None

    def __post_init__(self):
        times = [e[0] for e in self.events]
        if any(t < 0 for t in times):
            raise DomainError("event times must be >= 0")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise DomainError("event times must be strictly increasing")
        object.__setattr__(self, "events", tuple((float(t), int(s)) for t, s in self.events))

    @property
    def survived_horizon(self) -> bool:
        return self.absorbed_at is None


@dataclass(frozen=True)
class Estimate:
    """Point estimate with its standard error and normal-approximation 95% CI."""

    value: float
    std_error: float
    ci95: tuple[float, float]
    n_effective: int

    def __post_init__(self):
        if self.std_error < 0:
            raise DomainError("std_error must be >= 0")
        lo, hi = self.ci95
        if not lo <= self.value <= hi:
            raise DomainError("ci95 must contain the point estimate")


def _binomial_estimate(successes: int, n: int) -> Estimate:
    value = successes / n
    se = math.sqrt(value * (1.0 - value) / n)
    lo = max(0.0, value - _Z95 * se)
    hi = min(1.0, value + _Z95 * se)
    return Estimate(value=value, std_error=se, ci95=(lo, hi), n_effective=n)


def _mean_estimate(samples: np.ndarray, clamp_low: float | None = None) -> Estimate:
    n = samples.size
    value = float(samples.sum() / n)
    se = float(samples.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    lo, hi = value - _Z95 * se, value + _Z95 * se
    if clamp_low is not None:
        lo = max(clamp_low, lo)
    return Estimate(value=value, std_error=se, ci95=(lo, hi), n_effective=n)


def sample_exponential(rate: float, rng: CounterRng) -> float:
    """One Exp(rate) holding time: -ln(U)/rate with U uniform in (0, 1]."""
    if not rate > 0:
        raise DomainError(f"rate must be > 0, got {rate}")
    # np.log keeps scalar draws bit-identical to the vectorized engine
    return float(-np.log(rng.uniform()) / rate)


def simulate_trajectory(
    chain: Ctmc, start: int, horizon: float, rng: CounterRng, max_events: int = 10 ** 9
) -> Trajectory:
    """Sample one chain path from ``start``, truncated at ``horizon``.

    Per jump the stream is consumed in a fixed order: one draw for the
    holding time, then one draw for the competing-exponentials state
    choice (only if the jump lands inside the horizon).  A start state
    with no exits yields an event-free surviving trajectory.
    """
    if not 0 <= start < chain.n:
        raise DomainError(f"start state {start} out of range 0..{chain.n - 1}")
    if not horizon >= 0:
        raise DomainError(f"horizon must be >= 0, got {horizon}")
    q = chain.generator
    exit_rates = chain.exit_rates()
    events: list[tuple[float, int]] = []
    state = start
    t = 0.0
    while True:
        rate = exit_rates[state]
        if rate <= 0:
            return Trajectory(events=tuple(events), absorbed_at=(events[-1][0] if events else None))
        hold = float(-np.log(rng.uniform()) / rate)
        if t + hold > horizon:
            return Trajectory(events=tuple(events), absorbed_at=None)
        t = t + hold
        u = rng.uniform()
        row = q[state]
        acc = 0.0
        nxt = -1
        for j in range(chain.n):
            if j == state or row[j] <= 0:
                continue
            acc += row[j] / rate
            nxt = j
            if u <= acc:
                break
        state = nxt
        events.append((t, state))
        if len(events) > max_events:
            raise ConvergenceError(f"trajectory exceeded {max_events} events")


class _ChainKernel:
    """Precomputed per-state data for the vectorized trial walker."""

    def __init__(self, chain: Ctmc):
        q = chain.generator
        self.n = chain.n
        self.exit_rates = chain.exit_rates()
        self.operational = chain.operational_mask()
        self.targets: list[np.ndarray] = []
        self.cumprobs: list[np.ndarray] = []
        for i in range(self.n):
            row = np.array(q[i])
            row[i] = 0.0
            tgt = np.flatnonzero(row > 0)
            if tgt.size and self.exit_rates[i] > 0:
                cp = np.cumsum(row[tgt]) / self.exit_rates[i]
                cp[-1] = 1.0
            else:
                cp = np.zeros(0)
            self.targets.append(tgt)
            self.cumprobs.append(cp)


def _walk_batch(
    kernel: _ChainKernel,
    start: int,
    lo: int,
    hi: int,
    seed: int,
    substream: int,
    horizon: float | None,
    stop_on_nonop: bool,
    max_events: int,
    occupancy_mask: np.ndarray | None = None,
    burn_in: float = 0.0,
):
    """Walk trials ``lo..hi-1`` in synchronized waves.

    Draw k of trial t is ``uniform(seed, t, substream, k)``; the walk
    consumes draws exactly like :func:`simulate_trajectory`, so outcomes
    depend only on (seed, trial) and never on the batch partition.

    Returns (survived, absorb_time, occupancy_time) arrays for the slice.
    """
    m = hi - lo
    trials = np.arange(lo, hi, dtype=np.uint64)
    state = np.full(m, start, dtype=np.int64)
    t = np.zeros(m)
    counter = np.zeros(m, dtype=np.uint64)
    jumps = np.zeros(m, dtype=np.int64)
    active = np.arange(m)
    survived = np.ones(m, dtype=bool)
    absorb_time = np.full(m, np.nan)
    occupancy = np.zeros(m)
    track = occupancy_mask is not None

    def credit(idx, interval_start, interval_end):
        # time spent in the current state, clipped to [burn_in, horizon]
        if not track:
            return
        in_target = occupancy_mask[state[idx]]
        span = np.clip(interval_end, burn_in, horizon) - np.clip(interval_start, burn_in, horizon)
        occupancy[idx[in_target]] += span[in_target]

    while active.size:
        rates = kernel.exit_rates[state[active]]
        stuck = rates <= 0
        if np.any(stuck):
            idx = active[stuck]
            if track:
                credit(idx, t[idx], np.full(idx.size, horizon))
            active = active[~stuck]
            if not active.size:
                break
            rates = rates[~stuck]
        u_hold = uniform_block(seed, trials[active], substream, counter[active])
        counter[active] += 1
        hold = -np.log(u_hold) / rates
        t_new = t[active] + hold
        if horizon is not None:
            over = t_new > horizon
            if np.any(over):
                idx = active[over]
                if track:
                    credit(idx, t[idx], np.full(idx.size, horizon))
                active = active[~over]
                t_new = t_new[~over]
                if not active.size:
                    break
        if track:
            credit(active, t[active], t_new)
        u_sel = uniform_block(seed, trials[active], substream, counter[active])
        counter[active] += 1
        cur = state[active]
        nxt = np.empty(active.size, dtype=np.int64)
        for s in np.unique(cur):
            sel = cur == s
            pick = np.searchsorted(kernel.cumprobs[s], u_sel[sel], side="left")
            nxt[sel] = kernel.targets[s][pick]
        state[active] = nxt
        t[active] = t_new
        jumps[active] += 1
        if np.any(jumps[active] > max_events):
            raise ConvergenceError(
                f"a trial exceeded {max_events} events; the failure set may be "
                "effectively unreachable"
            )
        if stop_on_nonop:
            entered = ~kernel.operational[nxt]
            if np.any(entered):
                idx = active[entered]
                survived[idx] = False
                absorb_time[idx] = t[idx]
                active = active[~entered]
    return survived, absorb_time, occupancy


def _run_partitioned(worker, n_trials: int, threads: int):
    """Run ``worker(lo, hi)`` over a partition of [0, n_trials)."""
    if threads < 1:
        raise DomainError(f"threads must be >= 1, got {threads}")
    threads = min(threads, n_trials)
    if threads == 1:
        worker(0, n_trials)
        return
    bounds = np.linspace(0, n_trials, threads + 1).astype(int)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(worker, int(a), int(b)) for a, b in zip(bounds, bounds[1:])]
        for f in futures:
            f.result()


def estimate_reliability(chain: Ctmc, start: int, cfg: MonteCarloConfig, threads: int = 1) -> Estimate:
    """Fraction of trials that never leave the operational set by the horizon.

    Trials run on the absorbing variant of the chain; the estimate is the
    sample mean of survival indicators with binomial standard error and a
    normal 95% CI clamped to [0, 1].
    """
    _check_operational_start(chain, start)
    kernel = _ChainKernel(chain)
    survived = np.zeros(cfg.n_trials, dtype=bool)

    def worker(lo, hi):
        s, _, _ = _walk_batch(
            kernel, start, lo, hi, cfg.seed, 0, cfg.horizon, True, cfg.max_events
        )
        survived[lo:hi] = s

    _run_partitioned(worker, cfg.n_trials, threads)
    return _binomial_estimate(int(survived.sum()), cfg.n_trials)


def estimate_reliability_curve(
    chain: Ctmc, start: int, cfg: MonteCarloConfig, times, threads: int = 1
) -> list[Estimate]:
    """Survival estimates at several horizons from one shared set of trials.

    Trials are simulated once out to the largest requested time; the
    estimate at time t is the fraction of trials not yet absorbed by t.
    Point estimates across the grid are therefore correlated, but each one
    is the same unbiased estimator :func:`estimate_reliability` computes.
    """
    _check_operational_start(chain, start)
    grid = np.asarray(times, dtype=float)
    if grid.size == 0:
        raise DomainError("times must be nonempty")
    if np.any(grid < 0) or np.any(np.isnan(grid)):
        raise DomainError("times must be >= 0")
    horizon = float(max(grid.max(), cfg.horizon))
    kernel = _ChainKernel(chain)
    absorb = np.full(cfg.n_trials, np.inf)

    def worker(lo, hi):
        _, a, _ = _walk_batch(kernel, start, lo, hi, cfg.seed, 0, horizon, True, cfg.max_events)
        absorb[lo:hi] = np.where(np.isnan(a), np.inf, a)

    _run_partitioned(worker, cfg.n_trials, threads)
    return [_binomial_estimate(int((absorb > t).sum()), cfg.n_trials) for t in grid]


def estimate_mttf(chain: Ctmc, start: int, cfg: MonteCarloConfig, threads: int = 1) -> Estimate:
    """Mean sampled time to absorption into the non-operational set.

    Trials run without a horizon cap (capping would bias the mean downward)
    but with a hard per-trial event cap.  Requires the failure set to be
    reachable from every operational state the walk can visit.
    """
    _check_operational_start(chain, start)
    markov.vet_absorption(chain, start)
    kernel = _ChainKernel(chain)
    ttf = np.zeros(cfg.n_trials)

    def worker(lo, hi):
        _, absorb, _ = _walk_batch(
            kernel, start, lo, hi, cfg.seed, 0, None, True, cfg.max_events
        )
        ttf[lo:hi] = absorb

    _run_partitioned(worker, cfg.n_trials, threads)
    return _mean_estimate(ttf, clamp_low=0.0)


def estimate_occupancy(
    chain: Ctmc,
    start: int,
    cfg: MonteCarloConfig,
    target_states: tuple[int, ...],
    burn_in: float = 0.0,
    threads: int = 1,
) -> Estimate:
    """Long-run fraction of time spent in ``target_states``.

    Each trial simulates the unmodified chain over [0, horizon] and reports
    the fraction of the window [burn_in, horizon] spent in the target set;
    a burn-in long enough to forget the start state makes the mean an
    unbiased steady-state occupancy estimate.
    """
    if not 0 <= start < chain.n:
        raise DomainError(f"start state {start} out of range 0..{chain.n - 1}")
    if not 0 <= burn_in < cfg.horizon:
        raise DomainError("burn_in must satisfy 0 <= burn_in < horizon")
    mask = np.zeros(chain.n, dtype=bool)
    for s in target_states:
        if not 0 <= s < chain.n:
            raise DomainError(f"target state {s} out of range 0..{chain.n - 1}")
        mask[s] = True
    kernel = _ChainKernel(chain)
    window = cfg.horizon - burn_in
    frac = np.zeros(cfg.n_trials)

    def worker(lo, hi):
        _, _, occ = _walk_batch(
            kernel, start, lo, hi, cfg.seed, 0, cfg.horizon, False, cfg.max_events,
            occupancy_mask=mask, burn_in=burn_in,
        )
        frac[lo:hi] = occ / window

    _run_partitioned(worker, cfg.n_trials, threads)
    return _mean_estimate(frac, clamp_low=0.0)


def estimate_threshold_reliability(
    system: RoutOfNSystem, cfg: MonteCarloConfig, threads: int = 1
) -> Estimate:
    """Survival frequency of a threshold-criterion system of subsystems.

    Subsystem trajectories are simulated independently (subsystem j of
    trial t uses stream (seed, t, substream=j)); system performance at any
    instant is the fraction of subsystems currently operational, and a
    trial fails at the first instant that fraction drops below
    ``cfg.threshold``.  Bare-probability subsystems are resolved by one
    Bernoulli draw at t=0 and held constant over the mission.
    """
    survived = np.zeros(cfg.n_trials, dtype=bool)

    def worker(lo, hi):
        for trial in range(lo, hi):
            survived[trial] = _threshold_trial(system, cfg, trial)

    _run_partitioned(worker, cfg.n_trials, threads)
    return _binomial_estimate(int(survived.sum()), cfg.n_trials)


def _threshold_trial(system: RoutOfNSystem, cfg: MonteCarloConfig, trial: int) -> bool:
    n = len(system.subsystems)
    up = 0
    flips: list[tuple[float, int, int]] = []
    for j, sub in enumerate(system.subsystems):
        stream = CounterRng(cfg.seed, trial, substream=j)
        if isinstance(sub, ChainSubsystem):
            flags = sub.chain.operational_mask()
            current = bool(flags[sub.start])
            up += current
            path = simulate_trajectory(sub.chain, sub.start, cfg.horizon, stream, cfg.max_events)
            for when, state in path.events:
                now = bool(flags[state])
                if now != current:
                    flips.append((when, j, 1 if now else -1))
                    current = now
        else:
            up += stream.uniform() <= sub
    if up / n < cfg.threshold:
        return False
    for _, _, delta in sorted(flips):
        up += delta
        if up / n < cfg.threshold:
            return False
    return True


def _check_operational_start(chain: Ctmc, start: int) -> None:
    if not 0 <= start < chain.n:
        raise DomainError(f"start state {start} out of range 0..{chain.n - 1}")
    if not chain.operational_mask()[start]:
        raise DomainError(f"start state {start} must be operational")
