"""Continuous-time Markov chain reliability engine.

The canonical model object is a :class:`Ctmc`: a labeled state space with
operational flags plus a rate (generator) matrix Q whose rows sum to zero.
Discrete-step transition matrices are derived views (:func:`discretize`),
steady states come from a dense linear solve, and transient distributions
from uniformization, which keeps probabilities nonnegative and carries a
certified truncation error.

Availability and reliability are deliberately distinct: availability sums
operational-state mass on the unmodified chain (repairs allowed), while
reliability applies the same sum to an absorbing variant in which every
non-operational state has its outgoing rates removed, so a repaired system
still counts as failed once it has left the operational set.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy.stats import poisson

from .errors import (
    ConvergenceError,
    DomainError,
    SingularSystemError,
    StructureError,
)

ROW_SUM_TOL = 1e-12
STEADY_RESIDUAL_TOL = 1e-10
UNIFORMIZATION_TAIL = 1e-13
_MAX_UNIFORMIZATION_TERMS = 5_000_000

METRIC_METHODS = ("analytic", "paper_rate_sum", "monte_carlo")


@dataclass(frozen=True)
class State:
    id: int
    label: str
    operational: bool


@dataclass(frozen=True)
class StateSpace:
    """Ordered states with dense ids 0..n-1 and at least one operational."""

    states: tuple[State, ...]

    def __post_init__(self):
        states = tuple(self.states)
        if not states:
            raise DomainError("state space must contain at least one state")
        if [s.id for s in states] != list(range(len(states))):
            raise DomainError("state ids must be dense and unique: 0..n-1 in order")
        if not any(s.operational for s in states):
            raise DomainError("state space needs at least one operational state")
        object.__setattr__(self, "states", states)

    @classmethod
    def from_labels(cls, labels, operational) -> "StateSpace":
        if len(labels) != len(operational):
            raise DomainError("labels and operational flags must have equal length")
        return cls(tuple(State(i, str(l), bool(o)) for i, (l, o) in enumerate(zip(labels, operational))))

    @property
    def n(self) -> int:
        return len(self.states)

    def operational_mask(self) -> np.ndarray:
        return np.array([s.operational for s in self.states], dtype=bool)


@dataclass(frozen=True, eq=False)
class Ctmc:
    """State space plus generator matrix Q (row sums zero, off-diagonals >= 0).

    Row sums are checked relative to the magnitude of the row, so chains
    mixing rate scales (say 1e-2 and 1e6) validate sensibly.
    """

    space: StateSpace
    generator: np.ndarray

    def __post_init__(self):
        q = np.array(self.generator, dtype=float)
        n = self.space.n
        if q.shape != (n, n):
            raise DomainError(f"generator must be {n}x{n}, got {q.shape}")
        if not np.all(np.isfinite(q)):
            raise DomainError("generator entries must be finite")
        off = q[~np.eye(n, dtype=bool)]
        if np.any(off < 0):
            raise DomainError("off-diagonal generator entries must be >= 0")
        row_scale = np.maximum(1.0, np.abs(q).max(axis=1))
        if np.any(np.abs(q.sum(axis=1)) > ROW_SUM_TOL * row_scale):
            raise DomainError("generator rows must sum to 0 (within 1e-12 of row scale)")
        q.setflags(write=False)
        object.__setattr__(self, "generator", q)

    @classmethod
    def from_transition_rates(cls, space: StateSpace, rates: np.ndarray) -> "Ctmc":
        """Build a chain from off-diagonal rates; diagonals are set to -row sums."""
        q = np.array(rates, dtype=float)
        np.fill_diagonal(q, 0.0)
        np.fill_diagonal(q, -q.sum(axis=1))
        return cls(space, q)

    @property
    def n(self) -> int:
        return self.space.n

    def exit_rates(self) -> np.ndarray:
        return -np.diag(self.generator)

    def operational_mask(self) -> np.ndarray:
        return self.space.operational_mask()


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """One-step transition probabilities for a step of width ``dt``."""

    probs: np.ndarray
    dt: float

    def __post_init__(self):
        p = np.array(self.probs, dtype=float)
        if p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise DomainError("transition matrix must be square")
        if np.any(p < 0) or np.any(p > 1):
            raise DomainError("transition probabilities must lie in [0, 1]")
        if np.any(np.abs(p.sum(axis=1) - 1.0) > ROW_SUM_TOL):
            raise DomainError("transition matrix rows must sum to 1 within 1e-12")
        if not self.dt > 0:
            raise DomainError(f"dt must be > 0, got {self.dt}")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)


@dataclass(frozen=True, eq=False)
class ProbabilityVector:
    """State probabilities: entries >= 0 summing to 1 within 1e-12."""

    pi: np.ndarray

    def __post_init__(self):
        v = np.array(self.pi, dtype=float)
        if v.ndim != 1 or v.size == 0:
            raise DomainError("probability vector must be a nonempty 1-d array")
        if np.any(v < 0):
            raise DomainError("probability vector entries must be >= 0")
        if abs(v.sum() - 1.0) > ROW_SUM_TOL:
            raise DomainError("probability vector must sum to 1 within 1e-12")
        v.setflags(write=False)
        object.__setattr__(self, "pi", v)

    def __len__(self) -> int:
        return self.pi.size


@dataclass(frozen=True)
class MetricsBundle:
    """MTTF/MTTR/availability triple labeled with the method that produced it."""

    mttf: float
    mttr: float
    availability: float
    method: str

    def __post_init__(self):
        if self.method not in METRIC_METHODS:
            raise DomainError(f"method must be one of {METRIC_METHODS}, got {self.method!r}")
        if self.mttf < 0 or self.mttr < 0:
            raise DomainError("times must be >= 0")
        if not 0.0 <= self.availability <= 1.0:
            raise DomainError("availability must lie in [0, 1]")


def build_two_state(lam: float, mu: float) -> Ctmc:
    """Up/down chain: failure rate ``lam`` out of state 0, repair rate ``mu``."""
    if not lam > 0:
        raise DomainError(f"failure rate must be > 0, got {lam}")
    if not mu > 0:
        raise DomainError(f"repair rate must be > 0, got {mu}")
    space = StateSpace.from_labels(["up", "down"], [True, False])
    rates = np.array([[0.0, lam], [mu, 0.0]])
    return Ctmc.from_transition_rates(space, rates)


def discretize(chain: Ctmc, dt: float) -> TransitionMatrix:
    """First-order step matrix P = I + dt*Q; requires dt * max exit rate <= 1."""
    if not dt > 0:
        raise DomainError(f"dt must be > 0, got {dt}")
    off = chain.generator * dt
    np.fill_diagonal(off, 0.0)
    exit_mass = off.sum(axis=1)
    if np.any(exit_mass > 1.0):
        raise DomainError(
            f"step too large: dt * max exit rate = {exit_mass.max():.6g} > 1; "
            f"use dt <= {1.0 / chain.exit_rates().max():.6g}"
        )
    p = off
    np.fill_diagonal(p, 1.0 - exit_mass)
    return TransitionMatrix(probs=p, dt=float(dt))


def _adjacency(q: np.ndarray) -> np.ndarray:
    adj = q > 0
    np.fill_diagonal(adj, False)
    return adj


def _reachable(adj: np.ndarray, start: int) -> np.ndarray:
    seen = np.zeros(adj.shape[0], dtype=bool)
    seen[start] = True
    frontier = deque([start])
    while frontier:
        i = frontier.popleft()
        for j in np.flatnonzero(adj[i] & ~seen):
            seen[j] = True
            frontier.append(j)
    return seen


def _require_irreducible(chain: Ctmc) -> None:
    adj = _adjacency(chain.generator)
    if not (_reachable(adj, 0).all() and _reachable(adj.T, 0).all()):
        raise StructureError("chain is reducible: not every state reaches every other")


def steady_state(chain: Ctmc) -> ProbabilityVector:
    """Stationary distribution pi with pi @ Q = 0 and sum(pi) = 1.

    Solved as the dense linear system Q^T pi = 0 with one equation replaced
    by the normalization constraint; the residual ``max|pi @ Q|`` is
    verified below 1e-10.  Entry noise in (-1e-13, 0) from the solve is
    clipped to zero before validation.
    """
    _require_irreducible(chain)
    q = chain.generator
    n = chain.n
    a = q.T.copy()
    a[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    try:
        pi = np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(f"steady-state system is singular: {exc}") from exc
    tiny = (pi < 0) & (pi > -1e-13)
    pi[tiny] = 0.0
    residual = float(np.abs(pi @ q).max())
    if residual >= STEADY_RESIDUAL_TOL:
        raise SingularSystemError(
            f"steady-state residual {residual:.3e} exceeds {STEADY_RESIDUAL_TOL:.0e}"
        )
    return ProbabilityVector(pi)


def _coerce_pvec(pi0, n: int) -> np.ndarray:
    vec = pi0.pi if isinstance(pi0, ProbabilityVector) else ProbabilityVector(np.asarray(pi0, dtype=float)).pi
    if vec.size != n:
        raise DomainError(f"probability vector has {vec.size} entries, chain has {n} states")
    return np.array(vec, dtype=float)


def transient(chain: Ctmc, pi0, t: float, tail_tol: float = UNIFORMIZATION_TAIL) -> ProbabilityVector:
    """Distribution pi0 @ expm(Q t) by uniformization.

    The Poisson-weighted sum over powers of P = I + Q/rate is truncated
    once the neglected tail mass drops below ``tail_tol`` and the retained
    weights are renormalized, so the result is a valid probability vector
    with truncation bias below the tolerance.
    """
    if not t >= 0:
        raise DomainError(f"time must be >= 0, got {t}")
    v0 = _coerce_pvec(pi0, chain.n)
    q = chain.generator
    rate = float(np.max(-np.diag(q)))
    if t == 0 or rate == 0:
        return ProbabilityVector(v0)
    mu = rate * t
    quantile = poisson.isf(tail_tol, mu)
    if not np.isfinite(quantile):
        raise ConvergenceError(f"uniformization cannot bound the tail at rate*t = {mu:.3g}")
    terms = int(quantile) + 1
    while poisson.sf(terms, mu) > tail_tol:
        terms += 10
    if terms > _MAX_UNIFORMIZATION_TERMS:
        raise ConvergenceError(
            f"uniformization needs {terms} terms (rate*t = {mu:.3g}); split the horizon"
        )
    weights = poisson.pmf(np.arange(terms + 1), mu)
    weights /= weights.sum()
    p = np.eye(chain.n) + q / rate
    v = v0
    out = weights[0] * v
    for k in range(1, terms + 1):
        v = v @ p
        out = out + weights[k] * v
    out /= out.sum()
    return ProbabilityVector(out)


def availability_at(chain: Ctmc, pi0, t: float) -> float:
    """Point availability: operational mass of the transient distribution."""
    dist = transient(chain, pi0, t)
    return float(dist.pi[chain.operational_mask()].sum())


def absorbing_variant(chain: Ctmc) -> Ctmc:
    """Copy of the chain with every non-operational state made absorbing."""
    q = np.array(chain.generator)
    q[~chain.operational_mask(), :] = 0.0
    return Ctmc(chain.space, q)


def reliability_at(chain: Ctmc, pi0, t: float) -> float:
    """Probability of remaining in the operational set through time t.

    Computed as the operational mass of the transient distribution on the
    absorbing variant, so repairs cannot rescue a failed trajectory.
    """
    if chain.operational_mask().all():
        raise StructureError("reliability analysis needs at least one non-operational state")
    dist = transient(absorbing_variant(chain), pi0, t)
    return float(dist.pi[chain.operational_mask()].sum())


def availability_two_state(lam: float, mu: float) -> float:
    """Steady availability mu/(lam + mu) of the two-state model."""
    if not lam > 0:
        raise DomainError(f"failure rate must be > 0, got {lam}")
    if not mu > 0:
        raise DomainError(f"repair rate must be > 0, got {mu}")
    return mu / (lam + mu)


def availability_steady(chain: Ctmc) -> float:
    """Long-run availability: operational mass of the steady state."""
    pi = steady_state(chain)
    return float(pi.pi[chain.operational_mask()].sum())


def mttf_rate_sum(chain: Ctmc) -> float:
    """First-order MTTF estimate: sum over operational states of 1/(failure exit rate).

    The failure exit rate of an operational state is the total rate into
    non-operational states; every operational state must have one.  This
    coincides with the rigorous absorbing-chain MTTF only when there is a
    single operational state; report it with the ``paper_rate_sum`` label.
    """
    q = chain.generator
    op = chain.operational_mask()
    fail_rates = q[np.ix_(op, ~op)].sum(axis=1) if (~op).any() else np.zeros(int(op.sum()))
    if np.any(fail_rates <= 0):
        bad = np.flatnonzero(op)[np.flatnonzero(fail_rates <= 0)]
        labels = ", ".join(chain.space.states[i].label for i in bad)
        raise StructureError(f"operational state(s) with zero failure exit rate: {labels}")
    return float((1.0 / fail_rates).sum())


def _vet_hitting_states(chain: Ctmc, start: int, target_mask: np.ndarray, kind: str) -> np.ndarray:
    """Check that absorption into ``target_mask`` from ``start`` is certain.

    Target states are treated as absorbing; every non-target state the
    walk can visit must be able to reach the target, otherwise the hitting
    time is infinite with positive probability.  Returns the indices of
    the visitable non-target states.
    """
    q = np.array(chain.generator)
    q[target_mask, :] = 0.0
    adj = _adjacency(q)
    reach = _reachable(adj, start)
    live = reach & ~target_mask
    if not np.any(reach & target_mask):
        raise StructureError(f"no {kind} state is reachable from state {start}")
    for i in np.flatnonzero(live):
        if not np.any(_reachable(adj, i) & target_mask):
            raise StructureError(
                f"state {i} ({chain.space.states[i].label}) can be visited but cannot "
                f"reach any {kind} state; expected hitting time is infinite"
            )
    return np.flatnonzero(live)


def _expected_hitting_time(chain: Ctmc, start: int, target_mask: np.ndarray, kind: str) -> float:
    """Expected time from ``start`` until the chain first enters ``target_mask``."""
    idx = _vet_hitting_states(chain, start, target_mask, kind)
    sub = chain.generator[np.ix_(idx, idx)]
    try:
        tau = np.linalg.solve(sub, -np.ones(idx.size))
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(f"hitting-time system is singular: {exc}") from exc
    return float(tau[np.searchsorted(idx, start)])


def vet_absorption(chain: Ctmc, start: int) -> None:
    """Raise unless a walk from operational ``start`` surely hits a failure state."""
    _check_state(chain, start)
    op = chain.operational_mask()
    if not op[start]:
        raise DomainError(f"start state {start} must be operational")
    if op.all():
        raise StructureError("chain has no non-operational state")
    _vet_hitting_states(chain, start, ~op, kind="failure")


def mttf_absorbing(chain: Ctmc, start: int) -> float:
    """Expected time to first entry into the non-operational set.

    Failure states are absorbing for this computation; repairs between
    operational states are retained.  Report with the ``analytic`` label.
    """
    _check_state(chain, start)
    op = chain.operational_mask()
    if not op[start]:
        raise DomainError(f"start state {start} must be operational")
    return _expected_hitting_time(chain, start, ~op, kind="failure")


def mttr(chain: Ctmc, failed: int) -> float:
    """Expected time from a failed state until the operational set is reached."""
    _check_state(chain, failed)
    op = chain.operational_mask()
    if op[failed]:
        raise DomainError(f"state {failed} is operational; mttr needs a failed state")
    return _expected_hitting_time(chain, failed, op, kind="repair")


def _check_state(chain: Ctmc, state: int) -> None:
    if not 0 <= state < chain.n:
        raise DomainError(f"state id {state} out of range 0..{chain.n - 1}")


def analytic_metrics(chain: Ctmc, start: int, failed: int) -> MetricsBundle:
    """MTTF (absorbing), MTTR, and steady availability in one analytic bundle."""
    return MetricsBundle(
        mttf=mttf_absorbing(chain, start),
        mttr=mttr(chain, failed),
        availability=availability_steady(chain),
        method="analytic",
    )
