"""Monte Carlo engine tests: statistical oracles and reproducibility."""

import math

import numpy as np
import pytest

from securakit.errors import ConvergenceError, DomainError
from securakit.markov import Ctmc, StateSpace, build_two_state
from securakit.montecarlo import (
    Estimate,
    MonteCarloConfig,
    Trajectory,
    estimate_mttf,
    estimate_occupancy,
    estimate_reliability,
    estimate_reliability_curve,
    estimate_threshold_reliability,
    sample_exponential,
    simulate_trajectory,
)
from securakit.rng import CounterRng
from securakit.securability import ChainSubsystem, MsDrRates, RoutOfNSystem, build_msdr


def non_repairable(lam):
    space = StateSpace.from_labels(["up", "down"], [True, False])
    rates = np.zeros((2, 2))
    rates[0, 1] = lam
    return Ctmc.from_transition_rates(space, rates)


def markov_reliability(chain, t):
    from securakit.markov import reliability_at

    pi0 = np.zeros(chain.n)
    pi0[0] = 1.0
    return reliability_at(chain, pi0, t)


def series_chain(lam_a=0.1, lam_b=0.2):
    space = StateSpace.from_labels(["up", "degraded", "failed"], [True, True, False])
    rates = np.zeros((3, 3))
    rates[0, 1] = lam_a
    rates[1, 2] = lam_b
    return Ctmc.from_transition_rates(space, rates)


class _FixedRng:
    def __init__(self, values):
        self.values = list(values)

    def uniform(self):
        return self.values.pop(0)


class TestSampleExponential:
    def test_u_equal_one_maps_to_zero(self):
        assert sample_exponential(2.0, _FixedRng([1.0])) == 0.0

    def test_rejects_nonpositive_rate(self):
        with pytest.raises(DomainError):
            sample_exponential(0.0, CounterRng(seed=1))

    def test_scalar_matches_bulk_transform(self):
        rate = 0.5
        scalar_stream = CounterRng(seed=11)
        scalar = [sample_exponential(rate, scalar_stream) for _ in range(1000)]
        bulk = -np.log(CounterRng(seed=11).uniforms(1000)) / rate
        assert np.array_equal(np.array(scalar), bulk)

    def test_empirical_mean(self):
        rate = 0.5
        draws = -np.log(CounterRng(seed=42).uniforms(1_000_000)) / rate
        assert abs(draws.mean() - 2.0) < 3.0 * (2.0 / 1000.0)

    def test_empirical_survival(self):
        draws = -np.log(CounterRng(seed=43).uniforms(1_000_000))
        p = math.exp(-1.0)
        se = math.sqrt(p * (1 - p) / draws.size)
        assert abs((draws > 1.0).mean() - p) < 3 * se


class TestSimulateTrajectory:
    def test_zero_event_fraction_matches_first_jump_law(self):
        lam, mu, h = 0.05, 0.3, 10.0
        chain = build_two_state(lam, mu)
        n = 100_000
        empty = sum(
            not simulate_trajectory(chain, 0, h, CounterRng(seed=5, trial=i)).events
            for i in range(n)
        )
        p = math.exp(-lam * h)
        se = math.sqrt(p * (1 - p) / n)
        assert abs(empty / n - p) < 3 * se

    def test_all_absorbing_chain_survives_without_events(self):
        space = StateSpace.from_labels(["a", "b"], [True, False])
        chain = Ctmc(space, np.zeros((2, 2)))
        path = simulate_trajectory(chain, 0, 100.0, CounterRng(seed=1))
        assert path.events == ()
        assert path.survived_horizon

    def test_competing_risks_proportions(self):
        space = StateSpace.from_labels(["s", "a", "b"], [True, False, False])
        rates = np.zeros((3, 3))
        rates[0, 1] = 0.3
        rates[0, 2] = 0.7
        chain = Ctmc.from_transition_rates(space, rates)
        n = 100_000
        hits_a = 0
        for i in range(n):
            path = simulate_trajectory(chain, 0, 1e9, CounterRng(seed=6, trial=i))
            hits_a += path.events[0][1] == 1
        se = math.sqrt(0.3 * 0.7 / n)
        assert abs(hits_a / n - 0.3) < 3 * se

    def test_absorption_is_recorded(self):
        chain = non_repairable(0.5)
        path = simulate_trajectory(chain, 0, 1e9, CounterRng(seed=7))
        assert path.events[-1][1] == 1
        assert path.absorbed_at == path.events[-1][0]

    def test_trajectory_legality(self):
        lam, mu = 0.4, 0.9
        chain = build_two_state(lam, mu)
        for trial in range(50):
            path = simulate_trajectory(chain, 0, 50.0, CounterRng(seed=8, trial=trial))
            times = [e[0] for e in path.events]
            assert all(b > a for a, b in zip(times, times[1:]))
            assert all(0 <= t <= 50.0 for t in times)
            state = 0
            for _, nxt in path.events:
                assert chain.generator[state, nxt] > 0
                state = nxt

    def test_trajectory_invariants_enforced(self):
        with pytest.raises(DomainError):
            Trajectory(events=((2.0, 1), (1.0, 0)))
        with pytest.raises(DomainError):
            Trajectory(events=((-1.0, 1),))


class TestEstimateReliability:
    def test_two_state_matches_exponential(self):
        chain = build_two_state(0.01, 0.1)
        cfg = MonteCarloConfig(n_trials=100_000, horizon=10.0, seed=3)
        est = estimate_reliability(chain, 0, cfg)
        assert abs(est.value - math.exp(-0.1)) < 3 * est.std_error
        assert 0.0 <= est.value <= 1.0
        assert est.n_effective == cfg.n_trials

    def test_zero_horizon_is_certain_survival(self):
        chain = build_two_state(0.01, 0.1)
        est = estimate_reliability(chain, 0, MonteCarloConfig(n_trials=1000, horizon=0.0, seed=3))
        assert est.value == 1.0
        assert est.std_error == 0.0

    def test_repairs_do_not_rescue(self):
        # huge repair rate must not raise reliability: failures absorb
        lam, h = 0.05, 10.0
        fast_repair = build_two_state(lam, 50.0)
        cfg = MonteCarloConfig(n_trials=50_000, horizon=h, seed=4)
        est = estimate_reliability(fast_repair, 0, cfg)
        assert abs(est.value - math.exp(-lam * h)) < 3 * est.std_error

    def test_start_must_be_operational(self):
        with pytest.raises(DomainError):
            estimate_reliability(
                build_two_state(0.1, 0.1), 1, MonteCarloConfig(n_trials=10, horizon=1.0, seed=0)
            )

    def test_msdr_agrees_with_analytic_reliability(self):
        chain = build_msdr(MsDrRates(0.01, 0.01, 0.1, 0.1))
        horizon = 50.0
        cfg = MonteCarloConfig(n_trials=50_000, horizon=horizon, seed=19)
        est = estimate_reliability(chain, 0, cfg)
        analytic = markov_reliability(chain, horizon)
        assert abs(est.value - analytic) < 3 * est.std_error

    def test_curve_is_monotone_and_consistent(self):
        chain = build_two_state(0.02, 0.1)
        cfg = MonteCarloConfig(n_trials=20_000, horizon=30.0, seed=5)
        grid = np.linspace(0.0, 30.0, 7)
        curve = estimate_reliability_curve(chain, 0, cfg, grid)
        values = [e.value for e in curve]
        assert all(b <= a for a, b in zip(values, values[1:]))
        single = estimate_reliability(chain, 0, cfg)
        assert curve[-1].value == pytest.approx(single.value, abs=3 * single.std_error)


class TestEstimateMttf:
    def test_two_state_inverse_rate(self):
        chain = build_two_state(0.01, 0.1)
        cfg = MonteCarloConfig(n_trials=100_000, horizon=1.0, seed=6)
        est = estimate_mttf(chain, 0, cfg)
        assert abs(est.value - 100.0) < 3 * est.std_error
        assert est.value > 0

    def test_series_chain_stage_sum(self):
        cfg = MonteCarloConfig(n_trials=100_000, horizon=1.0, seed=7)
        est = estimate_mttf(series_chain(0.1, 0.2), 0, cfg)
        assert abs(est.value - 15.0) < 3 * est.std_error

    def test_msdr_matches_analytic(self):
        from securakit.markov import mttf_absorbing

        chain = build_msdr(MsDrRates(0.01, 0.01, 0.1, 0.1))
        cfg = MonteCarloConfig(n_trials=50_000, horizon=1.0, seed=8)
        est = estimate_mttf(chain, 0, cfg)
        assert abs(est.value - mttf_absorbing(chain, 0)) < 3 * est.std_error

    def test_runaway_guard(self):
        chain = build_msdr(MsDrRates(0.01, 0.01, 0.1, 0.1))
        cfg = MonteCarloConfig(n_trials=200, horizon=1.0, seed=9, max_events=5)
        with pytest.raises(ConvergenceError):
            estimate_mttf(chain, 0, cfg)

    def test_unreachable_failure_rejected(self):
        space = StateSpace.from_labels(["a", "b", "fail"], [True, True, False])
        rates = np.zeros((3, 3))
        rates[0, 1] = 0.5
        rates[1, 0] = 0.5
        rates[2, 0] = 1.0
        chain = Ctmc.from_transition_rates(space, rates)
        from securakit.errors import StructureError

        with pytest.raises(StructureError):
            estimate_mttf(chain, 0, MonteCarloConfig(n_trials=10, horizon=1.0, seed=0))


class TestOccupancy:
    def test_two_state_down_fraction(self):
        lam, mu = 0.05, 0.2
        chain = build_two_state(lam, mu)
        cfg = MonteCarloConfig(n_trials=20_000, horizon=600.0, seed=10)
        est = estimate_occupancy(chain, 0, cfg, target_states=(1,), burn_in=100.0)
        assert abs(est.value - lam / (lam + mu)) < 3 * est.std_error

    def test_burn_in_bounds(self):
        chain = build_two_state(0.05, 0.2)
        cfg = MonteCarloConfig(n_trials=10, horizon=10.0, seed=0)
        with pytest.raises(DomainError):
            estimate_occupancy(chain, 0, cfg, target_states=(1,), burn_in=10.0)


class TestThresholdReliability:
    def test_single_subsystem_reduces_to_reliability(self):
        lam, mu, h = 0.03, 0.2, 10.0
        chain = build_two_state(lam, mu)
        cfg = MonteCarloConfig(n_trials=20_000, horizon=h, seed=11, threshold=1.0)
        thr = estimate_threshold_reliability(
            RoutOfNSystem(r=1, subsystems=(ChainSubsystem(chain, 0),)), cfg
        )
        direct = estimate_reliability(chain, 0, cfg)
        # identical streams and stopping rule: the trials coincide exactly
        assert thr.value == direct.value

    def test_three_subsystems_first_failure_kills_system(self):
        lam, h = 0.05, 5.0
        subs = tuple(ChainSubsystem(non_repairable(lam), 0) for _ in range(3))
        cfg = MonteCarloConfig(n_trials=20_000, horizon=h, seed=12, threshold=0.67)
        est = estimate_threshold_reliability(RoutOfNSystem(r=3, subsystems=subs), cfg)
        expected = math.exp(-3 * lam * h)
        assert abs(est.value - expected) < 3 * est.std_error

    def test_two_subsystems_parallel(self):
        lam, h = 0.05, 5.0
        subs = tuple(ChainSubsystem(non_repairable(lam), 0) for _ in range(2))
        cfg = MonteCarloConfig(n_trials=20_000, horizon=h, seed=13, threshold=0.5)
        est = estimate_threshold_reliability(RoutOfNSystem(r=1, subsystems=subs), cfg)
        expected = 1.0 - (1.0 - math.exp(-lam * h)) ** 2
        assert abs(est.value - expected) < 3 * est.std_error

    def test_bare_probability_subsystems(self):
        cfg = MonteCarloConfig(n_trials=50_000, horizon=1.0, seed=14, threshold=1.0)
        est = estimate_threshold_reliability(RoutOfNSystem(r=2, subsystems=(0.7, 0.7)), cfg)
        se = math.sqrt(0.49 * 0.51 / cfg.n_trials)
        assert abs(est.value - 0.49) < 3 * se


class TestReproducibility:
    def test_same_seed_same_result(self):
        chain = build_two_state(0.01, 0.1)
        cfg = MonteCarloConfig(n_trials=30_000, horizon=10.0, seed=15)
        assert estimate_reliability(chain, 0, cfg) == estimate_reliability(chain, 0, cfg)

    def test_thread_count_cannot_change_results(self):
        chain = build_msdr(MsDrRates(0.01, 0.02, 0.1, 0.15))
        cfg = MonteCarloConfig(n_trials=20_000, horizon=50.0, seed=16)
        a = estimate_reliability(chain, 0, cfg, threads=1)
        b = estimate_reliability(chain, 0, cfg, threads=8)
        assert a == b
        ma = estimate_mttf(chain, 0, cfg, threads=1)
        mb = estimate_mttf(chain, 0, cfg, threads=5)
        assert ma == mb
        system = RoutOfNSystem(r=1, subsystems=(ChainSubsystem(chain, 0), 0.9))
        ta = estimate_threshold_reliability(system, cfg, threads=1)
        tb = estimate_threshold_reliability(system, cfg, threads=3)
        assert ta == tb

    def test_different_seeds_differ(self):
        chain = build_two_state(0.01, 0.1)
        a = estimate_reliability(chain, 0, MonteCarloConfig(n_trials=30_000, horizon=10.0, seed=1))
        b = estimate_reliability(chain, 0, MonteCarloConfig(n_trials=30_000, horizon=10.0, seed=2))
        assert a.value != b.value

    def test_statistical_consistency_over_seeds(self):
        lam, h = 0.01, 10.0
        chain = build_two_state(lam, 0.1)
        truth = math.exp(-lam * h)
        hits = 0
        for seed in range(20):
            est = estimate_reliability(chain, 0, MonteCarloConfig(n_trials=20_000, horizon=h, seed=seed))
            hits += abs(est.value - truth) <= 3 * est.std_error
        assert hits >= 19

    def test_ci_width_scales_with_sqrt_n(self):
        lam, h = 0.05, 10.0
        chain = build_two_state(lam, 0.1)
        widths = {}
        for n in (1000, 10_000):
            est = estimate_reliability(chain, 0, MonteCarloConfig(n_trials=n, horizon=h, seed=17))
            widths[n] = est.ci95[1] - est.ci95[0]
        ratio = widths[1000] / widths[10_000]
        assert ratio == pytest.approx(math.sqrt(10.0), rel=0.25)


class TestConfigAndEstimate:
    def test_config_invariants(self):
        with pytest.raises(DomainError):
            MonteCarloConfig(n_trials=0, horizon=1.0, seed=0)
        with pytest.raises(DomainError):
            MonteCarloConfig(n_trials=10, horizon=-1.0, seed=0)
        with pytest.raises(DomainError):
            MonteCarloConfig(n_trials=10, horizon=1.0, seed=-1)
        with pytest.raises(DomainError):
            MonteCarloConfig(n_trials=10, horizon=1.0, seed=0, threshold=0.0)
        with pytest.raises(DomainError):
            MonteCarloConfig(n_trials=10, horizon=1.0, seed=0, threshold=1.5)

    def test_estimate_invariants(self):
        with pytest.raises(DomainError):
            Estimate(value=0.5, std_error=-0.1, ci95=(0.4, 0.6), n_effective=10)
        with pytest.raises(DomainError):
            Estimate(value=0.9, std_error=0.1, ci95=(0.4, 0.6), n_effective=10)

    def test_ci_contains_value_and_is_clamped(self):
        chain = build_two_state(0.001, 0.1)
        est = estimate_reliability(chain, 0, MonteCarloConfig(n_trials=500, horizon=1.0, seed=18))
        lo, hi = est.ci95
        assert lo <= est.value <= hi
        assert hi <= 1.0
