"""Chain engine tests: construction, steady state, transients, hitting times."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from securakit.errors import DomainError, StructureError
from securakit.markov import (
    Ctmc,
    ProbabilityVector,
    StateSpace,
    TransitionMatrix,
    absorbing_variant,
    analytic_metrics,
    availability_at,
    availability_steady,
    availability_two_state,
    build_two_state,
    discretize,
    mttf_absorbing,
    mttf_rate_sum,
    mttr,
    reliability_at,
    steady_state,
    transient,
    vet_absorption,
)
from securakit.rng import CounterRng

rates_pairs = st.tuples(
    st.floats(min_value=1e-4, max_value=10.0), st.floats(min_value=1e-4, max_value=10.0)
)


def series_chain(lam_a=0.1, lam_b=0.2):
    """up -> degraded -> failed, no repair."""
    space = StateSpace.from_labels(["up", "degraded", "failed"], [True, True, False])
    rates = np.zeros((3, 3))
    rates[0, 1] = lam_a
    rates[1, 2] = lam_b
    return Ctmc.from_transition_rates(space, rates)


def random_chain(rng, n_states=4):
    """Irreducible chain with a random operational pattern (>=1 of each)."""
    rates = np.array([[rng.uniform() for _ in range(n_states)] for _ in range(n_states)])
    ops = [rng.uniform() < 0.5 for _ in range(n_states)]
    ops[0] = True
    ops[-1] = False
    space = StateSpace.from_labels([f"s{i}" for i in range(n_states)], ops)
    return Ctmc.from_transition_rates(space, rates)


class TestConstruction:
    def test_two_state_generator(self):
        chain = build_two_state(0.01, 0.1)
        np.testing.assert_array_equal(chain.generator, [[-0.01, 0.01], [0.1, -0.1]])
        assert chain.space.states[0].operational
        assert not chain.space.states[1].operational

    def test_nonpositive_rates_rejected(self):
        for lam, mu in [(0, 0.1), (0.1, 0), (-1, 1), (1, -1)]:
            with pytest.raises(DomainError):
                build_two_state(lam, mu)

    def test_generator_row_sums_validated(self):
        space = StateSpace.from_labels(["a", "b"], [True, False])
        with pytest.raises(DomainError):
            Ctmc(space, np.array([[-0.5, 0.4], [0.1, -0.1]]))

    def test_negative_off_diagonal_rejected(self):
        space = StateSpace.from_labels(["a", "b"], [True, False])
        with pytest.raises(DomainError):
            Ctmc(space, np.array([[0.1, -0.1], [-0.1, 0.1]]))

    def test_state_space_needs_operational_state(self):
        with pytest.raises(DomainError):
            StateSpace.from_labels(["a", "b"], [False, False])

    def test_state_ids_dense(self):
        from securakit.markov import State

        with pytest.raises(DomainError):
            StateSpace((State(0, "a", True), State(2, "b", False)))

    def test_generator_rows_sum_zero_invariant(self):
        rng = CounterRng(seed=3)
        for _ in range(20):
            chain = random_chain(rng)
            assert np.all(np.abs(chain.generator.sum(axis=1)) <= 1e-12)


class TestDiscretize:
    def test_hand_example(self):
        p = discretize(build_two_state(0.01, 0.1), 1.0)
        np.testing.assert_allclose(p.probs, [[0.99, 0.01], [0.1, 0.9]], rtol=0, atol=1e-15)
        assert p.dt == 1.0

    def test_step_too_large(self):
        with pytest.raises(DomainError):
            discretize(build_two_state(0.01, 0.1), 11.0)

    def test_nonpositive_step(self):
        with pytest.raises(DomainError):
            discretize(build_two_state(0.01, 0.1), 0.0)

    def test_rows_stochastic(self):
        rng = CounterRng(seed=4)
        for _ in range(20):
            chain = random_chain(rng)
            dt = 0.9 / chain.exit_rates().max()
            p = discretize(chain, dt).probs
            np.testing.assert_allclose(p.sum(axis=1), 1.0, rtol=0, atol=1e-12)

    def test_power_iteration_matches_steady_state(self):
        rng = CounterRng(seed=5)
        for _ in range(10):
            chain = random_chain(rng)
            for frac in (0.1, 0.9):
                p = discretize(chain, frac / chain.exit_rates().max()).probs
                v = np.full(chain.n, 1.0 / chain.n)
                for _ in range(200_000):
                    nxt = v @ p
                    if np.abs(nxt - v).max() < 1e-14:
                        v = nxt
                        break
                    v = nxt
                np.testing.assert_allclose(v, steady_state(chain).pi, rtol=0, atol=1e-8)


class TestSteadyState:
    def test_two_state_closed_form(self):
        pi = steady_state(build_two_state(0.01, 0.1))
        np.testing.assert_allclose(pi.pi, [10 / 11, 1 / 11], rtol=0, atol=1e-15)

    def test_symmetric_two_state(self):
        pi = steady_state(build_two_state(0.3, 0.3))
        np.testing.assert_allclose(pi.pi, [0.5, 0.5], rtol=0, atol=1e-15)

    def test_random_rates_match_closed_form(self):
        rng = CounterRng(seed=6)
        for _ in range(50):
            lam = 10 ** (rng.uniform() * 4 - 3)
            mu = 10 ** (rng.uniform() * 4 - 3)
            pi = steady_state(build_two_state(lam, mu))
            assert pi.pi[0] == pytest.approx(mu / (lam + mu), abs=1e-12)
            assert pi.pi[1] == pytest.approx(lam / (lam + mu), abs=1e-12)

    def test_residual_invariant(self):
        rng = CounterRng(seed=7)
        for _ in range(20):
            chain = random_chain(rng)
            pi = steady_state(chain)
            assert np.abs(pi.pi @ chain.generator).max() < 1e-10
            assert abs(pi.pi.sum() - 1.0) <= 1e-12

    def test_reducible_chain_rejected(self):
        space = StateSpace.from_labels(["up", "dead"], [True, False])
        chain = Ctmc(space, np.array([[-0.1, 0.1], [0.0, 0.0]]))
        with pytest.raises(StructureError):
            steady_state(chain)


class TestTransient:
    def test_identity_at_time_zero(self):
        chain = build_two_state(0.01, 0.1)
        out = transient(chain, [0.25, 0.75], 0.0)
        np.testing.assert_array_equal(out.pi, [0.25, 0.75])

    def test_two_state_closed_form_grid(self):
        lam, mu = 0.01, 0.1
        chain = build_two_state(lam, mu)
        for t in np.linspace(0.0, 200.0, 20):
            expected = mu / (lam + mu) + lam / (lam + mu) * math.exp(-(lam + mu) * t)
            assert availability_at(chain, [1.0, 0.0], t) == pytest.approx(expected, abs=1e-10)

    def test_hand_value_at_ten(self):
        chain = build_two_state(0.01, 0.1)
        assert availability_at(chain, [1.0, 0.0], 10.0) == pytest.approx(0.93935, abs=5e-6)

    def test_converges_to_steady_state(self):
        lam, mu = 0.01, 0.1
        chain = build_two_state(lam, mu)
        t = 100.0 / (lam + mu)
        out = transient(chain, [1.0, 0.0], t)
        np.testing.assert_allclose(out.pi, steady_state(chain).pi, rtol=0, atol=1e-8)

    def test_matches_matrix_exponential(self):
        rng = CounterRng(seed=8)
        for _ in range(10):
            chain = random_chain(rng)
            pi0 = np.zeros(chain.n)
            pi0[0] = 1.0
            t = 5.0 * rng.uniform()
            expected = pi0 @ expm(chain.generator * t)
            np.testing.assert_allclose(transient(chain, pi0, t).pi, expected, rtol=0, atol=1e-10)

    def test_conservation(self):
        rng = CounterRng(seed=9)
        chain = random_chain(rng)
        for t in (0.1, 1.0, 10.0, 100.0):
            assert abs(transient(chain, [1, 0, 0, 0], t).pi.sum() - 1.0) < 1e-10

    def test_zero_generator_is_static(self):
        space = StateSpace.from_labels(["a", "b"], [True, True])
        chain = Ctmc(space, np.zeros((2, 2)))
        np.testing.assert_array_equal(transient(chain, [0.3, 0.7], 50.0).pi, [0.3, 0.7])

    def test_negative_time_rejected(self):
        with pytest.raises(DomainError):
            transient(build_two_state(0.1, 0.1), [1, 0], -1.0)


class TestReliabilityVsAvailability:
    def test_two_state_reliability_is_pure_exponential(self):
        lam, mu = 0.01, 0.1
        chain = build_two_state(lam, mu)
        for t in (0.0, 5.0, 50.0, 300.0):
            assert reliability_at(chain, [1.0, 0.0], t) == pytest.approx(
                math.exp(-lam * t), abs=1e-10
            )

    def test_reliability_not_above_availability(self):
        rng = CounterRng(seed=10)
        for _ in range(10):
            chain = random_chain(rng)
            pi0 = np.zeros(chain.n)
            pi0[0] = 1.0
            for t in (0.5, 2.0, 10.0):
                assert reliability_at(chain, pi0, t) <= availability_at(chain, pi0, t) + 1e-12

    def test_reliability_monotone_nonincreasing(self):
        rng = CounterRng(seed=11)
        chain = random_chain(rng)
        pi0 = np.zeros(chain.n)
        pi0[0] = 1.0
        values = [reliability_at(chain, pi0, t) for t in np.linspace(0, 20, 15)]
        assert all(b <= a + 1e-12 for a, b in zip(values, values[1:]))

    def test_all_operational_chain_has_no_reliability_analysis(self):
        space = StateSpace.from_labels(["a", "b"], [True, True])
        chain = Ctmc.from_transition_rates(space, np.array([[0.0, 1.0], [1.0, 0.0]]))
        with pytest.raises(StructureError):
            reliability_at(chain, [1, 0], 1.0)
        assert availability_steady(chain) == 1.0

    def test_absorbing_variant_zeroes_failed_rows(self):
        chain = build_two_state(0.2, 0.5)
        variant = absorbing_variant(chain)
        np.testing.assert_array_equal(variant.generator[1], [0.0, 0.0])
        np.testing.assert_array_equal(variant.generator[0], chain.generator[0])


class TestAvailability:
    def test_matches_eq9_hand_value(self):
        assert availability_two_state(0.01, 0.1) == pytest.approx(0.9090909, abs=5e-8)

    def test_symmetric_is_half(self):
        assert availability_two_state(0.4, 0.4) == 0.5

    def test_consistent_with_steady_state(self):
        rng = CounterRng(seed=12)
        for _ in range(50):
            lam, mu = 0.001 + rng.uniform(), 0.001 + rng.uniform()
            chain = build_two_state(lam, mu)
            mass = float(steady_state(chain).pi[0])
            assert availability_two_state(lam, mu) == pytest.approx(mass, abs=1e-12)

    def test_rejects_nonpositive_rates(self):
        with pytest.raises(DomainError):
            availability_two_state(0.0, 1.0)


class TestHittingTimes:
    def test_two_state_mttf_both_ways(self):
        chain = build_two_state(0.01, 0.1)
        assert mttf_rate_sum(chain) == pytest.approx(100.0, rel=1e-12)
        assert mttf_absorbing(chain, 0) == mttf_rate_sum(chain)

    def test_rate_sum_two_feeding_states(self):
        space = StateSpace.from_labels(["a", "b", "fail"], [True, True, False])
        rates = np.zeros((3, 3))
        rates[0, 2] = 0.1
        rates[1, 2] = 0.2
        chain = Ctmc.from_transition_rates(space, rates)
        assert mttf_rate_sum(chain) == pytest.approx(15.0, rel=1e-12)

    def test_rate_sum_exact_match_single_operational_state(self):
        # one operational state feeding two failure modes: both estimators
        # reduce to the same float division
        space = StateSpace.from_labels(["up", "f1", "f2"], [True, False, False])
        rates = np.zeros((3, 3))
        rates[0, 1] = 0.03
        rates[0, 2] = 0.07
        rates[1, 0] = 1.0
        rates[2, 0] = 1.0
        chain = Ctmc.from_transition_rates(space, rates)
        assert mttf_absorbing(chain, 0) == mttf_rate_sum(chain)

    def test_rate_sum_needs_direct_failure_exit(self):
        with pytest.raises(StructureError):
            mttf_rate_sum(series_chain())

    def test_series_chain_stage_sum(self):
        chain = series_chain(0.1, 0.2)
        assert mttf_absorbing(chain, 0) == pytest.approx(15.0, abs=1e-12)
        assert mttf_absorbing(chain, 1) == pytest.approx(5.0, abs=1e-12)

    def test_unreachable_failure_rejected(self):
        space = StateSpace.from_labels(["a", "b", "fail"], [True, True, False])
        rates = np.zeros((3, 3))
        rates[0, 1] = 0.5
        rates[1, 0] = 0.5
        rates[2, 0] = 1.0
        chain = Ctmc.from_transition_rates(space, rates)
        with pytest.raises(StructureError):
            mttf_absorbing(chain, 0)
        with pytest.raises(StructureError):
            vet_absorption(chain, 0)

    def test_operational_trap_rejected(self):
        # failure reachable from start, but a side branch can trap the walk
        space = StateSpace.from_labels(["s", "trap", "fail"], [True, True, False])
        rates = np.zeros((3, 3))
        rates[0, 1] = 0.5
        rates[0, 2] = 0.5
        chain = Ctmc.from_transition_rates(space, rates)  # trap has no exits
        with pytest.raises(StructureError):
            mttf_absorbing(chain, 0)

    def test_mttf_start_must_be_operational(self):
        with pytest.raises(DomainError):
            mttf_absorbing(build_two_state(0.1, 0.1), 1)

    def test_mttr_two_state(self):
        assert mttr(build_two_state(0.01, 0.1), 1) == pytest.approx(10.0, rel=1e-12)

    def test_mttr_competing_repair_channels(self):
        space = StateSpace.from_labels(["up1", "up2", "down"], [True, True, False])
        rates = np.zeros((3, 3))
        rates[0, 2] = 0.1
        rates[1, 2] = 0.1
        rates[2, 0] = 0.3
        rates[2, 1] = 0.2
        chain = Ctmc.from_transition_rates(space, rates)
        assert mttr(chain, 2) == pytest.approx(1.0 / 0.5, rel=1e-12)

    def test_mttr_without_repair_rejected(self):
        with pytest.raises(StructureError):
            mttr(series_chain(), 2)

    def test_mttr_needs_failed_state(self):
        with pytest.raises(DomainError):
            mttr(build_two_state(0.1, 0.1), 0)

    def test_metrics_bundle(self):
        bundle = analytic_metrics(build_two_state(0.01, 0.1), start=0, failed=1)
        assert bundle.mttf == pytest.approx(100.0)
        assert bundle.mttr == pytest.approx(10.0)
        assert bundle.availability == pytest.approx(10 / 11)
        assert bundle.method == "analytic"


class TestVectors:
    def test_probability_vector_validation(self):
        with pytest.raises(DomainError):
            ProbabilityVector(np.array([0.5, 0.6]))
        with pytest.raises(DomainError):
            ProbabilityVector(np.array([-0.1, 1.1]))

    def test_transition_matrix_validation(self):
        with pytest.raises(DomainError):
            TransitionMatrix(np.array([[0.5, 0.4], [0.1, 0.9]]), dt=1.0)
        with pytest.raises(DomainError):
            TransitionMatrix(np.array([[1.2, -0.2], [0.0, 1.0]]), dt=1.0)


@given(rates_pairs)
@settings(max_examples=50, deadline=None)
def test_two_state_steady_state_property(pair):
    lam, mu = pair
    pi = steady_state(build_two_state(lam, mu))
    assert pi.pi[0] == pytest.approx(mu / (lam + mu), rel=1e-9)
