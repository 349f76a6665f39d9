import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dibrcast.analysis import (
    PeriodicZipfParams,
    aggregate_loss_probability,
    alpha_without_dibr,
    asymptotic_alpha,
    asymptotic_alpha_periodic_zipf,
    asymptotic_alpha_periodic_zipf_printed,
    asymptotic_alpha_spaced,
    expected_alpha,
    expected_subscribed,
    failure_from_view_losses,
    periodic_zipf_cycle_reward,
    periodic_zipf_transition_matrix,
    stationary_distribution,
    view_failure_probability,
    view_failure_probability_single_radio,
    view_loss_probability,
)
from dibrcast.model import (
    ApTransmissionPolicy,
    Client,
    ConfigurationError,
    DomainError,
    ExplicitLossModel,
    TransmissionPlan,
)
from dibrcast.oracle import enumerate_failure_probability, make_rng

ONE = Client(0, frozenset({1}), frozenset({6.5}))


def every_view_once(M, channel=1, rate=6.5):
    return TransmissionPlan({(v, channel, rate): 1 for v in range(1, M + 1)})


class TestViewLoss:
    def test_never_transmitted(self):
        assert view_loss_probability(ONE, 1, TransmissionPlan(), ExplicitLossModel.uniform(0.3)) == 1.0

    def test_single_transmission(self):
        plan = TransmissionPlan({(1, 1, 6.5): 1})
        assert view_loss_probability(ONE, 1, plan, ExplicitLossModel.uniform(0.3)) == pytest.approx(0.3)

    def test_two_channels_multiply(self):
        c = Client(0, frozenset({1, 2}), frozenset({6.5}))
        plan = TransmissionPlan({(1, 1, 6.5): 1, (1, 2, 6.5): 1})
        assert view_loss_probability(c, 1, plan, ExplicitLossModel.uniform(0.5)) == pytest.approx(0.25, abs=1e-15)

    def test_undecodable_slot_ignored(self):
        plan = TransmissionPlan({(1, 2, 6.5): 3})
        assert view_loss_probability(ONE, 1, plan, ExplicitLossModel.uniform(0.1)) == 1.0

    def test_many_tiny_factors_do_not_underflow_to_nan(self):
        plan = TransmissionPlan({(1, 1, 6.5): 400})
        p = view_loss_probability(ONE, 1, plan, ExplicitLossModel.uniform(1e-3))
        assert p == 0.0 or (0.0 < p < 1e-300)


class TestViewFailure:
    def test_certain_reception(self):
        plan = every_view_once(4)
        assert view_failure_probability(ONE, 2, plan, ExplicitLossModel.uniform(0.0), 4, 2) == 0.0

    def test_boundary_view_is_plain_loss(self):
        plan = TransmissionPlan({(1, 1, 6.5): 1, (2, 1, 6.5): 1})
        assert view_failure_probability(ONE, 1, plan, ExplicitLossModel.uniform(0.3), 4, 3) == pytest.approx(0.3)

    def test_three_views_middle(self):
        # lose view 2 and not both of its neighbours: 0.5 * (1 - 0.25)
        value = view_failure_probability(ONE, 2, every_view_once(3), ExplicitLossModel.uniform(0.5), 3, 2)
        assert value == pytest.approx(0.375, abs=1e-15)

    def test_four_views_enumerated_value(self):
        value = view_failure_probability(ONE, 3, every_view_once(4), ExplicitLossModel.uniform(0.5), 4, 3)
        assert value == pytest.approx(0.3125, abs=1e-15)

    @pytest.mark.parametrize("M,R", [(1, 1), (4, 0)])
    def test_domain(self, M, R):
        with pytest.raises(DomainError):
            view_failure_probability(ONE, 1, TransmissionPlan(), ExplicitLossModel.uniform(0.5), M, R)

    def test_desired_out_of_range(self):
        with pytest.raises(DomainError):
            view_failure_probability(ONE, 5, TransmissionPlan(), ExplicitLossModel.uniform(0.5), 4, 2)

    def test_r1_is_plain_loss(self):
        losses = [1.0, 0.2, 0.7, 0.4, 0.9]
        assert failure_from_view_losses(losses, 2, 4, 1) == 0.7

    @settings(max_examples=200, deadline=None)
    @given(
        st.lists(st.floats(0.0, 1.0), min_size=3, max_size=9),
        st.integers(1, 4),
        st.data(),
    )
    def test_bounded_and_monotone_in_quality(self, raw, R, data):
        M = len(raw)
        losses = [1.0] + raw
        d = data.draw(st.integers(1, M))
        f = failure_from_view_losses(losses, d, M, R)
        assert 0.0 <= f <= losses[d] + 1e-12
        assert failure_from_view_losses(losses, d, M, R + 1) <= f + 1e-12

    @settings(max_examples=150, deadline=None)
    @given(st.lists(st.floats(0.0, 1.0), min_size=3, max_size=7), st.integers(1, 3), st.data())
    def test_lower_loss_never_hurts(self, raw, R, data):
        M = len(raw)
        losses = [1.0] + raw
        d = data.draw(st.integers(1, M))
        v = data.draw(st.integers(1, M))
        better = list(losses)
        better[v] *= data.draw(st.floats(0.0, 1.0))
        assert failure_from_view_losses(better, d, M, R) <= failure_from_view_losses(losses, d, M, R) + 1e-12

    @settings(max_examples=100, deadline=None)
    @given(
        st.integers(2, 5),
        st.integers(1, 3),
        st.lists(st.tuples(st.integers(1, 5), st.sampled_from([1, 2])), max_size=7),
        st.sampled_from([0.1, 0.3, 0.5, 0.7, 0.9]),
        st.sampled_from([0.1, 0.3, 0.5, 0.7, 0.9]),
    )
    def test_matches_enumeration(self, M, R, sends, p1, p2):
        c = Client(0, frozenset({1, 2}), frozenset({6.5}))
        model = ExplicitLossModel({(0, 1, 6.5): p1, (0, 2, 6.5): p2})
        plan = TransmissionPlan.from_slots((min(v, M), ch, 6.5) for v, ch in sends)
        for d in range(1, M + 1):
            closed = view_failure_probability(c, d, plan, model, M, R)
            assert closed == pytest.approx(enumerate_failure_probability(c, d, plan, model, M, R), abs=1e-12)


class TestSingleRadio:
    def test_other_channels_ignored(self):
        c = Client(0, frozenset({1, 2}), frozenset({6.5}))
        plan = TransmissionPlan({(1, 2, 6.5): 1})
        assert view_failure_probability_single_radio(c, 1, 1, plan, ExplicitLossModel.uniform(0.1), 3, 2) == 1.0

    def test_single_channel_is_consistent(self):
        plan = every_view_once(4)
        model = ExplicitLossModel.uniform(0.4)
        assert view_failure_probability_single_radio(ONE, 1, 2, plan, model, 4, 2) == view_failure_probability(
            ONE, 2, plan, model, 4, 2
        )

    def test_two_rates_on_the_tuned_channel(self):
        c = Client(0, frozenset({1, 2}), frozenset({6.5, 13.0}))
        model = ExplicitLossModel({(0, 1, 6.5): 0.4, (0, 1, 13.0): 0.6, (0, 2, 6.5): 0.1, (0, 2, 13.0): 0.1})
        counts = {(v, 1, r): 1 for v in (1, 2, 3) for r in (6.5, 13.0)}
        counts[(2, 2, 6.5)] = 1
        plan = TransmissionPlan(counts)
        value = view_failure_probability_single_radio(c, 1, 2, plan, model, 3, 2)
        assert value == pytest.approx(0.101376, abs=1e-12)

    def test_channel_not_available(self):
        with pytest.raises(DomainError):
            view_failure_probability_single_radio(ONE, 2, 1, TransmissionPlan(), ExplicitLossModel.uniform(0.1), 3, 2)


class TestExpectedAlpha:
    def test_perfect_reception(self):
        c = Client(0, frozenset({1}), frozenset({6.5}), frozenset({1, 2, 3}))
        assert expected_alpha(c, every_view_once(3), ExplicitLossModel.uniform(0.0), 3, 2) == 1.0

    def test_nothing_received(self):
        c = Client(0, frozenset({1}), frozenset({6.5}), frozenset({1, 2}))
        assert expected_alpha(c, every_view_once(3), ExplicitLossModel.uniform(1.0), 3, 2) == 0.0

    def test_mean_of_complements(self):
        # view 1 fails w.p. 0.3; view 2 w.p. 0.5 * (1 - 0.7 * 5/14) = 0.375
        c = Client(0, frozenset({1, 2, 3}), frozenset({6.5}), frozenset({1, 2}))
        model = ExplicitLossModel({(0, 1, 6.5): 0.3, (0, 2, 6.5): 0.5, (0, 3, 6.5): 9 / 14})
        plan = TransmissionPlan({(1, 1, 6.5): 1, (2, 2, 6.5): 1, (3, 3, 6.5): 1})
        assert view_failure_probability(c, 2, plan, model, 4, 2) == pytest.approx(0.375, abs=1e-12)
        assert expected_alpha(c, plan, model, 4, 2) == pytest.approx(0.6625, abs=1e-12)

    def test_empty_desired_set(self):
        with pytest.raises(DomainError):
            expected_alpha(ONE, TransmissionPlan(), ExplicitLossModel.uniform(0.1), 3, 2)


class TestAggregateLoss:
    def test_never_sent(self):
        policy = ApTransmissionPolicy({(1, 6.5): (1.0,)})
        assert aggregate_loss_probability(ONE, policy, ExplicitLossModel.uniform(0.4)) == 1.0

    def test_always_once(self):
        policy = ApTransmissionPolicy.fixed({(1, 6.5): 1})
        assert aggregate_loss_probability(ONE, policy, ExplicitLossModel.uniform(0.2)) == pytest.approx(0.2)

    def test_random_repeats(self):
        policy = ApTransmissionPolicy({(1, 6.5): (0.0, 0.5, 0.5)})
        assert aggregate_loss_probability(ONE, policy, ExplicitLossModel.uniform(0.2)) == pytest.approx(0.12, abs=1e-15)

    def test_malformed_policy(self):
        with pytest.raises(ConfigurationError):
            ApTransmissionPolicy({(1, 6.5): (0.7, 0.7)})


class TestAsymptoticAlpha:
    def test_lossless(self):
        assert asymptotic_alpha(0.0, 3) == 1.0

    @given(st.floats(0.0, 1.0))
    def test_r1_without_synthesis(self, p):
        assert asymptotic_alpha(p, 1) == pytest.approx(1.0 - p, abs=1e-12)
        assert asymptotic_alpha(p, 1) == pytest.approx(alpha_without_dibr(p), abs=1e-12)

    def test_reference_value(self):
        assert asymptotic_alpha(0.2, 3) == pytest.approx(0.9792, abs=1e-12)

    @given(st.floats(0.0, 1.0), st.integers(1, 10))
    def test_non_decreasing_in_r(self, p, R):
        assert asymptotic_alpha(p, R + 1) >= asymptotic_alpha(p, R) - 1e-12

    def test_domain(self):
        with pytest.raises(DomainError):
            asymptotic_alpha(1.5, 2)
        with pytest.raises(DomainError):
            asymptotic_alpha(0.2, 0)


class TestSpaced:
    @given(st.floats(0.0, 1.0), st.integers(1, 8))
    def test_spacing_one_is_plain(self, p, R):
        assert asymptotic_alpha_spaced(p, R, 1) == pytest.approx(asymptotic_alpha(p, R), abs=1e-12)

    def test_lossless(self):
        assert asymptotic_alpha_spaced(0.0, 3, 3) == 1.0

    def test_reference_value(self):
        assert asymptotic_alpha_spaced(0.2, 3, 3) == pytest.approx(0.8 * (3 * 0.8 + 0.2) / 3, abs=1e-12)
        assert asymptotic_alpha_spaced(0.2, 3, 3) == pytest.approx(0.693333333333, abs=1e-9)

    @pytest.mark.parametrize("Rt", [0, 4])
    def test_domain(self, Rt):
        with pytest.raises(DomainError):
            asymptotic_alpha_spaced(0.2, 3, Rt)


class TestPeriodicZipf:
    def test_single_state_chain(self):
        assert periodic_zipf_transition_matrix(0.4, 1).tolist() == [[1.0]]

    def test_lossless_chain_is_cyclic_shift(self):
        P = periodic_zipf_transition_matrix(1.0, 4)
        assert np.array_equal(P, np.roll(np.eye(4), 1, axis=1))

    def test_two_positions_half(self):
        P = periodic_zipf_transition_matrix(0.5, 2)
        assert np.allclose(P, [[1 / 3, 2 / 3], [2 / 3, 1 / 3]], atol=1e-15)

    @given(st.floats(0.01, 1.0), st.integers(1, 8))
    def test_rows_stochastic_and_uniform_stationary(self, p, m):
        P = periodic_zipf_transition_matrix(p, m)
        assert np.allclose(P.sum(axis=1), 1.0, atol=1e-12)
        assert np.allclose(stationary_distribution(P), 1.0 / m, atol=1e-9)

    def test_transition_matches_geometric_wrap_enumeration(self):
        p, m = 0.3, 3
        P = periodic_zipf_transition_matrix(p, m)
        # sum over explicit gap lengths, wrapping many periods
        for i in range(1, m + 1):
            for j in range(1, m + 1):
                total = sum(p * (1 - p) ** (x - 1) for x in range(1, 400) if (i - 1 + x) % m == j - 1)
                assert P[i - 1, j - 1] == pytest.approx(total, abs=1e-12)

    def test_zero_success_rejected(self):
        with pytest.raises(DomainError):
            periodic_zipf_transition_matrix(0.0, 3)

    def test_uniform_reward(self):
        q, p, R = 0.7, 0.4, 3
        params = PeriodicZipfParams(4, 0.0, q, p)
        expected = q * sum(x * p * (1 - p) ** (x - 1) for x in range(1, R + 1))
        for j in range(1, 5):
            assert periodic_zipf_cycle_reward(j, params, R) == pytest.approx(expected, abs=1e-12)

    def test_one_step_reward(self):
        params = PeriodicZipfParams.with_peak(3, 1.0, 0.5)
        for j in range(1, 4):
            assert periodic_zipf_cycle_reward(j, params, 1) == pytest.approx(0.5 * params.subscription_probability(j + 1))

    def test_cycle_reward_values(self):
        params = PeriodicZipfParams.with_peak(3, 1.0, 0.5, peak=0.9)
        values = [periodic_zipf_cycle_reward(j, params, 3) for j in (1, 2, 3)]
        assert values == pytest.approx([0.61875, 0.65625, 0.99375], abs=1e-12)

    def test_cycle_reward_marking_simulation(self):
        params = PeriodicZipfParams.with_peak(3, 1.0, 0.5, peak=0.9)
        R, n = 3, 1_000_000
        rng = make_rng(11)
        w = np.array(params.weights())
        for j in (1, 2, 3):
            gap = rng.geometric(params.p, n)
            marks = rng.random((n, R)) < w[(j + np.arange(R)) % params.m]
            reward = np.where(gap <= R, (marks & (np.arange(R) < gap[:, None])).sum(axis=1), 0)
            se = reward.std(ddof=1) / math.sqrt(n)
            assert abs(reward.mean() - periodic_zipf_cycle_reward(j, params, R)) <= 4 * se

    def test_position_out_of_range(self):
        with pytest.raises(DomainError):
            periodic_zipf_cycle_reward(4, PeriodicZipfParams.with_peak(3, 1.0, 0.5), 2)

    def test_expected_subscribed_wraps(self):
        params = PeriodicZipfParams(3, 1.0, 0.9, 0.5)
        assert expected_subscribed(3, 4, params) == pytest.approx(sum(params.weights()) + 0.9)

    def test_nothing_received(self):
        assert asymptotic_alpha_periodic_zipf(PeriodicZipfParams(3, 1.0, 0.9, 0.0), 3) == 0.0

    @given(st.floats(0.01, 1.0), st.integers(1, 6))
    def test_full_subscription_reduces_to_uniform(self, p, R):
        params = PeriodicZipfParams(1, 0.0, 1.0, p)
        assert asymptotic_alpha_periodic_zipf(params, R) == pytest.approx(asymptotic_alpha(1 - p, R), abs=1e-9)

    @pytest.mark.parametrize("m,p,value", [(3, 0.5, 0.75), (5, 0.6, 0.8592)])
    def test_reference_values(self, m, p, value):
        params = PeriodicZipfParams.with_peak(m, 1.0, p, peak=0.9)
        assert asymptotic_alpha_periodic_zipf(params, 3) == pytest.approx(value, abs=1e-12)

    def test_dropping_long_gaps_undercounts(self):
        params = PeriodicZipfParams.with_peak(5, 1.0, 0.6)
        assert asymptotic_alpha_periodic_zipf(params, 3, tail=False) < asymptotic_alpha_periodic_zipf(params, 3)

    def test_printed_form_is_evaluated(self):
        params = PeriodicZipfParams.with_peak(3, 1.0, 0.5)
        assert asymptotic_alpha_periodic_zipf_printed(params, 3) == pytest.approx(1.125, abs=1e-12)

    def test_params_validation(self):
        with pytest.raises(ConfigurationError):
            PeriodicZipfParams(3, 1.0, 1.2, 0.5)
        with pytest.raises(ConfigurationError):
            PeriodicZipfParams(0, 1.0, 0.5, 0.5)


def test_short_loss_list_rejected():
    with pytest.raises(DomainError, match="index 0 unused"):
        failure_from_view_losses([0.3] * 5, 3, 5, 3)
