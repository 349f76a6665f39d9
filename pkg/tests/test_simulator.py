import math

import numpy as np
import pytest

from dibrcast.analysis import view_failure_probability
from dibrcast.model import Cell, Client, ConfigurationError, ExplicitLossModel, TransmissionPlan
from dibrcast.oracle import make_rng
from dibrcast.simulator import (
    FRAME_COLUMNS,
    ScenarioConfig,
    ScenarioInfeasible,
    Simulation,
    alpha_validation,
    baseline_plan,
    channel_time,
    confidence_interval,
    failure_count_distribution,
    failure_z_scores,
    ClientStats,
    preference_distribution,
    run_scenario,
    sample_preference,
    step_dynamics,
    summarize_runs,
    write_clients_csv,
    write_frames_csv,
)

SMALL = ScenarioConfig(population=20, frames=30)
ONE_RATE = Cell(channels=2, rates=(6.5,))


def member(cid, threshold, channels=(1, 2)):
    return Client(cid, frozenset(channels), frozenset({6.5}), threshold=threshold)


class TestChannelTime:
    def test_empty(self):
        assert channel_time(TransmissionPlan(), Cell()) == 0.0

    def test_one_view_lowest_rate(self):
        assert channel_time(TransmissionPlan({(1, 1, 6.5): 1}), Cell()) == pytest.approx(4.0985, abs=1e-4)

    def test_two_channels_double(self):
        one = channel_time(TransmissionPlan({(1, 1, 13.0): 1}), Cell())
        two = channel_time(TransmissionPlan({(1, 1, 13.0): 1, (1, 2, 13.0): 1}), Cell())
        assert two == 2 * one


class TestBaseline:
    def test_smallest_repeat_count(self):
        c = member(1, 0.1)
        out = baseline_plan([(c, 3)], 6, ExplicitLossModel.uniform(0.3), ONE_RATE)
        assert dict(out.plan) == {(3, 1, 6.5): 2}

    def test_strictest_subscriber_decides(self):
        # 0.3**4 = 0.0081 already meets the 0.01 threshold, 0.3**3 does not
        a, b = member(1, 0.5), member(2, 0.01)
        out = baseline_plan([(a, 3), (b, 3)], 6, ExplicitLossModel.uniform(0.3), ONE_RATE)
        assert out.plan.total == 4
        assert 0.3**4 <= 0.01 < 0.3**3

    def test_no_clients(self):
        assert baseline_plan([], 6, ExplicitLossModel.uniform(0.3), ONE_RATE).plan == TransmissionPlan()

    def test_highest_rate_that_works(self):
        cell = Cell(channels=1, rates=(6.5, 13.0, 26.0))
        c = Client(1, frozenset({1}), frozenset(cell.rates), threshold=0.05)
        model = ExplicitLossModel.per_rate([c], {6.5: 0.01, 13.0: 0.2, 26.0: 0.9})
        out = baseline_plan([(c, 2)], 4, model, cell)
        # 26 Mbps would need 29 repeats; 13 Mbps needs two
        assert dict(out.plan) == {(2, 1, 13.0): 2}

    def test_cap_falls_back_to_lowest_rate(self, caplog):
        c = member(1, 0.001)
        with caplog.at_level("INFO", logger="dibrcast.simulator"):
            out = baseline_plan([(c, 2)], 4, ExplicitLossModel.uniform(0.9), ONE_RATE, max_repeats=3)
        assert out.capped == (2,) and dict(out.plan) == {(2, 1, 6.5): 3}
        assert "repeat cap" in caplog.text

    def test_views_spread_over_channels_and_queue(self):
        cell = Cell(channels=2, rates=(6.5,), video_rate=4e6)
        c = member(1, 0.5)
        out = baseline_plan([(c, v) for v in (1, 2, 3)], 4, ExplicitLossModel.uniform(0.1), cell)
        assert {s.channel for s in out.plan} == {1, 2}
        assert len(out.queued) == 1

    def test_rotation_changes_queued_view(self):
        cell = Cell(channels=1, rates=(6.5,), video_rate=4e6)
        demands = [(member(1, 0.5), v) for v in (1, 2)]
        queued = {baseline_plan(demands, 4, ExplicitLossModel.uniform(0.1), cell, rotation=r).queued for r in (0, 1)}
        assert queued == {(1,), (2,)}


class TestPreferences:
    def test_uniform_frequencies(self):
        draws = make_rng(0).choice(16, size=1_000_000, p=preference_distribution("uniform", 16))
        freq = np.bincount(draws, minlength=16) / draws.size
        sigma = math.sqrt((1 / 16) * (15 / 16) / draws.size)
        assert np.all(np.abs(freq - 1 / 16) <= 4 * sigma)

    def test_zipf_two_views(self):
        assert preference_distribution("zipf", 2)[0] == pytest.approx(2 / 3)

    def test_normal_mode(self):
        rng = make_rng(1)
        draws = [sample_preference("normal", 16, rng) for _ in range(20_000)]
        assert np.bincount(draws).argmax() == 8

    def test_sampler_follows_distribution(self):
        rng = make_rng(2)
        n = 30_000
        draws = np.array([sample_preference("zipf", 5, rng) for _ in range(n)])
        p = preference_distribution("zipf", 5)
        freq = np.bincount(draws, minlength=6)[1:] / n
        assert np.all(np.abs(freq - p) <= 4 * np.sqrt(p * (1 - p) / n))

    def test_unknown(self):
        with pytest.raises(ConfigurationError):
            preference_distribution("pareto", 4)


class TestDynamics:
    def test_frozen_population(self):
        sim = Simulation(SMALL.replace(arrival=0.0, departure=0.0, view_change=0.0))
        for _ in range(5):
            sim._arrive(0)
        for f in range(1, 51):
            step_dynamics(sim, f)
        assert len(sim.active) == 5

    def test_certain_arrivals(self):
        sim = Simulation(SMALL.replace(arrival=1.0, departure=0.0, view_change=0.0))
        for f in range(1, 31):
            step_dynamics(sim, f)
        assert len(sim.active) == 30

    def test_balanced_churn_has_no_drift(self):
        drifts = []
        for seed in range(30):
            sim = Simulation(SMALL.replace(arrival=0.25, departure=0.25, view_change=0.0, seed=seed))
            for _ in range(20):
                sim._arrive(0)
            for f in range(1, 201):
                step_dynamics(sim, f)
            drifts.append(len(sim.active) - 20)
        mean, half = confidence_interval(drifts)
        assert abs(mean) <= half

    def test_view_change_is_leave_then_join(self):
        sim = Simulation(SMALL.replace(arrival=0.0, departure=0.0, view_change=1.0))
        for _ in range(6):
            sim._arrive(0)
        for f in range(1, 21):
            step_dynamics(sim, f)
            for inst in sim.table.instances():
                assert inst.subscribers
        assert sim.events["view_changes"] == 20


class TestRun:
    def test_zero_frames_only_initial_record(self):
        res = run_scenario(SMALL.replace(frames=0))
        assert len(res.records) == 1 and res.records[0].frame == 0
        assert res.records[0].active_clients == 20

    def test_infeasible_initial_population(self):
        with pytest.raises(ScenarioInfeasible, match="initial population"):
            run_scenario(SMALL.replace(channels=1, video_rate=40e6))

    def test_reproducible(self):
        assert run_scenario(SMALL.replace(seed=4)).records == run_scenario(SMALL.replace(seed=4)).records

    def test_seeds_differ(self):
        assert run_scenario(SMALL.replace(seed=1)).records != run_scenario(SMALL.replace(seed=2)).records

    def test_clients_meet_threshold_or_are_flagged(self):
        sim = Simulation(SMALL.replace(seed=3))
        for _ in range(sim.cfg.population):
            sim._arrive(0)
        cfg = sim.cfg
        for f in range(1, 41):
            sim.step(f)
            sim._refresh(f)
            assert sim.table.is_feasible()
            for cid, ac in sim.active.items():
                plan = TransmissionPlan.from_slots(sim.table.subscriptions(cid))
                fail = view_failure_probability(ac.client, ac.desired, plan, sim.model, cfg.views, cfg.quality)
                assert ac.infeasible or fail <= ac.client.threshold + 1e-12
            rec = sim._measure(f)
            assert rec.infeasible_clients == sum(1 for ac in sim.active.values() if ac.infeasible)

    def test_mvgmp_cheaper_than_baseline_on_average(self):
        for seed in range(5):
            res = run_scenario(SMALL.replace(seed=seed))
            assert res.mean_mvgmp_channel_time <= res.mean_baseline_channel_time

    def test_reception_agrees_with_predicted_failures(self):
        res = run_scenario(ScenarioConfig(population=30, frames=150, seed=8))
        z = np.array(list(failure_z_scores(res).values()))
        assert np.all(np.abs(z) <= 4.0)
        assert failure_z_scores(res, exact=False).keys() == failure_z_scores(res).keys()
        total_obs = sum(st.failures for st in res.clients.values())
        total_exp = sum(st.expected_failures for st in res.clients.values())
        total_var = sum(st.variance for st in res.clients.values())
        assert abs(total_obs - total_exp) <= 4 * math.sqrt(total_var)

    def test_summary_across_seeds(self):
        runs = [run_scenario(SMALL.replace(seed=s)) for s in range(3)]
        out = summarize_runs(runs)
        assert out["mvgmp_channel_time"].n == 3
        assert out["mvgmp_channel_time"].mean == pytest.approx(np.mean([r.mean_mvgmp_channel_time for r in runs]))


def test_failure_count_distribution_is_binomial():
    pmf = failure_count_distribution([0.2] * 4)
    expected = [math.comb(4, k) * 0.2**k * 0.8 ** (4 - k) for k in range(5)]
    assert pmf == pytest.approx(expected, abs=1e-15)


def test_exact_score_stays_calibrated_for_rare_failures():
    # one failure where 0.04 were expected: about 4.8 sd by the normal rule,
    # but P(count >= 1) is close to 4%
    st = ClientStats(1, 10.0, 0.01, frames=100, failures=1, expected_failures=0.04, variance=0.04 * 0.9996)
    st.predicted = [0.0004] * 100
    assert st.z_score > 4.5
    assert 1.5 < st.exact_z < 2.5


def test_exact_score_zero_when_as_expected():
    st = ClientStats(1, 10.0, 0.1, frames=2, failures=1, expected_failures=1.0, variance=0.5, predicted=[0.5, 0.5])
    assert st.exact_z == 0.0


def test_confidence_interval_single_value():
    assert confidence_interval([2.0]) == (2.0, 0.0)


def test_alpha_validation_within_tolerance():
    for check in alpha_validation(ScenarioConfig(), M_large=400_000, seed=5):
        assert abs(check.simulated.mean - check.closed_form) <= 5e-3


def test_csv_headers_and_columns(tmp_path):
    res = run_scenario(SMALL.replace(frames=3))
    write_frames_csv(res, tmp_path / "f.csv", header="config_hash=abc seed=0")
    write_clients_csv(res, tmp_path / "c.csv", header="config_hash=abc seed=0")
    frames = (tmp_path / "f.csv").read_text().splitlines()
    assert frames[0] == "# config_hash=abc seed=0"
    assert frames[1].split(",") == list(FRAME_COLUMNS)
    assert len(frames) == 2 + 4
    assert (tmp_path / "c.csv").read_text().splitlines()[1].startswith("client,distance,threshold")
