from __future__ import annotations

import pytest

from botuner.campaign import CampaignResult, CampaignSettings, HistoryEntry
from botuner.errors import SettingsError
from botuner.report import (
    AggregatePoint,
    RegretPoint,
    aggregate_curves,
    aggregate_seeds,
    average_rank_series,
    feasible_regret_curve,
    mape_over_iterations,
    ranking_series,
)


def entry(time, objective, feasible=True, placeholder=False, iteration=0, agent=0):
    return HistoryEntry(
        config=(1,),
        objective=objective,
        constraint_value=None if placeholder else 1.0,
        is_placeholder=placeholder,
        iteration=iteration,
        submit_time=0.0,
        complete_time=None if placeholder else time,
        feasible=feasible,
        agent_id=agent,
    )


def result_with(history, per_agent=None):
    return CampaignResult(
        strategy="test",
        seed=0,
        settings=CampaignSettings(),
        history=history,
        per_agent=per_agent,
    )


class TestRegretCurve:
    def test_running_minimum(self):
        history = [
            entry(10, 100.0, iteration=0),
            entry(20, 50.0, iteration=1),
            entry(30, 70.0, iteration=2),
        ]
        curve = feasible_regret_curve(history)
        assert [p.best_feasible_objective for p in curve] == [100.0, 50.0, 50.0]

    def test_ground_truth_subtraction(self):
        history = [
            entry(10, 100.0, iteration=0),
            entry(20, 50.0, iteration=1),
            entry(30, 70.0, iteration=2),
        ]
        curve = feasible_regret_curve(history, ground_truth=40.0)
        assert [p.regret for p in curve] == [60.0, 10.0, 10.0]

    def test_infeasible_history_is_undefined(self):
        history = [entry(10, 5.0, feasible=False), entry(20, 2.0, feasible=False)]
        curve = feasible_regret_curve(history)
        assert all(p.best_feasible_objective is None for p in curve)
        assert all(p.regret is None for p in curve)

    def test_placeholders_excluded(self):
        history = [entry(10, 100.0), entry(0, 1.0, placeholder=True)]
        curve = feasible_regret_curve(history)
        assert len(curve) == 1 and curve[0].best_feasible_objective == 100.0

    def test_undefined_until_first_feasible(self):
        history = [
            entry(10, 5.0, feasible=False, iteration=0),
            entry(20, 80.0, feasible=True, iteration=1),
        ]
        curve = feasible_regret_curve(history)
        assert curve[0].best_feasible_objective is None
        assert curve[1].best_feasible_objective == 80.0

    def test_monotone_non_increasing_property(self, rng):
        history = [
            entry(float(t), float(rng.uniform(1, 100)), feasible=bool(rng.integers(2)),
                  iteration=t)
            for t in range(50)
        ]
        values = [
            p.best_feasible_objective
            for p in feasible_regret_curve(history)
            if p.best_feasible_objective is not None
        ]
        assert values == sorted(values, reverse=True)


class TestRankingSeries:
    def _ensemble(self, agent_values):
        agents = [
            result_with([entry(5.0, value, iteration=0, agent=k)])
            for k, value in enumerate(agent_values)
        ]
        merged = [e for a in agents for e in a.history]
        return result_with(merged, per_agent=agents)

    def test_one_agent_strictly_better(self):
        central = result_with([entry(5.0, 5.0)])
        series = ranking_series(central, self._ensemble([3.0, 6.0, 7.0]), grid_step=5.0)
        assert series[-1][1] == 2.0

    def test_central_best_ranks_first(self):
        central = result_with([entry(5.0, 1.0)])
        series = ranking_series(central, self._ensemble([3.0, 6.0, 7.0]), grid_step=5.0)
        assert series[-1][1] == 1.0

    def test_ties_do_not_count_as_better(self):
        central = result_with([entry(5.0, 3.0)])
        series = ranking_series(central, self._ensemble([3.0, 3.0]), grid_step=5.0)
        assert series[-1][1] == 1.0

    def test_central_without_incumbent_ranks_below_any_with_one(self):
        central = result_with([entry(5.0, 5.0, feasible=False)])
        series = ranking_series(central, self._ensemble([3.0, 6.0]), grid_step=5.0)
        assert series[-1][1] == 3.0

    def test_multi_seed_rank_average(self):
        series_a = [(0.0, 1.0), (60.0, 1.0)]
        series_b = [(0.0, 2.0), (60.0, 2.0)]
        averaged = average_rank_series([series_a, series_b])
        assert averaged == [(0.0, 1.5), (60.0, 1.5)]

    def test_requires_per_agent_traces(self):
        central = result_with([entry(5.0, 5.0)])
        flat = result_with([entry(5.0, 3.0)])
        with pytest.raises(SettingsError, match="per-agent"):
            ranking_series(central, flat)

    def test_rank_bounds(self, rng):
        central = result_with(
            [entry(float(t + 1), float(rng.uniform(1, 10)), iteration=t) for t in range(10)]
        )
        agents = [
            result_with(
                [entry(float(t + 1), float(rng.uniform(1, 10)), iteration=t, agent=k)
                 for t in range(10)]
            )
            for k in range(4)
        ]
        merged = result_with([e for a in agents for e in a.history], per_agent=agents)
        for _, rank in ranking_series(central, merged, grid_step=2.0):
            assert 1.0 <= rank <= 5.0


class TestAggregation:
    def test_two_constant_curves_average(self):
        curves = [
            [RegretPoint(0.0, 10.0, None)],
            [RegretPoint(0.0, 20.0, None)],
        ]
        points = aggregate_curves(curves, grid_step=30.0)
        assert all(p.mean_objective == 15.0 for p in points)
        assert all(p.coverage == 2 for p in points)

    def test_partial_coverage_reported(self):
        curves = [
            [RegretPoint(0.0, 10.0, None)],
            [RegretPoint(5.0, 20.0, None)],
        ]
        points = aggregate_curves(curves, grid_step=2.0)
        early = [p for p in points if p.time < 5.0]
        late = [p for p in points if p.time >= 5.0]
        assert all(p.coverage == 1 and p.mean_objective == 10.0 for p in early)
        assert all(p.coverage == 2 and p.mean_objective == 15.0 for p in late)

    def test_identical_curves_average_to_themselves(self):
        curve = [RegretPoint(0.0, 30.0, None), RegretPoint(10.0, 12.0, None)]
        points = aggregate_curves([curve, curve], grid_step=5.0)
        assert points[0].mean_objective == 30.0
        assert points[-1].mean_objective == 12.0

    def test_shift_commutes_with_averaging(self):
        base = [
            [RegretPoint(0.0, 10.0, None), RegretPoint(8.0, 4.0, None)],
            [RegretPoint(0.0, 6.0, None), RegretPoint(4.0, 2.0, None)],
        ]
        shifted = [
            [RegretPoint(p.time, p.best_feasible_objective + 7.0, None) for p in curve]
            for curve in base
        ]
        for a, b in zip(aggregate_curves(base, 2.0), aggregate_curves(shifted, 2.0)):
            assert b.mean_objective == pytest.approx(a.mean_objective + 7.0)

    def test_aggregate_seeds_over_results(self):
        results = [
            result_with([entry(10.0, 100.0), entry(20.0, 60.0, iteration=1)]),
            result_with([entry(10.0, 80.0)]),
        ]
        points = aggregate_seeds(results, grid_step=10.0, ground_truth=50.0)
        assert isinstance(points[0], AggregatePoint)
        final = points[-1]
        assert final.mean_objective == pytest.approx((60.0 + 80.0) / 2)
        assert final.mean_regret == pytest.approx((10.0 + 30.0) / 2)

    def test_empty_input_rejected(self):
        with pytest.raises(SettingsError):
            aggregate_curves([], 10.0)
        with pytest.raises(SettingsError):
            aggregate_seeds([], 10.0)


class TestMapeAggregation:
    def test_per_iteration_mean(self):
        from botuner.constraint import MapeRecord

        records = [
            MapeRecord(0, 1.0, 1.0, 0.10, 0.0, 1.0, agent_id=0),
            MapeRecord(0, 1.0, 1.0, 0.30, 0.0, 1.0, agent_id=1),
            MapeRecord(2, 1.0, 1.0, 0.05, 0.0, 1.0, agent_id=0),
        ]
        rows = mape_over_iterations(records)
        assert rows == [(0, pytest.approx(0.20), 2), (2, pytest.approx(0.05), 1)]
