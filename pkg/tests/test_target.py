from __future__ import annotations

import itertools
import json
import math
import sys

import pytest

from botuner.errors import KnobDomainError, TargetError
from botuner.target import (
    CachedTarget,
    EvaluationResult,
    ExternalCommandTarget,
    SurrogateTarget,
    make_result,
    rmsd_surface,
    time_surface,
)


class TestEvaluationResult:
    def test_objective_consistency_enforced(self):
        with pytest.raises(ValueError):
            EvaluationResult(
                exec_time=10.0, rmsd_p75=2.0, objective=81.0, feasible=True, wall_clock=10.0
            )

    def test_make_result_couples_fields(self):
        result = make_result(exec_time=10.0, rmsd_p75=2.0, rmsd_max=2.1)
        assert result.objective == pytest.approx(80.0)
        assert result.feasible is True
        assert result.wall_clock == 10.0

    def test_boundary_rmsd_is_feasible(self):
        assert make_result(1.0, 2.1, rmsd_max=2.1).feasible is True
        assert make_result(1.0, 2.1000001, rmsd_max=2.1).feasible is False


class TestSurrogateFormulas:
    def test_zero_effort_endpoint(self):
        assert rmsd_surface(0.0) == pytest.approx(3.4, abs=1e-12)
        assert time_surface(0.0, 0.6, 0.5) == pytest.approx(30.0, abs=1e-12)
        objective = rmsd_surface(0.0) ** 3 * time_surface(0.0, 0.6, 0.5)
        assert objective == pytest.approx(3.4**3 * 30.0, rel=1e-12)

    def test_full_effort_endpoint(self):
        assert rmsd_surface(1.0) == pytest.approx(0.8 + 2.6 * math.exp(-2.5), rel=1e-12)
        assert time_surface(1.0, 1.0, 1.0) == pytest.approx(382.0, abs=1e-12)

    def test_feasibility_boundary_by_bisection(self):
        # rmsd_surface crosses 2.1 where exp term equals 1/2
        lo, hi = 0.0, 1.0
        for _ in range(80):
            mid = (lo + hi) / 2
            if rmsd_surface(mid) > 2.1:
                lo = mid
            else:
                hi = mid
        assert hi == pytest.approx(math.log(2) / 2.5, abs=1e-10)

    def test_default_space_endpoints(self, default_space):
        target = SurrogateTarget(default_space)
        upper = tuple(k.upper for k in default_space.knobs)
        result = target(upper)
        assert result.rmsd_p75 == pytest.approx(0.8 + 2.6 * math.exp(-2.5), rel=1e-12)
        assert result.exec_time == pytest.approx(382.0, abs=1e-9)
        assert result.feasible is True

    def test_monotone_quality_improvement(self, default_space, rng):
        target = SurrogateTarget(default_space)
        for _ in range(100):
            config = list(default_space.sample(rng))
            idx = int(rng.choice(default_space.quality_indices))
            knob = default_space.knobs[idx]
            if config[idx] == knob.upper:
                continue
            bumped = list(config)
            bumped[idx] += 1
            assert target(tuple(bumped)).rmsd_p75 <= target(tuple(config)).rmsd_p75

    def test_deterministic(self, default_space, rng):
        target = SurrogateTarget(default_space)
        config = default_space.sample(rng)
        assert target(config) == target(config)

    def test_invalid_config_rejected(self, default_space):
        target = SurrogateTarget(default_space)
        with pytest.raises(KnobDomainError):
            target((0, 8, 1, 32, 32, 10, 1, 1))

    def test_reduced_space_optimum_by_enumeration(self, space3):
        target = SurrogateTarget(space3)
        best_config, best_value = None, math.inf
        for values in itertools.product(
            range(1, 6), range(1, 5), range(1, 21)
        ):
            objective = target(values).objective
            if objective < best_value:
                best_config, best_value = values, objective
        # quality effort pays everywhere, so both quality knobs cap out;
        # buffer lands next to its normalized sweet spot
        assert best_config == (5, 4, 10)
        expected = rmsd_surface(1.0) ** 3 * time_surface(1.0, 0.6, 9 / 19)
        assert best_value == pytest.approx(expected, rel=1e-12)


@pytest.fixture
def echo_script(tmp_path):
    """A stub evaluation wrapper reading knob values from argv."""

    def write(body: str) -> str:
        path = tmp_path / "stub.py"
        path.write_text(body)
        return f"{sys.executable} {path} --rep {{repetitions}} --cuda {{cuda_threads}}"

    return write


class TestExternalCommandTarget:
    def test_template_must_cover_every_knob(self, space2):
        with pytest.raises(KnobDomainError, match="cuda_threads"):
            ExternalCommandTarget(space2, "run --rep {repetitions}")

    def test_parses_single_json_line(self, space2, echo_script):
        command = echo_script(
            "import sys\n"
            "print('starting up')\n"
            "print('{\"exec_time\": 10.0, \"rmsd_p75\": 2.0}')\n"
        )
        target = ExternalCommandTarget(space2, command)
        result = target((3, 40))
        assert result.objective == pytest.approx(80.0)
        assert result.feasible is True

    def test_boundary_rmsd_feasible(self, space2, echo_script):
        command = echo_script("print('{\"exec_time\": 5.0, \"rmsd_p75\": 2.1}')\n")
        assert ExternalCommandTarget(space2, command)((3, 40)).feasible is True

    def test_knob_values_reach_the_command(self, space2, echo_script):
        command = echo_script(
            "import sys\n"
            "rep = float(sys.argv[sys.argv.index('--rep') + 1])\n"
            "print('{\"exec_time\": %f, \"rmsd_p75\": 1.0}' % rep)\n"
        )
        result = ExternalCommandTarget(space2, command)((4, 40))
        assert result.exec_time == pytest.approx(4.0)

    def test_nonzero_exit_fails(self, space2, echo_script):
        command = echo_script("import sys\nsys.exit(3)\n")
        with pytest.raises(TargetError, match="exited with 3"):
            ExternalCommandTarget(space2, command)((3, 40))

    def test_unparseable_output_fails(self, space2, echo_script):
        command = echo_script("print('no json here')\n")
        with pytest.raises(TargetError, match="no JSON line"):
            ExternalCommandTarget(space2, command)((3, 40))

    def test_timeout_fails(self, space2, echo_script):
        command = echo_script("import time\ntime.sleep(5)\n")
        target = ExternalCommandTarget(space2, command, timeout_seconds=0.5)
        with pytest.raises(TargetError, match="timed out"):
            target((3, 40))


class TestCachedTarget:
    def test_throughput_only_change_hits(self, default_space):
        cached = CachedTarget(SurrogateTarget(default_space), default_space)
        a = (8, 16, 2, 32, 40, 10, 1, 1)
        b = (8, 16, 2, 256, 40, 10, 1, 20)
        result_a = cached(a)
        result_b = cached(b)
        assert (cached.misses, cached.hits) == (1, 1)
        assert result_a.rmsd_p75 == result_b.rmsd_p75

    def test_repeat_evaluation_hits(self, default_space):
        cached = CachedTarget(SurrogateTarget(default_space), default_space)
        config = (8, 16, 2, 32, 40, 10, 1, 1)
        cached(config)
        cached(config)
        assert (cached.misses, cached.hits) == (1, 1)

    def test_quality_change_misses(self, default_space):
        cached = CachedTarget(SurrogateTarget(default_space), default_space)
        cached((8, 16, 2, 32, 40, 10, 1, 1))
        cached((8, 16, 2, 32, 40, 10, 2, 1))
        assert (cached.misses, cached.hits) == (2, 0)

    def test_results_identical_with_and_without_cache(self, default_space, rng):
        plain = SurrogateTarget(default_space)
        cached = CachedTarget(SurrogateTarget(default_space), default_space)
        configs = [default_space.sample(rng) for _ in range(200)]
        for config in configs:
            assert cached(config) == plain(config)

    def test_miss_count_equals_distinct_quality_keys(self, default_space, rng):
        cached = CachedTarget(SurrogateTarget(default_space), default_space)
        configs = [default_space.sample(rng) for _ in range(150)]
        for config in configs:
            cached(config)
        distinct = {default_space.quality_key(c) for c in configs}
        assert cached.misses == len(distinct)
        assert cached.hits == len(configs) - len(distinct)

    def test_persistence_round_trip(self, default_space, tmp_path):
        path = tmp_path / "cache.json"
        first = CachedTarget(SurrogateTarget(default_space), default_space, path=path)
        config = (8, 16, 2, 32, 40, 10, 1, 1)
        first(config)
        first.save()
        payload = json.loads(path.read_text())
        assert payload == {default_space.quality_key(config): first(config).rmsd_p75}
        second = CachedTarget(SurrogateTarget(default_space), default_space, path=path)
        second(config)
        assert (second.misses, second.hits) == (0, 1)
