import math

from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays
import numpy as np
import pytest

from diffevo.core import evolve
from diffevo.errors import ParameterError
from diffevo.landscape import DensityMap, make_landscape
from diffevo.metrics import (
    EntropyGrid, SUMMARY_COLUMNS, aggregate, grid_entropy, max_entropy, select_elites, summarize_population,
    summarize_run,
)
from diffevo.schedules import make_cosine

points = arrays(float, st.tuples(st.integers(1, 80), st.just(2)), elements=st.floats(-6, 6, allow_nan=False))


class TestElites:
    def test_examples(self):
        assert list(select_elites(np.zeros((3, 2)), [0.1, 0.9, 0.5], 2)) == [1, 2]
        assert sorted(select_elites(np.zeros((4, 2)), [3, 1, 2, 0], 4)) == [0, 1, 2, 3]

    def test_ties_go_to_lower_index(self):
        assert list(select_elites(np.zeros((5, 2)), [1, 2, 2, 1, 2], 3)) == [1, 2, 4]

    def test_matches_full_sort(self):
        f = np.random.default_rng(0).random(512)
        idx = select_elites(np.zeros((512, 2)), f, 64)
        assert set(idx) == set(sorted(range(512), key=lambda i: -f[i])[:64])

    @given(arrays(float, 30, elements=st.floats(0, 1)), st.integers(1, 30))
    def test_idempotent(self, f, k):
        idx = select_elites(np.zeros((30, 2)), f, k)
        again = select_elites(np.zeros((k, 2)), f[idx], k)
        assert list(idx[again]) == list(idx)

    def test_errors(self):
        with pytest.raises(ParameterError):
            select_elites(np.zeros((3, 2)), [1, 2, 3], 4)
        with pytest.raises(ParameterError):
            select_elites(np.zeros((3, 2)), [1, 2], 1)


class TestEntropy:
    def test_one_cell_is_zero_bits(self):
        assert grid_entropy(np.full((64, 2), 0.01)) == 0.0

    def test_64_cells_is_six_bits(self):
        ij = np.array([(i, j) for i in range(8) for j in range(8)])
        pts = -4 + (ij * 10 + 0.5) * 0.1
        assert grid_entropy(pts) == pytest.approx(6.0, abs=1e-12)

    def test_out_of_bounds_points_are_clamped(self):
        grid = EntropyGrid().add(np.array([[100.0, 100.0], [-9.0, 0.0], [4.0, 4.0]]))
        assert grid.counts.sum() == 3
        assert grid.counts[79, 79] == 2 and grid.counts[0, 40] == 1

    @given(points)
    def test_bounds(self, pts):
        h = grid_entropy(pts)
        assert 0 <= h <= math.log2(min(len(pts), 6400)) + 1e-12

    @given(points, st.randoms())
    def test_permutation_invariant(self, pts, rnd):
        perm = list(range(len(pts)))
        rnd.shuffle(perm)
        assert grid_entropy(pts[perm]) == pytest.approx(grid_entropy(pts), abs=1e-12)

    def test_empty(self):
        with pytest.raises(ParameterError):
            grid_entropy(np.zeros((0, 2)))

    def test_max_entropy(self):
        assert max_entropy(64) == 6.0
        assert max_entropy(10_000) == pytest.approx(math.log2(6400))


class TestSummaries:
    def test_summarize_run_composes_metric_calls(self):
        land = make_landscape("himmelblau")
        pop, trace = evolve(land, DensityMap(), make_cosine(10), 128, 2, 0)
        s = summarize_run(trace, land, pop)
        F = land.fitness(pop.members)
        idx = select_elites(pop.members, F, 64)
        assert s.mean_elite_fitness == pytest.approx(F[idx].mean(), rel=1e-12)
        assert s.entropy_bits == pytest.approx(grid_entropy(pop.members[idx]))
        assert s.evaluations == 128 * 9
        assert s.benchmark == "himmelblau" and s.seed == 0
        assert s.row()[:2] == ["himmelblau", 0]
        assert tuple(s.as_dict()) == SUMMARY_COLUMNS

    def test_aggregate_is_mean_of_runs(self):
        rng = np.random.default_rng(2)
        runs = [summarize_population("b", i, rng.uniform(-4, 4, (70, 2)), rng.random(70), 10, 1.0)
                for i in range(5)]
        agg = aggregate(runs)
        assert agg["runs"] == 5
        assert agg["mean_fitness"] == pytest.approx(np.mean([r.mean_elite_fitness for r in runs]))
        assert agg["mean_entropy"] == pytest.approx(np.mean([r.entropy_bits for r in runs]))
