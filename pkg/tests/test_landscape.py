import math

from hypothesis import given, strategies as st
import numpy as np
import pytest

from diffevo.errors import EvaluationError, ParameterError
from diffevo.landscape import (
    BENCHMARKS, DensityMap, FitnessEvaluator, RescaledLandscape, TwoPeaks, density, eval_ackley, eval_beale,
    eval_himmelblau, eval_rastrigin, eval_rosenbrock, eval_two_peaks, make_landscape, rescale, target_value,
)

coord = st.floats(-10, 10, allow_nan=False)


class TestFunctions:
    def test_rosenbrock(self):
        assert eval_rosenbrock([1, 1]) == 0
        assert eval_rosenbrock([0, 0]) == 1
        assert eval_rosenbrock([-1, 2]) == 104

    def test_beale(self):
        assert eval_beale([3, 0.5]) == 0
        assert eval_beale([0, 0]) == 14.203125

    @given(coord)
    def test_beale_ignores_y_when_x_is_zero(self, y):
        assert eval_beale([0.0, y]) == 14.203125

    def test_himmelblau(self):
        assert eval_himmelblau([3, 2]) == 0
        assert eval_himmelblau([0, 0]) == 170
        for root in BENCHMARKS["himmelblau"][2]:
            # printed roots are rounded to two decimals
            assert eval_himmelblau(root) < 0.1

    def test_ackley(self):
        assert eval_ackley([0, 0]) == pytest.approx(0, abs=1e-12)
        corner = eval_ackley([4, 4])
        for c in ([4, -4], [-4, 4], [-4, -4]):
            assert eval_ackley(c) == pytest.approx(corner)
        direct = (-20 * math.exp(-0.2 * 4) - math.exp(1.0) + math.e + 20)
        assert corner == pytest.approx(direct, rel=1e-12)

    @given(coord, coord)
    def test_ackley_symmetry(self, x, y):
        f = eval_ackley([x, y])
        assert eval_ackley([-x, -y]) == pytest.approx(f, abs=1e-12)
        assert eval_ackley([y, x]) == pytest.approx(f, abs=1e-12)

    def test_rastrigin(self):
        assert eval_rastrigin([0, 0]) == 0
        assert eval_rastrigin([4, 4]) == pytest.approx(32)
        assert eval_rastrigin([1, 0]) == pytest.approx(1.0)

    @given(coord, coord)
    def test_rastrigin_matches_loop_oracle(self, x, y):
        ref = 20 + sum(v * v - 10 * math.cos(2 * math.pi * v) for v in (x, y))
        assert eval_rastrigin([x, y]) == pytest.approx(ref, abs=1e-9)

    def test_two_peaks(self):
        assert eval_two_peaks([1, 1]) == pytest.approx(eval_two_peaks([-1, -1]))
        assert eval_two_peaks([1, 1]) == pytest.approx(1 / (2 * math.pi * 0.01) / 2, rel=1e-6)
        assert eval_two_peaks([10, 10]) < 1e-12

    def test_vectorised(self):
        pts = np.random.default_rng(0).uniform(-4, 4, (7, 3, 2))
        for fn, _, _ in BENCHMARKS.values():
            out = fn(pts)
            assert out.shape == (7, 3)
            assert out[2, 1] == pytest.approx(fn(pts[2, 1]))

    def test_wrong_shape(self):
        with pytest.raises(ParameterError):
            eval_rosenbrock(np.zeros(3))


class TestRescale:
    def test_examples(self):
        assert rescale(5.0, 5.0, 2.0) == 1.0
        assert rescale(3.0, 1.0, 2.0) == pytest.approx(1e-3 / (1e-3 + 1), rel=1e-12)
        assert rescale(3.0, 1.0, 2.0) == pytest.approx(9.990e-4, rel=1e-4)

    @given(st.floats(-1e3, 1e3), st.floats(0.01, 100), st.floats(0.01, 100))
    def test_joint_scaling_invariance(self, resid, s, c):
        assert rescale(resid * c, 0.0, s * c) == pytest.approx(rescale(resid, 0.0, s), rel=1e-9)

    @given(st.floats(0, 1e3), st.floats(0, 1e3))
    def test_decreasing_in_residual(self, r1, r2):
        lo, hi = sorted((r1, r2))
        assert rescale(hi, 0.0, 1.0) <= rescale(lo, 0.0, 1.0)

    def test_bad_scale(self):
        with pytest.raises(ParameterError):
            rescale(1.0, 0.0, 0.0)


class TestTargets:
    def test_minimize(self):
        for name in ("rosenbrock", "beale", "himmelblau"):
            assert target_value(name, "minimize")[0] == 0.0

    def test_rastrigin_maximize_is_corner_value(self):
        f_star, optima = target_value("rastrigin", "maximize")
        assert f_star == pytest.approx(32.0)
        assert len(optima) == 4

    def test_ackley_maximize_at_corners(self):
        f_star, optima = target_value("ackley", "maximize")
        assert f_star == pytest.approx(eval_ackley([4, 4]))
        assert sorted(optima) == [(-4.0, -4.0), (-4.0, 4.0), (4.0, -4.0), (4.0, 4.0)]

    @pytest.mark.parametrize("name", ["ackley", "rastrigin"])
    def test_maximize_target_is_best_corner(self, name):
        fn = BENCHMARKS[name][0]
        corners = np.array([[sx, sy] for sx in (-4.0, 4.0) for sy in (-4.0, 4.0)])
        assert target_value(name, "maximize")[0] == fn(corners).max()

    def test_unknown_objective(self):
        with pytest.raises(ParameterError):
            target_value("beale", "sideways")


class TestRescaledLandscape:
    @pytest.mark.parametrize("name", list(BENCHMARKS))
    def test_range_over_random_points(self, name):
        land = make_landscape(name)
        pts = np.random.default_rng(1).uniform(-4, 4, (1_000_000, 2))
        F = land.fitness(pts)
        assert F.min() > 0 and F.max() <= 1

    @pytest.mark.parametrize("name", list(BENCHMARKS))
    def test_optima_score_one(self, name):
        land = make_landscape(name)
        for opt in land.optima:
            F = land.fitness(np.array(opt))
            assert F >= (0.99 if name == "himmelblau" else 1 - 1e-6)

    def test_scale_is_reproducible_and_positive(self):
        a, b = make_landscape("beale"), make_landscape("beale")
        assert a.scale == b.scale > 0

    def test_scale_override(self):
        assert make_landscape("beale", scale_override=3.5).scale == 3.5
        with pytest.raises(ParameterError):
            make_landscape("beale", scale_override=-1)

    def test_unknown_benchmark(self):
        with pytest.raises(ParameterError):
            RescaledLandscape("sphere")

    def test_two_peaks_factory(self):
        assert isinstance(make_landscape("two_peaks"), TwoPeaks)


class TestDensity:
    def test_examples(self):
        assert density(DensityMap(), 0.7) == 0.7
        assert density(DensityMap("power", k=2), 0.5) == 0.25
        g = DensityMap("exponential", temperature=0.1)
        assert g(1.0) / g(0.0) == pytest.approx(math.exp(10), rel=1e-12)

    @pytest.mark.parametrize("g", [DensityMap(), DensityMap("power", k=3.0), DensityMap("exponential", temperature=0.02)])
    @given(st.floats(0, 1), st.floats(0, 1))
    def test_monotone_and_non_negative(self, g, f1, f2):
        lo, hi = sorted((f1, f2))
        assert 0 <= g(lo) <= g(hi)

    @pytest.mark.parametrize("g", [DensityMap(), DensityMap("power", k=3.0), DensityMap("exponential", temperature=0.5)])
    def test_log_matches_density(self, g):
        F = np.linspace(0.01, 1, 50)
        np.testing.assert_allclose(np.exp(g.log(F)), g(F), rtol=1e-12)

    def test_log_does_not_overflow(self):
        g = DensityMap("exponential", temperature=1e-4)
        assert np.isfinite(g.log(np.array([1.0])))[0]

    @pytest.mark.parametrize("kwargs", [dict(kind="softmax"), dict(kind="power", k=0), dict(kind="exponential", temperature=0)])
    def test_invalid(self, kwargs):
        with pytest.raises(ParameterError):
            DensityMap(**kwargs)


def test_evaluation_error_names_individual():
    class Fragile(FitnessEvaluator):
        def raw(self, X, episode_seeds=None):
            if np.any(X[:, 0] > 5):
                raise FloatingPointError("boom")
            return X[:, 0]

    X = np.zeros((6, 2))
    X[4, 0] = 9
    with pytest.raises(EvaluationError) as info:
        Fragile().evaluate_with_info(X)
    assert info.value.index == 4
