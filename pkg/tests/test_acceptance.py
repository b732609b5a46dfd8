"""Statistical acceptance criteria.

Each test prints one ``PASS``/``FAIL`` line (visible with ``pytest -s`` or in
the ``-v`` log) and then asserts the same condition, so a failing criterion
stays red. Runs use the default experiment configs with 100 seeds (20 for
two-peaks) and take roughly a quarter of an hour on one core.

    pytest -m acceptance -s
"""

import math

import numpy as np
import pytest
from scipy.stats import binomtest

from diffevo.cartpole import ARCHITECTURES, param_count
from diffevo.config import resolve
from diffevo.core import DensityMap, Population, ddim_step, estimate_noise, estimate_origin, evolve
from diffevo.harness import run_benchmark_suite, run_cartpole, run_two_peaks
from diffevo.landscape import BENCHMARKS, TwoPeaks, make_landscape
from diffevo.latent import identity_projection, latent_evolve
from diffevo.metrics import EntropyGrid, grid_entropy, select_elites
from diffevo.schedules import make_cosine, make_ddpm, make_linear

pytestmark = pytest.mark.acceptance

FITNESS_MIN = {"rosenbrock": 0.95, "beale": 0.95, "himmelblau": 0.95, "ackley": 0.95, "rastrigin": 0.70}
ENTROPY_REF = {"rosenbrock": 4.93, "beale": 4.21, "himmelblau": 2.58, "ackley": 2.49, "rastrigin": 3.29}
ENTROPY_BAND = 1.0
BASINS_MIN, BASIN_SEED_SHARE = 3, 0.80
DEEP_MIN = 450
SIGN_P = 0.01
PEAK_SHARE_MIN, PEAK_SEED_SHARE = 0.20, 0.90
SEEDS = 100


def report(capsys, criterion, ok, detail):
    with capsys.disabled():
        print(f"\n[criterion {criterion}] {'PASS' if ok else 'FAIL'}: {detail}")


# ------------------------------------------------------------ property gate

def _property_checks():
    rng = np.random.default_rng(0)
    checks = {}

    members, q = rng.normal(size=(32, 2)), rng.uniform(0.01, 1, 32)
    x, a = rng.normal(size=2), 0.4
    est = estimate_origin(x, Population(5, members, q), a)
    checks["convex hull of x0_hat"] = bool(
        np.all(est.x0_hat >= members.min(0) - 1e-12) and np.all(est.x0_hat <= members.max(0) + 1e-12))

    eps = estimate_noise(x, est.x0_hat, a)
    checks["reconstruction identity 1e-10"] = bool(
        np.allclose(math.sqrt(a) * est.x0_hat + math.sqrt(1 - a) * eps, x, rtol=0, atol=1e-10))

    step = ddim_step(x, est.x0_hat, eps, a, 0.0, np.zeros(2))
    checks["DDIM fixed point 1e-12"] = bool(np.allclose(step, x, rtol=0, atol=1e-12))

    scaled = estimate_origin(x, Population(5, members, 37.0 * q), a)
    checks["Q-scale invariance 1e-10"] = bool(np.allclose(scaled.x0_hat, est.x0_hat, rtol=0, atol=1e-10))

    ok = True
    for T in range(2, 201):
        for sched in (make_cosine(T), make_linear(T), make_ddpm(T)):
            try:
                sched.validate()
            except Exception:
                ok = False
    checks["schedule invariants T in [2, 200]"] = ok

    land, g, sched = TwoPeaks(), DensityMap(), make_cosine(8)
    a_pop, _ = evolve(land, g, sched, 64, 2, 3)
    b_pop, _ = latent_evolve(land, g, sched, 64, 2, rng_seed=3, projection=identity_projection(2))
    checks["latent d=D, E=I bit-equivalence"] = bool(np.array_equal(a_pop.members, b_pop.members))

    grid = EntropyGrid()
    checks["entropy 0 bits for one cell"] = grid_entropy(np.zeros((64, 2)), grid) == 0.0
    spread = np.array([[-3.95 + 0.1 * i, -3.95 + 0.1 * j] for i in range(8) for j in range(8)])
    checks["entropy 6 bits for 64 cells"] = abs(grid_entropy(spread, grid) - 6.0) < 1e-12
    pts = rng.uniform(-6, 6, (64, 2))
    checks["entropy within [0, log2 64]"] = 0.0 <= grid_entropy(pts, grid) <= 6.0 + 1e-12

    checks["parameter counts 58 and 17410"] = (
        param_count(ARCHITECTURES["small"]) == 58 and param_count(ARCHITECTURES["deep"]) == 17410)

    _, trace = evolve(make_landscape("beale"), g, make_cosine(7), 48, 2, 1)
    checks["N (T - 1) evaluations"] = trace.evaluations == 48 * 6
    return checks


@pytest.fixture(scope="module")
def property_gate():
    checks = _property_checks()
    return all(checks.values()), checks


def _require_gate(gate):
    if not gate[0]:
        pytest.fail("property suite failed; statistical criteria are not evaluated")


def test_criterion_6_property_suite(property_gate, capsys):
    ok, checks = property_gate
    failed = [k for k, v in checks.items() if not v]
    report(capsys, 6, ok, f"{len(checks) - len(failed)}/{len(checks)} property checks hold"
           + (f"; failing: {', '.join(failed)}" if failed else ""))
    assert ok, failed


# ---------------------------------------------------------------- benchmarks

@pytest.fixture(scope="module")
def benchmark_runs(tmp_path_factory, property_gate):
    _require_gate(property_gate)
    cfg = resolve("benchmark", overrides={"repeats": SEEDS, "evolve.project_origin": True,
                                          "output_dir": str(tmp_path_factory.mktemp("bench"))}, env={})
    manifest = run_benchmark_suite(cfg)
    assert not manifest.failed
    return cfg, manifest


def _mean(rows, key):
    return float(np.mean([r[key] for r in rows]))


def test_criterion_1_benchmark_fitness(benchmark_runs, capsys):
    _, manifest = benchmark_runs
    results = {name: _mean(manifest.rows(name), "mean_elite_fitness") for name in BENCHMARKS}
    origin = {name: _mean(manifest.rows(name), "origin_fitness") for name in BENCHMARKS}
    ok = all(results[n] >= FITNESS_MIN[n] for n in BENCHMARKS)
    detail = ", ".join(f"{n} {results[n]:.3f} (min {FITNESS_MIN[n]:.2f}, x0_hat {origin[n]:.3f})" for n in BENCHMARKS)
    report(capsys, 1, ok, detail)
    assert ok, results


def _himmelblau_basins(cfg):
    roots = np.array(BENCHMARKS["himmelblau"][2])
    land = make_landscape("himmelblau")
    counts = []
    for seed in cfg.seeds():
        pop, _ = evolve(land, cfg.density(), cfg.schedule(), cfg["evolve.population"], 2, seed,
                        keep_population=False)
        F = land.score(land.raw(pop.members))
        elites = pop.members[select_elites(pop, F, cfg["metrics.elites"])]
        nearest = np.argmin(np.linalg.norm(elites[:, None] - roots[None], axis=-1), axis=1)
        counts.append(len(np.unique(nearest)))
    return np.array(counts)


def test_criterion_2_benchmark_entropy(benchmark_runs, capsys):
    cfg, manifest = benchmark_runs
    results = {name: _mean(manifest.rows(name), "entropy_bits") for name in BENCHMARKS}
    in_band = {n: abs(results[n] - ENTROPY_REF[n]) <= ENTROPY_BAND for n in BENCHMARKS}
    band_ok = all(in_band.values())
    detail = ", ".join(f"{n} {results[n]:.2f} (ref {ENTROPY_REF[n]:.2f}, {'in' if in_band[n] else 'out of'} band)"
                       for n in BENCHMARKS)
    report(capsys, "2 band", band_ok, detail)
    basins = _himmelblau_basins(cfg)
    share = float(np.mean(basins >= BASINS_MIN))
    fallback_ok = share >= BASIN_SEED_SHARE
    report(capsys, "2 fallback", fallback_ok,
           f"Himmelblau seeds with >= {BASINS_MIN} occupied basins: {share:.0%} (need {BASIN_SEED_SHARE:.0%})")
    # the fallback only stands in for the band when every miss is a scale
    # calibration effect; Rastrigin and Ackley stay outside the band for
    # every probed scale radius, so the band result decides
    assert band_ok, results


# ----------------------------------------------------------------- cart-pole

def _cartpole(tmp_path_factory, preset):
    cfg = resolve("cartpole", overrides={"repeats": SEEDS, "cartpole.preset": preset, "trace.genotypes": "none",
                                         "output_dir": str(tmp_path_factory.mktemp(preset))}, env={})
    manifest = run_cartpole(cfg)
    assert not manifest.failed
    rows = sorted(manifest.rows(), key=lambda r: r["seed"])
    return np.array([r["seed"] for r in rows]), np.array([r["best_final"] for r in rows], dtype=float)


@pytest.fixture(scope="module")
def small_latent(tmp_path_factory, property_gate):
    _require_gate(property_gate)
    return _cartpole(tmp_path_factory, "small-latent")


@pytest.fixture(scope="module")
def small_ambient(tmp_path_factory, property_gate):
    _require_gate(property_gate)
    return _cartpole(tmp_path_factory, "small-ambient")


@pytest.fixture(scope="module")
def deep_latent(tmp_path_factory, property_gate):
    _require_gate(property_gate)
    return _cartpole(tmp_path_factory, "deep-latent")


def test_criterion_3_latent_small_solves(small_latent, capsys):
    _, best = small_latent
    med = float(np.median(best))
    ok = med == 500
    report(capsys, 3, ok, f"median best at generation 10 = {med:.0f} (need 500); {np.mean(best == 500):.0%} of seeds at 500")
    assert ok


def test_criterion_4_latent_deep(deep_latent, capsys):
    _, best = deep_latent
    med = float(np.median(best))
    ok = med >= DEEP_MIN
    report(capsys, 4, ok, f"median best at generation 10 = {med:.0f} (need >= {DEEP_MIN}); min {best.min():.0f}")
    assert ok


def test_criterion_5_ambient_below_latent(small_latent, small_ambient, capsys):
    seeds_l, latent = small_latent
    seeds_a, ambient = small_ambient
    assert np.array_equal(seeds_l, seeds_a)
    med_l, med_a = float(np.median(latent)), float(np.median(ambient))
    wins, losses = int(np.sum(latent > ambient)), int(np.sum(latent < ambient))
    p = binomtest(wins, wins + losses, 0.5, alternative="greater").pvalue if wins + losses else 1.0
    ok = med_a < med_l and p < SIGN_P
    report(capsys, 5, ok, f"median ambient {med_a:.0f} vs latent {med_l:.0f} (need strictly below); "
           f"sign test {wins} wins / {losses} losses / {len(latent) - wins - losses} ties, p = {p:.4g} (need < {SIGN_P})")
    assert ok


# ----------------------------------------------------------------- two peaks

def test_criterion_7_two_peaks_diversity(tmp_path_factory, property_gate, capsys):
    _require_gate(property_gate)
    cfg = resolve("two_peaks", overrides={"output_dir": str(tmp_path_factory.mktemp("peaks"))}, env={})
    assert cfg.repeats == 20 and cfg["evolve.population"] == 512 and cfg["schedule.sigma_scale"] == 0.1
    manifest = run_two_peaks(cfg)
    assert not manifest.failed
    rows = manifest.rows()
    both = np.array([min(r["share_pos"], r["share_neg"]) >= PEAK_SHARE_MIN for r in rows])
    share = float(both.mean())
    ok = share >= PEAK_SEED_SHARE
    report(capsys, 7, ok, f"seeds with both peaks >= {PEAK_SHARE_MIN:.0%} of elites: {share:.0%} "
           f"(need {PEAK_SEED_SHARE:.0%})")
    assert ok
