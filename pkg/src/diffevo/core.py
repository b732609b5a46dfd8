"""Diffusion Evolution: denoise a population toward fitness-weighted origin estimates.

Each generation every individual ``x_t`` estimates its noise-free origin as a
kernel-weighted average of the current population,

    x0_hat = sum_j Q_j N(x_t; sqrt(a_t) x_j, 1 - a_t) x_j / Z,

derives the implied noise ``eps_hat = (x_t - sqrt(a_t) x0_hat) / sqrt(1 - a_t)``
and takes one DDIM step to ``t - 1``. Weights are computed in log space with
max-subtraction, so ``Z`` never has to be formed directly.
"""

from dataclasses import dataclass, field
import math
import time

import numpy as np

from . import kernels, rng as rngmod
from .errors import DegenerateWeightsError, ParameterError, ScheduleError
from .landscape import DensityMap

# relative slack allowed when 1 - alpha_prev - sigma^2 rounds below zero
_RADICAND_SLACK = 1e-12


@dataclass
class Population:
    """Members ``x_t^(i)`` at step ``t`` plus their cached densities ``Q_i``."""

    t: int
    members: np.ndarray
    fitness_cache: np.ndarray | None = None

    def __post_init__(self):
        self.members = np.atleast_2d(np.asarray(self.members, dtype=float))
        if self.members.shape[0] < 1 or self.members.shape[1] < 1:
            raise ParameterError("population needs N >= 1 and D >= 1")
        if not np.all(np.isfinite(self.members)):
            raise ParameterError("population members must be finite")
        if self.fitness_cache is not None:
            q = np.asarray(self.fitness_cache, dtype=float)
            if q.shape != (len(self.members),) or np.any(q < 0):
                raise ParameterError("fitness_cache must be non-negative with length N")
            self.fitness_cache = q

    @property
    def N(self):
        return self.members.shape[0]

    @property
    def D(self):
        return self.members.shape[1]


@dataclass(frozen=True)
class OriginEstimate:
    """Result of one origin estimate.

    ``log_normalizer`` is ``log Z`` including the isotropic Gaussian constant
    ``(2 pi (1 - alpha))^(-d/2)``, where ``d`` is the dimension the kernel is
    evaluated in; ``normalizer`` is its exponential and may underflow to 0
    in high dimension. ``effective_weight_entropy`` is the Shannon entropy
    (nats) of the normalised weights. ``degenerate`` marks the self-target
    fallback taken when every weight underflowed.
    """

    x0_hat: np.ndarray
    log_normalizer: float
    effective_weight_entropy: float
    degenerate: bool = False

    @property
    def normalizer(self):
        return math.exp(self.log_normalizer)


def init_population(N, D, rng, t=None):
    """Standard-normal population of shape (N, D).

    ``rng`` is a ``numpy.random.Generator`` or an integer master seed (the
    ``init`` substream is then used).
    """
    if N < 1 or D < 1:
        raise ParameterError(f"need N >= 1 and D >= 1, got N={N}, D={D}")
    if not isinstance(rng, np.random.Generator):
        rng = rngmod.stream(rng, "init")
    return Population(t=t if t is not None else 0, members=rng.standard_normal((N, D)))


def _check_alpha(alpha_t):
    if not 0.0 < alpha_t < 1.0:
        raise ParameterError(f"alpha_t must lie in (0, 1), got {alpha_t}")


def _log_q(fitness):
    with np.errstate(divide="ignore"):
        return np.log(np.asarray(fitness, dtype=float))


def origin_estimates(queries, keys, members, log_q, alpha_t, on_degenerate="self", fallback=None, backend=None):
    """Batched origin estimates for every query row.

    ``queries``/``keys`` are the coordinates the kernel is evaluated in (the
    members themselves, or their latent projections); ``members`` are the
    vectors actually averaged. Returns ``(X0, log_Z, entropy, degenerate)``.
    Degenerate rows take ``fallback[i]`` (the querying individual) as origin.
    """
    _check_alpha(alpha_t)
    W, log_norm, ent, deg = kernels.origin_weights(queries, keys, log_q, alpha_t, backend=backend)
    X0 = W @ members
    if np.any(deg):
        if on_degenerate == "raise":
            raise DegenerateWeightsError(f"{int(deg.sum())} individuals have all-zero kernel weights")
        if fallback is None:
            raise DegenerateWeightsError("degenerate weights and no fallback target given")
        X0[deg] = np.asarray(fallback)[deg]
    d = np.shape(queries)[1]
    log_z = log_norm - 0.5 * d * math.log(2 * math.pi * (1.0 - alpha_t))
    return X0, log_z, ent, deg


def estimate_origin(x_t, population, alpha_t, on_degenerate="self"):
    """Fitness-weighted posterior mean of the origin of ``x_t``."""
    if population.fitness_cache is None:
        raise ParameterError("population fitness_cache must be populated")
    x_t = np.asarray(x_t, dtype=float).reshape(1, -1)
    X0, log_z, ent, deg = origin_estimates(
        x_t, population.members, population.members, _log_q(population.fitness_cache),
        alpha_t, on_degenerate, fallback=x_t,
    )
    return OriginEstimate(X0[0], float(log_z[0]), float(ent[0]), bool(deg[0]))


def estimate_noise(x_t, x0_hat, alpha_t):
    """Noise implied by an origin estimate: ``(x_t - sqrt(a) x0_hat) / sqrt(1 - a)``."""
    _check_alpha(alpha_t)
    return (np.asarray(x_t, dtype=float) - math.sqrt(alpha_t) * np.asarray(x0_hat, dtype=float)) / math.sqrt(1.0 - alpha_t)


def ddim_step(x_t, x0_hat, eps_hat, alpha_prev, sigma_t, w):
    """``sqrt(a_prev) x0_hat + sqrt(1 - a_prev - sigma^2) eps_hat + sigma w``.

    ``x_t`` is accepted for signature symmetry; the update depends on it only
    through ``eps_hat``.
    """
    radicand = 1.0 - alpha_prev - sigma_t**2
    if radicand < 0:
        if radicand < -_RADICAND_SLACK:
            raise ScheduleError(f"1 - alpha_prev - sigma^2 = {radicand} < 0")
        radicand = 0.0
    return (
        math.sqrt(alpha_prev) * np.asarray(x0_hat, dtype=float)
        + math.sqrt(radicand) * np.asarray(eps_hat, dtype=float)
        + sigma_t * np.asarray(w, dtype=float)
    )


def neighbor_disc(x_t, alpha_t):
    """Centre ``x_t / sqrt(a)`` and radius ``sqrt((1 - a) / a)`` of an individual's neighbourhood."""
    _check_alpha(alpha_t)
    return np.asarray(x_t, dtype=float) / math.sqrt(alpha_t), math.sqrt((1.0 - alpha_t) / alpha_t)


@dataclass
class GenerationRecord:
    """One loop iteration at step ``t`` (population before the update)."""

    t: int
    alpha: float
    alpha_prev: float
    sigma: float
    raw_fitness: np.ndarray
    fitness: np.ndarray
    population: np.ndarray | None = None
    origins: np.ndarray | None = None
    latent: np.ndarray | None = None
    degenerate: int = 0
    streams: dict = field(default_factory=dict)
    info: dict = field(default_factory=dict)


@dataclass
class EvolutionTrace:
    seed: int
    N: int
    D: int
    schedule: dict
    generations: list = field(default_factory=list)
    evaluations: int = 0
    wall_ms: float = 0.0
    final_origins: np.ndarray | None = None
    final_raw_fitness: np.ndarray | None = None
    final_fitness: np.ndarray | None = None
    final_info: dict = field(default_factory=dict)
    projection: object = None

    def best_curve(self):
        return np.array([g.raw_fitness.max() for g in self.generations])

    def median_curve(self):
        return np.array([np.median(g.raw_fitness) for g in self.generations])


def _merge_info(parts):
    if not parts or not parts[0]:
        return {}
    return {k: np.concatenate([p[k] for p in parts]) for k in parts[0]}


def evaluate_population(evaluator, X, seed, t, executor=None, chunks=1):
    """Raw and rescaled fitness of ``X`` evaluated at step ``t``.

    Stochastic evaluators get one episode seed per individual from the
    ``episodes[t][i]`` substream. With an ``executor`` the population is split
    into ``chunks`` contiguous blocks; results are reassembled in index order.
    """
    N = len(X)
    seeds = rngmod.episode_seeds(seed, t, N) if evaluator.stochastic else None
    if executor is None or chunks <= 1:
        raw, info = evaluator.evaluate_with_info(X, seeds)
    else:
        bounds = np.linspace(0, N, chunks + 1).astype(int)
        jobs = [
            executor.submit(evaluator.evaluate_with_info, X[a:b], None if seeds is None else seeds[a:b])
            for a, b in zip(bounds[:-1], bounds[1:]) if b > a
        ]
        parts = [j.result() for j in jobs]
        raw = np.concatenate([p[0] for p in parts])
        info = _merge_info([p[1] for p in parts])
    return raw, evaluator.score(raw), info


def run_diffusion(evaluator, g, schedule, N, D, seed, encode=None, keep_population=True,
                  project_origin=False, executor=None, chunks=1, backend=None, callback=None):
    """Shared generation loop for the ambient and latent variants.

    ``encode`` maps an (N, D) population to the coordinates the kernel is
    evaluated in; ``None`` means the population itself.
    """
    if N < 1 or D < 1:
        raise ParameterError(f"need N >= 1 and D >= 1, got N={N}, D={D}")
    if getattr(evaluator, "dim", D) not in (D, None):
        raise ParameterError(f"evaluator expects dimension {evaluator.dim}, got D={D}")
    g = g or DensityMap()
    start = time.perf_counter()
    T = schedule.T
    trace = EvolutionTrace(seed=int(seed), N=N, D=D, schedule=schedule.to_config())
    X = init_population(N, D, rngmod.stream(seed, "init"), t=T).members

    for t in range(T, 1, -1):
        a_t, a_prev, sigma = schedule.alpha(t), schedule.alpha(t - 1), schedule.sigma(t)
        raw, F, info = evaluate_population(evaluator, X, seed, t, executor, chunks)
        trace.evaluations += N
        log_q = g.log(F)
        Z = X if encode is None else encode(X)
        X0, _, _, deg = origin_estimates(Z, Z, X, log_q, a_t, fallback=X, backend=backend)
        eps_hat = estimate_noise(X, X0, a_t)
        noise = rngmod.stream(seed, "mutation", t).standard_normal((N, D))
        X_next = ddim_step(X, X0, eps_hat, a_prev, sigma, noise)
        trace.generations.append(GenerationRecord(
            t=t, alpha=a_t, alpha_prev=a_prev, sigma=sigma, raw_fitness=raw, fitness=F,
            population=X if keep_population else None,
            origins=X0 if keep_population else None,
            latent=None if encode is None else Z,
            degenerate=int(deg.sum()),
            streams={"mutation": [rngmod.STREAMS["mutation"], t], "episodes": [rngmod.STREAMS["episodes"], t]},
            info=info,
        ))
        if callback is not None:
            callback(trace.generations[-1])
        X = X_next

    final = Population(t=1, members=X)
    if project_origin:
        raw, F, info = evaluate_population(evaluator, X, seed, 1, executor, chunks)
        log_q = g.log(F)
        Z = X if encode is None else encode(X)
        X0, _, _, _ = origin_estimates(Z, Z, X, log_q, schedule.alpha(1), fallback=X, backend=backend)
        final.fitness_cache = np.exp(log_q)
        trace.final_raw_fitness, trace.final_fitness, trace.final_info = raw, F, info
        trace.final_origins = X0
    trace.wall_ms = (time.perf_counter() - start) * 1e3
    return final, trace


def evolve(evaluator, g, schedule, N, D, rng_seed, **kwargs):
    """Run Diffusion Evolution for ``schedule.T - 1`` generations.

    Returns the population at ``t = 1`` and the per-generation trace. Exactly
    ``N * (T - 1)`` fitness evaluations are made inside the loop; with
    ``project_origin=True`` the final population is evaluated once more and
    its origin estimates stored in ``trace.final_origins``.
    """
    return run_diffusion(evaluator, g, schedule, N, D, rng_seed, **kwargs)
