"""Diffusion Evolution: evolutionary optimization by iterative denoising.

Quick start::

    from diffevo import make_cosine, make_landscape, evolve, DensityMap

    land = make_landscape("himmelblau")
    pop, trace = evolve(land, DensityMap(), make_cosine(25), N=512, D=2, rng_seed=0)
"""

__version__ = "0.1.0"

from .cartpole import CartPoleEvaluator, MlpPolicy, cartpole_evaluator, param_count, rollout
from .core import (
    EvolutionTrace, OriginEstimate, Population, ddim_step, estimate_noise, estimate_origin, evolve,
    init_population, neighbor_disc, origin_estimates,
)
from .errors import (
    ConfigError, DegenerateWeightsError, DiffEvoError, EvaluationError, ParameterError, ScheduleError,
    StateError,
)
from .kernels import BACKEND
from .landscape import DensityMap, FitnessEvaluator, RescaledLandscape, TwoPeaks, make_landscape, rescale
from .latent import Projection, latent_estimate_origin, latent_evolve, make_projection, project
from .metrics import EntropyGrid, grid_entropy, select_elites, summarize_run
from .schedules import Schedule, ddim_sigma, make_cosine, make_ddpm, make_linear, make_schedule

__all__ = [
    "BACKEND", "CartPoleEvaluator", "ConfigError", "DegenerateWeightsError", "DensityMap", "DiffEvoError",
    "EntropyGrid", "EvaluationError", "EvolutionTrace", "FitnessEvaluator", "MlpPolicy", "OriginEstimate",
    "ParameterError", "Population", "Projection", "RescaledLandscape", "Schedule", "ScheduleError",
    "StateError", "TwoPeaks", "cartpole_evaluator", "ddim_sigma", "ddim_step", "estimate_noise",
    "estimate_origin", "evolve", "grid_entropy", "init_population", "latent_estimate_origin",
    "latent_evolve", "make_cosine", "make_ddpm", "make_landscape", "make_linear", "make_projection",
    "make_schedule", "neighbor_disc", "origin_estimates", "param_count", "project", "rescale", "rollout",
    "select_elites", "summarize_run",
]
