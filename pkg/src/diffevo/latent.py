"""Latent Space Diffusion Evolution.

Kernel distances are measured between random projections ``z = E x`` while
the weighted averages and DDIM updates stay in the full parameter space.
"""

from dataclasses import dataclass
import math

import numpy as np

from . import rng as rngmod
from .core import OriginEstimate, _log_q, origin_estimates, run_diffusion
from .errors import ParameterError


@dataclass(frozen=True)
class Projection:
    """Frozen ``d x D`` random matrix.

    Entries are N(0, 1/D) by default; ``norm_preserving=True`` draws them
    from N(0, 1/d) instead, which keeps ``|Ex|`` close to ``|x|``.
    """

    matrix: np.ndarray
    seed: int | None = None
    norm_preserving: bool = False

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] > m.shape[1]:
            raise ParameterError(f"projection must be d x D with d <= D, got {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ParameterError("projection entries must be finite")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @property
    def d(self):
        return self.matrix.shape[0]

    @property
    def D(self):
        return self.matrix.shape[1]

    def __call__(self, X):
        return project(self, X)


def make_projection(D, d, rng, norm_preserving=False):
    """Draw the projection once; ``rng`` is a Generator or an integer master seed."""
    if not 1 <= d <= D:
        raise ParameterError(f"need 1 <= d <= D, got d={d}, D={D}")
    seed = None
    if not isinstance(rng, np.random.Generator):
        seed = int(rng)
        rng = rngmod.stream(seed, "projection")
    var = 1.0 / d if norm_preserving else 1.0 / D
    return Projection(rng.normal(0.0, math.sqrt(var), size=(d, D)), seed, norm_preserving)


def identity_projection(D):
    """``E = I``; latent evolution then reproduces ambient evolution exactly."""
    return Projection(np.eye(D))


def project(E, x):
    """``z = E x`` for a vector (D,) or a population (N, D)."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != E.D:
        raise ParameterError(f"expected trailing dimension {E.D}, got {x.shape}")
    return x @ E.matrix.T


def latent_estimate_origin(x_t, z_t, members, latent_members, fitness, alpha_t, on_degenerate="self"):
    """Origin estimate of ``x_t`` with kernel weights from latent coordinates.

    ``members`` (N, D) are averaged; ``latent_members`` (N, d) and ``z_t`` (d,)
    only set the weights.
    """
    x_t = np.asarray(x_t, dtype=float).reshape(1, -1)
    X0, log_z, ent, deg = origin_estimates(
        np.asarray(z_t, dtype=float).reshape(1, -1), latent_members, members, _log_q(fitness),
        alpha_t, on_degenerate, fallback=x_t,
    )
    return OriginEstimate(X0[0], float(log_z[0]), float(ent[0]), bool(deg[0]))


def latent_evolve(evaluator, g, schedule, N, D, d=2, rng_seed=0, projection=None,
                  norm_preserving=False, **kwargs):
    """Latent-space Diffusion Evolution.

    The projection is drawn once from the ``projection`` substream (or passed
    in, e.g. :func:`identity_projection` for testing) and every generation's
    population is re-encoded with it. Returns ``(population, trace)`` like
    :func:`diffevo.core.evolve`; ``trace.projection`` holds the matrix.
    """
    E = projection if projection is not None else make_projection(D, d, rng_seed, norm_preserving)
    if E.D != D:
        raise ParameterError(f"projection expects D={E.D}, got D={D}")
    final, trace = run_diffusion(evaluator, g, schedule, N, D, rng_seed, encode=E, **kwargs)
    trace.projection = E
    return final, trace
