"""Fitness evaluators: 2-D benchmarks, the two-peaks mixture, rescaling and density maps.

All benchmark functions accept arrays of shape ``(..., 2)`` and return raw
function values of shape ``(...)``.
"""

from dataclasses import dataclass
import math

import numpy as np

from .errors import EvaluationError, ParameterError


def _xy(p):
    p = np.asarray(p, dtype=float)
    if p.shape[-1] != 2:
        raise ParameterError(f"expected trailing dimension 2, got shape {p.shape}")
    return p[..., 0], p[..., 1]


def eval_rosenbrock(p):
    x, y = _xy(p)
    return 100.0 * (y - x**2) ** 2 + (1.0 - x) ** 2


def eval_beale(p):
    x, y = _xy(p)
    return (1.5 - x + x * y) ** 2 + (2.25 - x + x * y**2) ** 2 + (2.625 - x + x * y**3) ** 2


def eval_himmelblau(p):
    x, y = _xy(p)
    return (x**2 + y - 11.0) ** 2 + (x + y**2 - 7.0) ** 2


def eval_ackley(p):
    x, y = _xy(p)
    return (
        -20.0 * np.exp(-0.2 * np.sqrt((x**2 + y**2) / 2.0))
        - np.exp((np.cos(2 * np.pi * x) + np.cos(2 * np.pi * y)) / 2.0)
        + np.e
        + 20.0
    )


def eval_rastrigin(p, A=10.0):
    p = np.asarray(p, dtype=float)
    return A * p.shape[-1] + np.sum(p**2 - A * np.cos(2 * np.pi * p), axis=-1)


TWO_PEAKS_MEANS = np.array([[1.0, 1.0], [-1.0, -1.0]])
TWO_PEAKS_SIGMA = 0.1


def eval_two_peaks(p, sigma=TWO_PEAKS_SIGMA):
    """Equal mixture of two isotropic 2-D Gaussian densities at (1, 1) and (-1, -1)."""
    p = np.asarray(p, dtype=float)[..., None, :]
    sq = np.sum((p - TWO_PEAKS_MEANS) ** 2, axis=-1)
    return np.mean(np.exp(-sq / (2 * sigma**2)), axis=-1) / (2 * np.pi * sigma**2)


# name -> (function, default objective, global minima); Ackley and Rastrigin are
# maximised by default so their optima are the four box corners
BENCHMARKS = {
    "rosenbrock": (eval_rosenbrock, "minimize", [(1.0, 1.0)]),
    "beale": (eval_beale, "minimize", [(3.0, 0.5)]),
    "himmelblau": (eval_himmelblau, "minimize", [(3.0, 2.0), (-2.81, 3.13), (-3.78, -3.28), (3.58, -1.85)]),
    "ackley": (eval_ackley, "maximize", [(0.0, 0.0)]),
    "rastrigin": (eval_rastrigin, "maximize", [(0.0, 0.0)]),
}
BENCHMARK_NAMES = tuple(BENCHMARKS)


class FitnessEvaluator:
    """Maps parameter vectors to raw fitness.

    Subclasses implement :meth:`raw`. ``score`` turns raw values into the
    rescaled fitness that the density map consumes; the default is identity.
    Stochastic evaluators set ``stochastic = True`` and receive one episode
    seed per individual.
    """

    dim = 2
    objective = "maximize"
    stochastic = False

    def raw(self, X, episode_seeds=None):
        raise NotImplementedError

    def score(self, raw):
        return np.asarray(raw, dtype=float)

    def evaluate_with_info(self, X, episode_seeds=None):
        """Return ``(raw, info)`` for a population ``X`` of shape (N, dim)."""
        X = np.asarray(X, dtype=float)
        try:
            return np.asarray(self.raw(X, episode_seeds), dtype=float), {}
        except Exception:
            # re-run one by one to name the failing individual
            for i in range(len(X)):
                try:
                    self.raw(X[i : i + 1], None if episode_seeds is None else episode_seeds[i : i + 1])
                except Exception as exc:
                    raise EvaluationError(i, exc) from exc
            raise

    def __call__(self, x):
        return float(self.raw(np.asarray(x, dtype=float)[None, :])[0])


class FunctionLandscape(FitnessEvaluator):
    """Deterministic evaluator wrapping a vectorised 2-D function."""

    def __init__(self, fn, objective="minimize", name=None):
        self.fn = fn
        self.objective = objective
        self.name = name or fn.__name__

    def raw(self, X, episode_seeds=None):
        return self.fn(X)


class TwoPeaks(FunctionLandscape):
    """Two-peaks mixture; its raw density is already a valid fitness scale."""

    def __init__(self):
        super().__init__(eval_two_peaks, "maximize", "two_peaks")


def rescale(raw, f_star, scale, eps=1e-3):
    """Map raw values onto (0, 1]: ``eps / (eps + (raw - f_star)^2 / scale^2)``."""
    if not scale > 0:
        raise ParameterError(f"scale must be positive, got {scale}")
    resid = (np.asarray(raw, dtype=float) - f_star) / scale
    return eps / (eps + resid**2)


def _corner_target(fn, bound):
    corners = [(sx * bound, sy * bound) for sx in (-1.0, 1.0) for sy in (-1.0, 1.0)]
    vals = fn(np.array(corners))
    best = float(np.max(vals))
    return best, [c for c, v in zip(corners, vals) if v == best]


def target_value(benchmark, objective=None, domain_bound=4.0):
    """Target raw value ``f*`` and the locations attaining it.

    Minimisation targets are the closed-form global minima. For maximisation
    the target is the largest value over the corners of
    ``[-bound, bound]^2``, and those corners are returned as the optima.
    """
    fn, default_obj, known = BENCHMARKS[benchmark]
    objective = objective or default_obj
    if objective == "minimize":
        return 0.0, [tuple(o) for o in known]
    if objective != "maximize":
        raise ParameterError(f"objective must be minimize or maximize, got {objective!r}")
    return _corner_target(fn, domain_bound)


def estimate_scale(fn, optima, radius=0.5, samples=10_000, seed=0):
    """Mean over optima of the raw-value standard deviation in a ball around each."""
    rng = np.random.default_rng(seed)
    stds = []
    for center in optima:
        r = radius * np.sqrt(rng.random(samples))
        phi = rng.random(samples) * 2 * np.pi
        pts = np.asarray(center) + np.stack([r * np.cos(phi), r * np.sin(phi)], axis=-1)
        stds.append(np.std(fn(pts)))
    return float(np.mean(stds))


class RescaledLandscape(FitnessEvaluator):
    """A benchmark whose :meth:`score` is the rescaled fitness in (0, 1]."""

    def __init__(self, name, objective=None, eps=1e-3, scale_override=None, bound=4.0):
        if name not in BENCHMARKS:
            raise ParameterError(f"unknown benchmark {name!r}; expected one of {BENCHMARK_NAMES}")
        if not eps > 0:
            raise ParameterError(f"eps must be positive, got {eps}")
        fn, default_obj, _ = BENCHMARKS[name]
        self.name = name
        self.fn = fn
        self.objective = objective or default_obj
        if self.objective not in ("minimize", "maximize"):
            raise ParameterError(f"objective must be minimize or maximize, got {self.objective!r}")
        self.eps = float(eps)
        self.bound = float(bound)
        self.f_star, self.optima = target_value(name, self.objective, self.bound)
        if scale_override is not None:
            if not scale_override > 0:
                raise ParameterError(f"scale_override must be positive, got {scale_override}")
            self.scale = float(scale_override)
        else:
            self.scale = estimate_scale(fn, self.optima)

    def raw(self, X, episode_seeds=None):
        return self.fn(X)

    def score(self, raw):
        return rescale(raw, self.f_star, self.scale, self.eps)

    def fitness(self, X):
        """Rescaled fitness of points ``X``."""
        return self.score(self.fn(X))

    def __repr__(self):
        return f"RescaledLandscape({self.name!r}, {self.objective}, f*={self.f_star:.6g}, s={self.scale:.6g})"


@dataclass(frozen=True)
class DensityMap:
    """Monotone fitness-to-density map ``g``.

    ``kind`` is ``identity``, ``power`` (``F**k``) or ``exponential``
    (``exp(F / temperature)``).
    """

    kind: str = "identity"
    k: float = 1.0
    temperature: float = 1.0

    def __post_init__(self):
        if self.kind not in ("identity", "power", "exponential"):
            raise ParameterError(f"unknown density map {self.kind!r}")
        if self.kind == "power" and not self.k > 0:
            raise ParameterError("power exponent must be positive")
        if self.kind == "exponential" and not self.temperature > 0:
            raise ParameterError("temperature must be positive")

    def __call__(self, F):
        return density(self, F)

    def log(self, F):
        """``log g(F)``; evaluated without forming ``g`` so large exponents cannot overflow."""
        F = np.asarray(F, dtype=float)
        if self.kind == "exponential":
            return F / self.temperature
        with np.errstate(divide="ignore"):
            logf = np.log(np.maximum(F, 0.0))
        return logf if self.kind == "identity" else self.k * logf


def density(g, F):
    F = np.asarray(F, dtype=float)
    if g.kind == "identity":
        return np.maximum(F, 0.0)
    if g.kind == "power":
        return np.maximum(F, 0.0) ** g.k
    return np.exp(F / g.temperature)


def make_landscape(name, objective=None, eps=1e-3, scale_override=None, bound=4.0):
    if name == "two_peaks":
        return TwoPeaks()
    return RescaledLandscape(name, objective, eps, scale_override, bound)
