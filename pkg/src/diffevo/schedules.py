"""Diffusion (alpha) and denoising-noise (sigma) schedules.

A schedule holds ``alphas[0..T]`` and ``sigmas[1..T]``. Alpha decreases
strictly from ``alphas[0] ~ 1`` to ``alphas[T] ~ 0``; sigma is bounded by
``sqrt(1 - alphas[t-1])`` so the DDIM update never takes the square root of
a negative number.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import ParameterError, ScheduleError

KINDS = ("linear", "ddpm", "cosine")
DEFAULT_CLAMP_EPS = 1e-4
DEFAULT_DDPM_EPS = 1e-4


def ddim_sigma(alpha_t, alpha_prev, sigma_scale=1.0):
    """DDIM mutation scale for the step ``t -> t-1``.

    ``sigma_scale * sqrt((1 - alpha_prev) / (1 - alpha_t)) * sqrt(1 - alpha_t / alpha_prev)``,
    capped at ``sqrt(1 - alpha_prev)`` to absorb rounding.
    """
    if alpha_t >= 1.0:
        raise ScheduleError(f"alpha_t must be < 1, got {alpha_t}")
    if not 0.0 < alpha_t < alpha_prev <= 1.0:
        raise ScheduleError(f"need 0 < alpha_t < alpha_prev <= 1, got {alpha_t}, {alpha_prev}")
    if not 0.0 <= sigma_scale <= 1.0:
        raise ParameterError(f"sigma_scale must lie in [0, 1], got {sigma_scale}")
    sigma = sigma_scale * math.sqrt((1.0 - alpha_prev) / (1.0 - alpha_t)) * math.sqrt(1.0 - alpha_t / alpha_prev)
    return min(sigma, math.sqrt(1.0 - alpha_prev))


@dataclass(frozen=True)
class Schedule:
    """Precomputed, immutable alpha/sigma sequences.

    ``alphas`` has length ``T + 1`` (index t = 0..T); ``sigmas`` has length
    ``T`` and ``sigmas[t - 1]`` is sigma_t. Use :meth:`alpha` and :meth:`sigma`
    to index by step.
    """

    T: int
    alphas: np.ndarray
    sigmas: np.ndarray
    kind: str
    sigma_scale: float
    clamp_eps: float
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for arr in (self.alphas, self.sigmas):
            arr.flags.writeable = False
        self.validate()

    def alpha(self, t):
        return float(self.alphas[t])

    def sigma(self, t):
        if not 1 <= t <= self.T:
            raise IndexError(f"sigma index {t} outside [1, {self.T}]")
        return float(self.sigmas[t - 1])

    def validate(self):
        a, s = self.alphas, self.sigmas
        if self.T < 2 or a.shape != (self.T + 1,) or s.shape != (self.T,):
            raise ScheduleError("schedule arrays do not match T")
        if not np.all(np.diff(a) < 0):
            raise ScheduleError("alphas must be strictly decreasing")
        lo, hi = self.clamp_eps, 1.0 - self.clamp_eps
        if a.min() < lo or a.max() > hi:
            raise ScheduleError(f"alphas must lie in [{lo}, {hi}]")
        if np.any(s < 0) or np.any(s > np.sqrt(1.0 - a[:-1])):
            raise ScheduleError("sigma_t must lie in [0, sqrt(1 - alpha_{t-1})]")

    def to_config(self):
        return {"kind": self.kind, "T": self.T, "sigma_scale": self.sigma_scale, "clamp_eps": self.clamp_eps}


def _check(T, sigma_scale, clamp_eps):
    if isinstance(T, bool) or not isinstance(T, (int, np.integer)) or T < 2:
        raise ParameterError(f"T must be an integer >= 2, got {T!r}")
    if not 0.0 <= sigma_scale <= 1.0:
        raise ParameterError(f"sigma_scale must lie in [0, 1], got {sigma_scale}")
    if not 0.0 < clamp_eps < 0.5:
        raise ParameterError(f"clamp_eps must lie in (0, 0.5), got {clamp_eps}")


def _squash(raw, clamp_eps):
    # affine map of [0, 1] onto [eps, 1 - eps]; unlike clipping it keeps
    # neighbouring values distinct, so strict decrease survives any T
    return clamp_eps + (1.0 - 2.0 * clamp_eps) * raw


def _sigmas(alphas, sigma_scale):
    return np.array([ddim_sigma(alphas[t], alphas[t - 1], sigma_scale) for t in range(1, len(alphas))])


def _build(kind, T, raw, sigma_scale, clamp_eps, meta=None):
    alphas = _squash(np.asarray(raw, dtype=float), clamp_eps)
    return Schedule(int(T), alphas, _sigmas(alphas, sigma_scale), kind, float(sigma_scale), float(clamp_eps), meta or {})


def cosine_alphas(T):
    """Unclamped cosine alphas ``cos(pi t / T) / 2 + 1/2`` for t = 0..T."""
    t = np.arange(T + 1)
    return np.cos(np.pi * t / T) / 2.0 + 0.5


def linear_alphas(T):
    """Unclamped linear alphas ``1 - t / T`` for t = 0..T."""
    return 1.0 - np.arange(T + 1) / T


def make_cosine(T, sigma_scale=1.0, clamp_eps=DEFAULT_CLAMP_EPS):
    _check(T, sigma_scale, clamp_eps)
    return _build("cosine", T, cosine_alphas(T), sigma_scale, clamp_eps)


def make_linear(T, sigma_scale=1.0, clamp_eps=DEFAULT_CLAMP_EPS):
    _check(T, sigma_scale, clamp_eps)
    return _build("linear", T, linear_alphas(T), sigma_scale, clamp_eps)


def ddpm_coefficients(T, eps=DEFAULT_DDPM_EPS):
    """Solve for ``(beta0, gamma)`` in ``alpha_t = exp(-beta0 t - gamma t^2 / T)``.

    The two constraints are ``alpha_1 = 1 - eps`` and ``alpha_T = eps``; at
    t = 0 the formula is pinned to 1 and cannot carry a constraint.
    """
    system = np.array([[1.0, 1.0 / T], [float(T), float(T)]])
    rhs = -np.log([1.0 - eps, eps])
    if abs(np.linalg.det(system)) < 1e-12:
        raise ParameterError(f"ddpm constraints are degenerate for T={T}")
    beta0, gamma = np.linalg.solve(system, rhs)
    return float(beta0), float(gamma)


def make_ddpm(T, eps=DEFAULT_DDPM_EPS, sigma_scale=1.0, clamp_eps=None):
    """DDPM-like exponential-quadratic schedule.

    ``alphas[1] == 1 - eps`` and ``alphas[T] == eps``. Only ``alphas[0]`` (which
    the formula fixes at exactly 1) is clipped, to ``1 - clamp_eps``; the
    default ``clamp_eps = eps / 2`` keeps it strictly above ``alphas[1]``.
    """
    if not 0.0 < eps < 0.5:
        raise ParameterError(f"eps must lie in (0, 0.5), got {eps}")
    if clamp_eps is None:
        clamp_eps = eps / 2.0
    _check(T, sigma_scale, clamp_eps)
    if clamp_eps >= eps:
        raise ParameterError("clamp_eps must be smaller than eps for the ddpm schedule")
    beta0, gamma = ddpm_coefficients(T, eps)
    t = np.arange(T + 1)
    alphas = np.exp(-beta0 * t - gamma * t**2 / T)
    alphas[1], alphas[T] = 1.0 - eps, eps
    alphas = np.clip(alphas, clamp_eps, 1.0 - clamp_eps)
    meta = {"beta0": beta0, "gamma": gamma, "eps": eps}
    return Schedule(int(T), alphas, _sigmas(alphas, sigma_scale), "ddpm", float(sigma_scale), float(clamp_eps), meta)


def make_schedule(kind="cosine", T=25, sigma_scale=1.0, clamp_eps=None):
    """Build a schedule from config values (``schedule.*`` keys)."""
    if kind == "cosine":
        return make_cosine(T, sigma_scale, DEFAULT_CLAMP_EPS if clamp_eps is None else clamp_eps)
    if kind == "linear":
        return make_linear(T, sigma_scale, DEFAULT_CLAMP_EPS if clamp_eps is None else clamp_eps)
    if kind == "ddpm":
        return make_ddpm(T, DEFAULT_DDPM_EPS, sigma_scale, clamp_eps)
    raise ParameterError(f"unknown schedule kind {kind!r}; expected one of {KINDS}")
