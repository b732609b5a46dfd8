"""Cart-pole balancing with flat-vector MLP policies.

Dynamics are the classic Euler-integrated cart-pole (gravity 9.8, cart 1.0 kg,
pole 0.1 kg, half-length 0.5 m, force +-10 N, tau 0.02 s). An episode ends
when ``|theta| > 12 deg``, ``|x| > 2.4`` or after ``max_steps`` steps; reward
is the number of steps taken.

Policy parameters are laid out layer by layer as the weight matrix
(row-major, ``(n_out, n_in)``) followed by the bias vector.
"""

from dataclasses import dataclass
import json
import math
from pathlib import Path
import struct

import numpy as np

from . import kernels
from ._fallback import (
    FORCE_MAG, GRAVITY, HALF_LENGTH, MASSPOLE, POLEMASS_LENGTH, TAU, THETA_LIMIT, TOTAL_MASS, X_LIMIT,
)
from .errors import ParameterError, StateError
from .landscape import FitnessEvaluator

MAX_STEPS = 500
INIT_HALF_WIDTH = 0.05
ARCHITECTURES = {"small": (4, 8, 2), "deep": (4, 128, 128, 2)}
LEFT, RIGHT = 0, 1


def param_count(layer_sizes):
    """Total weights and biases: ``sum(n_i * n_{i+1} + n_{i+1})``."""
    sizes = list(layer_sizes)
    return sum(a * b + b for a, b in zip(sizes[:-1], sizes[1:]))


def resolve_arch(arch):
    if isinstance(arch, str):
        if arch not in ARCHITECTURES:
            raise ParameterError(f"unknown architecture {arch!r}; expected one of {sorted(ARCHITECTURES)}")
        return ARCHITECTURES[arch]
    sizes = tuple(int(n) for n in arch)
    if len(sizes) < 2 or sizes[0] != 4 or sizes[-1] != 2 or min(sizes) < 1:
        raise ParameterError(f"layer sizes must look like [4, ..., 2], got {sizes}")
    return sizes


@dataclass(frozen=True)
class CartPoleState:
    x: float = 0.0
    x_dot: float = 0.0
    theta: float = 0.0
    theta_dot: float = 0.0
    step_count: int = 0
    max_steps: int = MAX_STEPS

    @property
    def alive(self):
        return abs(self.theta) <= THETA_LIMIT and abs(self.x) <= X_LIMIT and self.step_count <= self.max_steps

    @property
    def done(self):
        return not self.alive or self.step_count >= self.max_steps

    def observation(self):
        return np.array([self.x, self.x_dot, self.theta, self.theta_dot])


def physics_step(state, action, force=None):
    """Advance one Euler step. ``force`` overrides the action's push (test hook)."""
    if state.done:
        raise StateError("cannot step a terminated cart-pole state")
    if force is None:
        force = FORCE_MAG if action == RIGHT else -FORCE_MAG
    th, th_dot = state.theta, state.theta_dot
    c, s = math.cos(th), math.sin(th)
    temp = (force + POLEMASS_LENGTH * th_dot * th_dot * s) / TOTAL_MASS
    th_acc = (GRAVITY * s - c * temp) / (HALF_LENGTH * (4.0 / 3.0 - MASSPOLE * c * c / TOTAL_MASS))
    x_acc = temp - POLEMASS_LENGTH * th_acc * c / TOTAL_MASS
    return CartPoleState(
        state.x + TAU * state.x_dot,
        state.x_dot + TAU * x_acc,
        th + TAU * th_dot,
        th_dot + TAU * th_acc,
        state.step_count + 1,
        state.max_steps,
    )


class MlpPolicy:
    """ReLU feed-forward policy decoded from a flat parameter vector."""

    def __init__(self, layer_sizes, params):
        self.layer_sizes = resolve_arch(layer_sizes)
        self.params = np.asarray(params, dtype=float).ravel()
        n = param_count(self.layer_sizes)
        if self.params.size != n:
            raise ParameterError(f"architecture {self.layer_sizes} needs {n} parameters, got {self.params.size}")
        self.layers = []
        off = 0
        for n_in, n_out in zip(self.layer_sizes[:-1], self.layer_sizes[1:]):
            w = self.params[off : off + n_in * n_out].reshape(n_out, n_in)
            off += n_in * n_out
            self.layers.append((w, self.params[off : off + n_out]))
            off += n_out

    @classmethod
    def zeros(cls, layer_sizes):
        return cls(layer_sizes, np.zeros(param_count(resolve_arch(layer_sizes))))

    def outputs(self, observation):
        h = np.asarray(observation, dtype=float)
        for k, (w, b) in enumerate(self.layers):
            h = w @ h + b
            if k < len(self.layers) - 1:
                h = np.maximum(h, 0.0)
        return h

    def __call__(self, observation):
        return policy_forward(self, observation)


def policy_forward(policy, observation):
    """Index of the larger output neuron; ties go to ``LEFT``."""
    out = policy.outputs(observation)
    return RIGHT if out[1] > out[0] else LEFT


def initial_state(episode_seed, max_steps=MAX_STEPS):
    rng = np.random.default_rng(int(episode_seed))
    return CartPoleState(*rng.uniform(-INIT_HALF_WIDTH, INIT_HALF_WIDTH, 4), step_count=0, max_steps=max_steps)


def rollout(policy, episode_seed, max_steps=MAX_STEPS, return_state=False):
    """Steps survived (1..max_steps) with a pure-Python loop; the reference for the batched kernels."""
    state = initial_state(episode_seed, max_steps)
    while not state.done:
        state = physics_step(state, policy_forward(policy, state.observation()))
    return (state.step_count, state) if return_state else state.step_count


def _episode_inits(episode_seeds, episodes, max_steps):
    init = np.empty((len(episode_seeds), episodes, 4))
    for i, seed in enumerate(episode_seeds):
        for k in range(episodes):
            s = int(seed) if episodes == 1 else np.random.SeedSequence([int(seed), k]).generate_state(1)[0]
            init[i, k] = initial_state(s, max_steps).observation()
    return init


class CartPoleEvaluator(FitnessEvaluator):
    """Mean reward over ``episodes_per_eval`` seeded episodes per individual.

    ``score`` divides by ``max_steps`` so the density map sees values in
    (0, 1]. ``evaluate_with_info`` also returns each episode's terminal state.
    """

    objective = "maximize"
    stochastic = True

    def __init__(self, arch="small", episodes_per_eval=1, max_steps=MAX_STEPS, backend=None):
        if episodes_per_eval < 1 or max_steps < 1:
            raise ParameterError("episodes_per_eval and max_steps must be positive")
        self.layer_sizes = resolve_arch(arch)
        self.dim = param_count(self.layer_sizes)
        self.episodes = int(episodes_per_eval)
        self.max_steps = int(max_steps)
        self.backend = backend

    def evaluate_with_info(self, X, episode_seeds=None):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.dim:
            raise ParameterError(f"expected {self.dim} parameters per individual, got {X.shape[1]}")
        if episode_seeds is None:
            episode_seeds = np.zeros(len(X), dtype=np.uint64)
        init = _episode_inits(episode_seeds, self.episodes, self.max_steps)
        steps, terminal = kernels.rollout_batch(X, self.layer_sizes, init, self.max_steps, backend=self.backend)
        return steps.mean(axis=1).astype(float), {"terminal": terminal[:, 0, :], "steps": steps[:, 0]}

    def raw(self, X, episode_seeds=None):
        return self.evaluate_with_info(X, episode_seeds)[0]

    def score(self, raw):
        return np.asarray(raw, dtype=float) / self.max_steps


def cartpole_evaluator(arch="small", episodes_per_eval=1, max_steps=MAX_STEPS, backend=None):
    return CartPoleEvaluator(arch, episodes_per_eval, max_steps, backend)


def save_genotypes(path, params, arch):
    """Write ``params`` as little-endian float64 with a uint64 length header, plus a JSON sidecar."""
    path = Path(path)
    flat = np.ascontiguousarray(params, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<Q", flat.size))
        fh.write(flat.tobytes())
    sizes = resolve_arch(arch)
    meta = {"layer_sizes": list(sizes), "param_count": param_count(sizes), "shape": list(flat.shape),
            "dtype": "float64-le", "layout": "per layer: weights (n_out, n_in) row-major, then bias"}
    path.with_suffix(path.suffix + ".json").write_text(json.dumps(meta, indent=2))
    return path


def load_genotypes(path):
    """Inverse of :func:`save_genotypes`; returns ``(params, layer_sizes)``."""
    path = Path(path)
    raw = path.read_bytes()
    (count,) = struct.unpack("<Q", raw[:8])
    flat = np.frombuffer(raw[8:], dtype="<f8")
    if flat.size != count:
        raise ParameterError(f"header says {count} values, file holds {flat.size}")
    meta = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    return flat.reshape(meta["shape"]).astype(float), tuple(meta["layer_sizes"])
