"""Elite selection, grid entropy and per-run summaries."""

from dataclasses import dataclass, field, asdict
import math

import numpy as np

from .errors import ParameterError

SUMMARY_COLUMNS = ("benchmark", "seed", "mean_elite_fitness", "entropy_bits", "evaluations", "wall_ms")


@dataclass
class EntropyGrid:
    """Square occupancy grid over ``[-bounds, bounds]^2``.

    Points outside the box are counted in the nearest edge cell, so the
    counts always sum to the number of points added.
    """

    bounds: float = 4.0
    cells_per_side: int = 80
    counts: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if not self.bounds > 0 or self.cells_per_side < 1:
            raise ParameterError("grid needs positive bounds and at least one cell")
        if self.counts is None:
            self.counts = np.zeros((self.cells_per_side, self.cells_per_side), dtype=np.int64)

    def cell_index(self, points):
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        frac = (points + self.bounds) / (2.0 * self.bounds)
        idx = np.floor(frac * self.cells_per_side).astype(np.int64)
        return np.clip(idx, 0, self.cells_per_side - 1)

    def add(self, points):
        idx = self.cell_index(points)
        np.add.at(self.counts, (idx[:, 0], idx[:, 1]), 1)
        return self


def select_elites(population, fitness, k):
    """Indices of the ``k`` fittest members, best first; ties go to the lower index.

    ``population`` may be a :class:`~diffevo.core.Population` or an array; only
    its length is used.
    """
    fitness = np.asarray(fitness, dtype=float)
    n = len(getattr(population, "members", population))
    if len(fitness) != n:
        raise ParameterError("fitness length does not match population")
    if not 1 <= k <= n:
        raise ParameterError(f"k must lie in [1, {n}], got {k}")
    return np.argsort(-fitness, kind="stable")[:k]


def grid_entropy(points, grid=None):
    """Shannon entropy in bits of the occupancy distribution of ``points``."""
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(points) == 0:
        raise ParameterError("grid_entropy needs at least one point")
    grid = EntropyGrid() if grid is None else EntropyGrid(grid.bounds, grid.cells_per_side)
    counts = grid.add(points).counts
    p = counts[counts > 0] / len(points)
    return float(max(0.0, -np.sum(p * np.log2(p))))


@dataclass
class RunSummary:
    benchmark: str
    seed: int
    mean_elite_fitness: float
    entropy_bits: float
    evaluations: int
    wall_ms: float

    def row(self):
        return [getattr(self, c) for c in SUMMARY_COLUMNS]

    def as_dict(self):
        return asdict(self)


def summarize_population(name, seed, members, fitness, evaluations, wall_ms, k=64, grid=None):
    idx = select_elites(members, fitness, k)
    return RunSummary(
        benchmark=name, seed=int(seed),
        mean_elite_fitness=float(np.mean(np.asarray(fitness)[idx])),
        entropy_bits=grid_entropy(np.asarray(members)[idx, :2], grid),
        evaluations=int(evaluations), wall_ms=float(wall_ms),
    )


def summarize_run(trace, landscape, population, k=64, grid=None, name=None):
    """Elite fitness and entropy of the final population of a finished run.

    The final population is scored with ``landscape`` (rescaled fitness);
    this scoring is not counted in ``evaluations``, which is the in-loop
    count ``N * (T - 1)``.
    """
    members = getattr(population, "members", population)
    fitness = landscape.score(landscape.raw(members))
    return summarize_population(
        name or getattr(landscape, "name", "landscape"), trace.seed, members, fitness,
        trace.evaluations, trace.wall_ms, k, grid,
    )


def aggregate(summaries):
    """Mean and standard deviation of fitness and entropy across runs."""
    fit = np.array([s.mean_elite_fitness for s in summaries])
    ent = np.array([s.entropy_bits for s in summaries])
    return {
        "runs": len(summaries),
        "mean_fitness": float(fit.mean()), "std_fitness": float(fit.std()),
        "mean_entropy": float(ent.mean()), "std_entropy": float(ent.std()),
    }


def max_entropy(n_points, cells=6400):
    return math.log2(min(n_points, cells))
