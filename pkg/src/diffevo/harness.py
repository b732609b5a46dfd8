"""Seeded batch runner for the benchmark, two-peaks and cart-pole experiments.

Every run is identified by ``(label, seed)`` and writes only below the
configured output directory::

    <out>/config.txt                     resolved config (reloadable with --config)
    <out>/manifest.json                  config snapshot, seeds, timestamps, rows
    <out>/summary.csv                    one row per run, fixed column order
    <out>/traces/<label>/seed-<s>.jsonl  header record + one record per generation
    <out>/genotypes/<label>/seed-<s>.f64 cart-pole genotypes (+ .json sidecar)

Runs execute in a process pool when ``workers > 1``. Workers only write
their own trace files; the manifest and summary are written by the parent.
"""

from concurrent.futures import ProcessPoolExecutor
import csv
from dataclasses import dataclass, field
from datetime import datetime, timezone
import json
import math
from pathlib import Path

import numpy as np
from scipy.cluster.vq import kmeans2

from . import __version__, kernels, rng as rngmod
from .cartpole import CartPoleEvaluator, save_genotypes
from .config import ExperimentConfig
from .core import evolve, neighbor_disc
from .errors import DiffEvoError
from .landscape import TWO_PEAKS_MEANS, TwoPeaks, make_landscape
from .latent import latent_evolve, make_projection
from .metrics import EntropyGrid, RunSummary, SUMMARY_COLUMNS, aggregate, select_elites, summarize_population, summarize_run

# diagonal through both two-peaks optima; the 1-D track is the projection on it
_PEAK_AXIS = np.array([1.0, 1.0]) / math.sqrt(2.0)
TWO_PEAKS_CENTER_TOL = 0.3


def _now():
    return datetime.now(timezone.utc).isoformat()


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def safe_path(root, *parts):
    """``root / parts`` after checking the result stays inside ``root``."""
    root = Path(root).resolve()
    path = root.joinpath(*parts).resolve()
    if path != root and root not in path.parents:
        raise DiffEvoError(f"refusing to write outside the output directory: {path}")
    return path


class TraceWriter:
    """Line-delimited JSON trace: a header record followed by data records."""

    def __init__(self, path, header):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "w")
        self.write({"record": "header", **header})

    def write(self, record):
        self._fh.write(json.dumps(_jsonable(record)) + "\n")

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_trace(path):
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


def _trace_header(cfg, label, seed, columns, schedule):
    return {
        "experiment": cfg.experiment, "label": label, "seed": seed, "version": __version__,
        "backend": kernels.BACKEND, "schedule": schedule.to_config(), "columns": columns,
    }


def _gen_common(rec):
    return {"record": "generation", "t": rec.t, "alpha": rec.alpha, "alpha_prev": rec.alpha_prev,
            "sigma": rec.sigma, "degenerate": rec.degenerate, "streams": rec.streams}


@dataclass
class RunManifest:
    """Everything needed to rerun an experiment: config, seeds, timings and per-run rows."""

    experiment: str
    config: dict
    version: str = __version__
    backend: str = kernels.BACKEND
    started: str = ""
    finished: str = ""
    runs: list = field(default_factory=list)

    @property
    def failed(self):
        return [r for r in self.runs if r.get("status") != "ok"]

    @property
    def seeds(self):
        return sorted({r["seed"] for r in self.runs})

    def rows(self, label=None):
        return [r for r in self.runs if r.get("status") == "ok" and (label is None or r["label"] == label)]

    def as_dict(self):
        return _jsonable({
            "experiment": self.experiment, "version": self.version, "backend": self.backend,
            "started": self.started, "finished": self.finished, "config": self.config,
            "seeds": self.seeds, "runs": self.runs,
        })

    def write(self, root):
        path = safe_path(root, "manifest.json")
        path.write_text(json.dumps(self.as_dict(), indent=1))
        return path

    @classmethod
    def load(cls, path):
        data = json.loads(Path(path).read_text())
        return cls(data["experiment"], data["config"], data["version"], data["backend"],
                   data["started"], data["finished"], data["runs"])


def _run_job(job):
    """Worker entry point: ``(runner, values, label, seed, root)`` -> row dict."""
    runner, values, label, seed, root = job
    values = dict(values)
    cfg = ExperimentConfig(values.pop("experiment"), values)
    started = _now()
    try:
        row = _RUNNERS[runner](cfg, label, seed, Path(root))
        row.update(status="ok", error=None)
    except Exception as exc:  # a failed run is recorded and the batch continues
        row = {"status": "failed", "error": type(exc).__name__, "message": str(exc)}
    row.update(label=label, seed=seed, started=started, finished=_now())
    return row


def _execute(cfg, runner, labels):
    root = cfg.output_dir
    root.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(cfg.experiment, cfg.to_dict(), started=_now())
    safe_path(root, "config.txt").write_text(cfg.to_text())
    jobs = [(runner, cfg.to_dict(), label, seed, str(root)) for label in labels for seed in cfg.seeds()]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            futures = [pool.submit(_run_job, job) for job in jobs]
            rows = []
            for job, fut in zip(jobs, futures):
                try:
                    rows.append(fut.result())
                except Exception as exc:
                    rows.append({"label": job[2], "seed": job[3], "status": "failed",
                                 "error": type(exc).__name__, "message": str(exc)})
    else:
        rows = [_run_job(job) for job in jobs]
    manifest.runs = rows
    manifest.finished = _now()
    manifest.write(root)
    _write_summary(root, manifest, _SUMMARY_COLUMNS[runner])
    return manifest


def _write_summary(root, manifest, columns):
    columns = list(columns) + ["status", "error"]
    with open(safe_path(root, "summary.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in manifest.runs:
            writer.writerow([_csv_cell(row.get(c)) for c in columns])


def _csv_cell(v):
    if v is None:
        return ""
    if isinstance(v, (list, tuple, dict)):
        return json.dumps(_jsonable(v))
    return v


def _trace_path(root, label, seed):
    return safe_path(root, "traces", label, f"seed-{seed:05d}.jsonl")


# ---------------------------------------------------------------- benchmarks

def _landscape_for(cfg, name):
    so = cfg["landscape.scale_override"]
    if isinstance(so, dict):
        so = so.get(name)
    return make_landscape(name, eps=cfg["landscape.eps"], scale_override=so, bound=cfg["landscape.domain_bound"])


def _grid(cfg):
    return EntropyGrid(cfg["landscape.domain_bound"], cfg["metrics.cells_per_side"])


def _benchmark_run(cfg, name, seed, root):
    land = _landscape_for(cfg, name)
    sched = cfg.schedule()
    keep = cfg["trace.populations"]
    po = cfg["evolve.project_origin"]
    final, trace = evolve(land, cfg.density(), sched, cfg["evolve.population"], 2, seed,
                          keep_population=keep, project_origin=po)
    summary = summarize_run(trace, land, final, cfg["metrics.elites"], _grid(cfg), name=name)
    row = summary.as_dict()
    columns = {"t": "step index", "alpha": "1", "sigma": "1", "best_raw": "raw f", "mean_fitness": "F in (0,1]",
               "median_fitness": "F in (0,1]", "population": "coordinates (N,2)", "origins": "coordinates (N,2)"}
    with TraceWriter(_trace_path(root, name, seed), _trace_header(cfg, name, seed, columns, sched)) as tw:
        tw.write({"record": "landscape", "f_star": land.f_star, "scale": land.scale, "objective": land.objective})
        for rec in trace.generations:
            best = rec.raw_fitness.min() if land.objective == "minimize" else rec.raw_fitness.max()
            out = {**_gen_common(rec), "best_raw": best, "mean_fitness": rec.fitness.mean(),
                   "median_fitness": np.median(rec.fitness)}
            if keep:
                out.update(population=rec.population, origins=rec.origins)
            tw.write(out)
        tw.write({"record": "final", "population": final.members if keep else None, **row})
        if po:
            X0 = trace.final_origins
            osum = summarize_population(name, seed, X0, land.score(land.raw(X0)), trace.evaluations,
                                        trace.wall_ms, cfg["metrics.elites"], _grid(cfg))
            row.update(origin_fitness=osum.mean_elite_fitness, origin_entropy=osum.entropy_bits)
            tw.write({"record": "final_origins", "origins": X0 if keep else None,
                      "mean_elite_fitness": osum.mean_elite_fitness, "entropy_bits": osum.entropy_bits})
    row["trace"] = str(_trace_path(root, name, seed).relative_to(Path(root).resolve()))
    return row


def run_benchmark_suite(cfg):
    """Evolve every configured benchmark once per seed and summarise the final elites."""
    return _execute(cfg, "benchmark", list(cfg["landscape.benchmarks"]))


# ----------------------------------------------------------------- two peaks

def peak_shares(points):
    """Fraction of ``points`` nearer to each two-peaks optimum (in ``TWO_PEAKS_MEANS`` order)."""
    points = np.asarray(points, dtype=float)
    d = np.linalg.norm(points[:, None, :] - TWO_PEAKS_MEANS[None], axis=-1)
    nearest = np.argmin(d, axis=1)
    return np.bincount(nearest, minlength=len(TWO_PEAKS_MEANS)) / len(points)


def nearest_peak_distance(points):
    points = np.asarray(points, dtype=float)
    return np.linalg.norm(points[:, None, :] - TWO_PEAKS_MEANS[None], axis=-1).min(axis=1)


def two_cluster_centers(points, seed):
    """k-means (k=2) centres, ordered like ``TWO_PEAKS_MEANS`` by nearest match."""
    gen = rngmod.stream(seed, "visual", 1)
    try:
        centers, _ = kmeans2(np.asarray(points, dtype=float), 2, minit="++", rng=gen)
    except TypeError:  # scipy < 1.15 names the argument ``seed``
        centers, _ = kmeans2(np.asarray(points, dtype=float), 2, minit="++", seed=gen)
    if np.linalg.norm(centers[0] - TWO_PEAKS_MEANS[0]) > np.linalg.norm(centers[1] - TWO_PEAKS_MEANS[0]):
        centers = centers[::-1]
    return centers


def _two_peaks_run(cfg, label, seed, root):
    land = TwoPeaks()
    sched = cfg.schedule()
    final, trace = evolve(land, cfg.density(), sched, cfg["evolve.population"], 2, seed,
                          keep_population=True, project_origin=cfg["evolve.project_origin"])
    columns = {"population": "coordinates (N,2)", "origins": "x0_hat (N,2)",
               "population_1d": "projection on the (1,1) diagonal", "origins_1d": "projection on the (1,1) diagonal",
               "disc_radius": "neighbour radius sqrt((1-a)/a)", "origin_peak_distance": "mean distance to nearer peak"}
    k = cfg["metrics.elites"]
    with TraceWriter(_trace_path(root, label, seed), _trace_header(cfg, label, seed, columns, sched)) as tw:
        dist = []
        for rec in trace.generations:
            _, radius = neighbor_disc(rec.population[0], rec.alpha)
            dist.append(float(nearest_peak_distance(rec.origins).mean()))
            tw.write({**_gen_common(rec), "population": rec.population, "origins": rec.origins,
                      "population_1d": rec.population @ _PEAK_AXIS, "origins_1d": rec.origins @ _PEAK_AXIS,
                      "disc_radius": radius, "disc_centers": rec.population / math.sqrt(rec.alpha),
                      "origin_peak_distance": dist[-1], "raw_fitness": rec.raw_fitness})
        members = final.members
        raw = land.raw(members)
        elites = members[select_elites(members, raw, k)]
        shares = peak_shares(elites)
        centers = two_cluster_centers(members, seed)
        center_err = np.linalg.norm(centers - TWO_PEAKS_MEANS, axis=1)
        summary = summarize_population(label, seed, members, raw, trace.evaluations, trace.wall_ms, k, _grid(cfg))
        row = {**summary.as_dict(), "share_pos": shares[0], "share_neg": shares[1],
               "center_pos": centers[0], "center_neg": centers[1],
               "clusters_ok": bool(np.all(center_err <= TWO_PEAKS_CENTER_TOL)),
               "origin_distance_monotone": bool(np.all(np.diff(dist) <= 1e-12))}
        tw.write({"record": "final", "population": members, "raw_fitness": raw, **row})
    row["trace"] = str(_trace_path(root, label, seed).relative_to(Path(root).resolve()))
    return row


def run_two_peaks(cfg):
    """Two-peaks runs with full population and origin tracks per generation."""
    return _execute(cfg, "two_peaks", ["two_peaks"])


# ------------------------------------------------------------------ cart-pole

def cartpole_label(cfg):
    arch = cfg["cartpole.arch"]
    arch = arch if isinstance(arch, str) else "x".join(str(n) for n in arch)
    return f"{arch}-{'latent' if cfg['latent.enabled'] else 'ambient'}"


def _cartpole_run(cfg, label, seed, root):
    ev = CartPoleEvaluator(cfg["cartpole.arch"], cfg["cartpole.episodes_per_eval"], cfg["cartpole.max_steps"])
    sched = cfg.schedule()
    N, D = cfg["evolve.population"], ev.dim
    kw = dict(keep_population=False, project_origin=True)
    if cfg["latent.enabled"]:
        final, trace = latent_evolve(ev, cfg.density(), sched, N, D, cfg["latent.dim"], seed,
                                     norm_preserving=cfg["latent.norm_preserving"], **kw)
    else:
        final, trace = evolve(ev, cfg.density(), sched, N, D, seed, **kw)
    # one shared 2-D view so final populations of different runs are comparable
    view = make_projection(D, 2, rngmod.stream(cfg.master_seed, "visual"))
    columns = {"steps": "survival steps per individual", "terminal": "(x, theta) at the last step",
               "best": "steps", "median": "steps", "q25": "steps", "q75": "steps", "latent": "z = E x (N,d)"}
    raws = [rec.raw_fitness for rec in trace.generations] + [trace.final_raw_fitness]
    best = [float(r.max()) for r in raws]
    median = [float(np.median(r)) for r in raws]
    with TraceWriter(_trace_path(root, label, seed), _trace_header(cfg, label, seed, columns, sched)) as tw:
        for gen, rec in enumerate(trace.generations, 1):
            tw.write({**_gen_common(rec), "generation": gen, "best": best[gen - 1], "median": median[gen - 1],
                      "q25": np.quantile(rec.raw_fitness, 0.25), "q75": np.quantile(rec.raw_fitness, 0.75),
                      "steps": rec.info["steps"], "terminal": rec.info["terminal"][:, [0, 2]],
                      "latent": rec.latent})
        fr = trace.final_raw_fitness
        tw.write({"record": "final", "t": 1, "generation": len(raws), "best": best[-1], "median": median[-1],
                  "q25": np.quantile(fr, 0.25), "q75": np.quantile(fr, 0.75),
                  "steps": trace.final_info["steps"], "terminal": trace.final_info["terminal"][:, [0, 2]],
                  "latent": None if trace.projection is None else trace.projection(final.members),
                  "view": view(final.members)})
    mode = cfg["trace.genotypes"]
    if mode != "none":
        params = final.members if mode == "all" else final.members[int(np.argmax(fr))]
        path = safe_path(root, "genotypes", label, f"seed-{seed:05d}.f64")
        path.parent.mkdir(parents=True, exist_ok=True)
        save_genotypes(path, params, ev.layer_sizes)
    return {"benchmark": label, "mean_elite_fitness": float(np.mean(np.sort(fr)[::-1][:cfg["metrics.elites"]])),
            "best_final": best[-1], "median_final": median[-1], "solved": best[-1] >= ev.max_steps,
            "best_curve": best, "median_curve": median, "evaluations": trace.evaluations,
            "wall_ms": trace.wall_ms, "dim": D,
            "trace": str(_trace_path(root, label, seed).relative_to(Path(root).resolve()))}


def run_cartpole(cfg):
    """Latent or ambient cart-pole neuroevolution; curves, terminal states and genotypes."""
    return _execute(cfg, "cartpole", [cartpole_label(cfg)])


_RUNNERS = {"benchmark": _benchmark_run, "two_peaks": _two_peaks_run, "cartpole": _cartpole_run}
_SUMMARY_COLUMNS = {
    "benchmark": SUMMARY_COLUMNS + ("origin_fitness", "origin_entropy", "trace"),
    "two_peaks": SUMMARY_COLUMNS + ("share_pos", "share_neg", "center_pos", "center_neg", "clusters_ok",
                                    "origin_distance_monotone", "trace"),
    "cartpole": ("benchmark", "seed", "best_final", "median_final", "solved", "mean_elite_fitness",
                 "evaluations", "wall_ms", "best_curve", "median_curve", "trace"),
}


def run_experiment(cfg):
    return {"benchmark": run_benchmark_suite, "two_peaks": run_two_peaks, "cartpole": run_cartpole}[cfg.experiment](cfg)


# ------------------------------------------------------------------ reporting

def benchmark_table(manifest):
    """Per-benchmark mean entropy with mean fitness in brackets, e.g. ``4.93 (1.00)``."""
    lines = [f"{'benchmark':<12} {'entropy (fitness)':>18} {'runs':>5}"]
    for label in dict.fromkeys(r["label"] for r in manifest.runs):
        rows = manifest.rows(label)
        if not rows:
            lines.append(f"{label:<12} {'failed':>18} {0:>5}")
            continue
        agg = aggregate([_summary_of(r) for r in rows])
        lines.append(f"{label:<12} {agg['mean_entropy']:>11.2f} ({agg['mean_fitness']:.2f}) {agg['runs']:>5}")
    return "\n".join(lines)


def _summary_of(row):
    return RunSummary(*(row[c] for c in SUMMARY_COLUMNS))


def cartpole_table(manifest):
    rows = manifest.rows()
    if not rows:
        return "no successful runs"
    best = np.array([r["best_curve"] for r in rows])
    med = np.array([r["median_curve"] for r in rows])
    lines = [f"{'generation':>10} {'median best':>12} {'median of medians':>18}"]
    for g in range(best.shape[1]):
        lines.append(f"{g + 1:>10} {np.median(best[:, g]):>12.1f} {np.median(med[:, g]):>18.1f}")
    lines.append(f"solved (best = max steps) in {sum(r['solved'] for r in rows)}/{len(rows)} runs")
    return "\n".join(lines)


def two_peaks_table(manifest):
    rows = manifest.rows()
    if not rows:
        return "no successful runs"
    both = sum(min(r["share_pos"], r["share_neg"]) >= 0.2 for r in rows)
    clusters = sum(r["clusters_ok"] for r in rows)
    ent = np.mean([r["entropy_bits"] for r in rows])
    return (f"runs with both peaks holding >= 20% of elites: {both}/{len(rows)}\n"
            f"runs with k-means centres within {TWO_PEAKS_CENTER_TOL} of both peaks: {clusters}/{len(rows)}\n"
            f"mean elite entropy: {ent:.2f} bits")


def format_table(manifest):
    return {"benchmark": benchmark_table, "two_peaks": two_peaks_table,
            "cartpole": cartpole_table}[manifest.experiment](manifest)
