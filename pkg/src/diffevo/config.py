"""Experiment configuration: ``key.path = value`` files, presets and validation.

A config file holds one assignment per line. Values are JSON literals
(``25``, ``0.1``, ``true``, ``null``, ``"cosine"``, ``["beale", "ackley"]``);
a bare word that is not valid JSON is read as a string. Blank lines and
lines starting with ``#`` are ignored.

Resolution order, later wins: experiment defaults, cart-pole preset, config
file, ``--set`` overrides. Every key is checked before any run starts.
"""

from dataclasses import dataclass, field
import json
import os
from pathlib import Path

from .errors import ConfigError, DiffEvoError
from .landscape import BENCHMARK_NAMES, DensityMap
from .schedules import make_schedule

EXPERIMENTS = ("benchmark", "two_peaks", "cartpole")
OUTPUT_ENV = "DIFFEVO_OUT"
DEFAULT_OUTPUT = "diffevo-out"

# key -> (accepted python types, allow null)
_SCHEMA = {
    "repeats": ((int,), False),
    "workers": ((int,), False),
    "output_dir": ((str,), True),
    "schedule.kind": ((str,), False),
    "schedule.T": ((int,), False),
    "schedule.sigma_scale": ((int, float), False),
    "schedule.clamp_eps": ((int, float), True),
    "landscape.benchmarks": ((list,), False),
    "landscape.eps": ((int, float), False),
    "landscape.scale_override": ((int, float, dict), True),
    "landscape.domain_bound": ((int, float), False),
    "density.kind": ((str,), False),
    "density.k": ((int, float), False),
    "density.temperature": ((int, float), False),
    "evolve.population": ((int,), False),
    "evolve.dim": ((int,), True),
    "evolve.seed": ((int,), False),
    "evolve.project_origin": ((bool,), False),
    "metrics.elites": ((int,), False),
    "metrics.cells_per_side": ((int,), False),
    "latent.enabled": ((bool,), False),
    "latent.dim": ((int,), False),
    "latent.norm_preserving": ((bool,), False),
    "cartpole.preset": ((str,), True),
    "cartpole.arch": ((str, list), False),
    "cartpole.episodes_per_eval": ((int,), False),
    "cartpole.max_steps": ((int,), False),
    "trace.populations": ((bool,), False),
    "trace.genotypes": ((str,), False),
}

_COMMON = {
    "repeats": 100,
    "workers": 1,
    "output_dir": None,
    "schedule.kind": "cosine",
    "schedule.T": 25,
    "schedule.sigma_scale": 1.0,
    "schedule.clamp_eps": None,
    "landscape.benchmarks": list(BENCHMARK_NAMES),
    "landscape.eps": 1e-3,
    "landscape.scale_override": None,
    "landscape.domain_bound": 4.0,
    "density.kind": "identity",
    "density.k": 1.0,
    "density.temperature": 1.0,
    "evolve.population": 512,
    "evolve.dim": None,
    "evolve.seed": 0,
    "evolve.project_origin": False,
    "metrics.elites": 64,
    "metrics.cells_per_side": 80,
    "latent.enabled": False,
    "latent.dim": 2,
    "latent.norm_preserving": False,
    "cartpole.preset": None,
    "cartpole.arch": "small",
    "cartpole.episodes_per_eval": 1,
    "cartpole.max_steps": 500,
    "trace.populations": False,
    "trace.genotypes": "best",
}

_EXPERIMENT_DEFAULTS = {
    "benchmark": {},
    "two_peaks": {
        "repeats": 20,
        "schedule.kind": "linear",
        "schedule.sigma_scale": 0.1,
        "trace.populations": True,
    },
    "cartpole": {
        "schedule.T": 10,
        "latent.enabled": True,
        "density.kind": "exponential",
        "density.temperature": 0.02,
        "evolve.project_origin": True,
        "cartpole.preset": "small-latent",
    },
}

CARTPOLE_PRESETS = {
    "small-latent": {"cartpole.arch": "small", "latent.enabled": True},
    "deep-latent": {"cartpole.arch": "deep", "latent.enabled": True},
    "small-ambient": {"cartpole.arch": "small", "latent.enabled": False},
}

_GENOTYPE_MODES = ("none", "best", "all")


def parse_value(text):
    """JSON literal, or the stripped text itself when it is not valid JSON."""
    text = text.strip()
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def parse_assignment(line):
    """Split ``key = value`` (or ``key=value``) into ``(key, value)``."""
    if "=" not in line:
        raise ConfigError(f"expected 'key = value', got {line!r}")
    key, _, value = line.partition("=")
    key = key.strip()
    if not key:
        raise ConfigError(f"missing key in {line!r}")
    return key, parse_value(value)


def loads(text):
    """Parse config text into an ordered ``{key: value}`` dict."""
    out = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            key, value = parse_assignment(line)
        except ConfigError as exc:
            raise ConfigError(f"line {n}: {exc}") from None
        out[key] = value
    return out


def load_file(path):
    try:
        return loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None


def dumps(values):
    """Inverse of :func:`loads` for a flat dict of JSON-serialisable values."""
    return "".join(f"{k} = {json.dumps(v)}\n" for k, v in values.items())


@dataclass
class ExperimentConfig:
    """Fully resolved settings for one experiment.

    ``values`` maps every schema key to its value; attribute shortcuts cover
    the fields the harness reads most.
    """

    experiment: str
    values: dict = field(default_factory=dict)

    @property
    def repeats(self):
        return self.values["repeats"]

    @property
    def master_seed(self):
        return self.values["evolve.seed"]

    @property
    def workers(self):
        return self.values["workers"]

    @property
    def output_dir(self):
        return Path(self.values["output_dir"])

    def __getitem__(self, key):
        return self.values[key]

    def seeds(self):
        """Per-repeat seeds ``master_seed, master_seed + 1, ...``."""
        return [self.master_seed + r for r in range(self.repeats)]

    def schedule(self):
        v = self.values
        return make_schedule(v["schedule.kind"], v["schedule.T"], v["schedule.sigma_scale"], v["schedule.clamp_eps"])

    def density(self):
        v = self.values
        return DensityMap(v["density.kind"], float(v["density.k"]), float(v["density.temperature"]))

    def to_dict(self):
        return {"experiment": self.experiment, **self.values}

    def to_text(self):
        return dumps(self.to_dict())

    @classmethod
    def from_dict(cls, values):
        values = dict(values)
        experiment = values.pop("experiment", None)
        if experiment is None:
            raise ConfigError("config has no 'experiment' key")
        return resolve(experiment, overrides=values, env={})

    @classmethod
    def from_text(cls, text):
        return cls.from_dict(loads(text))


def _normalise_experiment(name):
    name = str(name).replace("-", "_")
    if name not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {name!r}; expected one of {', '.join(EXPERIMENTS)}")
    return name


def _check_type(key, value):
    if key not in _SCHEMA:
        raise ConfigError(f"unknown config key {key!r}")
    types, nullable = _SCHEMA[key]
    if value is None:
        if not nullable:
            raise ConfigError(f"{key} may not be null")
        return value
    # bool is an int subclass; keep the two apart
    if isinstance(value, bool) and bool not in types:
        raise ConfigError(f"{key} expects {'/'.join(t.__name__ for t in types)}, got a boolean")
    if not isinstance(value, types):
        raise ConfigError(f"{key} expects {'/'.join(t.__name__ for t in types)}, got {value!r}")
    if float in types and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    return value


def resolve(experiment, config_file=None, overrides=None, env=None):
    """Merge defaults, preset, file and overrides into a validated config.

    Args:
        experiment: ``benchmark``, ``two_peaks`` (or ``two-peaks``) or ``cartpole``.
        config_file: optional path to a ``key = value`` file.
        overrides: dict of keys that take precedence over the file.
        env: mapping consulted for ``DIFFEVO_OUT``; defaults to ``os.environ``.

    Raises:
        ConfigError: on unknown keys, wrong types or out-of-range values.
    """
    experiment = _normalise_experiment(experiment)
    env = os.environ if env is None else env
    user = {}
    if config_file is not None:
        user.update(load_file(config_file))
    user.update(overrides or {})
    if "experiment" in user:
        if _normalise_experiment(user.pop("experiment")) != experiment:
            raise ConfigError("config file names a different experiment than the command")

    values = dict(_COMMON)
    values.update(_EXPERIMENT_DEFAULTS[experiment])
    preset = user.get("cartpole.preset", values["cartpole.preset"])
    if experiment == "cartpole" and preset is not None:
        if preset not in CARTPOLE_PRESETS:
            raise ConfigError(f"unknown cart-pole preset {preset!r}; expected one of {sorted(CARTPOLE_PRESETS)}")
        values.update(CARTPOLE_PRESETS[preset])
    for key, value in user.items():
        values[key] = _check_type(key, value)
    if values["output_dir"] is None:
        values["output_dir"] = env.get(OUTPUT_ENV) or DEFAULT_OUTPUT
    cfg = ExperimentConfig(experiment, values)
    validate(cfg)
    return cfg


def validate(cfg):
    """Check every value against its module's domain; raises :class:`ConfigError`."""
    v = cfg.values
    for key in v:
        _check_type(key, v[key])
    if v["repeats"] < 1:
        raise ConfigError("repeats must be >= 1")
    if v["workers"] < 1:
        raise ConfigError("workers must be >= 1")
    if v["evolve.seed"] < 0:
        raise ConfigError("evolve.seed must be non-negative")
    if v["evolve.population"] < 1:
        raise ConfigError("evolve.population must be >= 1")
    if not v["density.k"] > 0 or not v["density.temperature"] > 0:
        raise ConfigError("density.k and density.temperature must be positive")
    try:
        cfg.schedule()
        cfg.density()
    except DiffEvoError as exc:
        raise ConfigError(str(exc)) from None
    unknown = [b for b in v["landscape.benchmarks"] if b not in BENCHMARK_NAMES]
    if unknown or not v["landscape.benchmarks"]:
        raise ConfigError(f"landscape.benchmarks must be a non-empty subset of {list(BENCHMARK_NAMES)}")
    if not v["landscape.eps"] > 0 or not v["landscape.domain_bound"] > 0:
        raise ConfigError("landscape.eps and landscape.domain_bound must be positive")
    so = v["landscape.scale_override"]
    if isinstance(so, dict):
        if set(so) - set(BENCHMARK_NAMES) or not all(isinstance(s, (int, float)) and s > 0 for s in so.values()):
            raise ConfigError("landscape.scale_override dict must map benchmark names to positive numbers")
    elif so is not None and not so > 0:
        raise ConfigError("landscape.scale_override must be positive")
    if not 1 <= v["metrics.elites"] <= v["evolve.population"]:
        raise ConfigError("metrics.elites must lie in [1, evolve.population]")
    if v["metrics.cells_per_side"] < 1:
        raise ConfigError("metrics.cells_per_side must be >= 1")
    if v["cartpole.episodes_per_eval"] < 1 or v["cartpole.max_steps"] < 1:
        raise ConfigError("cartpole.episodes_per_eval and cartpole.max_steps must be >= 1")
    if v["trace.genotypes"] not in _GENOTYPE_MODES:
        raise ConfigError(f"trace.genotypes must be one of {_GENOTYPE_MODES}")
    D = experiment_dim(cfg)
    if v["evolve.dim"] is not None and v["evolve.dim"] != D:
        raise ConfigError(f"evolve.dim={v['evolve.dim']} does not match the {cfg.experiment} dimension {D}")
    if v["latent.enabled"] and not 1 <= v["latent.dim"] <= D:
        raise ConfigError(f"latent.dim must lie in [1, {D}]")
    return cfg


def experiment_dim(cfg):
    if cfg.experiment != "cartpole":
        return 2
    from .cartpole import param_count, resolve_arch

    try:
        return param_count(resolve_arch(cfg.values["cartpole.arch"]))
    except DiffEvoError as exc:
        raise ConfigError(str(exc)) from None
