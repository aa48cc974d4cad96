"""Run configuration files (TOML).

Schema (every section optional except where noted)::

    seed = 0                  # feeds numpy.random.default_rng (PCG64)
    n_max = 100
    conv_tol = 1e-10
    out = "trace.csv"
    scenario = "nonsmooth"    # run a named preset instead of the fields below

    [space]                   # required without ``scenario``
    r = 2.0
    dim = 3

    [dictionary]
    kind = "standard_basis"   # | "explicit_list" (elements = [[...], ...]) | "random" (size = N)
    normalize = false

    [target]                  # exactly one of: coords | weights | random = "gaussian"
    coords = [0.5, 0.3, 0.2]

    [schedules.t]             # likewise [schedules.delta], [schedules.eta]
    kind = "constant"         # | "power" (exponent, scale) | "scripted" (values, start)
    value = 1.0

    [policy]
    utilization = 1.0
    tie_break = "lowest"

    [sweep]                   # sweep only: axis -> list of values
    "delta+eta" = [0.0, 0.1]  # '+' ties several parameters to one axis
"""
from __future__ import annotations

import copy
import itertools
import sys
from dataclasses import dataclass, field

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .dictionaries import Dictionary, convex_hull_element
from .engine import RealizationPolicy
from .errors import ConfigError
from .schedules import Constant, ScheduleSet, make_schedule
from .space import SpaceSpec

GENERATOR = "numpy.random.default_rng/PCG64 v1"
SWEEP_KEYS = ("t", "delta", "eta", "r", "dim", "utilization", "seed", "n_max")
MAX_SWEEP_CELLS = 10_000


@dataclass
class RunConfig:
    raw: dict
    seed: int = 0
    n_max: int = 100
    conv_tol: float = 1e-10
    out: str | None = None
    scenario: str | None = None
    space: SpaceSpec | None = None
    dictionary: Dictionary | None = None
    target: np.ndarray | None = None
    schedules: ScheduleSet | None = None
    policy: RealizationPolicy = field(default_factory=RealizationPolicy)
    sweep: dict = field(default_factory=dict)

    @property
    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)


def _get(d: dict, key: str, kind, where: str, default=None, required=False):
    if key not in d:
        if required:
            raise ConfigError(f"{where}{key}: missing")
        return default
    v = d[key]
    try:
        if kind is int:
            if isinstance(v, bool) or int(v) != v:
                raise ValueError
            return int(v)
        if kind is float:
            if isinstance(v, bool):
                raise ValueError
            return float(v)
        if kind is str:
            if not isinstance(v, str):
                raise ValueError
            return v
    except (TypeError, ValueError):
        raise ConfigError(f"{where}{key}: expected {kind.__name__}, got {v!r}") from None
    return v


def load_config(path, seed: int | None = None) -> RunConfig:
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config {path} is not valid TOML: {exc}") from exc
    if seed is not None:
        raw["seed"] = seed
    return parse_config(raw)


def parse_config(raw: dict) -> RunConfig:
    from .scenarios import PRESETS

    cfg = RunConfig(raw=copy.deepcopy(raw))
    cfg.seed = _get(raw, "seed", int, "", 0)
    cfg.n_max = _get(raw, "n_max", int, "", 100)
    if cfg.n_max < 1:
        raise ConfigError("n_max: must be at least 1")
    cfg.conv_tol = _get(raw, "conv_tol", float, "", 1e-10)
    if cfg.conv_tol < 0:
        raise ConfigError("conv_tol: must be nonnegative")
    cfg.out = _get(raw, "out", str, "")
    cfg.sweep = dict(raw.get("sweep", {}))
    for axis, values in cfg.sweep.items():
        for k in axis.split("+"):
            if k not in SWEEP_KEYS:
                raise ConfigError(f"sweep.{axis}: unknown parameter {k!r}; known {SWEEP_KEYS}")
        if not isinstance(values, list):
            raise ConfigError(f"sweep.{axis}: expected a list of values")

    cfg.scenario = _get(raw, "scenario", str, "")
    if cfg.scenario is not None:
        if cfg.scenario not in PRESETS:
            raise ConfigError(f"scenario: unknown preset {cfg.scenario!r}; known {sorted(PRESETS)}")
        return cfg

    sp = raw.get("space")
    if not isinstance(sp, dict):
        raise ConfigError("space: missing section")
    try:
        cfg.space = SpaceSpec(_get(sp, "r", float, "space.", required=True),
                              _get(sp, "dim", int, "space.", required=True))
    except ValueError as exc:
        raise ConfigError(f"space: {exc}") from None
    rng = cfg.rng
    cfg.dictionary = _dictionary(raw.get("dictionary", {}), cfg.space, rng)
    cfg.target = _target(raw.get("target"), cfg.space, cfg.dictionary, rng)
    cfg.schedules = _schedules(raw.get("schedules", {}), cfg.n_max)
    pol = raw.get("policy", {})
    util = _get(pol, "utilization", float, "policy.", 1.0)
    if not 0 <= util <= 1:
        raise ConfigError("policy.utilization: must lie in [0, 1]")
    tie = _get(pol, "tie_break", str, "policy.", "lowest")
    if tie not in ("lowest", "max"):
        raise ConfigError("policy.tie_break: must be 'lowest' or 'max'")
    cfg.policy = RealizationPolicy(utilization=util, tie_break=tie)
    return cfg


def _dictionary(d: dict, s: SpaceSpec, rng) -> Dictionary:
    kind = _get(d, "kind", str, "dictionary.", "standard_basis")
    try:
        if kind == "standard_basis":
            return Dictionary.standard_basis(s)
        if kind == "explicit_list":
            return Dictionary.from_elements(d["elements"], s, bool(d.get("normalize", False)))
        if kind == "random":
            size = _get(d, "size", int, "dictionary.", required=True)
            return Dictionary.from_elements(rng.standard_normal((size, s.dim)), s, normalize=True)
    except KeyError as exc:
        raise ConfigError(f"dictionary.{exc.args[0]}: missing") from None
    except ValueError as exc:
        raise ConfigError(f"dictionary: {exc}") from None
    raise ConfigError(f"dictionary.kind: unknown kind {kind!r}")


def _target(d, s: SpaceSpec, D: Dictionary, rng) -> np.ndarray:
    if not isinstance(d, dict):
        raise ConfigError("target: missing section")
    given = [k for k in ("coords", "weights", "random") if k in d]
    if len(given) != 1:
        raise ConfigError("target: give exactly one of coords, weights, random")
    try:
        if "coords" in d:
            f = np.asarray(d["coords"], dtype=float)
            if f.shape != (s.dim,):
                raise ConfigError(f"target.coords: expected {s.dim} values, got {f.size}")
        elif "weights" in d:
            f = convex_hull_element(d["weights"], D)
        else:
            if d["random"] != "gaussian":
                raise ConfigError("target.random: only 'gaussian' is supported")
            f = rng.standard_normal(s.dim)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"target: {exc}") from None
    if not np.all(np.isfinite(f)) or not np.any(f):
        raise ConfigError("target: must be finite and nonzero")
    return f


def _schedules(d: dict, n_max: int) -> ScheduleSet:
    names = {"t": "weakness", "delta": "perturbation", "eta": "error"}
    defaults = {"t": Constant(1.0), "delta": Constant(0.0), "eta": Constant(0.0)}
    parts = {}
    for key in ("t", "delta", "eta"):
        spec = d.get(key)
        if spec is None:
            parts[key] = defaults[key]
            continue
        if not isinstance(spec, dict) or "kind" not in spec:
            raise ConfigError(f"schedules.{key}: expected a table with a 'kind'")
        if spec["kind"] == "adaptive_rate":
            raise ConfigError(f"schedules.{key}: adaptive schedules are only available through presets")
        try:
            parts[key] = make_schedule(**spec)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"schedules.{key}: {exc}") from None
    eta0 = _get(d, "eta0", float, "schedules.")
    try:
        sched = ScheduleSet(parts["t"], parts["delta"], parts["eta"], eta0)
        sched.validate(n_max)
    except ValueError as exc:
        key = next((k for k, v in names.items() if v in str(exc)), "eta0")
        raise ConfigError(f"schedules.{key}: {exc}") from None
    return sched


def sweep_cells(cfg: RunConfig) -> list[dict]:
    """Parameter assignments in grid order (last axis varies fastest)."""
    axes = list(cfg.sweep.items())
    if not axes:
        return [{}]
    total = int(np.prod([len(v) for _, v in axes]))
    if total > MAX_SWEEP_CELLS:
        raise ConfigError(f"sweep: {total} cells exceed the limit of {MAX_SWEEP_CELLS}")
    cells = []
    for combo in itertools.product(*(v for _, v in axes)):
        cell = {}
        for (axis, _), value in zip(axes, combo):
            for k in axis.split("+"):
                cell[k] = value
        cells.append(cell)
    return cells


def apply_cell(raw: dict, cell: dict) -> dict:
    """Copy of ``raw`` with the sweep parameters of one cell substituted."""
    out = copy.deepcopy(raw)
    out.pop("sweep", None)
    for k, v in cell.items():
        if k in ("t", "delta", "eta"):
            out.setdefault("schedules", {})[k] = {"kind": "constant", "value": v}
        elif k in ("r", "dim"):
            out.setdefault("space", {})[k] = v
        elif k == "utilization":
            out.setdefault("policy", {})[k] = v
        else:
            out[k] = v
    return out
