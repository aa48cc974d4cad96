"""Weakness, perturbation and error sequences and their finite-prefix analysis.

Indexing follows the algorithm: t_n and eta_n are defined for n >= 1, delta_n
for n >= 0 (delta_{n-1} is the slack of the functional used at step n).

Divergence of a series and little-o relations cannot be decided from finite
data.  The checkers below report finite-prefix proxies together with the
numbers they were decided on.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .space import SpaceSpec

ROLES = ("t", "delta", "eta")


class Schedule:
    """A deterministic map n -> value; subclasses implement ``value``."""

    kind = "abstract"
    adaptive = False

    def __call__(self, n: int, state=None) -> float:
        return float(self.value(n, state))

    def value(self, n: int, state=None) -> float:
        raise NotImplementedError

    def sup(self) -> float:
        """Least upper bound over all n (used for the declared eta_0)."""
        raise NotImplementedError

    def to_record(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Constant(Schedule):
    c: float
    kind = "constant"

    def value(self, n, state=None):
        return self.c

    def sup(self):
        return self.c

    def to_record(self):
        return {"kind": self.kind, "value": self.c}


@dataclass(frozen=True)
class Power(Schedule):
    """scale * n**exponent for n >= 1; n = 0 reuses the n = 1 value."""

    exponent: float
    scale: float = 1.0
    kind = "power"

    def value(self, n, state=None):
        return self.scale * max(n, 1) ** self.exponent

    def sup(self):
        return self.scale if self.exponent <= 0 else math.inf

    def to_record(self):
        return {"kind": self.kind, "exponent": self.exponent, "scale": self.scale}


@dataclass(frozen=True)
class Scripted(Schedule):
    """Explicit values for n = start, start+1, ...; the last value repeats."""

    values: tuple
    start: int = 1
    kind = "scripted"

    def __post_init__(self):
        if len(self.values) == 0:
            raise ValueError("scripted schedule needs at least one value")
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    def value(self, n, state=None):
        i = n - self.start
        if i < 0:
            raise IndexError(f"scripted schedule starts at n = {self.start}, asked for {n}")
        return self.values[min(i, len(self.values) - 1)]

    def sup(self):
        return max(self.values)

    def to_record(self):
        return {"kind": self.kind, "values": list(self.values), "start": self.start}


@dataclass(frozen=True)
class FromFunction(Schedule):
    func: Callable[[int], float]
    bound: float = math.inf
    kind = "function"

    def value(self, n, state=None):
        return self.func(n)

    def sup(self):
        return self.bound

    def to_record(self):
        raise TypeError("function-backed schedules are not serializable")


def adaptive_constant(space: SpaceSpec) -> float:
    """3^-p / (64 (8 gamma)^(p/q)), the factor of the adaptive delta/eta rules."""
    p, q, g = space.p, space.q, space.gamma
    return 3.0 ** (-p) / (64.0 * (8.0 * g) ** (p / q))


@dataclass(frozen=True)
class EngineSnapshot:
    """What an adaptive schedule may read: ||f_n|| and E_n at index n."""

    n: int
    residual_norm: float
    E: float


@dataclass(frozen=True)
class Adaptive(Schedule):
    """delta_n = t_{n+1}^p ||f_n||^p K  or  eta_n = t_{n+1}^p E_n^p K.

    Applied on the indices of ``subsequence`` (every index when None); other
    indices take ``base``.  ``f_bound`` bounds ||f|| and fixes the declared sup.
    """

    role: str
    space: SpaceSpec
    t: Schedule
    subsequence: "Subsequence | None" = None
    base: Schedule = Constant(0.0)
    f_bound: float = 1.0
    kind = "adaptive_rate"
    adaptive = True

    def __post_init__(self):
        if self.role not in ("delta", "eta"):
            raise ValueError("adaptive schedules drive delta or eta")

    def applies(self, n: int) -> bool:
        return self.subsequence is None or n in self.subsequence

    def value(self, n, state=None):
        if not self.applies(n):
            return self.base(n, state)
        if state is None:
            raise ValueError("adaptive schedule evaluated without an engine snapshot")
        size = state.residual_norm if self.role == "delta" else state.E
        p = self.space.p
        return self.t(n + 1) ** p * size ** p * adaptive_constant(self.space)

    def sup(self):
        own = self.f_bound ** self.space.p * adaptive_constant(self.space)
        return max(own, self.base.sup()) if self.subsequence is not None else own

    def to_record(self):
        rec = {"kind": self.kind, "base": self.base.to_record()}
        if self.subsequence is not None:
            rec["subsequence"] = [int(i) for i in self.subsequence.indices]
        return rec


def make_schedule(kind: str, **params) -> Schedule:
    """Build a schedule from a (kind, parameters) record.

    ``adaptive_rate`` needs ``role``, ``space`` and ``t``; the others take their
    own parameters (``value``; ``exponent``/``scale``; ``values``/``start``).
    """
    if kind == "constant":
        return Constant(float(params["value"]))
    if kind == "power":
        return Power(float(params["exponent"]), float(params.get("scale", 1.0)))
    if kind == "scripted":
        return Scripted(tuple(params["values"]), int(params.get("start", 1)))
    if kind == "adaptive_rate":
        sub = params.get("subsequence")
        if sub is not None and not isinstance(sub, Subsequence):
            sub = Subsequence(sub)
        base = params.get("base", Constant(0.0))
        if isinstance(base, dict):
            base = make_schedule(**base)
        return Adaptive(params["role"], params["space"], params["t"], sub, base,
                        float(params.get("f_bound", 1.0)))
    raise ValueError(f"unknown schedule kind {kind!r}")


@dataclass(frozen=True)
class ScheduleSet:
    """The three driver sequences plus the declared sup of eta."""

    t: Schedule
    delta: Schedule
    eta: Schedule
    eta0: float | None = None

    def __post_init__(self):
        if self.eta0 is None:
            object.__setattr__(self, "eta0", float(self.eta.sup()))
        if not self.eta0 >= 0:
            raise ValueError("eta0 must be nonnegative")

    def weakness(self, n: int) -> float:
        v = self.t(n)
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"weakness t_{n} = {v!r} outside [0, 1]")
        return v

    def perturbation(self, n: int, state=None) -> float:
        v = self.delta(n, state)
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"perturbation delta_{n} = {v!r} outside [0, 1]")
        return v

    def error(self, n: int, state=None) -> float:
        v = self.eta(n, state)
        if not 0.0 <= v <= self.eta0 * (1 + 1e-12):
            raise ValueError(f"error eta_{n} = {v!r} outside [0, eta0 = {self.eta0!r}]")
        return v

    def validate(self, horizon: int):
        """Range-check every non-adaptive component up to ``horizon``."""
        for n in range(1, horizon + 2):
            self.weakness(n)
        if not self.delta.adaptive:
            for n in range(0, horizon + 1):
                self.perturbation(n)
        if not self.eta.adaptive:
            for n in range(1, horizon + 1):
                self.error(n)

    @classmethod
    def wcga(cls, t: Schedule | float = 1.0) -> "ScheduleSet":
        t = Constant(t) if not isinstance(t, Schedule) else t
        return cls(t, Constant(0.0), Constant(0.0), 0.0)


@dataclass(frozen=True)
class Subsequence:
    """Strictly increasing positive indices n_1 < n_2 < ..."""

    indices: np.ndarray
    info: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64).reshape(-1)
        if idx.size and (idx[0] < 1 or np.any(np.diff(idx) <= 0)):
            raise ValueError("subsequence indices must be positive and strictly increasing")
        idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)

    def __len__(self):
        return int(self.indices.size)

    def __iter__(self):
        return iter(int(i) for i in self.indices)

    def __contains__(self, n) -> bool:
        i = np.searchsorted(self.indices, n)
        return bool(i < self.indices.size and self.indices[i] == n)

    def count_upto(self, n: int) -> int:
        """N(n) = max{k : n_k <= n} (0 when n < n_1)."""
        return int(np.searchsorted(self.indices, n, side="right"))

    @classmethod
    def arithmetic(cls, step: int, count: int, first: int | None = None) -> "Subsequence":
        first = step if first is None else first
        return cls(first + step * np.arange(count))


SeqLike = Callable[[int], float] | Sequence[float] | np.ndarray


def values_at(seq: SeqLike, indices) -> np.ndarray:
    """Evaluate a 1-indexed sequence (callable, or array with a[0] = a_1)."""
    indices = np.asarray(indices, dtype=np.int64)
    if callable(seq):
        return np.array([float(seq(int(n))) for n in indices])
    arr = np.asarray(seq, dtype=float)
    return arr[indices - 1]


class DivergenceReport(NamedTuple):
    exceeds: bool
    partial_sum: float


def check_divergent_sum(t: SeqLike, p: float, prefix: int, threshold: float,
                        subsequence: Subsequence | None = None) -> DivergenceReport:
    """sum_{k <= prefix} t_{n_k + 1}^p compared with ``threshold``.

    Without a subsequence n_k + 1 runs over 1, 2, ..., prefix.
    """
    if prefix < 1:
        raise ValueError("prefix must be at least 1")
    if subsequence is None:
        idx = np.arange(1, prefix + 1)
    else:
        idx = subsequence.indices[:prefix] + 1
    s = float(np.sum(values_at(t, idx) ** p))
    return DivergenceReport(s > threshold, s)


@dataclass
class LittleOReport:
    indices: np.ndarray
    ratios: np.ndarray
    tail_max: float
    violations: list
    nonincreasing: bool
    threshold: float | None = None

    @property
    def passed(self) -> bool:
        if self.violations:
            return False
        return self.threshold is None or self.tail_max <= self.threshold


def check_little_o(a: SeqLike, b: SeqLike, subsequence: Subsequence | None = None,
                   prefix: int = 1000, threshold: float | None = None) -> LittleOReport:
    """Ratios a_{n_k} / b_{n_k} along the subsequence and their last-decile max.

    An index with b = 0 < a is a violation (ratio inf); 0/0 counts as 0.
    """
    if prefix < 2:
        raise ValueError("prefix must be at least 2")
    idx = np.arange(1, prefix + 1) if subsequence is None else subsequence.indices[:prefix]
    av, bv = values_at(a, idx), values_at(b, idx)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(av == 0, 0.0, av / bv)
    bad = np.flatnonzero((bv == 0) & (av > 0))
    ratios[bad] = np.inf
    tail = ratios[-max(1, len(ratios) // 10):]
    return LittleOReport(idx, ratios, float(tail.max()), [int(idx[i]) for i in bad],
                         bool(np.all(np.diff(ratios) <= 0)), threshold)


def _components(mask_idx: np.ndarray) -> list[np.ndarray]:
    if mask_idx.size == 0:
        return []
    cuts = np.flatnonzero(np.diff(mask_idx) > 1) + 1
    return np.split(mask_idx, cuts)


def extract_halving_subsequence(b: SeqLike, prefix: int, branch: str = "auto") -> Subsequence:
    """Indices n with b_n >= b_{n-1} / 2 carrying the mass of a divergent series.

    Lambda = {lam >= 2 : b_lam < b_{lam-1} / 2} splits into runs of consecutive
    integers with minima lam_k.  Branch "components" returns {lam_k - 1}, branch
    "complement" returns {2..prefix} minus Lambda; "auto" compares
    sum_k b_{lam_k} with the mass of the complement and keeps the complement
    on ties.
    """
    if prefix < 2:
        raise ValueError("prefix must be at least 2")
    idx = np.arange(1, prefix + 1)
    bv = values_at(b, idx)
    if np.any(bv < 0):
        raise ValueError("b must be nonnegative")
    if not np.any(bv > 0):
        raise ValueError("b vanishes on the whole prefix")
    lam_mask = np.zeros(prefix, dtype=bool)
    lam_mask[1:] = bv[1:] < 0.5 * bv[:-1]
    comps = _components(idx[lam_mask])
    minima = np.array([c[0] for c in comps], dtype=np.int64)
    comp_mass = float(bv[minima - 1].sum()) if minima.size else 0.0
    complement = idx[1:][~lam_mask[1:]]
    rest_mass = float(bv[complement - 1].sum())

    if branch == "auto":
        branch = "components" if comp_mass > rest_mass else "complement"
    if branch == "components":
        out = minima - 1
        out = out[out >= 2]
    elif branch == "complement":
        out = complement
    else:
        raise ValueError(f"unknown branch {branch!r}")
    return Subsequence(out, {"branch": branch, "component_minima": minima,
                             "component_mass": comp_mass, "complement_mass": rest_mass})


def extract_l1_subsequence(a: SeqLike, b: SeqLike, prefix: int) -> Subsequence:
    """Indices on which a/b -> 0 while sum b keeps (at least) half its mass.

    Gamma_0 = {a = 0} is returned outright when it carries at least half of
    the b-mass of the prefix.  Otherwise Gamma_1 = {a > b or b = 0} is dropped
    and the rest is split into bands 1/(k+1) < a/b <= 1/k; from each band the
    lowest indices are kept until they hold half of the band's b-mass.
    """
    if prefix < 2:
        raise ValueError("prefix must be at least 2")
    idx = np.arange(1, prefix + 1)
    av, bv = values_at(a, idx), values_at(b, idx)
    if np.any(av < 0) or np.any(bv < 0):
        raise ValueError("a and b must be nonnegative")
    total = float(bv.sum())
    g0 = av == 0
    if total > 0 and bv[g0].sum() >= 0.5 * total:
        return Subsequence(idx[g0], {"branch": "zero_set", "bands": {}})

    g1 = ~g0 & ((av > bv) | (bv == 0))
    live = ~(g0 | g1)
    # band k = floor(b/a); the relative nudge keeps a/b = 1/k in band k
    # float labels: b/a may exceed the int64 range (or overflow) for tiny a
    k = np.zeros(prefix)
    with np.errstate(over="ignore"):
        k[live] = np.floor(bv[live] / av[live] * (1.0 + 1e-12))
    bands, chosen = {}, []
    for kk in np.unique(k[live]):
        members = idx[live & (k == kk)]
        mass = bv[members - 1]
        need = 0.5 * mass.sum()
        upto = int(np.searchsorted(np.cumsum(mass), need * (1 - 1e-15))) + 1
        omega = members[:upto]
        bands[int(kk) if np.isfinite(kk) and kk < 2 ** 62 else float(kk)] = (members, omega)
        chosen.append(omega)
    out = np.sort(np.concatenate(chosen)) if chosen else np.zeros(0, dtype=np.int64)
    return Subsequence(out, {"branch": "bands", "bands": bands,
                             "gamma0": idx[g0], "gamma1": idx[g1]})
