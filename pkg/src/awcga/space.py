"""Geometry of the finite-dimensional sequence spaces ell_r.

Vectors and functionals are plain 1-D float arrays.  A functional F acts on a
vector v through the coordinate pairing ``sum(F * v)``, so the dual of ell_r is
represented as ell_{r'} with ``1/r + 1/r' = 1``.

Smoothness data follows the standard power-type bound for L_r,

    rho(u) <= u**r / r             for 1 < r <= 2
    rho(u) <= (r - 1) / 2 * u**2   for r >= 2,

so the smoothness power is ``q = min(r, 2)`` and ``p = q / (q - 1)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Union

import numpy as np

DEFAULT_DIM = 512


@dataclass(frozen=True)
class SpaceSpec:
    """The space ell_r truncated to ``dim`` coordinates.

    ``r = 1`` is accepted only through :meth:`l1`; it carries no smoothness
    data and exists for the nonsmooth counterexample.
    """

    r: float
    dim: int = DEFAULT_DIM
    nonsmooth_ok: bool = field(default=False, repr=False, compare=False)

    def __post_init__(self):
        r = float(self.r)
        object.__setattr__(self, "r", r)
        if not np.isfinite(r) or r < 1.0:
            raise ValueError(f"norm exponent r must lie in (1, inf), got {self.r}")
        if r == 1.0 and not self.nonsmooth_ok:
            raise ValueError("r = 1 is not uniformly smooth; use SpaceSpec.l1(dim)")
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValueError(f"dim must be a positive integer, got {self.dim}")
        object.__setattr__(self, "dim", int(self.dim))

    @classmethod
    def l1(cls, dim: int) -> "SpaceSpec":
        return cls(1.0, dim, nonsmooth_ok=True)

    @property
    def smooth(self) -> bool:
        return self.r > 1.0

    def _require_smooth(self):
        if not self.smooth:
            raise ValueError("ell_1 has no nontrivial power-type modulus of smoothness")

    @property
    def q(self) -> float:
        self._require_smooth()
        return min(self.r, 2.0)

    @property
    def gamma(self) -> float:
        self._require_smooth()
        return 1.0 / self.r if self.r <= 2.0 else (self.r - 1.0) / 2.0

    @property
    def p(self) -> float:
        q = self.q
        return q / (q - 1.0)

    @property
    def dual_exponent(self) -> float:
        """Exponent r' of the dual norm (inf for r = 1)."""
        return np.inf if self.r == 1.0 else self.r / (self.r - 1.0)

    def with_dim(self, dim: int) -> "SpaceSpec":
        return SpaceSpec.l1(dim) if self.r == 1.0 else SpaceSpec(self.r, dim)


def as_vector(v, dim: int | None = None, name: str = "vector") -> np.ndarray:
    """Validate and return ``v`` as a finite 1-D float array."""
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise ValueError(f"{name} has dimension {arr.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def lp_norm(v: np.ndarray, r: float) -> float:
    """(sum |v_j|^r)^(1/r), computed with max-scaling to avoid overflow."""
    a = np.abs(v)
    if np.isinf(r):
        return float(a.max(initial=0.0))
    m = a.max(initial=0.0)
    if m == 0.0:
        return 0.0
    return float(m * np.sum((a / m) ** r) ** (1.0 / r))


def signed_power(v: np.ndarray, e: float) -> np.ndarray:
    """sign(v) |v|^e, with 0 mapped to 0 for every e > 0."""
    return np.sign(v) * np.abs(v) ** e


def norm(v, s: SpaceSpec) -> float:
    return lp_norm(as_vector(v, s.dim), s.r)


def dual_norm(F, s: SpaceSpec) -> float:
    return lp_norm(as_vector(F, s.dim, "functional"), s.dual_exponent)


def apply(F, v) -> float:
    F = as_vector(F, name="functional")
    v = as_vector(v, F.shape[0])
    return float(F @ v)


def norming_functional(f, s: SpaceSpec) -> np.ndarray:
    """The norming functional of ``f``: unit dual norm and F(f) = ||f||.

    Coordinates are sign(f_j) |f_j|^(r-1) / ||f||^(r-1).  For r = 1 this is
    sign(f), one of the (non-unique) norming functionals of ell_1.
    """
    f = as_vector(f, s.dim)
    nf = lp_norm(f, s.r)
    if nf == 0.0:
        raise ValueError("the zero vector has no norming functional")
    return signed_power(f / nf, s.r - 1.0)


def smoothness_bound(u: float, s: SpaceSpec) -> float:
    """gamma * u^q, the power-type upper bound on the modulus of smoothness."""
    if u < 0:
        raise ValueError("u must be nonnegative")
    return s.gamma * u ** s.q


def empirical_modulus(u: float, s: SpaceSpec, samples: int = 10_000, seed: int = 0,
                      batch: int = 2048) -> float:
    """Monte-Carlo lower estimate of the modulus of smoothness at ``u``.

    Pairs (x, y) are isotropic Gaussian directions rescaled onto the unit
    sphere of ell_r; the estimate is the max of (||x+uy|| + ||x-uy||)/2 - 1.
    Each pair is scored twice: as drawn, and with y replaced by its
    component annihilated by the norming functional of x (renormalized).  In
    ell_2 the second variant attains the modulus exactly.
    """
    if u < 0:
        raise ValueError("u must be nonnegative")
    if samples < 1:
        raise ValueError("samples must be positive")
    if u == 0:
        return 0.0
    rng = np.random.default_rng(seed)
    best = -np.inf
    done = 0
    while done < samples:
        m = min(batch, samples - done)
        x = rng.standard_normal((m, s.dim))
        y = rng.standard_normal((m, s.dim))
        x /= _row_norms(x, s.r)[:, None]
        y /= _row_norms(y, s.r)[:, None]
        Fx = signed_power(x, s.r - 1.0)
        y_perp = y - np.sum(Fx * y, axis=1)[:, None] * x
        y_perp /= _row_norms(y_perp, s.r)[:, None]
        for yy in (y, y_perp):
            vals = 0.5 * (_row_norms(x + u * yy, s.r) + _row_norms(x - u * yy, s.r)) - 1.0
            best = max(best, float(vals.max()))
        done += m
    return max(best, 0.0)


def _row_norms(a: np.ndarray, r: float) -> np.ndarray:
    m = np.abs(a).max(axis=1)
    m[m == 0] = 1.0
    return m * np.sum((np.abs(a) / m[:, None]) ** r, axis=1) ** (1.0 / r)


class Infimum(NamedTuple):
    argmin: float
    value: float


QLike = Union[float, SpaceSpec]


def _smoothness_power(q: QLike) -> float:
    q = q.q if isinstance(q, SpaceSpec) else float(q)
    if not 1.0 < q <= 2.0:
        raise ValueError(f"smoothness power must lie in (1, 2], got {q}")
    return q


def inf_phi(a: float, b: float, q: QLike) -> Infimum:
    """Minimum over x > 0 of a x^(q-1) + b / x."""
    if a <= 0 or b <= 0:
        raise ValueError("inf_phi needs a > 0 and b > 0")
    q = _smoothness_power(q)
    p = q / (q - 1.0)
    x = (b / (a * (q - 1.0))) ** (1.0 / q)
    return Infimum(x, p * (q - 1.0) ** (1.0 / q) * a ** (1.0 / q) * b ** (1.0 / p))


def inf_psi(a: float, b: float, q: QLike) -> Infimum:
    """Minimum over x >= 0 of a x^q - b x."""
    if a <= 0 or b <= 0:
        raise ValueError("inf_psi needs a > 0 and b > 0")
    q = _smoothness_power(q)
    p = q / (q - 1.0)
    x = (b / (a * q)) ** (1.0 / (q - 1.0))
    return Infimum(x, -(q - 1.0) * q ** (-p) * a ** (-p / q) * b ** p)
