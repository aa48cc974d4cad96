"""Symmetric normalized dictionaries and the weak greedy selection step.

A dictionary stores one representative of every pair {g, -g}; the sign is
chosen at selection time.  Two kinds exist: the standard basis of the ambient
space (stored implicitly) and an explicit list of unit vectors.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .space import SpaceSpec, as_vector, lp_norm

NORM_TOL = 1e-12
STANDARD_BASIS = "standard_basis"
EXPLICIT_LIST = "explicit_list"


class Dictionary:
    """Finite symmetric dictionary over R^dim, normalized in ell_r."""

    def __init__(self, kind: str, dim: int, r: float, elements=None):
        if kind not in (STANDARD_BASIS, EXPLICIT_LIST):
            raise ValueError(f"unknown dictionary kind {kind!r}")
        self.kind = kind
        self.dim = int(dim)
        self.r = float(r)
        if kind == STANDARD_BASIS:
            if elements is not None:
                raise ValueError("standard_basis dictionaries take no element list")
            self._elements = None
        else:
            el = np.array(elements, dtype=float, ndmin=2)
            if el.size == 0:
                raise ValueError("empty dictionary")
            if el.shape[1] != self.dim:
                raise ValueError(f"elements have dimension {el.shape[1]}, expected {self.dim}")
            if not np.all(np.isfinite(el)):
                raise ValueError("dictionary elements must be finite")
            norms = np.array([lp_norm(g, self.r) for g in el])
            bad = np.flatnonzero(np.abs(norms - 1.0) > NORM_TOL)
            if bad.size:
                raise ValueError(f"elements {bad.tolist()} are not unit vectors in ell_{self.r:g}")
            el.setflags(write=False)
            self._elements = el

    @classmethod
    def standard_basis(cls, space: SpaceSpec) -> "Dictionary":
        return cls(STANDARD_BASIS, space.dim, space.r)

    @classmethod
    def from_elements(cls, elements, space: SpaceSpec, normalize: bool = False) -> "Dictionary":
        el = np.array(elements, dtype=float, ndmin=2)
        if normalize:
            el = el / np.array([lp_norm(g, space.r) for g in el])[:, None]
        return cls(EXPLICIT_LIST, space.dim, space.r, el)

    def __len__(self) -> int:
        return self.dim if self._elements is None else self._elements.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dictionary):
            return NotImplemented
        if (self.kind, self.dim, self.r) != (other.kind, other.dim, other.r):
            return False
        return self._elements is None or np.array_equal(self._elements, other._elements)

    def __repr__(self):
        return f"Dictionary(kind={self.kind!r}, size={len(self)}, dim={self.dim}, r={self.r:g})"

    @property
    def elements(self) -> np.ndarray:
        """Stored representatives as rows (materialized for the standard basis)."""
        if self._elements is None:
            return np.eye(self.dim)
        return self._elements

    def element(self, index: int, sign: int = 1) -> np.ndarray:
        if not 0 <= index < len(self):
            raise IndexError(f"dictionary index {index} out of range")
        if self._elements is None:
            g = np.zeros(self.dim)
            g[index] = 1.0
        else:
            g = self._elements[index].copy()
        return g if sign > 0 else -g

    def evaluate(self, F) -> np.ndarray:
        """Values F(g_j) for every stored representative g_j."""
        F = as_vector(F, self.dim, "functional")
        if self._elements is None:
            return F.copy()
        return self._elements @ F

    def check_normalized(self, space: SpaceSpec, tol: float = NORM_TOL) -> bool:
        if space.dim != self.dim:
            return False
        return all(abs(lp_norm(g, space.r) - 1.0) <= tol for g in self.elements)

    def to_text(self) -> str:
        """Serialize as JSON; floats are written with round-trip precision."""
        doc = {"kind": self.kind, "dim": self.dim, "r": self.r}
        if self._elements is not None:
            doc["elements"] = self._elements.tolist()
        return json.dumps(doc, indent=1)

    @classmethod
    def from_text(cls, text: str) -> "Dictionary":
        doc = json.loads(text)
        return cls(doc["kind"], doc["dim"], doc["r"], doc.get("elements"))


class Selection(NamedTuple):
    index: int
    sign: int
    value: float
    sup: float


def weak_argmax(F, D: Dictionary, t: float, tie_break: str = "lowest") -> Selection:
    """Pick +-g_j with F(+-g_j) >= t * sup_{g in D} F(g).

    The supremum over the symmetric dictionary is max_j |F(g_j)|.  With
    ``tie_break="lowest"`` the admissible element of lowest index is returned
    (positive sign when F(g_j) = 0); ``"max"`` returns the lowest-index maximizer.
    """
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"weakness parameter must lie in [0, 1], got {t}")
    if len(D) == 0:
        raise ValueError("empty dictionary")
    vals = D.evaluate(F)
    mags = np.abs(vals)
    sup = float(mags.max())
    if tie_break == "lowest":
        idx = int(np.flatnonzero(mags >= t * sup)[0])
    elif tie_break == "max":
        idx = int(np.argmax(mags))
    else:
        raise ValueError(f"unknown tie_break policy {tie_break!r}")
    sign = -1 if vals[idx] < 0 else 1
    return Selection(idx, sign, float(mags[idx]), sup)


def convex_hull_element(weights, D: Dictionary, sum_tol: float = 1e-12) -> np.ndarray:
    """sum_j w_j g_j for nonnegative weights with sum <= 1 (an A_1(D) witness)."""
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or not np.all(np.isfinite(w)):
        raise ValueError("weights must be a finite 1-D array")
    if np.any(w < 0):
        raise ValueError("convex weights must be nonnegative")
    if w.sum() > 1.0 + sum_tol:
        raise ValueError(f"convex weights sum to {w.sum()!r} > 1")
    if w.shape[0] > len(D):
        raise ValueError(f"{w.shape[0]} weights for a dictionary of size {len(D)}")
    if D.kind == STANDARD_BASIS:
        out = np.zeros(D.dim)
        out[: w.shape[0]] = w
        return out
    return w @ D.elements[: w.shape[0]]


@dataclass(frozen=True)
class NonsmoothConstruction:
    """Dictionary, element and the two norming functionals of the ell_1 trap.

    Element order in ``dictionary``: g_0, g_1, then e'_j for j in ``kept``.
    """

    dictionary: Dictionary
    f: np.ndarray
    F: np.ndarray
    F_prime: np.ndarray
    g: np.ndarray
    alpha0: float
    alpha1: float
    betas: np.ndarray
    kept: np.ndarray
    excluded: np.ndarray

    @property
    def g0(self) -> np.ndarray:
        return self.dictionary.element(0)

    @property
    def g1(self) -> np.ndarray:
        return self.dictionary.element(1)


def build_nonsmooth_dictionary(dim: int) -> NonsmoothConstruction:
    """Dictionary in ell_1^dim on which the WCGA of f = e_0 never moves.

    f = e_0 has the two norming functionals F = (1, 1, ..., 1) and
    F' = (1, -1, 1, ..., 1), which disagree on g = e_1.  From them

        g_0 = alpha_0 (g - (F(g) + F'(g))/2 f),   g_1 = alpha_1 (g - F(g) f),
        e'_j = beta_j (e_j - F(e_j)/F(g_0) g_0),

    with every element rescaled to unit ell_1 norm and the indices with
    e'_j = 0 dropped.
    """
    if dim < 2:
        raise ValueError("the nonsmooth construction needs dim >= 2")
    f = np.zeros(dim)
    f[0] = 1.0
    F = np.ones(dim)
    Fp = np.ones(dim)
    Fp[1] = -1.0
    g = np.zeros(dim)
    g[1] = 1.0

    Fg, Fpg = F @ g, Fp @ g
    u0 = g - 0.5 * (Fg + Fpg) * f
    u1 = g - Fg * f
    alpha0, alpha1 = 1.0 / lp_norm(u0, 1.0), 1.0 / lp_norm(u1, 1.0)
    g0, g1 = alpha0 * u0, alpha1 * u1

    Fg0 = F @ g0
    rows, betas, kept, excluded = [g0, g1], [], [], []
    for j in range(dim):
        ej = np.zeros(dim)
        ej[j] = 1.0
        v = ej - (F[j] / Fg0) * g0
        nv = lp_norm(v, 1.0)
        if nv <= NORM_TOL:
            excluded.append(j)
            continue
        betas.append(1.0 / nv)
        kept.append(j)
        rows.append(v / nv)

    elements = np.array(rows)
    if np.linalg.matrix_rank(elements, tol=1e-10) != dim:
        raise RuntimeError("nonsmooth dictionary does not span the ambient space")
    D = Dictionary(EXPLICIT_LIST, dim, 1.0, elements)
    return NonsmoothConstruction(D, f, F, Fp, g, float(alpha0), float(alpha1),
                                 np.array(betas), np.array(kept, dtype=int),
                                 np.array(excluded, dtype=int))
