"""Best approximation from a finite-dimensional subspace of ell_r.

E = inf over c of ||f - sum_j c_j phi_j||_r.  For r >= 2 the smooth convex
function sum_i |f_i - (B^T c)_i|^r is minimized by damped Newton steps with
Armijo backtracking, warm-started from the previous coefficients when given.
For 1 < r < 2 the same iteration runs on the dual problem

    max F(f)  over  ||F||_{r'} <= 1,  F(phi_j) = 0,

whose exponent r' = r/(r-1) exceeds 2; the residual is recovered through the
inverse duality map.  Bases made of distinct coordinate vectors are solved in
closed form.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import brentq

from .errors import ContractViolation, ProjectionError
from .space import SpaceSpec, as_vector, lp_norm, signed_power

log = logging.getLogger(__name__)

RANK_TOL = 1e-10
CONDITION_WARN = 1e12
ZERO_RESIDUAL = 1e-12


@dataclass(frozen=True)
class ProjectionProblem:
    target: np.ndarray
    basis: np.ndarray
    space: SpaceSpec
    tol: float = 1e-10
    max_iter: int = 500
    warm_start: np.ndarray | None = None

    def __post_init__(self):
        f = as_vector(self.target, self.space.dim, "target")
        B = np.array(self.basis, dtype=float).reshape(-1, self.space.dim)
        if not np.all(np.isfinite(B)):
            raise ValueError("basis has non-finite entries")
        if B.shape[0] > 0 and np.any(np.abs(B).max(axis=1) == 0):
            raise ValueError("basis contains a zero vector")
        if not self.space.smooth:
            raise ValueError("the projection solver needs 1 < r < inf")
        object.__setattr__(self, "target", f)
        object.__setattr__(self, "basis", B)


class Approximation(NamedTuple):
    G: np.ndarray
    E: float
    coef: np.ndarray
    iterations: int
    optimality: float


class PerturbedApproximation(NamedTuple):
    G: np.ndarray
    achieved: float
    E: float


def independent_rows(B: np.ndarray, tol: float = RANK_TOL) -> np.ndarray:
    """Indices of rows that are not in the span of the rows before them.

    |R_ii| from an unpivoted QR of B^T is the distance of row i from the span
    of the earlier rows.
    """
    n, dim = B.shape
    if n == 0:
        return np.zeros(0, dtype=int)
    if n <= dim:
        R = np.linalg.qr(B.T, mode="r")
        return np.flatnonzero(np.abs(np.diag(R)) > tol * np.linalg.norm(B, axis=1))
    keep = []
    Q = np.zeros((0, dim))
    for i, b in enumerate(B):
        v = b - Q.T @ (Q @ b)
        v -= Q.T @ (Q @ v)
        nv = np.linalg.norm(v)
        if nv > tol * np.linalg.norm(b):
            keep.append(i)
            Q = np.vstack([Q, v / nv])
    return np.array(keep, dtype=int)


def in_span(v: np.ndarray, B: np.ndarray, tol: float = RANK_TOL) -> bool:
    if B.shape[0] == 0:
        return bool(np.all(v == 0))
    c, *_ = np.linalg.lstsq(B.T, v, rcond=None)
    return bool(np.linalg.norm(v - B.T @ c) <= tol * max(1.0, np.linalg.norm(v)))


def _coordinate_support(B: np.ndarray):
    nz = [np.flatnonzero(row) for row in B]
    if all(len(z) == 1 for z in nz):
        idx = np.array([z[0] for z in nz])
        if len(np.unique(idx)) == len(idx):
            return idx
    return None


def optimality(f: np.ndarray, B: np.ndarray, c: np.ndarray, r: float) -> float:
    """max_j |F(phi_j)| / ||phi_j|| with F the norming functional of the residual."""
    res = f - B.T @ c
    nr = lp_norm(res, r)
    if nr <= ZERO_RESIDUAL * lp_norm(f, r) or B.shape[0] == 0:
        return 0.0
    psi = signed_power(res / nr, r - 1.0)
    scale = np.array([lp_norm(b, r) for b in B])
    return float(np.max(np.abs(B @ psi) / scale))


def best_approximation(prob: ProjectionProblem) -> Approximation:
    f, r, tol = prob.target, prob.space.r, prob.tol
    n = prob.basis.shape[0]
    if n == 0:
        return Approximation(np.zeros_like(f), lp_norm(f, r), np.zeros(0), 0, 0.0)

    keep = independent_rows(prob.basis)
    B = prob.basis[keep]
    coef = np.zeros(n)

    idx = _coordinate_support(B)
    if idx is not None:
        c = f[idx] / B[np.arange(len(idx)), idx]
        iters = 0
    else:
        c, iters = _minimize(f, B, r, prob, keep)
    coef[keep] = c
    G = B.T @ c
    E = lp_norm(f - G, r)
    return Approximation(G, E, coef, iters, optimality(f, B, c, r))


def _minimize(f, B, r, prob, keep):
    fn = lp_norm(f, r)
    if fn == 0.0:
        return np.zeros(B.shape[0]), 0
    scale = np.array([lp_norm(b, r) for b in B])
    Bh = B / scale[:, None]
    fh = f / fn

    cond = np.linalg.cond(Bh @ Bh.T)
    if cond > CONDITION_WARN:
        warnings.warn(f"projection basis is ill-conditioned (cond {cond:.2e})", RuntimeWarning)

    c_ls, *_ = np.linalg.lstsq(Bh.T, fh, rcond=None)
    if r >= 2:
        if prob.warm_start is not None:
            full = np.zeros(prob.basis.shape[0])
            w = np.asarray(prob.warm_start, dtype=float)[: len(full)]
            full[: len(w)] = w
            c0 = full[keep] * scale / fn
        else:
            c0 = c_ls
        c, it = _newton(fh, -Bh.T, np.zeros(len(c0)), r, c0,
                        lambda c: optimality(fh, Bh, c, r), prob)
    else:
        # dual problem: F = N z annihilates the span, residual = J^{-1}(F)
        N = null_space(Bh)
        if N.shape[1] == 0:
            return np.linalg.lstsq(B.T, f, rcond=None)[0], 0
        rp = r / (r - 1.0)
        g = N.T @ fh
        z0 = N.T @ signed_power(fh - Bh.T @ c_ls, r - 1.0)

        def primal(z):
            res = signed_power(N @ z, rp - 1.0)
            return np.linalg.lstsq(Bh.T, fh - res, rcond=None)[0]

        z, it = _newton(np.zeros_like(fh), N, g, rp, z0,
                        lambda z: optimality(fh, Bh, primal(z), r), prob)
        c = primal(z)
    return c * fn / scale, it


def _newton(a0, A, g, s, z, measure, prob):
    """Damped Newton for min_z sum |a0 + A z|^s / s - g.z with s >= 2.

    Iterates until ``measure(z) <= prob.tol``; Armijo backtracking on the
    objective, with a full-step fallback once values stop resolving progress.
    """
    def h(z):
        return float(np.sum(np.abs(a0 + A @ z) ** s) / s - g @ z)

    val, opt, it = h(z), measure(z), 0
    while opt > prob.tol and it < prob.max_iter:
        it += 1
        x = a0 + A @ z
        grad = A.T @ signed_power(x, s - 1.0) - g
        H = (s - 1.0) * (A.T * np.abs(x) ** (s - 2.0)) @ A
        H[np.diag_indices_from(H)] += 1e-12 * max(np.trace(H) / H.shape[0], 1e-300)
        try:
            d = np.linalg.solve(H, -grad)
        except np.linalg.LinAlgError:
            d = -grad
        slope = grad @ d
        if not slope < 0:
            d, slope = -grad, -(grad @ grad)
        step = 1.0
        for _ in range(60):
            trial = z + step * d
            tv = h(trial)
            if tv < val + 1e-4 * step * slope:
                break
            step *= 0.5
        else:
            # objective values no longer resolve progress near the optimum;
            # take the full step when it improves first-order optimality
            trial = z + d
            tv = h(trial)
            if not measure(trial) < opt:
                log.debug("line search stalled at optimality %.3e", opt)
                break
        z, val = trial, tv
        opt = measure(z)

    if opt > prob.tol:
        raise ProjectionError(
            f"projection stopped after {it} iterations with optimality {opt:.3e} > {prob.tol:.1e}")
    return z, it


def perturbed_approximation(prob: ProjectionProblem, eta: float, mode: str = "canonical",
                            G=None, utilization: float = 1.0,
                            best: Approximation | None = None) -> PerturbedApproximation:
    """An approximant G in the span with ||f - G|| <= (1 + eta) E.

    ``mode="canonical"`` shrinks the best approximant along its own direction
    (or along the first basis vector when it vanishes) until the residual norm
    equals (1 + eta * utilization) E.  ``mode="scripted"`` checks the supplied
    ``G`` and returns it.
    """
    if eta < 0:
        raise ValueError("eta must be nonnegative")
    if not 0.0 <= utilization <= 1.0:
        raise ValueError("utilization must lie in [0, 1]")
    best = best if best is not None else best_approximation(prob)
    f, r, E = prob.target, prob.space.r, best.E
    slack = prob.tol * max(1.0, lp_norm(f, r))

    if mode == "scripted":
        G = as_vector(G, prob.space.dim, "approximant")
        if not in_span(G, prob.basis):
            raise ContractViolation("span", -1, -np.inf)
        achieved = lp_norm(f - G, r)
        margin = (1.0 + eta) * E - achieved
        if margin < -slack:
            raise ContractViolation("approximation", -1, margin)
        return PerturbedApproximation(G, achieved, E)
    if mode != "canonical":
        raise ValueError(f"unknown approximation mode {mode!r}")

    target = (1.0 + eta * utilization) * E
    if E == 0.0 or target == E or prob.basis.shape[0] == 0:
        return PerturbedApproximation(best.G, E, E)
    nG = lp_norm(best.G, r)
    d = best.G / nG if nG > 0 else prob.basis[0] / lp_norm(prob.basis[0], r)
    R = f - best.G

    def gap(s):
        return lp_norm(R + s * d, r) - target

    hi = target + E
    s = brentq(gap, 0.0, hi, xtol=1e-15 * hi, rtol=4 * np.finfo(float).eps, maxiter=200)
    if gap(s) > 0:
        lo = 0.0
        while gap(s) > 0 and s > lo:
            s = np.nextafter(s, lo)
    G = best.G - s * d
    return PerturbedApproximation(G, lp_norm(f - G, r), E)
