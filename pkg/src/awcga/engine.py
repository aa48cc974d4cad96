"""The AWCGA iteration with pluggable realizations and a per-step audit.

Step n (n >= 1) starting from f_{n-1}:

1. a functional F_{n-1} with ||F|| <= 1 and F(f_{n-1}) >= (1 - delta_{n-1}) ||f_{n-1}||;
2. phi_n in D with F_{n-1}(phi_n) >= t_n sup_g F_{n-1}(g);
3. G_n in span(phi_1..phi_n) with ||f - G_n|| <= (1 + eta_n) E_n, and f_n = f - G_n.

The WCGA is the case delta = eta = 0 with exact functionals.  Indexing: a
record for step n stores t_n, delta_{n-1} (the slack used in step 1), eta_n,
||f_n|| and E_n.
"""
from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .dictionaries import Dictionary, weak_argmax
from .errors import ContractViolation
from .projection import (Approximation, ProjectionProblem, best_approximation, in_span,
                         perturbed_approximation)
from .schedules import EngineSnapshot, ScheduleSet
from .space import SpaceSpec, as_vector, dual_norm, lp_norm, norming_functional

log = logging.getLogger(__name__)

VALIDATION_TOL = 1e-9
CSV_FIELDS = ("n", "t_n", "delta", "eta", "residual_norm", "E_n", "chosen_id", "chosen_sign",
              "F_on_residual", "sup_value", "bound_E_next", "solver_iterations")
TRACE_HEADER = ("row n is step n: t_n, delta = delta_{n-1} (functional slack of step n), "
                "eta = eta_n, residual_norm = ||f_n||, E_n; bound_E_next bounds E_{n+1}")


@dataclass
class StepContext:
    """State visible to scripted suppliers at step n."""

    n: int
    f: np.ndarray
    residual: np.ndarray
    residual_norm: float
    space: SpaceSpec
    dictionary: Dictionary
    t: float
    delta: float
    chosen: list
    basis: np.ndarray
    functional: np.ndarray | None = None
    eta: float | None = None
    best: Approximation | None = None


@dataclass(frozen=True)
class RealizationPolicy:
    """How the free choices of each step are made.

    ``functional``: "exact" or callable(ctx) -> DualVec.
    ``selection``: "canonical" or callable(ctx) -> (index, sign).
    ``approximant``: "canonical" (error injection with ``utilization``) or
    callable(ctx) -> G.  ``chebyshev_error``: optional callable(ctx) -> E_n
    replacing the solver (only needed outside 1 < r < inf).
    """

    functional: str | Callable = "exact"
    selection: str | Callable = "canonical"
    approximant: str | Callable = "canonical"
    utilization: float = 1.0
    tie_break: str = "lowest"
    chebyshev_error: Callable | None = None

    @property
    def canonical(self) -> bool:
        return (self.functional == "exact" and self.selection == "canonical"
                and self.approximant == "canonical")


@dataclass
class IterationRecord:
    n: int
    t_n: float
    delta: float
    eta: float
    residual_norm: float
    E_n: float
    chosen_id: int
    chosen_sign: int
    F_on_residual: float
    sup_value: float
    bound_E_next: float
    solver_iterations: int
    G: np.ndarray = field(repr=False)
    margins: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def row(self) -> tuple:
        return tuple(getattr(self, k) for k in CSV_FIELDS)


@dataclass
class Trace:
    f: np.ndarray
    space: SpaceSpec
    records: list = field(default_factory=list)
    verdict: str = "not_converged"
    verdict_step: int | None = None
    conv_tol: float | None = None
    reason: str | None = None
    initial_bound: float = float("nan")
    header: str = TRACE_HEADER

    def __len__(self):
        return len(self.records)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records], dtype=float)

    @property
    def residual_norms(self) -> np.ndarray:
        """||f_n|| for n = 0..len(trace)."""
        return np.concatenate([[lp_norm(self.f, self.space.r)], self.column("residual_norm")])

    @property
    def errors(self) -> np.ndarray:
        """E_n for n = 0..len(trace), with E_0 = ||f||."""
        return np.concatenate([[lp_norm(self.f, self.space.r)], self.column("E_n")])

    def summary(self) -> str:
        final = self.residual_norms[-1]
        tail = f" at step {self.verdict_step}" if self.verdict_step is not None else ""
        why = f" ({self.reason})" if self.reason else ""
        return f"{self.verdict}{tail}{why}: steps={len(self)} final_residual={final:.17g}"

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        for rec in self.records:
            w.writerow([_fmt(v) for v in rec.row()])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def residual(trace: Trace, n: int) -> np.ndarray:
    """f_n = f - G_n rebuilt from the stored approximant (f_0 = f)."""
    if not 0 <= n <= len(trace.records):
        raise IndexError(f"step {n} outside trace of length {len(trace.records)}")
    if n == 0:
        return trace.f.copy()
    return trace.f - trace.records[n - 1].G


def validate_step(prev_residual, F, phi, G, f, t_n, delta, eta, E_n, s: SpaceSpec,
                  sup: float | None = None, dictionary: Dictionary | None = None) -> dict:
    """Signed slack of each step condition (negative means violated).

    norm: 1 - ||F||;  descent: F(f_{n-1}) - (1 - delta)||f_{n-1}||;
    selection: F(phi) - t sup;  approximation: (1 + eta) E - ||f - G||.
    """
    if sup is None:
        sup = float(np.max(np.abs(dictionary.evaluate(F))))
    return {
        "norm": 1.0 - dual_norm(F, s),
        "descent": float(F @ prev_residual) - (1.0 - delta) * lp_norm(prev_residual, s.r),
        "selection": float(F @ phi) - t_n * sup,
        "approximation": (1.0 + eta) * E_n - lp_norm(f - G, s.r),
    }


def run(f, D: Dictionary, s: SpaceSpec, sched: ScheduleSet,
        policy: RealizationPolicy | None = None, n_max: int = 100, conv_tol: float = 1e-10,
        bound_ctx=None, on_violation: str = "raise", solver_tol: float = 1e-10) -> Trace:
    """Run n_max steps of the AWCGA (fewer if ||f_n|| <= conv_tol).

    ``bound_ctx`` (an object with ``bound(residual_norm, n, delta, eta, t_next)``)
    fills ``bound_E_next``.  A failed step condition raises
    :class:`ContractViolation` or, with ``on_violation="record"``, ends the run
    with verdict "aborted".
    """
    policy = policy or RealizationPolicy()
    if on_violation not in ("raise", "record"):
        raise ValueError("on_violation must be 'raise' or 'record'")
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    if D.dim != s.dim:
        raise ValueError("dictionary and space dimensions differ")
    f = as_vector(f, s.dim, "f")
    f_norm = lp_norm(f, s.r)
    if f_norm == 0:
        raise ValueError("f must be nonzero")
    trace = Trace(f.copy(), s, conv_tol=conv_tol)
    tol = VALIDATION_TOL * max(1.0, f_norm)

    prev, prev_norm, E_prev = f.copy(), f_norm, f_norm
    delta = sched.perturbation(0, EngineSnapshot(0, f_norm, f_norm))
    if bound_ctx is not None:
        trace.initial_bound = bound_ctx.bound(f_norm, 0, delta, sched.eta0, sched.weakness(1))
    basis: list[np.ndarray] = []
    coef = None

    for n in range(1, n_max + 1):
        t = sched.weakness(n)
        ctx = StepContext(n, f, prev, prev_norm, s, D, t, delta,
                          [(r.chosen_id, r.chosen_sign) for r in trace.records],
                          np.array(basis).reshape(-1, s.dim))
        F = (norming_functional(prev, s) if policy.functional == "exact"
             else as_vector(policy.functional(ctx), s.dim, "functional"))
        ctx.functional = F
        values = D.evaluate(F)
        sup = float(np.max(np.abs(values)))
        if policy.selection == "canonical":
            sel = weak_argmax(F, D, t, policy.tie_break)
            idx, sign = sel.index, sel.sign
        else:
            idx, sign = policy.selection(ctx)
        phi = D.element(idx, sign)

        if not basis or not in_span(phi, np.array(basis)):
            basis.append(phi)
            if coef is not None:
                coef = np.append(coef, 0.0)
        B = np.array(basis)
        ctx.basis = B
        if policy.chebyshev_error is not None:
            E = float(policy.chebyshev_error(ctx))
            best, iters = None, 0
        else:
            prob = ProjectionProblem(f, B, s, tol=solver_tol, warm_start=coef)
            best = best_approximation(prob)
            E, iters, coef = best.E, best.iterations, best.coef
        ctx.best = best
        eta = sched.error(n, EngineSnapshot(n, prev_norm, E))
        ctx.eta = eta

        if policy.approximant == "canonical":
            if best is None:
                raise ValueError("canonical approximants need the projection solver")
            G = perturbed_approximation(prob, eta, utilization=policy.utilization, best=best).G
        else:
            G = as_vector(policy.approximant(ctx), s.dim, "approximant")
            if not in_span(G, B):
                _violate(trace, ContractViolation("span", n, -np.inf), on_violation)
                break

        fn = f - G
        fn_norm = lp_norm(fn, s.r)
        margins = validate_step(prev, F, phi, G, f, t, delta, eta, E, s, sup=sup)
        next_delta = sched.perturbation(n, EngineSnapshot(n, fn_norm, E)) if fn_norm > 0 else 0.0
        bound = float("nan")
        if bound_ctx is not None and fn_norm > 0:
            bound = bound_ctx.bound(fn_norm, n, next_delta, eta, sched.weakness(n + 1))
        trace.records.append(IterationRecord(
            n, t, delta, eta, fn_norm, E, int(idx), int(sign), float(F @ prev), sup, bound,
            int(iters), G, margins))

        bad = [k for k, m in margins.items() if m < -tol]
        if bad:
            _violate(trace, ContractViolation(bad[0], n, margins[bad[0]]), on_violation)
            break
        if fn_norm <= conv_tol:
            trace.verdict, trace.verdict_step = "converged", n
            break
        prev, prev_norm, E_prev, delta = fn, fn_norm, E, next_delta
    return trace


def _violate(trace: Trace, exc: ContractViolation, on_violation: str):
    trace.verdict, trace.verdict_step, trace.reason = "aborted", exc.step, str(exc)
    exc.trace = trace
    if on_violation == "raise":
        raise exc
    log.warning("run aborted: %s", exc)
