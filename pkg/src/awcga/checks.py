"""Property suites run by ``awcga check``; each returns pass/fail lines with margins."""
from __future__ import annotations

from typing import Callable, NamedTuple

import numpy as np
from scipy.optimize import minimize_scalar

from .engine import RealizationPolicy, run
from .dictionaries import Dictionary, convex_hull_element
from .schedules import (ScheduleSet, check_little_o, extract_halving_subsequence,
                        extract_l1_subsequence, values_at)
from .scenarios import PRESETS, audit_bounds, convergence_regime, run_preset
from .space import (SpaceSpec, apply, dual_norm, empirical_modulus, inf_phi, inf_psi, norm,
                    norming_functional, smoothness_bound)

R_VALUES = (1.5, 2.0, 3.0, 4.0)


class CheckResult(NamedTuple):
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail}"


def duality(samples: int = 1000, dim: int = 64, seed: int = 0) -> list[CheckResult]:
    out = []
    rng = np.random.default_rng(seed)
    for r in R_VALUES:
        s = SpaceSpec(r, dim)
        worst_val = worst_norm = 0.0
        for _ in range(samples):
            f = rng.standard_normal(dim) * rng.exponential()
            F = norming_functional(f, s)
            nf = norm(f, s)
            worst_val = max(worst_val, abs(apply(F, f) - nf) / nf)
            worst_norm = max(worst_norm, abs(dual_norm(F, s) - 1))
        ok = worst_val <= 1e-9 and worst_norm <= 1e-9
        out.append(CheckResult(f"duality r={r:g}", ok,
                               f"max rel |F(f)-||f|||={worst_val:.2e}, max |  ||F||-1 |={worst_norm:.2e}"))
    return out


def modulus(samples: int = 10_000, dim: int = 64) -> list[CheckResult]:
    out = []
    for r in R_VALUES:
        s = SpaceSpec(r, dim)
        margins, hilbert = [], 0.0
        for u in (0.01, 0.05, 0.1, 0.5, 1.0):
            est = empirical_modulus(u, s, samples)
            margins.append(smoothness_bound(u, s) + 1e-9 - est)
            if r == 2.0:
                hilbert = max(hilbert, abs(est - (np.sqrt(1 + u * u) - 1)))
        ok = min(margins) >= 0 and hilbert <= 1e-6
        extra = f", max |est - closed form|={hilbert:.2e}" if r == 2.0 else ""
        out.append(CheckResult(f"modulus r={r:g}", ok, f"min margin {min(margins):.3e}{extra}"))
    return out


def _grid_min(fun: Callable, lo=1e-12, hi=1e12, points=100_000) -> float:
    x = np.logspace(np.log10(lo), np.log10(hi), points)
    i = int(np.argmin(fun(x)))
    xs = x[max(i - 1, 0)], x[min(i + 1, points - 1)]
    res = minimize_scalar(fun, bounds=xs, method="bounded", options={"xatol": 1e-14})
    return float(min(res.fun, fun(x[i])))


def infima(triples: int = 20, seed: int = 1) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(triples):
        a, b = rng.uniform(0.1, 5, 2)
        q = rng.uniform(1.2, 2.0)
        phi = _grid_min(lambda x: a * x ** (q - 1) + b / x)
        psi = _grid_min(lambda x: a * x ** q - b * x)
        worst = max(worst, abs(inf_phi(a, b, q).value - phi) / abs(phi),
                    abs(inf_psi(a, b, q).value - psi) / abs(psi))
    return [CheckResult("closed-form infima", worst <= 1e-6, f"max rel error {worst:.2e}")]


def rates() -> list[CheckResult]:
    out = []
    m = 256
    s = SpaceSpec(2.0, m)
    D = Dictionary.standard_basis(s)
    f = convex_hull_element(np.full(m, 1 / m), D)
    tr = run(f, D, s, ScheduleSet.wcga(), RealizationPolicy(), n_max=m - 1, conv_tol=0.0)
    n = np.arange(1, m)
    closed = np.abs(tr.column("residual_norm") - np.sqrt(m - n) / m).max()
    ratio = (tr.column("residual_norm") / (8 * s.gamma ** 0.5 * (1 + n) ** -0.5)).max()
    out.append(CheckResult("WCGA flat m=256", closed <= 1e-8 and ratio <= 1,
                           f"closed-form error {closed:.2e}, max observed/bound {ratio:.3f}"))
    for name in ("rate_l2_dense", "rate_l2_gap2", "rate_l3_corollary"):
        res = run_preset(name)
        rep = res.info["report"]
        out.append(CheckResult(name, res.passed,
                               f"violations {len(rep.violations)}, max observed/bound {rep.ratio.max():.3f}"))
    return out


def divergence() -> list[CheckResult]:
    out = []
    for name in ("necessity", "necessity_finite", "unbounded_eta", "nonsmooth"):
        res = run_preset(name)
        failed = [k for k, v in res.checks.items() if not v]
        out.append(CheckResult(name, res.passed,
                               f"final residual {res.trace.residual_norms[-1]:.6g}"
                               + (f", failed {failed}" if failed else "")))
    return out


LEMMA_FIXTURES = {
    "a=2^-n, b=1/n": (lambda n: 2.0 ** -n, lambda n: 1.0 / n),
    "a=1/n^2, b=1/n": (lambda n: 1.0 / n ** 2, lambda n: 1.0 / n),
    "a=0 on evens, b=1": (lambda n: 0.0 if n % 2 == 0 else 1.0 / n ** 2, lambda n: 1.0),
}


def lemmas(prefix: int = 10_000) -> list[CheckResult]:
    out = []
    for name, (a, b) in LEMMA_FIXTURES.items():
        sub = extract_halving_subsequence(b, prefix)
        idx = sub.indices
        ratios = values_at(b, idx) / values_at(b, idx - 1)
        rep = check_little_o(a, b, sub, prefix=len(idx), threshold=1e-2)
        ok = bool(np.all(ratios >= 0.5)) and rep.passed
        out.append(CheckResult(f"halving {name}", ok,
                               f"{len(idx)} indices, min ratio {ratios.min():.3f}, tail a/b {rep.tail_max:.2e}"))

        sub = extract_l1_subsequence(a, b, prefix)
        if sub.info["branch"] == "zero_set":
            mass_ok = True
        else:
            mass_ok = all(values_at(b, om).sum() >= 0.5 * values_at(b, mem).sum() * (1 - 1e-12)
                          for mem, om in sub.info["bands"].values())
        rep = check_little_o(a, b, sub, prefix=len(sub), threshold=1e-2)
        out.append(CheckResult(f"l1 {name}", mass_ok and rep.passed,
                               f"{len(sub)} indices ({sub.info['branch']}), tail a/b {rep.tail_max:.2e}"))
    return out


def bounds(seeds: int = 5) -> list[CheckResult]:
    out = infima()
    for r in (1.5, 2.0, 3.0):
        bad = 0
        for seed in range(seeds):
            res = convergence_regime(r, seed)
            bad += len(audit_bounds(res.trace))
        out.append(CheckResult(f"one-step bound r={r:g}", bad == 0, f"{bad} violations over {seeds} runs"))
    for name in ("rate_l2_dense", "rate_l2_gap2", "rate_l3_corollary"):
        res = run_preset(name)
        bad = res.info["bound_violations"]
        out.append(CheckResult(f"one-step bound {name}", not bad, f"{len(bad)} violations"))
    return out


SUITES: dict[str, Callable[[], list[CheckResult]]] = {
    "duality": duality,
    "modulus": modulus,
    "rates": rates,
    "divergence": divergence,
    "lemmas": lemmas,
    "bounds": bounds,
}


def run_suite(name: str) -> list[CheckResult]:
    if name == "all":
        return [res for suite in SUITES.values() for res in suite()]
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; known: {sorted(SUITES) + ['all']}")
    return SUITES[name]()


__all__ = ["CheckResult", "SUITES", "run_suite", "PRESETS"]
