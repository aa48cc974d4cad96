"""Ready-made runs: divergence constructions, the ell_1 trap and rate experiments.

Each scenario builds its element, dictionary, schedules and realization
policy, runs the engine, and checks the closed-form claims that come with the
construction.  ``bound_E_next`` evaluates the one-step estimate of E_{n+1}
from ||f_n|| that is attached to canonical traces.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .dictionaries import Dictionary, build_nonsmooth_dictionary, convex_hull_element
from .engine import RealizationPolicy, Trace, run
from .engine import residual as residual_at
from .errors import BoundViolation
from .schedules import Adaptive, Constant, Power, Schedule, ScheduleSet, Scripted, Subsequence
from .space import SpaceSpec, inf_psi, lp_norm, norming_functional

EXACT_TOL = 1e-10


# ---------------------------------------------------------------- bounds

@dataclass(frozen=True)
class BoundContext:
    """Certificate (A, epsilon) for f: some f_eps with ||f - f_eps|| <= epsilon
    and f_eps / A in A_1(D)."""

    A: float
    epsilon: float
    space: SpaceSpec
    f_norm: float
    eta0: float = 0.0

    def __post_init__(self):
        if not self.A > 0:
            raise ValueError("A must be positive")
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")

    @property
    def c(self) -> float:
        """p (2 gamma (q-1))^(1/q) (2 + eta0) ||f||, the factor in beta_n <= c (delta+eta)^(1/p)."""
        s = self.space
        return s.p * (2 * s.gamma * (s.q - 1)) ** (1 / s.q) * (2 + self.eta0) * self.f_norm

    def beta(self, delta: float, eta: float) -> float:
        return self.c * (delta + eta) ** (1 / self.space.p)

    def bound(self, residual_norm, n, delta, eta, t_next) -> float:
        return bound_E_next(residual_norm, self, n, delta, eta, t_next)


def bound_E_next(residual_norm: float, ctx: BoundContext, n: int, delta: float, eta: float,
                 t_next: float) -> float:
    """Upper bound on E_{n+1} given ||f_n|| and the step-n data.

    ||f_n|| inf_lam (1 + delta - lam t/A (1 - delta - (beta + eps)/||f_n||)
    + 2 gamma (lam/||f_n||)^q), with beta <= c (delta + eta)^(1/p).
    """
    if not residual_norm > 0:
        raise ValueError("residual norm must be positive")
    s = ctx.space
    slope = t_next / ctx.A * (1 - delta - (ctx.beta(delta, eta) + ctx.epsilon) / residual_norm)
    if slope <= 0:
        return residual_norm * (1 + delta)
    gain = inf_psi(2 * s.gamma * residual_norm ** (-s.q), slope, s.q).value
    return residual_norm * (1 + delta + gain)


def standard_basis_certificate(f, space: SpaceSpec, eta0: float = 0.0) -> BoundContext:
    """f / ||f||_1 is a convex combination of +-e_j, so A = ||f||_1 and epsilon = 0."""
    f = np.asarray(f, dtype=float)
    return BoundContext(lp_norm(f, 1.0), 0.0, space, lp_norm(f, space.r), eta0)


def audit_bounds(trace: Trace, slack: float = 1e-8) -> list[int]:
    """Steps n+1 at which E_{n+1} exceeds the recorded bound by more than ``slack``."""
    bad = []
    E = trace.errors
    bounds = np.concatenate([[trace.initial_bound], trace.column("bound_E_next")])
    for n in range(len(trace.records)):
        b = bounds[n]
        if np.isfinite(b) and E[n + 1] > b + slack:
            bad.append(n + 1)
    return bad


@dataclass
class ScenarioResult:
    name: str
    trace: Trace
    checks: dict = field(default_factory=dict)
    info: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(bool(v) for v in self.checks.values())

    def summary(self) -> str:
        state = "ok" if self.passed else "FAILED " + ",".join(k for k, v in self.checks.items() if not v)
        return f"{self.name}: {self.trace.summary()} [{state}]"


# ---------------------------------------------------------------- necessity

@dataclass(frozen=True)
class NecessityInstance:
    """The ell_q element and index split of the divergence construction.

    Coordinates are indexed 0..dim-1 with e_0 and e_1 playing their special
    roles.  Lambda_1 holds the steps n >= 2 with delta_{n-1} >= alpha t_n^p or
    eta_{n-1} >= alpha t_n^p; 1 always belongs to Lambda_2.
    """

    space: SpaceSpec
    schedules: ScheduleSet
    alpha: float
    lambda1: np.ndarray
    lambda2: np.ndarray
    a: np.ndarray
    f: np.ndarray

    @property
    def truncation_dim(self) -> int:
        return self.space.dim

    @classmethod
    def build(cls, space: SpaceSpec, schedules: ScheduleSet, alpha: float, a=None) -> "NecessityInstance":
        if not alpha > 0:
            raise ValueError("alpha must be positive")
        if schedules.delta.adaptive or schedules.eta.adaptive:
            raise ValueError("the construction needs non-adaptive schedules")
        q, p = space.q, space.p
        lam1, lam2 = [], [1]
        for n in range(2, space.dim):
            t = schedules.weakness(n)
            if (schedules.perturbation(n - 1) >= alpha * t ** p
                    or schedules.error(n - 1) >= alpha * t ** p):
                lam1.append(n)
            else:
                lam2.append(n)
        lam1, lam2 = np.array(lam1, dtype=int), np.array(lam2, dtype=int)
        if lam1.size == 0:
            raise ValueError("Lambda_1 is empty on the truncation; use the finite-branch preset")
        if a is None:
            a = np.full(lam1.size, lam1.size ** (-1 / q))
        a = np.asarray(a, dtype=float)
        if a.shape != lam1.shape or np.any(a < 0):
            raise ValueError("a must be nonnegative with one entry per Lambda_1 index")
        if abs(np.sum(a ** q) - 1) > 1e-12:
            raise ValueError("a must satisfy sum a_j^q = 1")
        if np.any(a > alpha ** (1 / q) * (1 + 1e-12)):
            raise ValueError("a_j must not exceed alpha^(1/q); enlarge the truncation or alpha")
        f = np.zeros(space.dim)
        f[lam1] = a
        t2 = np.array([schedules.weakness(j) for j in lam2])
        f[lam2] = alpha ** (1 / q) * t2 ** (p / q)
        return cls(space, schedules, float(alpha), lam1, lam2, a, f)

    def residual(self, n: int) -> np.ndarray:
        """Closed form of f_n: eta_n^(1/q) e_1 + sum_L1 a_j e_j + alpha^(1/q) sum_{L2, j > n} t_j^(p/q) e_j."""
        if n == 0:
            return self.f.copy()
        q = self.space.q
        r = self.f.copy()
        r[self.lambda2[self.lambda2 <= n]] = 0.0
        r[1] = self.schedules.error(n) ** (1 / q)
        return r

    def functional_first(self) -> np.ndarray:
        """F_0: the norming functional of f."""
        return norming_functional(self.f, self.space)

    def functional(self, n: int, residual_norm: float) -> np.ndarray:
        """The scripted F_{n-1} for n >= 2."""
        q, p = self.space.q, self.space.p
        sch = self.schedules
        d, e = sch.perturbation(n - 1), sch.error(n - 1)
        F = np.zeros(self.space.dim)
        F[0] = d ** (1 / p)
        F[self.lambda1] = self.a ** (q / p)
        live = self.lambda2[self.lambda2 > n - 1]
        F[live] = self.alpha ** (1 / p) * np.array([sch.weakness(j) for j in live])
        F[1] = e ** (1 / p)
        return F / ((1 + d) ** (1 / p) * residual_norm ** (q / p))


def necessity_scenario(inst: NecessityInstance, n_max: int = 100) -> ScenarioResult:
    """Run the scripted realization that keeps ||f_n||_q >= 1 for ever.

    Steps in Lambda_2 take e_n; steps in Lambda_1 take whichever of e_0, e_1
    has the larger functional value (recorded as the "delta" or "eta" branch).
    """
    s, sch = inst.space, inst.schedules
    late = inst.lambda2[(inst.lambda2 <= n_max)]
    if late.size and late.max() >= s.dim:
        raise ValueError("a Lambda_2 step falls outside the truncation")
    in_l2 = set(int(j) for j in inst.lambda2)
    branches = {}

    def functional(ctx):
        if ctx.n == 1:
            return inst.functional_first()
        return inst.functional(ctx.n, ctx.residual_norm)

    def select(ctx):
        if ctx.n in in_l2:
            return ctx.n, 1
        F = ctx.functional
        branches[ctx.n] = "delta" if F[0] >= F[1] else "eta"
        return (0 if F[0] >= F[1] else 1), 1

    def approximant(ctx):
        return inst.f - inst.residual(ctx.n)

    policy = RealizationPolicy(functional, select, approximant)
    trace = run(inst.f, Dictionary.standard_basis(s), s, sch, policy, n_max=n_max, conv_tol=0.0)
    q = s.q
    worst = max(np.max(np.abs(residual_at(trace, n) - inst.residual(n)))
                for n in range(1, len(trace) + 1))
    norms_q = trace.column("residual_norm") ** q
    min_margin = min(min(r.margins.values()) for r in trace.records)
    checks = {
        "closed_form": worst <= EXACT_TOL,
        "norm_floor": bool(np.all(norms_q >= 1 - EXACT_TOL)),
        "margins": min_margin >= -1e-9,
        "not_converged": trace.verdict == "not_converged",
    }
    return ScenarioResult("necessity", trace, checks, {
        "branches": branches, "closed_form_error": worst, "min_margin": min_margin,
        "min_norm_q": float(norms_q.min())})


def default_necessity_instance(dim: int = 64, r: float = 1.5) -> NecessityInstance:
    """t = 1, delta = eta = 0.2, alpha = 0.1 in ell_r^dim."""
    s = SpaceSpec(r, dim)
    sched = ScheduleSet(Constant(1.0), Constant(0.2), Constant(0.2))
    return NecessityInstance.build(s, sched, 0.1)


def finite_branch_scenario(n_max: int = 200, r: float = 2.0, t: Schedule | None = None,
                           dim: int | None = None) -> ScenarioResult:
    """WCGA counterexample for sum t_n^p < infinity.

    f = e_0 + sum_j t_j^(p/q) e_j; the realization takes phi_n = e_n, which is
    admissible because F_{n-1}(e_n) = t_n sup, and never touches e_0.
    """
    dim = dim or n_max + 1
    if dim <= n_max:
        raise ValueError("dim must exceed n_max")
    s = SpaceSpec(r, dim)
    t = t or Scripted(tuple(1.0 / np.arange(1, dim + 1)))
    p, q = s.p, s.q
    f = np.zeros(dim)
    f[0] = 1.0
    f[1:] = np.array([t(j) for j in range(1, dim)]) ** (p / q)
    sched = ScheduleSet(t, Constant(0.0), Constant(0.0), 0.0)
    policy = RealizationPolicy(selection=lambda ctx: (ctx.n, 1))
    trace = run(f, Dictionary.standard_basis(s), s, sched, policy, n_max=n_max, conv_tol=0.0)
    tail = np.array([lp_norm(f[n + 1:], s.r) for n in range(1, len(trace) + 1)])
    expected = (1 + tail ** s.r) ** (1 / s.r)
    checks = {
        "norm_floor": bool(np.all(trace.column("residual_norm") >= 1 - EXACT_TOL)),
        "closed_form": bool(np.allclose(trace.column("residual_norm"), expected, rtol=0, atol=1e-10)),
        "not_converged": trace.verdict == "not_converged",
    }
    return ScenarioResult("necessity_finite", trace, checks,
                          {"sum_t_p": float(sum(t(j) ** p for j in range(1, dim)))})


# ---------------------------------------------------------------- unbounded eta

def _tails(a: np.ndarray, q: float) -> np.ndarray:
    """tails[m] = (sum_{j > m} a_j^q)^(1/q) for m = 0..len(a), a being 1-indexed."""
    return np.concatenate([np.cumsum((a ** q)[::-1])[::-1], [0.0]]) ** (1 / q)


def _tail_failure(tails: np.ndarray, spikes) -> tuple | None:
    for k, n in enumerate(spikes, start=1):
        if tails[n] < 1 / (k + 1):
            return k, n
    return None


def unbounded_eta_coefficients(space: SpaceSpec, length: int, spikes=(),
                               max_shift: int = 1000) -> np.ndarray:
    """a_j proportional to (j + s)^(-2/r), j = 1..length, with ||a||_r = 1.

    s is the smallest nonnegative integer for which the tail condition
    ||a_{n_k+1..}||_r >= 1/(k+1) holds at every spike.
    """
    j = np.arange(1, length + 1, dtype=float)
    spikes = [n for n in spikes if n < length]
    r = space.r
    for shift in range(max_shift + 1):
        a = (j + shift) ** (-2 / r)
        a /= np.sum(a ** r) ** (1 / r)
        if _tail_failure(_tails(a, r), spikes) is None:
            return a
    raise ValueError("no shift up to max_shift satisfies the tail condition")


def unbounded_eta_scenario(s: SpaceSpec | None = None, spikes: Subsequence | None = None,
                           a=None, n_max: int = 200, t_after_spike=None) -> ScenarioResult:
    """Divergence driven by an unbounded error sequence.

    Dictionary element e_n is coordinate n-1.  phi_n = e_n at every step;
    G_n = sum_{j<=n} a_j e_j off the spikes and G_n = 0 on them, which is
    admissible because (1 + eta_{n_k}) E_{n_k} >= ||f||.

    Right after a spike the residual is f again, so e_n is only a weak choice
    with t_n <= (a_n / a_1)^(r-1).  By default t takes exactly that value
    there and 1 elsewhere; pass ``t_after_spike=1.0`` to see the selection
    condition fail.
    """
    s = s or SpaceSpec(2.0, 2 * n_max)
    if s.dim <= n_max:
        raise ValueError("dim must exceed n_max")
    spikes = spikes or Subsequence.arithmetic(2, n_max // 2)
    spike_list = [n for n in spikes if n <= n_max]
    if a is None:
        a = unbounded_eta_coefficients(s, s.dim, spike_list)
    a = np.asarray(a, dtype=float)
    r = s.r
    if a.shape != (s.dim,) or np.any(a <= 0) or np.any(np.diff(a) > 0):
        raise ValueError("a must be positive and nonincreasing with one entry per coordinate")
    if abs(np.sum(a ** r) - 1) > 1e-12:
        raise ValueError("a must satisfy sum a_j^r = 1")
    tails = _tails(a, r)
    fail = _tail_failure(tails, spike_list)
    if fail is not None:
        k, n = fail
        raise ValueError(f"tail condition fails at spike k={k} (n={n}): "
                         f"{tails[n]:.3e} < {1 / (k + 1):.3e}")

    eta = np.zeros(n_max + 1)
    for k, n in enumerate(spike_list, start=1):
        eta[n] = k
    after = {n + 1 for n in spike_list}
    tv = np.ones(n_max + 1)
    for n in after:
        if n <= n_max:
            tv[n] = (a[n - 1] / a[0]) ** (r - 1) if t_after_spike is None else t_after_spike
    sched = ScheduleSet(Scripted(tuple(tv[1:])), Constant(0.0),
                        Scripted(tuple(eta[1:])), float(max(eta.max(), 0.0)))
    f = a.copy()
    spike_set = set(spike_list)

    def approximant(ctx):
        if ctx.n in spike_set:
            return np.zeros(s.dim)
        G = np.zeros(s.dim)
        G[: ctx.n] = a[: ctx.n]
        return G

    policy = RealizationPolicy(selection=lambda ctx: (ctx.n - 1, 1), approximant=approximant)
    trace = run(f, Dictionary.standard_basis(s), s, sched, policy, n_max=n_max, conv_tol=0.0)
    norms = trace.column("residual_norm")
    f_norm = lp_norm(f, s.r)
    at_spikes = np.array([norms[n - 1] for n in spike_list if n <= len(trace)])
    off = [n for n in range(1, len(trace) + 1) if n not in spike_set]
    off_err = max((abs(norms[n - 1] - tails[n]) for n in off), default=0.0)
    checks = {
        "spikes_restore_norm": bool(np.all(np.abs(at_spikes - f_norm) <= 1e-12)),
        "off_spike_tail": off_err <= 1e-12,
        "not_converged": trace.verdict == "not_converged",
    }
    return ScenarioResult("unbounded_eta", trace, checks,
                          {"spikes": spike_list, "a": a, "tails": tails})


# ---------------------------------------------------------------- nonsmooth

def l1_line_distance(f: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    """min over mu of ||f - mu b||_1, exactly, by scanning the breakpoints f_i / b_i."""
    nz = b != 0
    cand = np.concatenate([[0.0], f[nz] / b[nz]])
    vals = np.array([np.sum(np.abs(f - m * b)) for m in cand])
    i = int(np.argmin(vals))
    return float(vals[i]), float(cand[i])


def nonsmooth_scenario(dim: int = 2, n_max: int = 50) -> ScenarioResult:
    """WCGA in ell_1 stuck at f = e_0: F_{n-1} = F, phi_n = g_0, G_n = 0."""
    con = build_nonsmooth_dictionary(dim)
    s = SpaceSpec.l1(dim)

    def chebyshev(ctx):
        if ctx.basis.shape[0] != 1:
            raise ValueError("the trap realization keeps a one-dimensional span")
        return l1_line_distance(con.f, ctx.basis[0])[0]

    policy = RealizationPolicy(functional=lambda ctx: con.F, selection=lambda ctx: (0, 1),
                               approximant=lambda ctx: np.zeros(dim), chebyshev_error=chebyshev)
    trace = run(con.f, con.dictionary, s, ScheduleSet.wcga(), policy, n_max=n_max, conv_tol=0.0)
    coef = np.linalg.lstsq(np.stack([con.g0, con.g1]).T, con.f, rcond=None)[0]
    checks = {
        "residual_constant": bool(np.all(trace.column("residual_norm") == 1.0)),
        "two_norming_functionals": bool(con.F @ con.f == 1.0 and con.F_prime @ con.f == 1.0
                                        and not np.array_equal(con.F, con.F_prime)),
        "functionals_disagree_on_g": bool(con.F @ con.g > con.F_prime @ con.g),
        "f_in_span_g0_g1": bool(np.allclose(np.stack([con.g0, con.g1]).T @ coef, con.f, atol=1e-12)),
    }
    return ScenarioResult("nonsmooth", trace, checks, {"construction": con, "f_coefficients": coef})


# ---------------------------------------------------------------- rates

@dataclass
class RateReport:
    n: np.ndarray
    observed: np.ndarray
    bound: np.ndarray
    N: np.ndarray
    C: float
    eta0: float

    @property
    def ratio(self) -> np.ndarray:
        return self.observed / self.bound

    @property
    def violations(self) -> list[int]:
        return [int(n) for n in self.n[self.observed > self.bound]]


def rate_bound(trace: Trace, sched: ScheduleSet, subseq: Subsequence, eta0: float | None = None) -> RateReport:
    """||f_n|| against 8 (1 + eta0) gamma^(1/q) (1 + sum_{k<=N(n)} t_{n_k}^p)^(-1/p).

    eta0 defaults to the largest eta applied in the run.
    """
    s = trace.space
    if eta0 is None:
        eta0 = float(max(trace.column("eta").max(initial=0.0), 0.0))
    C = 8 * (1 + eta0) * s.gamma ** (1 / s.q)
    n = np.arange(1, len(trace) + 1)
    N = np.array([subseq.count_upto(k) for k in n])
    tp = np.array([sched.weakness(int(j)) ** s.p for j in subseq.indices])
    csum = np.concatenate([[0.0], np.cumsum(tp)])
    bound = C * (1 + csum[N]) ** (-1 / s.p)
    return RateReport(n, trace.column("residual_norm"), bound, N, C, eta0)


def adaptive_schedules(space: SpaceSpec, t: Schedule, subseq: Subsequence | None, f_norm: float,
                       base_delta: Schedule = Constant(0.0),
                       base_eta: Schedule = Constant(0.0)) -> ScheduleSet:
    delta = Adaptive("delta", space, t, subseq, base_delta, f_norm)
    eta = Adaptive("eta", space, t, subseq, base_eta, f_norm)
    return ScheduleSet(t, delta, eta)


def rate_scenario(f_weights, s: SpaceSpec, sched: ScheduleSet, subsel: Subsequence,
                  n_max: int, name: str = "rate", raise_on_violation: bool = True) -> ScenarioResult:
    """AWCGA of a certified A_1(D) element with the rate and one-step bounds audited."""
    D = Dictionary.standard_basis(s)
    f = convex_hull_element(f_weights, D)
    ctx = BoundContext(1.0, 0.0, s, lp_norm(f, s.r), sched.eta0)
    trace = run(f, D, s, sched, RealizationPolicy(), n_max=n_max, conv_tol=0.0, bound_ctx=ctx)
    report = rate_bound(trace, sched, subsel)
    bad_steps = audit_bounds(trace)
    if raise_on_violation and report.violations:
        raise BoundViolation(f"{name}: rate bound exceeded at steps {report.violations[:5]}")
    checks = {"rate_bound": not report.violations, "one_step_bound": not bad_steps}
    return ScenarioResult(name, trace, checks, {"report": report, "bound_violations": bad_steps})


def flat_weights(m: int) -> np.ndarray:
    return np.full(m, 1.0 / m)


def rate_l2_dense(m: int = 256) -> ScenarioResult:
    s = SpaceSpec(2.0, m)
    sub = Subsequence(np.arange(1, m + 1))
    sched = adaptive_schedules(s, Constant(1.0), sub, lp_norm(flat_weights(m), 2))
    return rate_scenario(flat_weights(m), s, sched, sub, m - 1, "rate_l2_dense")


def rate_l2_gap2(m: int = 256, off_eta: float = 0.5) -> ScenarioResult:
    """Adaptive delta/eta only on even steps; eta = ``off_eta`` on the others."""
    s = SpaceSpec(2.0, m)
    sub = Subsequence.arithmetic(2, (m - 1) // 2)
    sched = adaptive_schedules(s, Constant(1.0), sub, lp_norm(flat_weights(m), 2),
                               base_eta=Constant(off_eta))
    return rate_scenario(flat_weights(m), s, sched, sub, m - 1, "rate_l2_gap2")


def corollary_weights(dim: int, decay: float = 1.2) -> np.ndarray:
    """a_j proportional to j^(-decay), j = 1..dim, with sum a_j = 1."""
    a = np.arange(1, dim + 1, dtype=float) ** (-decay)
    return a / a.sum()


def rate_l3_corollary(dim: int = 256, n_max: int = 200) -> ScenarioResult:
    s = SpaceSpec(3.0, dim)
    w = corollary_weights(dim)
    sub = Subsequence(np.arange(1, n_max + 1))
    sched = adaptive_schedules(s, Constant(1.0), sub, lp_norm(w, 3.0))
    return rate_scenario(w, s, sched, sub, n_max, "rate_l3_corollary")


def convergence_regime(r: float, seed: int, dim: int = 32, n_max: int = 2000, t: float = 0.5,
                       conv_tol: float = 1e-3) -> ScenarioResult:
    """t constant, delta_n = eta_n = 1/n, worst admissible error injection."""
    s = SpaceSpec(r, dim)
    f = np.random.default_rng(seed).standard_normal(dim)
    sched = ScheduleSet(Constant(t), Power(-1.0), Power(-1.0))
    ctx = standard_basis_certificate(f, s, sched.eta0)
    trace = run(f, Dictionary.standard_basis(s), s, sched, RealizationPolicy(), n_max=n_max,
                conv_tol=conv_tol, bound_ctx=ctx)
    checks = {"converged": trace.verdict == "converged", "one_step_bound": not audit_bounds(trace)}
    return ScenarioResult(f"convergence_r{r:g}_seed{seed}", trace, checks)


PRESETS: dict[str, Callable[[], ScenarioResult]] = {
    "necessity": lambda: necessity_scenario(default_necessity_instance(), 100),
    "necessity_finite": lambda: finite_branch_scenario(),
    "unbounded_eta": lambda: unbounded_eta_scenario(),
    "nonsmooth": lambda: nonsmooth_scenario(),
    "rate_l2_dense": rate_l2_dense,
    "rate_l2_gap2": rate_l2_gap2,
    "rate_l3_corollary": rate_l3_corollary,
}


def run_preset(name: str) -> ScenarioResult:
    try:
        return PRESETS[name]()
    except KeyError:
        raise KeyError(f"unknown scenario preset {name!r}; known: {sorted(PRESETS)}") from None
