import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from awcga.dictionaries import Dictionary, convex_hull_element
from awcga.engine import CSV_FIELDS, RealizationPolicy, residual, run, validate_step
from awcga.errors import ContractViolation
from awcga.schedules import Constant, Power, ScheduleSet
from awcga.space import SpaceSpec, lp_norm, norming_functional


def l2(dim):
    s = SpaceSpec(2.0, dim)
    return s, Dictionary.standard_basis(s)


class TestWCGA:
    def test_three_coordinate_example(self):
        s, D = l2(3)
        f = np.array([0.5, 0.3, 0.2])
        tr = run(f, D, s, ScheduleSet.wcga(), n_max=5, conv_tol=1e-14)
        assert tr.column("chosen_id").tolist() == [0, 1, 2]
        np.testing.assert_allclose(tr.column("residual_norm"), [np.sqrt(0.13), 0.2, 0], atol=1e-15)
        assert tr.verdict == "converged" and tr.verdict_step == 3

    def test_greedy_order_is_optimal_by_brute_force(self):
        # among all selection orders, greedy leaves the smallest residual after each step
        f = np.array([0.5, 0.3, 0.2])
        s, D = l2(3)
        tr = run(f, D, s, ScheduleSet.wcga(), n_max=3, conv_tol=0)
        for n in (1, 2):
            best = min(np.linalg.norm(np.delete(f, list(c))) for c in itertools.combinations(range(3), n))
            assert tr.residual_norms[n] == pytest.approx(best)

    @pytest.mark.parametrize("m", [16, 256])
    def test_flat_element(self, m):
        s, D = l2(m)
        f = convex_hull_element(np.full(m, 1 / m), D)
        tr = run(f, D, s, ScheduleSet.wcga(), n_max=m - 1, conv_tol=0)
        n = np.arange(1, m)
        np.testing.assert_allclose(tr.column("residual_norm"), np.sqrt(m - n) / m, atol=1e-8)

    def test_coordinate_sorting_equivalence(self):
        rng = np.random.default_rng(0)
        for _ in range(40):
            dim = int(rng.integers(2, 17))
            s, D = l2(dim)
            f = rng.standard_normal(dim)
            tr = run(f, D, s, ScheduleSet.wcga(), n_max=dim, conv_tol=0)
            order = np.argsort(-np.abs(f), kind="stable")
            for n, rec in enumerate(tr.records, 1):
                assert rec.residual_norm == pytest.approx(np.linalg.norm(f[order[n:]]), abs=1e-12)

    def test_errors_nonincreasing_and_bounded(self):
        rng = np.random.default_rng(2)
        for r in (1.5, 3.0):
            s = SpaceSpec(r, 12)
            D = Dictionary.from_elements(rng.standard_normal((30, 12)), s, normalize=True)
            sched = ScheduleSet(Constant(0.7), Power(-1.0), Power(-1.0))
            tr = run(rng.standard_normal(12), D, s, sched, n_max=40, conv_tol=1e-8)
            E = tr.errors
            assert np.all(np.diff(E) <= 1e-12)
            assert np.all(tr.column("residual_norm") <= (1 + sched.eta0) * tr.column("E_n") + 1e-9)

    def test_repeated_selection_keeps_E(self):
        # F = (0.6, 0.8, 0) keeps e_0 admissible for t = 0.5 and descends with delta = 0.5
        s, D = l2(3)
        pol = RealizationPolicy(functional=lambda ctx: np.array([0.6, 0.8, 0.0]),
                                selection=lambda ctx: (0, 1))
        sched = ScheduleSet(Constant(0.5), Constant(0.5), Constant(0.0))
        tr = run([1.0, 1.0, 0.0], D, s, sched, pol, n_max=4, conv_tol=0)
        assert tr.verdict == "not_converged" and len(tr) == 4
        assert np.all(tr.column("E_n") == 1.0)


class TestDeterminismAndCsv:
    def test_byte_identical(self):
        s = SpaceSpec(3, 8)
        D = Dictionary.from_elements(np.random.default_rng(1).standard_normal((20, 8)), s, normalize=True)
        f = np.random.default_rng(2).standard_normal(8)
        sched = ScheduleSet(Constant(0.8), Constant(0.0), Constant(0.1))
        a = run(f, D, s, sched, n_max=20).to_csv()
        b = run(f, D, s, sched, n_max=20).to_csv()
        assert a == b
        assert a.splitlines()[0] == ",".join(CSV_FIELDS)

    def test_csv_precision(self, tmp_path):
        s, D = l2(3)
        tr = run([0.5, 0.3, 0.2], D, s, ScheduleSet.wcga(), n_max=1)
        text = tr.to_csv(tmp_path / "t.csv")
        assert (tmp_path / "t.csv").read_text() == text
        row = text.splitlines()[1].split(",")
        assert float(row[4]) == tr.records[0].residual_norm
        assert row[0] == "1" and row[6] == "0"


class TestValidateStep:
    def setup_method(self):
        self.s = SpaceSpec(2.0, 2)
        self.f = np.array([1.0, 0.0])

    def margins(self, F, delta=0.0):
        phi = np.array([1.0, 0.0])
        return validate_step(self.f, F, phi, np.zeros(2), self.f, 1.0, delta, 0.0, 1.0, self.s, sup=abs(F).max())

    def test_exact_functional(self):
        m = self.margins(norming_functional(self.f, self.s))
        assert all(abs(v) <= 1e-15 for v in m.values())

    def test_scaled_functional_fails_norm(self):
        m = self.margins(1.01 * np.array([1.0, 0.0]))
        assert m["norm"] == pytest.approx(-0.01)

    @pytest.mark.parametrize("delta", [0.01, 0.1, 0.5])
    @pytest.mark.parametrize("p", [2.0, 3.0, 6.0])
    def test_shrunk_functional_passes_descent(self, delta, p):
        F = np.array([1.0, 0.0]) / (1 + delta) ** (1 / p)
        assert (1 + delta) ** (1 / p) * (1 - delta) <= 1
        m = self.margins(F, delta)
        assert m["descent"] >= 0 and m["norm"] >= 0

    def test_requires_sup_or_dictionary(self):
        s, D = l2(2)
        m = validate_step(self.f, np.array([1.0, 0]), np.array([0, 1.0]), np.zeros(2), self.f,
                          0.5, 0, 0, 1.0, s, dictionary=D)
        assert m["selection"] == pytest.approx(-0.5)


class TestContracts:
    def test_scripted_violation_raises_with_trace(self):
        s, D = l2(2)
        pol = RealizationPolicy(functional=lambda ctx: 1.01 * norming_functional(ctx.residual, ctx.space))
        with pytest.raises(ContractViolation) as exc:
            run([1.0, 0.5], D, s, ScheduleSet.wcga(), pol, n_max=3)
        assert exc.value.condition == "norm" and exc.value.step == 1
        assert exc.value.trace.verdict == "aborted"

    def test_record_mode(self):
        s, D = l2(2)
        pol = RealizationPolicy(selection=lambda ctx: (1, 1))
        tr = run([1.0, 0.5], D, s, ScheduleSet.wcga(), pol, n_max=3, on_violation="record")
        assert tr.verdict == "aborted" and "selection" in tr.reason and len(tr) == 1

    def test_approximant_outside_span(self):
        s, D = l2(2)
        pol = RealizationPolicy(approximant=lambda ctx: np.array([0.0, 1.0]))
        with pytest.raises(ContractViolation) as exc:
            run([1.0, 0.5], D, s, ScheduleSet.wcga(), pol, n_max=2)
        assert exc.value.condition == "span"

    def test_argument_checks(self):
        s, D = l2(2)
        with pytest.raises(ValueError):
            run([0.0, 0.0], D, s, ScheduleSet.wcga())
        with pytest.raises(ValueError):
            run([1.0, 0.0], D, s, ScheduleSet.wcga(), n_max=0)
        with pytest.raises(ValueError):
            run([1.0, 0.0, 0.0], D, s, ScheduleSet.wcga())


class TestResidual:
    def test_rebuild(self):
        s = SpaceSpec(3, 6)
        rng = np.random.default_rng(3)
        D = Dictionary.from_elements(rng.standard_normal((10, 6)), s, normalize=True)
        f = rng.standard_normal(6)
        tr = run(f, D, s, ScheduleSet(Constant(0.9), Constant(0), Constant(0.2)), n_max=6, conv_tol=1e-6)
        np.testing.assert_array_equal(residual(tr, 0), f)
        for n in range(1, len(tr) + 1):
            assert lp_norm(residual(tr, n), 3) == pytest.approx(tr.records[n - 1].residual_norm, rel=1e-14)
        if tr.verdict == "converged":
            assert lp_norm(residual(tr, len(tr)), 3) <= 1e-6
        with pytest.raises(IndexError):
            residual(tr, len(tr) + 1)

    def test_converged_residual_below_tol(self):
        s, D = l2(4)
        tr = run([1.0, 2.0, 3.0, 4.0], D, s, ScheduleSet.wcga(), n_max=10, conv_tol=1e-12)
        assert tr.verdict == "converged"
        assert np.linalg.norm(residual(tr, len(tr))) <= 1e-12


@given(st.integers(0, 2 ** 31), st.sampled_from([1.5, 2.0, 3.0]), st.floats(0.2, 1.0), st.floats(0, 1))
@settings(max_examples=25, deadline=None)
def test_canonical_runs_satisfy_step_conditions(seed, r, t, eta):
    rng = np.random.default_rng(seed)
    s = SpaceSpec(r, 6)
    D = Dictionary.from_elements(rng.standard_normal((12, 6)), s, normalize=True)
    tr = run(rng.standard_normal(6), D, s, ScheduleSet(Constant(t), Constant(0.0), Constant(eta)),
             n_max=15, conv_tol=1e-8)
    assert tr.verdict != "aborted"
    for rec in tr.records:
        assert min(rec.margins.values()) >= -1e-9 * max(1, tr.residual_norms[0])
