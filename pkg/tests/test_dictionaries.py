import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from awcga.dictionaries import (Dictionary, build_nonsmooth_dictionary, convex_hull_element,
                                weak_argmax)
from awcga.space import SpaceSpec, lp_norm


def basis(dim, r=2.0):
    return Dictionary.standard_basis(SpaceSpec(r, dim))


class TestDictionary:
    def test_standard_basis_elements(self):
        D = basis(3, 3.0)
        assert len(D) == 3
        np.testing.assert_array_equal(D.element(1), [0, 1, 0])
        np.testing.assert_array_equal(D.element(2, -1), [0, 0, -1])
        assert D.check_normalized(SpaceSpec(3.0, 3))

    def test_explicit_list_requires_unit_norm(self):
        s = SpaceSpec(2, 2)
        with pytest.raises(ValueError, match="not unit"):
            Dictionary.from_elements([[1, 1]], s)
        D = Dictionary.from_elements([[1, 1], [3, 0]], s, normalize=True)
        np.testing.assert_allclose(D.elements[0], [2 ** -0.5, 2 ** -0.5])

    def test_rejects_wrong_dimension_and_empty(self):
        with pytest.raises(ValueError):
            Dictionary.from_elements([[1, 0, 0]], SpaceSpec(2, 2))
        with pytest.raises(ValueError):
            Dictionary("explicit_list", 2, 2.0, np.zeros((0, 2)))
        with pytest.raises(ValueError):
            Dictionary("frame", 2, 2.0)

    def test_element_index_range(self):
        with pytest.raises(IndexError):
            basis(2).element(2)

    @given(st.integers(1, 6), st.floats(1.1, 6), st.integers(0, 2 ** 31))
    @settings(max_examples=30, deadline=None)
    def test_text_round_trip(self, n, r, seed):
        s = SpaceSpec(r, 4)
        rows = np.random.default_rng(seed).standard_normal((n, 4))
        D = Dictionary.from_elements(rows, s, normalize=True)
        back = Dictionary.from_text(D.to_text())
        assert back == D
        assert np.max(np.abs(back.elements - D.elements)) <= 1e-15
        assert Dictionary.from_text(basis(5).to_text()) == basis(5)

    def test_evaluate_matches_pairing(self):
        s = SpaceSpec(3, 4)
        rng = np.random.default_rng(0)
        D = Dictionary.from_elements(rng.standard_normal((6, 4)), s, normalize=True)
        F = rng.standard_normal(4)
        np.testing.assert_allclose(D.evaluate(F), [F @ g for g in D.elements])


class TestWeakArgmax:
    def test_examples(self):
        assert weak_argmax([0.9, 0.5, 0.1], basis(3), 1.0)[:3] == (0, 1, 0.9)
        assert weak_argmax([-0.9, 0.5], basis(2), 1.0)[:3] == (0, -1, 0.9)
        sel = weak_argmax([0.9, 0.5], basis(2), 0.5)
        assert sel[:2] == (0, 1)
        # both candidates clear the threshold
        assert 0.9 >= 0.5 * 0.9 and 0.5 >= 0.5 * 0.9

    def test_lowest_admissible_index(self):
        sel = weak_argmax([0.2, -0.6, 0.9], basis(3), 0.5)
        assert sel.index == 1 and sel.sign == -1 and sel.sup == 0.9

    def test_max_policy(self):
        assert weak_argmax([0.2, -0.6, 0.9], basis(3), 0.5, tie_break="max").index == 2

    def test_zero_functional_positive_sign(self):
        sel = weak_argmax([0.0, 0.0], basis(2), 1.0)
        assert (sel.index, sel.sign) == (0, 1)

    @pytest.mark.parametrize("t", [-0.1, 1.1])
    def test_rejects_bad_t(self, t):
        with pytest.raises(ValueError):
            weak_argmax([1.0], basis(1), t)

    def test_brute_force_equivalence(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            dim = int(rng.integers(1, 65))
            F = rng.standard_normal(dim)
            sel = weak_argmax(F, basis(dim), 1.0)
            assert abs(F[sel.index]) == max(abs(v) for v in F)

    @given(st.lists(st.floats(-10, 10), min_size=1, max_size=20), st.floats(0, 1))
    @settings(max_examples=200, deadline=None)
    def test_selection_inequality(self, values, t):
        D = basis(len(values))
        sel = weak_argmax(values, D, t)
        g = D.element(sel.index, sel.sign)
        sup = max(abs(v) for v in values)
        assert float(np.dot(values, g)) - t * sup >= -1e-12


class TestConvexHull:
    def test_examples(self):
        D = basis(4)
        np.testing.assert_array_equal(convex_hull_element([1, 0, 0, 0], D), [1, 0, 0, 0])
        v = convex_hull_element(np.full(4, 0.25), D)
        assert lp_norm(v, 1) == pytest.approx(1)
        half = convex_hull_element([0.2, 0.3], D)
        for r in (1, 1.5, 2, 5):
            assert lp_norm(half, r) <= 0.5 + 1e-15

    def test_errors(self):
        D = basis(3)
        with pytest.raises(ValueError):
            convex_hull_element([-0.1, 0.5], D)
        with pytest.raises(ValueError):
            convex_hull_element([0.6, 0.6], D)
        convex_hull_element([0.5, 0.5 + 1e-13], D)

    def test_explicit_dictionary(self):
        s = SpaceSpec(2, 2)
        D = Dictionary.from_elements([[1, 1], [1, -1]], s, normalize=True)
        np.testing.assert_allclose(convex_hull_element([0.5, 0.5], D), [2 ** -0.5, 0])


class TestNonsmoothDictionary:
    def test_dim2_hand_construction(self):
        con = build_nonsmooth_dictionary(2)
        np.testing.assert_array_equal(con.f, [1, 0])
        np.testing.assert_array_equal(con.F, [1, 1])
        np.testing.assert_array_equal(con.F_prime, [1, -1])
        np.testing.assert_allclose(con.g0, [0, 1])
        np.testing.assert_allclose(con.g1, [-0.5, 0.5])
        assert len(con.dictionary) == 3
        np.testing.assert_allclose(con.dictionary.element(2), [0.5, -0.5])
        np.testing.assert_allclose(con.g0 - 2 * con.g1, con.f)
        assert con.F @ con.g0 == 1 and con.F_prime @ con.g0 == -1

    def test_mu_zero_is_optimal(self):
        con = build_nonsmooth_dictionary(2)
        mu = np.linspace(-2, 2, 40001)
        vals = np.abs(con.f[None, :] - mu[:, None] * con.g0[None, :]).sum(axis=1)
        assert mu[np.argmin(vals)] == pytest.approx(0, abs=1e-12)
        assert vals.min() == 1

    @pytest.mark.parametrize("dim", [2, 3, 5, 16])
    def test_invariants(self, dim):
        con = build_nonsmooth_dictionary(dim)
        for g in con.dictionary.elements:
            assert lp_norm(g, 1) == pytest.approx(1, abs=1e-12)
        vals = con.dictionary.evaluate(con.F)
        assert abs(vals[1]) <= 1e-12
        assert np.all(np.abs(vals[2:]) <= 1e-12)
        assert con.F @ con.f == 1 == con.F_prime @ con.f
        assert np.linalg.matrix_rank(con.dictionary.elements) == dim
        assert con.excluded.tolist() == [1]

    def test_rejects_small_dim(self):
        with pytest.raises(ValueError):
            build_nonsmooth_dictionary(1)
