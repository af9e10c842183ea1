import itertools
import math
import time
import warnings

import numpy as np
import pytest
import sympy
from hypothesis import given, strategies as st

from conftest import CAT, CAT_T, ROT4, SALEM
from toruslab.errors import ClassificationError, ConstructionError, RejectedInput, UnsupportedStructure
from toruslab.polynomials import (IntPolynomial, char_poly, cyclotomic, cyclotomic_factors, euler_phi,
                                  exact_rank, reciprocal_reduce, sturm_count, unit_circle_pairs)
from toruslab.spectral import (CENTRAL_SPIN, HYPERBOLIC, JORDAN, NONERGODIC, HypothesisWarning,
                               choose_complements, classify, is_ergodic, precise_invariant_basis,
                               rotation_vector, span_condition, splitting, stable_eigenvector)
from toruslab.torus import IntMatrix

SALEM_POLY = IntPolynomial((1, -1, -1, -1, 1))


def root_of_unity_oracle(rows) -> bool:
    """Exact: some eigenvalue has order k with phi(k) <= d iff M^k - I is singular."""
    M = sympy.Matrix(rows)
    d = M.shape[0]
    for k in range(1, 4 * d * d + 1):
        if sympy.totient(k) <= d and (M**k - sympy.eye(d)).det() == 0:
            return True
    return False


class TestPolynomials:
    def test_char_poly(self):
        assert char_poly(CAT).coeffs == (1, -3, 1)
        assert char_poly(SALEM) == SALEM_POLY

    @pytest.mark.parametrize("k,expected", [(1, (-1, 1)), (2, (1, 1)), (3, (1, 1, 1)),
                                            (4, (1, 0, 1)), (6, (1, -1, 1)), (12, (1, 0, -1, 0, 1))])
    def test_cyclotomic(self, k, expected):
        assert cyclotomic(k).coeffs == expected

    @pytest.mark.parametrize("k", range(1, 40))
    def test_cyclotomic_against_sympy(self, k):
        x = sympy.Symbol("x")
        ref = [int(c) for c in reversed(sympy.Poly(sympy.cyclotomic_poly(k, x), x).all_coeffs())]
        assert cyclotomic(k).coeffs == tuple(ref)
        assert cyclotomic(k).degree == euler_phi(k)

    def test_cyclotomic_factors(self):
        assert cyclotomic_factors(char_poly(ROT4)) == [4]
        assert cyclotomic_factors(char_poly(CAT)) == []
        assert cyclotomic_factors(cyclotomic(3) * cyclotomic(6)) == [3, 6]

    def test_reciprocal_reduce(self):
        q = reciprocal_reduce(SALEM_POLY)
        assert q.coeffs == (-3, -1, 1)
        with pytest.raises(RejectedInput):
            reciprocal_reduce(IntPolynomial((1, 2, 3)))

    @given(st.lists(st.integers(-6, 6), min_size=2, max_size=6), st.integers(-6, 6), st.integers(1, 6))
    def test_sturm_matches_numeric_roots(self, coeffs, a, width):
        if coeffs[-1] == 0:
            coeffs[-1] = 1
        p = IntPolynomial(tuple(coeffs))
        b = a + width
        # squarefree part, since Sturm counts distinct roots
        x = sympy.Symbol("x")
        expr = sum(c * x**k for k, c in enumerate(p.coeffs))
        roots = sympy.real_roots(sympy.Poly(expr, x))
        expected = len({r for r in roots if a < r <= b})
        assert sturm_count(p.coeffs, a, b) == expected

    def test_unit_circle_pairs(self):
        assert unit_circle_pairs(SALEM_POLY) == 1
        assert unit_circle_pairs(char_poly(CAT)) == 0
        assert unit_circle_pairs(cyclotomic(5)) == 2
        assert unit_circle_pairs(cyclotomic(2) * cyclotomic(2)) == 0

    def test_exact_rank(self):
        assert exact_rank([[1, 2], [2, 4]]) == 1
        assert exact_rank([[0, 0], [0, 0]]) == 0
        assert exact_rank([[2, 1, 0], [1, 1, 0], [0, 0, 5]]) == 3


class TestErgodicity:
    def test_examples(self):
        assert is_ergodic(CAT)
        assert not is_ergodic(ROT4)
        assert not is_ergodic(IntMatrix.identity(3))
        assert is_ergodic(SALEM)

    def test_exhaustive_2x2(self):
        start = time.perf_counter()
        n = 0
        for a, b, c, d in itertools.product(range(-2, 3), repeat=4):
            if a * d - b * c == 0:
                continue
            n += 1
            assert is_ergodic(((a, b), (c, d))) == (not root_of_unity_oracle(((a, b), (c, d)))), (a, b, c, d)
        assert n > 400
        assert time.perf_counter() - start < 60

    @given(st.lists(st.integers(-3, 3), min_size=9, max_size=9))
    def test_3x3_against_oracle(self, entries):
        rows = (tuple(entries[0:3]), tuple(entries[3:6]), tuple(entries[6:9]))
        if sympy.Matrix(rows).det() == 0:
            return
        assert is_ergodic(rows) == (not root_of_unity_oracle(rows))


class TestClassification:
    def test_cat_is_hyperbolic(self):
        assert classify(CAT) == HYPERBOLIC
        sp = splitting(CAT)
        assert sp.dims == (1, 0, 1)
        v = sp.stable[:, 0]
        lam = (3 - math.sqrt(5)) / 2
        assert np.allclose(np.array(CAT.to_lists()) @ v, lam * v)

    def test_salem_central_spin(self):
        start = time.perf_counter()
        assert classify(SALEM) == CENTRAL_SPIN
        assert splitting(SALEM).dims == (1, 2, 1)
        assert time.perf_counter() - start < 1

    def test_salem_rotation_angle(self):
        (theta,) = rotation_vector(splitting(SALEM))
        # 2 cos(2 pi theta) is the root of x^2 - x - 3 in (-2, 2)
        assert 2 * math.cos(2 * math.pi * theta) == pytest.approx((1 - math.sqrt(13)) / 2, abs=1e-12)

    def test_jordan_block(self):
        sq = SALEM_POLY * SALEM_POLY
        C = IntMatrix.companion(list(sq.coeffs[:-1]))
        assert classify(C) == JORDAN
        with pytest.raises(UnsupportedStructure):
            rotation_vector(splitting(C))

    def test_semisimple_double(self):
        D = IntMatrix.block_diag(SALEM, SALEM)
        assert classify(D) == CENTRAL_SPIN
        assert splitting(D).dims == (2, 4, 2)

    def test_nonergodic(self):
        assert classify(ROT4) == NONERGODIC
        with pytest.raises(ClassificationError):
            splitting(ROT4)

    def test_expanding_endomorphism(self):
        sp = splitting(IntMatrix(((2, 0), (0, 3))))
        assert sp.classification == HYPERBOLIC and sp.dims == (0, 0, 2)

    @pytest.mark.parametrize("M", [CAT, CAT_T, SALEM, IntMatrix.block_diag(CAT, CAT)])
    def test_subspaces_invariant(self, M):
        A = np.array(M.to_lists(), dtype=float)
        sp = splitting(M)
        for B in (sp.stable, sp.central, sp.unstable):
            if B.shape[1]:
                # A B lies in span(B)
                res = A @ B - B @ np.linalg.lstsq(B, A @ B, rcond=None)[0]
                assert np.abs(res).max() < 1e-9
        assert sum(sp.dims) == M.dim


class TestComplements:
    def test_pair_of_cat_maps(self):
        sS, sT = splitting(CAT), splitting(CAT_T)
        assert span_condition(sS, sT).holds
        pair = choose_complements(sS, sT)
        assert pair.s_basis.shape[1] + pair.t_basis.shape[1] == 2
        assert np.allclose(pair.proj_s + pair.proj_t, np.eye(2))
        assert np.allclose(pair.proj_s @ pair.proj_s, pair.proj_s)

    def test_same_map_fails_span(self):
        sp = splitting(CAT)
        assert not span_condition(sp, sp).holds
        with pytest.raises(ConstructionError):
            choose_complements(sp, sp)

    def test_trivial_contracting_space_warns(self):
        sE = splitting(IntMatrix(((2, 0), (0, 3))))
        with pytest.warns(HypothesisWarning):
            span_condition(sE, splitting(CAT))

    def test_salem_with_product_cat(self):
        sS = splitting(SALEM)
        sT = splitting(IntMatrix.block_diag(CAT, CAT))
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            res = span_condition(sS, sT)
        assert res.holds and res.rank == 4
        pair = choose_complements(sS, sT)
        assert pair.s_basis.shape[1] == 3 and pair.t_basis.shape[1] == 1


class TestHighPrecision:
    def test_stable_eigenvector_exactness(self):
        bits = 400
        v = stable_eigenvector(CAT, bits)
        lam = (3 - sympy.sqrt(5)) / 2
        w = [2 * v[0] + v[1], v[0] + v[1]]
        err = max(abs(sympy.Rational(w[i].numerator, w[i].denominator)
                      - lam * sympy.Rational(v[i].numerator, v[i].denominator)) for i in range(2))
        assert float(err) < 2.0 ** (-bits + 4)

    def test_invariant_basis_dimension(self):
        sp = splitting(SALEM)
        assert len(precise_invariant_basis(sp, 128)) == 3
        assert len(precise_invariant_basis(sp, 128, part="stable")) == 1

    def test_no_stable_direction(self):
        with pytest.raises(RejectedInput):
            stable_eigenvector(IntMatrix(((2, 0), (0, 3))))
