import math
import random
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import CAT, CAT_T, SALEM
from toruslab.equidist import (character_box, equidistribution_score, product_character_score,
                               product_equidistribution_score, rotation_spectral, shadowing_gap,
                               spectral_fourier_exact, spectral_fourier_mc, spectral_fourier_table,
                               weyl_sum)
from toruslab.errors import RejectedInput
from toruslab.spectral import rotation_vector, splitting, stable_eigenvector
from toruslab.torus import IntMatrix, minimal_precision, random_point, reduce_mod1

LAMBDA_S = (3 - math.sqrt(5)) / 2


def test_character_box_size():
    assert len(character_box(2, 3)) == 48
    assert len(character_box(2, 3, include_zero=True)) == 49
    assert len(character_box(4, 1)) == 80


class TestWeyl:
    def test_trivial_character(self):
        assert weyl_sum(reduce_mod1([F(1, 3), F(1, 5)], 64), CAT, 10, (0, 0)) == 1.0

    def test_fixed_point_is_not_equidistributed(self):
        rep = equidistribution_score(reduce_mod1([0, 0], 64), CAT, 500)
        assert rep.max_score == pytest.approx(1.0)

    def test_periodic_point(self):
        x = reduce_mod1([F(1, 5), F(2, 5)], minimal_precision(CAT, 1000))
        # a period-10 orbit sums characters 5j to one exactly
        assert weyl_sum(x, CAT, 1000, (5, 0)) == pytest.approx(1.0)
        assert equidistribution_score(x, CAT, 1000, J=3).max_score > 0.2

    def test_random_point(self):
        x = random_point(2, 512, random.Random(7))
        rep = equidistribution_score(x, CAT, 10_000, 3)
        assert rep.max_score <= 0.05
        assert len(rep.scores) == 48 and rep.argmax() in rep.scores
        assert rep.threshold() == pytest.approx(0.05)

    def test_input_validation(self):
        x = reduce_mod1([F(1, 3), F(1, 5)], 64)
        with pytest.raises(RejectedInput):
            weyl_sum(x, CAT, 0, (1, 0))
        with pytest.raises(RejectedInput):
            weyl_sum(x, CAT, 5, (1, 0, 0))

    def test_exact_points_are_padded(self):
        # a 64-bit exact point is padded to the budget, so no error is raised
        x = reduce_mod1([F(3, 8), F(5, 16)], 64)
        rep = equidistribution_score(x, CAT, 2000)
        assert rep.precision_ok

    def test_inexact_points_below_budget_are_refused(self):
        from toruslab.errors import BudgetError
        x = reduce_mod1([F(1, 3), F(1, 5)], 64)
        with pytest.raises(BudgetError):
            equidistribution_score(x, CAT, 2000)


class TestSpectralFourier:
    @pytest.mark.parametrize("M", [CAT, CAT_T, SALEM])
    def test_continuous_spectral_type(self, M):
        for j in character_box(M.dim, 3 if M.dim == 2 else 1):
            assert spectral_fourier_exact(M, j, 0) == 1
            assert all(spectral_fourier_exact(M, j, n) == 0 for n in range(1, 21))

    @pytest.mark.parametrize("M", [CAT, SALEM, IntMatrix(((0, -1), (1, 0)))])
    def test_table_matches_pointwise(self, M):
        js, table = spectral_fourier_table(M, 2, 8)
        for j, row in zip(js, table):
            assert list(row) == [spectral_fourier_exact(M, j, n) for n in range(9)]

    def test_table_large_entries(self):
        # 3^60 overflows int64, so the exact object path is taken
        js, table = spectral_fourier_table(CAT, 1, 60)
        assert table[:, 0].all() and not table[:, 1:].any()

    def test_nonergodic_has_atoms(self):
        rot = IntMatrix(((0, -1), (1, 0)))
        assert spectral_fourier_exact(rot, (1, 0), 4) == 1
        assert spectral_fourier_exact(rot, (1, 0), 2) == 0

    def test_monte_carlo_agrees(self):
        for n in (0, 1, 3):
            est = spectral_fourier_mc(CAT, (1, 2), n, samples=20_000, seed=n)
            assert abs(est - spectral_fourier_exact(CAT, (1, 2), n)) < 0.03

    def test_negative_n_rejected(self):
        with pytest.raises(RejectedInput):
            spectral_fourier_exact(CAT, (1, 0), -1)

    def test_rotation_is_atomic(self):
        z = rotation_spectral([0.3], [2], 5)
        assert abs(z) == pytest.approx(1.0)
        assert z == pytest.approx(complex(math.cos(2 * math.pi * 3.0), math.sin(2 * math.pi * 3.0)))


class TestShadowing:
    def test_stable_offset_decays(self):
        v = stable_eigenvector(CAT, 256)
        y = [F(1, 1000) * c for c in v]
        x = reduce_mod1([F(1, 3), F(2, 7)], 64)
        gaps = shadowing_gap(x, y, CAT, 30)
        for n, g in enumerate(gaps):
            assert float(g) <= 1e-3 * 0.382**n * 1.01

    def test_gap_is_offset_norm(self):
        v = stable_eigenvector(CAT, 256)
        y = [F(1, 1000) * c for c in v]
        x = reduce_mod1([F(1, 9), F(4, 9)], 64)
        gaps = shadowing_gap(x, y, CAT, 10)
        for n, g in enumerate(gaps):
            assert float(g) == pytest.approx(1e-3 * LAMBDA_S**n, rel=1e-6)

    def test_expanding_offset_rejected(self):
        x = reduce_mod1([F(1, 3), F(2, 7)], 64)
        with pytest.raises(RejectedInput):
            shadowing_gap(x, [F(1, 1000), F(1, 1000)], CAT, 10)

    def test_zero_offset(self):
        x = reduce_mod1([F(1, 3), F(2, 7)], 64)
        assert set(shadowing_gap(x, [0, 0], CAT, 5)) == {0}

    @given(st.fractions(-1, 1).filter(lambda t: t != 0))
    def test_salem_central_offsets_stay_bounded(self, t):
        sp = splitting(SALEM)
        w = sp.central_semisimple[:, 0]
        y = [F(t) * F(float(c)).limit_denominator(10**12) / 1000 for c in w]
        x = reduce_mod1([F(1, 3)] * 4, 64)
        try:
            gaps = shadowing_gap(x, y, SALEM, 40, splitting=sp, tol=1e-6)
        except RejectedInput:
            pytest.fail("central offset rejected")
        assert max(gaps) <= 4 * max(abs(v) for v in y)


class TestProduct:
    def test_salem_rotation_product(self):
        theta = rotation_vector(splitting(SALEM))
        x = random_point(2, 512, random.Random(3))
        rep = product_equidistribution_score(x, CAT, [0.1], theta, 10_000, J=2)
        assert rep.max_score <= 0.05

    def test_trivial_character(self):
        x = random_point(2, 512, random.Random(3))
        assert product_character_score(x, CAT, [0.1], [0.25], 100, (0, 0), (0,)) == 1.0

    def test_rational_rotation_fails(self):
        # j = 0, k = 4 sees the period-4 rotation exactly
        x = random_point(2, 512, random.Random(3))
        assert product_character_score(x, CAT, [0.1], [0.25], 1000, (0, 0), (4,)) == pytest.approx(1.0)

    def test_shape_mismatch(self):
        x = random_point(2, 512, random.Random(3))
        with pytest.raises(RejectedInput):
            product_equidistribution_score(x, CAT, [0.1, 0.2], [0.3], 10)


def test_scores_are_float_statistics_of_exact_orbits():
    x = random_point(2, 512, random.Random(11))
    a = equidistribution_score(x, CAT, 3000).scores
    b = equidistribution_score(x.with_precision(2 * x.precision), CAT, 3000).scores
    assert np.allclose(list(a.values()), list(b.values()), atol=1e-12)
