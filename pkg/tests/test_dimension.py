import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from toruslab.dimension import (NOTE, ScaleDropped, box_counts, box_dimension, cantor_sample,
                                check_slicing, slicing_bound)
from toruslab.errors import EstimationError, RejectedInput

CANTOR_DIM = math.log(2) / math.log(3)


def test_box_counts_exact():
    P = np.array([[0.1, 0.1], [0.2, 0.2], [0.6, 0.9]])
    assert box_counts(P, [1, 2, 3]) == [2, 2, 3]


class TestReference:
    def test_uniform_square(self):
        P = np.random.default_rng(0).random((200_000, 2))
        est = box_dimension(P)
        assert abs(est.value - 2) <= 0.05
        assert est.note == NOTE and est.ambient == 2

    def test_uniform_interval(self):
        est = box_dimension(np.random.default_rng(1).random(50_000))
        assert abs(est.value - 1) <= 0.05

    def test_cantor(self):
        est = box_dimension(cantor_sample(3**10, seed=0))
        assert abs(est.value - CANTOR_DIM) <= 0.05
        assert est.fit_quality > 0.99

    def test_single_point(self):
        est = box_dimension(np.full((5000, 2), 0.3))
        assert est.value == 0

    def test_segment_in_square(self):
        t = np.random.default_rng(2).random(50_000)
        est = box_dimension(np.stack([t, 0.5 * t + 0.25], axis=1))
        assert abs(est.value - 1) <= 0.05

    @settings(max_examples=20)
    @given(st.integers(0, 1000))
    def test_value_in_range(self, seed):
        rng = np.random.default_rng(seed)
        P = rng.random((5000, 2)) ** rng.integers(1, 4)
        est = box_dimension(P)
        assert 0 <= est.value <= 2


class TestReliability:
    def test_fine_scales_are_dropped(self):
        P = np.random.default_rng(0).random((5000, 2))
        with pytest.warns(ScaleDropped):
            est = box_dimension(P)
        assert all(5000 >= 8 * c for c in est.counts)

    def test_too_few_samples(self):
        with pytest.raises(RejectedInput):
            box_dimension(np.zeros((10, 2)))

    def test_range_check(self):
        with pytest.raises(RejectedInput):
            box_dimension(np.full((2000, 2), 1.0))

    def test_non_dyadic_scale(self):
        with pytest.raises(RejectedInput):
            box_dimension(np.zeros((2000, 1)), scales=[0.1])

    def test_unresolvable(self):
        P = np.random.default_rng(0).random((1000, 6))
        with pytest.warns(ScaleDropped), pytest.raises(EstimationError):
            box_dimension(P)


class TestSlicing:
    def test_bound(self):
        assert slicing_bound(1.0, CANTOR_DIM) == pytest.approx(1 + CANTOR_DIM)
        with pytest.raises(RejectedInput):
            slicing_bound(-1, 0)

    def test_uniform_times_cantor(self):
        n = 3**10 * 4
        base = np.random.default_rng(3).random(n)
        fiber = cantor_sample(n, seed=4)
        chk = check_slicing(base, fiber)
        assert chk.holds
        assert chk.product.value >= chk.bound - 0.1
        assert abs(chk.fiber.value - CANTOR_DIM) <= 0.05

    def test_pairing_required(self):
        with pytest.raises(RejectedInput):
            check_slicing(np.zeros(2000), np.zeros(1999))


def test_cantor_sample_lies_in_cantor_set():
    x = cantor_sample(500, depth=20, seed=1)
    # no point falls in the removed middle third at the first two levels
    assert not np.any((x > 1 / 3 + 1e-12) & (x < 2 / 3 - 1e-12))
    y = (3 * x) % 1
    assert not np.any((y > 1 / 3 + 1e-9) & (y < 2 / 3 - 1e-9))
