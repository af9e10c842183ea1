"""The eleven acceptance criteria, each at its stated tolerance and time limit.

Every test records one PASS/FAIL line, printed at the end of the pytest run
(and by ``python tests/test_acceptance.py``).
"""

import itertools
import math
import random
import time
import warnings
from contextlib import contextmanager
from fractions import Fraction as F

import numpy as np
import pytest
import sympy

from conftest import ACCEPTANCE, CAT, CAT_T, SALEM
from toruslab.constructor import ConstructionConfig, construct_point, verify_certificate
from toruslab.dimension import box_dimension, cantor_sample, check_slicing
from toruslab.entropy import entropy_spectrum, orbit_closure_entropy, strictness_gap
from toruslab.equidist import equidistribution_score, shadowing_gap, spectral_fourier_table
from toruslab.errors import RejectedCertificate
from toruslab.games import (CenterKeeping, GreedyBob, RandomBob, avoid_strategy, avoidance_margin,
                            limit_point, make_params, play)
from toruslab.polynomials import char_poly, unit_circle_pairs
from toruslab.spectral import CENTRAL_SPIN, classify, is_ergodic, splitting, stable_eigenvector
from toruslab.torus import IntMatrix, random_point, reduce_mod1

pytestmark = pytest.mark.acceptance

H_CAT = math.log((3 + math.sqrt(5)) / 2)


@contextmanager
def criterion(k: int, title: str, limit: float):
    """Time the block, record a PASS/FAIL line and fail on a blown time limit."""
    info = {"detail": ""}
    start = time.perf_counter()
    ok = False
    try:
        yield info
        ok = True
    finally:
        elapsed = time.perf_counter() - start
        within = elapsed < limit
        status = "PASS" if ok and within else "FAIL"
        note = info["detail"] + ("" if within else f"; over the {limit:g} s limit")
        ACCEPTANCE[k] = f"criterion {k:2d} {status}  {title} ({elapsed:.2f} s / {limit:g} s) {note}".rstrip()
    assert within, ACCEPTANCE[k]


def _roots_of_unity_oracle(a, b, c, d) -> bool:
    # brute force: some M^k = Id, or a cyclotomic factor with phi(k) <= 2
    M = sympy.Matrix([[a, b], [c, d]])
    x = sympy.Symbol("x")
    cp = M.charpoly(x).as_expr()
    for k in (1, 2, 3, 4, 6):
        if M**k == sympy.eye(2):
            return True
        if sympy.rem(cp, sympy.cyclotomic_poly(k, x), x) == 0:
            return True
    return False


def test_01_exact_spectral_suite():
    with criterion(1, "exact spectral suite", 10) as info:
        total = agree = 0
        for a, b, c, d in itertools.product(range(-2, 3), repeat=4):
            if a * d - b * c == 0:
                continue
            total += 1
            agree += is_ergodic(((a, b), (c, d))) == (not _roots_of_unity_oracle(a, b, c, d))
        info["detail"] = f"{agree}/{total} matrices agree"
        assert agree == total


def test_02_salem_classification():
    with criterion(2, "Salem classification", 1) as info:
        cls = classify(SALEM)
        dims = splitting(SALEM).dims
        pairs = unit_circle_pairs(char_poly(SALEM))
        info["detail"] = f"{cls}, dims {dims}, Sturm unit pairs {pairs}"
        assert cls == CENTRAL_SPIN and dims == (1, 2, 1) and pairs == 1


def test_03_spectral_fourier_law():
    with criterion(3, "spectral Fourier law", 1) as info:
        checked = 0
        for M in (CAT, CAT_T, SALEM):
            js, table = spectral_fourier_table(M, 3, 20)
            assert (table[:, 0] == 1).all()
            assert not table[:, 1:].any()
            checked += table[:, 1:].size
        info["detail"] = f"{checked} coefficients vanish exactly"


def test_04_shadowing_decay():
    with criterion(4, "shadowing decay", 1) as info:
        y = [F(1, 1000) * v for v in stable_eigenvector(CAT, 256)]
        x = reduce_mod1([F(1, 3), F(2, 7)], 64)
        gaps = shadowing_gap(x, y, CAT, 30)
        worst = max(float(g) / (1e-3 * 0.382**n) for n, g in enumerate(gaps))
        info["detail"] = f"max g_n / (1e-3 * 0.382^n) = {worst:.4f}"
        assert worst <= 1.01


def test_05_equidistribution_statistics():
    with criterion(5, "equidistribution statistics", 30) as info:
        scores = [equidistribution_score(random_point(2, 512, random.Random(s)), CAT, 10_000, 3).max_score
                  for s in range(10)]
        good = sum(s <= 0.05 for s in scores)
        info["detail"] = f"{good}/10 seeds with max score <= 0.05 (worst {max(scores):.4f})"
        assert good >= 9


def test_06_game_soundness():
    with criterion(6, "game soundness", 300) as info:
        R = 40
        targets = [(F(0), F(0)), (F(1, 2), F(1, 2)), (F(1, 3), F(2, 3))]
        worst, n_games = None, 0
        for g in range(100):
            rng = random.Random(f"acceptance-game:{g}")
            y = targets[g % len(targets)]
            bob = [CenterKeeping(), RandomBob(g), GreedyBob(CAT, y)][g % 3]
            start = tuple(F(rng.getrandbits(32), 1 << 32) for _ in range(2))
            p = make_params(start)
            t = play(avoid_strategy(CAT, y), bob, p, R)
            assert t.valid, f"game {g} invalid at {t.failure}"
            for m in t.moves:
                assert m.ball.radius == (p.alice_radius(m.round) if m.role == "alice" else p.bob_radius(m.round))
            delta_out = p.rho * (p.alpha * p.beta) ** R / 8
            margin, _ = avoidance_margin(CAT, limit_point(t).center, y, 200)
            assert margin >= delta_out, f"game {g}: margin {float(margin):.3g} < {float(delta_out):.3g}"
            ratio = margin / delta_out
            worst = ratio if worst is None else min(worst, ratio)
            n_games += 1
        info["detail"] = f"{n_games} valid games, min margin / delta_out = {float(worst):.3g}"


def test_07_entropy_calibration():
    with criterion(7, "entropy calibration", 120) as info:
        h = entropy_spectrum(CAT).value
        assert abs(h - H_CAT) < 1e-9
        rnd = orbit_closure_entropy(random_point(2, 512, random.Random(0)), CAT, 10_000).value
        per = orbit_closure_entropy(reduce_mod1([F(1, 5), F(2, 5)], 20_000), CAT, 10_000).value
        r = random.Random(5)
        x4 = reduce_mod1([F(r.getrandbits(512), 1 << 512), F(r.getrandbits(512), 1 << 512), 0, 0], 512)
        cat2 = IntMatrix.block_diag(CAT, CAT)
        sub = orbit_closure_entropy(x4, cat2, 10_000)
        full = entropy_spectrum(cat2)
        gap = strictness_gap(sub, full)
        info["detail"] = (f"h = {h:.10f}, random {rnd:.3f}, periodic {per:.3f}, "
                          f"subtorus {sub.value:.3f} vs {full.value:.3f}")
        assert abs(rnd - h) <= 0.2 * h
        assert per <= 0.05
        assert gap >= 0.5


def test_08_dimension_estimators():
    with criterion(8, "dimension estimators", 60) as info:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            uni = box_dimension(np.random.default_rng(0).random((200_000, 2))).value
            can = box_dimension(cantor_sample(3**10, seed=0)).value
            n = 4 * 3**10
            chk = check_slicing(np.random.default_rng(1).random(n), cantor_sample(n, seed=2))
        info["detail"] = (f"uniform {uni:.3f}, Cantor {can:.4f}, product {chk.product.value:.3f} "
                          f">= {chk.bound:.3f} - 0.1")
        assert abs(uni - 2) <= 0.05
        assert abs(can - math.log(2) / math.log(3)) <= 0.05
        assert chk.holds


def _certificates(targets, seeds):
    out = []
    for s in seeds:
        cfg = ConstructionConfig(CAT, CAT_T, targets, N_S=10_000, N_T=200, seed=s)
        try:
            out.append(construct_point(cfg))
        except RejectedCertificate:
            out.append(None)
    return out


def test_09_end_to_end_construction():
    with criterion(9, "end-to-end construction", 600) as info:
        certs = _certificates(((0, 0),), range(10))
        accepted = [c for c in certs if c is not None and c.equi_report.max_score <= 0.05
                    and c.avoid_margin >= c.delta_out]
        verified = 0
        for c in accepted:
            rep = verify_certificate(c, precision=2 * c.precision)
            same = abs(rep.max_score - c.equi_report.max_score) <= 1e-9 and all(
                abs(m - r) <= 2 * c.error_bound for m, r in zip(rep.avoid_margins, c.avoid_margins))
            verified += rep.ok and same
        info["detail"] = f"{len(accepted)}/10 accepted, {verified} reverified at doubled precision"
        assert len(accepted) >= 9
        assert verified == len(accepted)


def test_10_finite_intersection():
    with criterion(10, "finite-k intersection", 600) as info:
        ys = ((F(0), F(0)), (F(1, 2), F(1, 2)))
        certs = _certificates(ys, range(10))
        good = 0
        for c in certs:
            if c is None:
                continue
            good += all(avoidance_margin(CAT_T, c.x, y, 200)[0] >= c.delta_out for y in ys)
        info["detail"] = f"{good}/10 seeds avoid both targets for 200 steps"
        assert good >= 8


def test_11_replay_determinism(tmp_path):
    from test_cli import PLANS, run_plan, tree

    with criterion(11, "replay determinism", 600) as info:
        same = 0
        for name in sorted(PLANS):
            run_plan(name, tmp_path / name / "a")
            run_plan(name, tmp_path / name / "b")
            same += tree(tmp_path / name / "a") == tree(tmp_path / name / "b")
        info["detail"] = f"{same}/{len(PLANS)} fixture configs byte-identical"
        assert same == len(PLANS)


if __name__ == "__main__":
    import sys
    code = pytest.main([__file__, "-q", "-p", "no:cacheprovider"])
    sys.exit(code)
