import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arakelov.gs import log_factorial, random_module
from arakelov.lattice import (
    BudgetExceeded,
    ball_box_bound,
    brute_force_oracle,
    enumerate_ball,
    h0,
    h1,
    h1_polar,
    read_points,
    write_points,
)
from arakelov.logreal import LogReal
from arakelov.norms import Ellipsoid, EmbeddingSup, MaxAbs, NormedZModule, Scaled, TorsionData
from arakelov.numring import build_ring


def mod(norm, torsion=()):
    return NormedZModule(norm.dim, norm, TorsionData(torsion))


def test_euclidean_plane_count():
    assert enumerate_ball(mod(Ellipsoid([[1, 0], [0, 1]]))).count == 5


def test_linf_cube_count():
    rep = enumerate_ball(mod(MaxAbs([[1, 0, 0], [0, 1, 0], [0, 0, 1]])))
    assert rep.count == 27 and rep.exact


@pytest.mark.parametrize("seed", range(5))
def test_random_rank3_ellipsoid_against_oracle(seed):
    m = random_module(np.random.default_rng(seed), 3, "ellipsoid")
    box = math.ceil(max(ball_box_bound(m.norm)))
    assert enumerate_ball(m).count == brute_force_oracle(m, box)


def test_h0_integers():
    assert h0(mod(MaxAbs([[1]]))) == pytest.approx(math.log(3))


def test_h0_with_torsion():
    assert h0(mod(MaxAbs([[1]]), (5,))) == pytest.approx(math.log(15))


def test_h0_zero_module():
    assert h0(NormedZModule(0, None)) == 0.0


def test_h1_integers():
    assert h1(mod(MaxAbs([[1]]))) == pytest.approx(math.log(3))


def test_h1_linf_plane():
    assert h1(mod(MaxAbs([[1, 0], [0, 1]]))) == pytest.approx(math.log(5))


@pytest.mark.parametrize("seed", range(6))
def test_h1_dual_and_polar_paths_agree(seed):
    m = random_module(np.random.default_rng(100 + seed), 2, "ellipsoid")
    assert h1(m) == h1_polar(m)


@pytest.mark.parametrize("seed", range(4))
def test_h1_paths_agree_maxabs(seed):
    m = random_module(np.random.default_rng(200 + seed), 2, "max_abs")
    assert h1(m) == h1_polar(m)


def test_oracle_small_examples():
    assert brute_force_oracle(mod(Ellipsoid([[1, 0], [0, 1]])), 1) == 5
    assert brute_force_oracle(mod(MaxAbs([[1, 1], [1, -1]])), 1) == 5


def test_oracle_refuses_small_box():
    with pytest.raises(ValueError):
        brute_force_oracle(mod(Ellipsoid([[Fraction(1, 9), 0], [0, 1]])), 1)


def test_oracle_refuses_large_rank():
    with pytest.raises(ValueError):
        brute_force_oracle(mod(MaxAbs([[1 if i == j else 0 for j in range(7)] for i in range(7)])), 1)


def test_budget_flag():
    # whole lines are counted at once, so a rank-3 ball is needed to outrun 50 examinations
    m = mod(Ellipsoid([[Fraction(1, 100) if i == j else 0 for j in range(3)] for i in range(3)]))
    rep = enumerate_ball(m, budget=50)
    assert not rep.exact
    assert rep.points_examined > 50
    assert rep.count <= enumerate_ball(m).count
    with pytest.raises(BudgetExceeded):
        h0(m, budget=50)


def test_boundary_points_of_embedding_norm():
    # Z[i] with weights 0: exactly 0, +-1, +-i
    assert enumerate_ball(mod(EmbeddingSup(build_ring((1, 0, 1)), (0, 0)))).count == 5


def test_radius_argument():
    m = mod(Ellipsoid([[1, 0], [0, 1]]))
    assert enumerate_ball(m, 2).count == 13
    assert enumerate_ball(m, LogReal.log(2)).count == 13


def test_points_stream_round_trip(tmp_path):
    m = random_module(np.random.default_rng(4), 3, "max_abs")
    rep = enumerate_ball(m, want_points=True)
    path = tmp_path / "points.txt"
    write_points(path, rep.points)
    back = read_points(path)
    assert back.shape == (rep.count, 3)
    assert np.array_equal(back, rep.points)


# -- properties ------------------------------------------------------------


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 4), st.sampled_from(["ellipsoid", "max_abs"]))
def test_negation_symmetry_and_odd_count(seed, rank, kind):
    m = random_module(np.random.default_rng(seed), rank, kind)
    rep = enumerate_ball(m, want_points=True)
    pts = {tuple(p) for p in rep.points.tolist()}
    assert {tuple(-v for v in p) for p in pts} == pts
    assert rep.count % 2 == 1
    assert tuple([0] * rank) in pts


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 3), st.sampled_from(["ellipsoid", "max_abs"]), st.fractions(0, 3, max_denominator=4))
def test_scaling_growth(seed, rank, kind, lam):
    m = random_module(np.random.default_rng(seed), rank, kind)
    base = h0(m)
    grown = h0(m.with_norm(Scaled(LogReal(lam), m.norm)))
    assert 0 <= grown - base <= float(lam) * rank + math.log(9) * rank + 2 * log_factorial(rank) + 1e-12


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 3))
def test_monotonicity(seed, rank):
    rng = np.random.default_rng(seed)
    m = random_module(rng, rank, "max_abs")
    extra = [Fraction(int(v), 2) for v in rng.integers(-3, 4, size=rank)]
    bigger = MaxAbs([list(r) for r in m.norm.functionals] + [extra])
    m2 = m.with_norm(bigger)
    # pointwise comparison on the candidate set of the smaller norm's ball
    pts = enumerate_ball(m, want_points=True).points
    assert np.all(bigger.evaluate_many(pts) >= m.norm.evaluate_many(pts) - 1e-12)
    assert h0(m) >= h0(m2)
    assert h1(m) <= h1(m2)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 4), st.integers(1, 200))
def test_budget_accounting(seed, rank, budget):
    m = random_module(np.random.default_rng(seed), rank, "ellipsoid")
    full = enumerate_ball(m)
    rep = enumerate_ball(m, budget=budget)
    if rep.exact:
        assert rep.points_examined <= budget
        assert rep.count == full.count
    else:
        assert rep.count <= full.count
