import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arakelov.gs import LOG32, simple_constant
from arakelov.p1 import (
    BinaryForm,
    FSNormContext,
    SupSearch,
    exact_l2_gram,
    gromov_ratio,
    hs_slope,
    l2_gram,
    monomial_sup,
    p1_brute_force,
    p1_h0,
    p1_h1,
    p1_sup_norm,
    pointwise_norm,
)

forms = st.integers(0, 6).flatmap(
    lambda m: st.lists(st.integers(-4, 4), min_size=m + 1, max_size=m + 1).filter(any)
)


def l2_norm(coeffs) -> float:
    m = len(coeffs) - 1
    g = exact_l2_gram(m)
    return math.sqrt(sum(float(g[k][k]) * c * c for k, c in enumerate(coeffs)))


# -- pointwise norm ----------------------------------------------------


def test_pointwise_examples():
    for m in range(5):
        xm = BinaryForm([0] * m + [1])
        assert pointwise_norm(xm, 1, 0) == pytest.approx(1.0)
        assert pointwise_norm(xm, 1, 1) == pytest.approx(2 ** (-m / 2))
    assert pointwise_norm(BinaryForm([1, 1]), 1, -1) == 0.0
    with pytest.raises(ValueError):
        pointwise_norm(BinaryForm([1]), 0, 0)


@settings(max_examples=100, deadline=None)
@given(forms, st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False),
       st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False),
       st.complex_numbers(min_magnitude=0.1, max_magnitude=10, allow_nan=False, allow_infinity=False))
def test_pointwise_scale_invariance(coeffs, z0, z1, alpha):
    if abs(z0) + abs(z1) < 1e-3:
        return
    s = BinaryForm(coeffs)
    assert pointwise_norm(s, alpha * z0, alpha * z1) == pytest.approx(pointwise_norm(s, z0, z1), abs=1e-10)


# -- Gram matrix ---------------------------------------------------------


def test_gram_degree_zero():
    assert l2_gram(FSNormContext(0)) == pytest.approx(np.array([[1.0]]), abs=1e-14)


def test_gram_degree_one():
    g = l2_gram(FSNormContext(1))
    assert abs(g[0, 1]) < 1e-14 and abs(g[1, 0]) < 1e-14
    assert g[0, 0] == pytest.approx(g[1, 1], abs=1e-14)
    assert g[0, 0] == pytest.approx(0.5, abs=1e-14)


@pytest.mark.parametrize("m", range(0, 7))
def test_gram_diagonal_and_exact(m):
    g = l2_gram(FSNormContext(m))
    off = g - np.diag(np.diag(g))
    assert np.abs(off).max() < 1e-8
    exact = np.array([[float(v) for v in row] for row in exact_l2_gram(m)])
    assert np.abs(g - exact).max() < 1e-12


def test_context_node_counts():
    for m in range(9):
        assert FSNormContext(m).total_quadrature_nodes >= 4 * (m + 1) ** 2
    with pytest.raises(ValueError):
        FSNormContext(2, tol=0)


# -- sup-norm ------------------------------------------------------------


@pytest.mark.parametrize("m", range(0, 7))
def test_monomial_sup(m):
    ctx = FSNormContext(m)
    for k in range(m + 1):
        coeffs = [0] * (m + 1)
        coeffs[k] = 1
        best, gap = p1_sup_norm(BinaryForm(coeffs), ctx)
        assert best == pytest.approx(monomial_sup(m, k), abs=1e-9)
        assert best <= monomial_sup(m, k) + 1e-12


def test_sup_of_x():
    best, _ = p1_sup_norm(BinaryForm([0, 1]))
    assert best == pytest.approx(1.0, abs=1e-12)


def test_sup_degree_one_is_euclidean():
    for a, b in [(1, 1), (2, -1), (3, 4)]:
        assert p1_sup_norm(BinaryForm([a, b]))[0] == pytest.approx(math.hypot(a, b), rel=1e-10)


def test_sup_context_mismatch():
    with pytest.raises(ValueError):
        p1_sup_norm(BinaryForm([1, 1]), FSNormContext(2))


@pytest.mark.parametrize("m", range(1, 7))
def test_sup_against_dense_grid(m):
    rng = np.random.default_rng(m)
    ctx = FSNormContext(m)
    f = rng.integers(-3, 4, size=(25, m + 1))
    f = f[np.any(f != 0, axis=1)]
    best, gap = SupSearch(ctx).refine(f)
    dense, _ = SupSearch(FSNormContext(m, grid=4 * ctx.grid)).grid_max(f)
    # the refined value is never below the finer grid and sits within its resolution
    assert np.all(best >= dense * (1 - 1e-12))
    assert np.all(best <= dense * (1 + 1e-3))
    assert np.all(gap > 0)


@settings(max_examples=60, deadline=None)
@given(forms)
def test_sup_dominates_l2(coeffs):
    best, gap = p1_sup_norm(BinaryForm(coeffs))
    assert best + gap >= l2_norm(coeffs) * (1 - 1e-9)


@settings(max_examples=60, deadline=None)
@given(forms)
def test_reversal_symmetry(coeffs):
    a, _ = p1_sup_norm(BinaryForm(coeffs))
    b, _ = p1_sup_norm(BinaryForm(coeffs[::-1]))
    assert a == pytest.approx(b, rel=1e-8)
    assert l2_norm(coeffs) == pytest.approx(l2_norm(coeffs[::-1]), rel=1e-14)


# -- counts --------------------------------------------------------------


def test_count_degree_zero():
    assert p1_h0(0).count == 3
    assert p1_h0(0, "l2").count == 3


def test_count_degree_one():
    c = p1_h0(1)
    assert c.count == 5
    assert c.h0 == pytest.approx(math.log(5))


@pytest.mark.parametrize("m", range(0, 5))
def test_count_against_brute_force(m):
    assert p1_h0(m).count == p1_brute_force(m)
    assert p1_h0(m, "l2").count == p1_brute_force(m, "l2")


@pytest.mark.parametrize("m", range(0, 5))
def test_counts_odd_and_ordered(m):
    sup = p1_h0(m)
    l2 = p1_h0(m, "l2")
    assert sup.count % 2 == 1 and l2.count % 2 == 1
    # the sup ball sits inside the L2 ball
    assert sup.count <= l2.count


def test_ambiguity_flag():
    # x^m has sup exactly one, so every degree has boundary members
    c = p1_h0(2)
    assert c.ambiguous > 0 and not c.exact


def test_dual_count():
    assert p1_h1(0).count == 3
    d = p1_h1(1)
    assert d.count == 5 and d.ambiguous == 0


# -- Gromov ratio and Hilbert-Samuel slopes -------------------------------


def test_gromov_degree_zero():
    assert gromov_ratio(0, 20).max_ratio == pytest.approx(1.0)


def test_gromov_degree_one_is_constant():
    assert gromov_ratio(1, 50).max_ratio == pytest.approx(0.5, rel=1e-10)


@pytest.mark.parametrize("m", range(1, 8))
def test_gromov_monomials(m):
    ctx = FSNormContext(m)
    eye = np.eye(m + 1, dtype=np.int64)
    best, _ = SupSearch(ctx).refine(eye)
    for k in range(m + 1):
        ratio = best[k] ** 2 / ((m + 1) ** 2 * float(exact_l2_gram(m)[k][k]))
        expected = monomial_sup(m, k) ** 2 * math.comb(m, k) / (m + 1)
        assert ratio == pytest.approx(expected, rel=1e-8)


def test_gromov_rejects_zero_trials():
    with pytest.raises(ValueError):
        gromov_ratio(2, 0)


def test_gromov_deterministic():
    assert gromov_ratio(4, 50, seed=3) == gromov_ratio(4, 50, seed=3)


def test_hs_slope_rows():
    rows = hs_slope(3, samples=100_000)
    assert rows[0].slope == pytest.approx(2 * math.log(5))
    for r in rows:
        assert math.isfinite(r.slope) and r.slope > 0
        assert math.isfinite(r.chi_slope)
        bound = simple_constant(LOG32, r.m + 1)
        assert abs(r.h0 - r.h1 - r.chi) <= bound + 3 * r.chi_ci
        assert r.gap_bound_holds
    with pytest.raises(ValueError):
        hs_slope(9)
