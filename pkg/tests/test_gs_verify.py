import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arakelov.gs import (
    gs_core_report,
    larger_norm_of,
    log_factorial,
    mahler_bound,
    make_report,
    prop21_report,
    random_module,
    random_unimodular,
    run_suite,
    simple_constant,
    split_exact_sequence,
    suite_modules,
    unit_basis_module,
)
from arakelov.logreal import LogReal
from arakelov.norms import Ellipsoid, MaxAbs, NormedZModule, NormError, TorsionData


def ident(n):
    return [[1 if i == j else 0 for j in range(n)] for i in range(n)]


def mod(norm):
    return NormedZModule(norm.dim, norm)


def by_name(reports):
    return {r.name: r for r in reports}


def test_mahler_bound_values():
    assert mahler_bound(1) == 4
    assert mahler_bound(2) == 4
    assert mahler_bound(3) == Fraction(16, 9)


def test_mahler_bound_rejects_zero():
    with pytest.raises(ValueError):
        mahler_bound(0)


def test_simple_constant_zero_rank():
    assert simple_constant(2.0, 0) == 0.0
    assert log_factorial(0) == 0.0


def test_report_fields():
    r = make_report("x", 1.0, 2.0, "d")
    assert r.holds and r.slack == 1.0
    assert not make_report("x", 2.0, 1.0, "d").holds
    # the CI allowance is three half-widths
    assert make_report("x", 1.29, 1.0, "d", ci=0.1).holds
    assert not make_report("x", 1.31, 1.0, "d", ci=0.1).holds


def test_core_integers():
    reps = by_name(gs_core_report(mod(MaxAbs([[1]])), a_values=(2,)))
    ratio = reps["mahler_ratio_lower"].rhs
    assert ratio == pytest.approx(math.log(1 / 2))
    assert reps["mahler_ratio_lower"].lhs == pytest.approx(-math.log(6))
    assert reps["mahler_ratio_upper"].rhs == pytest.approx(math.log(6 / 4))
    # M(2K) = 5 against 2 * 3 * 36 / 4 = 54
    assert reps["dilation_upper[a=2]"].lhs == pytest.approx(math.log(5))
    assert reps["dilation_upper[a=2]"].rhs == pytest.approx(math.log(54))
    assert all(r.holds for r in reps.values())


def test_core_linf_plane():
    reps = by_name(gs_core_report(mod(MaxAbs(ident(2)))))
    assert reps["mahler_ratio_upper"].lhs == pytest.approx(math.log(9 / 20))
    assert reps["mahler_ratio_upper"].rhs == pytest.approx(math.log(9))
    assert reps["mahler_ratio_lower"].lhs == pytest.approx(-math.log(36))
    assert all(r.holds for r in reps.values())


def test_core_rejects_torsion():
    with pytest.raises(NormError):
        gs_core_report(NormedZModule(1, MaxAbs([[1]]), TorsionData((2,))))


def test_core_rejects_small_dilation():
    with pytest.raises(ValueError):
        gs_core_report(mod(MaxAbs([[1]])), a_values=(1,))


def test_item1_integers():
    reps = by_name(prop21_report(mod(MaxAbs([[1]])), items=(1,)))
    r = reps["item1_lower"]
    assert r.rhs == pytest.approx(-math.log(2))
    assert r.lhs == pytest.approx(-math.log(6))
    assert reps["item1_upper"].rhs == pytest.approx(math.log(1.5))
    assert all(r.holds for r in reps.values())


def test_item3_integers():
    reps = by_name(prop21_report(mod(MaxAbs([[1]])), lam=LogReal.log(2), items=(3,)))
    upper = [r for name, r in reps.items() if name.startswith("item3_upper")][0]
    assert upper.lhs == pytest.approx(math.log(5 / 3))
    assert upper.rhs == pytest.approx(math.log(2) + math.log(9))
    assert all(r.holds for r in reps.values())


def test_item5_linf_plane():
    reps = by_name(prop21_report(mod(MaxAbs(ident(2))), unit_basis=True, items=(5,)))
    assert reps["item5"].lhs == pytest.approx(math.log(5))
    assert reps["item5"].rhs == pytest.approx(2 * math.log(3))
    assert reps["item5"].holds


def test_item5_refuses_long_basis():
    with pytest.raises(ValueError):
        prop21_report(mod(MaxAbs([[Fraction(1, 2), 0], [0, 2]])), unit_basis=True, items=(5,))


@pytest.mark.parametrize("items,kw", [((2,), {}), ((3,), {}), ((4,), {}), ((5,), {})])
def test_missing_auxiliary_data(items, kw):
    with pytest.raises(ValueError):
        prop21_report(mod(MaxAbs(ident(2))), items=items, **kw)


def test_item3_rejects_negative_lambda():
    with pytest.raises(ValueError):
        prop21_report(mod(MaxAbs([[1]])), lam=-1, items=(3,))


def test_item2_with_larger_norm():
    m = mod(MaxAbs(ident(2)))
    reps = by_name(prop21_report(m, larger_norm=MaxAbs(ident(2) + [[1, 1]]), items=(2,)))
    assert reps["item2_h0"].lhs == pytest.approx(math.log(7))
    assert reps["item2_h0"].rhs == pytest.approx(math.log(9))
    assert all(r.holds for r in reps.values())


def test_split_sequence_shapes():
    m = mod(Ellipsoid(ident(3)))
    seq = split_exact_sequence(m, 1)
    assert seq.sub.rank == 1 and seq.quotient.rank == 2
    with pytest.raises(ValueError):
        split_exact_sequence(m, 3)
    with pytest.raises(ValueError):
        split_exact_sequence(m, 1, [[2, 0, 0], [0, 1, 0], [0, 0, 1]])


def test_suite_is_deterministic():
    a = [m.to_json() for m in suite_modules(3, 10)]
    b = [m.to_json() for m in suite_modules(3, 10)]
    assert a == b
    assert {m.rank for m in suite_modules(3, 40)} <= set(range(1, 6))


def test_run_suite_sorted():
    reps = run_suite(suite_modules(1, 6, 3), lambda m: gs_core_report(m))
    keys = [(r.instance_digest, r.name) for r in reps]
    assert keys == sorted(keys)


# -- properties ------------------------------------------------------------


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 4), st.sampled_from(["ellipsoid", "max_abs"]))
def test_core_holds_on_random_modules(seed, rank, kind):
    m = random_module(np.random.default_rng(seed), rank, kind)
    assert all(r.holds for r in gs_core_report(m, a_values=(Fraction(3, 2), 2)))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 4), st.sampled_from(["ellipsoid", "max_abs"]))
def test_items_1_and_3_hold_on_random_modules(seed, rank, kind):
    m = random_module(np.random.default_rng(seed), rank, kind)
    assert all(r.holds for r in prop21_report(m, items=(1,)))
    assert all(r.holds for r in prop21_report(m, lam=Fraction(1, 2), items=(3,)))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 3), st.sampled_from(["ellipsoid", "max_abs"]))
def test_item2_holds_with_dominating_norm(seed, rank, kind):
    rng = np.random.default_rng(seed)
    m = random_module(rng, rank, kind)
    reps = prop21_report(m, larger_norm=larger_norm_of(rng, m.norm), items=(2,))
    assert all(r.holds for r in reps)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 4), st.sampled_from(["ellipsoid", "max_abs"]))
def test_split_sequences_satisfy_item4(seed, rank, kind):
    rng = np.random.default_rng(seed)
    m = random_module(rng, rank, kind)
    k = int(rng.integers(1, rank))
    seq = split_exact_sequence(m, k, random_unimodular(rng, rank))
    assert all(r.holds for r in prop21_report(m, sequence=seq, items=(4,)))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 4), st.sampled_from(["ellipsoid", "max_abs"]))
def test_item5_holds_on_unit_bases(seed, rank, kind):
    m = unit_basis_module(np.random.default_rng(seed), rank, kind)
    assert all(r.holds for r in prop21_report(m, unit_basis=True, items=(5,)))
