"""Verification harness for the counting inequalities of normed Z-modules.

Each check is an :class:`InequalityReport` of the form ``lhs <= rhs``.  Values
are compared in log space; quantities derived from a Monte Carlo volume carry
a confidence half-width and are compared with a ``3 * CI`` allowance.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from . import exact
from .lattice import DEFAULT_BUDGET, enumerate_ball, h0, h1
from .logreal import LogReal
from .norms import Ellipsoid, MaxAbs, NormedZModule, NormError, NormSpec, quotient_norm, scale_norm, subnorm
from .volume import DEFAULT_SAMPLES, ball_volume, chi

# float slack for comparisons between exactly known quantities
TOL = 1e-9

LOG6 = math.log(6)
LOG9 = math.log(9)
LOG18 = math.log(18)
LOG32 = math.log(1.5)


@dataclass
class InequalityReport:
    name: str
    lhs: float
    rhs: float
    slack: float
    holds: bool
    instance_digest: str
    ci: float = 0.0

    def to_json(self) -> dict:
        return asdict(self)


def make_report(name: str, lhs: float, rhs: float, digest: str, ci: float = 0.0) -> InequalityReport:
    slack = rhs - lhs
    holds = lhs <= rhs + 3 * ci + TOL * (1 + abs(lhs) + abs(rhs))
    return InequalityReport(name, float(lhs), float(rhs), float(slack), bool(holds), digest, float(ci))


def module_digest(module: NormedZModule, *extra) -> str:
    payload = json.dumps([module.to_json(), [str(e) for e in extra]], sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def mahler_bound(n: int) -> Fraction:
    """``f(n) = 4^n / (n!)^2``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return Fraction(4**n, math.factorial(n) ** 2)


def log_factorial(n: int) -> float:
    return math.lgamma(n + 1) if n > 0 else 0.0


def simple_constant(c0: float, r: int) -> float:
    """``(c0 + 2)(r + 1) log(r + 1)``; zero for ``r = 0``."""
    return (c0 + 2) * (r + 1) * math.log(r + 1) if r > 0 else 0.0


def _log_count(module: NormedZModule, radius=1, budget=DEFAULT_BUDGET) -> float:
    rep = enumerate_ball(module, radius, budget=budget)
    if not rep.exact:
        from .lattice import BudgetExceeded

        raise BudgetExceeded("enumeration budget exceeded", rep)
    return math.log(rep.count)


def gs_core_report(
    module: NormedZModule,
    a_values: Sequence = (),
    *,
    budget: int = DEFAULT_BUDGET,
    volume_kw: dict | None = None,
) -> list[InequalityReport]:
    """Lattice-count versions of the Mahler-constant bounds.

    Checks ``6^-n <= M(K) / (M(K*) V(K)) <= 6^n / f(n)`` and, for each ``a > 1``,
    ``M(K) <= M(aK) <= a^n M(K) 36^n / f(n)``, all in logarithms.
    """
    if module.torsion.invariant_factors:
        raise NormError("the lattice-count bounds are stated for torsion-free modules")
    n = module.rank
    if n == 0:
        raise NormError("rank must be positive")
    dig = module_digest(module, *a_values)
    log_f = math.log(mahler_bound(n))
    log_m = _log_count(module, budget=budget)
    log_md = _log_count(module.dual(), budget=budget)
    vol = ball_volume(module.norm, **(volume_kw or {}))
    ratio = log_m - log_md - vol.log_value
    ci = vol.log_half_width if vol.method != "exact" else 0.0
    out = [
        make_report("mahler_ratio_lower", -n * LOG6, ratio, dig, ci),
        make_report("mahler_ratio_upper", ratio, n * LOG6 - log_f, dig, ci),
    ]
    for a in a_values:
        a_frac = exact.to_fraction(a)
        if a_frac <= 1:
            raise ValueError("dilation factors must exceed 1")
        log_ma = _log_count(module, a_frac, budget=budget)
        la = math.log(a_frac.numerator) - math.log(a_frac.denominator)
        out.append(make_report(f"dilation_lower[a={a}]", log_m, log_ma, dig))
        out.append(make_report(f"dilation_upper[a={a}]", log_ma, n * la + log_m + n * math.log(36) - log_f, dig))
    return out


@dataclass(frozen=True)
class ExactSequence:
    """``0 -> M' --f--> M --g--> M'' -> 0`` with induced sub- and quotient norms."""

    sub: NormedZModule
    middle: NormedZModule
    quotient: NormedZModule
    f: tuple
    g: tuple


def split_exact_sequence(module: NormedZModule, k: int, unimodular=None) -> ExactSequence:
    """Split sequence ``Z^k -> Z^n -> Z^(n-k)`` through a unimodular change of basis.

    ``f`` is the first ``k`` columns of ``U`` and ``g`` the last ``n-k`` rows of
    ``U^-1``; the sub-module carries the subnorm and the quotient the quotient norm.
    """
    n = module.rank
    if not 0 < k < n:
        raise ValueError("need 0 < k < rank")
    u = exact.identity(n) if unimodular is None else exact.fmatrix(unimodular)
    if abs(exact.det(u)) != 1:
        raise ValueError("change of basis must be unimodular")
    uinv = exact.inverse(u)
    f = [row[:k] for row in u]
    g = uinv[k:]
    sub = NormedZModule(k, subnorm(f, module.norm))
    quo = NormedZModule(n - k, quotient_norm(g, module.norm))
    return ExactSequence(sub, module, quo, tuple(map(tuple, f)), tuple(map(tuple, g)))


def _chi_sampled(module, samples, volume_kw):
    kw = dict(volume_kw or {})
    kw.setdefault("samples", samples)
    return chi(module, **kw)


def prop21_report(
    module: NormedZModule,
    *,
    lam=None,
    sequence: ExactSequence | None = None,
    unit_basis: bool = False,
    larger_norm: NormSpec | None = None,
    items: Sequence[int] = (1,),
    budget: int = DEFAULT_BUDGET,
    volume_kw: dict | None = None,
) -> list[InequalityReport]:
    """Evaluate the requested items and their simplified forms.

    ``items`` selects among 1 (h0 - h1 - chi window), 2 (comparison with
    ``larger_norm``), 3 (scaling by ``lam``), 4 (``sequence``) and 5
    (``unit_basis``: the standard basis has norms at most one).
    """
    reports = _prop21(module, lam, sequence, unit_basis, larger_norm, items, budget, volume_kw, DEFAULT_SAMPLES)
    stochastic_fail = [r for r in reports if not r.holds and r.ci > 0]
    if stochastic_fail:
        # near-violation with Monte Carlo noise: re-run with ten times the samples
        kw = dict(volume_kw or {})
        samples = 10 * kw.pop("samples", DEFAULT_SAMPLES)
        reports = _prop21(module, lam, sequence, unit_basis, larger_norm, items, budget, kw, samples)
    return reports


def _prop21(module, lam, sequence, unit_basis, larger_norm, items, budget, volume_kw, samples):
    rk = module.rank
    dig = module_digest(module, lam, unit_basis)
    lf = log_factorial(rk)
    out: list[InequalityReport] = []
    need_h0 = bool({1, 2, 3} & set(items))
    h0v = h0(module, budget=budget) if need_h0 else None
    if 1 in items:
        h1v = h1(module, budget=budget)
        c = _chi_sampled(module, samples, volume_kw)
        gap = h0v - h1v - c.value
        out.append(make_report("item1_lower", -LOG6 * rk, gap, dig, c.half_width))
        out.append(make_report("item1_upper", gap, LOG32 * rk + 2 * lf, dig, c.half_width))
        out.append(make_report("simple1_abs", abs(gap), simple_constant(LOG32, rk), dig, c.half_width))
    if 2 in items:
        if larger_norm is None:
            raise ValueError("item 2 needs a pointwise larger norm")
        m2 = module.with_norm(larger_norm)
        h0b = h0(m2, budget=budget)
        h1a = h1(module, budget=budget)
        h1b = h1(m2, budget=budget)
        c1 = _chi_sampled(module, samples, volume_kw)
        c2 = _chi_sampled(m2, samples, volume_kw)
        ci = c1.half_width + c2.half_width
        out.append(make_report("item2_h0", h0b, h0v, dig))
        out.append(make_report("item2_h1", h1a, h1b, dig))
        out.append(make_report("item2_chi", c2.value - c1.value, h0b - h0v + LOG9 * rk + 2 * lf, dig, ci))
        out.append(make_report("simple2_chi", c2.value - c1.value, h0b - h0v + simple_constant(LOG9, rk), dig, ci))
    if 3 in items:
        if lam is None:
            raise ValueError("item 3 needs a scaling parameter")
        lam_r = LogReal.coerce(lam)
        if lam_r.sign() < 0:
            raise ValueError("item 3 needs a nonnegative scaling parameter")
        gain = h0(module.with_norm(scale_norm(module.norm, lam_r)), budget=budget) - h0v
        lf_ = float(lam_r)
        out.append(make_report(f"item3_lower[lam={lam}]", 0.0, gain, dig))
        out.append(make_report(f"item3_upper[lam={lam}]", gain, lf_ * rk + LOG9 * rk + 2 * lf, dig))
        out.append(make_report(f"simple3_upper[lam={lam}]", gain, lf_ * rk + simple_constant(LOG9, rk), dig))
    if 4 in items:
        if sequence is None:
            raise ValueError("item 4 needs an exact sequence")
        rk1 = sequence.sub.rank
        total = h0(sequence.middle, budget=budget)
        parts = h0(sequence.sub, budget=budget) + h0(sequence.quotient, budget=budget)
        out.append(make_report("item4", total, parts + LOG18 * rk1 + 2 * log_factorial(rk1), dig))
        out.append(make_report("simple4", total, parts + simple_constant(LOG18, rk1), dig))
    if 5 in items:
        if not unit_basis:
            raise ValueError("item 5 needs a basis of vectors with norm at most one")
        for i in range(rk):
            e = [0] * rk
            e[i] = 1
            if module.norm.sign(e) > 0:
                raise ValueError(f"basis vector {i} has norm greater than one")
        out.append(make_report("item5", h1(module, budget=budget), math.log(3) * rk, dig))
    return out


# ---------------------------------------------------------------------------
# randomized instances


def random_integer_matrix(rng: np.random.Generator, rows: int, cols: int, lo: int = -3, hi: int = 3) -> list[list[int]]:
    while True:
        a = rng.integers(lo, hi + 1, size=(rows, cols))
        if np.linalg.matrix_rank(a) == cols:
            return a.tolist()


def random_module(rng: np.random.Generator, rank: int, kind: str, extra_rows: int | None = None) -> NormedZModule:
    """Norm from an integer matrix with entries in ``[-3, 3]`` divided by a small integer."""
    k = int(rng.integers(1, 4))
    if extra_rows is None:
        extra_rows = int(rng.integers(0, 3))
    a = random_integer_matrix(rng, rank + extra_rows, rank)
    if kind == "ellipsoid":
        g = np.array(a).T @ np.array(a)
        norm: NormSpec = Ellipsoid([[Fraction(int(v), k * k) for v in row] for row in g])
    elif kind == "max_abs":
        norm = MaxAbs([[Fraction(int(v), k) for v in row] for row in a])
    else:
        raise ValueError(f"unknown kind {kind}")
    return NormedZModule(rank, norm)


def random_unimodular(rng: np.random.Generator, n: int, steps: int = 6) -> list[list[int]]:
    u = np.eye(n, dtype=np.int64)
    for _ in range(steps):
        i, j = rng.choice(n, size=2, replace=False) if n > 1 else (0, 0)
        if i == j:
            continue
        u[:, i] += int(rng.integers(-2, 3)) * u[:, j]
    perm = rng.permutation(n)
    return u[:, perm].tolist()


def larger_norm_of(rng: np.random.Generator, norm: NormSpec) -> NormSpec:
    """A norm that dominates ``norm`` pointwise by construction."""
    n = norm.dim
    if isinstance(norm, Ellipsoid):
        b = np.array(random_integer_matrix(rng, n, n, -1, 1))
        extra = b.T @ b
        return Ellipsoid([[norm.gram[i][j] + Fraction(int(extra[i, j]), 4) for j in range(n)] for i in range(n)])
    if isinstance(norm, MaxAbs):
        row = [Fraction(int(v), 2) for v in rng.integers(-3, 4, size=n)]
        return MaxAbs([list(r) for r in norm.functionals] + [row])
    raise NormError("no dominating construction for this norm kind")


def unit_basis_module(rng: np.random.Generator, rank: int, kind: str) -> NormedZModule:
    """Random norm rescaled so every standard basis vector has norm at most one."""
    mod = random_module(rng, rank, kind)
    norm = mod.norm
    if isinstance(norm, Ellipsoid):
        top = max(norm.gram[i][i] for i in range(rank))
        new: NormSpec = Ellipsoid([[v / top for v in row] for row in norm.gram])
    else:
        top = max(abs(v) for row in norm.functionals for v in row)
        new = MaxAbs([[v / top for v in row] for row in norm.functionals])
    return mod.with_norm(new)


def suite_modules(seed: int, count: int, max_rank: int = 5) -> list[NormedZModule]:
    """Deterministic suite alternating ellipsoid and max-abs norms."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        rank = int(rng.integers(1, max_rank + 1))
        kind = "ellipsoid" if i % 2 == 0 else "max_abs"
        extra = int(rng.integers(0, 3)) if kind == "max_abs" else 0
        out.append(random_module(rng, rank, kind, extra_rows=extra))
    return out


def run_suite(
    modules: Sequence[NormedZModule],
    check: Callable[[NormedZModule], list[InequalityReport]],
) -> list[InequalityReport]:
    reports: list[InequalityReport] = []
    for mod in modules:
        reports.extend(check(mod))
    reports.sort(key=lambda r: (r.instance_digest, r.name))
    return reports
