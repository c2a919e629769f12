"""Normed invertible modules over number rings and their volume function.

A normed invertible module here is the free rank-one module ``Z[theta]``
with metric ``|x|_sigma = |sigma(x)| exp(-w_sigma)`` at every complex
embedding.  Its global sections of norm at most one are the lattice points
of an embedding sup-norm ball, so ``h0`` is a lattice count in rank
``[K:Q]``.  Tensor powers add weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np

from . import exact
from .gs import InequalityReport, make_report, simple_constant
from .lattice import DEFAULT_BUDGET, BudgetExceeded, enumerate_ball, h0, h1
from .logreal import DEFAULT_PRECISION_BITS, LogReal
from .norms import EmbeddingSup, NormedZModule
from .numring import NumberRing, RingError, ring_from_json

LOG18 = math.log(18)


@dataclass(frozen=True, eq=False)
class NormedInvertibleModule:
    ring: NumberRing
    weights: tuple

    def __post_init__(self):
        w = tuple(LogReal.coerce(v) for v in self.weights)
        if len(w) != self.ring.degree:
            raise RingError(f"expected {self.ring.degree} weights, got {len(w)}")
        if not self.ring.conjugate_symmetric(w):
            raise RingError("weights must agree on complex conjugate embeddings")
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_json(cls, obj) -> "NormedInvertibleModule":
        return cls(ring_from_json(obj["ring"]), obj["weights"])

    def to_json(self) -> dict:
        return {"ring": self.ring.ring_id, "weights": [w.to_json() for w in self.weights]}

    @property
    def degree(self) -> int:
        return self.ring.degree

    def lattice(self) -> NormedZModule:
        """The rank-``d`` normed Z-module of global sections."""
        return NormedZModule(self.degree, EmbeddingSup(self.ring, self.weights))

    def scaled(self, lam) -> "NormedInvertibleModule":
        """``exp(-lam)`` times the metric: every weight grows by ``lam``."""
        lam = LogReal.coerce(lam)
        return NormedInvertibleModule(self.ring, tuple(w + lam for w in self.weights))

    def __eq__(self, other):
        return isinstance(other, NormedInvertibleModule) and self.ring == other.ring and self.weights == other.weights

    def __hash__(self):
        return hash((self.ring, self.weights))


def _mul_weight(w: LogReal, k) -> LogReal:
    if isinstance(k, int):
        return w * k
    return w * exact.to_fraction(k)


def combine(L: NormedInvertibleModule, a, A: NormedInvertibleModule | None = None, b=0) -> NormedInvertibleModule:
    """``aL + bA``: weights ``a w_L + b w_A`` (``a``, ``b`` integers or rationals)."""
    if A is not None and A.ring != L.ring:
        raise RingError("modules live over different rings")
    ws = []
    for k in range(L.degree):
        w = _mul_weight(L.weights[k], a)
        if A is not None and b != 0:
            w = w + _mul_weight(A.weights[k], b)
        ws.append(w)
    return NormedInvertibleModule(L.ring, tuple(ws))


@dataclass(frozen=True)
class CertifiedValue:
    value: float
    error: float


def _abs_embeddings(module: NormedInvertibleModule, x: Sequence[int], prec: int):
    out = []
    with mpmath.workprec(prec + 30):
        for k in range(module.degree):
            val, err = module.ring.embed_mp([int(c) for c in x], k, prec)
            scale = mpmath.exp(-module.weights[k].mp(prec + 30))
            out.append((abs(val) * scale, err * scale))
    return out


def sup_norm(module: NormedInvertibleModule, x: Sequence[int], prec: int = DEFAULT_PRECISION_BITS) -> CertifiedValue:
    """``max_sigma |sigma(x)| exp(-w_sigma)`` with an error bound."""
    if not any(int(c) for c in x):
        return CertifiedValue(0.0, 0.0)
    vals = _abs_embeddings(module, x, prec)
    v, e = max(vals, key=lambda t: t[0])
    return CertifiedValue(float(v), float(e) + abs(float(v)) * 2**-50)


def c_prime(module: NormedInvertibleModule, s: Sequence[int], prec: int = DEFAULT_PRECISION_BITS) -> CertifiedValue:
    """``min_sigma |sigma(s)| exp(-w_sigma)``."""
    if not any(int(c) for c in s):
        raise ValueError("s must be nonzero")
    vals = _abs_embeddings(module, s, prec)
    v, e = min(vals, key=lambda t: t[0])
    return CertifiedValue(float(v), float(e) + abs(float(v)) * 2**-50)


def sup_norm_sign(module: NormedInvertibleModule, x: Sequence[int]) -> int:
    """Exact sign of ``||x||_sup - 1``."""
    return module.lattice().norm.sign([int(c) for c in x])


def adeg_exact(module: NormedInvertibleModule) -> LogReal:
    total = LogReal()
    for w in module.weights:
        total = total + w
    return total


def adeg(module: NormedInvertibleModule) -> float:
    """Arithmetic degree ``sum over all embeddings of w_sigma``."""
    return float(adeg_exact(module))


def coker_log(ring: NumberRing, s: Sequence[int]) -> float:
    """``log #Coker(R --s--> R) = log |N(s)|`` from the integer determinant."""
    n = ring.norm([int(c) for c in s])
    if n == 0:
        raise ValueError("s must be nonzero")
    return math.log(abs(n))


def h0_curve(module: NormedInvertibleModule, *, budget: int = DEFAULT_BUDGET) -> float:
    return h0(module.lattice(), budget=budget)


def h1_curve(module: NormedInvertibleModule, *, budget: int = DEFAULT_BUDGET) -> float:
    return h1(module.lattice(), budget=budget)


# ---------------------------------------------------------------------------
# the volume function


@dataclass
class EstimateSeries:
    m: list[int] = field(default_factory=list)
    h0: list[float] = field(default_factory=list)
    counts: list[int] = field(default_factory=list)
    truncated: bool = False
    stop_reason: str = ""

    @property
    def ratios(self) -> list[float]:
        return [h / m for m, h in zip(self.m, self.h0)]

    @property
    def running_sup(self) -> float:
        return max(self.ratios) if self.m else float("nan")

    @property
    def last(self) -> float:
        return self.ratios[-1] if self.m else float("nan")

    @property
    def extrapolated(self) -> float:
        """Least-squares slope of ``h0(m)`` against ``m`` over the top half of the range."""
        if not self.m:
            return float("nan")
        if len(self.m) == 1:
            return self.ratios[0]
        top = self.m[-1]
        idx = [i for i, m in enumerate(self.m) if 2 * m >= top]
        if len(idx) < 2:
            idx = list(range(len(self.m)))[-2:]
        x = np.array([self.m[i] for i in idx], dtype=float)
        y = np.array([self.h0[i] for i in idx])
        return float(np.polyfit(x, y, 1)[0])

    def rows(self) -> list[tuple[int, float, float]]:
        return [(m, h, h / m) for m, h in zip(self.m, self.h0)]

    def to_json(self) -> dict:
        return {
            "entries": [{"m": m, "h0": h, "h0_over_m": r} for m, h, r in self.rows()],
            "counts": list(self.counts),
            "running_sup": self.running_sup,
            "last": self.last,
            "extrapolated": self.extrapolated,
            "truncated": self.truncated,
            "stop_reason": self.stop_reason,
        }


def volume_estimate(
    L: NormedInvertibleModule,
    N: NormedInvertibleModule | None = None,
    m_max: int | None = None,
    *,
    count_cap: int | None = None,
    budget: int = DEFAULT_BUDGET,
) -> EstimateSeries:
    """``h0(mL + N)`` for ``m = 1, 2, ...``.

    Stops at ``m_max``, or before the first ``m`` whose ball holds more than
    ``count_cap`` points, or when the enumeration budget runs out (then the
    series is flagged as truncated).
    """
    if m_max is None and count_cap is None:
        raise ValueError("give m_max or count_cap")
    series = EstimateSeries()
    m = 0
    while m_max is None or m < m_max:
        m += 1
        mod = combine(L, m, N, 1) if N is not None else combine(L, m)
        rep = enumerate_ball(mod.lattice(), budget=budget)
        if not rep.exact:
            series.truncated = True
            series.stop_reason = f"budget exceeded at m={m}"
            break
        if count_cap is not None and rep.count > count_cap:
            series.stop_reason = f"count above {count_cap} at m={m}"
            break
        series.m.append(m)
        series.h0.append(rep.log_count_plus_torsion)
        series.counts.append(rep.count)
    else:
        series.stop_reason = f"reached m_max={m_max}"
    return series


def prop37_constants(L: NormedInvertibleModule, A: NormedInvertibleModule, s: Sequence[int]) -> tuple[float, float]:
    """``(C, D)`` with ``C = log #Coker(s) + d |log C'(s)|`` and ``D = 2 (log 18 + 2)(d+1) log(d+1)``."""
    d = L.degree
    cp = c_prime(A, s)
    c = coker_log(L.ring, s) + d * abs(math.log(cp.value))
    return c, 2 * simple_constant(LOG18, d)


def prop37_verify(
    L: NormedInvertibleModule,
    A: NormedInvertibleModule,
    s: Sequence[int],
    a_max: int,
    *,
    budget: int = DEFAULT_BUDGET,
) -> list[InequalityReport]:
    """Check ``h0(aL + (b-c)A) <= h0(aL - cA) + C b + D`` for ``0 <= c <= b <= a <= a_max``."""
    if L.ring != A.ring:
        raise RingError("modules live over different rings")
    s = [int(c) for c in s]
    if not any(s):
        raise ValueError("s must be nonzero")
    if sup_norm_sign(A, s) > 0:
        raise ValueError("the section s must have sup-norm at most one")
    cc, dd = prop37_constants(L, A, s)
    cache: dict[tuple[int, int], float] = {}

    def h(a, k):
        if (a, k) not in cache:
            cache[(a, k)] = h0(combine(L, a, A, k).lattice(), budget=budget)
        return cache[(a, k)]

    dig = f"{L.ring.ring_id}|{[str(w) for w in L.weights]}|{[str(w) for w in A.weights]}|{s}"
    out = []
    for a in range(a_max + 1):
        for b in range(a + 1):
            for c in range(b + 1):
                out.append(make_report(f"prop37[a={a},b={b},c={c}]", h(a, b - c), h(a, -c) + cc * b + dd, dig))
    return out


@dataclass
class ContinuityRow:
    eps: float
    estimate: float
    prediction: float
    m_max: int

    @property
    def gap(self) -> float:
        return abs(self.estimate - self.prediction)


def continuity_table(
    L: NormedInvertibleModule,
    A: NormedInvertibleModule,
    eps_list: Sequence,
    m: int,
    *,
    budget: int = DEFAULT_BUDGET,
) -> list[ContinuityRow]:
    """Volume estimate of ``L + eps A`` at a common ``m`` against ``adeg L + eps adeg A``."""
    rows = []
    for eps in eps_list:
        e = exact.to_fraction(eps)
        mod = combine(L, 1, A, e) if e != 0 else L
        series = volume_estimate(mod, m_max=m, budget=budget)
        if series.truncated:
            raise BudgetExceeded(f"budget exceeded for eps={eps}")
        rows.append(ContinuityRow(float(e), series.extrapolated, adeg(L) + float(e) * adeg(A), m))
    return rows


@dataclass
class BignessResult:
    status: str  # "big", "not_big" or "inconclusive"
    witness: list[int] | None = None
    m: int | None = None
    sup_value: float | None = None


def bigness_classify(L: NormedInvertibleModule, m_probe: int, *, budget: int = DEFAULT_BUDGET) -> BignessResult:
    """Look for a nonzero ``x`` with ``||x||_sup < 1`` on ``mL`` for ``m <= m_probe``.

    A nonpositive arithmetic degree rules such sections out (the norm of a
    nonzero algebraic integer is at least one), which gives ``not_big``.
    """
    if adeg_exact(L).sign() <= 0:
        return BignessResult("not_big")
    for m in range(1, m_probe + 1):
        mod = combine(L, m)
        rep = enumerate_ball(mod.lattice(), budget=budget, want_points=True)
        if rep.points is None:
            continue
        norm = mod.lattice().norm
        # x and -x have the same norm; report the one with a positive leading entry
        nonzero = [p for p in rep.points if np.any(p) and p[np.flatnonzero(p)[0]] > 0]
        nonzero.sort(key=lambda p: (norm.evaluate(p), tuple(abs(int(v)) for v in p)))
        for p in nonzero:
            if norm.sign([int(v) for v in p]) < 0:
                x = [int(v) for v in p]
                return BignessResult("big", x, m, sup_norm(mod, x).value)
        if not rep.exact:
            break
    return BignessResult("inconclusive")


@dataclass
class ComparisonReport:
    name: str
    lhs: float
    rhs: float
    slack: float
    holds: bool


def homogeneity_check(L: NormedInvertibleModule, p: int, m: int, tol: float = 0.05, *, budget: int = DEFAULT_BUDGET) -> ComparisonReport:
    """``estimate(pL, m)`` against ``p * estimate(L, p m)``."""
    if p < 1:
        raise ValueError("p must be positive")
    lhs = volume_estimate(combine(L, p), m_max=m, budget=budget)
    rhs = volume_estimate(L, m_max=p * m, budget=budget)
    if lhs.truncated or rhs.truncated:
        raise BudgetExceeded("budget exceeded in homogeneity check")
    a, b = lhs.extrapolated, p * rhs.extrapolated
    return ComparisonReport(f"homogeneity[p={p}]", a, b, abs(a - b), abs(a - b) <= tol)


@dataclass
class ScalingReport:
    lam: float
    estimate: float
    estimate_scaled: float
    adeg_gain: LogReal
    adeg_gain_expected: LogReal
    holds: bool
    tol: float


def scaling_check(L: NormedInvertibleModule, lam, m: int, tol: float = 0.05, *, budget: int = DEFAULT_BUDGET) -> ScalingReport:
    """``est(L) <= est(L^lam) <= est(L) + lam [K:Q]`` and the exact degree shift."""
    lam_r = LogReal.coerce(lam)
    if lam_r.sign() < 0:
        raise ValueError("lambda must be nonnegative")
    Ls = L.scaled(lam_r)
    e0 = volume_estimate(L, m_max=m, budget=budget).extrapolated
    e1 = volume_estimate(Ls, m_max=m, budget=budget).extrapolated
    gain = adeg_exact(Ls) - adeg_exact(L)
    expected = lam_r * L.degree
    d = L.degree
    ok = (e0 <= e1 + tol) and (e1 <= e0 + float(lam_r) * d + tol) and gain == expected
    return ScalingReport(float(lam_r), e0, e1, gain, expected, ok, tol)


def h1_vanishing_threshold(L: NormedInvertibleModule, m_max: int, *, budget: int = DEFAULT_BUDGET) -> int | None:
    """Least ``m0 <= m_max`` with ``h1(mL) = 0`` for every ``m0 <= m <= m_max``."""
    m0 = None
    for m in range(1, m_max + 1):
        v = h1_curve(combine(L, m), budget=budget)
        if v == 0.0:
            m0 = m if m0 is None else m0
        else:
            m0 = None
    return m0
