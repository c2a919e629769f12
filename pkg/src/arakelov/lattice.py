"""Counting lattice points in norm balls.

The count of ``{x in Z^n : ||x|| <= r}`` is obtained in three steps:

1. LLL-reduce the bounding quadratic form of the norm and pull the norm
   back through the reducing unimodular matrix (changes speed, not counts);
2. Fincke-Pohst traversal of the bounding ellipsoid over coordinates
   ``n-1, ..., 1``, vectorised over chunks of prefixes;
3. on each remaining line ``p + t e_0`` the members form an integer interval
   (convexity), whose float endpoints are confirmed by exact sign tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable

import numpy as np

from . import exact
from .logreal import LogReal
from .norms import Ellipsoid, MaxAbs, NormedZModule, NormError, NormSpec, Scaled
from .reduction import lll_gram

DEFAULT_BUDGET = 10_000_000
CHUNK = 1 << 16
# relative slack on float interval endpoints before an exact test is needed
_DELTA = 1e-6


class BudgetExceeded(RuntimeError):
    """Enumeration stopped at its points-examined cap."""

    def __init__(self, message: str, report: "EnumerationReport | None" = None):
        super().__init__(message)
        self.report = report


@dataclass
class EnumerationReport:
    count: int
    log_count_plus_torsion: float
    bounding_ellipsoid_radius: float
    points_examined: int
    exact: bool
    points: np.ndarray | None = field(default=None, repr=False)

    def to_json(self) -> dict:
        return {
            "count": self.count,
            "log_count_plus_torsion": self.log_count_plus_torsion,
            "bounding_ellipsoid_radius": self.bounding_ellipsoid_radius,
            "points_examined": self.points_examined,
            "exact": self.exact,
        }


def _log_radius(radius) -> LogReal:
    if isinstance(radius, LogReal):
        return radius
    r = exact.to_fraction(radius)
    if r <= 0:
        raise ValueError("radius must be positive")
    return LogReal.log(r)


class _Enumerator:
    def __init__(self, norm: NormSpec, rho: LogReal, budget: int, want_points: bool):
        self.norm = norm
        self.rho = rho
        self.budget = budget
        self.want_points = want_points
        self.examined = 0
        self.count = 0
        self.chunks: list[np.ndarray] = []
        n = norm.dim
        q, c = norm.bounding_form()
        scale = math.exp(2 * float(rho))
        self.r2 = c * scale
        u = lll_gram(q)
        self.u = u
        self.reduced = norm.pullback(u) if not np.array_equal(u, np.eye(n, dtype=np.int64)) else norm
        qr = u.T.astype(float) @ q @ u.astype(float)
        qr = (qr + qr.T) / 2
        r = np.linalg.cholesky(qr).T  # upper triangular, qr = r^T r
        self.d = np.diag(r) ** 2
        self.mu = r / np.diag(r)[:, None]
        self.r2_inflated = self.r2 * (1 + 1e-9) + 1e-12
        self.n = n

    # -- traversal -----------------------------------------------------------
    def run(self) -> bool:
        n = self.n
        if n == 1:
            return self._lines(np.zeros((1, 1), dtype=np.int64), np.zeros(1))
        # stack entries: (level, prefixes [rows, n], partial sums)
        start = np.zeros((1, n), dtype=np.int64)
        stack = [(n - 1, start, np.zeros(1))]
        while stack:
            level, pref, part = stack.pop()
            if level == 0:
                if not self._lines(pref, part):
                    return False
                continue
            self.examined += len(pref)
            if self.examined > self.budget:
                return False
            child, cpart = self._expand(level, pref, part)
            # keep children in order so that the traversal is deterministic
            for s in reversed(range(0, len(child), CHUNK)):
                stack.append((level - 1, child[s : s + CHUNK], cpart[s : s + CHUNK]))
        return True

    def _expand(self, k: int, pref: np.ndarray, part: np.ndarray):
        mu = self.mu
        center = -(pref[:, k + 1 :].astype(float) @ mu[k, k + 1 :]) if k + 1 < self.n else np.zeros(len(pref))
        room = np.maximum(self.r2_inflated - part, 0.0) / self.d[k]
        rad = np.sqrt(room) * (1 + 1e-9) + 1e-9
        lo = np.ceil(center - rad).astype(np.int64)
        hi = np.floor(center + rad).astype(np.int64)
        sizes = np.maximum(hi - lo + 1, 0)
        total = int(sizes.sum())
        if total == 0:
            return np.zeros((0, self.n), dtype=np.int64), np.zeros(0)
        rows = np.repeat(np.arange(len(pref)), sizes)
        offs = np.arange(total) - np.repeat(np.cumsum(sizes) - sizes, sizes)
        child = pref[rows].copy()
        child[:, k] = lo[rows] + offs
        t = child[:, k] - center[rows]
        cpart = part[rows] + self.d[k] * t * t
        keep = cpart <= self.r2_inflated
        return child[keep], cpart[keep]

    def _lines(self, pref: np.ndarray, part: np.ndarray) -> bool:
        self.examined += len(pref)
        if self.examined > self.budget:
            return False
        e0 = np.zeros(self.n, dtype=np.int64)
        e0[0] = 1
        iv = self.reduced.line_intervals(pref, e0, self.rho)
        if iv is None:
            return self._filter_candidates(pref, part)
        lo, hi, empty = iv
        keep = ~empty & np.isfinite(lo) & np.isfinite(hi)
        pref, lo, hi = pref[keep], lo[keep], hi[keep]
        slack = _DELTA * (1 + np.abs(lo) + np.abs(hi))
        a = np.ceil(lo - slack).astype(np.int64)
        b = np.floor(hi + slack).astype(np.int64)
        # endpoints within slack of the float boundary are settled exactly;
        # by convexity the members on each line are the integers in [a, b]
        if getattr(self.reduced, "line_intervals_exact", True):
            amb_a = (a < lo + slack) & (a <= b)
            amb_b = (b > hi - slack) & (a <= b)
        else:
            # the intervals only bound the members from outside: test every endpoint
            amb_a = a <= b
            amb_b = a <= b
        a, b = self._settle(pref, a, b, amb_a, lower=True)
        a, b = self._settle(pref, a, b, amb_b, lower=False)
        sizes = np.maximum(b - a + 1, 0)
        self.count += int(sizes.sum())
        if self.want_points and sizes.sum():
            rows = np.repeat(np.arange(len(pref)), sizes)
            offs = np.arange(int(sizes.sum())) - np.repeat(np.cumsum(sizes) - sizes, sizes)
            pts = pref[rows].copy()
            pts[:, 0] = a[rows] + offs
            self.chunks.append(pts)
        return self.examined <= self.budget

    def _settle(self, pref, a, b, amb, lower: bool):
        """Move ambiguous endpoints until they are exactly inside, or the line empties."""
        idx = np.nonzero(amb)[0]
        step = 1 if lower else -1
        while len(idx):
            pts = pref[idx].copy()
            pts[:, 0] = a[idx] if lower else b[idx]
            s = self.reduced.sign_many(pts, self.rho)
            self.examined += len(idx)
            outside = idx[s > 0]
            if lower:
                a[outside] += step
            else:
                b[outside] += step
            idx = outside[a[outside] <= b[outside]]
        # an endpoint that tested inside may still have members beyond it if the
        # float interval was too short: extend while the next integer is inside
        idx = np.nonzero(amb & (a <= b))[0]
        while len(idx):
            pts = pref[idx].copy()
            pts[:, 0] = (a[idx] - 1) if lower else (b[idx] + 1)
            s = self.reduced.sign_many(pts, self.rho)
            self.examined += len(idx)
            inside = idx[s <= 0]
            if lower:
                a[inside] -= 1
            else:
                b[inside] += 1
            idx = inside
        return a, b

    def _filter_candidates(self, pref: np.ndarray, part: np.ndarray) -> bool:
        child, _ = self._expand(0, pref, part)
        self.examined += len(child)
        if self.examined > self.budget:
            return False
        if len(child) == 0:
            return True
        s = self.reduced.sign_many(child, self.rho)
        members = child[s <= 0]
        self.count += len(members)
        if self.want_points:
            self.chunks.append(members)
        return True

    def points(self) -> np.ndarray:
        if not self.chunks:
            return np.zeros((0, self.n), dtype=np.int64)
        y = np.vstack(self.chunks)
        x = y @ self.u.T
        order = np.lexsort(x.T[::-1])
        return x[order]


def enumerate_ball(
    module: NormedZModule,
    radius=1,
    *,
    budget: int = DEFAULT_BUDGET,
    want_points: bool = False,
) -> EnumerationReport:
    """Exact count of ``{x in Z^rank : ||x|| <= radius}``.

    ``radius`` may be a rational number or a :class:`LogReal` log-radius.
    When the points-examined budget runs out the partial count is returned
    with ``exact=False``.
    """
    rho = _log_radius(radius)
    tors = module.torsion.log_order
    if module.rank == 0:
        pts = np.zeros((1, 0), dtype=np.int64) if want_points else None
        return EnumerationReport(1, tors, 0.0, 1, True, pts)
    en = _Enumerator(module.norm, rho, budget, want_points)
    ok = en.run()
    pts = en.points() if want_points else None
    count = en.count
    log_count = math.log(count) + tors if count else float("-inf")
    return EnumerationReport(count, log_count, math.sqrt(en.r2), en.examined, ok, pts)


def h0(module: NormedZModule, *, budget: int = DEFAULT_BUDGET) -> float:
    """``log #{x : ||x|| <= 1} + log #M_tor``; zero for the zero module."""
    if module.rank == 0:
        return module.torsion.log_order
    rep = enumerate_ball(module, budget=budget)
    if not rep.exact:
        raise BudgetExceeded(f"enumeration exceeded {budget} examined points", rep)
    return rep.log_count_plus_torsion


def h1(module: NormedZModule, *, budget: int = DEFAULT_BUDGET) -> float:
    """``h0`` of the dual lattice with the dual norm."""
    return h0(module.dual(), budget=budget)


def _polar_support(norm: NormSpec):
    """Exact support function ``x -> sup_{||y||<=1} <x, y>`` and a float screen."""
    if isinstance(norm, Scaled):
        inner_exact, inner_float = _polar_support(norm.inner)
        lam = norm.lam
        return (lambda x, rho: inner_exact(x, rho - lam)), (lambda xs: inner_float(xs) * math.exp(float(lam)))
    if isinstance(norm, Ellipsoid):
        g = [list(r) for r in norm.gram]
        ginv = np.linalg.inv(norm._float)

        def exact_cmp(x, rho):
            from .logreal import cmp_rational_exp

            y = exact.solve(g, [Fraction(v) for v in x])
            return cmp_rational_exp(exact.dot(x, y), rho * 2)

        def screen(xs):
            return np.sqrt(np.einsum("ij,jk,ik->i", xs, ginv, xs))

        return exact_cmp, screen
    if isinstance(norm, MaxAbs):
        from scipy.optimize import linprog

        f = [list(r) for r in norm.functionals]
        ff = norm._float
        m, n = ff.shape

        def lp_value(x):
            # sup <x, y> s.t. -1 <= F y <= 1, as an exact min over y = y+ - y-
            a_eq, b_eq = [], []
            nv = 2 * n + 2 * m
            for j in range(m):
                row = [Fraction(0)] * nv
                for i in range(n):
                    row[i] = f[j][i]
                    row[n + i] = -f[j][i]
                row[2 * n + j] = Fraction(1)
                a_eq.append(row)
                b_eq.append(Fraction(1))
                row = [Fraction(0)] * nv
                for i in range(n):
                    row[i] = -f[j][i]
                    row[n + i] = f[j][i]
                row[2 * n + m + j] = Fraction(1)
                a_eq.append(row)
                b_eq.append(Fraction(1))
            cost = [-Fraction(v) for v in x] + [Fraction(v) for v in x] + [0] * (2 * m)
            val, _ = exact.linprog_min(cost, a_eq, b_eq)
            return -val

        def exact_cmp(x, rho):
            from .logreal import cmp_rational_exp

            return cmp_rational_exp(lp_value(x), rho)

        def screen(xs):
            out = np.empty(len(xs))
            bounds = [(None, None)] * n
            a_ub = np.vstack([ff, -ff])
            b_ub = np.ones(2 * m)
            for i, x in enumerate(xs):
                res = linprog(-x, A_ub=a_ub, b_ub=b_ub, bounds=bounds, method="highs")
                out[i] = -res.fun
            return out

        return exact_cmp, screen
    raise NormError(f"polar-body counting is not implemented for {norm.kind} norms")


def h1_polar(module: NormedZModule, *, budget: int = DEFAULT_BUDGET) -> float:
    """``h1`` as ``log #{x in Z^n : |<x, y>| <= 1 for all y in B}``.

    Independent of :func:`h1`: candidates come from the box ``|x_i| <= ||e_i||``
    (``e_i / ||e_i||`` lies in ``B``) and membership uses the support function of
    ``B`` directly rather than a dual norm object.
    """
    if module.rank == 0:
        return 0.0
    norm = module.norm
    n = module.rank
    exact_cmp, screen = _polar_support(norm)
    bounds = []
    for i in range(n):
        e = [0] * n
        e[i] = 1
        bounds.append(int(math.floor(norm.evaluate(e) * (1 + 1e-9) + 1e-9)))
    size = math.prod(2 * b + 1 for b in bounds)
    if size > budget:
        raise BudgetExceeded(f"polar box has {size} points, over the budget {budget}")
    axes = [np.arange(-b, b + 1) for b in bounds]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
    vals = screen(grid.astype(float))
    count = 0
    for x, v in zip(grid, vals):
        if v < 1 - 1e-7:
            count += 1
        elif v <= 1 + 1e-7:
            if exact_cmp([int(t) for t in x], LogReal()) <= 0:
                count += 1
    return math.log(count)


def ball_box_bound(norm: NormSpec, radius=1) -> list[float]:
    """Per-coordinate bound ``max |x_i|`` over the bounding ellipsoid of the ball."""
    rho = _log_radius(radius)
    q, c = norm.bounding_form()
    qinv = np.linalg.inv(q)
    r = math.sqrt(c) * math.exp(float(rho))
    return [r * math.sqrt(qinv[i, i]) for i in range(norm.dim)]


def brute_force_oracle(module: NormedZModule, box_radius: int, radius=1, *, limit: int = 10**8) -> int:
    """Count ball points by scanning the whole box ``|x_i| <= box_radius``.

    Refuses to run when the box does not provably contain the ball.
    """
    n = module.rank
    if n == 0:
        return 1
    if n > 6:
        raise ValueError("brute force is limited to rank <= 6")
    size = (2 * box_radius + 1) ** n
    if size > limit:
        raise BudgetExceeded(f"box has {size} points, over the limit {limit}")
    bound = ball_box_bound(module.norm, radius)
    if any(b * (1 + 1e-9) + 1e-9 >= box_radius + 1 for b in bound):
        raise ValueError(f"box radius {box_radius} does not contain the ball (needs {max(bound):.3f})")
    rho = _log_radius(radius)
    axis = np.arange(-box_radius, box_radius + 1, dtype=np.int64)
    total = 0
    # scan the box one slab of the first coordinate at a time
    rest = np.stack(np.meshgrid(*([axis] * (n - 1)), indexing="ij"), axis=-1).reshape(-1, n - 1) if n > 1 else None
    for v in axis:
        if rest is None:
            pts = np.array([[v]], dtype=np.int64)
        else:
            pts = np.hstack([np.full((len(rest), 1), v, dtype=np.int64), rest])
        for s in range(0, len(pts), 1 << 18):
            total += int((module.norm.sign_many(pts[s : s + (1 << 18)], rho) <= 0).sum())
    return total


def write_points(path: str | Path, points: Iterable) -> None:
    """One integer vector per line, space separated."""
    with open(path, "w") as fh:
        for p in points:
            fh.write(" ".join(str(int(v)) for v in p) + "\n")


def read_points(path: str | Path) -> np.ndarray:
    rows = [[int(t) for t in line.split()] for line in Path(path).read_text().splitlines() if line.strip()]
    return np.array(rows, dtype=np.int64)
