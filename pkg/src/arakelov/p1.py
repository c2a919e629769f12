"""Binary forms on the projective line with the Fubini-Study metric.

A form ``s = sum_k a_k x^k y^(m-k)`` has pointwise norm
``|s(z0, z1)| / (|z0|^2 + |z1|^2)^(m/2)``.  In the chart
``u = |z0|^2 / (|z0|^2 + |z1|^2)``, ``phi = arg(z0 / z1)`` the normalised
Fubini-Study measure is ``du dphi / 2 pi`` and

    |s|^2 = |sum_k a_k u^(k/2) (1-u)^((m-k)/2) e^(i k phi)|^2,

so the monomials are orthogonal with ``||x^k y^(m-k)||_2^2 = k!(m-k)!/(m+1)!``.
The sup-norm is found by a grid search followed by golden-section
refinement; it is a lower bound with a heuristic gap, not a certificate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import exact
from .gs import LOG32, simple_constant
from .lattice import DEFAULT_BUDGET, BudgetExceeded, _log_radius, ball_box_bound, enumerate_ball
from .logreal import LogReal
from .norms import Ellipsoid, NormedZModule, NormError, NormSpec, _exp_float
from .volume import monte_carlo_volume

_GOLDEN = (math.sqrt(5) - 1) / 2
# forms whose refined sup is within this relative distance of the radius count
# as members (monomials sit exactly on the unit sphere)
MEMBERSHIP_RTOL = 1e-12


@dataclass(frozen=True)
class BinaryForm:
    coeffs: tuple  # a_0..a_m, coefficient of x^k y^(m-k)

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(int(c) for c in self.coeffs))
        if not self.coeffs:
            raise ValueError("a form of degree m has m+1 coefficients")

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, z0: complex, z1: complex) -> complex:
        m = self.degree
        return sum(a * z0**k * z1 ** (m - k) for k, a in enumerate(self.coeffs))


@dataclass(frozen=True)
class FSNormContext:
    m: int
    quad_nodes: int | None = None  # Gauss-Legendre nodes in u; phi uses the same count
    grid: int | None = None  # sup-search grid points in each chart direction
    tol: float = 1e-10
    starts: int = 3

    def __post_init__(self):
        if self.m < 0:
            raise ValueError("degree must be nonnegative")
        q = self.quad_nodes or 2 * (self.m + 1)
        object.__setattr__(self, "quad_nodes", max(q, 2 * (self.m + 1)))
        object.__setattr__(self, "grid", self.grid or max(16, 8 * (self.m + 1)))
        if self.tol <= 0:
            raise ValueError("tolerance must be positive")

    @property
    def total_quadrature_nodes(self) -> int:
        return self.quad_nodes * self.quad_nodes


def exact_l2_gram(m: int) -> list[list[Fraction]]:
    """Diagonal Gram matrix ``k!(m-k)!/(m+1)!`` of the monomial basis."""
    f = math.factorial
    return [[Fraction(f(k) * f(m - k), f(m + 1)) if j == k else Fraction(0) for k in range(m + 1)] for j in range(m + 1)]


def monomial_sup(m: int, k: int) -> float:
    """``sqrt(k^k (m-k)^(m-k) / m^m)`` with ``0^0 = 1``."""
    if m == 0:
        return 1.0
    lg = (k * math.log(k) if k else 0.0) + ((m - k) * math.log(m - k) if m - k else 0.0) - m * math.log(m)
    return math.exp(lg / 2)


def _radial(m: int, u: np.ndarray) -> np.ndarray:
    """``u^(k/2) (1-u)^((m-k)/2)`` for k = 0..m, shape ``u.shape + (m+1,)``."""
    u = np.clip(u, 0.0, 1.0)
    k = np.arange(m + 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        lu = np.where(k > 0, np.power.outer(u, k / 2), 1.0)
        lv = np.where(m - k > 0, np.power.outer(1 - u, (m - k) / 2), 1.0)
    return lu * lv


def _basis(m: int, u: np.ndarray, phi: np.ndarray) -> np.ndarray:
    return _radial(m, u) * np.exp(1j * np.multiply.outer(phi, np.arange(m + 1)))


def pointwise_norm(s: BinaryForm, z0: complex, z1: complex) -> float:
    r2 = abs(z0) ** 2 + abs(z1) ** 2
    if r2 == 0:
        raise ValueError("the zero vector is not a point of the projective line")
    return abs(s(z0, z1)) / r2 ** (s.degree / 2)


def l2_gram(ctx: FSNormContext) -> np.ndarray:
    """Gram matrix of the monomials by product quadrature (Gauss-Legendre x uniform)."""
    m = ctx.m
    xg, wg = np.polynomial.legendre.leggauss(ctx.quad_nodes)
    u = (xg + 1) / 2
    wu = wg / 2
    n_phi = max(ctx.quad_nodes, 2 * m + 1)
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    uu, pp = np.meshgrid(u, phi, indexing="ij")
    w = np.outer(wu, np.full(n_phi, 1.0 / n_phi)).ravel()
    b = _basis(m, uu.ravel(), pp.ravel())
    g = (b.conj().T * w) @ b
    return g.real


# ---------------------------------------------------------------------------
# sup-norm


class SupSearch:
    """Grid and refinement machinery for one degree."""

    def __init__(self, ctx: FSNormContext):
        self.ctx = ctx
        m = ctx.m
        n = ctx.grid
        theta = np.linspace(0, np.pi / 2, n)
        self.u = np.sin(theta) ** 2
        n_phi = max(n, 4 * m + 4)
        self.phi = 2 * np.pi * np.arange(n_phi) / n_phi
        uu, pp = np.meshgrid(self.u, self.phi, indexing="ij")
        self.grid_u = uu.ravel()
        self.grid_phi = pp.ravel()
        self.basis = _basis(m, self.grid_u, self.grid_phi)  # (G, m+1)
        self.du = np.pi / 2 / max(n - 1, 1)
        self.dphi = 2 * np.pi / n_phi

    def values(self, a: np.ndarray, u: np.ndarray, phi: np.ndarray) -> np.ndarray:
        """``|s_i(u_i, phi_i)|`` for rows of ``a`` (broadcast over trailing axes)."""
        # homogeneous Horner in z = sqrt(u) e^{i phi}, w = sqrt(1 - u)
        u = np.clip(u, 0.0, 1.0)
        z = np.sqrt(u) * np.exp(1j * phi)
        w = np.sqrt(1 - u)
        m = self.ctx.m
        acc = a[..., m].astype(complex)
        wp = np.ones_like(w)
        for k in range(m - 1, -1, -1):
            wp = wp * w
            acc = acc * z + a[..., k] * wp
        return np.abs(acc)

    def grid_max(self, a: np.ndarray, chunk: int = 2048):
        a = np.atleast_2d(np.asarray(a, dtype=float))
        vals = np.empty(len(a))
        arg = np.empty((len(a), self.ctx.starts), dtype=np.int64)
        for s in range(0, len(a), chunk):
            v = np.abs(a[s : s + chunk].astype(complex) @ self.basis.T)
            k = min(self.ctx.starts, v.shape[1])
            top = np.argpartition(-v, k - 1, axis=1)[:, :k] if v.shape[1] > k else np.tile(np.arange(v.shape[1]), (len(v), 1))
            vals[s : s + chunk] = v.max(axis=1)
            arg[s : s + chunk, : top.shape[1]] = top
            arg[s : s + chunk, top.shape[1] :] = top[:, :1]
        return vals, arg

    def _golden(self, f, lo, hi, iters):
        """Vectorised golden-section maximisation on ``[lo, hi]``."""
        c = hi - _GOLDEN * (hi - lo)
        d = lo + _GOLDEN * (hi - lo)
        fc, fd = f(c), f(d)
        for _ in range(iters):
            left = fc >= fd
            hi = np.where(left, d, hi)
            lo = np.where(left, lo, c)
            d_new = np.where(left, c, lo + _GOLDEN * (hi - lo))
            c_new = np.where(left, hi - _GOLDEN * (hi - lo), d)
            fd_new = np.where(left, fc, np.nan)
            fc_new = np.where(left, np.nan, fd)
            c, d = c_new, d_new
            need_c = np.isnan(fc_new)
            need_d = np.isnan(fd_new)
            fc = np.where(need_c, f(c), fc_new)
            fd = np.where(need_d, f(d), fd_new)
        x = (lo + hi) / 2
        return x, f(x)

    def refine(self, a: np.ndarray):
        """Refined lower bound for each row of ``a`` and the heuristic gap."""
        a = np.atleast_2d(np.asarray(a, dtype=float))
        grid_vals, starts = self.grid_max(a)
        best = grid_vals.copy()
        # near a smooth maximum the value error is quadratic in the argument error
        width = 2 * max(self.du, self.dphi)
        iters = int(math.ceil(math.log(math.sqrt(self.ctx.tol) / width) / math.log(_GOLDEN))) + 2
        last_change = np.zeros(len(a))
        for j in range(starts.shape[1]):
            idx = starts[:, j]
            th = np.arcsin(np.sqrt(self.grid_u[idx]))
            ph = self.grid_phi[idx].copy()
            val = self.values(a, np.sin(th) ** 2, ph)
            for _ in range(25):
                prev = val
                th, val = self._golden(lambda t: self.values(a, np.sin(np.clip(t, 0, np.pi / 2)) ** 2, ph), np.maximum(th - self.du, 0.0), np.minimum(th + self.du, np.pi / 2), iters)
                th = np.clip(th, 0, np.pi / 2)
                ph, val = self._golden(lambda p: self.values(a, np.sin(th) ** 2, p), ph - self.dphi, ph + self.dphi, iters)
                change = np.abs(val - prev)
                if np.all(change <= self.ctx.tol * (1 + val)):
                    break
            better = val > best
            last_change = np.where(better, change, last_change)
            best = np.maximum(best, val)
        gap = self.ctx.tol * (1 + best) + last_change
        return best, gap


def p1_sup_norm(s: BinaryForm, ctx: FSNormContext | None = None) -> tuple[float, float]:
    """``(lower bound, heuristic gap)`` for ``sup |s|``."""
    ctx = ctx or FSNormContext(s.degree)
    if ctx.m != s.degree:
        raise ValueError("context degree differs from the form degree")
    best, gap = SupSearch(ctx).refine(np.array([s.coeffs], dtype=float))
    return float(best[0]), float(gap[0])


@dataclass(frozen=True, eq=False)
class P1SupNorm(NormSpec):
    """Sup-norm on forms of degree ``m``, written in coordinates ``coeffs = T y``."""

    ctx: FSNormContext
    transform: tuple | None = None
    kind: str = field(default="p1_sup", init=False)
    line_intervals_exact = False

    def __post_init__(self):
        n = self.ctx.m + 1
        t = np.eye(n, dtype=np.int64) if self.transform is None else np.array(self.transform, dtype=np.int64)
        object.__setattr__(self, "_t", t)
        object.__setattr__(self, "_search", SupSearch(self.ctx))

    @property
    def dim(self) -> int:
        return self._t.shape[1]

    @property
    def exact_membership(self) -> bool:
        return False

    def _coeffs(self, xs) -> np.ndarray:
        return np.atleast_2d(np.asarray(xs, dtype=float)) @ self._t.T

    def evaluate(self, v) -> float:
        return float(self._search.refine(self._coeffs([v]))[0][0])

    def evaluate_many(self, xs):
        return self._search.grid_max(self._coeffs(xs))[0]

    def sign(self, x, rho=LogReal()):
        return int(self.sign_many(np.array([x]), rho)[0])

    def sign_many(self, xs, rho=LogReal()):
        xs = np.atleast_2d(np.asarray(xs))
        r = _exp_float(rho)
        coeffs = self._coeffs(xs)
        grid, _ = self._search.grid_max(coeffs)
        out = np.ones(len(xs), dtype=np.int64)
        cand = np.nonzero(grid <= r * (1 + 1e-12))[0]
        if len(cand):
            best, _ = self._search.refine(coeffs[cand])
            out[cand[best <= r * (1 + MEMBERSHIP_RTOL)]] = -1
        return out

    def bounding_form(self):
        g = np.diag([float(v[i]) for i, v in enumerate(exact_l2_gram(self.ctx.m))])
        t = self._t.astype(float)
        return t.T @ g @ t, 1.0

    def pullback(self, u):
        t = self._t @ np.array(u, dtype=np.int64)
        return P1SupNorm(self.ctx, tuple(map(tuple, t.tolist())))

    def line_intervals(self, p, u, rho):
        """Intersection over grid points of ``{t : |alpha + t beta| <= r}``; a superset."""
        r2 = _exp_float(rho * 2)
        basis = self._search.basis
        beta = (self._t @ np.asarray(u, dtype=float)) @ basis.T
        a = np.abs(beta) ** 2
        lo = np.full(len(p), -np.inf)
        hi = np.full(len(p), np.inf)
        empty = np.zeros(len(p), dtype=bool)
        flat = a < 1e-14
        for s in range(0, len(p), 1024):
            alpha = self._coeffs(p[s : s + 1024]) @ basis.T
            bb = (alpha * beta.conj()).real
            cc = np.abs(alpha) ** 2 - r2
            empty[s : s + 1024] |= (cc[:, flat] > 1e-12).any(axis=1)
            aa = a[~flat]
            b2, c2 = bb[:, ~flat], cc[:, ~flat]
            disc = b2 * b2 - aa * c2
            root = np.sqrt(np.maximum(disc, 0.0))
            l_ = (-b2 - root) / aa
            h_ = (-b2 + root) / aa
            lo[s : s + 1024] = l_.max(axis=1)
            hi[s : s + 1024] = h_.min(axis=1)
            empty[s : s + 1024] |= (disc < -1e-9 * (b2 * b2 + np.abs(aa * c2))).any(axis=1)
        return lo, hi, empty


def p1_module(m: int, norm_kind: str, ctx: FSNormContext | None = None) -> NormedZModule:
    ctx = ctx or FSNormContext(m)
    if norm_kind == "l2":
        return NormedZModule(m + 1, Ellipsoid(exact_l2_gram(m)))
    if norm_kind == "sup":
        return NormedZModule(m + 1, P1SupNorm(ctx))
    raise ValueError(f"unknown norm kind {norm_kind!r}")


@dataclass
class P1Count:
    count: int
    h0: float
    exact: bool
    ambiguous: int
    points_examined: int


def p1_h0(m: int, norm_kind: str = "sup", ctx: FSNormContext | None = None, *, budget: int = DEFAULT_BUDGET) -> P1Count:
    """Count integer forms of norm at most one.

    For the sup-norm, membership uses the refined lower bound, so the count is
    an upper bound on the true one; ``ambiguous`` counts members whose
    heuristic gap reaches past the boundary.
    """
    mod = p1_module(m, norm_kind, ctx)
    rep = enumerate_ball(mod, budget=budget, want_points=norm_kind == "sup")
    if not rep.exact:
        raise BudgetExceeded(f"p1 count for m={m} exceeded the budget", rep)
    amb = 0
    if norm_kind == "sup":
        best, gap = mod.norm._search.refine(rep.points)
        amb = int(np.sum(best + gap > 1 - 1e-12))
    return P1Count(rep.count, math.log(rep.count), amb == 0, amb, rep.points_examined)


def p1_brute_force(m: int, norm_kind: str = "sup", ctx: FSNormContext | None = None) -> int:
    """Scan the box ``|a_k| <= 1 / ||x^k y^(m-k)||`` (any ball member lies inside).

    The bound comes from the orthogonality of the monomials: the coefficient
    ``a_k`` of a form of norm at most one is at most the reciprocal of the
    monomial's norm, for the sup-norm as for the L2 norm.
    """
    mod = p1_module(m, norm_kind, ctx)
    if norm_kind == "l2":
        norms = [math.sqrt(float(exact_l2_gram(m)[k][k])) for k in range(m + 1)]
    else:
        norms = [monomial_sup(m, k) for k in range(m + 1)]
    bounds = [int(math.floor(1 / v + 1e-9)) for v in norms]
    axes = [np.arange(-b, b + 1) for b in bounds]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, m + 1)
    total = 0
    for s in range(0, len(grid), 1 << 15):
        total += int((mod.norm.sign_many(grid[s : s + (1 << 15)]) <= 0).sum())
    return total


@dataclass
class DualCount:
    count: int
    h1: float
    ambiguous: int


def p1_h1(m: int, ctx: FSNormContext | None = None) -> DualCount:
    """``h1`` of the sup-norm: integer ``phi`` with ``|<phi, a>| <= 1`` on the sup ball.

    Candidates satisfy ``|phi_k| <= ||x^k y^(m-k)||_sup``.  A candidate is in
    when ``sum |phi_k| / max_u(radial_k) <= 1`` (each ``|a_k|`` is bounded by
    ``1 / max radial_k`` on the ball); it is out when a test form ``a`` shows
    ``|<phi, a>| > ||a||_sup``.  Anything else is reported as ambiguous and counted.
    """
    ctx = ctx or FSNormContext(m)
    search = SupSearch(ctx)
    sups = [monomial_sup(m, k) for k in range(m + 1)]
    bounds = [int(math.floor(sk + 1e-12)) for sk in sups]
    axes = [np.arange(-b, b + 1) for b in bounds]
    cands = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, m + 1)
    count = 0
    ambiguous = 0
    for phi in cands:
        upper = sum(abs(int(p)) / sk for p, sk in zip(phi, sups))
        if upper <= 1 + 1e-12:
            count += 1
            continue
        # test forms: phi itself with signs, scaled into the ball by its sup
        best, gap = search.refine(np.array([phi], dtype=float))
        sup_phi = float(best[0] + gap[0])
        if sup_phi > 0 and float(phi @ phi) / sup_phi > 1 + 1e-9:
            continue
        ambiguous += 1
        count += 1
    return DualCount(count, math.log(count), ambiguous)


def p1_chi(m: int, norm_kind: str = "sup", ctx: FSNormContext | None = None, *, seed: int = 1, samples: int = 200_000):
    """``log vol`` of the unit ball; Monte Carlo for the sup-norm."""
    mod = p1_module(m, norm_kind, ctx)
    if norm_kind == "l2":
        v = mod.norm.exact_volume()
        return float(v[1]), 0.0
    res = monte_carlo_volume(mod.norm, seed=seed, samples=samples, rel_ci=None)
    return float(res.log_value), float(res.log_half_width)


@dataclass
class GromovResult:
    m: int
    max_ratio: float
    trials: int


def gromov_ratio(m: int, trials: int, ctx: FSNormContext | None = None, *, seed: int = 0, coeff_bound: int = 3) -> GromovResult:
    """``max ||s||_sup^2 / ((m+1)^2 ||s||_2^2)`` over seeded random integer forms."""
    if trials < 1:
        raise ValueError("need at least one trial")
    ctx = ctx or FSNormContext(m)
    rng = np.random.default_rng(np.random.SeedSequence([seed, m]))
    forms = rng.integers(-coeff_bound, coeff_bound + 1, size=(trials, m + 1))
    forms = forms[np.any(forms != 0, axis=1)]
    if len(forms) == 0:
        forms = np.ones((1, m + 1), dtype=np.int64)
    g = np.array([float(exact_l2_gram(m)[k][k]) for k in range(m + 1)])
    l2sq = (forms.astype(float) ** 2) @ g
    sup, _ = SupSearch(ctx).refine(forms)
    ratio = sup**2 / ((m + 1) ** 2 * l2sq)
    return GromovResult(m, float(ratio.max()), len(forms))


@dataclass
class HSRow:
    m: int
    h0: float
    h1: float
    chi: float
    chi_ci: float
    slope: float
    chi_slope: float
    gap_bound_holds: bool
    ambiguous: int


def hs_slope(m_max: int, ctx_factory=None, *, budget: int = DEFAULT_BUDGET, seed: int = 1, samples: int = 200_000) -> list[HSRow]:
    """``2 h0(m) / m^2`` and ``2 chi(m) / m^2`` for the sup-norm, with the window check."""
    if m_max > 8:
        raise ValueError("m_max is limited to 8")
    rows = []
    for m in range(1, m_max + 1):
        ctx = ctx_factory(m) if ctx_factory else FSNormContext(m)
        c = p1_h0(m, "sup", ctx, budget=budget)
        d = p1_h1(m, ctx)
        x, ci = p1_chi(m, "sup", ctx, seed=seed, samples=samples)
        gap = c.h0 - d.h1 - x
        bound = simple_constant(LOG32, m + 1)
        ok = bool(abs(gap) <= bound + 3 * ci)
        rows.append(HSRow(m, c.h0, d.h1, x, ci, 2 * c.h0 / m**2, 2 * x / m**2, ok, c.ambiguous + d.ambiguous))
    return rows
