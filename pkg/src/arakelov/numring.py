"""Orders ``Z[x]/(f)`` with certified complex embeddings.

Roots of ``f`` are computed with mpmath and certified by Weierstrass
inclusion disks: for monic ``f`` of degree ``d`` and pairwise distinct
approximations ``z_i``, each disk ``D(z_i, d*|f(z_i)/prod_{j!=i}(z_i-z_j)|)``
contains a root, and when the disks are disjoint each holds exactly one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import mpmath
import numpy as np
import sympy

from . import exact
from .logreal import DEFAULT_PRECISION_BITS, MAX_PRECISION_BITS, LogReal, PrecisionError, cmp_interval_exp


class RingError(ValueError):
    pass


@dataclass(frozen=True)
class Place:
    kind: str  # "real" or "complex"
    embedding: int  # index into NumberRing.embeddings
    conjugate: int  # same as embedding for real places


@dataclass(eq=False)
class NumberRing:
    """The order ``Z[theta]`` for a monic irreducible integer polynomial."""

    poly: tuple[int, ...]  # c_0, ..., c_{d-1}, 1
    precision_bits: int = DEFAULT_PRECISION_BITS
    _roots: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.poly = tuple(int(c) for c in self.poly)
        if len(self.poly) < 2 or self.poly[-1] != 1:
            raise RingError("defining polynomial must be monic of degree >= 1")
        x = sympy.Symbol("x")
        p = sympy.Poly(list(reversed(self.poly)), x, domain="ZZ")
        if sympy.gcd(p, p.diff(x)).degree() > 0:
            raise RingError("defining polynomial is not squarefree")
        if not p.is_irreducible:
            raise RingError("defining polynomial is reducible over Q")
        self._sympy_poly = p
        self.degree = len(self.poly) - 1
        roots, radii = self.certified_roots(self.precision_bits)
        self._order_embeddings(roots, radii)
        self.r1 = sum(1 for pl in self.places if pl.kind == "real")
        self.r2 = len(self.places) - self.r1
        with mpmath.workprec(80):
            self.float_roots = np.array([complex(roots[i]) for i in self.order])
        for i, pl in enumerate(self.places):
            if pl.kind == "real":
                self.float_roots[pl.embedding] = self.float_roots[pl.embedding].real
        self.vandermonde = np.array([[z**k for z in self.float_roots] for k in range(self.degree)])
        self.discriminant = int(sympy.discriminant(p))

    # -- identity ----------------------------------------------------------
    @property
    def ring_id(self) -> str:
        return ",".join(str(c) for c in self.poly)

    @property
    def signature(self) -> tuple[int, int]:
        return self.r1, self.r2

    def __eq__(self, other):
        return isinstance(other, NumberRing) and other.poly == self.poly

    def __hash__(self):
        return hash(self.poly)

    def to_json(self) -> dict:
        return {"poly": list(self.poly), "precision_bits": self.precision_bits}

    # -- roots -------------------------------------------------------------
    def certified_roots(self, prec: int):
        """Root approximations and inclusion radii at ``prec`` bits (cached)."""
        if prec in self._roots:
            return self._roots[prec]
        d = len(self.poly) - 1
        work = prec
        while work <= MAX_PRECISION_BITS:
            with mpmath.workprec(work + 30):
                coeffs = [mpmath.mpf(c) for c in reversed(self.poly)]
                if d == 1:
                    roots = [-coeffs[1]]
                else:
                    roots = mpmath.polyroots(coeffs, maxsteps=200 + 4 * work, extraprec=2 * work)
                roots = [mpmath.mpc(r) for r in roots]
                radii = []
                for i, z in enumerate(roots):
                    fz = mpmath.polyval(coeffs, z)
                    den = mpmath.mpf(1)
                    for j, w in enumerate(roots):
                        if j != i:
                            den *= abs(z - w)
                    if den == 0:
                        radii = None
                        break
                    # a little extra for the rounding in evaluating f(z)
                    radii.append(d * abs(fz) / den + mpmath.ldexp(1 + abs(z), -work))
                if radii is not None and all(
                    abs(roots[i] - roots[j]) > radii[i] + radii[j] for i in range(d) for j in range(i + 1, d)
                ):
                    self._roots[prec] = (roots, radii)
                    return roots, radii
            work *= 2
        raise PrecisionError("could not isolate the roots of the defining polynomial")

    def _order_embeddings(self, roots, radii):
        d = len(roots)
        real, cplx = [], []
        for i, z in enumerate(roots):
            r = radii[i]
            if abs(z.imag) > r:
                if z.imag > 0:
                    cplx.append(i)
                continue
            zc = mpmath.conj(z)
            if all(abs(zc - roots[j]) > r + radii[j] for j in range(d) if j != i):
                real.append(i)
            else:
                raise PrecisionError("could not decide whether a root is real")
        real.sort(key=lambda i: roots[i].real)
        cplx.sort(key=lambda i: (roots[i].real, roots[i].imag))
        order = list(real)
        places = [Place("real", k, k) for k in range(len(real))]
        for i in cplx:
            zc = mpmath.conj(roots[i])
            j = min(range(d), key=lambda j: abs(roots[j] - zc))
            k = len(order)
            order += [i, j]
            places.append(Place("complex", k, k + 1))
        if len(order) != d:
            raise PrecisionError("conjugate pairing of roots failed")
        self.order = order
        self.places = places
        self.conjugate = list(range(d))
        for pl in places:
            self.conjugate[pl.embedding] = pl.conjugate
            self.conjugate[pl.conjugate] = pl.embedding
        self.is_real_embedding = [False] * d
        for pl in places:
            if pl.kind == "real":
                self.is_real_embedding[pl.embedding] = True

    def embedding_roots(self, prec: int):
        roots, radii = self.certified_roots(prec)
        return [roots[i] for i in self.order], [radii[i] for i in self.order]

    def conjugate_symmetric(self, weights: Sequence) -> bool:
        return all(weights[i] == weights[self.conjugate[i]] for i in range(self.degree))

    # -- Minkowski coordinates ----------------------------------------------
    def minkowski_matrix(self) -> np.ndarray:
        """Power basis -> (sigma_real, Re sigma, Im sigma per complex place)."""
        rows = []
        for pl in self.places:
            col = self.vandermonde[:, pl.embedding]
            if pl.kind == "real":
                rows.append(col.real)
            else:
                rows.append(col.real)
                rows.append(col.imag)
        return np.array(rows)

    def minkowski_covolume(self) -> float:
        """|det| of the Minkowski matrix, ``2^-r2 sqrt|disc|``."""
        return 2.0 ** (-self.r2) * float(mpmath.sqrt(abs(self.discriminant)))

    def place_weights(self, weights) -> list:
        """One weight per Minkowski coordinate (complex places repeat)."""
        out = []
        for pl in self.places:
            out.append(weights[pl.embedding])
            if pl.kind == "complex":
                out.append(weights[pl.embedding])
        return out

    # -- arithmetic ----------------------------------------------------------
    def reduce(self, coeffs: Sequence[int]) -> list[int]:
        c = [int(v) for v in coeffs]
        d = self.degree
        while len(c) > d:
            top = c.pop()
            if top:
                base = len(c) - d
                for k in range(d):
                    c[base + k] -= top * self.poly[k]
        return c + [0] * (d - len(c))

    def mul(self, a: Sequence[int], b: Sequence[int]) -> list[int]:
        prod = [0] * (len(a) + len(b) - 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    prod[i + j] += x * y
        return self.reduce(prod)

    def mult_matrix(self, s: Sequence[int]) -> list[list[int]]:
        """Matrix of ``x -> s*x`` on the power basis (columns are images)."""
        d = self.degree
        cols = [self.mul(s, [0] * k + [1]) for k in range(d)]
        return [[cols[k][i] for k in range(d)] for i in range(d)]

    def norm(self, s: Sequence[int]) -> int:
        return exact.int_det(self.mult_matrix(s))

    def trace(self, s: Sequence[int]) -> int:
        m = self.mult_matrix(s)
        return sum(m[i][i] for i in range(self.degree))

    def trace_form(self) -> list[list[int]]:
        """``T[j][k] = Tr(theta^(j+k))``; ``Tr(a b) = a^T T b`` in the power basis."""
        d = self.degree
        tr = [self.trace(self.reduce([0] * k + [1])) for k in range(2 * d - 1)]
        return [[tr[j + k] for k in range(d)] for j in range(d)]

    # -- evaluating embeddings ----------------------------------------------
    def embed_float(self, x: Sequence) -> np.ndarray:
        return np.asarray(x, dtype=float) @ self.vandermonde

    def embed_mp(self, x: Sequence[int], emb: int, prec: int):
        """``(value, error_bound)`` for ``sigma_emb(x)`` at ``prec`` bits."""
        roots, radii = self.embedding_roots(prec)
        z, r = roots[emb], radii[emb]
        with mpmath.workprec(prec + 30):
            val = mpmath.mpc(0)
            for c in reversed(list(x)):
                val = val * z + int(c)
            az = abs(z) + r
            deriv = sum(k * abs(int(c)) * az ** (k - 1) for k, c in enumerate(x) if k)
            size = sum(abs(int(c)) * az**k for k, c in enumerate(x))
            err = r * deriv + mpmath.ldexp(size, -prec + 8)
            if self.is_real_embedding[emb]:
                val = mpmath.mpc(val.real, 0)
        return val, err

    def abs2_sign(self, x: Sequence[int], emb: int, power: LogReal) -> int:
        """Exact sign of ``|sigma_emb(x)|^2 - exp(power)``."""
        prec = self.precision_bits
        tries = 0
        while prec <= MAX_PRECISION_BITS:
            val, err = self.embed_mp(x, emb, prec)
            with mpmath.workprec(prec + 30):
                a = abs(val)
                center = a * a
                radius = 2 * a * err + err * err
            res = cmp_interval_exp(center, radius, power, prec)
            if res is not None:
                return res
            tries += 1
            if power.rat == 0 and tries >= 1 and self.abs2_equals(tuple(int(c) for c in x), emb, power.arg, prec):
                return 0
            prec *= 2
        raise PrecisionError("boundary decision did not converge")

    @lru_cache(maxsize=4096)
    def _pair_product_poly(self, x: tuple[int, ...]):
        s, u, t = sympy.symbols("s u t")
        f_s = sum(c * s**k for k, c in enumerate(self.poly))
        f_u = sum(c * u**k for k, c in enumerate(self.poly))
        xs = sum(c * s**k for k, c in enumerate(x))
        xu = sum(c * u**k for k, c in enumerate(x))
        inner = sympy.resultant(f_u, t - xs * xu, u)
        outer = sympy.resultant(f_s, inner, s)
        return sympy.Poly(sympy.expand(outer), t)

    def abs2_equals(self, x: tuple[int, ...], emb: int, q: Fraction, prec: int) -> bool:
        """Certify ``|sigma_emb(x)|^2 == q`` exactly.

        ``P(t) = prod_{i,j} (t - sigma_i(x) sigma_j(x))`` has rational
        coefficients.  If the number of products numerically within reach of
        ``q`` equals the multiplicity of ``q`` as a root of ``P`` and our pair
        is among them, every one of them equals ``q``.
        """
        poly = self._pair_product_poly(x)
        qq = sympy.Rational(q.numerator, q.denominator)
        t = poly.gens[0]
        mult = 0
        p = poly
        while not p.is_zero and p.eval(qq) == 0:
            mult += 1
            p = sympy.Poly(sympy.quo(p.as_expr(), t - qq, t), t)
        if mult == 0:
            return False
        d = self.degree
        vals = [self.embed_mp(x, i, prec) for i in range(d)]
        with mpmath.workprec(prec + 30):
            target = mpmath.mpf(q.numerator) / q.denominator
            near = 0
            ours = False
            for i in range(d):
                for j in range(d):
                    (vi, ei), (vj, ej) = vals[i], vals[j]
                    prod = vi * vj
                    err = abs(vi) * ej + abs(vj) * ei + ei * ej + mpmath.ldexp(abs(prod) + 1, -prec + 8)
                    if abs(prod - target) <= err:
                        near += 1
                        if i == emb and j == self.conjugate[emb]:
                            ours = True
        return ours and near == mult


@lru_cache(maxsize=64)
def _ring_cache(poly: tuple[int, ...], prec: int) -> NumberRing:
    return NumberRing(poly, prec)


def build_ring(poly: Sequence[int], precision_bits: int | None = None) -> NumberRing:
    """Cached constructor; ``poly`` lists coefficients from constant to leading 1."""
    return _ring_cache(tuple(int(c) for c in poly), int(precision_bits or DEFAULT_PRECISION_BITS))


RING_ALIASES = {
    "Z": (-1, 1),
    "Q": (-1, 1),
    "Z[i]": (1, 0, 1),
    "Q(i)": (1, 0, 1),
    "Z[sqrt2]": (-2, 0, 1),
    "Q(sqrt2)": (-2, 0, 1),
}


def ring_from_json(obj) -> NumberRing:
    """Accept a ring, a name from ``RING_ALIASES``, ``"c0,c1,..."``, a list or ``{"poly": ...}``."""
    if isinstance(obj, NumberRing):
        return obj
    if isinstance(obj, str):
        if obj.strip() in RING_ALIASES:
            return build_ring(RING_ALIASES[obj.strip()])
        return build_ring([int(c) for c in obj.split(",")])
    if isinstance(obj, (list, tuple)):
        return build_ring(obj)
    return build_ring(obj["poly"], obj.get("precision_bits"))
