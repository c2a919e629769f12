"""Normed Z-modules and the norm constructions on them.

A norm is always written in coordinates of a fixed basis of ``M/M_tor``.
Four kinds are serialisable (ellipsoid, max_abs, embedding_sup, scaled); the
dual of an embedding sup-norm is a fifth, internal kind.

Every kind answers the same questions:

* ``evaluate(v)``: approximate value, for display;
* ``sign(x, rho)``: exact sign of ``||x|| - exp(rho)`` for integer ``x``;
* ``bounding_form()``: ``(Q, c)`` with ``||x|| <= 1  =>  x^T Q x <= c``;
* ``line_intervals(P, u, rho)``: float estimates of ``{t : ||p + t u|| <= e^rho}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np

from . import exact, polytope
from .exact import Matrix
from .logreal import DEFAULT_PRECISION_BITS, MAX_PRECISION_BITS, LogReal, PrecisionError, cmp_rational_exp
from .numring import NumberRing, ring_from_json


class NormError(ValueError):
    """Degenerate, mismatched or unsupported norm data."""


# float screening: anything closer than this (relative) to the boundary is
# decided exactly
_SCREEN = 1e-9


def _exp_float(power: LogReal) -> float:
    with mpmath.workprec(64):
        return float(mpmath.exp(power.mp(64)))


def _as_int_vector(x) -> list[int]:
    out = []
    for v in x:
        if isinstance(v, (int, np.integer)):
            out.append(int(v))
        else:
            f = exact.to_fraction(v)
            if f.denominator != 1:
                raise NormError("lattice vectors must have integer coordinates")
            out.append(int(f))
    return out


def _quadratic_intervals(a, b, c):
    """Roots of ``a t^2 + 2 b t + c <= 0`` (``a > 0``), vectorised.

    Empty intersections come back as a degenerate interval at the vertex so
    that the caller still checks the nearest integers exactly.
    """
    disc = b * b - a * c
    root = np.sqrt(np.maximum(disc, 0.0))
    center = -b / a
    lo = center - root / a
    hi = center + root / a
    # clearly empty lines: a single point cannot reach the ball by far
    tol = 1e-7 * (np.abs(b) * np.abs(b) + np.abs(a * c)) + 1e-300
    empty = disc < -tol
    return lo, hi, empty


class NormSpec:
    kind: str = "abstract"
    dim: int

    def _key(self) -> tuple:
        return (type(self),) + tuple(getattr(self, f.name) for f in fields(self))

    def __eq__(self, other):
        return isinstance(other, NormSpec) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def evaluate(self, v) -> float:
        raise NotImplementedError

    def evaluate_many(self, xs: np.ndarray) -> np.ndarray:
        """Float values on the rows of ``xs`` (real coordinates allowed)."""
        return np.array([self.evaluate(x) for x in np.asarray(xs, dtype=float)])

    def sign(self, x, rho: LogReal = LogReal()) -> int:
        raise NotImplementedError

    def sign_many(self, xs: np.ndarray, rho: LogReal = LogReal()) -> np.ndarray:
        return np.array([self.sign(x, rho) for x in xs], dtype=np.int64)

    def bounding_form(self) -> tuple[np.ndarray, float]:
        raise NotImplementedError

    def pullback(self, u) -> "NormSpec":
        raise NormError(f"subnorms of {self.kind} norms are not supported")

    def line_intervals(self, p: np.ndarray, u: np.ndarray, rho: LogReal):
        return None

    def dual(self) -> "NormSpec":
        raise NormError(f"dual of {self.kind} norms is not supported")

    def quotient(self, g) -> "NormSpec":
        raise NormError(f"quotient norms of {self.kind} norms are not supported")

    def exact_volume(self):
        """``(value, log_value)`` in closed form, or ``None``."""
        return None

    @property
    def exact_membership(self) -> bool:
        return True

    def to_json(self) -> dict:
        raise NormError(f"{self.kind} norms have no JSON form")

    def __call__(self, v) -> float:
        return self.evaluate(v)


# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Ellipsoid(NormSpec):
    gram: tuple
    kind: str = field(default="ellipsoid", init=False)

    def __post_init__(self):
        g = exact.fmatrix(self.gram)
        object.__setattr__(self, "gram", tuple(tuple(r) for r in g))
        if any(len(r) != len(g) for r in g):
            raise NormError("Gram matrix must be square")
        if not exact.is_positive_definite(g):
            raise NormError("Gram matrix must be symmetric positive definite")
        object.__setattr__(self, "_float", np.array([[float(v) for v in r] for r in g]))

    @property
    def dim(self) -> int:
        return len(self.gram)

    def _g(self) -> Matrix:
        return [list(r) for r in self.gram]

    def quadratic_value(self, v) -> Fraction:
        return exact.quad_form(self._g(), [exact.to_fraction(x) for x in v])

    def evaluate(self, v) -> float:
        return math.sqrt(float(self.quadratic_value(v)))

    def evaluate_many(self, xs):
        xs = np.asarray(xs, dtype=float)
        return np.sqrt(np.einsum("ij,jk,ik->i", xs, self._float, xs))

    def sign(self, x, rho=LogReal()):
        return cmp_rational_exp(self.quadratic_value(_as_int_vector(x)), rho * 2)

    def sign_many(self, xs, rho=LogReal()):
        xs = np.asarray(xs)
        q = np.einsum("ij,jk,ik->i", xs.astype(float), self._float, xs.astype(float))
        r2 = _exp_float(rho * 2)
        out = np.where(q > r2, 1, -1).astype(np.int64)
        amb = np.abs(q - r2) <= _SCREEN * (q + r2) + 1e-12
        for i in np.nonzero(amb)[0]:
            out[i] = self.sign(xs[i], rho)
        return out

    def bounding_form(self):
        return self._float.copy(), 1.0

    def pullback(self, u):
        um = exact.fmatrix(u)
        g = exact.matmul(exact.matmul(exact.transpose(um), self._g()), um)
        return Ellipsoid(g)

    def line_intervals(self, p, u, rho):
        g = self._float
        uf = np.asarray(u, dtype=float)
        pf = np.asarray(p, dtype=float)
        a = float(uf @ g @ uf)
        b = pf @ (g @ uf)
        c = np.einsum("ij,jk,ik->i", pf, g, pf) - _exp_float(rho * 2)
        return _quadratic_intervals(a, b, c)

    def dual(self):
        return Ellipsoid(exact.inverse(self._g()))

    def quotient(self, g):
        gm = exact.fmatrix(g)
        inner = exact.matmul(exact.matmul(gm, exact.inverse(self._g())), exact.transpose(gm))
        return Ellipsoid(exact.inverse(inner))

    def exact_volume(self):
        n = self.dim
        with mpmath.workprec(80):
            logv = (
                n / 2 * mpmath.log(mpmath.pi)
                - mpmath.loggamma(mpmath.mpf(n) / 2 + 1)
                - mpmath.log(exact.det(self._g()).numerator) / 2
                + mpmath.log(exact.det(self._g()).denominator) / 2
            )
            return float(mpmath.exp(logv)), float(logv)

    def to_json(self):
        return {"kind": "ellipsoid", "gram": [[_num(v) for v in r] for r in self.gram]}


@dataclass(frozen=True, eq=False)
class MaxAbs(NormSpec):
    functionals: tuple
    kind: str = field(default="max_abs", init=False)

    def __post_init__(self):
        f = exact.fmatrix(self.functionals)
        if not f or not f[0]:
            raise NormError("functional matrix must be nonempty")
        if any(len(r) != len(f[0]) for r in f):
            raise NormError("functional matrix rows must have equal length")
        if exact.rank(f) < len(f[0]):
            raise NormError("functional matrix must have full column rank")
        object.__setattr__(self, "functionals", tuple(tuple(r) for r in f))
        object.__setattr__(self, "_float", np.array([[float(v) for v in r] for r in f]))

    @property
    def dim(self) -> int:
        return len(self.functionals[0])

    def _f(self) -> Matrix:
        return [list(r) for r in self.functionals]

    def exact_value(self, v) -> Fraction:
        v = [exact.to_fraction(x) for x in v]
        return max(abs(exact.dot(row, v)) for row in self.functionals)

    def evaluate(self, v):
        return float(self.exact_value(v))

    def evaluate_many(self, xs):
        return np.abs(np.asarray(xs, dtype=float) @ self._float.T).max(axis=1)

    def sign(self, x, rho=LogReal()):
        return cmp_rational_exp(self.exact_value(_as_int_vector(x)), rho)

    def sign_many(self, xs, rho=LogReal()):
        xs = np.asarray(xs)
        vals = np.abs(xs.astype(float) @ self._float.T).max(axis=1)
        r = _exp_float(rho)
        out = np.where(vals > r, 1, -1).astype(np.int64)
        amb = np.abs(vals - r) <= _SCREEN * (vals + r) + 1e-12
        for i in np.nonzero(amb)[0]:
            out[i] = self.sign(xs[i], rho)
        return out

    def bounding_form(self):
        f = self._float
        return f.T @ f, float(f.shape[0])

    def pullback(self, u):
        return MaxAbs(exact.matmul(self._f(), exact.fmatrix(u)))

    def line_intervals(self, p, u, rho):
        f = self._float
        fu = f @ np.asarray(u, dtype=float)
        fp = np.asarray(p, dtype=float) @ f.T
        r = _exp_float(rho)
        lo = np.full(fp.shape[0], -np.inf)
        hi = np.full(fp.shape[0], np.inf)
        empty = np.zeros(fp.shape[0], dtype=bool)
        for j in range(f.shape[0]):
            if abs(fu[j]) < 1e-300:
                empty |= np.abs(fp[:, j]) > r * (1 + 1e-7) + 1e-9
                continue
            a = (-r - fp[:, j]) / fu[j]
            b = (r - fp[:, j]) / fu[j]
            lo = np.maximum(lo, np.minimum(a, b))
            hi = np.minimum(hi, np.maximum(a, b))
        scale = 1e-7 * (1 + np.abs(lo) + np.abs(hi))
        empty |= lo > hi + scale
        return lo, hi, empty

    def vertices(self) -> list[tuple[Fraction, ...]]:
        return polytope.slab_vertices(self._f())

    def dual(self):
        return MaxAbs(polytope.facets_of_symmetric_hull(self._f()))

    def quotient(self, g):
        # the quotient ball is g(B); its polar is the pullback of the polar
        dual_sub = self.dual().pullback(exact.transpose(exact.fmatrix(g)))
        return dual_sub.dual()

    def exact_volume(self):
        n = self.dim
        f = self._f()
        if len(f) == n:
            v = Fraction(2**n) / abs(exact.det(f))
        elif n <= 6:
            v = polytope.polytope_volume(f)
        else:
            return None
        return float(v), _log_fraction(v)

    def to_json(self):
        return {"kind": "max_abs", "functionals": [[_num(v) for v in r] for r in self.functionals]}


@dataclass(frozen=True, eq=False)
class EmbeddingSup(NormSpec):
    """``x -> max_sigma |sigma(B x)| exp(-w_sigma)`` on a number ring."""

    ring: NumberRing
    weights: tuple
    basis: tuple | None = None
    kind: str = field(default="embedding_sup", init=False)

    def __post_init__(self):
        w = tuple(LogReal.coerce(v) for v in self.weights)
        if len(w) != self.ring.degree:
            raise NormError("need one weight per complex embedding")
        if not self.ring.conjugate_symmetric(w):
            raise NormError("weights must agree on conjugate embeddings")
        object.__setattr__(self, "weights", w)
        d = self.ring.degree
        b = exact.identity(d) if self.basis is None else exact.fmatrix(self.basis)
        if len(b) != d or exact.rank(b) != len(b[0]):
            raise NormError("basis map must be injective into the ring")
        object.__setattr__(self, "basis", tuple(tuple(r) for r in b))
        den = exact.lcm_denominator(v for r in b for v in r)
        object.__setattr__(self, "_den", den)
        object.__setattr__(self, "_bint", [[int(v * den) for v in r] for r in b])
        object.__setattr__(self, "_bfloat", np.array([[float(v) for v in r] for r in b]))

    @property
    def dim(self) -> int:
        return len(self.basis[0])

    def _ring_coords(self, x) -> list[int]:
        """``den * B x`` as integers."""
        return [sum(r[k] * x[k] for k in range(len(x))) for r in self._bint]

    def embed_float(self, xs: np.ndarray) -> np.ndarray:
        return (np.asarray(xs, dtype=float) @ self._bfloat.T) @ self.ring.vandermonde

    def evaluate(self, v):
        vals = self.embed_float(np.array([[float(exact.to_fraction(x)) for x in v]]))[0]
        return max(abs(z) * math.exp(-float(w)) for z, w in zip(vals, self.weights))

    def evaluate_many(self, xs):
        scale = np.array([math.exp(-float(w)) for w in self.weights])
        return (np.abs(self.embed_float(xs)) * scale).max(axis=1)

    def _place_sign(self, y: list[int], emb: int, rho: LogReal) -> int:
        power = (self.weights[emb] + rho) * 2 + LogReal.log(self._den**2)
        return self.ring.abs2_sign(y, emb, power)

    def sign(self, x, rho=LogReal()):
        y = self._ring_coords(_as_int_vector(x))
        best = -1
        for pl in self.ring.places:
            s = self._place_sign(y, pl.embedding, rho)
            if s > 0:
                return 1
            best = max(best, s)
        return best

    def _float_margins(self, xs, rho):
        vals = np.abs(self.embed_float(xs)) ** 2
        targets = np.array([_exp_float((w + rho) * 2) for w in self.weights])
        size = (np.abs(np.asarray(xs, dtype=float) @ self._bfloat.T) @ np.abs(self.ring.vandermonde)) ** 2
        return vals, targets, size

    def sign_many(self, xs, rho=LogReal()):
        xs = np.asarray(xs)
        if xs.size == 0:
            return np.zeros(0, dtype=np.int64)
        vals, targets, size = self._float_margins(xs, rho)
        cols = [pl.embedding for pl in self.ring.places]
        vals, targets, size = vals[:, cols], targets[cols], size[:, cols]
        tol = 1e-10 * (size + targets) + 1e-12
        over = (vals - targets > tol).any(axis=1)
        under = (targets - vals > tol).all(axis=1)
        out = np.where(over, 1, -1).astype(np.int64)
        for i in np.nonzero(~over & ~under)[0]:
            out[i] = self.sign(xs[i], rho)
        return out

    def bounding_form(self):
        phi = self.ring.minkowski_matrix() @ self._bfloat
        w = np.array([math.exp(-2 * float(v)) for v in self.ring.place_weights(self.weights)])
        return phi.T @ (w[:, None] * phi), float(len(self.ring.places))

    def pullback(self, u):
        return EmbeddingSup(self.ring, self.weights, exact.matmul([list(r) for r in self.basis], exact.fmatrix(u)))

    def line_intervals(self, p, u, rho):
        alpha = self.embed_float(p)
        beta = self.embed_float(np.asarray(u)[None, :])[0]
        lo = np.full(alpha.shape[0], -np.inf)
        hi = np.full(alpha.shape[0], np.inf)
        empty = np.zeros(alpha.shape[0], dtype=bool)
        for pl in self.ring.places:
            k = pl.embedding
            r2 = _exp_float((self.weights[k] + rho) * 2)
            a = abs(beta[k]) ** 2
            if a < 1e-300:
                empty |= np.abs(alpha[:, k]) ** 2 > r2 * (1 + 1e-7)
                continue
            b = (alpha[:, k] * np.conj(beta[k])).real
            c = np.abs(alpha[:, k]) ** 2 - r2
            l, h, e = _quadratic_intervals(a, b, c)
            lo = np.maximum(lo, l)
            hi = np.minimum(hi, h)
            empty |= e
        empty |= lo > hi + 1e-7 * (1 + np.abs(lo) + np.abs(hi))
        return lo, hi, empty

    def _square(self) -> bool:
        return len(self.basis) == len(self.basis[0])

    def dual(self):
        if not self._square():
            raise NormError("dual needs a full-rank basis")
        return EmbeddingSupDual(self.ring, self.weights, exact.transpose(exact.inverse([list(r) for r in self.basis])))

    def quotient(self, g):
        raise NormError("quotient norms of embedding sup-norms are not supported")

    def exact_volume(self):
        if not self._square():
            return None
        r1, r2 = self.ring.signature
        detb = abs(exact.det([list(r) for r in self.basis]))
        with mpmath.workprec(80):
            logv = (
                r1 * mpmath.log(2)
                + r2 * mpmath.log(mpmath.pi)
                + sum(w.mp(80) for w in self.weights)
                - mpmath.log(self.ring.minkowski_covolume())
                - mpmath.log(detb.numerator)
                + mpmath.log(detb.denominator)
            )
            return float(mpmath.exp(logv)), float(logv)

    def to_json(self):
        out = {"kind": "embedding_sup", "ring": self.ring.ring_id, "weights": [w.to_json() for w in self.weights]}
        if [list(r) for r in self.basis] != exact.identity(self.ring.degree):
            out["basis"] = [[_num(v) for v in r] for r in self.basis]
        return out


@dataclass(frozen=True, eq=False)
class EmbeddingSupDual(NormSpec):
    """Dual of an embedding sup-norm.

    A functional ``phi`` on the lattice is ``x -> Tr(alpha * B x)`` for a unique
    ``alpha = T^{-1} C phi`` in ``K`` (``T`` the trace form, ``C = B^{-T}``), and
    its dual norm is ``sum over all embeddings of e^{w_sigma} |sigma(alpha)|``.
    Complex places therefore count twice.
    """

    ring: NumberRing
    weights: tuple
    cmap: tuple
    kind: str = field(default="embedding_sup_dual", init=False)

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(LogReal.coerce(v) for v in self.weights))
        c = exact.fmatrix(self.cmap)
        object.__setattr__(self, "cmap", tuple(tuple(r) for r in c))
        t = exact.fmatrix(self.ring.trace_form())
        amap = exact.matmul(exact.inverse(t), c)
        object.__setattr__(self, "_amap", amap)
        object.__setattr__(self, "_afloat", np.array([[float(v) for v in r] for r in amap]))
        object.__setattr__(self, "_scale", np.array([math.exp(float(w)) for w in self.weights]))

    @property
    def dim(self) -> int:
        return len(self.cmap[0])

    def _alpha_embeddings(self, xs) -> np.ndarray:
        return (np.asarray(xs, dtype=float) @ self._afloat.T) @ self.ring.vandermonde

    def evaluate(self, v):
        vals = self._alpha_embeddings(np.array([[float(exact.to_fraction(x)) for x in v]]))[0]
        return float(np.abs(vals) @ self._scale)

    def evaluate_many(self, xs):
        return np.abs(self._alpha_embeddings(xs)) @ self._scale

    def _alpha(self, x) -> tuple[list[int], int]:
        alpha = exact.matvec(self._amap, x)
        den = exact.lcm_denominator(alpha)
        return [int(a * den) for a in alpha], den

    def _mp_terms(self, num, prec):
        """``(|sigma(num)|, error)`` for every embedding."""
        out = []
        for k in range(self.ring.degree):
            val, err = self.ring.embed_mp(num, k, prec)
            with mpmath.workprec(prec + 30):
                out.append((abs(val), err))
        return out

    def _separation_bound(self, num, den, coeffs, qt) -> int | None:
        """``k`` such that ``|A| < 2^-k`` proves ``A = sum c_s |sigma_s(alpha)| - qt`` is zero.

        ``A`` lies in a field of degree at most ``D = d! 2^r2``; ``L A`` is an
        algebraic integer for ``L = den * lcm(denominators)`` and all its
        conjugates are bounded by ``L H``, so a nonzero ``A`` satisfies
        ``|A| >= (L H)^(1-D) / L``.
        """
        d = self.ring.degree
        big_d = math.factorial(d) * 2**self.ring.r2
        with mpmath.workprec(64):
            m = max(v + e for v, e in self._mp_terms(num, 64))
            h = float(sum(coeffs)) * float(m) / den + float(qt)
        ell = den * exact.lcm_denominator(list(coeffs) + [qt])
        k = int(math.ceil((big_d - 1) * math.log2(max(ell * h, 2.0)) + math.log2(ell))) + 1
        return k if k + 64 <= 4 * MAX_PRECISION_BITS else None

    def sign(self, x, rho=LogReal()):
        x = _as_int_vector(x)
        if not any(x):
            return -1
        num, den = self._alpha(x)
        # exponents rat(w) differing from rat(rho) contribute positive terms that
        # are linearly independent of exp(rho), so equality needs every weight to
        # share the rational part of rho
        same = all(w.rat == rho.rat for w in self.weights)
        prec = DEFAULT_PRECISION_BITS
        tried_equality = False
        while True:
            with mpmath.workprec(prec + 30):
                terms = self._mp_terms(num, prec)
                total = mpmath.mpf(0)
                err = mpmath.mpf(0)
                for (a, e), w in zip(terms, self.weights):
                    c = mpmath.exp(w.mp(prec + 30))
                    total += c * a
                    err += c * e
                total /= den
                err = err / den + mpmath.ldexp(abs(total) + 1, -prec + 8)
                target = mpmath.exp(rho.mp(prec + 30))
                if total - err > target:
                    return 1
                if total + err < target:
                    return -1
            if same and not tried_equality:
                tried_equality = True
                coeffs = [w.arg for w in self.weights]
                k = self._separation_bound(num, den, coeffs, rho.arg)
                if k is not None and self._certify_zero(num, den, coeffs, rho.arg, k):
                    return 0
            prec *= 2
            if prec > MAX_PRECISION_BITS:
                raise PrecisionError("dual embedding norm boundary decision did not converge")

    def _certify_zero(self, num, den, coeffs, qt, k) -> bool:
        bits = k + 64
        with mpmath.workprec(bits + 30):
            terms = self._mp_terms(num, bits)
            total = sum(mpmath.mpf(c.numerator) / c.denominator * a for c, (a, _) in zip(coeffs, terms)) / den
            err = sum(mpmath.mpf(c.numerator) / c.denominator * e for c, (_, e) in zip(coeffs, terms)) / den
            diff = abs(total - mpmath.mpf(qt.numerator) / qt.denominator)
            return diff + err + mpmath.ldexp(1, -bits + 8) < mpmath.ldexp(1, -k)

    def sign_many(self, xs, rho=LogReal()):
        xs = np.asarray(xs)
        if xs.size == 0:
            return np.zeros(0, dtype=np.int64)
        vals = np.abs(self._alpha_embeddings(xs)) @ self._scale
        r = _exp_float(rho)
        out = np.where(vals > r, 1, -1).astype(np.int64)
        amb = np.abs(vals - r) <= 1e-8 * (vals + r) + 1e-12
        for i in np.nonzero(amb)[0]:
            out[i] = self.sign(xs[i], rho)
        return out

    def bounding_form(self):
        # sum_s c_s |a_s| <= 1 implies sum_s c_s^2 |a_s|^2 <= 1
        m = (self.ring.vandermonde.T @ self._afloat).astype(complex)
        q = (m.conj().T @ ((self._scale**2)[:, None] * m)).real
        return (q + q.T) / 2, 1.0

    def pullback(self, u):
        return EmbeddingSupDual(self.ring, self.weights, exact.matmul([list(r) for r in self.cmap], exact.fmatrix(u)))

    def dual(self):
        return EmbeddingSup(self.ring, self.weights, exact.transpose(exact.inverse([list(r) for r in self.cmap])))

    def exact_volume(self):
        r1, r2 = self.ring.signature
        d = self.ring.degree
        detc = abs(exact.det([list(r) for r in self.cmap]))
        with mpmath.workprec(80):
            logv = (
                r1 * mpmath.log(2)
                + r2 * mpmath.log(2 * mpmath.pi)
                - sum(w.mp(80) for w in self.weights)
                - mpmath.loggamma(d + 1)
                + mpmath.log(self.ring.minkowski_covolume())
                - mpmath.log(detc.numerator)
                + mpmath.log(detc.denominator)
            )
            return float(mpmath.exp(logv)), float(logv)


@dataclass(frozen=True, eq=False)
class Scaled(NormSpec):
    """``exp(-lam) * inner``."""

    lam: LogReal
    inner: NormSpec
    kind: str = field(default="scaled", init=False)

    def __post_init__(self):
        object.__setattr__(self, "lam", LogReal.coerce(self.lam))

    @property
    def dim(self) -> int:
        return self.inner.dim

    @property
    def exact_membership(self) -> bool:
        return self.inner.exact_membership

    def evaluate(self, v):
        return math.exp(-float(self.lam)) * self.inner.evaluate(v)

    def evaluate_many(self, xs):
        return math.exp(-float(self.lam)) * self.inner.evaluate_many(xs)

    def sign(self, x, rho=LogReal()):
        return self.inner.sign(x, rho + self.lam)

    def sign_many(self, xs, rho=LogReal()):
        return self.inner.sign_many(xs, rho + self.lam)

    def bounding_form(self):
        q, c = self.inner.bounding_form()
        return q, c * math.exp(2 * float(self.lam))

    def pullback(self, u):
        return Scaled(self.lam, self.inner.pullback(u))

    def line_intervals(self, p, u, rho):
        return self.inner.line_intervals(p, u, rho + self.lam)

    def dual(self):
        return Scaled(-self.lam, self.inner.dual())

    def quotient(self, g):
        return Scaled(self.lam, self.inner.quotient(g))

    def exact_volume(self):
        inner = self.inner.exact_volume()
        if inner is None:
            return None
        logv = inner[1] + self.dim * float(self.lam)
        return math.exp(logv), logv

    def to_json(self):
        return {"kind": "scaled", "lambda": self.lam.to_json(), "inner": self.inner.to_json()}


def _num(v: Fraction):
    if v.denominator == 1:
        return int(v)
    f = float(v)
    return f if exact.to_fraction(f) == v else str(v)


def _log_fraction(v: Fraction) -> float:
    return math.log(v.numerator) - math.log(v.denominator)


# ---------------------------------------------------------------------------
# module-level operations


def norm_eval(norm: NormSpec, v) -> float:
    if len(v) != norm.dim:
        raise NormError(f"vector of length {len(v)} for a norm of dimension {norm.dim}")
    return norm.evaluate(v)


def dual_norm(norm: NormSpec) -> NormSpec:
    return norm.dual()


def scale_norm(norm: NormSpec, lam) -> Scaled:
    return Scaled(LogReal.coerce(lam), norm)


def subnorm(injection, norm: NormSpec) -> NormSpec:
    """Pull ``norm`` back along an injective integer matrix (columns = images)."""
    m = exact.fmatrix(injection)
    if len(m) != norm.dim:
        raise NormError("injection target dimension does not match the norm")
    if exact.rank(m) != len(m[0]):
        raise NormError("map is not injective")
    return norm.pullback(m)


def quotient_norm(surjection, norm: NormSpec) -> NormSpec:
    """Infimum norm along a surjective integer matrix ``V -> Q``."""
    g = exact.fmatrix(surjection)
    if not g or len(g[0]) != norm.dim:
        raise NormError("surjection source dimension does not match the norm")
    if exact.rank(g) != len(g):
        raise NormError("map is not surjective")
    return norm.quotient(g)


def dual_eval_lp(norm: MaxAbs, phi) -> Fraction:
    """Exact ``||phi||^dual = min{|c|_1 : F^T c = phi}`` by rational simplex."""
    f = norm._f()
    m, n = len(f), norm.dim
    ft = exact.transpose(f)
    a_eq = [row + [-v for v in row] for row in ft]
    try:
        val, _ = exact.linprog_min([1] * (2 * m), a_eq, [exact.to_fraction(v) for v in phi])
    except exact.LPInfeasible as err:
        raise NormError("functionals do not span the dual space") from err
    return val


def quotient_eval_lp(surjection, norm: MaxAbs, y) -> Fraction:
    """Exact quotient-norm value ``min{max|F x| : g x = y}`` by rational simplex."""
    f = norm._f()
    g = exact.fmatrix(surjection)
    m, n = len(f), norm.dim
    k = len(g)
    # variables: x+ (n), x- (n), t, slack (2m)
    nv = 2 * n + 1 + 2 * m
    rows, rhs = [], []
    for j, fr in enumerate(f):
        for sgn, off in ((1, 0), (-1, m)):
            row = [Fraction(0)] * nv
            for i in range(n):
                row[i] = sgn * fr[i]
                row[n + i] = -sgn * fr[i]
            row[2 * n] = Fraction(-1)
            row[2 * n + 1 + off + j] = Fraction(1)
            rows.append(row)
            rhs.append(Fraction(0))
    for r in range(k):
        row = [Fraction(0)] * nv
        for i in range(n):
            row[i] = g[r][i]
            row[n + i] = -g[r][i]
        rows.append(row)
        rhs.append(exact.to_fraction(y[r]))
    cost = [0] * nv
    cost[2 * n] = 1
    val, _ = exact.linprog_min(cost, rows, rhs)
    return val


# ---------------------------------------------------------------------------
# modules


@dataclass(frozen=True)
class TorsionData:
    invariant_factors: tuple = ()

    def __post_init__(self):
        fs = tuple(int(v) for v in self.invariant_factors)
        if any(v < 2 for v in fs):
            raise NormError("invariant factors must be >= 2")
        if any(fs[i + 1] % fs[i] for i in range(len(fs) - 1)):
            raise NormError("invariant factors must form a divisibility chain")
        object.__setattr__(self, "invariant_factors", fs)

    @property
    def order(self) -> int:
        return math.prod(self.invariant_factors)

    @property
    def log_order(self) -> float:
        return sum(math.log(v) for v in self.invariant_factors)


@dataclass(frozen=True)
class NormedZModule:
    rank: int
    norm: NormSpec | None
    torsion: TorsionData = TorsionData()

    def __post_init__(self):
        if self.rank < 0:
            raise NormError("rank must be nonnegative")
        if self.rank > 0 and (self.norm is None or self.norm.dim != self.rank):
            raise NormError("norm dimension must equal the rank")

    def dual(self) -> "NormedZModule":
        """``(M^vee, ||.||^vee)``; the dual module is torsion free."""
        if self.rank == 0:
            return NormedZModule(0, None)
        return NormedZModule(self.rank, self.norm.dual())

    def with_norm(self, norm: NormSpec) -> "NormedZModule":
        return NormedZModule(self.rank, norm, self.torsion)

    def to_json(self) -> dict:
        return {
            "rank": self.rank,
            "torsion": list(self.torsion.invariant_factors),
            "norm": None if self.norm is None else self.norm.to_json(),
        }


def norm_from_json(obj) -> NormSpec:
    kind = obj.get("kind")
    if kind == "ellipsoid":
        return Ellipsoid(obj["gram"])
    if kind == "max_abs":
        return MaxAbs(obj["functionals"])
    if kind == "embedding_sup":
        ring = ring_from_json(obj["ring"])
        return EmbeddingSup(ring, obj["weights"], obj.get("basis"))
    if kind == "scaled":
        return Scaled(LogReal.coerce(obj["lambda"]), norm_from_json(obj["inner"]))
    raise NormError(f"unknown norm kind {kind!r}")


def module_from_json(obj) -> NormedZModule:
    rank = int(obj["rank"])
    norm = norm_from_json(obj["norm"]) if obj.get("norm") is not None else None
    return NormedZModule(rank, norm, TorsionData(tuple(obj.get("torsion", ()))))
