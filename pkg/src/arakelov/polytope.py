"""Exact vertex enumeration and volume for centrally symmetric polytopes.

A polytope here is ``P(F) = {x : |F x|_inf <= 1}`` for a rational matrix ``F``
of full column rank.  By polarity the facets of ``conv(+-p_i)`` are the
vertices of ``P(points)``, so one enumerator covers both representations.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import exact
from .exact import Matrix

EXHAUSTIVE_LIMIT = 60000


def _canonical(v: tuple[Fraction, ...]) -> tuple[Fraction, ...]:
    """Representative of the pair {v, -v}."""
    for x in v:
        if x != 0:
            return v if x > 0 else tuple(-y for y in v)
    return v


def _verify(fm: Matrix, rows: tuple[int, ...], signs, out: set) -> None:
    a = [fm[r] for r in rows]
    x = exact.solve(a, signs)
    if x is None:
        return
    if all(abs(exact.dot(row, x)) <= 1 for row in fm):
        out.add(_canonical(tuple(x)))


def slab_vertices(f) -> list[tuple[Fraction, ...]]:
    """All vertices of ``{x : |F x|_inf <= 1}``, exact, both signs included."""
    fm = exact.fmatrix(f)
    m = len(fm)
    n = len(fm[0]) if fm else 0
    if n == 0:
        return [()]
    if exact.rank(fm) < n:
        raise ValueError("functional matrix must have full column rank")
    if n == 1:
        top = max(abs(row[0]) for row in fm)
        v = (1 / top,)
        return [v, (-v[0],)]
    fl = np.array([[float(x) for x in row] for row in fm])
    found: set = set()
    n_systems = math.comb(m, n) * 2 ** (n - 1)
    if n_systems <= EXHAUSTIVE_LIMIT:
        subsets = list(itertools.combinations(range(m), n))
        sign_list = [(1,) + s for s in itertools.product((1, -1), repeat=n - 1)]
        for rows in subsets:
            a = fl[list(rows)]
            d = np.linalg.det(a)
            if abs(d) < 1e-12:
                if exact.det([fm[r] for r in rows]) == 0:
                    continue
                for s in sign_list:
                    _verify(fm, rows, s, found)
                continue
            sol = np.linalg.solve(a, np.array(sign_list, dtype=float).T).T
            vals = np.abs(sol @ fl.T).max(axis=1)
            for s, v in zip(sign_list, vals):
                if v <= 1 + 1e-7:
                    _verify(fm, rows, s, found)
    else:
        from scipy.spatial import ConvexHull

        pts = np.vstack([fl, -fl])
        hull = ConvexHull(pts)
        for simplex in hull.simplices:
            rows = []
            signs = []
            for idx in simplex:
                rows.append(int(idx) % m)
                signs.append(1 if idx < m else -1)
            if len(set(rows)) < n:
                continue
            _verify(fm, tuple(rows), signs, found)
    verts = sorted(found)
    return verts + [tuple(-x for x in v) for v in verts]


def facets_of_symmetric_hull(points) -> list[tuple[Fraction, ...]]:
    """Facet normals ``a`` (one per +- pair) with ``conv(+-p) = {|a.x| <= 1}``."""
    verts = slab_vertices(points)
    return sorted({_canonical(v) for v in verts})


def polytope_volume(f) -> Fraction:
    """Exact Lebesgue volume of ``{x : |F x|_inf <= 1}``.

    Cone decomposition from the origin over the facets, each facet
    triangulated by recursive pulling on its faces.
    """
    fm = exact.fmatrix(f)
    n = len(fm[0])
    verts = slab_vertices(fm)
    halfspaces = [row for row in fm] + [[-x for x in row] for row in fm]
    tight = [frozenset(i for i, v in enumerate(verts) if exact.dot(h, v) == 1) for h in halfspaces]

    @lru_cache(maxsize=None)
    def affine_dim(face: frozenset) -> int:
        idx = sorted(face)
        if len(idx) <= 1:
            return 0
        base = verts[idx[0]]
        diffs = [[a - b for a, b in zip(verts[i], base)] for i in idx[1:]]
        return exact.rank(diffs)

    @lru_cache(maxsize=None)
    def subfaces(face: frozenset, dim: int) -> tuple:
        out = set()
        for t in tight:
            sub = face & t
            if sub and sub != face and affine_dim(sub) == dim - 1:
                out.add(sub)
        return tuple(sorted(out, key=sorted))

    @lru_cache(maxsize=None)
    def triangulate(face: frozenset, dim: int) -> tuple:
        if dim == 0:
            return (tuple(face),)
        apex = min(face)
        simplices = []
        for sub in subfaces(face, dim):
            if apex in sub:
                continue
            for s in triangulate(sub, dim - 1):
                simplices.append(s + (apex,))
        return tuple(simplices)

    facets = {t for t in tight if t and affine_dim(t) == n - 1}
    total = Fraction(0)
    for facet in facets:
        for simplex in triangulate(facet, n - 1):
            total += abs(exact.det([list(verts[i]) for i in simplex]))
    return total / math.factorial(n)
