"""Reference counts used by the test-suite, kept independent of the enumerator."""

from __future__ import annotations

import math
from fractions import Fraction

from arakelov.lattice import ball_box_bound, brute_force_oracle
from arakelov.norms import Ellipsoid, MaxAbs, NormedZModule


def _gram(norm) -> list[list[Fraction]]:
    if isinstance(norm, Ellipsoid):
        return [[Fraction(v) for v in row] for row in norm.gram]
    if isinstance(norm, MaxAbs):
        f = [[Fraction(v) for v in row] for row in norm.functionals]
        n = norm.dim
        return [[sum(r[i] * r[j] for r in f) for j in range(n)] for i in range(n)]
    raise TypeError(f"no Gram matrix for {type(norm).__name__}")


def _transform(gram, u):
    n = len(gram)
    return [
        [sum(u[a][i] * gram[a][b] * u[b][k] for a in range(n) for b in range(n)) for k in range(n)]
        for i in range(n)
    ]


def pair_reduce(gram: list[list[Fraction]]) -> list[list[int]]:
    """Unimodular ``U`` (columns = new basis) from exact pairwise size reduction.

    Replaces ``b_i`` by ``b_i - q b_j`` whenever that shortens ``b_i``; each
    step lowers a positive rational length, so the loop stops.
    """
    n = len(gram)
    u = [[int(i == j) for j in range(n)] for i in range(n)]
    g = _transform(gram, u)
    changed = True
    while changed:
        changed = False
        for i in range(n):
            for j in range(n):
                if i != j and 2 * abs(g[i][j]) > g[j][j]:
                    q = round(g[i][j] / g[j][j])
                    for r in range(n):
                        u[r][i] -= q * u[r][j]
                    g = _transform(gram, u)
                    changed = True
    return u


def reduced_box_count(module: NormedZModule, *, limit: int = 10**8) -> int:
    """Brute-force count after an independent unimodular reduction of the basis."""
    u = pair_reduce(_gram(module.norm))
    pulled = module.with_norm(module.norm.pullback(u))
    box = max(1, math.ceil(max(ball_box_bound(pulled.norm))))
    return brute_force_oracle(pulled, box, limit=limit)
