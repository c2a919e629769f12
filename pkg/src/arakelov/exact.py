"""Small exact linear algebra over the rationals.

Everything here works on lists of lists of ``Fraction`` (or ints) and is meant
for the tiny dimensions that show up in this package (rank <= 16).
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

Matrix = list[list[Fraction]]


def to_fraction(x) -> Fraction:
    """Parse ints, Fractions, ``"p/q"`` strings and floats (by their shortest repr)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(repr(x))
    if isinstance(x, str):
        return Fraction(x.strip())
    # numpy scalars
    if hasattr(x, "item"):
        return to_fraction(x.item())
    raise TypeError(f"cannot interpret {x!r} as a rational number")


def fmatrix(rows) -> Matrix:
    return [[to_fraction(v) for v in row] for row in rows]


def identity(n: int) -> Matrix:
    return [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]


def transpose(a: Matrix) -> Matrix:
    return [list(col) for col in zip(*a)] if a else []


def matmul(a: Matrix, b: Matrix) -> Matrix:
    bt = transpose(b)
    return [[sum((x * y for x, y in zip(row, col)), Fraction(0)) for col in bt] for row in a]


def matvec(a: Matrix, v: Sequence) -> list[Fraction]:
    return [sum((x * y for x, y in zip(row, v)), Fraction(0)) for row in a]


def dot(u: Sequence, v: Sequence) -> Fraction:
    return sum((Fraction(x) * y for x, y in zip(u, v)), Fraction(0))


def quad_form(g: Matrix, v: Sequence) -> Fraction:
    return dot(v, matvec(g, v))


def det(a: Matrix) -> Fraction:
    """Determinant by fraction-valued Gaussian elimination."""
    n = len(a)
    if n == 0:
        return Fraction(1)
    m = [list(map(Fraction, row)) for row in a]
    sign = 1
    result = Fraction(1)
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != col:
            m[col], m[piv] = m[piv], m[col]
            sign = -sign
        p = m[col][col]
        result *= p
        for r in range(col + 1, n):
            f = m[r][col] / p
            if f:
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    return sign * result


def int_det(a: Sequence[Sequence[int]]) -> int:
    """Bareiss fraction-free determinant of an integer matrix."""
    n = len(a)
    if n == 0:
        return 1
    m = [list(map(int, row)) for row in a]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if m[k][k] == 0:
            swap = next((r for r in range(k + 1, n) if m[r][k] != 0), None)
            if swap is None:
                return 0
            m[k], m[swap] = m[swap], m[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
        prev = m[k][k]
    return sign * m[n - 1][n - 1]


def rank(a: Matrix) -> int:
    if not a:
        return 0
    m = [list(map(Fraction, row)) for row in a]
    rows, cols = len(m), len(m[0])
    r = 0
    for c in range(cols):
        piv = next((i for i in range(r, rows) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        for i in range(rows):
            if i != r and m[i][c] != 0:
                f = m[i][c] / m[r][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        r += 1
        if r == rows:
            break
    return r


def solve(a: Matrix, b: Sequence) -> list[Fraction] | None:
    """Solve a square system exactly; ``None`` if singular."""
    n = len(a)
    m = [list(map(Fraction, row)) + [Fraction(bi)] for row, bi in zip(a, b)]
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            return None
        m[col], m[piv] = m[piv], m[col]
        p = m[col][col]
        m[col] = [x / p for x in m[col]]
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    return [m[r][n] for r in range(n)]


def inverse(a: Matrix) -> Matrix:
    n = len(a)
    m = [list(map(Fraction, row)) + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(a)]
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            raise ZeroDivisionError("matrix is singular")
        m[col], m[piv] = m[piv], m[col]
        p = m[col][col]
        m[col] = [x / p for x in m[col]]
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    return [row[n:] for row in m]


def is_positive_definite(g: Matrix) -> bool:
    """Sylvester's criterion on leading principal minors."""
    n = len(g)
    if any(g[i][j] != g[j][i] for i in range(n) for j in range(n)):
        return False
    return all(det([row[:k] for row in g[:k]]) > 0 for k in range(1, n + 1))


def lcm_denominator(values) -> int:
    from math import lcm

    d = 1
    for v in values:
        d = lcm(d, Fraction(v).denominator)
    return d


def kernel_basis(a: Matrix) -> Matrix:
    """Basis (as rows) of the right null space of ``a``."""
    if not a:
        return []
    cols = len(a[0])
    m = [list(map(Fraction, row)) for row in a]
    pivots = []
    r = 0
    for c in range(cols):
        piv = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        p = m[r][c]
        m[r] = [x / p for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    free = [c for c in range(cols) if c not in pivots]
    basis = []
    for fcol in free:
        v = [Fraction(0)] * cols
        v[fcol] = Fraction(1)
        for row, pc in zip(m, pivots):
            v[pc] = -row[fcol]
        basis.append(v)
    return basis


# ---------------------------------------------------------------------------
# Exact simplex


class LPInfeasible(ValueError):
    pass


class LPUnbounded(ValueError):
    pass


def linprog_min(c: Sequence, a_eq: Matrix, b_eq: Sequence) -> tuple[Fraction, list[Fraction]]:
    """Minimise ``c.x`` subject to ``A x = b``, ``x >= 0`` in exact arithmetic.

    Two-phase tableau simplex with Bland's rule, so it always terminates.
    """
    m = len(a_eq)
    n = len(c)
    a = [list(map(Fraction, row)) for row in a_eq]
    b = list(map(Fraction, b_eq))
    for i in range(m):
        if b[i] < 0:
            a[i] = [-x for x in a[i]]
            b[i] = -b[i]
    # phase 1 with artificials n..n+m-1
    tab = [a[i] + [Fraction(int(i == j)) for j in range(m)] + [b[i]] for i in range(m)]
    basis = [n + i for i in range(m)]
    width = n + m

    def pivot(r: int, col: int) -> None:
        p = tab[r][col]
        tab[r] = [x / p for x in tab[r]]
        for i in range(len(tab)):
            if i != r and tab[i][col] != 0:
                f = tab[i][col]
                tab[i] = [x - f * y for x, y in zip(tab[i], tab[r])]
        basis[r] = col

    def run(cost: list[Fraction], allowed: int) -> None:
        while True:
            # reduced costs
            red = []
            for j in range(allowed):
                if j in basis:
                    red.append(Fraction(0))
                    continue
                red.append(cost[j] - sum(cost[basis[i]] * tab[i][j] for i in range(m)))
            enter = next((j for j in range(allowed) if red[j] < 0), None)
            if enter is None:
                return
            best = None
            for i in range(m):
                if tab[i][enter] > 0:
                    ratio = tab[i][-1] / tab[i][enter]
                    if best is None or ratio < best[0] or (ratio == best[0] and basis[i] < basis[best[1]]):
                        best = (ratio, i)
            if best is None:
                raise LPUnbounded("objective unbounded below")
            pivot(best[1], enter)

    cost1 = [Fraction(0)] * n + [Fraction(1)] * m
    run(cost1, width)
    if sum(tab[i][-1] for i in range(m) if basis[i] >= n) != 0:
        raise LPInfeasible("equality constraints are infeasible")
    # drive remaining artificials out of the basis
    for i in range(m):
        if basis[i] >= n:
            col = next((j for j in range(n) if tab[i][j] != 0), None)
            if col is not None:
                pivot(i, col)
    keep = [i for i in range(m) if basis[i] < n]
    tab = [tab[i][:n] + [tab[i][-1]] for i in keep]
    basis = [basis[i] for i in keep]
    m = len(tab)
    cost2 = list(map(Fraction, c))
    run(cost2, n)
    x = [Fraction(0)] * n
    for i, bi in enumerate(basis):
        x[bi] = tab[i][-1]
    return sum((ci * xi for ci, xi in zip(cost2, x)), Fraction(0)), x
