"""Exact rational linear algebra on tiny dense matrices.

Everything in this package runs over Q (fractions.Fraction); ranks in scope
are <= 8, so plain Gaussian elimination is both exact and fast enough.
Vectors are tuples of Fractions, matrices are tuples of row tuples.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd

Vec = tuple[Fraction, ...]
Mat = tuple[Vec, ...]


def vec(entries) -> Vec:
    return tuple(Fraction(x) for x in entries)


def mat(rows) -> Mat:
    return tuple(vec(r) for r in rows)


def zero_vec(n: int) -> Vec:
    return tuple([Fraction(0)] * n)


def unit_vec(n: int, i: int) -> Vec:
    return tuple(Fraction(1 if j == i else 0) for j in range(n))


def add(u: Vec, v: Vec) -> Vec:
    return tuple(a + b for a, b in zip(u, v, strict=True))


def sub(u: Vec, v: Vec) -> Vec:
    return tuple(a - b for a, b in zip(u, v, strict=True))


def scale(c, v: Vec) -> Vec:
    c = Fraction(c)
    return tuple(c * a for a in v)


def dot(u: Vec, v: Vec) -> Fraction:
    return sum((a * b for a, b in zip(u, v, strict=True)), Fraction(0))


def is_zero(v: Vec) -> bool:
    return all(a == 0 for a in v)


def is_integral(v: Vec) -> bool:
    return all(Fraction(a).denominator == 1 for a in v)


def bilinear(m: Mat, u: Vec, v: Vec) -> Fraction:
    return sum((u[i] * dot(m[i], v) for i in range(len(u))), Fraction(0))


def mat_vec(m: Mat, v: Vec) -> Vec:
    return tuple(dot(row, v) for row in m)


def mat_mul(a: Mat, b: Mat) -> Mat:
    bt = transpose(b)
    return tuple(tuple(dot(row, col) for col in bt) for row in a)


def transpose(m: Mat) -> Mat:
    return tuple(zip(*m, strict=True)) if m else ()


def identity(n: int) -> Mat:
    return tuple(unit_vec(n, i) for i in range(n))


def is_skew_symmetric(m: Mat) -> bool:
    n = len(m)
    return all(m[i][j] == -m[j][i] for i in range(n) for j in range(n))


def _echelon(rows: list[list[Fraction]]) -> tuple[list[list[Fraction]], list[int]]:
    """Row-reduce in place; returns (reduced rows, pivot column indices)."""
    rows = [list(r) for r in rows]
    ncols = len(rows[0]) if rows else 0
    pivots = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(rows)) if rows[i][c] != 0), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = 1 / rows[r][c]
        rows[r] = [x * inv for x in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == len(rows):
            break
    return rows, pivots


def rank(m: Mat) -> int:
    if not m:
        return 0
    _, pivots = _echelon([list(r) for r in m])
    return len(pivots)


def solve(a: Mat, b: Vec) -> Vec | None:
    """One solution x of a x = b, or None if inconsistent."""
    if not a:
        return () if is_zero(b) else None
    n = len(a[0])
    aug = [list(row) + [bi] for row, bi in zip(a, b, strict=True)]
    red, pivots = _echelon(aug)
    x = [Fraction(0)] * n
    for i, c in enumerate(pivots):
        if c == n:
            return None
        x[c] = red[i][n]
    for i in range(len(pivots), len(red)):
        if red[i][n] != 0:
            return None
    return tuple(x)


def nullspace(a: Mat) -> list[Vec]:
    """Basis of {x : a x = 0}."""
    if not a:
        return []
    n = len(a[0])
    red, pivots = _echelon([list(r) for r in a])
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for fc in free:
        x = [Fraction(0)] * n
        x[fc] = Fraction(1)
        for i, pc in enumerate(pivots):
            x[pc] = -red[i][fc]
        basis.append(tuple(x))
    return basis


def invert(m: Mat) -> Mat | None:
    n = len(m)
    aug = [list(m[i]) + list(unit_vec(n, i)) for i in range(n)]
    red, pivots = _echelon(aug)
    if pivots != list(range(n)):
        return None
    return tuple(tuple(red[i][n:]) for i in range(n))


def span_basis(vectors) -> list[Vec]:
    """A subset-independent basis (echelon form rows) of the span."""
    vecs = [list(v) for v in vectors]
    if not vecs:
        return []
    red, pivots = _echelon(vecs)
    return [tuple(red[i]) for i in range(len(pivots))]


def in_span(vectors, v: Vec) -> bool:
    base = span_basis(vectors)
    return rank(tuple(base) + (v,)) == len(base)


def primitive(v) -> tuple[int, ...]:
    """Scale a nonzero rational vector to a primitive integer vector (same ray)."""
    v = vec(v)
    if is_zero(v):
        raise ValueError("zero vector has no primitive representative")
    denom_lcm = 1
    for a in v:
        denom_lcm = denom_lcm * a.denominator // gcd(denom_lcm, a.denominator)
    ints = [int(a * denom_lcm) for a in v]
    g = 0
    for a in ints:
        g = gcd(g, a)
    return tuple(a // g for a in ints)


def lattice_index(v: Vec) -> Fraction:
    """|v| = largest rational c with v/c a lattice (integer) vector; v rational."""
    prim = primitive(v)
    i = next(i for i, a in enumerate(prim) if a != 0)
    return Fraction(v[i], prim[i])


def cone_coords(generators: list[Vec], v: Vec) -> Vec | None:
    """Coordinates of v in a linearly independent generating set, or None."""
    a = transpose(mat(generators))
    return solve(a, v)


def lcm_denominator(values) -> int:
    out = 1
    for x in values:
        d = Fraction(x).denominator
        out = out * d // gcd(out, d)
    return out
