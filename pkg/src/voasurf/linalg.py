"""Exact rational linear algebra on small dense matrices.

Matrices are lists of row lists of Fractions.  Pivoting is
deterministic (first nonzero entry in column order) so that ranks,
kernels and echelon forms are reproducible across runs.
"""

from __future__ import annotations

from fractions import Fraction


def _copy(m):
    return [[Fraction(x) for x in row] for row in m]


def row_echelon(matrix):
    """Return (echelon form, pivot column list, rank)."""
    m = _copy(matrix)
    rows = len(m)
    cols = len(m[0]) if rows else 0
    pivots = []
    r = 0
    for c in range(cols):
        pivot = next((i for i in range(r, rows) if m[i][c] != 0), None)
        if pivot is None:
            continue
        m[r], m[pivot] = m[pivot], m[r]
        inv = 1 / m[r][c]
        m[r] = [x * inv for x in m[r]]
        for i in range(rows):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    return m, pivots, len(pivots)


def rank(matrix) -> int:
    if not matrix or not matrix[0]:
        return 0
    return row_echelon(matrix)[2]


def kernel_basis(matrix):
    """Basis of the right kernel, one vector per free column."""
    if not matrix:
        return []
    cols = len(matrix[0])
    ech, pivots, _ = row_echelon(matrix)
    free = [c for c in range(cols) if c not in pivots]
    basis = []
    for f in free:
        vec = [Fraction(0)] * cols
        vec[f] = Fraction(1)
        for r, p in enumerate(pivots):
            vec[p] = -ech[r][f]
        basis.append(vec)
    return basis


def solve(matrix, rhs):
    """Solve M x = rhs exactly; raises if inconsistent or underdetermined."""
    rows = len(matrix)
    cols = len(matrix[0]) if rows else 0
    aug = [list(map(Fraction, row)) + [Fraction(v)] for row, v in zip(matrix, rhs)]
    ech, pivots, r = row_echelon(aug)
    if cols in pivots:
        raise ValueError("inconsistent linear system")
    if r < cols:
        raise ValueError("underdetermined linear system")
    x = [Fraction(0)] * cols
    for i, p in enumerate(pivots):
        x[p] = ech[i][cols]
    return x


def inverse(matrix):
    """Exact inverse of a square matrix."""
    n = len(matrix)
    aug = [list(map(Fraction, row)) + [Fraction(int(i == j)) for j in range(n)]
           for i, row in enumerate(matrix)]
    ech, pivots, r = row_echelon(aug)
    if r < n or pivots[:n] != list(range(n)):
        raise ValueError("matrix is singular")
    return [row[n:] for row in ech[:n]]


def mat_mul(a, b):
    return [[sum((x * y for x, y in zip(row, col)), Fraction(0))
             for col in zip(*b)] for row in a]
