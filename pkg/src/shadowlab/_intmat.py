"""Exact integer matrix utilities (Python ints, no overflow).

Used by the periodic-point enumerator: Smith normal form with unimodular
transforms, integer determinants and integer matrix powers.
"""

from __future__ import annotations

IntMatrix = list[list[int]]


def int_matrix(rows) -> IntMatrix:
    return [[int(v) for v in row] for row in rows]


def identity(n: int) -> IntMatrix:
    return [[1 if i == j else 0 for j in range(n)] for i in range(n)]


def mat_mul(a: IntMatrix, b: IntMatrix) -> IntMatrix:
    n, k, m = len(a), len(b), len(b[0])
    return [[sum(a[i][t] * b[t][j] for t in range(k)) for j in range(m)] for i in range(n)]


def mat_vec(a: IntMatrix, v: list) -> list:
    return [sum(a[i][j] * v[j] for j in range(len(v))) for i in range(len(a))]


def mat_power(a: IntMatrix, k: int) -> IntMatrix:
    if k < 0:
        raise ValueError("negative powers not supported")
    result = identity(len(a))
    base = [row[:] for row in a]
    while k:
        if k & 1:
            result = mat_mul(result, base)
        base = mat_mul(base, base)
        k >>= 1
    return result


def mat_sub(a: IntMatrix, b: IntMatrix) -> IntMatrix:
    return [[x - y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def det(a: IntMatrix) -> int:
    """Exact determinant by fraction-free Gaussian elimination (Bareiss)."""
    n = len(a)
    m = [row[:] for row in a]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if m[k][k] == 0:
            for i in range(k + 1, n):
                if m[i][k] != 0:
                    m[k], m[i] = m[i], m[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
            m[i][k] = 0
        prev = m[k][k]
    return sign * m[n - 1][n - 1]


def smith_normal_form(a: IntMatrix) -> tuple[IntMatrix, IntMatrix, IntMatrix]:
    """Return (U, S, V) with S = U a V diagonal, U and V unimodular.

    The diagonal of S is nonnegative with s_i dividing s_{i+1}.
    """
    s = [row[:] for row in a]
    n = len(s)
    m = len(s[0])
    u = identity(n)
    v = identity(m)

    def swap_rows(i, j):
        s[i], s[j] = s[j], s[i]
        u[i], u[j] = u[j], u[i]

    def swap_cols(i, j):
        for row in s:
            row[i], row[j] = row[j], row[i]
        for row in v:
            row[i], row[j] = row[j], row[i]

    def add_row(src, dst, factor):
        # row[dst] += factor * row[src]
        s[dst] = [x + factor * y for x, y in zip(s[dst], s[src])]
        u[dst] = [x + factor * y for x, y in zip(u[dst], u[src])]

    def add_col(src, dst, factor):
        for row in s:
            row[dst] += factor * row[src]
        for row in v:
            row[dst] += factor * row[src]

    def negate_row(i):
        s[i] = [-x for x in s[i]]
        u[i] = [-x for x in u[i]]

    for t in range(min(n, m)):
        while True:
            # move a minimal-magnitude nonzero entry of the trailing block to the pivot
            pivot = None
            best = None
            for i in range(t, n):
                for j in range(t, m):
                    val = abs(s[i][j])
                    if val and (best is None or val < best):
                        best, pivot = val, (i, j)
            if pivot is None:
                break
            if pivot[0] != t:
                swap_rows(t, pivot[0])
            if pivot[1] != t:
                swap_cols(t, pivot[1])
            reduced = True
            for i in range(t + 1, n):
                q = s[i][t] // s[t][t]
                if q:
                    add_row(t, i, -q)
                if s[i][t]:
                    reduced = False
            for j in range(t + 1, m):
                q = s[t][j] // s[t][t]
                if q:
                    add_col(t, j, -q)
                if s[t][j]:
                    reduced = False
            if not reduced:
                continue
            # enforce that the pivot divides the whole trailing block
            offender = None
            for i in range(t + 1, n):
                if any(s[i][j] % s[t][t] for j in range(t + 1, m)):
                    offender = i
                    break
            if offender is None:
                break
            add_row(offender, t, 1)
        if t < n and t < m and s[t][t] < 0:
            negate_row(t)
    return u, s, v
