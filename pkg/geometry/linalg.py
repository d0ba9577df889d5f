"""
geometry/linalg.py

Exact linear algebra over Q (and Q(i) through realification) on sympy matrices.
Empty shapes are handled explicitly; sympy is unreliable on 0-row inputs.
"""

import random
from fractions import Fraction
from typing import Iterable, List, Sequence

import sympy

from config import SAMPLE_RANGE
from geometry.errors import ShapeMismatchError


def qmatrix(rows, n_rows: int = None, n_cols: int = None) -> sympy.Matrix:
    """Rational sympy matrix from nested lists of ints, Fractions or "p/q" strings."""
    if isinstance(rows, sympy.MatrixBase):
        return sympy.Matrix(rows)
    rows = [list(r) for r in rows]
    if not rows:
        return sympy.zeros(n_rows or 0, n_cols or 0)
    return sympy.Matrix([[to_sympy_number(v) for v in r] for r in rows])


def to_sympy_number(v):
    if isinstance(v, Fraction):
        return sympy.Rational(v.numerator, v.denominator)
    if isinstance(v, float):
        raise TypeError(f"floating point entry {v!r}; use an exact 'p/q' string")
    if isinstance(v, str):
        # "p/q", or Gaussian rationals such as "1/2 + 3*I"
        return sympy.sympify(v, rational=True)
    return sympy.sympify(v)


def rank(m: sympy.Matrix) -> int:
    if m.rows == 0 or m.cols == 0:
        return 0
    return m.rank(simplify=True)


def nullspace(m: sympy.Matrix) -> sympy.Matrix:
    """Columns form a basis of ker m (n x k matrix, k possibly 0)."""
    n = m.cols
    if n == 0:
        return sympy.zeros(0, 0)
    if m.rows == 0:
        return sympy.eye(n)
    vecs = m.nullspace(simplify=True)
    if not vecs:
        return sympy.zeros(n, 0)
    return sympy.Matrix.hstack(*vecs)


def column_basis(m: sympy.Matrix) -> sympy.Matrix:
    """Independent columns spanning the image of m."""
    if m.cols == 0 or m.rows == 0:
        return sympy.zeros(m.rows, 0)
    _, pivots = m.rref(simplify=True)
    if not pivots:
        return sympy.zeros(m.rows, 0)
    return sympy.Matrix.hstack(*[m[:, j] for j in pivots])


def annihilator(basis: sympy.Matrix) -> sympy.Matrix:
    """Columns are covectors (as column vectors) vanishing on the columns of basis."""
    if basis.cols == 0:
        return sympy.eye(basis.rows)
    return nullspace(basis.T)


def complement(basis: sympy.Matrix) -> sympy.Matrix:
    """Standard basis vectors completing the columns of basis to a basis."""
    n = basis.rows
    current = basis
    picked = []
    for j in range(n):
        e = sympy.zeros(n, 1)
        e[j] = 1
        trial = sympy.Matrix.hstack(current, e) if current.cols else e
        if rank(trial) > rank(current):
            current = trial
            picked.append(e)
    return sympy.Matrix.hstack(*picked) if picked else sympy.zeros(n, 0)


def solve_in_basis(basis: sympy.Matrix, vectors: sympy.Matrix) -> sympy.Matrix:
    """Coordinates c with basis * c = vectors; raises if some column is outside the span."""
    if vectors.cols == 0:
        return sympy.zeros(basis.cols, 0)
    if basis.cols == 0:
        if any(v != 0 for v in vectors):
            raise ShapeMismatchError("vector outside the (zero) span")
        return sympy.zeros(0, vectors.cols)
    sol, params = basis.gauss_jordan_solve(vectors)
    if params.shape[0]:
        sol = sol.subs({p: 0 for p in params})
    return sol


def in_span(basis: sympy.Matrix, vectors: sympy.Matrix) -> bool:
    if vectors.cols == 0:
        return True
    if basis.cols == 0:
        return all(v == 0 for v in vectors)
    return rank(sympy.Matrix.hstack(basis, vectors)) == rank(basis)


def block_diag(*blocks: sympy.Matrix) -> sympy.Matrix:
    rows = sum(b.rows for b in blocks)
    cols = sum(b.cols for b in blocks)
    out = sympy.zeros(rows, cols)
    r = c = 0
    for b in blocks:
        if b.rows or b.cols:
            out[r:r + b.rows, c:c + b.cols] = b
        r += b.rows
        c += b.cols
    return out


def stack(blocks: Sequence[Sequence[sympy.Matrix]]) -> sympy.Matrix:
    """Block matrix from a rectangular grid; rows/cols taken from the grid shapes."""
    heights = [max(b.rows for b in row) for row in blocks]
    widths = [max(blocks[i][j].cols for i in range(len(blocks))) for j in range(len(blocks[0]))]
    out = sympy.zeros(sum(heights), sum(widths))
    r = 0
    for i, row in enumerate(blocks):
        c = 0
        for j, b in enumerate(row):
            if b.rows and b.cols:
                out[r:r + b.rows, c:c + b.cols] = b
            c += widths[j]
        r += heights[i]
    return out


def realify(m: sympy.Matrix) -> sympy.Matrix:
    """Real 2x block form [[Re, -Im], [Im, Re]]; rank doubles the complex rank."""
    re = m.applyfunc(lambda z: sympy.re(z))
    im = m.applyfunc(lambda z: sympy.im(z))
    return stack([[re, -im], [im, re]])


def complex_rank(m: sympy.Matrix) -> int:
    return rank(realify(m)) // 2


def is_zero(m: sympy.Matrix) -> bool:
    return all(sympy.simplify(v) == 0 for v in m)


def conjugate(m: sympy.Matrix) -> sympy.Matrix:
    return m.applyfunc(sympy.conjugate)


def sample_points(names: Iterable[str], seed: int, count: int) -> List[dict]:
    """Deterministic rational sample points {name: Fraction}."""
    rng = random.Random(seed)
    names = list(names)
    num, den = SAMPLE_RANGE["numerator"], SAMPLE_RANGE["denominator"]
    return [{n: Fraction(rng.randint(-num, num), rng.randint(1, den)) for n in names} for _ in range(count)]


def render(m: sympy.Matrix) -> list:
    return [[str(v) for v in m.row(i)] for i in range(m.rows)]
