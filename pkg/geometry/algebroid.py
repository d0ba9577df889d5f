"""
geometry/algebroid.py

Lie algebroids given by a frame, an anchor matrix and structure functions:

    [e_a, e_b] = sum_k c^k_ab e_k,        rho(e_a) = sum_i rho^i_a ∂_i

Provides:
    check_axioms(A)                    anchor morphism, Leibniz and Jacobi with residuals
    poisson_algebroid(P)               T*X with [a,b] = L_{Pa} b - i_{Pb} da
    is_coisotropic(S, P)
    conormal_algebroid(S, P)           N*S over a linear coisotropic S
    ce_differential(A, phi)            homological vector field on A[1]

Axioms are tested on frame sections multiplied by generic affine functions
u0 + sum_i u_i x^i, where the u's are fresh even generators.
"""

import logging
from fractions import Fraction
from functools import cached_property
from typing import List, Optional, Sequence

import sympy

from geometry import linalg
from geometry.cartan import (
    AffineSubspace, Form, MultiVector, VectorValuedForm, bivector_matrix, contract, exterior_d, form_chart,
    interior, lie_derivative, schouten,
)
from geometry.errors import AxiomError, ChartMismatchError, NotCoisotropicError, NotPoissonError, ShapeMismatchError
from geometry.symcore import Chart, GradedElement, derive, rational

LOG = logging.getLogger("algebroid")
LOG.setLevel(logging.INFO)
if not LOG.handlers:
    handler = logging.StreamHandler()
    handler.setFormatter(logging.Formatter("%(asctime)s [%(levelname)s] %(message)s"))
    LOG.addHandler(handler)

FIBER_PREFIX = "xi"

Section = List[GradedElement]


class LieAlgebroid:
    """
    anchor[a][i] = rho^i_a and structure[a][b][k] = c^k_ab, all functions on base.
    Antisymmetry of c is enforced; the remaining axioms are checked on demand.
    """

    def __init__(self, base: Chart, anchor, structure=None, frame: Optional[Sequence[str]] = None,
                 poisson: Optional[MultiVector] = None, name: str = "A"):
        n = len(base)
        self.base = base
        self.anchor = [[_function(base, v) for v in row] for row in anchor]
        r = len(self.anchor)
        if any(len(row) != n for row in self.anchor):
            raise ShapeMismatchError(f"anchor must be {r}x{n}")
        if structure is None:
            structure = [[[0] * r for _ in range(r)] for _ in range(r)]
        self.structure = [[[_function(base, v) for v in cell] for cell in row] for row in structure]
        if len(self.structure) != r or any(len(row) != r or any(len(c) != r for c in row) for row in self.structure):
            raise ShapeMismatchError(f"structure functions must be {r}x{r}x{r}")
        for a in range(r):
            for b in range(r):
                for k in range(r):
                    if self.structure[a][b][k] + self.structure[b][a][k]:
                        raise AxiomError(f"structure functions not antisymmetric at c^{k}_{a}{b}")
        self.frame = list(frame) if frame else [f"e{a + 1}" for a in range(r)]
        self.poisson = poisson
        self.name = name

    @property
    def rank(self) -> int:
        return len(self.anchor)

    def anchor_matrix(self, point=None) -> sympy.Matrix:
        """n x r matrix with columns rho(e_a), evaluated at point."""
        n, r = len(self.base), self.rank
        M = sympy.zeros(n, r)
        for a in range(r):
            for i in range(n):
                e = self.anchor[a][i]
                if point is not None:
                    e = e.evaluate(point)
                if not e.is_constant():
                    raise ShapeMismatchError("anchor entry is not constant; pass a sample point")
                c = e.constant_term()
                M[i, a] = sympy.Rational(c.numerator, c.denominator)
        return M

    @cached_property
    def graded_chart(self) -> Chart:
        return self.base.extend((n, 1) for n in self.fiber_names())

    def fiber_names(self) -> List[str]:
        names = [f"{FIBER_PREFIX}{a + 1}" for a in range(self.rank)]
        for n in names:
            if n in self.base:
                raise ShapeMismatchError(f"fibre coordinate '{n}' collides with a base coordinate")
        return names

    def __repr__(self):
        return f"LieAlgebroid({self.name}, rank={self.rank}, base={self.base.names})"


def _function(base: Chart, v) -> GradedElement:
    if isinstance(v, GradedElement):
        return v if v.chart == base else v.embed(base)
    return base.constant(_exact(v))


def _exact(v) -> Fraction:
    return rational(sympy.nsimplify(v)) if isinstance(v, sympy.Basic) else rational(v)


# -------------------------
# Standard algebroids
# -------------------------
def tangent_algebroid(base: Chart) -> LieAlgebroid:
    n = len(base)
    anchor = [[1 if i == a else 0 for i in range(n)] for a in range(n)]
    return LieAlgebroid(base, anchor, frame=[f"∂{x}" for x in base.names], name="T")


def abelian_algebroid(base: Chart, rank: int) -> LieAlgebroid:
    return LieAlgebroid(base, [[0] * len(base) for _ in range(rank)], name="abelian")


def lie_algebra_algebroid(base: Chart, constants) -> LieAlgebroid:
    """Action-free algebroid of a Lie algebra with constants[a][b][k] = c^k_ab."""
    r = len(constants)
    return LieAlgebroid(base, [[0] * len(base) for _ in range(r)], constants, name="lie_algebra")


def so3_constants() -> list:
    """c^k_ab = epsilon_abk."""
    eps = [[[0] * 3 for _ in range(3)] for _ in range(3)]
    for a, b, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        eps[a][b][k] = 1
        eps[b][a][k] = -1
    return eps


# -------------------------
# Sections
# -------------------------
def apply_anchor_element(A: LieAlgebroid, a: int, f: GradedElement) -> GradedElement:
    """rho(e_a)(f), differentiating only along base coordinates."""
    out = f.chart.zero()
    for i, x in enumerate(A.base.names):
        coeff = A.anchor[a][i]
        if coeff:
            out = out + coeff.embed(f.chart) * derive(f, x)
    return out


def section_bracket(A: LieAlgebroid, s: Section, t: Section) -> Section:
    """[s,t]^k = f^a g^b c^k_ab + f^a rho_a(g^k) - g^b rho_b(f^k)."""
    chart = s[0].chart if s else A.base
    r = A.rank
    out = []
    for k in range(r):
        acc = chart.zero()
        for a in range(r):
            if s[a]:
                acc = acc + s[a] * apply_anchor_element(A, a, t[k])
            if t[a]:
                acc = acc - t[a] * apply_anchor_element(A, a, s[k])
            for b in range(r):
                c = A.structure[a][b][k]
                if c and s[a] and t[b]:
                    acc = acc + s[a] * t[b] * c.embed(chart)
        out.append(acc)
    return out


def anchor_of(A: LieAlgebroid, s: Section) -> Section:
    """Components of rho(s) along the base coordinates."""
    chart = s[0].chart if s else A.base
    return [sum((s[a] * A.anchor[a][i].embed(chart) for a in range(A.rank)), chart.zero())
            for i in range(len(A.base))]


def _vector_bracket(base: Chart, X: Section, Y: Section) -> Section:
    chart = X[0].chart if X else base

    def apply(V, f):
        return sum((V[j] * derive(f, x) for j, x in enumerate(base.names)), chart.zero())

    return [apply(X, Y[i]) - apply(Y, X[i]) for i in range(len(base))]


def _generic_chart(A: LieAlgebroid, count: int):
    """Base chart extended by coefficients of `count` generic affine functions."""
    extra = [(f"_u{k}_{i}", 0) for k in range(count) for i in range(len(A.base) + 1)]
    chart = A.base.extend(extra)
    funcs = []
    for k in range(count):
        f = chart.gen(f"_u{k}_0")
        for i, x in enumerate(A.base.names):
            f = f + chart.gen(f"_u{k}_{i + 1}") * chart.gen(x)
        funcs.append(f)
    return chart, funcs


def _frame_section(chart: Chart, r: int, a: int, coeff: Optional[GradedElement] = None) -> Section:
    s = [chart.zero() for _ in range(r)]
    s[a] = coeff if coeff is not None else chart.one()
    return s


def _render(section: Section) -> List[str]:
    return [str(v) for v in section]


def check_axioms(A: LieAlgebroid) -> dict:
    r = A.rank
    chart, (f, g) = _generic_chart(A, 2)
    anchor_res, leibniz_res, jacobi_res = {}, {}, {}
    for a in range(r):
        for b in range(r):
            s = _frame_section(chart, r, a, f)
            t = _frame_section(chart, r, b, g)
            lhs = anchor_of(A, section_bracket(A, s, t))
            rhs = _vector_bracket(A.base, anchor_of(A, s), anchor_of(A, t))
            diff = [x - y for x, y in zip(lhs, rhs)]
            if any(diff):
                anchor_res[f"rho[f e{a + 1}, g e{b + 1}]"] = _render(diff)
            ea = _frame_section(chart, r, a)
            eb = _frame_section(chart, r, b)
            left = section_bracket(A, ea, _frame_section(chart, r, b, f))
            base_bracket = section_bracket(A, ea, eb)
            rho_f = apply_anchor_element(A, a, f)
            right = [f * base_bracket[k] + (rho_f if k == b else chart.zero()) for k in range(r)]
            diff = [x - y for x, y in zip(left, right)]
            if any(diff):
                leibniz_res[f"[e{a + 1}, f e{b + 1}]"] = _render(diff)
    for a in range(r):
        for b in range(a + 1, r):
            for c in range(b + 1, r):
                ea, eb, ec = (_frame_section(chart, r, i) for i in (a, b, c))
                total = [x + y + z for x, y, z in zip(
                    section_bracket(A, ea, section_bracket(A, eb, ec)),
                    section_bracket(A, eb, section_bracket(A, ec, ea)),
                    section_bracket(A, ec, section_bracket(A, ea, eb)))]
                if any(total):
                    jacobi_res[f"e{a + 1},e{b + 1},e{c + 1}"] = _render(total)
    report = {
        "anchor_morphism": not anchor_res,
        "leibniz": not leibniz_res,
        "jacobi": not jacobi_res,
        "rank": r,
        "residuals": {"anchor_morphism": anchor_res, "leibniz": leibniz_res, "jacobi": jacobi_res},
    }
    report["ok"] = report["anchor_morphism"] and report["leibniz"] and report["jacobi"]
    report["message"] = "Lie algebroid axioms hold" if report["ok"] else "Lie algebroid axioms fail"
    return report


# -------------------------
# Poisson algebroid
# -------------------------
def koszul_bracket(P: MultiVector, alpha: Form, beta: Form) -> Form:
    """[a,b] = L_{P#a} b - i_{P#b} da."""
    return lie_derivative(contract(alpha, P), beta) - interior(contract(beta, P), exterior_d(alpha))


def poisson_algebroid(P: MultiVector) -> LieAlgebroid:
    """Frame {dx^i}, anchor[a][i] = P^{ai} (so P = ∂x^∂y sends dx to +∂y)."""
    residual = schouten(P, P)
    if not residual.is_zero():
        raise NotPoissonError(f"[P,P] = {residual}")
    base = P.base
    names = base.names
    anchor = bivector_matrix(P)
    r = len(names)
    structure = [[[base.zero()] * r for _ in range(r)] for _ in range(r)]
    for a in range(r):
        for b in range(a + 1, r):
            bracket = koszul_bracket(P, Form.d_of(base, names[a]), Form.d_of(base, names[b]))
            for k, x in enumerate(names):
                c = derive(bracket.element, "d" + x).embed(base)
                structure[a][b][k] = c
                structure[b][a][k] = -c
    return LieAlgebroid(base, anchor, structure, frame=[f"d{x}" for x in names], poisson=P, name="poisson")


# -------------------------
# Coisotropic subspaces
# -------------------------
def _restricted_pairings(S: AffineSubspace, P: MultiVector):
    ann = linalg.annihilator(S.basis)
    Pm = bivector_matrix(P)
    n = len(P.base)
    pairs = {}
    for a in range(ann.cols):
        for b in range(ann.cols):
            val = P.base.zero()
            for i in range(n):
                for j in range(n):
                    c = ann[i, a] * ann[j, b]
                    if c and Pm[i][j]:
                        val = val + Pm[i][j].scale(_exact(c))
            pairs[(a, b)] = val
    return ann, pairs


def is_coisotropic(S: AffineSubspace, P: MultiVector) -> bool:
    """P#(Ann TS) inside TS along S, i.e. P(a,b)|_S = 0 for a, b in Ann TS."""
    if S.base != P.base:
        raise ChartMismatchError("subspace and bivector live on different charts")
    _, pairs = _restricted_pairings(S, P)
    return all(S.restrict(v).is_zero() for v in pairs.values())


def _pivot_solver(M: sympy.Matrix):
    """Rows picking an invertible square block of a full-column-rank M, and its inverse."""
    _, pivots = M.T.rref(simplify=True)
    rows = list(pivots)
    return rows, M.extract(rows, list(range(M.cols))).inv()


def _combine(coeffs_row, values: Sequence[GradedElement], chart: Chart) -> GradedElement:
    out = chart.zero()
    for c, v in zip(coeffs_row, values):
        if c and v:
            out = out + v.scale(_exact(c))
    return out


def conormal_algebroid(S: AffineSubspace, P: MultiVector) -> LieAlgebroid:
    """
    N*S over S (parameter chart t1..tk): frame a basis of Ann TS, bracket the
    restriction of the Poisson bracket, anchor P# landing in TS.
    """
    if not is_coisotropic(S, P):
        raise NotCoisotropicError("subspace is not coisotropic")
    base = S.parameter_chart()
    n, k = len(P.base), S.dimension
    ann, pairs = _restricted_pairings(S, P)
    r = ann.cols
    Pm = bivector_matrix(P)
    anchor = []
    if k:
        rows, inv = _pivot_solver(S.basis)
    for a in range(r):
        # (P# alpha)^i = sum_j alpha_j P^{ji}, restricted to S, in the basis of TS
        vec = [S.restrict(_combine([ann[j, a] for j in range(n)], [Pm[j][i] for j in range(n)], P.base))
               for i in range(n)]
        coords = [_combine(inv.row(c), [vec[i] for i in rows], base) for c in range(k)] if k else []
        anchor.append(coords)
    structure = [[[base.zero()] * r for _ in range(r)] for _ in range(r)]
    if r:
        arows, ainv = _pivot_solver(ann)
    for a in range(r):
        for b in range(a + 1, r):
            dP = [S.restrict(derive(pairs[(a, b)], x)) for x in P.base.names]
            coeffs = [_combine(ainv.row(c), [dP[i] for i in arows], base) for c in range(r)]
            for c in range(r):
                structure[a][b][c] = coeffs[c]
                structure[b][a][c] = -coeffs[c]
    frame = [f"n{a + 1}" for a in range(r)]
    LOG.debug("conormal algebroid of rank %d over a %d-dimensional subspace", r, k)
    return LieAlgebroid(base, anchor if r else [], structure, frame=frame, name="conormal")


# -------------------------
# Chevalley-Eilenberg model
# -------------------------
class CEForm:
    """Element of the Chevalley-Eilenberg algebra: a function on A[1]."""

    __slots__ = ("algebroid", "element")

    def __init__(self, algebroid: LieAlgebroid, element: GradedElement):
        chart = ce_chart(algebroid)
        if element.chart != chart:
            raise ChartMismatchError("CE form does not live on the algebroid's graded chart")
        self.algebroid = algebroid
        self.element = element

    @property
    def ce_degree(self) -> Optional[int]:
        return self.element.degree()

    def __eq__(self, other):
        return isinstance(other, CEForm) and self.element == other.element

    def __hash__(self):
        return hash(self.element)

    def __str__(self):
        return str(self.element)


def ce_chart(A: LieAlgebroid) -> Chart:
    """Base coordinates (degree 0) followed by fibre coordinates xi^a (degree 1)."""
    return A.graded_chart


def ce_vector_field(A: LieAlgebroid) -> VectorValuedForm:
    """Q = xi^a rho^i_a ∂_x^i - 1/2 xi^a xi^b c^k_ab ∂_xi^k as a vector-valued 0-form of degree 1."""
    chart = ce_chart(A)
    fchart = form_chart(chart)
    xi = A.fiber_names()
    comps = {}
    for i, x in enumerate(A.base.names):
        acc = fchart.zero()
        for a in range(A.rank):
            if A.anchor[a][i]:
                acc = acc + A.anchor[a][i].embed(fchart) * fchart.gen(xi[a])
        comps[x] = acc
    half = Fraction(1, 2)
    for k in range(A.rank):
        acc = fchart.zero()
        for a in range(A.rank):
            for b in range(A.rank):
                c = A.structure[a][b][k]
                if c:
                    acc = acc - (c.embed(fchart) * fchart.gen(xi[a]) * fchart.gen(xi[b])).scale(half)
        comps[xi[k]] = acc
    return VectorValuedForm(chart, comps)


def ce_differential(A: LieAlgebroid, phi) -> CEForm:
    element = phi.element if isinstance(phi, CEForm) else phi
    chart = ce_chart(A)
    if element.chart != chart:
        raise ChartMismatchError("CE form does not live on the algebroid's graded chart")
    Q = ce_vector_field(A)
    out = chart.zero()
    for name, comp in Q.components.items():
        part = derive(element, name)
        if part:
            out = out + comp.embed(chart) * part
    return CEForm(A, out)


def delta_squared(A: LieAlgebroid) -> dict:
    """delta^2 on the generators x^i, xi^a."""
    chart = ce_chart(A)
    res = {}
    for name in chart.names:
        val = ce_differential(A, ce_differential(A, chart.gen(name))).element
        if val:
            res[name] = str(val)
    return {"ok": not res, "residuals": res}
