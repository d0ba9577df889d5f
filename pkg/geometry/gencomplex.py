"""
geometry/gencomplex.py

Generalized tangent bundle T + T*: sections, Dorfman and Courant brackets,
generalized complex structures J = (-I, P; Q, tI), their verification,
Poisson extraction and stability of generalized tangent bundles of linear
submanifolds.

All checks return report dicts {"ok": bool, ..., "residuals": {...}}.
"""

import logging
import random
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations_with_replacement
from typing import List, Optional, Tuple

import sympy

from geometry import linalg
from geometry.cartan import (
    AffineSubspace, Form, MultiVector, VectorValuedForm, apply_tensor, as_multivector, as_vector_field,
    bivector_from_matrix, bivector_matrix, constant_matrix, contract, exterior_d, form_from_matrix, form_matrix,
    interior, lie_derivative, schouten, tensor_from_matrix,
)
from geometry.errors import (
    DegenerateFormError, DegreeMismatchError, HypothesisError, IntegrabilityError, ShapeMismatchError,
    TwistNotClosedError,
)
from geometry.symcore import Chart, GradedElement, derive

LOG = logging.getLogger("gencomplex")
LOG.setLevel(logging.INFO)
if not LOG.handlers:
    handler = logging.StreamHandler()
    handler.setFormatter(logging.Formatter("%(asctime)s [%(levelname)s] %(message)s"))
    LOG.addHandler(handler)


# -------------------------
# Sections
# -------------------------
class GeneralizedSection:
    __slots__ = ("base", "vector", "form")

    def __init__(self, vector: MultiVector, form: Form):
        if vector.base != form.base:
            raise ShapeMismatchError("vector and form parts live on different charts")
        if vector.element and vector.degree != 1:
            raise DegreeMismatchError("vector part must be a vector field")
        if form.element and form.degree != 1:
            raise DegreeMismatchError("form part must be a 1-form")
        self.base = vector.base
        self.vector = vector
        self.form = form

    @classmethod
    def of(cls, base: Chart, vector: Optional[MultiVector] = None, form: Optional[Form] = None):
        from geometry.cartan import multivector_chart
        return cls(vector if vector is not None else MultiVector(base, multivector_chart(base).zero()),
                   form if form is not None else Form.zero(base))

    def is_zero(self) -> bool:
        return self.vector.is_zero() and self.form.is_zero()

    def __add__(self, other):
        return GeneralizedSection(self.vector + other.vector, self.form + other.form)

    def __sub__(self, other):
        return GeneralizedSection(self.vector - other.vector, self.form - other.form)

    def __neg__(self):
        return GeneralizedSection(-self.vector, -self.form)

    def scale(self, c) -> "GeneralizedSection":
        return GeneralizedSection(self.vector * c, self.form * c)

    def __eq__(self, other):
        return isinstance(other, GeneralizedSection) and self.vector == other.vector and self.form == other.form

    def __hash__(self):
        return hash((self.vector, self.form))

    def __str__(self):
        return f"({self.vector}) + ({self.form})"


def basis_sections(base: Chart) -> List[Tuple[str, GeneralizedSection]]:
    """Spanning set {∂_i} + {dx^i} with labels."""
    out = [(f"∂{n}", GeneralizedSection.of(base, vector=MultiVector.partial(base, n))) for n in base.names]
    out += [(f"d{n}", GeneralizedSection.of(base, form=Form.d_of(base, n))) for n in base.names]
    return out


def pairing(a: GeneralizedSection, b: GeneralizedSection) -> GradedElement:
    """<v+xi, w+eta> = (xi(w) + eta(v)) / 2, as a base function."""
    total = interior(b.vector, a.form).element + interior(a.vector, b.form).element
    return total.embed(a.base).scale(Fraction(1, 2))


def _check_twist(H: Optional[Form]):
    if H is not None and not exterior_d(H).is_zero():
        raise TwistNotClosedError(f"twist is not closed: dH = {exterior_d(H)}")


def dorfman(a: GeneralizedSection, b: GeneralizedSection, H: Optional[Form] = None) -> GeneralizedSection:
    """(v+xi) o (w+eta) = [v,w] + L_v eta - i_w d xi + i_v i_w H."""
    if a.base != b.base:
        raise ShapeMismatchError("sections live on different charts")
    _check_twist(H)
    vec = schouten(a.vector, b.vector)
    form = lie_derivative(a.vector, b.form) - interior(b.vector, exterior_d(a.form))
    if H is not None:
        form = form + interior(a.vector, interior(b.vector, H))
    return GeneralizedSection(vec, form)


def courant(a: GeneralizedSection, b: GeneralizedSection, H: Optional[Form] = None) -> GeneralizedSection:
    return (dorfman(a, b, H) - dorfman(b, a, H)).scale(Fraction(1, 2))


# -------------------------
# Generalized complex structures
# -------------------------
class GCStructure:
    """J = (-I, P; Q, tI) with I a (1,1)-tensor, P a bivector, Q a 2-form, optional closed twist H."""

    __slots__ = ("base", "I", "P", "Q", "H")

    def __init__(self, base: Chart, I: Optional[VectorValuedForm] = None, P: Optional[MultiVector] = None,
                 Q: Optional[Form] = None, H: Optional[Form] = None):
        from geometry.cartan import multivector_chart
        self.base = base
        self.I = I if I is not None else VectorValuedForm.zero(base)
        self.P = P if P is not None else MultiVector(base, multivector_chart(base).zero())
        self.Q = Q if Q is not None else Form.zero(base)
        self.H = H
        if self.I.form_degree not in (None, 1) or self.I.total_degree not in (None, 1):
            raise DegreeMismatchError("I must be a (1,1)-tensor")
        if self.P.element and self.P.degree != 2:
            raise DegreeMismatchError("P must be a bivector")
        if self.Q.element and self.Q.degree != 2:
            raise DegreeMismatchError("Q must be a 2-form")
        if H is not None and H.element and H.degree != 3:
            raise DegreeMismatchError("H must be a 3-form")
        _check_twist(H)

    def transpose_I(self, xi: Form) -> Form:
        """(tI xi) = xi o I = sum_A xi_A I^A."""
        out = Form.zero(self.base)
        for n, comp in self.I.components.items():
            coeff = derive(xi.element, "d" + n, "left")
            if coeff:
                out = out + Form(self.base, coeff * comp)
        return out

    def apply(self, s: GeneralizedSection) -> GeneralizedSection:
        """J(v,xi) = (-I v + P#xi, i_v Q + tI xi)."""
        v = as_vector_field(s.vector)
        Iv = as_multivector(apply_tensor(self.I, v)) if not v.is_zero() else s.vector
        vec = -Iv + contract(s.form, self.P)
        form = interior(s.vector, self.Q) + self.transpose_I(s.form)
        return GeneralizedSection(vec, form)

    def matrices(self, point=None) -> Tuple[sympy.Matrix, sympy.Matrix, sympy.Matrix]:
        """Constant block matrices (I, P, Q), evaluated at point if given."""
        I = _tensor_matrix(self.I)
        P = bivector_matrix(self.P)
        Q = form_matrix(self.Q)
        if point is not None:
            I = [[e.evaluate(point) for e in row] for row in I]
            P = [[e.evaluate(point) for e in row] for row in P]
            Q = [[e.evaluate(point) for e in row] for row in Q]
        return constant_matrix(I), constant_matrix(P), constant_matrix(Q)

    def __str__(self):
        return f"GC(I={self.I}, P={self.P}, Q={self.Q}, H={self.H})"


def _tensor_matrix(K: VectorValuedForm) -> List[List[GradedElement]]:
    """M[i][j] with K(∂_j) = sum_i M[i][j] ∂_i."""
    names = K.base.names
    return [[derive(K.component(a), "d" + b, "left").embed(K.base) for b in names] for a in names]


def action_matrix(I: sympy.Matrix, P: sympy.Matrix, Q: sympy.Matrix) -> sympy.Matrix:
    """Matrix of J on coordinate vectors (v in the ∂ basis, xi in the dx basis)."""
    return linalg.stack([[-I, -P], [-Q, I.T]])


def gc_check(J: GCStructure) -> dict:
    """J^2 = -1, pairing preserved, Courant-Nijenhuis tensor vanishing on coordinate sections."""
    sections = basis_sections(J.base)
    images = {label: J.apply(s) for label, s in sections}
    squares = {}
    for label, s in sections:
        r = J.apply(images[label]) + s
        if not r.is_zero():
            squares[label] = str(r)
    pairing_res = {}
    for (la, a), (lb, b) in combinations_with_replacement(sections, 2):
        r = pairing(images[la], images[lb]) - pairing(a, b)
        if r:
            pairing_res[f"<{la},{lb}>"] = str(r)
    integrability = {}
    for i, (la, a) in enumerate(sections):
        for lb, b in sections[i + 1:]:
            Ja, Jb = images[la], images[lb]
            N = (courant(Ja, Jb, J.H) - J.apply(courant(Ja, b, J.H))
                 - J.apply(courant(a, Jb, J.H)) - courant(a, b, J.H))
            if not N.is_zero():
                integrability[f"N({la},{lb})"] = str(N)
    report = {
        "squares": not squares,
        "pairing": not pairing_res,
        "integrability": not integrability,
        "residuals": {"squares": squares, "pairing": pairing_res, "integrability": integrability},
    }
    report["ok"] = report["squares"] and report["pairing"] and report["integrability"]
    report["message"] = "generalized complex" if report["ok"] else "not generalized complex"
    LOG.debug("gc_check: %s", report["message"])
    return report


def from_symplectic(omega: Form) -> GCStructure:
    """J_w = (0, w^-1; -w, 0) for a constant nondegenerate 2-form."""
    if omega.element and omega.degree != 2:
        raise DegreeMismatchError("expected a 2-form")
    W = constant_matrix(form_matrix(omega))
    if W.rows == 0 or W.det() == 0:
        raise DegenerateFormError("symplectic form is degenerate")
    P = bivector_from_matrix(omega.base, W.inv().tolist())
    return GCStructure(omega.base, P=P, Q=-omega)


def from_complex(I: VectorValuedForm) -> GCStructure:
    """J_I = (-I, 0; 0, tI)."""
    return GCStructure(I.base, I=I)


def poisson_of(J: GCStructure, strict: bool = True, report: Optional[dict] = None):
    """
    Returns (P, proof) where proof records the Schouten residual [P,P].
    With strict=True a J failing gc_check raises IntegrabilityError.
    """
    report = report or gc_check(J)
    if strict and not report["integrability"]:
        raise IntegrabilityError("generalized complex structure is not integrable")
    residual = schouten(J.P, J.P)
    proof = {
        "ok": residual.is_zero(),
        "gc_verified": report["ok"],
        "P": str(J.P),
        "schouten_residual": str(residual),
        "message": "P is Poisson" if residual.is_zero() else "P fails [P,P] = 0",
    }
    return J.P, proof


# -------------------------
# Generalized submanifolds
# -------------------------
@dataclass
class GeneralizedSubmanifold:
    space: AffineSubspace
    F: sympy.Matrix                     # k x k, F[i][j] = F(b_i, b_j)

    def __post_init__(self):
        k = self.space.dimension
        self.F = linalg.qmatrix(self.F, k, k) if not isinstance(self.F, sympy.MatrixBase) else sympy.Matrix(self.F)
        if self.F.shape != (k, k):
            raise ShapeMismatchError(f"F must be {k}x{k}")
        if self.F.T != -self.F:
            raise ShapeMismatchError("F must be antisymmetric")


def generalized_tangent(S: GeneralizedSubmanifold) -> sympy.Matrix:
    """Columns span tau_S^F = {v + xi : v in TS, xi|TS = i_v F} inside Q^(2n)."""
    B = S.space.basis
    n, k = B.rows, B.cols
    cols = []
    for i in range(k):
        a = sympy.zeros(k, 1)
        a[i] = 1
        target = S.F.T * a
        xi = linalg.solve_in_basis(B.T, target) if k else sympy.zeros(n, 1)
        cols.append(sympy.Matrix.vstack(B * a, xi))
    ann = linalg.annihilator(B)
    for j in range(ann.cols):
        cols.append(sympy.Matrix.vstack(sympy.zeros(n, 1), ann[:, j]))
    return sympy.Matrix.hstack(*cols) if cols else sympy.zeros(2 * n, 0)


def _matrices_along(J: GCStructure, space: AffineSubspace):
    blocks = []
    for raw in (_tensor_matrix(J.I), bivector_matrix(J.P), form_matrix(J.Q)):
        rows = []
        for row in raw:
            r = []
            for e in row:
                restricted = space.restrict(e)
                if not restricted.is_constant():
                    raise HypothesisError("J is not constant along S")
                c = restricted.constant_term()
                r.append(sympy.Rational(c.numerator, c.denominator))
            rows.append(r)
        blocks.append(sympy.Matrix(rows) if rows else sympy.zeros(0, 0))
    return blocks


def tau_stability(S: GeneralizedSubmanifold, J: GCStructure) -> dict:
    """J-invariance of tau_S^F, and the +i eigenbundle L_S when stable."""
    if S.space.base != J.base:
        raise ShapeMismatchError("S and J live on different charts")
    I, P, Q = _matrices_along(J, S.space)
    M = action_matrix(I, P, Q)
    tau = generalized_tangent(S)
    stable = linalg.in_span(tau, M * tau)
    report = {"ok": stable, "dimension": tau.cols, "tau": linalg.render(tau)}
    if not stable:
        report["message"] = "tau_S^F is not J-stable"
        return report
    R = linalg.solve_in_basis(tau, M * tau)
    kernel = linalg.nullspace(R - sympy.I * sympy.eye(R.rows))
    L = tau * kernel if kernel.cols else sympy.zeros(tau.rows, 0)
    splits = linalg.complex_rank(sympy.Matrix.hstack(L, linalg.conjugate(L))) == tau.cols if tau.cols else True
    report.update({
        "L_S": linalg.render(L),
        "L_S_dimension": L.cols,
        "splits": splits,
        "message": "tau_S^F is J-stable",
    })
    report["ok"] = stable and splits
    return report


def random_symplectic_matrix(n: int, rng: random.Random) -> sympy.Matrix:
    """Random invertible antisymmetric 2n x 2n rational matrix, B^T w0 B."""
    w0 = linalg.stack([[sympy.zeros(n, n), sympy.eye(n)], [-sympy.eye(n), sympy.zeros(n, n)]])
    while True:
        B = sympy.Matrix(2 * n, 2 * n, lambda i, j: sympy.Rational(rng.randint(-3, 3), rng.randint(1, 2)))
        if B.det() != 0:
            return B.T * w0 * B


def symplectic_form(base: Chart, W) -> Form:
    return form_from_matrix(base, W.tolist() if isinstance(W, sympy.MatrixBase) else W)


def complex_structure(base: Chart, M) -> VectorValuedForm:
    return tensor_from_matrix(base, M.tolist() if isinstance(M, sympy.MatrixBase) else M)
