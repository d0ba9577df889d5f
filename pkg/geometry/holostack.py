"""
geometry/holostack.py

Homotopy holomorphic structures (I, Q) on [X/A], written on the graded chart of A[1]:

    I = I1 + I2 + ...      I_p a vector-valued p-form of total degree 1
    Q = Q1 + Q2 + ...      Q_p a vector-valued p-form of total degree 0

and the equations

    eq1   [I, Q]_NR = 0
    eq2   [delta, I]_FN + 1/2 [I, I]_FN = 0
    eq3   [delta + I, Q]_FN + 1/2 [I, I]_NR = eq3_rhs_scale * id

with delta the CE vector field of A. Anti-holomorphic foliations are checked on
linear fibre models over Q(i).
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Mapping, Optional, Tuple

import sympy

from config import CONVENTIONS, DEFAULT_SAMPLES, DEFAULT_SEED
from geometry import linalg
from geometry.algebroid import LieAlgebroid, ce_chart, ce_vector_field, check_axioms, poisson_algebroid
from geometry.cartan import (
    D_PREFIX, Form, VectorValuedForm, fn_bracket, form_chart, form_from_matrix, form_matrix, identity_tensor,
    nr_bracket, tensor_from_matrix,
)
from geometry.errors import (
    AxiomError, BidegreeError, ChartMismatchError, ConventionError, DegreeMismatchError, HypothesisError,
    IntegrabilityError, ShapeMismatchError,
)
from geometry.gencomplex import GCStructure, gc_check
from geometry.stacky import ChainMap, LinearComplex, tangent_complex, zero_section
from geometry.symcore import derive

LOG = logging.getLogger("holostack")
LOG.setLevel(logging.INFO)
if not LOG.handlers:
    handler = logging.StreamHandler()
    handler.setFormatter(logging.Formatter("%(asctime)s [%(levelname)s] %(message)s"))
    LOG.addHandler(handler)

HALF = Fraction(1, 2)


# -----------------------
# (I, Q) data
# -----------------------
class HHStructure:
    """I_p and Q_p keyed by form degree p >= 1; notes record how the data was produced."""

    def __init__(self, algebroid: LieAlgebroid, I: Optional[Mapping[int, VectorValuedForm]] = None,
                 Q: Optional[Mapping[int, VectorValuedForm]] = None, notes: Optional[dict] = None):
        self.algebroid = algebroid
        self.I = self._validated(I, total=1, label="I")
        self.Q = self._validated(Q, total=0, label="Q")
        self.notes = dict(notes or {})

    def _validated(self, parts, total: int, label: str) -> Dict[int, VectorValuedForm]:
        chart = ce_chart(self.algebroid)
        out = {}
        for p, K in (parts or {}).items():
            if p < 1:
                raise BidegreeError(f"{label}_{p}: components start at form degree 1")
            if K.base != chart:
                raise ChartMismatchError(f"{label}_{p} does not live on the graded chart of {self.algebroid.name}")
            bad = K.bidegrees() - {(p, total)}
            if bad:
                raise BidegreeError(f"{label}_{p} has bidegrees {sorted(bad)}, expected {(p, total)}")
            if not K.is_zero():
                out[int(p)] = K
        return out

    @property
    def chart(self):
        return ce_chart(self.algebroid)

    def total_I(self) -> VectorValuedForm:
        out = VectorValuedForm.zero(self.chart)
        for K in self.I.values():
            out = out + K
        return out

    def total_Q(self) -> VectorValuedForm:
        out = VectorValuedForm.zero(self.chart)
        for K in self.Q.values():
            out = out + K
        return out

    def scale_Q(self, c) -> "HHStructure":
        return HHStructure(self.algebroid, self.I, {p: K.scale(Fraction(c)) for p, K in self.Q.items()}, self.notes)

    def render(self) -> dict:
        return {"I": {str(p): K.render() for p, K in sorted(self.I.items())},
                "Q": {str(p): K.render() for p, K in sorted(self.Q.items())},
                "notes": self.notes}


def _value(table: Optional[dict], key: str):
    return (table or CONVENTIONS)[key]["value"]


def complex_structure_tensor(A: LieAlgebroid, I) -> VectorValuedForm:
    """I1 = I^i_j dx^j (x) ∂x^i + (tI)^a_b dxi^b (x) ∂xi^a with (tI)^a_b = I^b_a."""
    n = len(A.base)
    if A.rank != n:
        raise ShapeMismatchError("I1 needs the fibre of A to be T*X")
    if not isinstance(I, VectorValuedForm):
        I = tensor_from_matrix(A.base, I.tolist() if isinstance(I, sympy.MatrixBase) else I)
    chart = ce_chart(A)
    fchart = form_chart(chart)
    names, xi = A.base.names, A.fiber_names()
    entries = [[derive(I.component(a), D_PREFIX + b).embed(A.base).embed(fchart) for b in names] for a in names]
    comps = {}
    for i in range(n):
        comps[names[i]] = sum((entries[i][j] * fchart.gen(D_PREFIX + names[j]) for j in range(n)), fchart.zero())
        comps[xi[i]] = sum((entries[j][i] * fchart.gen(D_PREFIX + xi[j]) for j in range(n)), fchart.zero())
    return VectorValuedForm(chart, comps)


def homotopy_from_two_form(A: LieAlgebroid, Q, shift_sign: Optional[int] = None) -> VectorValuedForm:
    """Q1 = shift_sign * sum Q(∂_j, ∂_a) dx^j (x) ∂xi^a, i.e. Q_flat : T_X -> A stored with the shift sign."""
    n = len(A.base)
    if A.rank != n:
        raise ShapeMismatchError("Q1 needs the fibre of A to be T*X")
    if not isinstance(Q, Form):
        Q = form_from_matrix(A.base, Q.tolist() if isinstance(Q, sympy.MatrixBase) else Q)
    sign = Fraction(CONVENTIONS["shift_sign"]["value"] if shift_sign is None else shift_sign)
    chart = ce_chart(A)
    fchart = form_chart(chart)
    names, xi = A.base.names, A.fiber_names()
    Qm = form_matrix(Q)
    comps = {}
    for a in range(n):
        acc = fchart.zero()
        for j in range(n):
            if Qm[j][a]:
                acc = acc + Qm[j][a].embed(fchart).scale(sign) * fchart.gen(D_PREFIX + names[j])
        comps[xi[a]] = acc
    return VectorValuedForm(chart, comps)


def _coefficient_matrix(K: VectorValuedForm, A: LieAlgebroid, rows, cols, point=None) -> sympy.Matrix:
    """M[r][c] = coefficient of d(cols[c]) in the rows[r] component, along the zero section."""
    M = sympy.zeros(len(rows), len(cols))
    for r, a in enumerate(rows):
        comp = K.component(a)
        for c, b in enumerate(cols):
            e = zero_section(derive(comp, D_PREFIX + b), A.base)
            if point:
                e = e.evaluate(point)
            if not e.is_constant():
                raise DegreeMismatchError("coefficient is not constant; pass a sample point")
            q = e.constant_term()
            M[r, c] = sympy.Rational(q.numerator, q.denominator)
    return M


def tensor_blocks(K: Optional[VectorValuedForm], A: LieAlgebroid, point=None) -> Tuple[sympy.Matrix, sympy.Matrix]:
    """Action of I1 on T^0 = T_X and on T^-1 = A at a point."""
    n, r = len(A.base), A.rank
    if K is None:
        return sympy.zeros(n, n), sympy.zeros(r, r)
    xi = A.fiber_names()
    return _coefficient_matrix(K, A, A.base.names, A.base.names, point), _coefficient_matrix(K, A, xi, xi, point)


def homotopy_matrix(K: Optional[VectorValuedForm], A: LieAlgebroid, point=None,
                    shift_sign: Optional[int] = None) -> sympy.Matrix:
    """The map T^0 -> T^-1 stored in Q1, with the shift sign removed."""
    if K is None:
        return sympy.zeros(A.rank, len(A.base))
    sign = CONVENTIONS["shift_sign"]["value"] if shift_sign is None else shift_sign
    return _coefficient_matrix(K, A, A.fiber_names(), A.base.names, point) * sign


# -----------------------
# The three equations
# -----------------------
def hhs_residuals(h: HHStructure, conventions: Optional[dict] = None) -> Dict[str, VectorValuedForm]:
    nr = _value(conventions, "nr_normalization")
    reading = _value(conventions, "delta_I_reading")
    if reading not in ("delta_plus_fn", "delta"):
        raise ConventionError(f"unknown delta_I_reading '{reading}'")
    chart = h.chart
    delta = ce_vector_field(h.algebroid)
    I, Q = h.total_I(), h.total_Q()
    eq1 = nr_bracket(I, Q, nr)
    eq2 = fn_bracket(delta, I) + fn_bracket(I, I).scale(HALF)
    delta_I = delta + I if reading == "delta_plus_fn" else delta
    rhs = identity_tensor(chart).scale(Fraction(_value(conventions, "eq3_rhs_scale")))
    eq3 = fn_bracket(delta_I, Q) + nr_bracket(I, I, nr).scale(HALF) - rhs
    return {"eq1": eq1, "eq2": eq2, "eq3": eq3}


def check_hhs(h: HHStructure, conventions: Optional[dict] = None) -> dict:
    """Per-bidegree residuals of eq1..eq3; keys are (form degree, total degree)."""
    axioms = check_axioms(h.algebroid)
    if not axioms["ok"]:
        raise AxiomError(f"{h.algebroid.name} is not a Lie algebroid: {axioms['message']}")
    residuals = hhs_residuals(h, conventions)
    report = {"residuals": {}}
    for key, R in residuals.items():
        report[key] = R.is_zero()
        report["residuals"][key] = {f"({p},{t})": part.render() for (p, t), part in R.split_bidegrees().items()}
    if not len(h.chart):
        report["eq3"] = False
        report["residuals"]["eq3"] = {"degenerate": "the tangent complex is zero; -1 cannot be reached"}
    report["ok"] = report["eq1"] and report["eq2"] and report["eq3"]
    report["message"] = "homotopy holomorphic" if report["ok"] else \
        "failed: " + ", ".join(k for k in ("eq1", "eq2", "eq3") if not report[k])
    report["notes"] = h.notes
    LOG.debug("check_hhs: %s", report["message"])
    return report


# -----------------------
# From generalized complex structures
# -----------------------
def _coefficient_of(v: VectorValuedForm, key) -> sympy.Rational:
    name, mono = key
    q = v.component(name).coefficient(mono)
    return sympy.Rational(q.numerator, q.denominator)


def solve_second_order(A: LieAlgebroid, I1: VectorValuedForm):
    """
    Constant-coefficient I2 = sum c_(a,ij) dx^i dx^j (x) ∂xi^a solving the form-degree-2 part of eq2,
    [delta, I2]_FN = -1/2 [I1, I1]_FN. Returns (I2 or None, notes).
    """
    chart = ce_chart(A)
    fchart = form_chart(chart)
    target = fn_bracket(I1, I1).scale(-HALF).split_bidegrees().get((2, 2))
    if target is None or target.is_zero():
        return None, {"I2": "zero"}
    delta = ce_vector_field(A)
    names, xi = A.base.names, A.fiber_names()
    basis = []
    for a in xi:
        for i in range(len(names)):
            for j in range(i + 1, len(names)):
                term = fchart.gen(D_PREFIX + names[i]) * fchart.gen(D_PREFIX + names[j])
                basis.append(VectorValuedForm(chart, {a: term}))
    images = [fn_bracket(delta, E) for E in basis]
    keys = sorted({(name, m) for v in images + [target] for name, e in v.components.items() for m in e.terms})
    M = sympy.zeros(len(keys), len(basis))
    for c, v in enumerate(images):
        for r, key in enumerate(keys):
            M[r, c] = _coefficient_of(v, key)
    rhs = sympy.Matrix([_coefficient_of(target, key) for key in keys])
    if not linalg.in_span(M, rhs):
        LOG.info("no constant I2 solves the form-degree-2 part of eq2")
        return None, {"I2": "unsolved", "unsolved": target.render()}
    coeffs = linalg.solve_in_basis(M, rhs)
    I2 = VectorValuedForm.zero(chart)
    for k, E in enumerate(basis):
        if coeffs[k] != 0:
            I2 = I2 + E.scale(Fraction(str(coeffs[k])))
    return (None if I2.is_zero() else I2), {"I2": "solved"}


def hhs_from_gc(J: GCStructure) -> HHStructure:
    """A = T*X with the Poisson block P, I1 from (I, tI), Q1 from Q, I2 from a linear solve."""
    report = gc_check(J)
    if not report["ok"]:
        raise IntegrabilityError(f"gc_check failed: {report['message']}")
    A = poisson_algebroid(J.P)
    I1 = complex_structure_tensor(A, J.I) if not J.I.is_zero() else None
    Q1 = homotopy_from_two_form(A, J.Q) if not J.Q.is_zero() else None
    notes = {"source": "generalized complex structure"}
    I2 = None
    if I1 is None:
        notes["I2"] = "not needed"
    else:
        I2, solved = solve_second_order(A, I1)
        notes.update(solved)
    if J.H is not None and not J.H.is_zero():
        notes["twist"] = "H does not enter I1 or Q1"
    I = {p: K for p, K in ((1, I1), (2, I2)) if K is not None}
    Q = {1: Q1} if Q1 is not None else {}
    return HHStructure(A, I, Q, notes)


# -----------------------
# Anti-holomorphic foliations
# -----------------------
@dataclass
class FoliationCandidate:
    """
    Linear model L^-1 -> L^0 over Q(i) with anchor (rho_-1, rho_0) into the complexified
    tangent complex and homotopy gamma : L^0 -> T^-1. structure[a][b][k] brackets the L^0 frame.
    """

    differential: sympy.Matrix
    anchor_lower: sympy.Matrix
    anchor_upper: sympy.Matrix
    homotopy: sympy.Matrix
    structure: list = field(default_factory=list)

    def __post_init__(self):
        self.anchor_lower = linalg.qmatrix(self.anchor_lower)
        self.anchor_upper = linalg.qmatrix(self.anchor_upper)
        lower, upper = self.anchor_lower.cols, self.anchor_upper.cols
        self.differential = linalg.qmatrix(self.differential, upper, lower)
        self.homotopy = linalg.qmatrix(self.homotopy, self.anchor_lower.rows, upper)
        if self.differential.shape != (upper, lower):
            raise ShapeMismatchError(f"L differential must be {upper}x{lower}")
        if self.homotopy.cols != upper:
            raise ShapeMismatchError("homotopy must be defined on L^0")
        if not self.structure:
            self.structure = [[[0] * upper for _ in range(upper)] for _ in range(upper)]
        self.structure = [[[linalg.to_sympy_number(v) for v in cell] for cell in row] for row in self.structure]
        if len(self.structure) != upper:
            raise ShapeMismatchError(f"structure constants must be {upper}x{upper}x{upper}")

    @property
    def dims(self) -> Tuple[int, int]:
        return self.anchor_lower.cols, self.anchor_upper.cols

    def conjugate(self) -> "FoliationCandidate":
        return FoliationCandidate(linalg.conjugate(self.differential), linalg.conjugate(self.anchor_lower),
                                  linalg.conjugate(self.anchor_upper), linalg.conjugate(self.homotopy),
                                  [[[sympy.conjugate(v) for v in cell] for cell in row] for row in self.structure])

    def perturb(self, delta) -> "FoliationCandidate":
        """Same candidate with gamma + delta."""
        return FoliationCandidate(self.differential, self.anchor_lower, self.anchor_upper,
                                  self.homotopy + linalg.qmatrix(delta), self.structure)


def foliation_axioms(F: FoliationCandidate) -> dict:
    """Antisymmetry, Jacobi and rho_0 [e_a, e_b] = 0 for constant structure constants."""
    c = F.structure
    m = len(c)
    rng = range(m)
    anti = [f"c^{k}_{a}{b}" for a in rng for b in rng for k in rng if sympy.simplify(c[a][b][k] + c[b][a][k]) != 0]
    jacobi = []
    for a in rng:
        for b in rng:
            for d in rng:
                for k in rng:
                    s = sum(c[a][b][i] * c[i][d][k] + c[b][d][i] * c[i][a][k] + c[d][a][i] * c[i][b][k] for i in rng)
                    if sympy.simplify(s) != 0:
                        jacobi.append(f"({a},{b},{d})->{k}")
    anchor = []
    for a in rng:
        for b in rng:
            image = sum((F.anchor_upper[:, k] * c[a][b][k] for k in rng), sympy.zeros(F.anchor_upper.rows, 1))
            if not linalg.is_zero(image):
                anchor.append(f"[e{a + 1},e{b + 1}]")
    return {"ok": not (anti or jacobi or anchor), "antisymmetry": anti, "jacobi": jacobi, "anchor": anchor}


def _realified_complex(dims: Mapping[int, int], diffs: Mapping[int, sympy.Matrix]) -> LinearComplex:
    return LinearComplex({k: 2 * v for k, v in dims.items()}, {k: linalg.realify(m) for k, m in diffs.items()})


def check_foliation(F: FoliationCandidate, h: HHStructure, seed: Optional[int] = None,
                    samples: Optional[int] = None) -> dict:
    """
    (i) rho is a chain map and rho + conj(rho) : L + conj(L) -> T^C is a quasi-isomorphism;
    (ii) I1 rho + i rho = [d, gamma] in both degrees, at every sample point.
    """
    A = h.algebroid
    n, r = len(A.base), A.rank
    lower, upper = F.dims
    if F.anchor_upper.rows != n or F.anchor_lower.rows != r or F.homotopy.rows != r:
        raise ShapeMismatchError(f"candidate does not map into the tangent complex of {A.name} ({r} -> {n})")
    axioms = foliation_axioms(F)
    bar = F.conjugate()
    i = sympy.I
    points = [{}] if not len(A.base) else linalg.sample_points(
        A.base.names, DEFAULT_SEED if seed is None else seed, DEFAULT_SAMPLES if samples is None else samples)
    source = _realified_complex({-1: 2 * lower, 0: 2 * upper},
                                {-1: linalg.block_diag(F.differential, bar.differential)})
    failures = {}
    chain_ok = quasi_ok = square_ok = True
    for point in points:
        T = tangent_complex(A).at(point)
        dT = T.d(-1)
        chain = dT * F.anchor_lower - F.anchor_upper * F.differential
        target = _realified_complex({-1: r, 0: n}, {-1: dT})
        rho = ChainMap(source, target, {
            -1: linalg.realify(linalg.stack([[F.anchor_lower, bar.anchor_lower]])),
            0: linalg.realify(linalg.stack([[F.anchor_upper, bar.anchor_upper]])),
        })
        quasi = rho.is_quasi_isomorphism()
        I0, I_lower = tensor_blocks(h.I.get(1), A, point)
        R0 = I0 * F.anchor_upper + F.anchor_upper * i - dT * F.homotopy
        R_lower = I_lower * F.anchor_lower + F.anchor_lower * i - F.homotopy * F.differential
        square = linalg.is_zero(R0) and linalg.is_zero(R_lower)
        chain_ok &= linalg.is_zero(chain)
        quasi_ok &= quasi
        square_ok &= square
        if not (linalg.is_zero(chain) and quasi and square):
            failures["(" + ", ".join(f"{k}={v}" for k, v in point.items()) + ")"] = {
                "chain": linalg.render(chain.applyfunc(sympy.simplify)),
                "quasi_isomorphism": quasi,
                "R0": linalg.render(R0.applyfunc(sympy.simplify)),
                "R-1": linalg.render(R_lower.applyfunc(sympy.simplify)),
            }
    report = {
        "algebroid": axioms["ok"],
        "chain_map": chain_ok,
        "quasi_isomorphism": quasi_ok,
        "square": square_ok,
        "samples": len(points),
        "residuals": {"algebroid": {k: v for k, v in axioms.items() if k != "ok" and v}, "points": failures},
    }
    report["ok"] = all(report[k] for k in ("algebroid", "chain_map", "quasi_isomorphism", "square"))
    report["message"] = "anti-holomorphic foliation" if report["ok"] else "foliation check failed"
    return report


def foliation_from_hhs(h: HHStructure, point=None) -> FoliationCandidate:
    """
    Canonical candidates:
        I = 0, Q = Q1      L = T^C, rho = id, gamma = -i Q_flat
        Q = 0, I = I1      L = (-i)-eigenspaces of I1 on T^-1 and T^0, gamma = 0
    """
    A = h.algebroid
    n, r = len(A.base), A.rank
    dT = tangent_complex(A).at(point).d(-1)
    if not h.I and set(h.Q) == {1}:
        gamma = homotopy_matrix(h.Q[1], A, point) * (-sympy.I)
        return FoliationCandidate(dT, sympy.eye(r), sympy.eye(n), gamma)
    if not h.Q and set(h.I) == {1}:
        I0, I_lower = tensor_blocks(h.I[1], A, point)
        upper = linalg.nullspace(I0 + sympy.I * sympy.eye(n))
        lower = linalg.nullspace(I_lower + sympy.I * sympy.eye(r))
        try:
            differential = linalg.solve_in_basis(upper, dT * lower)
        except ShapeMismatchError as e:
            raise HypothesisError("anchor does not preserve the eigenspaces of I1") from e
        return FoliationCandidate(differential, lower, upper, sympy.zeros(r, upper.cols))
    raise HypothesisError("no canonical foliation: expected I = 0 with Q = Q1, or Q = 0 with I = I1")
