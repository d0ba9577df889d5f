"""
geometry/cartan.py

Cartan calculus on charts: differential forms, multivector fields and
vector-valued forms, together with

    exterior_d, interior, lie_derivative,
    schouten (Schouten-Nijenhuis), fn_bracket (Frolicher-Nijenhuis),
    nr_bracket (Nijenhuis-Richardson).

Forms live on the form chart of a base chart: every base generator z of
degree |z| gets a form symbol "d<z>" of degree |z|+1. The same code runs on
ordinary charts (all coordinates even, degree 0) and on graded charts such
as the model A[1] of a quotient stack; every sign is the Koszul sign of the
total degree. The sign conventions are listed in config.CONVENTIONS.

Multivector fields live on the chart extended by odd symbols "∂<x>" and
are only defined over ordinary charts.
"""

import logging
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import sympy

from config import DIMENSION_CAP, convention
from geometry import linalg
from geometry.errors import BidegreeError, ChartMismatchError, DegreeMismatchError, DimensionCapError, ShapeMismatchError
from geometry.symcore import Chart, GradedElement, derive, multiply, rational, substitute

LOG = logging.getLogger("cartan")
LOG.setLevel(logging.INFO)
if not LOG.handlers:
    handler = logging.StreamHandler()
    handler.setFormatter(logging.Formatter("%(asctime)s [%(levelname)s] %(message)s"))
    LOG.addHandler(handler)

D_PREFIX = "d"
PARTIAL_PREFIX = "∂"


def coordinate_chart(names: Iterable[str]) -> Chart:
    names = list(names)
    if len(names) > DIMENSION_CAP:
        raise DimensionCapError(f"{len(names)} coordinates exceed the cap of {DIMENSION_CAP}")
    return Chart.even(names)


@lru_cache(maxsize=None)
def form_chart(base: Chart) -> Chart:
    extra = [(D_PREFIX + n, d + 1) for n, d in base.generators]
    for n, _ in extra:
        if n in base:
            raise ValueError(f"form symbol '{n}' collides with a chart generator")
    return base.extend(extra)


@lru_cache(maxsize=None)
def multivector_chart(base: Chart) -> Chart:
    if any(base.degrees):
        raise DegreeMismatchError("multivector fields are only defined over ordinary charts")
    return base.extend((PARTIAL_PREFIX + n, 1) for n in base.names)


def _same_base(a: Chart, b: Chart):
    if a != b:
        raise ChartMismatchError(f"{a.names} vs {b.names}")


def _form_degree(base: Chart, elem: GradedElement) -> frozenset:
    k = len(base)
    return frozenset(sum(m[k:]) for m in elem.terms)


# ---------- Form ----------
class Form:
    """Differential form on a (possibly graded) chart."""

    __slots__ = ("base", "element")

    def __init__(self, base: Chart, element: GradedElement):
        chart = form_chart(base)
        if element.chart != chart:
            element = element.embed(chart)
        self.base = base
        self.element = element

    @classmethod
    def function(cls, base: Chart, f: GradedElement) -> "Form":
        return cls(base, f.embed(form_chart(base)))

    @classmethod
    def d_of(cls, base: Chart, name: str) -> "Form":
        return cls(base, form_chart(base).gen(D_PREFIX + name))

    @classmethod
    def zero(cls, base: Chart) -> "Form":
        return cls(base, form_chart(base).zero())

    @property
    def chart(self) -> Chart:
        return self.element.chart

    @property
    def degree(self) -> Optional[int]:
        degs = _form_degree(self.base, self.element)
        if not degs:
            return None
        if len(degs) > 1:
            raise DegreeMismatchError(f"mixed form degrees {sorted(degs)}")
        return next(iter(degs))

    def is_zero(self) -> bool:
        return self.element.is_zero()

    def _wrap(self, other) -> GradedElement:
        if isinstance(other, Form):
            _same_base(self.base, other.base)
            return other.element
        return other

    def __add__(self, other):
        return Form(self.base, self.element + self._wrap(other))

    def __sub__(self, other):
        return Form(self.base, self.element - self._wrap(other))

    def __neg__(self):
        return Form(self.base, -self.element)

    def __mul__(self, other):
        """Wedge product, or multiplication by a scalar."""
        if isinstance(other, Form):
            return Form(self.base, multiply(self.element, self._wrap(other)))
        return Form(self.base, self.element * other)

    __rmul__ = lambda self, other: Form(self.base, self.element * other)

    def __eq__(self, other):
        if isinstance(other, Form):
            return self.base == other.base and self.element == other.element
        return self.element == other

    def __hash__(self):
        return hash((self.base, self.element))

    def evaluate(self, point) -> "Form":
        return Form(self.base, self.element.evaluate(point))

    def __str__(self):
        return str(self.element)

    __repr__ = lambda self: f"Form({self.element})"


# ---------- MultiVector ----------
class MultiVector:
    """Multivector field: polynomial in odd symbols ∂<x> over an ordinary chart."""

    __slots__ = ("base", "element")

    def __init__(self, base: Chart, element: GradedElement):
        chart = multivector_chart(base)
        if element.chart != chart:
            element = element.embed(chart)
        self.base = base
        self.element = element

    @classmethod
    def partial(cls, base: Chart, name: str) -> "MultiVector":
        return cls(base, multivector_chart(base).gen(PARTIAL_PREFIX + name))

    @classmethod
    def function(cls, base: Chart, f: GradedElement) -> "MultiVector":
        return cls(base, f.embed(multivector_chart(base)))

    @property
    def degree(self) -> Optional[int]:
        return self.element.degree()

    def is_zero(self) -> bool:
        return self.element.is_zero()

    def __add__(self, other):
        _same_base(self.base, other.base)
        return MultiVector(self.base, self.element + other.element)

    def __sub__(self, other):
        _same_base(self.base, other.base)
        return MultiVector(self.base, self.element - other.element)

    def __neg__(self):
        return MultiVector(self.base, -self.element)

    def __mul__(self, other):
        """Wedge product, or multiplication by a scalar."""
        if isinstance(other, MultiVector):
            _same_base(self.base, other.base)
            return MultiVector(self.base, multiply(self.element, other.element))
        return MultiVector(self.base, self.element * other)

    __rmul__ = lambda self, other: MultiVector(self.base, self.element * other)

    def __eq__(self, other):
        if isinstance(other, MultiVector):
            return self.base == other.base and self.element == other.element
        return self.element == other

    def __hash__(self):
        return hash((self.base, self.element))

    def evaluate(self, point) -> "MultiVector":
        return MultiVector(self.base, self.element.evaluate(point))

    def __str__(self):
        return str(self.element)

    __repr__ = lambda self: f"MultiVector({self.element})"


# ---------- VectorValuedForm ----------
class VectorValuedForm:
    """
    Sum of form components K^A tensored with the coordinate vector field of A.
    Components live on form_chart(base); |K| = deg K^A - |A| for every A.
    """

    __slots__ = ("base", "components")

    def __init__(self, base: Chart, components: Optional[Mapping[str, GradedElement]] = None):
        chart = form_chart(base)
        comps = {}
        for name, elem in (components or {}).items():
            base.index(name)
            if isinstance(elem, Form):
                elem = elem.element
            if elem.chart != chart:
                elem = elem.embed(chart)
            if elem:
                comps[name] = elem
        self.base = base
        self.components = comps

    @classmethod
    def zero(cls, base: Chart) -> "VectorValuedForm":
        return cls(base, {})

    def component(self, name: str) -> GradedElement:
        self.base.index(name)
        return self.components.get(name, form_chart(self.base).zero())

    def is_zero(self) -> bool:
        return not self.components

    def bidegrees(self) -> frozenset:
        """Set of (form degree, total degree) over all terms."""
        out = set()
        k = len(self.base)
        for name, elem in self.components.items():
            shift = self.base.degree_of(name)
            for m in elem.terms:
                out.add((sum(m[k:]), elem.term_degree(m) - shift))
        return frozenset(out)

    @property
    def total_degree(self) -> Optional[int]:
        degs = {t for _, t in self.bidegrees()}
        if not degs:
            return None
        if len(degs) > 1:
            raise BidegreeError(f"vector-valued form has mixed total degrees {sorted(degs)}")
        return next(iter(degs))

    @property
    def form_degree(self) -> Optional[int]:
        degs = {p for p, _ in self.bidegrees()}
        if not degs:
            return None
        if len(degs) > 1:
            raise BidegreeError(f"vector-valued form has mixed form degrees {sorted(degs)}")
        return next(iter(degs))

    def split_bidegrees(self) -> Dict[Tuple[int, int], "VectorValuedForm"]:
        k = len(self.base)
        parts: Dict[Tuple[int, int], Dict[str, dict]] = {}
        for name, elem in self.components.items():
            shift = self.base.degree_of(name)
            for m, c in elem.terms.items():
                key = (sum(m[k:]), elem.term_degree(m) - shift)
                parts.setdefault(key, {}).setdefault(name, {})[m] = c
        chart = form_chart(self.base)
        return {key: VectorValuedForm(self.base, {n: GradedElement(chart, t) for n, t in comps.items()})
                for key, comps in sorted(parts.items())}

    def _check(self, other: "VectorValuedForm"):
        _same_base(self.base, other.base)

    def __add__(self, other):
        self._check(other)
        names = set(self.components) | set(other.components)
        return VectorValuedForm(self.base, {n: self.component(n) + other.component(n) for n in names})

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return VectorValuedForm(self.base, {n: -e for n, e in self.components.items()})

    def scale(self, factor) -> "VectorValuedForm":
        return VectorValuedForm(self.base, {n: e.scale(factor) for n, e in self.components.items()})

    def __mul__(self, factor):
        return self.scale(factor)

    __rmul__ = __mul__

    def __eq__(self, other):
        if isinstance(other, VectorValuedForm):
            return self.base == other.base and self.components == other.components
        if other == 0:
            return self.is_zero()
        return NotImplemented

    def __hash__(self):
        return hash((self.base, frozenset(self.components.items())))

    def map_components(self, fn) -> "VectorValuedForm":
        return VectorValuedForm(self.base, {n: fn(e) for n, e in self.components.items()})

    def evaluate(self, point) -> "VectorValuedForm":
        return self.map_components(lambda e: e.evaluate(point))

    def render(self) -> Dict[str, str]:
        return {n: str(self.components[n]) for n in self.base.names if n in self.components}

    def __str__(self):
        if not self.components:
            return "0"
        return " + ".join(f"({e})⊗∂{n}" for n, e in self.render().items())

    __repr__ = lambda self: f"VectorValuedForm({self})"


# ---------- constructors ----------
def identity_tensor(base: Chart) -> VectorValuedForm:
    chart = form_chart(base)
    return VectorValuedForm(base, {n: chart.gen(D_PREFIX + n) for n in base.names})


def tensor_from_matrix(base: Chart, matrix) -> VectorValuedForm:
    """(1,1)-tensor K with K(∂_j) = sum_i M[i][j] ∂_i; entries are constants or base functions."""
    chart = form_chart(base)
    names = base.names
    comps = {}
    for i, row in enumerate(matrix):
        acc = chart.zero()
        for j, v in enumerate(row):
            coeff = v.embed(chart) if isinstance(v, GradedElement) else chart.constant(_to_fraction(v))
            acc = acc + multiply(coeff, chart.gen(D_PREFIX + names[j]))
        comps[names[i]] = acc
    return VectorValuedForm(base, comps)


def vector_field(base: Chart, coefficients: Mapping[str, object]) -> VectorValuedForm:
    """Vector field as a vector-valued 0-form."""
    chart = form_chart(base)
    comps = {}
    for n, v in coefficients.items():
        comps[n] = v.embed(chart) if isinstance(v, GradedElement) else chart.constant(_to_fraction(v))
    return VectorValuedForm(base, comps)


def form_from_matrix(base: Chart, matrix) -> Form:
    """2-form with w(∂_i, ∂_j) = M[i][j] for an antisymmetric M."""
    chart = form_chart(base)
    names = base.names
    out = chart.zero()
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            c = _to_fraction(matrix[i][j])
            if c:
                out = out + multiply(chart.gen(D_PREFIX + names[i]), chart.gen(D_PREFIX + names[j])).scale(c)
    return Form(base, out)


def bivector_from_matrix(base: Chart, matrix) -> MultiVector:
    """Bivector with P(dx^i, dx^j) = M[i][j] for an antisymmetric M."""
    chart = multivector_chart(base)
    names = base.names
    out = chart.zero()
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            v = matrix[i][j]
            coeff = v.embed(chart) if isinstance(v, GradedElement) else chart.constant(_to_fraction(v))
            out = out + multiply(coeff, multiply(chart.gen(PARTIAL_PREFIX + names[i]), chart.gen(PARTIAL_PREFIX + names[j])))
    return MultiVector(base, out)


def _to_fraction(v) -> Fraction:
    if isinstance(v, sympy.Basic):
        return rational(sympy.nsimplify(v))
    return rational(v)


def form_matrix(w: Form) -> List[List[GradedElement]]:
    """M[i][j] = w(∂_i, ∂_j) = i_∂j i_∂i w, as base functions."""
    names = w.base.names
    out = []
    for a in names:
        first = derive(w.element, D_PREFIX + a, "left")
        out.append([derive(first, D_PREFIX + b, "left").embed(w.base) for b in names])
    return out


def bivector_matrix(P: MultiVector) -> List[List[GradedElement]]:
    """M[i][j] = P(dx^i, dx^j) = i_dx^j i_dx^i P."""
    names = P.base.names
    out = []
    for a in names:
        first = derive(P.element, PARTIAL_PREFIX + a, "left")
        out.append([derive(first, PARTIAL_PREFIX + b, "left").embed(P.base) for b in names])
    return out


def constant_matrix(entries: Sequence[Sequence[GradedElement]]) -> sympy.Matrix:
    """sympy matrix of constant entries; raises if an entry depends on coordinates."""
    rows = []
    for row in entries:
        r = []
        for e in row:
            if not e.is_constant():
                raise DegreeMismatchError(f"entry {e} is not constant")
            c = e.constant_term()
            r.append(sympy.Rational(c.numerator, c.denominator))
        rows.append(r)
    if not rows:
        return sympy.zeros(0, 0)
    return sympy.Matrix(rows)


# ---------- conversions ----------
def as_vector_field(v: Union[MultiVector, VectorValuedForm]) -> VectorValuedForm:
    if isinstance(v, VectorValuedForm):
        return v
    chart = form_chart(v.base)
    comps = {}
    for n in v.base.names:
        c = derive(v.element, PARTIAL_PREFIX + n, "left")
        if c:
            comps[n] = c.embed(chart)
    out = VectorValuedForm(v.base, comps)
    if v.element and v.degree != 1:
        raise DegreeMismatchError("expected a multivector of degree 1")
    return out


def as_multivector(v: VectorValuedForm) -> MultiVector:
    if v.form_degree not in (None, 0):
        raise DegreeMismatchError("only vector-valued 0-forms are vector fields")
    chart = multivector_chart(v.base)
    out = chart.zero()
    for n, e in v.components.items():
        out = out + multiply(e.embed(chart), chart.gen(PARTIAL_PREFIX + n))
    return MultiVector(v.base, out)


def _element(t) -> GradedElement:
    return t.element if isinstance(t, Form) else t


# ---------- Cartan calculus ----------
def exterior_d_element(base: Chart, elem: GradedElement) -> GradedElement:
    chart = form_chart(base)
    out = chart.zero()
    for n in base.names:
        part = derive(elem, n, "left")
        if part:
            out = out + multiply(chart.gen(D_PREFIX + n), part)
    return out


def exterior_d(f: Form) -> Form:
    return Form(f.base, exterior_d_element(f.base, f.element))


def insert(K: VectorValuedForm, elem: GradedElement) -> GradedElement:
    """i_K = sum_A K^A dL/d(dz^A), a derivation of degree |K|-1."""
    out = form_chart(K.base).zero()
    for n, comp in K.components.items():
        part = derive(elem, D_PREFIX + n, "left")
        if part:
            out = out + multiply(comp, part)
    return out


def interior(v, t):
    """Insertion of a vector-valued form (or vector field) into a form."""
    K = as_vector_field(v)
    if isinstance(t, Form):
        _same_base(K.base, t.base)
        return Form(t.base, insert(K, t.element))
    if isinstance(t, VectorValuedForm):
        return insertion_bracket(K, t)
    return insert(K, t)


def lie_element(K: VectorValuedForm, elem: GradedElement) -> GradedElement:
    """L_K = i_K d - (-1)^(|K|-1) d i_K."""
    k = K.total_degree
    if k is None:
        return form_chart(K.base).zero()
    first = insert(K, exterior_d_element(K.base, elem))
    second = exterior_d_element(K.base, insert(K, elem))
    return first - second if (k - 1) % 2 == 0 else first + second


def fn_bracket(K: VectorValuedForm, L: VectorValuedForm) -> VectorValuedForm:
    """[K,L]^A = L_K(L^A) - (-1)^(|K||L|) L_L(K^A)."""
    _same_base(K.base, L.base)
    k, l = K.total_degree, L.total_degree
    if k is None or l is None:
        return VectorValuedForm.zero(K.base)
    sign = -1 if (k * l) % 2 == 0 else 1
    comps = {}
    for n in K.base.names:
        val = lie_element(K, L.component(n)) + lie_element(L, K.component(n)).scale(sign)
        if val:
            comps[n] = val
    return VectorValuedForm(K.base, comps)


def insertion_bracket(K: VectorValuedForm, L: VectorValuedForm) -> VectorValuedForm:
    """(i_K L)^A = i_K(L^A)."""
    _same_base(K.base, L.base)
    return L.map_components(lambda e: insert(K, e))


def nr_bracket(K: VectorValuedForm, L: VectorValuedForm, normalization=None) -> VectorValuedForm:
    """[K,L]_NR = c (i_K L - (-1)^(|K||L|) i_L K) with c the configured normalization."""
    _same_base(K.base, L.base)
    c = convention("nr_normalization") if normalization is None else normalization
    k, l = K.total_degree, L.total_degree
    if k is None or l is None:
        return VectorValuedForm.zero(K.base)
    first = insertion_bracket(K, L)
    second = insertion_bracket(L, K)
    out = first - second if (k * l) % 2 == 0 else first + second
    return out.scale(_to_fraction(c))


def nijenhuis_torsion(J: VectorValuedForm) -> VectorValuedForm:
    return fn_bracket(J, J).scale(Fraction(1, 2))


def lie_derivative(v, t):
    """L_v on forms, multivector fields and vector-valued forms."""
    if isinstance(t, MultiVector):
        if isinstance(v, VectorValuedForm):
            v = as_multivector(v)
        if v.degree not in (None, 1):
            raise DegreeMismatchError("lie_derivative needs a vector field")
        return schouten(v, t)
    K = as_vector_field(v)
    if K.form_degree not in (None, 0):
        raise DegreeMismatchError("lie_derivative needs a vector field")
    if isinstance(t, Form):
        _same_base(K.base, t.base)
        return Form(t.base, lie_element(K, t.element))
    if isinstance(t, VectorValuedForm):
        return fn_bracket(K, t)
    return lie_element(K, t)


# ---------- vector fields and tensors ----------
def apply_vector(v: VectorValuedForm, f: GradedElement) -> GradedElement:
    """v(f) for a function f on the form chart."""
    out = form_chart(v.base).zero()
    for n, c in v.components.items():
        out = out + multiply(c, derive(f, n, "left"))
    return out


def vector_field_bracket(u: VectorValuedForm, w: VectorValuedForm) -> VectorValuedForm:
    """Lie bracket of even vector fields on an ordinary chart."""
    _same_base(u.base, w.base)
    comps = {}
    for n in u.base.names:
        val = apply_vector(u, w.component(n)) - apply_vector(w, u.component(n))
        if val:
            comps[n] = val
    return VectorValuedForm(u.base, comps)


def apply_tensor(J: VectorValuedForm, u: VectorValuedForm) -> VectorValuedForm:
    """J(u) for a vector-valued 1-form J and a vector field u."""
    return J.map_components(lambda e: insert(u, e))


def evaluate_on(K: VectorValuedForm, vectors: Sequence[VectorValuedForm]) -> VectorValuedForm:
    """K(u_1, ..., u_p) = i_up ... i_u1 K."""
    out = K
    for u in vectors:
        out = out.map_components(lambda e, u=u: insert(u, e))
    return out


def coordinate_field(base: Chart, name: str) -> VectorValuedForm:
    return vector_field(base, {name: 1})


def nijenhuis_classical(J: VectorValuedForm, u: VectorValuedForm, v: VectorValuedForm) -> VectorValuedForm:
    """N_J(u,v) = [Ju,Jv] - J[Ju,v] - J[u,Jv] + J^2[u,v]."""
    Ju, Jv = apply_tensor(J, u), apply_tensor(J, v)
    return (vector_field_bracket(Ju, Jv)
            - apply_tensor(J, vector_field_bracket(Ju, v))
            - apply_tensor(J, vector_field_bracket(u, Jv))
            + apply_tensor(J, apply_tensor(J, vector_field_bracket(u, v))))


# ---------- Schouten bracket and Poisson helpers ----------
def schouten(P: MultiVector, Q: MultiVector) -> MultiVector:
    """[P,Q] = sum_i (P dR/d∂_i)(dL/dx^i Q) - (P dR/dx^i)(dL/d∂_i Q)."""
    _same_base(P.base, Q.base)
    chart = multivector_chart(P.base)
    out = chart.zero()
    for n in P.base.names:
        t = PARTIAL_PREFIX + n
        a = derive(P.element, t, "right")
        if a:
            out = out + multiply(a, derive(Q.element, n, "left"))
        b = derive(P.element, n, "right")
        if b:
            out = out - multiply(b, derive(Q.element, t, "left"))
    return MultiVector(P.base, out)


def contract(alpha: Form, P: MultiVector) -> MultiVector:
    """P#(alpha) = i_alpha P = sum_i alpha_i dL/d∂_i P for a 1-form alpha."""
    _same_base(alpha.base, P.base)
    chart = multivector_chart(P.base)
    out = chart.zero()
    for n in P.base.names:
        coeff = derive(alpha.element, D_PREFIX + n, "left")
        if coeff:
            out = out + multiply(coeff.embed(chart), derive(P.element, PARTIAL_PREFIX + n, "left"))
    return MultiVector(P.base, out)


def pair(P: MultiVector, alpha: Form, beta: Form) -> GradedElement:
    """P(alpha, beta) = i_beta i_alpha P as a base function."""
    return contract(beta, contract(alpha, P)).element.embed(P.base)


def function_form(base: Chart, f: GradedElement) -> Form:
    return Form.function(base, f)


def poisson_bracket(P: MultiVector, f: GradedElement, g: GradedElement) -> GradedElement:
    """{f,g} = P(df, dg)."""
    df = exterior_d(Form.function(P.base, f))
    dg = exterior_d(Form.function(P.base, g))
    return pair(P, df, dg)


def hamiltonian_vector_field(P: MultiVector, f: GradedElement) -> MultiVector:
    """P#(df), so that X_f(g) = {f,g}."""
    return contract(exterior_d(Form.function(P.base, f)), P)


def is_poisson(P: MultiVector) -> bool:
    return schouten(P, P).is_zero()


# ---------- affine subspaces ----------
class AffineSubspace:
    """S = offset + span(columns of basis) inside a coordinate chart."""

    __slots__ = ("base", "basis", "offset")

    def __init__(self, base: Chart, basis, offset=None):
        """basis: n x k sympy matrix of columns, or a list of k vectors of length n."""
        n = len(base)
        if isinstance(basis, sympy.MatrixBase):
            basis = sympy.Matrix(basis)
        else:
            vectors = [list(v) for v in basis]
            basis = linalg.qmatrix(vectors).T if vectors else sympy.zeros(n, 0)
        if basis.rows != n:
            raise ShapeMismatchError(f"basis vectors have length {basis.rows}, chart has {n} coordinates")
        if linalg.rank(basis) != basis.cols:
            raise ShapeMismatchError("basis vectors are not independent")
        offset = sympy.zeros(n, 1) if offset is None else sympy.Matrix([linalg.to_sympy_number(v) for v in offset])
        if offset.rows != n:
            raise ShapeMismatchError("offset length does not match chart")
        self.base = base
        self.basis = basis
        self.offset = offset

    @property
    def dimension(self) -> int:
        return self.basis.cols

    def parameter_chart(self, prefix: str = "t") -> Chart:
        return Chart.even([f"{prefix}{j + 1}" for j in range(self.dimension)])

    def restriction_rules(self, prefix: str = "t"):
        """(parameter chart, rules x_i -> offset_i + sum_j B_ij t_j)."""
        chart = self.parameter_chart(prefix)
        rules = {}
        for i, name in enumerate(self.base.names):
            expr = chart.constant(_to_fraction(self.offset[i]))
            for j in range(self.dimension):
                c = _to_fraction(self.basis[i, j])
                if c:
                    expr = expr + chart.gen(f"{prefix}{j + 1}").scale(c)
            rules[name] = expr
        return chart, rules

    def restrict(self, f: GradedElement, prefix: str = "t") -> GradedElement:
        """Pullback of a base function to the parameter chart."""
        chart, rules = self.restriction_rules(prefix)
        return substitute(f, rules, chart)
