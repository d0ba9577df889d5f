"""
geometry/stacky.py

Linear (single-fibre) models of formal quotient stacks [X/A]:

    LinearComplex       finite complex of Q-vector spaces, d^k : C^k -> C^(k+1)
    ChainMap            degreewise matrices, cone / quasi-isomorphism test
    ShiftedPairing      blocks M_k : C^k -> (C^(-k-n))*, i.e. B(u,v) = v^T M_k u
    TwoTermComplex      polynomial E^-1 -> E^0 over a chart, sampled at rational points
    ShiftedTwoForm      (w0, w1, ...) in the CE model of A[1]

Sign rules live in config.CONVENTIONS (dual_complex, shift, fiber). Pairings are
graded antisymmetric, M_(-k-n) = -(-1)^(k(-k-n)) M_k^T, and closed exactly when
their flat map C -> C^v[n] is a chain map.

Lagrangian data is an IsotropicStructure (f : T_Y -> T_X, gamma) with
    gamma(dy,y') + (-1)^|y| gamma(y,dy') + B(fy,fy') = 0
and gamma_flat(y,x) = gamma(y,.) + B(x, f .) on the relative tangent fib(f).
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import sympy

from config import DEFAULT_SAMPLES, DEFAULT_SEED
from geometry import linalg
from geometry.algebroid import LieAlgebroid, ce_chart, ce_vector_field, is_coisotropic
from geometry.cartan import (
    AffineSubspace, D_PREFIX, Form, MultiVector, bivector_matrix, constant_matrix, exterior_d, lie_derivative,
)
from geometry.errors import (
    DegreeMismatchError, HypothesisError, IsotropyError, NonCommutingDiagramError, NotLagrangianError,
    NotPoissonError, ShapeMismatchError,
)
from geometry.symcore import Chart, GradedElement, derive

LOG = logging.getLogger("stacky")
LOG.setLevel(logging.INFO)
if not LOG.handlers:
    handler = logging.StreamHandler()
    handler.setFormatter(logging.Formatter("%(asctime)s [%(levelname)s] %(message)s"))
    LOG.addHandler(handler)

HALF = sympy.Rational(1, 2)


def _sign(e: int) -> int:
    return -1 if e % 2 else 1


def _zero_matrix(m: sympy.Matrix) -> bool:
    return all(v == 0 or sympy.expand(v) == 0 for v in m)


def _assemble(row_sizes: Sequence[int], col_sizes: Sequence[int], entries: Mapping[Tuple[int, int], sympy.Matrix]):
    """Block matrix with the given block sizes; missing blocks are zero."""
    out = sympy.zeros(sum(row_sizes), sum(col_sizes))
    for (i, j), block in entries.items():
        if block.shape != (row_sizes[i], col_sizes[j]):
            raise ShapeMismatchError(f"block ({i},{j}) has shape {block.shape}, expected {(row_sizes[i], col_sizes[j])}")
        if row_sizes[i] and col_sizes[j]:
            r, c = sum(row_sizes[:i]), sum(col_sizes[:j])
            out[r:r + row_sizes[i], c:c + col_sizes[j]] = block
    return out


def _span(*complexes: "LinearComplex") -> range:
    bounds = [c.bounds() for c in complexes if c.dims]
    if not bounds:
        return range(0)
    return range(min(b[0] for b in bounds), max(b[1] for b in bounds) + 1)


# -----------------------
# Complexes and chain maps
# -----------------------
class LinearComplex:
    """Finite complex of rational vector spaces; missing degrees are zero."""

    __slots__ = ("dims", "diffs", "name")

    def __init__(self, dims: Mapping[int, int], diffs: Optional[Mapping[int, object]] = None, name: str = ""):
        self.dims = {int(k): int(v) for k, v in dims.items() if int(v) > 0}
        self.diffs = {}
        self.name = name
        for k, m in (diffs or {}).items():
            k = int(k)
            m = linalg.qmatrix(m)
            expected = (self.dim(k + 1), self.dim(k))
            if 0 in expected:
                if any(v != 0 for v in m):
                    raise ShapeMismatchError(f"{name or 'complex'}: d^{k} must vanish, C^{k} or C^{k + 1} is zero")
                continue
            if m.shape != expected:
                raise ShapeMismatchError(f"{name or 'complex'}: d^{k} has shape {m.shape}, expected {expected}")
            if not _zero_matrix(m):
                self.diffs[k] = m

    @classmethod
    def zero(cls) -> "LinearComplex":
        return cls({})

    def dim(self, k: int) -> int:
        return self.dims.get(k, 0)

    def d(self, k: int) -> sympy.Matrix:
        m = self.diffs.get(k)
        return m if m is not None else sympy.zeros(self.dim(k + 1), self.dim(k))

    def bounds(self) -> Tuple[int, int]:
        if not self.dims:
            return 0, -1
        return min(self.dims), max(self.dims)

    @property
    def degrees(self) -> range:
        lo, hi = self.bounds()
        return range(lo, hi + 1)

    @property
    def total_dim(self) -> int:
        return sum(self.dims.values())

    def square_residuals(self) -> Dict[int, list]:
        return {k: linalg.render(self.d(k + 1) * self.d(k)) for k in self.degrees
                if not _zero_matrix(self.d(k + 1) * self.d(k))}

    def is_complex(self) -> bool:
        return not self.square_residuals()

    def cohomology_dims(self) -> Dict[int, int]:
        return {k: self.dim(k) - linalg.rank(self.d(k)) - linalg.rank(self.d(k - 1)) for k in self.degrees}

    def is_acyclic(self) -> bool:
        return not any(self.cohomology_dims().values())

    def euler_characteristic(self) -> int:
        return sum(_sign(k) * v for k, v in self.dims.items())

    def dual(self) -> "LinearComplex":
        """(C^v)^k = (C^-k)*, d^k = -(-1)^k (d^(-k-1))^T."""
        dims = {-k: v for k, v in self.dims.items()}
        diffs = {-k - 1: self.d(k).T * (-_sign(-k - 1)) for k in self.diffs}
        return LinearComplex(dims, diffs, name=f"{self.name}^v" if self.name else "")

    def shift(self, n: int) -> "LinearComplex":
        """C[n]^k = C^(k+n), d multiplied by (-1)^n."""
        dims = {k - n: v for k, v in self.dims.items()}
        diffs = {k - n: m * _sign(n) for k, m in self.diffs.items()}
        return LinearComplex(dims, diffs, name=f"{self.name}[{n}]" if self.name else "")

    def direct_sum(self, *others: "LinearComplex") -> "LinearComplex":
        parts = (self,) + others
        span = _span(*parts)
        dims = {k: sum(c.dim(k) for c in parts) for k in span}
        diffs = {k: linalg.block_diag(*[c.d(k) for c in parts]) for k in span}
        return LinearComplex(dims, diffs)

    def __eq__(self, other):
        if not isinstance(other, LinearComplex):
            return NotImplemented
        return self.dims == other.dims and all(self.d(k) == other.d(k) for k in _span(self, other))

    def __hash__(self):
        return hash(tuple(sorted(self.dims.items())))

    def render(self) -> dict:
        return {"dims": {str(k): v for k, v in sorted(self.dims.items())},
                "differentials": {str(k): linalg.render(m) for k, m in sorted(self.diffs.items())}}

    def __repr__(self):
        return f"LinearComplex({self.name or ''}{dict(sorted(self.dims.items()))})"


class ChainMap:
    """Degree-0 map of complexes given by matrices f^k : S^k -> T^k."""

    __slots__ = ("source", "target", "maps", "name")

    def __init__(self, source: LinearComplex, target: LinearComplex, maps: Optional[Mapping[int, object]] = None,
                 name: str = ""):
        self.source = source
        self.target = target
        self.name = name
        self.maps = {}
        for k, m in (maps or {}).items():
            k = int(k)
            m = linalg.qmatrix(m)
            expected = (target.dim(k), source.dim(k))
            if 0 in expected:
                if any(v != 0 for v in m):
                    raise ShapeMismatchError(f"{name or 'map'}: component {k} must vanish")
                continue
            if m.shape != expected:
                raise ShapeMismatchError(f"{name or 'map'}: component {k} has shape {m.shape}, expected {expected}")
            self.maps[k] = m

    @classmethod
    def zero(cls, source: LinearComplex, target: LinearComplex) -> "ChainMap":
        return cls(source, target)

    @classmethod
    def identity(cls, complex_: LinearComplex) -> "ChainMap":
        return cls(complex_, complex_, {k: sympy.eye(v) for k, v in complex_.dims.items()})

    def at(self, k: int) -> sympy.Matrix:
        m = self.maps.get(k)
        return m if m is not None else sympy.zeros(self.target.dim(k), self.source.dim(k))

    def chain_residuals(self) -> Dict[int, list]:
        out = {}
        for k in _span(self.source, self.target):
            r = self.target.d(k) * self.at(k) - self.at(k + 1) * self.source.d(k)
            if not _zero_matrix(r):
                out[k] = linalg.render(r)
        return out

    def is_chain_map(self) -> bool:
        return not self.chain_residuals()

    def compose(self, first: "ChainMap") -> "ChainMap":
        """self o first."""
        if first.target != self.source:
            raise ShapeMismatchError("composition of maps with mismatched complexes")
        span = _span(first.source, self.target)
        return ChainMap(first.source, self.target, {k: self.at(k) * first.at(k) for k in span})

    def _combine(self, other: "ChainMap", sign: int) -> "ChainMap":
        if other.source != self.source or other.target != self.target:
            raise ShapeMismatchError("maps between different complexes")
        span = _span(self.source, self.target)
        return ChainMap(self.source, self.target, {k: self.at(k) + other.at(k) * sign for k in span})

    def __add__(self, other):
        return self._combine(other, 1)

    def __sub__(self, other):
        return self._combine(other, -1)

    def scale(self, c) -> "ChainMap":
        c = linalg.to_sympy_number(c)
        return ChainMap(self.source, self.target, {k: m * c for k, m in self.maps.items()})

    def cone(self) -> LinearComplex:
        """cone^k = S^(k+1) + T^k, d(s,t) = (-ds, f s + dt)."""
        S, T = self.source, self.target
        lo = min(S.bounds()[0] - 1, T.bounds()[0]) if S.dims or T.dims else 0
        hi = max(S.bounds()[1] - 1, T.bounds()[1]) if S.dims or T.dims else -1
        dims, diffs = {}, {}
        for k in range(lo, hi + 1):
            dims[k] = S.dim(k + 1) + T.dim(k)
            diffs[k] = _assemble((S.dim(k + 2), T.dim(k + 1)), (S.dim(k + 1), T.dim(k)),
                                 {(0, 0): -S.d(k + 1), (1, 0): self.at(k + 1), (1, 1): T.d(k)})
        return LinearComplex(dims, diffs, name=f"cone({self.name})" if self.name else "")

    def is_quasi_isomorphism(self) -> bool:
        return self.is_chain_map() and self.cone().is_acyclic()

    def injective_at(self, k: int) -> bool:
        return linalg.rank(self.at(k)) == self.source.dim(k)

    def surjective_at(self, k: int) -> bool:
        return linalg.rank(self.at(k)) == self.target.dim(k)

    def render(self) -> dict:
        return {str(k): linalg.render(m) for k, m in sorted(self.maps.items())}


def direct_sum_map(*maps: ChainMap) -> ChainMap:
    source = maps[0].source.direct_sum(*[m.source for m in maps[1:]])
    target = maps[0].target.direct_sum(*[m.target for m in maps[1:]])
    span = _span(source, target)
    return ChainMap(source, target, {k: linalg.block_diag(*[m.at(k) for m in maps]) for k in span})


def fiber(phi: ChainMap) -> LinearComplex:
    """fib^k = P^k + Q^(k-1), d(p,q) = (dp, phi(p) - dq)."""
    P, Q = phi.source, phi.target
    span = _span(P, Q.shift(-1))
    dims, diffs = {}, {}
    for k in range(span.start, span.stop):
        dims[k] = P.dim(k) + Q.dim(k - 1)
        diffs[k] = _assemble((P.dim(k + 1), Q.dim(k)), (P.dim(k), Q.dim(k - 1)),
                             {(0, 0): P.d(k), (1, 0): phi.at(k), (1, 1): -Q.d(k - 1)})
    return LinearComplex(dims, diffs, name=f"fib({phi.name})" if phi.name else "")


def difference_map(f1: ChainMap, f2: ChainMap) -> ChainMap:
    """(y1, y2) -> f1 y1 - f2 y2 from S1 + S2 to the common target."""
    if f1.target != f2.target:
        raise ShapeMismatchError("fibre product of maps with different targets")
    source = f1.source.direct_sum(f2.source)
    span = _span(source, f1.target)
    return ChainMap(source, f1.target,
                    {k: _assemble((f1.target.dim(k),), (f1.source.dim(k), f2.source.dim(k)),
                                   {(0, 0): f1.at(k), (0, 1): -f2.at(k)}) for k in span})


def fiber_product(f1: ChainMap, f2: ChainMap) -> LinearComplex:
    """Tangent complex of S1 x_T S2: degree k is S1^k + S2^k + T^(k-1)."""
    return fiber(difference_map(f1, f2))


def quasi_isomorphism_report(phi: ChainMap) -> dict:
    residuals = phi.chain_residuals()
    cone = phi.cone()
    report = {
        "chain_map": not residuals,
        "quasi_isomorphism": not residuals and cone.is_acyclic(),
        "source_cohomology": {str(k): v for k, v in phi.source.cohomology_dims().items()},
        "target_cohomology": {str(k): v for k, v in phi.target.cohomology_dims().items()},
        "residuals": {str(k): v for k, v in residuals.items()},
    }
    report["ok"] = report["quasi_isomorphism"]
    return report


# -----------------------
# Pairings
# -----------------------
class ShiftedPairing:
    """Degree-n pairing on a linear complex: B(u, v) = v^T M_k u for u in C^k, v in C^(-k-n)."""

    __slots__ = ("complex", "shift", "blocks")

    def __init__(self, complex_: LinearComplex, shift: int, blocks: Optional[Mapping[int, object]] = None):
        self.complex = complex_
        self.shift = int(shift)
        self.blocks = {}
        for k, m in (blocks or {}).items():
            k = int(k)
            m = linalg.qmatrix(m)
            expected = (complex_.dim(-k - self.shift), complex_.dim(k))
            if 0 in expected:
                continue
            if m.shape != expected:
                raise ShapeMismatchError(f"pairing block {k} has shape {m.shape}, expected {expected}")
            self.blocks[k] = m

    @classmethod
    def zero(cls, complex_: LinearComplex, shift: int) -> "ShiftedPairing":
        return cls(complex_, shift)

    @classmethod
    def from_lower(cls, complex_: LinearComplex, shift: int, lower: Mapping[int, object]) -> "ShiftedPairing":
        """Blocks with k <= -k-n given; the rest follow from graded antisymmetry."""
        blocks = {}
        for k, m in lower.items():
            k, m = int(k), linalg.qmatrix(m)
            j = -k - shift
            if k > j:
                raise ShapeMismatchError(f"block {k} is not in the lower half for shift {shift}")
            blocks[k] = m
            if j != k:
                blocks[j] = m.T * (-_sign(k * j))
        return cls(complex_, shift, blocks)

    def block(self, k: int) -> sympy.Matrix:
        m = self.blocks.get(k)
        return m if m is not None else sympy.zeros(self.complex.dim(-k - self.shift), self.complex.dim(k))

    def value(self, k: int, u: sympy.Matrix, v: sympy.Matrix):
        return (v.T * self.block(k) * u)[0, 0]

    def antisymmetry_residuals(self) -> Dict[int, list]:
        out = {}
        for k in self.complex.degrees:
            j = -k - self.shift
            r = self.block(j) + self.block(k).T * _sign(k * j)
            if not _zero_matrix(r):
                out[k] = linalg.render(r)
        return out

    def flat(self) -> ChainMap:
        """C -> C^v[n]."""
        target = self.complex.dual().shift(self.shift)
        return ChainMap(self.complex, target, dict(self.blocks), name="flat")

    def scale(self, c) -> "ShiftedPairing":
        c = linalg.to_sympy_number(c)
        return ShiftedPairing(self.complex, self.shift, {k: m * c for k, m in self.blocks.items()})

    def render(self) -> dict:
        return {"shift": self.shift, "blocks": {str(k): linalg.render(m) for k, m in sorted(self.blocks.items())}}


def pairing_report(pairing: ShiftedPairing) -> dict:
    """Graded antisymmetry, closure (flat is a chain map) and nondegeneracy (flat is a quasi-isomorphism)."""
    anti = pairing.antisymmetry_residuals()
    flat = quasi_isomorphism_report(pairing.flat())
    report = {
        "antisymmetric": not anti,
        "closed": flat["chain_map"],
        "nondegenerate": flat["quasi_isomorphism"],
        "cohomology": flat["source_cohomology"],
        "residuals": {"antisymmetry": {str(k): v for k, v in anti.items()}, "closure": flat["residuals"]},
    }
    report["ok"] = report["antisymmetric"] and report["closed"] and report["nondegenerate"]
    return report


# -----------------------
# Polynomial two-term complexes and the CE model
# -----------------------
class TwoTermComplex:
    """E^-1 -> E^0 over a chart; differential[i][a] is the i-th component of the image of the a-th frame element."""

    def __init__(self, base: Chart, differential: Sequence[Sequence[GradedElement]], lower_rank: int,
                 labels: Tuple[str, str] = ("E^-1", "E^0")):
        self.base = base
        self.lower_rank = lower_rank
        self.upper_rank = len(differential)
        if any(len(row) != lower_rank for row in differential):
            raise ShapeMismatchError(f"differential must be {self.upper_rank}x{lower_rank}")
        self.differential = [list(row) for row in differential]
        self.labels = labels

    def at(self, point: Optional[Mapping[str, object]] = None) -> LinearComplex:
        if not self.upper_rank or not self.lower_rank:
            M = sympy.zeros(self.upper_rank, self.lower_rank)
        else:
            M = constant_matrix([[e.evaluate(point) if point else e for e in row] for row in self.differential])
        return LinearComplex({-1: self.lower_rank, 0: self.upper_rank}, {-1: M})

    def generic(self) -> LinearComplex:
        """The complex over the fraction field Q(x): entries stay sympy polynomials."""
        M = sympy.zeros(self.upper_rank, self.lower_rank)
        for i, row in enumerate(self.differential):
            for a, e in enumerate(row):
                M[i, a] = e.to_sympy()
        return LinearComplex({-1: self.lower_rank, 0: self.upper_rank}, {-1: M})

    def degree_bound(self) -> int:
        """Highest polynomial degree among the differential entries."""
        degs = [max(sum(m) for m in e.terms) for row in self.differential for e in row if e]
        return max(degs, default=0)


def tangent_complex(A: LieAlgebroid) -> TwoTermComplex:
    """A -> T_X with the anchor as differential."""
    n = len(A.base)
    rows = [[A.anchor[a][i] for a in range(A.rank)] for i in range(n)]
    return TwoTermComplex(A.base, rows, A.rank, labels=("A", "T_X"))


class ShiftedTwoForm:
    """(w0, w1, ...) with w_p a (2+p)-form of internal degree n-p on the graded chart of A[1]."""

    def __init__(self, algebroid: LieAlgebroid, shift: int, components: Sequence[Form]):
        chart = ce_chart(algebroid)
        comps = []
        for p, w in enumerate(components):
            if w.base != chart:
                raise ShapeMismatchError("shifted form component is not on the CE chart")
            if not w.is_zero():
                if w.degree != 2 + p:
                    raise DegreeMismatchError(f"component {p} has form degree {w.degree}, expected {2 + p}")
                if w.element.degree() != shift + 2:
                    raise DegreeMismatchError(f"component {p} has total degree {w.element.degree()}, expected {shift + 2}")
            comps.append(w)
        while comps and comps[-1].is_zero():
            comps.pop()
        self.algebroid = algebroid
        self.shift = shift
        self.components = comps

    @property
    def chart(self) -> Chart:
        return ce_chart(self.algebroid)

    def component(self, p: int) -> Form:
        return self.components[p] if p < len(self.components) else Form.zero(self.chart)

    def scale(self, c) -> "ShiftedTwoForm":
        return ShiftedTwoForm(self.algebroid, self.shift, [w * c for w in self.components])

    def render(self) -> dict:
        return {"shift": self.shift, "components": [str(w) for w in self.components]}


def canonical_one_shifted(A: LieAlgebroid) -> ShiftedTwoForm:
    """w0 = sum_a dxi^a dx^a, pairing the frame dx^a with the coordinate x^a."""
    if A.poisson is None:
        raise NotPoissonError("algebroid is not the cotangent algebroid of a Poisson structure")
    chart = ce_chart(A)
    w0 = Form.zero(chart)
    for x, xi in zip(A.base.names, A.fiber_names()):
        w0 = w0 + Form.d_of(chart, xi) * Form.d_of(chart, x)
    return ShiftedTwoForm(A, 1, [w0])


def check_closed(omega: ShiftedTwoForm) -> dict:
    """Residuals d w_(p-1) + delta w_p with delta the Lie derivative along the CE vector field."""
    Q = ce_vector_field(omega.algebroid)
    residuals = {}
    for p in range(len(omega.components) + 1):
        r = lie_derivative(Q, omega.component(p))
        if p:
            r = r + exterior_d(omega.component(p - 1))
        if not r.is_zero():
            residuals[str(2 + p)] = str(r)
    return {"ok": not residuals, "residuals": residuals,
            "message": "closed" if not residuals else "closure residuals do not vanish"}


def zero_section(elem: GradedElement, base: Chart) -> GradedElement:
    """Drop every term involving a fibre coordinate or a form symbol, then view on the base chart."""
    k = len(base)
    kept = {m: c for m, c in elem.terms.items() if not any(m[k:])}
    return GradedElement(elem.chart, kept).embed(base)


def pairing_at(omega: ShiftedTwoForm, point: Optional[Mapping[str, object]] = None,
               complex_: Optional[LinearComplex] = None, symbolic: bool = False) -> ShiftedPairing:
    """
    Symbol of w0 along the zero section at a point, as a pairing on the tangent complex there.
    symbolic=True keeps polynomial coefficients as sympy expressions instead of evaluating.
    """
    A = omega.algebroid
    T = complex_ if complex_ is not None else tangent_complex(A).at(point)
    gens = {-1: list(A.fiber_names()), 0: list(A.base.names)}
    w0 = omega.component(0).element
    lower = {}
    for k in (-1, 0):
        j = -k - omega.shift
        if j not in gens or k > j:
            continue
        M = sympy.zeros(len(gens[j]), len(gens[k]))
        for c, u in enumerate(gens[k]):
            first = derive(w0, D_PREFIX + u)
            for r, v in enumerate(gens[j]):
                coeff = zero_section(derive(first, D_PREFIX + v), A.base)
                if point:
                    coeff = coeff.evaluate(point)
                if symbolic:
                    M[r, c] = coeff.to_sympy()
                    continue
                if not coeff.is_constant():
                    raise ShapeMismatchError("pairing is not constant; pass a sample point")
                q = coeff.constant_term()
                M[r, c] = sympy.Rational(q.numerator, q.denominator)
        lower[k] = M
    return ShiftedPairing.from_lower(T, omega.shift, lower)


def _points(base: Chart, seed: Optional[int], samples: Optional[int]) -> List[dict]:
    if not len(base):
        return [{}]
    return linalg.sample_points(base.names, DEFAULT_SEED if seed is None else seed,
                                DEFAULT_SAMPLES if samples is None else samples)


def check_nondegenerate(omega, T: Optional[TwoTermComplex] = None, seed: Optional[int] = None,
                        samples: Optional[int] = None, constant_rank: bool = False, symbolic: bool = False) -> dict:
    """
    w0 flat : T -> T^v[n] must be a quasi-isomorphism. Polynomial data is checked
    fibrewise at seeded rational points; constant_rank=True trusts a single point.
    symbolic=True skips sampling and decides over the fraction field Q(x), which is
    exact for the generic fibre and slow.
    """
    if isinstance(omega, ShiftedPairing):
        report = quasi_isomorphism_report(omega.flat())
        report["samples"] = 1
        report["message"] = "nondegenerate" if report["ok"] else "flat map is not a quasi-isomorphism"
        return report
    A = omega.algebroid
    T = T if T is not None else tangent_complex(A)
    if T.upper_rank != len(A.base) or T.lower_rank != A.rank:
        raise ShapeMismatchError("tangent complex does not match the algebroid")
    if symbolic:
        return _check_nondegenerate_generic(omega, T)
    points = _points(A.base, seed, samples)
    if constant_rank:
        points = points[:1]
    failures = {}
    for point in points:
        flat = pairing_at(omega, point, T.at(point)).flat()
        rep = quasi_isomorphism_report(flat)
        LOG.debug("nondegeneracy at %s: %s", point, rep["ok"])
        if not rep["ok"]:
            failures[_point_label(point)] = rep
    report = {
        "ok": not failures,
        "samples": len(points),
        "mode": "constant_rank" if constant_rank else "sampled",
        "degree_bound": T.degree_bound(),
        "failures": failures,
        "message": "nondegenerate at all sample points" if not failures else "degenerate at some sample point",
    }
    return report


def _check_nondegenerate_generic(omega: ShiftedTwoForm, T: TwoTermComplex) -> dict:
    flat = pairing_at(omega, complex_=T.generic(), symbolic=True).flat()
    rep = quasi_isomorphism_report(flat)
    LOG.debug("nondegeneracy over the fraction field: %s", rep["ok"])
    return {
        "ok": rep["ok"],
        "mode": "symbolic",
        "samples": 0,
        "degree_bound": T.degree_bound(),
        "failures": {} if rep["ok"] else {"generic": rep},
        "message": "nondegenerate over the fraction field" if rep["ok"] else "degenerate at the generic point",
    }


def _point_label(point: Mapping[str, object]) -> str:
    return "(" + ", ".join(f"{k}={v}" for k, v in point.items()) + ")"


# -----------------------
# Isotropic and Lagrangian structures
# -----------------------
@dataclass
class IsotropicStructure:
    """Map f : T_Y -> T_X of linear models with a homotopy gamma of degree n-1 on T_Y (None means zero)."""

    f: ChainMap
    gamma: Optional[ShiftedPairing] = None

    def homotopy(self, omega: ShiftedPairing) -> ShiftedPairing:
        if self.gamma is None:
            return ShiftedPairing.zero(self.f.source, omega.shift - 1)
        if self.gamma.shift != omega.shift - 1:
            raise DegreeMismatchError(f"isotropic structure must have shift {omega.shift - 1}")
        return self.gamma


def _check_target(f: ChainMap, omega: ShiftedPairing):
    if f.target != omega.complex:
        raise ShapeMismatchError("map does not land in the complex carrying the pairing")


def isotropy_residuals(f: ChainMap, omega: ShiftedPairing, gamma: ShiftedPairing) -> Dict[int, list]:
    """R_k = G_(k+1) d^k + (-1)^k (d^(-k-n))^T G_k + (f^(-k-n))^T B_k f^k."""
    _check_target(f, omega)
    Y, n = f.source, omega.shift
    out = {}
    for k in Y.degrees:
        j = -k - n
        r = (gamma.block(k + 1) * Y.d(k) + Y.d(j).T * gamma.block(k) * _sign(k)
             + f.at(j).T * omega.block(k) * f.at(k))
        if not _zero_matrix(r):
            out[k] = linalg.render(r)
    return out


def relative_tangent(f: ChainMap) -> LinearComplex:
    return fiber(f)


def gamma_flat(f: ChainMap, omega: ShiftedPairing, gamma: ShiftedPairing) -> ChainMap:
    """fib(f) -> T_Y^v[n-1], (y, x) -> G_k y + (f^(-k-n+1))^T B_(k-1) x."""
    Y, X, n = f.source, f.target, omega.shift
    rel = relative_tangent(f)
    target = Y.dual().shift(n - 1)
    maps = {}
    for k in _span(rel, target):
        j = -k - n + 1
        maps[k] = _assemble((Y.dim(j),), (Y.dim(k), X.dim(k - 1)),
                            {(0, 0): gamma.block(k), (0, 1): f.at(j).T * omega.block(k - 1)})
    return ChainMap(rel, target, maps, name="gamma_flat")


def check_lagrangian(f, omega, gamma: Optional[ShiftedPairing] = None,
                     point: Optional[Mapping[str, object]] = None) -> dict:
    """
    f is a ChainMap or an IsotropicStructure; an explicit gamma wins over the structure's own.
    A ShiftedTwoForm is replaced by its linear model at point, so f must land in the tangent
    complex there. Polynomial families over a chart go through check_atlas.
    """
    if isinstance(f, IsotropicStructure):
        f, gamma = f.f, gamma if gamma is not None else f.gamma
    if isinstance(omega, ShiftedTwoForm):
        omega = pairing_at(omega, point)
    gamma = IsotropicStructure(f, gamma).homotopy(omega)
    residuals = isotropy_residuals(f, omega, gamma)
    if residuals:
        raise IsotropyError(f"(d+delta)gamma - f*w does not vanish in degrees {sorted(residuals)}")
    flat = gamma_flat(f, omega, gamma)
    report = quasi_isomorphism_report(flat)
    report["gamma_flat"] = flat.render()
    report["message"] = "Lagrangian" if report["ok"] else "gamma flat is not a quasi-isomorphism"
    return report


def atlas_model(A: LieAlgebroid, point: Optional[Mapping[str, object]] = None):
    """X -> [X/A] at a point: (f, w, zero gamma) with f the identity on T_X in degree 0."""
    omega = pairing_at(canonical_one_shifted(A), point)
    n = len(A.base)
    TX = LinearComplex({0: n}, name="T_X")
    return ChainMap(TX, omega.complex, {0: sympy.eye(n)}, name="atlas"), omega


def check_atlas(A: LieAlgebroid, seed: Optional[int] = None, samples: Optional[int] = None) -> dict:
    """The atlas of a Poisson stack with gamma = 0 is Lagrangian; gamma flat is (0, 1) in degree 0."""
    points = _points(A.base, seed, samples)
    failures, flat0 = {}, None
    for point in points:
        f, omega = atlas_model(A, point)
        rep = check_lagrangian(f, omega)
        flat0 = flat0 or rep["gamma_flat"].get("0")
        if not rep["ok"]:
            failures[_point_label(point)] = rep
    return {"ok": not failures, "samples": len(points), "gamma_flat_degree_0": flat0, "failures": failures,
            "message": "atlas is Lagrangian" if not failures else "atlas fails to be Lagrangian"}


# -----------------------
# Derived intersections
# -----------------------
def lagrangian_intersection(omega: ShiftedPairing, first: IsotropicStructure, second: IsotropicStructure):
    """
    Tangent complex of Y1 x_X Y2 with the (n-1)-shifted pairing
        gamma1 - gamma2 + B(x, g y') + (-1)^|y| B(g y, x'),   g = (f1 + f2)/2.
    Returns (complex, pairing, report).
    """
    for label, L in (("first", first), ("second", second)):
        if not check_lagrangian(L.f, omega, L.gamma)["ok"]:
            raise NotLagrangianError(f"{label} input is not Lagrangian")
    f1, f2 = first.f, second.f
    G1, G2 = first.homotopy(omega), second.homotopy(omega)
    Y1, Y2, X, n = f1.source, f2.source, omega.complex, omega.shift
    TF = fiber_product(f1, f2)
    blocks = {}
    for k in TF.degrees:
        j = 1 - k - n
        rows = (Y1.dim(j), Y2.dim(j), X.dim(j - 1))
        cols = (Y1.dim(k), Y2.dim(k), X.dim(k - 1))
        s = HALF * _sign(k)
        blocks[k] = _assemble(rows, cols, {
            (0, 0): G1.block(k),
            (1, 1): -G2.block(k),
            (0, 2): HALF * f1.at(j).T * omega.block(k - 1),
            (1, 2): HALF * f2.at(j).T * omega.block(k - 1),
            (2, 0): s * omega.block(k) * f1.at(k),
            (2, 1): s * omega.block(k) * f2.at(k),
        })
    pairing = ShiftedPairing(TF, n - 1, blocks)
    report = pairing_report(pairing)
    report["message"] = (f"intersection carries a nondegenerate {n - 1}-shifted pairing" if report["ok"]
                         else "inherited pairing fails")
    LOG.debug("lagrangian intersection cohomology %s", report["cohomology"])
    return TF, pairing, report


@dataclass
class FiberDiagram:
    """
    Y1 -f1-> X <-f2- Y2 over Y1' -g1-> X' <-g2- Y2', with p_i : Y_i -> Y_i' and q : X -> X'.
    Primed objects are the stacky models.
    """

    f1: ChainMap
    f2: ChainMap
    q: ChainMap
    p1: ChainMap
    p2: ChainMap
    g1: ChainMap
    g2: ChainMap

    def validate(self):
        pairs = ((self.f1.target, self.q.source), (self.f2.target, self.q.source),
                 (self.p1.source, self.f1.source), (self.p2.source, self.f2.source),
                 (self.g1.source, self.p1.target), (self.g2.source, self.p2.target),
                 (self.g1.target, self.q.target), (self.g2.target, self.q.target))
        if any(a != b for a, b in pairs):
            raise ShapeMismatchError("diagram maps do not compose")
        for name in ("f1", "f2", "q", "p1", "p2", "g1", "g2"):
            if not getattr(self, name).is_chain_map():
                raise NonCommutingDiagramError(f"{name} is not a chain map")
        for i, (f, p, g) in enumerate(((self.f1, self.p1, self.g1), (self.f2, self.p2, self.g2)), start=1):
            qf, gp = self.q.compose(f), g.compose(p)
            span = _span(qf.source, qf.target)
            if any(qf.at(k) != gp.at(k) for k in span):
                raise NonCommutingDiagramError(f"square {i} does not commute: q f{i} != g{i} p{i}")

    def comparison_map(self) -> ChainMap:
        """Y1 x_X Y2 -> Y1' x_X' Y2' acting as p1 + p2 + q (shifted)."""
        F = fiber_product(self.f1, self.f2)
        FF = fiber_product(self.g1, self.g2)
        maps = {k: linalg.block_diag(self.p1.at(k), self.p2.at(k), self.q.at(k - 1)) for k in _span(F, FF)}
        return ChainMap(F, FF, maps, name="Phi")

    def corner_map(self, i: int) -> ChainMap:
        """Y_i -> Y_i' x_X' X, y -> (p y, f y, 0)."""
        f, p, g = (self.f1, self.p1, self.g1) if i == 1 else (self.f2, self.p2, self.g2)
        Z = fiber_product(g, self.q)
        Y, Yp, X, Xp = f.source, g.source, self.q.source, self.q.target
        maps = {}
        for k in _span(Y, Z):
            maps[k] = _assemble((Yp.dim(k), X.dim(k), Xp.dim(k - 1)), (Y.dim(k),), {(0, 0): p.at(k), (1, 0): f.at(k)})
        return ChainMap(Y, Z, maps, name=f"j{i}")


def exact_triangle_check(diagram: FiberDiagram) -> dict:
    """
    T_(X/X')[-1] -u-> T_(Y1/Z1) + T_(Y2/Z2) -v-> T_(F/F') with Z_i = Y_i' x_X' X.
    u(x,t) = ((0,0,x,-t), (0,0,x,-t)); v1 = (y,w,x,t) -> (y,0,x; w,0,t); v2 -> (0,y,-x; 0,w,-t).
    Distinguished: u, v chain maps, v u = 0, degreewise short exact, cone(u) -> T_(F/F') quasi-iso.
    """
    diagram.validate()
    X, Xp = diagram.q.source, diagram.q.target
    Y = (diagram.f1.source, diagram.f2.source)
    Yp = (diagram.g1.source, diagram.g2.source)
    L = fiber(diagram.q).shift(-1)
    M1, M2 = fiber(diagram.corner_map(1)), fiber(diagram.corner_map(2))
    M = M1.direct_sum(M2)
    R = fiber(diagram.comparison_map())
    span = _span(L, M, R)
    u_maps, v_maps = {}, {}
    for k in span:
        xs, ts = X.dim(k - 1), Xp.dim(k - 2)
        m_rows = []
        for i in range(2):
            m_rows += [Y[i].dim(k), Yp[i].dim(k - 1), xs, ts]
        u_maps[k] = _assemble(m_rows, (xs, ts), {
            (2, 0): sympy.eye(xs), (3, 1): -sympy.eye(ts), (6, 0): sympy.eye(xs), (7, 1): -sympy.eye(ts)})
        r_rows = (Y[0].dim(k), Y[1].dim(k), xs, Yp[0].dim(k - 1), Yp[1].dim(k - 1), ts)
        v_maps[k] = _assemble(r_rows, m_rows, {
            (0, 0): sympy.eye(Y[0].dim(k)), (3, 1): sympy.eye(Yp[0].dim(k - 1)),
            (2, 2): sympy.eye(xs), (5, 3): sympy.eye(ts),
            (1, 4): sympy.eye(Y[1].dim(k)), (4, 5): sympy.eye(Yp[1].dim(k - 1)),
            (2, 6): -sympy.eye(xs), (5, 7): -sympy.eye(ts)})
    u = ChainMap(L, M, u_maps, name="u")
    v = ChainMap(M, R, v_maps, name="v")
    composite = v.compose(u)
    exact = all(u.injective_at(k) and v.surjective_at(k) and M.dim(k) == L.dim(k) + R.dim(k) for k in span)
    cone = u.cone()
    cone_map = ChainMap(cone, R, {k: _assemble((R.dim(k),), (L.dim(k + 1), M.dim(k)), {(0, 1): v.at(k)})
                                  for k in _span(cone, R)}, name="cone_to_fiber")
    cone_report = quasi_isomorphism_report(cone_map)
    report = {
        "u_chain_map": u.is_chain_map(),
        "v_chain_map": v.is_chain_map(),
        "composite_zero": not composite.maps or all(_zero_matrix(m) for m in composite.maps.values()),
        "short_exact": exact,
        "cone_quasi_isomorphism": cone_report["quasi_isomorphism"],
        "cohomology": {"left": {str(k): d for k, d in L.cohomology_dims().items()},
                       "middle": {str(k): d for k, d in M.cohomology_dims().items()},
                       "right": {str(k): d for k, d in R.cohomology_dims().items()}},
        "residuals": {"u": {str(k): r for k, r in u.chain_residuals().items()},
                      "v": {str(k): r for k, r in v.chain_residuals().items()}},
    }
    report["ok"] = all(report[key] for key in
                       ("u_chain_map", "v_chain_map", "composite_zero", "short_exact", "cone_quasi_isomorphism"))
    report["message"] = "triangle is distinguished" if report["ok"] else "triangle is not distinguished"
    return report


# -----------------------
# Coisotropic intersections
# -----------------------
def _common_point(S1: AffineSubspace, S2: AffineSubspace) -> sympy.Matrix:
    B = sympy.Matrix.hstack(S1.basis, -S2.basis) if S1.dimension + S2.dimension else sympy.zeros(len(S1.base), 0)
    rhs = S2.offset - S1.offset
    if not linalg.in_span(B, rhs):
        raise HypothesisError("the two subspaces do not meet")
    if not B.cols:
        return S1.offset
    coords = linalg.solve_in_basis(B, rhs)
    return S1.offset + S1.basis * coords[:S1.dimension, :]


def coisotropic_linear_model(P: MultiVector, S1: AffineSubspace, S2: AffineSubspace):
    """
    Linear model at a common point of S1 and S2:
        X = T,  X' = (T* -P#-> T),  Y_i = TS_i,  Y_i' = (N*S_i -> TS_i),
    all maps inclusions and every gamma zero. Returns (diagram, pairing on X').
    """
    for label, S in (("first", S1), ("second", S2)):
        if not is_coisotropic(S, P):
            raise HypothesisError(f"{label} subspace is not coisotropic")
    base = P.base
    n = len(base)
    p = _common_point(S1, S2)
    point = {name: Fraction(str(p[i])) for i, name in enumerate(base.names)}
    Pm = constant_matrix([[e.evaluate(point) for e in row] for row in bivector_matrix(P)]) if n else sympy.zeros(0, 0)
    sharp = Pm.T
    X = LinearComplex({0: n}, name="T_X")
    Xp = LinearComplex({-1: n, 0: n}, {-1: sharp}, name="T_[X/T*X]")
    omega = ShiftedPairing.from_lower(Xp, 1, {-1: sympy.eye(n)})
    q = ChainMap(X, Xp, {0: sympy.eye(n)}, name="q")
    maps = []
    for S in (S1, S2):
        TS = S.basis
        ann = linalg.annihilator(TS)
        anchor = linalg.solve_in_basis(TS, sharp * ann) if ann.cols else sympy.zeros(TS.cols, 0)
        Y = LinearComplex({0: TS.cols}, name="T_S")
        Yp = LinearComplex({-1: ann.cols, 0: TS.cols}, {-1: anchor}, name="T_[S/N*S]")
        f = ChainMap(Y, X, {0: TS})
        pmap = ChainMap(Y, Yp, {0: sympy.eye(TS.cols)})
        g = ChainMap(Yp, Xp, {-1: ann, 0: TS})
        maps.append((f, pmap, g))
    (f1, p1, g1), (f2, p2, g2) = maps
    diagram = FiberDiagram(f1, f2, q, p1, p2, g1, g2)
    diagram.validate()
    return diagram, omega


def coisotropic_intersection_check(diagram: FiberDiagram, omega: ShiftedPairing) -> dict:
    """
    F = Y1 x_X Y2 -> F' = Y1' x_X' Y2' is 0-shifted Lagrangian with the zero isotropic
    structure. Hypotheses: q, g1, g2 Lagrangian and Y_i -> Y_i' x_X' X Lagrangian.
    The three columns of the comparison diagram are certified separately.
    """
    diagram.validate()
    q_report = check_lagrangian(diagram.q, omega)
    hypotheses = {"q": q_report["ok"]}
    middle = {}
    for i, g in ((1, diagram.g1), (2, diagram.g2)):
        hypotheses[f"g{i}"] = check_lagrangian(g, omega)["ok"]
        if not hypotheses[f"g{i}"]:
            continue
        _, pairing_z, _ = lagrangian_intersection(omega, IsotropicStructure(g), IsotropicStructure(diagram.q))
        j = diagram.corner_map(i)
        rep = check_lagrangian(j, pairing_z)
        hypotheses[f"y{i}"] = rep["ok"]
        middle[f"y{i}"] = rep["quasi_isomorphism"]
    if not all(hypotheses.values()):
        failed = sorted(k for k, v in hypotheses.items() if not v)
        raise HypothesisError(f"hypotheses not certified: {', '.join(failed)}")
    triangle = exact_triangle_check(diagram)
    _, pairing_f, intersection = lagrangian_intersection(
        omega, IsotropicStructure(diagram.g1), IsotropicStructure(diagram.g2))
    phi = diagram.comparison_map()
    right = check_lagrangian(phi, pairing_f)
    report = {
        "hypotheses": hypotheses,
        "triangle": triangle["ok"],
        "columns": {"left": q_report["quasi_isomorphism"], "middle": all(middle.values()),
                    "right": right["quasi_isomorphism"]},
        "target_pairing": intersection["ok"],
        "cohomology": right["source_cohomology"],
        "residuals": {"right": right["residuals"]},
    }
    report["ok"] = report["triangle"] and all(report["columns"].values()) and report["target_pairing"]
    report["message"] = ("F -> F' is 0-shifted Lagrangian" if report["ok"]
                         else "coisotropic intersection check failed")
    return report

