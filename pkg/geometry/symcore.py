"""
geometry/symcore.py

Exact graded-commutative polynomial algebra.

Provides:
    Chart                      ordered generators (name, degree); parity = degree mod 2
    GradedElement              polynomial with Fraction coefficients in normal form
    multiply / derive / evaluate / substitute

Normal form:
 - a term is an exponent tuple over all chart generators; odd generators
   have exponent 0 or 1
 - a term stands for coeff * g_1^e_1 * ... * g_m^e_m in chart order, so the
   odd factors appear in declaration order and every Koszul sign is already
   absorbed into the coefficient
 - zero coefficients are never stored, so equality is a dict comparison
"""

import logging
import random
from dataclasses import dataclass
from fractions import Fraction
from types import MappingProxyType
from typing import Dict, Iterable, Mapping, Optional, Tuple

import sympy

from geometry.errors import ChartMismatchError, DegreeMismatchError, OddAssignmentError, UnknownGeneratorError

LOG = logging.getLogger("symcore")
LOG.setLevel(logging.INFO)
if not LOG.handlers:
    handler = logging.StreamHandler()
    handler.setFormatter(logging.Formatter("%(asctime)s [%(levelname)s] %(message)s"))
    LOG.addHandler(handler)

Monomial = Tuple[int, ...]


def rational(value) -> Fraction:
    """Coerce int, Fraction, sympy Rational or a "p/q" string to Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not coefficients")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, sympy.Rational):
        return Fraction(int(value.p), int(value.q))
    if isinstance(value, sympy.Basic) and value.is_Rational:
        return Fraction(int(value.p), int(value.q))
    raise TypeError(f"not an exact rational: {value!r}")


@dataclass(frozen=True)
class Chart:
    generators: Tuple[Tuple[str, int], ...]

    def __post_init__(self):
        gens = tuple((str(n), int(d)) for n, d in self.generators)
        object.__setattr__(self, "generators", gens)
        names = [n for n, _ in gens]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate generator names in chart: {names}")
        object.__setattr__(self, "_index", {n: i for i, n in enumerate(names)})
        object.__setattr__(self, "_odd", tuple(d % 2 == 1 for _, d in gens))

    @classmethod
    def even(cls, names: Iterable[str]) -> "Chart":
        return cls(tuple((n, 0) for n in names))

    def __len__(self):
        return len(self.generators)

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(n for n, _ in self.generators)

    @property
    def degrees(self) -> Tuple[int, ...]:
        return tuple(d for _, d in self.generators)

    @property
    def odd_mask(self) -> Tuple[bool, ...]:
        return self._odd

    def __contains__(self, name) -> bool:
        return name in self._index

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise UnknownGeneratorError(f"generator '{name}' not in chart {self.names}") from None

    def degree_of(self, name: str) -> int:
        return self.generators[self.index(name)][1]

    def is_odd(self, name: str) -> bool:
        return self._odd[self.index(name)]

    def names_of_degree(self, degree: int) -> Tuple[str, ...]:
        return tuple(n for n, d in self.generators if d == degree)

    def extend(self, extra: Iterable[Tuple[str, int]]) -> "Chart":
        return Chart(self.generators + tuple(extra))

    def gen(self, name: str) -> "GradedElement":
        mono = [0] * len(self)
        mono[self.index(name)] = 1
        return GradedElement._raw(self, {tuple(mono): Fraction(1)})

    def gens(self, *names: str):
        return tuple(self.gen(n) for n in names)

    def zero(self) -> "GradedElement":
        return GradedElement._raw(self, {})

    def one(self) -> "GradedElement":
        return self.constant(1)

    def constant(self, value) -> "GradedElement":
        c = rational(value)
        if not c:
            return self.zero()
        return GradedElement._raw(self, {(0,) * len(self): c})


class GradedElement:
    __slots__ = ("chart", "_terms", "_hash")

    def __init__(self, chart: Chart, terms: Optional[Mapping[Monomial, object]] = None):
        clean: Dict[Monomial, Fraction] = {}
        odd = chart.odd_mask
        for mono, c in (terms or {}).items():
            mono = tuple(int(e) for e in mono)
            if len(mono) != len(chart):
                raise ValueError(f"monomial {mono} does not fit chart of size {len(chart)}")
            if any(e < 0 for e in mono) or any(e > 1 for e, o in zip(mono, odd) if o):
                raise ValueError(f"invalid exponents {mono}")
            c = rational(c)
            if c:
                clean[mono] = clean.get(mono, Fraction(0)) + c
                if not clean[mono]:
                    del clean[mono]
        self.chart = chart
        self._terms = clean
        self._hash = None

    @classmethod
    def _raw(cls, chart: Chart, terms: Dict[Monomial, Fraction]) -> "GradedElement":
        obj = cls.__new__(cls)
        obj.chart = chart
        obj._terms = terms
        obj._hash = None
        return obj

    # ---------- inspection ----------
    @property
    def terms(self) -> Mapping[Monomial, Fraction]:
        return MappingProxyType(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self):
        return bool(self._terms)

    def term_degree(self, mono: Monomial) -> int:
        return sum(e * d for e, d in zip(mono, self.chart.degrees))

    def degrees(self) -> frozenset:
        return frozenset(self.term_degree(m) for m in self._terms)

    def is_homogeneous(self) -> bool:
        return len(self.degrees()) <= 1

    def degree(self) -> Optional[int]:
        """Degree of a homogeneous element; None for zero."""
        degs = self.degrees()
        if not degs:
            return None
        if len(degs) > 1:
            raise DegreeMismatchError(f"element is not homogeneous: degrees {sorted(degs)}")
        return next(iter(degs))

    def is_constant(self) -> bool:
        return all(not any(m) for m in self._terms)

    def constant_term(self) -> Fraction:
        return self._terms.get((0,) * len(self.chart), Fraction(0))

    def coefficient(self, mono: Monomial) -> Fraction:
        return self._terms.get(tuple(mono), Fraction(0))

    def support(self) -> frozenset:
        """Names of generators that occur."""
        names = self.chart.names
        return frozenset(names[i] for m in self._terms for i, e in enumerate(m) if e)

    # ---------- arithmetic ----------
    def _coerce(self, other) -> "GradedElement":
        if isinstance(other, GradedElement):
            if other.chart is not self.chart and other.chart != self.chart:
                raise ChartMismatchError(f"{self.chart.names} vs {other.chart.names}")
            return other
        return self.chart.constant(other)

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self._terms)
        for m, c in other._terms.items():
            s = out.get(m, Fraction(0)) + c
            if s:
                out[m] = s
            else:
                out.pop(m, None)
        return GradedElement._raw(self.chart, out)

    __radd__ = __add__

    def __neg__(self):
        return GradedElement._raw(self.chart, {m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def scale(self, factor) -> "GradedElement":
        f = rational(factor)
        if not f:
            return self.chart.zero()
        return GradedElement._raw(self.chart, {m: c * f for m, c in self._terms.items()})

    def __mul__(self, other):
        if not isinstance(other, GradedElement):
            return self.scale(other)
        return multiply(self, other)

    def __rmul__(self, other):
        return self.scale(other)

    def __truediv__(self, other):
        return self.scale(1 / rational(other))

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("only non-negative integer powers")
        out = self.chart.one()
        for _ in range(n):
            out = multiply(out, self)
        return out

    def __eq__(self, other):
        if isinstance(other, GradedElement):
            return self.chart == other.chart and self._terms == other._terms
        try:
            return self._terms == self.chart.constant(other)._terms
        except TypeError:
            return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.chart, frozenset(self._terms.items())))
        return self._hash

    # ---------- calculus ----------
    def derive(self, gen: str, side: str = "left") -> "GradedElement":
        return derive(self, gen, side)

    def evaluate(self, point: Mapping[str, object]) -> "GradedElement":
        return evaluate(self, point)

    def substitute(self, rules: Mapping[str, "GradedElement"], target: Optional[Chart] = None) -> "GradedElement":
        return substitute(self, rules, target)

    def embed(self, target: Chart) -> "GradedElement":
        """Same element written on a chart that contains every generator used here."""
        if target == self.chart:
            return self
        src = self.chart
        idx = [target.index(n) if n in target else None for n in src.names]
        for i, (n, d) in enumerate(src.generators):
            if idx[i] is not None and target.generators[idx[i]][1] != d:
                raise DegreeMismatchError(f"generator '{n}' changes degree under embedding")
        odd_targets = [idx[i] for i, o in enumerate(src.odd_mask) if o and idx[i] is not None]
        if odd_targets != sorted(odd_targets):
            return substitute(self, {}, target)
        out = {}
        for m, c in self._terms.items():
            new = [0] * len(target)
            for i, e in enumerate(m):
                if e:
                    if idx[i] is None:
                        raise UnknownGeneratorError(f"generator '{src.names[i]}' missing from target chart")
                    new[idx[i]] = e
            out[tuple(new)] = c
        return GradedElement._raw(target, out)

    def to_sympy(self, symbols: Optional[Mapping[str, sympy.Symbol]] = None) -> sympy.Expr:
        """sympy expression of an element free of odd generators."""
        names = self.chart.names
        odd = self.chart.odd_mask
        syms = symbols or {n: sympy.Symbol(n) for n in names}
        expr = sympy.Integer(0)
        for m, c in self._terms.items():
            if any(e and o for e, o in zip(m, odd)):
                raise DegreeMismatchError("cannot convert an element with odd generators to sympy")
            t = sympy.Rational(c.numerator, c.denominator)
            for n, e in zip(names, m):
                if e:
                    t *= syms[n] ** e
            expr += t
        return expr

    # ---------- rendering ----------
    def __str__(self):
        if not self._terms:
            return "0"
        names = self.chart.names
        parts = []
        for m in sorted(self._terms, reverse=True):
            c = self._terms[m]
            factors = [n if e == 1 else f"{n}^{e}" for n, e in zip(names, m) if e]
            if not factors:
                parts.append(str(c))
            elif c == 1:
                parts.append("*".join(factors))
            elif c == -1:
                parts.append("-" + "*".join(factors))
            else:
                parts.append(f"{c}*" + "*".join(factors))
        return " + ".join(parts).replace("+ -", "- ")

    def __repr__(self):
        return f"GradedElement({self})"


def _odd_positions(chart: Chart, mono: Monomial):
    return [i for i, (e, o) in enumerate(zip(mono, chart.odd_mask)) if o and e]


def multiply(a: GradedElement, b: GradedElement) -> GradedElement:
    if a.chart is not b.chart and a.chart != b.chart:
        raise ChartMismatchError(f"{a.chart.names} vs {b.chart.names}")
    chart = a.chart
    out: Dict[Monomial, Fraction] = {}
    odd_b = {m: _odd_positions(chart, m) for m in b._terms}
    for ma, ca in a._terms.items():
        oa = _odd_positions(chart, ma)
        for mb, cb in b._terms.items():
            ob = odd_b[mb]
            if set(oa) & set(ob):
                continue
            swaps = sum(1 for i in oa for j in ob if i > j)
            c = ca * cb if swaps % 2 == 0 else -(ca * cb)
            m = tuple(x + y for x, y in zip(ma, mb))
            s = out.get(m, Fraction(0)) + c
            if s:
                out[m] = s
            else:
                out.pop(m, None)
    return GradedElement._raw(chart, out)


def derive(a: GradedElement, gen: str, side: str = "left") -> GradedElement:
    """Graded partial derivative; the left one moves gen to the front before removing it."""
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    chart = a.chart
    k = chart.index(gen)
    odd = chart.odd_mask
    out: Dict[Monomial, Fraction] = {}
    for m, c in a._terms.items():
        e = m[k]
        if not e:
            continue
        new = list(m)
        new[k] = e - 1
        if odd[k]:
            if side == "left":
                passed = sum(1 for i in range(k) if odd[i] and m[i])
            else:
                passed = sum(1 for i in range(k + 1, len(m)) if odd[i] and m[i])
            coeff = -c if passed % 2 else c
        else:
            coeff = c * e
        key = tuple(new)
        s = out.get(key, Fraction(0)) + coeff
        if s:
            out[key] = s
        else:
            out.pop(key, None)
    return GradedElement._raw(chart, out)


def evaluate(a: GradedElement, point: Mapping[str, object]) -> GradedElement:
    chart = a.chart
    values = {}
    for name, v in point.items():
        i = chart.index(name)
        if chart.odd_mask[i]:
            raise OddAssignmentError(f"cannot assign a value to odd generator '{name}'")
        values[i] = rational(v)
    out: Dict[Monomial, Fraction] = {}
    for m, c in a._terms.items():
        new = list(m)
        for i, v in values.items():
            if m[i]:
                c = c * v ** m[i]
                new[i] = 0
        if not c:
            continue
        key = tuple(new)
        s = out.get(key, Fraction(0)) + c
        if s:
            out[key] = s
        else:
            out.pop(key, None)
    return GradedElement._raw(chart, out)


def substitute(a: GradedElement, rules: Mapping[str, GradedElement], target: Optional[Chart] = None) -> GradedElement:
    """
    Algebra homomorphism defined on generators. Generators without a rule map
    to the generator of the same name in the target chart.
    """
    src = a.chart
    target = target if target is not None else src
    images = []
    for name, deg in src.generators:
        if name in rules:
            img = rules[name]
            if img.chart != target:
                raise ChartMismatchError(f"rule for '{name}' lives on a different chart")
            if img and (not img.is_homogeneous() or img.degree() != deg):
                raise DegreeMismatchError(f"rule for '{name}' has degrees {sorted(img.degrees())}, expected {deg}")
            images.append(img)
        elif name in target:
            if target.degree_of(name) != deg:
                raise DegreeMismatchError(f"generator '{name}' changes degree in target chart")
            images.append(None)
        else:
            images.append(None)
    cache: Dict[Tuple[int, int], GradedElement] = {}

    def power(i: int, e: int) -> GradedElement:
        key = (i, e)
        if key not in cache:
            img = images[i] if images[i] is not None else target.gen(src.names[i])
            cache[key] = img ** e
        return cache[key]

    out = target.zero()
    for m, c in a._terms.items():
        term = target.constant(c)
        for i, e in enumerate(m):
            if e:
                term = multiply(term, power(i, e))
                if not term:
                    break
        out = out + term
    return out


def from_sympy(expr, chart: Chart) -> GradedElement:
    """Element of chart from a sympy polynomial in the chart's even generators."""
    names = [n for n, o in zip(chart.names, chart.odd_mask) if not o]
    syms = [sympy.Symbol(n) for n in names]
    expr = sympy.sympify(expr)
    if expr == 0:
        return chart.zero()
    poly = sympy.Poly(sympy.expand(expr), *syms) if syms else None
    if poly is None:
        return chart.constant(rational(expr))
    out = {}
    for exps, coeff in poly.terms():
        mono = [0] * len(chart)
        for n, e in zip(names, exps):
            mono[chart.index(n)] = e
        out[tuple(mono)] = rational(coeff)
    return GradedElement(chart, out)


def random_element(chart: Chart, rng: random.Random, max_degree: int = 2, n_terms: int = 3,
                   names: Optional[Iterable[str]] = None, coeff_range: int = 3) -> GradedElement:
    """Random polynomial in the given generators (all of them by default)."""
    names = list(names or chart.names)
    out = chart.zero()
    for _ in range(n_terms):
        mono = [0] * len(chart)
        for _ in range(rng.randint(0, max_degree)):
            i = chart.index(rng.choice(names))
            mono[i] = 1 if chart.odd_mask[i] else mono[i] + 1
        c = rng.randint(-coeff_range, coeff_range)
        out = out + GradedElement(chart, {tuple(mono): c})
    return out
