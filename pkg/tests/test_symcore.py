from fractions import Fraction

import pytest

from geometry.errors import ChartMismatchError, DegreeMismatchError, OddAssignmentError, UnknownGeneratorError
from geometry.symcore import Chart, GradedElement, derive, evaluate, from_sympy, multiply, random_element, rational, substitute

CHART = Chart((("x", 0), ("y", 0), ("xi1", 1), ("xi2", 1), ("e", 2), ("xi3", 3)))
x, y, xi1, xi2, e, xi3 = CHART.gens("x", "y", "xi1", "xi2", "e", "xi3")


def homogeneous_parts(a: GradedElement):
    parts = {}
    for m, c in a.terms.items():
        parts.setdefault(a.term_degree(m), {})[m] = c
    return [GradedElement(a.chart, t) for t in parts.values()]


def test_commutative_identity():
    """(x+y)(x-y) = x^2 - y^2"""
    assert multiply(x + y, x - y) == x ** 2 - y ** 2


def test_odd_square_vanishes():
    """odd generators square to zero"""
    assert multiply(xi1, xi1).is_zero()
    assert (xi3 * xi3).is_zero()


def test_odd_anticommute():
    """xi1 xi2 + xi2 xi1 = 0"""
    assert (xi1 * xi2 + xi2 * xi1).is_zero()
    assert xi2 * xi1 == -(xi1 * xi2)


def test_even_generator_of_degree_two_has_powers():
    """even generators of nonzero degree commute and have nonzero powers"""
    assert e * xi1 == xi1 * e
    assert (e ** 3).degree() == 6


def test_derivatives():
    """partial derivatives, left and right"""
    assert derive(x ** 2 * y, "x") == 2 * x * y
    assert derive(xi1 * xi2, "xi1", "left") == xi2
    assert derive(xi1 * xi2, "xi2", "left") == -xi1
    assert derive(xi1 * xi2, "xi2", "right") == xi1
    assert derive(xi1 * xi2, "xi1", "right") == -xi2


def test_unknown_generator():
    """derive rejects names outside the chart"""
    with pytest.raises(UnknownGeneratorError):
        derive(x, "z")


def test_evaluate():
    """evaluation at even points"""
    assert evaluate(x ** 2 + y, {"x": 2, "y": 3}) == 7
    assert evaluate(x * xi1, {"x": Fraction(1, 2)}) == xi1.scale(Fraction(1, 2))
    with pytest.raises(OddAssignmentError):
        evaluate(xi1, {"xi1": 1})


def test_evaluate_commutes_with_addition(rng):
    """evaluate(a+b) = evaluate(a) + evaluate(b)"""
    for _ in range(30):
        a = random_element(CHART, rng, max_degree=3)
        b = random_element(CHART, rng, max_degree=3)
        point = {"x": Fraction(rng.randint(-5, 5), rng.randint(1, 4)), "y": rng.randint(-3, 3), "e": 2}
        assert evaluate(a + b, point) == evaluate(a, point) + evaluate(b, point)


def test_substitute():
    """homomorphic substitution"""
    u, v = x, y
    assert substitute(x ** 2, {"x": u + v}) == u ** 2 + 2 * u * v + v ** 2
    a = x * xi1 + 3 * y * e
    assert substitute(a, {}) == a
    assert substitute(xi1 * xi2, {"xi1": xi1 + xi2}) == xi1 * xi2


def test_substitute_degree_mismatch():
    """rules must preserve degree"""
    with pytest.raises(DegreeMismatchError):
        substitute(x, {"x": xi1})


def test_substitution_composes(rng):
    """applying r1 then r2 equals applying r2 o r1"""
    r1 = {"x": x + y ** 2, "xi1": xi1 + x * xi2, "e": e + xi1 * xi2}
    r2 = {"y": x * y + 1, "xi2": xi2 - xi1}
    composed = {n: substitute(r1.get(n, CHART.gen(n)), r2) for n in CHART.names}
    for _ in range(15):
        a = random_element(CHART, rng, max_degree=3)
        assert substitute(substitute(a, r1), r2) == substitute(a, composed)


def test_graded_commutativity(rng):
    """ab = (-1)^(|a||b|) ba on homogeneous elements"""
    for _ in range(40):
        for a in homogeneous_parts(random_element(CHART, rng, max_degree=3)):
            for b in homogeneous_parts(random_element(CHART, rng, max_degree=3)):
                sign = -1 if (a.degree() * b.degree()) % 2 else 1
                assert a * b - (b * a).scale(sign) == 0


def test_left_derivative_is_graded_derivation(rng):
    """d(ab) = (da) b + (-1)^(|g||a|) a (db)"""
    for _ in range(30):
        for g in CHART.names:
            for a in homogeneous_parts(random_element(CHART, rng, max_degree=3)):
                b = random_element(CHART, rng, max_degree=3)
                sign = -1 if (CHART.degree_of(g) * a.degree()) % 2 else 1
                lhs = derive(a * b, g)
                rhs = derive(a, g) * b + (a * derive(b, g)).scale(sign)
                assert lhs == rhs


def test_normal_form_is_canonical():
    """equal elements have identical term maps"""
    a = xi2 * xi1 * x + x * xi1 * xi2 * 2
    assert dict(a.terms) == dict((xi1 * xi2 * x).terms)
    assert hash(a) == hash(xi1 * xi2 * x)


def test_chart_mismatch():
    """operands on different charts are rejected"""
    other = Chart.even(["x"])
    with pytest.raises(ChartMismatchError):
        multiply(x, other.gen("x"))


def test_rational_coercion():
    assert rational("3/6") == Fraction(1, 2)
    with pytest.raises(TypeError):
        rational(0.5)


def test_sympy_bridge():
    """degree-0 polynomials round through sympy"""
    a = x ** 2 - Fraction(1, 3) * x * y + 4
    assert from_sympy(a.to_sympy(), CHART) == a
    with pytest.raises(DegreeMismatchError):
        xi1.to_sympy()
