from fractions import Fraction
from itertools import combinations

import pytest

from geometry.cartan import (
    Form, MultiVector, VectorValuedForm, apply_vector, as_vector_field, bivector_from_matrix, bivector_matrix,
    contract, coordinate_chart, coordinate_field, evaluate_on, exterior_d, fn_bracket, form_chart, form_matrix,
    hamiltonian_vector_field, identity_tensor, interior, lie_derivative, multivector_chart, nijenhuis_classical,
    nijenhuis_torsion, nr_bracket, pair, poisson_bracket, schouten, tensor_from_matrix, vector_field,
)
from geometry.errors import ChartMismatchError, DimensionCapError
from geometry.symcore import Chart, GradedElement, random_element

R2 = coordinate_chart(["x", "y"])
R3 = coordinate_chart(["x", "y", "z"])
R4 = coordinate_chart(["x1", "x2", "x3", "x4"])


def random_form(base, rng, max_degree=2):
    return Form(base, random_element(form_chart(base), rng, max_degree=max_degree + 2, n_terms=4))


def random_multivector(base, rng):
    return MultiVector(base, random_element(multivector_chart(base), rng, max_degree=3, n_terms=4))


def random_field(base, rng):
    return vector_field(base, {n: random_element(base, rng, max_degree=2) for n in base.names})


def random_tensor(base, rng, linear=True):
    x = base.gens(*base.names)
    rows = []
    for _ in base.names:
        row = []
        for _ in base.names:
            c = base.constant(rng.randint(-2, 2))
            if linear:
                c = c + x[rng.randrange(len(x))].scale(rng.randint(-2, 2))
            row.append(c)
        rows.append(row)
    return tensor_from_matrix(base, rows)


def nonzero_multivector(base, rng):
    while True:
        parts = homogeneous_multivectors(random_multivector(base, rng))
        if parts:
            return parts[0]


def homogeneous_multivectors(P):
    parts = {}
    for m, c in P.element.terms.items():
        parts.setdefault(P.element.term_degree(m), {})[m] = c
    return [MultiVector(P.base, GradedElement(P.element.chart, t)) for t in parts.values()]


def test_exterior_derivative_examples():
    """d(x dy) = dx dy, d(const) = 0, d(d(x^2 y dz)) = 0"""
    x, y, z = R3.gens("x", "y", "z")
    w = Form.function(R3, x) * Form.d_of(R3, "y")
    assert exterior_d(w) == Form.d_of(R3, "x") * Form.d_of(R3, "y")
    assert exterior_d(Form.function(R3, R3.constant(5))).is_zero()
    t = Form.function(R3, x ** 2 * y) * Form.d_of(R3, "z")
    assert exterior_d(exterior_d(t)).is_zero()


def test_d_squared_random(rng):
    """d^2 = 0 on random forms, ordinary and graded charts"""
    graded = Chart((("x", 0), ("y", 0), ("xi1", 1), ("xi2", 1)))
    for base in (R2, R4, graded):
        for _ in range(50 if base is R4 else 20):
            w = random_form(base, rng)
            assert exterior_d(exterior_d(w)).is_zero()


def test_cartan_identity(rng):
    """L_v = i_v d + d i_v on random forms"""
    for _ in range(50):
        v = random_field(R4, rng)
        w = random_form(R4, rng)
        rhs = interior(v, exterior_d(w)) + exterior_d(interior(v, w))
        assert lie_derivative(v, w) == rhs


def test_interior_anticommutes(rng):
    """i_u i_v + i_v i_u = 0"""
    for _ in range(20):
        u, v = random_field(R3, rng), random_field(R3, rng)
        w = random_form(R3, rng)
        assert (interior(u, interior(v, w)) + interior(v, interior(u, w))).is_zero()


def test_lie_derivative_examples():
    """L_dx(x dy) = dy and L_v f = v(f)"""
    x, y = R2.gens("x", "y")
    dx = coordinate_field(R2, "x")
    assert lie_derivative(dx, Form.function(R2, x) * Form.d_of(R2, "y")) == Form.d_of(R2, "y")
    v = vector_field(R2, {"x": y, "y": x ** 2})
    f = x * y
    assert lie_derivative(v, Form.function(R2, f)) == Form(R2, apply_vector(v, f.embed(form_chart(R2))))


def test_constant_bivector_is_poisson():
    """[dx^dy, dx^dy] = 0"""
    P = MultiVector.partial(R2, "x") * MultiVector.partial(R2, "y")
    assert schouten(P, P).is_zero()


def so3(base=R3):
    x, y, z = base.gens("x", "y", "z")
    return bivector_from_matrix(base, [[0, z, -y], [-z, 0, x], [y, -x, 0]])


def jacobi_sum(P):
    x, y, z = P.base.gens("x", "y", "z")
    pb = lambda f, g: poisson_bracket(P, f, g)
    return pb(x, pb(y, z)) + pb(y, pb(z, x)) + pb(z, pb(x, y))


def test_so3_bivector():
    """z dx^dy + x dy^dz + y dz^dx satisfies [P,P] = 0"""
    P = so3()
    assert schouten(P, P).is_zero()
    assert jacobi_sum(P).is_zero()


def test_non_poisson_bivector():
    """x dx^dy + y dx^dz is not Poisson"""
    x, y, z = R3.gens("x", "y", "z")
    P = bivector_from_matrix(R3, [[0, x, y], [-x, 0, 0], [-y, 0, 0]])
    assert not schouten(P, P).is_zero()
    assert not jacobi_sum(P).is_zero()


def test_poisson_oracle_agrees_on_random_linear_bivectors(rng):
    """[P,P] = 0 iff the Jacobi sum on coordinates vanishes"""
    x = R3.gens("x", "y", "z")
    for _ in range(25):
        entries = {}
        for i, j in combinations(range(3), 2):
            entries[(i, j)] = R3.constant(rng.randint(-1, 1)) + x[rng.randrange(3)].scale(rng.randint(-1, 1))
        M = [[R3.zero()] * 3 for _ in range(3)]
        for (i, j), v in entries.items():
            M[i][j], M[j][i] = v, -v
        P = bivector_from_matrix(R3, M)
        verdict = schouten(P, P).is_zero()
        assert verdict == jacobi_sum(P).is_zero()


def test_schouten_graded_antisymmetry(rng):
    """[P,Q] = -(-1)^((p-1)(q-1)) [Q,P]"""
    for _ in range(50):
        for P in homogeneous_multivectors(random_multivector(R3, rng)):
            for Q in homogeneous_multivectors(random_multivector(R3, rng)):
                p, q = P.degree, Q.degree
                sign = -1 if ((p - 1) * (q - 1)) % 2 else 1
                assert schouten(P, Q) == -(schouten(Q, P) * sign)


def test_schouten_jacobi(rng):
    """graded Jacobi for the Schouten bracket"""
    for _ in range(50):
        P, Q, S = (nonzero_multivector(R3, rng) for _ in range(3))
        p, q = P.degree - 1, Q.degree - 1
        lhs = schouten(P, schouten(Q, S))
        rhs = schouten(schouten(P, Q), S) + schouten(Q, schouten(P, S)) * (-1 if (p * q) % 2 else 1)
        assert lhs == rhs


def test_schouten_on_vector_fields_is_lie_bracket(rng):
    from geometry.cartan import as_multivector, vector_field_bracket
    for _ in range(10):
        u, v = random_field(R3, rng), random_field(R3, rng)
        assert as_vector_field(schouten(as_multivector(u), as_multivector(v))) == vector_field_bracket(u, v)


def test_contraction_convention():
    """P = dx^dy gives P#(dx) = +dy and P(dx,dy) = 1"""
    P = MultiVector.partial(R2, "x") * MultiVector.partial(R2, "y")
    assert contract(Form.d_of(R2, "x"), P) == MultiVector.partial(R2, "y")
    assert pair(P, Form.d_of(R2, "x"), Form.d_of(R2, "y")) == 1
    assert bivector_matrix(P)[0][1] == 1


def test_hamiltonian_vector_field():
    """X_f(g) = {f,g}"""
    P = so3()
    x, y, z = R3.gens("x", "y", "z")
    Xf = as_vector_field(hamiltonian_vector_field(P, x * y))
    g = z ** 2 + x
    assert apply_vector(Xf, g.embed(form_chart(R3))).embed(R3) == poisson_bracket(P, x * y, g)


def test_form_matrix():
    w = Form.d_of(R2, "x") * Form.d_of(R2, "y")
    assert form_matrix(w)[0][1] == 1
    assert form_matrix(w)[1][0] == -1


def test_fn_constant_complex_structure():
    """constant J with J^2 = -1 is integrable; [id,id]_FN = 0"""
    J = tensor_from_matrix(R2, [[0, -1], [1, 0]])
    assert nijenhuis_torsion(J).is_zero()
    idt = identity_tensor(R2)
    assert fn_bracket(idt, idt).is_zero()


def test_fn_matches_classical_nijenhuis_example():
    """J = y dx (x) dx: half [J,J] on (dx, dy) is y dx"""
    y = R2.gen("y")
    J = tensor_from_matrix(R2, [[y, 0], [0, 0]])
    ex, ey = coordinate_field(R2, "x"), coordinate_field(R2, "y")
    got = evaluate_on(nijenhuis_torsion(J), [ex, ey])
    assert got == vector_field(R2, {"x": y})
    assert got == nijenhuis_classical(J, ex, ey)


@pytest.mark.parametrize("base", [R2, R3])
def test_fn_matches_classical_nijenhuis_random(base, rng):
    """half [J,J]_FN agrees with the component formula on coordinate pairs"""
    for _ in range(50):
        J = random_tensor(base, rng)
        N = nijenhuis_torsion(J)
        for a, b in combinations(base.names, 2):
            u, v = coordinate_field(base, a), coordinate_field(base, b)
            assert evaluate_on(N, [u, v]) == nijenhuis_classical(J, u, v)


def test_nr_identity_normalization():
    """[id,id]_NR = 2 id and half [I,I]_NR = I o I"""
    idt = identity_tensor(R2)
    assert nr_bracket(idt, idt) == idt * 2
    I = tensor_from_matrix(R2, [[1, 2], [3, 4]])
    I2 = tensor_from_matrix(R2, [[7, 10], [15, 22]])
    assert nr_bracket(I, I) * Fraction(1, 2) == I2


def test_nr_degree_bookkeeping(rng):
    """NR of two vector-valued 1-forms is a vector-valued 1-form"""
    K, L = random_tensor(R3, rng), random_tensor(R3, rng)
    out = nr_bracket(K, L)
    assert out.form_degree in (None, 1)


def test_nr_is_algebraic(rng):
    """evaluating coefficients first gives the same NR bracket"""
    point = {"x": 2, "y": Fraction(-1, 3), "z": 5}
    for _ in range(50):
        K, L = random_tensor(R3, rng), random_tensor(R3, rng)
        assert nr_bracket(K, L).evaluate(point) == nr_bracket(K.evaluate(point), L.evaluate(point))


def test_nr_graded_antisymmetry_with_vector_field(rng):
    """[v,K]_NR = -(-1)^(|v||K|) [K,v]_NR"""
    for _ in range(20):
        v = random_field(R3, rng)
        K = random_tensor(R3, rng)
        assert nr_bracket(v, K) == -nr_bracket(K, v)


def test_lie_derivative_of_tensor_is_fn(rng):
    v = random_field(R2, rng)
    K = random_tensor(R2, rng)
    assert lie_derivative(v, K) == fn_bracket(v, K)


def test_chart_mismatch():
    with pytest.raises(ChartMismatchError):
        fn_bracket(identity_tensor(R2), identity_tensor(R3))


def test_dimension_cap():
    with pytest.raises(DimensionCapError):
        coordinate_chart([f"x{i}" for i in range(9)])
