import random

import pytest
import sympy

from geometry.cartan import (
    AffineSubspace, Form, MultiVector, bivector_from_matrix, bivector_matrix, constant_matrix, coordinate_chart,
    form_chart, multivector_chart,
)
from geometry.errors import DegenerateFormError, IntegrabilityError, TwistNotClosedError
from geometry.gencomplex import (
    GCStructure, GeneralizedSection, GeneralizedSubmanifold, complex_structure, courant, dorfman, from_complex,
    from_symplectic, gc_check, pairing, poisson_of, random_symplectic_matrix, symplectic_form, tau_stability,
)
from geometry.symcore import random_element

R2 = coordinate_chart(["x", "y"])
R3 = coordinate_chart(["x", "y", "z"])
R4 = coordinate_chart(["r1", "t1", "r2", "t2"])

W4 = sympy.Matrix([[0, 1, 0, 0], [-1, 0, 0, 0], [0, 0, 0, 1], [0, 0, -1, 0]])


def section(base, vector=None, form=None):
    return GeneralizedSection.of(base, vector=vector, form=form)


def random_section(base, rng):
    vec = MultiVector(base, multivector_chart(base).zero())
    form = Form.zero(base)
    for n in base.names:
        vec = vec + MultiVector.partial(base, n) * random_element(base, rng, max_degree=2, n_terms=2).embed(multivector_chart(base))
        form = form + Form.d_of(base, n) * random_element(base, rng, max_degree=2, n_terms=2).embed(form_chart(base))
    return GeneralizedSection(vec, form)


def random_complex_structure(n, rng):
    J0 = sympy.Matrix([[0, -1], [1, 0]])
    blocks = sympy.diag(*([J0] * n))
    while True:
        A = sympy.Matrix(2 * n, 2 * n, lambda i, j: rng.randint(-2, 2))
        if A.det() != 0:
            return A * blocks * A.inv()


def test_dorfman_examples():
    """basic Dorfman brackets, with and without twist"""
    dx, dy = MultiVector.partial(R3, "x"), MultiVector.partial(R3, "y")
    x = R3.gen("x")
    assert dorfman(section(R3, vector=dx), section(R3, vector=dy)).is_zero()
    got = dorfman(section(R3, vector=dx), section(R3, form=Form.function(R3, x) * Form.d_of(R3, "y")))
    assert got.form == Form.d_of(R3, "y")
    H = Form.d_of(R3, "x") * Form.d_of(R3, "y") * Form.d_of(R3, "z")
    twisted = dorfman(section(R3, vector=dx), section(R3, vector=dy), H)
    assert twisted.vector.is_zero()
    assert twisted.form == -Form.d_of(R3, "z")


def test_twist_must_be_closed():
    base = coordinate_chart(["a", "b", "c", "e"])
    H = Form.function(base, base.gen("e")) * Form.d_of(base, "a") * Form.d_of(base, "b") * Form.d_of(base, "c")
    s = section(base, vector=MultiVector.partial(base, "a"))
    with pytest.raises(TwistNotClosedError):
        dorfman(s, s, H)


def test_dorfman_leibniz(rng):
    """a o (b o c) = (a o b) o c + b o (a o c)"""
    for base in (R2, R3):
        for _ in range(5):
            a, b, c = (random_section(base, rng) for _ in range(3))
            assert dorfman(a, dorfman(b, c)) == dorfman(dorfman(a, b), c) + dorfman(b, dorfman(a, c))


def test_courant_is_antisymmetric(rng):
    a, b = random_section(R2, rng), random_section(R2, rng)
    assert courant(a, b) == -courant(b, a)


def test_from_symplectic_blocks():
    """w = dr1 dt1 + dr2 dt2 gives P = w^-1, Q = -w, I = 0"""
    w = symplectic_form(R4, W4)
    J = from_symplectic(w)
    assert constant_matrix(bivector_matrix(J.P)) == W4.inv()
    assert J.Q == -w
    assert J.I.is_zero()


def test_symplectic_gc_passes():
    """J_w passes all three checks on R^2 and R^4"""
    for base, W in ((R2, sympy.Matrix([[0, 1], [-1, 0]])), (R4, W4)):
        report = gc_check(from_symplectic(symplectic_form(base, W)))
        assert report["ok"], report["residuals"]


@pytest.mark.parametrize("seed", range(6))
def test_random_symplectic_gc_passes(seed):
    """random invertible antisymmetric 4x4 matrices give GC structures"""
    W = random_symplectic_matrix(2, random.Random(seed))
    assert gc_check(from_symplectic(symplectic_form(R4, W)))["ok"]


@pytest.mark.parametrize("seed", [11, 12])
def test_random_symplectic_gc_passes_in_dimension_six(seed):
    base = coordinate_chart(["a1", "a2", "a3", "b1", "b2", "b3"])
    W = random_symplectic_matrix(3, random.Random(seed))
    assert gc_check(from_symplectic(symplectic_form(base, W)))["ok"]


def test_degenerate_symplectic_rejected():
    with pytest.raises(DegenerateFormError):
        from_symplectic(Form.d_of(R4, "r1") * Form.d_of(R4, "t1"))


def test_degenerate_q_fails_squares():
    """replacing w by a degenerate antisymmetric matrix breaks J^2 = -1"""
    J = from_symplectic(symplectic_form(R4, W4))
    broken = GCStructure(R4, P=J.P, Q=-(Form.d_of(R4, "r1") * Form.d_of(R4, "t1")))
    report = gc_check(broken)
    assert not report["squares"]
    assert report["residuals"]["squares"]


@pytest.mark.parametrize("seed", range(5))
def test_complex_gc_passes(seed):
    """constant complex structures give GC structures"""
    rng = random.Random(seed)
    n = 1 + seed % 2
    base = R2 if n == 1 else R4
    I = random_complex_structure(n, rng)
    report = gc_check(from_complex(complex_structure(base, I)))
    assert report["ok"], report["residuals"]


@pytest.mark.parametrize("seed", range(5))
def test_perturbed_structures_fail(seed):
    """scaling P or I breaks the square condition"""
    rng = random.Random(100 + seed)
    if seed % 2:
        J = from_symplectic(symplectic_form(R4, random_symplectic_matrix(2, rng)))
        J = GCStructure(R4, P=J.P * 2, Q=J.Q)
    else:
        J = GCStructure(R2, I=complex_structure(R2, random_complex_structure(1, rng) * 3))
    assert not gc_check(J)["squares"]


def test_pairing_preserved_by_gc():
    J = from_symplectic(symplectic_form(R4, W4))
    a = section(R4, vector=MultiVector.partial(R4, "r1"), form=Form.d_of(R4, "t2"))
    b = section(R4, form=Form.d_of(R4, "r1"))
    assert pairing(J.apply(a), J.apply(b)) == pairing(a, b)


def test_poisson_of():
    """P block of J_w is Poisson; J_I has P = 0; non-Poisson P is reported"""
    P, proof = poisson_of(from_symplectic(symplectic_form(R4, W4)))
    assert constant_matrix(bivector_matrix(P)) == W4.inv()
    assert proof["ok"]
    P, proof = poisson_of(from_complex(complex_structure(R2, [[0, -1], [1, 0]])))
    assert P.is_zero() and proof["ok"]
    x, y = R3.gens("x", "y")
    bad = GCStructure(R3, P=bivector_from_matrix(R3, [[0, x, y], [-x, 0, 0], [-y, 0, 0]]))
    _, proof = poisson_of(bad, strict=False)
    assert not proof["ok"]
    assert proof["schouten_residual"] != "0"
    with pytest.raises(IntegrabilityError):
        poisson_of(bad)


def test_tau_space_filling_complex():
    """S = X with F = 0 is stable under J_I"""
    S = GeneralizedSubmanifold(AffineSubspace(R2, [[1, 0], [0, 1]]), [[0, 0], [0, 0]])
    report = tau_stability(S, from_complex(complex_structure(R2, [[0, -1], [1, 0]])))
    assert report["ok"]
    assert report["L_S_dimension"] == 1


def test_tau_lagrangian_symplectic():
    """a Lagrangian plane with F = 0 is stable under J_w"""
    S = GeneralizedSubmanifold(AffineSubspace(R4, [[1, 0, 0, 0], [0, 0, 1, 0]], [1, 2, 3, 4]), [[0, 0], [0, 0]])
    report = tau_stability(S, from_symplectic(symplectic_form(R4, W4)))
    assert report["ok"]
    assert report["dimension"] == 4
    assert report["L_S_dimension"] == 2


def test_tau_line_unstable():
    """a line in R^4 is not stable under J_w"""
    S = GeneralizedSubmanifold(AffineSubspace(R4, [[1, 1, 0, 2]]), [[0]])
    assert not tau_stability(S, from_symplectic(symplectic_form(R4, W4)))["ok"]
