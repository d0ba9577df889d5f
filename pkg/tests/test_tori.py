import random

import pytest
import sympy

from geometry.errors import BranePreconditionError, DegenerateFormError, ShapeMismatchError
from geometry.tori import (
    CoisotropicBrane, DoubledTorus, SymplecticTorus, dual_zero_section, graph_subtorus, is_coisotropic_brane,
    is_complex_in_double, is_lagrangian_in_double, lift, lift_equations, lift_report, random_brane, standard_torus,
    zero_section,
)

T4 = standard_torus(2)
# F / 2 pi i for the connection d + 2 pi i (r1 dt2 - r2 dt1), coordinates (r1, t1, r2, t2)
EXAMPLE_CURVATURE = [[0, 0, 0, 1], [0, 0, 1, 0], [0, -1, 0, 0], [-1, 0, 0, 0]]


def example_brane():
    return CoisotropicBrane.space_filling(T4, EXAMPLE_CURVATURE, name="example")


def test_standard_torus():
    assert T4.names == ("r1", "t1", "r2", "t2")
    assert T4.dual_names == ("r1_hat", "t1_hat", "r2_hat", "t2_hat")
    assert T4.omega[0, 1] == 1 and T4.omega[1, 0] == -1
    assert T4.n == 2


def test_degenerate_torus_rejected():
    with pytest.raises(DegenerateFormError):
        SymplecticTorus([[0, 0], [0, 0]])
    with pytest.raises(ShapeMismatchError):
        SymplecticTorus([[0, 1], [1, 0]])


def test_brane_input_validation():
    with pytest.raises(BranePreconditionError):
        CoisotropicBrane([["1/2"], [0]])
    with pytest.raises(BranePreconditionError):
        CoisotropicBrane(sympy.eye(2), [[0, 1], [1, 0]])
    with pytest.raises(BranePreconditionError):
        CoisotropicBrane([[1, 2], [2, 4]])


# -----------------------
# brane condition
# -----------------------
def test_example_brane_passes():
    report = is_coisotropic_brane(T4, example_brane())
    assert report["ok"], report["residuals"]
    assert report["characteristic_dimension"] == 0
    assert report["transverse_dimension"] == 4


def test_lagrangian_brane_passes():
    """span(r1, r2) with zero curvature: empty transverse condition"""
    b = CoisotropicBrane([[1, 0], [0, 0], [0, 1], [0, 0]])
    report = is_coisotropic_brane(T4, b)
    assert report["ok"]
    assert report["characteristic_dimension"] == 2
    assert report["transverse_dimension"] == 0


def test_wrong_curvature_fails_square():
    """F = dr1^dt1 gives K = diag(1, 1, 0, 0)"""
    F = [[0, 1, 0, 0], [-1, 0, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0]]
    report = is_coisotropic_brane(T4, CoisotropicBrane.space_filling(T4, F))
    assert report["coisotropic"] and report["leafwise_flat"]
    assert not report["transverse_complex"]
    assert "square" in report["residuals"]


def test_fractional_curvature_is_not_a_brane():
    """K = w^-1 F squares to -1, but F = du1^du2 / 2 - 2 dv1^dv2 has no U(1) bundle"""
    T = SymplecticTorus([[0, 0, 1, 0], [0, 0, 0, 1], [-1, 0, 0, 0], [0, -1, 0, 0]])
    F = [[0, "1/2", 0, 0], ["-1/2", 0, 0, 0], [0, 0, 0, -2], [0, 0, 2, 0]]
    b = CoisotropicBrane.space_filling(T, F)
    report = is_coisotropic_brane(T, b)
    assert report["transverse_complex"]
    assert not report["integral"]
    assert not report["ok"]
    assert "integrality" in report["residuals"]
    with pytest.raises(BranePreconditionError):
        lift(T, b)
    assert lift_report(T, b)["message"] == "precondition failed: failed: integral"


def test_rational_symplectic_form_is_not_a_brane():
    half = [[sympy.Rational(v, 2) for v in row] for row in EXAMPLE_CURVATURE]
    T = SymplecticTorus(sympy.Matrix(T4.omega) / 2)
    report = is_coisotropic_brane(T, CoisotropicBrane.space_filling(T, half))
    assert report["transverse_complex"] and not report["integral"]
    assert not report["ok"]


def test_flat_full_torus_is_rejected():
    b = CoisotropicBrane.space_filling(T4, sympy.zeros(4, 4))
    assert not is_coisotropic_brane(T4, b)["ok"]
    with pytest.raises(BranePreconditionError):
        lift(T4, b)


def test_line_is_not_coisotropic():
    report = is_coisotropic_brane(T4, CoisotropicBrane([[1], [0], [0], [0]]))
    assert not report["coisotropic"]
    assert not report["ok"]


def test_curvature_along_leaves_fails():
    """span(r1, t1, r2) has leaf direction r2; F = dr1^dr2 does not vanish on it"""
    b = CoisotropicBrane.from_ambient_curvature(
        [[1, 0, 0], [0, 1, 0], [0, 0, 1], [0, 0, 0]],
        [[0, 0, 1, 0], [0, 0, 0, 0], [-1, 0, 0, 0], [0, 0, 0, 0]])
    report = is_coisotropic_brane(T4, b)
    assert report["coisotropic"]
    assert not report["leafwise_flat"]


# -----------------------
# lift
# -----------------------
def test_example_lift_equations():
    assert lift_equations(T4, example_brane()) == [
        "r1_hat = t2",
        "t1_hat = r2",
        "r2_hat = -t1",
        "t2_hat = -r1",
    ]


def test_example_lift_is_lagrangian_and_complex():
    L = lift(T4, example_brane())
    D = DoubledTorus(T4)
    assert L.dimension == 4
    assert is_lagrangian_in_double(L, D)
    assert is_complex_in_double(L, D)


def test_example_lift_report():
    report = lift_report(T4, example_brane())
    assert report["ok"]
    assert report["integral"]
    assert report["message"] == "lift is Lagrangian and complex"
    assert report["compatibility"]["preserved"]


def test_lagrangian_brane_lift():
    """C x annihilator of C"""
    b = CoisotropicBrane([[1, 0], [0, 0], [0, 1], [0, 0]])
    L = lift(T4, b)
    D = DoubledTorus(T4)
    assert L.basis[:4, 2:] == sympy.zeros(4, 2)
    assert L.basis[4:, :2] == sympy.zeros(4, 2)
    assert is_lagrangian_in_double(L, D)
    # regression value
    assert is_complex_in_double(L, D)
    assert set(lift_equations(T4, b)) == {"r1_hat = 0", "r2_hat = 0", "t1 = 0", "t2 = 0"}


def test_offset_moves_only_the_base():
    b = CoisotropicBrane([[1, 0], [0, 0], [0, 1], [0, 0]], offset=[0, 1, 0, -1])
    L = lift(T4, b)
    assert list(L.offset) == [0, 1, 0, -1, 0, 0, 0, 0]
    assert set(lift_equations(T4, b)) == {"r1_hat = 0", "r2_hat = 0", "t1 - 1 = 0", "t2 + 1 = 0"}


# -----------------------
# doubled torus
# -----------------------
def test_doubled_torus_structures():
    D = DoubledTorus(T4)
    assert D.dimension == 8
    assert D.omega + D.omega.T == sympy.zeros(8, 8)
    assert D.omega.det() != 0
    assert D.complex_structure ** 2 == -sympy.eye(8)
    assert D.compatibility()["preserved"]


def test_zero_sections():
    D = DoubledTorus(T4)
    for L in (zero_section(T4), dual_zero_section(T4)):
        assert L.dimension == 4
        assert not is_lagrangian_in_double(L, D)
        assert not is_complex_in_double(L, D)


@pytest.mark.parametrize("seed", range(5))
def test_graph_oracle(seed):
    """graph of M is Lagrangian iff M^T w^-1 M = w"""
    rng = random.Random(seed)
    M = sympy.Matrix(4, 4, lambda i, j: rng.randint(-2, 2))
    D = DoubledTorus(T4)
    expected = M.T * T4.inverse * M == T4.omega
    assert is_lagrangian_in_double(graph_subtorus(T4, M), D) == expected


def test_graph_of_example_curvature_is_lagrangian():
    D = DoubledTorus(T4)
    graph = graph_subtorus(T4, EXAMPLE_CURVATURE)
    assert is_lagrangian_in_double(graph, D)
    assert is_complex_in_double(graph, D)


def test_subtorus_must_fit_the_double():
    with pytest.raises(ShapeMismatchError):
        is_lagrangian_in_double(zero_section(standard_torus(1)), DoubledTorus(T4))


# -----------------------
# random branes
# -----------------------
def integer_coefficients(equations) -> bool:
    for equation in equations:
        lhs, rhs = equation.split(" = ")
        terms = (sympy.sympify(lhs) - sympy.sympify(rhs)).as_coefficients_dict()
        if not all(c.is_integer for c in terms.values()):
            return False
    return True


@pytest.mark.parametrize("seed", range(20))
def test_random_brane_lifts(seed):
    """every random brane lifts to a Lagrangian; space-filling ones to a complex one"""
    rng = random.Random(seed)
    n = 1 + seed % 2
    T, b = random_brane(n, rng)
    report = is_coisotropic_brane(T, b)
    assert report["ok"], report["message"]
    assert report["integral"] and report["primitive"]
    assert integer_coefficients(lift_equations(T, b))
    L = lift(T, b)
    D = DoubledTorus(T)
    assert L.dimension == 2 * n
    assert is_lagrangian_in_double(L, D)
    if b.dimension == T.dimension:
        assert is_complex_in_double(L, D)


@pytest.mark.parametrize("seed", range(4))
def test_random_brane_with_leaves(seed):
    """dimension 6, transverse dimension 4, one leaf direction"""
    T, b = random_brane(3, random.Random(seed), transverse=2)
    report = lift_report(T, b)
    assert report["brane"]["characteristic_dimension"] == 1
    assert report["ok"], report["message"]
    assert report["dimension"] == 6


def test_random_brane_needs_even_transverse_rank():
    with pytest.raises(BranePreconditionError):
        random_brane(2, random.Random(0), transverse=1)
