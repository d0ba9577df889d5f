import random

import pytest
import sympy

from geometry.algebroid import abelian_algebroid, poisson_algebroid
from geometry.cartan import bivector_from_matrix, coordinate_chart
from geometry.errors import BidegreeError, HypothesisError, IntegrabilityError, ShapeMismatchError
from geometry.gencomplex import (
    GCStructure, complex_structure, from_complex, from_symplectic, gc_check, random_symplectic_matrix,
    symplectic_form,
)
from geometry.holostack import (
    FoliationCandidate, HHStructure, check_foliation, check_hhs, complex_structure_tensor, foliation_axioms,
    foliation_from_hhs, hhs_from_gc, hhs_residuals, homotopy_from_two_form, tensor_blocks,
)
from geometry.symcore import Chart

R2 = coordinate_chart(["x", "y"])
R4 = coordinate_chart(["r1", "t1", "r2", "t2"])
R6 = coordinate_chart(["a1", "a2", "a3", "b1", "b2", "b3"])

W2 = sympy.Matrix([[0, 1], [-1, 0]])
W4 = sympy.Matrix([[0, 1, 0, 0], [-1, 0, 0, 0], [0, 0, 0, 1], [0, 0, -1, 0]])
ROTATION = [[0, -1], [1, 0]]


def symplectic_hhs(base, W):
    return hhs_from_gc(from_symplectic(symplectic_form(base, W)))


def random_complex_structure(n, rng):
    blocks = sympy.diag(*([sympy.Matrix(ROTATION)] * n))
    while True:
        L = sympy.Matrix(2 * n, 2 * n, lambda i, j: rng.randint(-2, 2))
        if L.det() != 0:
            return L * blocks * L.inv()


# -----------------------
# the three equations
# -----------------------
def test_symplectic_case_passes():
    """I = 0 and Q = Q1 built from -w"""
    for base, W in ((R2, W2), (R4, W4)):
        h = symplectic_hhs(base, W)
        assert not h.I
        assert set(h.Q) == {1}
        assert h.notes["I2"] == "not needed"
        report = check_hhs(h)
        assert report["ok"], report["residuals"]


@pytest.mark.parametrize("seed", range(3))
def test_random_symplectic_case_passes(seed):
    rng = random.Random(seed)
    W = random_symplectic_matrix(2, rng)
    assert check_hhs(symplectic_hhs(R4, W))["ok"]


def test_symplectic_case_in_dimension_six():
    W = random_symplectic_matrix(3, random.Random(7))
    assert check_hhs(symplectic_hhs(R6, W))["ok"]


def test_doubled_q_breaks_eq3():
    report = check_hhs(symplectic_hhs(R2, W2).scale_Q(2))
    assert report["eq1"] and report["eq2"]
    assert not report["eq3"]
    assert "(1,1)" in report["residuals"]["eq3"]


def test_complex_case_passes():
    h = hhs_from_gc(from_complex(complex_structure(R2, ROTATION)))
    assert h.notes["I2"] == "zero"
    assert not h.Q
    report = check_hhs(h)
    assert report["ok"], report["residuals"]


@pytest.mark.parametrize("seed", range(3))
def test_random_complex_structures_pass(seed):
    I = random_complex_structure(2, random.Random(seed))
    assert check_hhs(hhs_from_gc(from_complex(complex_structure(R4, I))))["ok"]


def test_abelian_complex_case():
    """zero anchor: eq2 is the Nijenhuis condition, eq3 is I^2 = -1"""
    A = abelian_algebroid(R2, 2)
    good = HHStructure(A, {1: complex_structure_tensor(A, ROTATION)})
    assert check_hhs(good)["ok"]
    bad = check_hhs(HHStructure(A, {1: complex_structure_tensor(A, [[0, -2], [1, 0]])}))
    assert bad["eq2"]
    assert not bad["eq3"]


def test_point_is_degenerate():
    report = check_hhs(HHStructure(abelian_algebroid(Chart(()), 0)))
    assert not report["eq3"]
    assert "degenerate" in report["residuals"]["eq3"]


def test_bidegrees_are_validated():
    A = poisson_algebroid(bivector_from_matrix(R2, W2.inv().tolist()))
    Q1 = homotopy_from_two_form(A, -W2)
    with pytest.raises(BidegreeError):
        HHStructure(A, I={1: Q1})
    with pytest.raises(BidegreeError):
        HHStructure(A, Q={2: Q1})


@pytest.mark.parametrize("seed", range(4))
def test_residuals_are_natural_under_linear_changes(seed):
    """conjugating the (1,1)-tensor by L conjugates the eq3 residual on T_X by L"""
    rng = random.Random(seed)
    A = abelian_algebroid(R2, 2)
    M = sympy.Matrix(2, 2, lambda i, j: rng.randint(-2, 2))
    while True:
        L = sympy.Matrix(2, 2, lambda i, j: rng.randint(-2, 2))
        if L.det() != 0:
            break
    R = tensor_blocks(hhs_residuals(HHStructure(A, {1: complex_structure_tensor(A, M)}))["eq3"], A)[0]
    moved = L * M * L.inv()
    R_moved = tensor_blocks(hhs_residuals(HHStructure(A, {1: complex_structure_tensor(A, moved)}))["eq3"], A)[0]
    assert R == M * M + sympy.eye(2)
    assert R_moved == L * R * L.inv()


def test_generic_constant_gc():
    """B-transform of a symplectic structure: all blocks nonzero"""
    W = W4
    P = W.inv()
    B = sympy.Matrix([[0, 1, 2, 0], [-1, 0, 0, 1], [-2, 0, 0, 1], [0, -1, -1, 0]])
    J = GCStructure(R4, I=complex_structure(R4, P * B), P=bivector_from_matrix(R4, P.tolist()),
                    Q=symplectic_form(R4, -W - B * P * B))
    assert gc_check(J)["ok"]
    h = hhs_from_gc(J)
    assert h.notes["I2"] in ("zero", "solved", "unsolved")
    if h.notes["I2"] == "solved" and 2 in h.I:
        assert h.I[2].bidegrees() == {(2, 1)}
    assert set(check_hhs(h)) >= {"eq1", "eq2", "eq3", "residuals"}


def test_non_gc_input_raises():
    J = from_symplectic(symplectic_form(R2, W2))
    with pytest.raises(IntegrabilityError):
        hhs_from_gc(GCStructure(R2, P=J.P * 2, Q=J.Q))


# -----------------------
# foliations
# -----------------------
def test_symplectic_foliation():
    for base, W in ((R2, W2), (R4, random_symplectic_matrix(2, random.Random(3)))):
        h = symplectic_hhs(base, W)
        report = check_foliation(foliation_from_hhs(h), h, samples=2)
        assert report["ok"], report["residuals"]


def test_complex_foliation():
    h = hhs_from_gc(from_complex(complex_structure(R2, ROTATION)))
    F = foliation_from_hhs(h)
    assert F.dims == (1, 1)
    report = check_foliation(F, h, samples=2)
    assert report["ok"], report["residuals"]


def test_perturbed_homotopy_breaks_the_square():
    h = symplectic_hhs(R2, W2)
    F = foliation_from_hhs(h).perturb(sympy.ones(2, 2))
    report = check_foliation(F, h, samples=1)
    assert report["chain_map"] and report["quasi_isomorphism"]
    assert not report["square"]
    assert not report["ok"]


def test_candidate_shape_must_match():
    h = symplectic_hhs(R2, W2)
    F = FoliationCandidate(sympy.zeros(1, 1), sympy.zeros(1, 1), sympy.zeros(1, 1), sympy.zeros(1, 1))
    with pytest.raises(ShapeMismatchError):
        check_foliation(F, h)


def test_bad_structure_constants():
    F = FoliationCandidate(sympy.zeros(1, 0), sympy.zeros(0, 0), sympy.eye(1), sympy.zeros(0, 1), [[[1]]])
    report = foliation_axioms(F)
    assert not report["ok"]
    assert report["antisymmetry"]


def test_mixed_structure_has_no_canonical_candidate():
    A = poisson_algebroid(bivector_from_matrix(R2, W2.inv().tolist()))
    h = HHStructure(A, {1: complex_structure_tensor(A, ROTATION)}, {1: homotopy_from_two_form(A, -W2)})
    with pytest.raises(HypothesisError):
        foliation_from_hhs(h)
