"""
geometry/tori.py

Linear symplectic tori R^2n / Z^2n, coisotropic branes (C, F) with constant curvature,
the doubled torus T x T^v and the lift of a brane to a linear subtorus of it.

Curvatures are stored normalized as F / 2*pi*i, so every matrix here is rational.
A brane is given by an integral basis W (columns) of its tangent directions and
the matrix F of its curvature in the coordinates of that basis.
"""

import logging
import random
from dataclasses import dataclass
from functools import reduce
from typing import List, Optional, Sequence

import sympy

try:
    from sympy.core.intfunc import igcdex
except ImportError:  # sympy < 1.13
    from sympy.core.numbers import igcdex

from geometry import linalg
from geometry.errors import BranePreconditionError, DegenerateFormError, ShapeMismatchError

LOG = logging.getLogger("tori")
LOG.setLevel(logging.INFO)
if not LOG.handlers:
    handler = logging.StreamHandler()
    handler.setFormatter(logging.Formatter("%(asctime)s [%(levelname)s] %(message)s"))
    LOG.addHandler(handler)

HAT = "_hat"


def _is_antisymmetric(M: sympy.Matrix) -> bool:
    return M.rows == M.cols and linalg.is_zero(M + M.T)


def _is_integral(M: sympy.Matrix) -> bool:
    return all(sympy.sympify(v).is_integer for v in M)


def _clear_denominators(v: sympy.Matrix) -> sympy.Matrix:
    return v * reduce(sympy.ilcm, (sympy.Rational(x).q for x in v), 1)


def _integral_left_inverse(W: sympy.Matrix) -> Optional[sympy.Matrix]:
    """
    Integral L with L W = 1, or None when span(W) meets Z^m in a finer lattice than W spans.
    Unimodular column operations bring W^T to lower triangular H with W^T U = [H | 0].
    """
    k, m = W.cols, W.rows
    A = [[int(W[i, j]) for i in range(m)] for j in range(k)]
    U = [[int(i == j) for j in range(m)] for i in range(m)]

    def combine(rows, r, c, x, y, s, t):
        for row in rows:
            row[r], row[c] = x * row[r] + y * row[c], s * row[r] + t * row[c]

    for r in range(k):
        for c in range(r + 1, m):
            a, b = A[r][r], A[r][c]
            if b == 0:
                continue
            x, y, g = (int(v) for v in igcdex(a, b))
            combine(A, r, c, x, y, -b // g, a // g)
            combine(U, r, c, x, y, -b // g, a // g)
        if abs(A[r][r]) != 1:
            return None
    H = sympy.Matrix(k, k, lambda i, j: A[i][j])
    Uk = sympy.Matrix(m, k, lambda i, j: U[i][j])
    return H.T.inv() * Uk.T


def _column(values, size: int) -> sympy.Matrix:
    """Column vector from None, a flat list or a matrix."""
    if values is None:
        return sympy.zeros(size, 1)
    if isinstance(values, sympy.MatrixBase):
        return values.T if values.rows == 1 and size != 1 else sympy.Matrix(values)
    return sympy.Matrix([linalg.to_sympy_number(v) for v in values])


# -----------------------
# Tori and branes
# -----------------------
class SymplecticTorus:
    """R^2n / Z^2n with a constant symplectic matrix w[i][j] = w(∂_i, ∂_j)."""

    def __init__(self, omega, names: Optional[Sequence[str]] = None):
        self.omega = linalg.qmatrix(omega)
        if not _is_antisymmetric(self.omega) or self.omega.rows % 2:
            raise ShapeMismatchError("symplectic matrix must be antisymmetric of even size")
        if self.omega.rows == 0 or self.omega.det() == 0:
            raise DegenerateFormError("symplectic matrix is degenerate")
        self.names = tuple(names) if names else tuple(f"x{i + 1}" for i in range(self.omega.rows))
        if len(self.names) != self.omega.rows:
            raise ShapeMismatchError(f"{len(self.names)} names for a {self.omega.rows}-dimensional torus")

    @property
    def dimension(self) -> int:
        return self.omega.rows

    @property
    def n(self) -> int:
        return self.omega.rows // 2

    @property
    def inverse(self) -> sympy.Matrix:
        return self.omega.inv()

    @property
    def dual_names(self) -> tuple:
        return tuple(name + HAT for name in self.names)

    def render(self) -> dict:
        return {"names": list(self.names), "omega": linalg.render(self.omega)}


def standard_torus(n: int) -> SymplecticTorus:
    """w = dr1^dt1 + ... + drn^dtn on coordinates (r1, t1, ..., rn, tn)."""
    block = sympy.Matrix([[0, 1], [-1, 0]])
    names = [v for i in range(1, n + 1) for v in (f"r{i}", f"t{i}")]
    return SymplecticTorus(linalg.block_diag(*([block] * n)), names)


@dataclass
class CoisotropicBrane:
    """
    Linear subtorus C = offset + span(basis) with a U(1) connection of constant
    normalized curvature; curvature[i][j] = F(w_i, w_j) on the basis vectors.
    """

    basis: sympy.Matrix
    curvature: Optional[sympy.Matrix] = None
    offset: Optional[sympy.Matrix] = None
    name: str = "brane"

    def __post_init__(self):
        self.basis = linalg.qmatrix(self.basis)
        k = self.basis.cols
        self.curvature = sympy.zeros(k, k) if self.curvature is None else linalg.qmatrix(self.curvature, k, k)
        self.offset = _column(self.offset, self.basis.rows)
        if linalg.rank(self.basis) != k:
            raise BranePreconditionError(f"{self.name}: basis vectors are not independent")
        if not _is_integral(self.basis):
            raise BranePreconditionError(f"{self.name}: basis must be integral to descend to a subtorus")
        if self.curvature.shape != (k, k) or not _is_antisymmetric(self.curvature):
            raise BranePreconditionError(f"{self.name}: curvature must be an antisymmetric {k}x{k} matrix")
        if self.offset.shape != (self.basis.rows, 1):
            raise ShapeMismatchError(f"{self.name}: offset must have {self.basis.rows} entries")

    @classmethod
    def space_filling(cls, T: SymplecticTorus, curvature, name: str = "brane") -> "CoisotropicBrane":
        return cls(sympy.eye(T.dimension), curvature, name=name)

    @classmethod
    def from_ambient_curvature(cls, basis, curvature, offset=None, name: str = "brane") -> "CoisotropicBrane":
        """Restrict an ambient constant 2-form to span(basis)."""
        W = linalg.qmatrix(basis)
        return cls(W, W.T * linalg.qmatrix(curvature) * W, offset, name)

    @property
    def dimension(self) -> int:
        return self.basis.cols

    def render(self) -> dict:
        return {"name": self.name, "basis": linalg.render(self.basis),
                "curvature": linalg.render(self.curvature), "offset": linalg.render(self.offset.T)[0]}


def _check_ambient(T: SymplecticTorus, b: CoisotropicBrane):
    if b.basis.rows != T.dimension:
        raise ShapeMismatchError(f"{b.name} lives in dimension {b.basis.rows}, torus has {T.dimension}")


def is_coisotropic_brane(T: SymplecticTorus, b: CoisotropicBrane) -> dict:
    """
    (i) W is coisotropic, (ii) F vanishes along the characteristic leaves W^w,
    (iii) K = w^-1 F descends to W / W^w with K^2 = -1.
    w and F must be integral in lattice coordinates for (C, F) to live on the torus.
    """
    _check_ambient(T, b)
    W, F = b.basis, b.curvature
    perp = linalg.nullspace(W.T * T.omega)
    report = {
        "coisotropic": linalg.in_span(W, perp),
        "integral": _is_integral(T.omega) and _is_integral(F),
        "primitive": _integral_left_inverse(W) is not None,
        "leafwise_flat": False,
        "transverse_complex": False,
        "characteristic_dimension": perp.cols,
        "transverse_dimension": None,
        "transverse_structure": [],
        "residuals": {},
    }
    if not report["integral"]:
        report["residuals"]["integrality"] = {"omega": linalg.render(T.omega), "curvature": linalg.render(F)}
    if not report["coisotropic"]:
        report["residuals"]["coisotropic"] = linalg.render(perp)
        report["ok"] = False
        report["message"] = f"{b.name} is not coisotropic"
        return report

    leaves = linalg.solve_in_basis(W, perp)
    along = F * leaves
    report["leafwise_flat"] = linalg.is_zero(along)
    if not report["leafwise_flat"]:
        report["residuals"]["leafwise"] = linalg.render(along)

    Q = linalg.complement(leaves)
    omega_red = Q.T * W.T * T.omega * W * Q
    F_red = Q.T * F * Q
    K = omega_red.inv() * F_red if Q.cols else sympy.zeros(0, 0)
    square = K * K + sympy.eye(Q.cols)
    report["transverse_dimension"] = Q.cols
    report["transverse_structure"] = linalg.render(K)
    report["transverse_complex"] = linalg.is_zero(square)
    if not report["transverse_complex"]:
        report["residuals"]["square"] = linalg.render(square)

    checks = ("integral", "leafwise_flat", "transverse_complex")
    report["ok"] = all(report[k] for k in checks)
    report["message"] = f"{b.name} is a coisotropic brane" if report["ok"] else \
        "failed: " + ", ".join(k for k in checks if not report[k])
    LOG.debug("is_coisotropic_brane(%s): %s", b.name, report["message"])
    return report


# -----------------------
# Doubled torus
# -----------------------
@dataclass
class LinearSubtorus:
    """offset + span(basis) inside a torus with the given coordinate names."""

    basis: sympy.Matrix
    names: tuple
    offset: Optional[sympy.Matrix] = None
    label: str = ""

    def __post_init__(self):
        self.basis = linalg.qmatrix(self.basis)
        if self.offset is None:
            self.offset = sympy.zeros(self.basis.rows, 1)
        if self.basis.rows != len(self.names):
            raise ShapeMismatchError(f"{self.label or 'subtorus'}: basis rows do not match {len(self.names)} names")

    @property
    def dimension(self) -> int:
        return linalg.rank(self.basis)

    def render(self) -> dict:
        return {"label": self.label, "names": list(self.names), "dimension": self.dimension,
                "basis": linalg.render(self.basis), "offset": linalg.render(self.offset.T)[0]}


class DoubledTorus:
    """T x T^v with W = 1/2 w (+) -1/2 w^-1 and J_hat(v, xi) = (w^-1 xi, -w v)."""

    def __init__(self, torus: SymplecticTorus):
        self.torus = torus
        w, winv = torus.omega, torus.inverse
        n2 = torus.dimension
        self.omega = linalg.block_diag(w / 2, -winv / 2)
        self.complex_structure = linalg.stack([[sympy.zeros(n2, n2), winv], [-w, sympy.zeros(n2, n2)]])
        self.names = torus.names + torus.dual_names
        if not linalg.is_zero(self.complex_structure ** 2 + sympy.eye(2 * n2)):
            raise DegenerateFormError("canonical complex structure does not square to -1")

    @property
    def dimension(self) -> int:
        return self.omega.rows

    def compatibility(self) -> dict:
        """W(J., J.) - W, recorded rather than required."""
        J = self.complex_structure
        residual = J.T * self.omega * J - self.omega
        return {"preserved": linalg.is_zero(residual), "residual": linalg.render(residual),
                "metric": linalg.render(self.omega * J)}

    def render(self) -> dict:
        return {"names": list(self.names), "omega": linalg.render(self.omega),
                "complex_structure": linalg.render(self.complex_structure)}


def _check_double(L: LinearSubtorus, D: DoubledTorus):
    if L.basis.rows != D.dimension:
        raise ShapeMismatchError(f"{L.label or 'subtorus'} is not a subtorus of the {D.dimension}-dimensional double")


def is_lagrangian_in_double(L: LinearSubtorus, D: DoubledTorus) -> bool:
    _check_double(L, D)
    B = linalg.column_basis(L.basis)
    return B.cols == D.torus.dimension and linalg.is_zero(B.T * D.omega * B)


def is_complex_in_double(L: LinearSubtorus, D: DoubledTorus) -> bool:
    _check_double(L, D)
    return linalg.in_span(L.basis, D.complex_structure * L.basis)


def zero_section(T: SymplecticTorus) -> LinearSubtorus:
    n2 = T.dimension
    return LinearSubtorus(linalg.stack([[sympy.eye(n2)], [sympy.zeros(n2, n2)]]), T.names + T.dual_names,
                          label="T x {0}")


def dual_zero_section(T: SymplecticTorus) -> LinearSubtorus:
    n2 = T.dimension
    return LinearSubtorus(linalg.stack([[sympy.zeros(n2, n2)], [sympy.eye(n2)]]), T.names + T.dual_names,
                          label="{0} x T^v")


def graph_subtorus(T: SymplecticTorus, M) -> LinearSubtorus:
    """{(x, M x)}."""
    M = linalg.qmatrix(M)
    if M.shape != (T.dimension, T.dimension):
        raise ShapeMismatchError(f"graph map must be {T.dimension}x{T.dimension}")
    return LinearSubtorus(linalg.stack([[sympy.eye(T.dimension)], [M]]), T.names + T.dual_names, label="graph")


# -----------------------
# Lift
# -----------------------
def _require_brane(T: SymplecticTorus, b: CoisotropicBrane) -> dict:
    report = is_coisotropic_brane(T, b)
    if not report["ok"]:
        raise BranePreconditionError(f"cannot lift {b.name}: {report['message']}")
    return report


def _lift_rows(b: CoisotropicBrane) -> sympy.Matrix:
    """Coefficients of x_hat|W = -F_flat x: row j gives x_hat(w_j) in brane coordinates."""
    return -b.curvature.T


def lift(T: SymplecticTorus, b: CoisotropicBrane) -> LinearSubtorus:
    """
    L = {(x, x_hat) : x in C, x_hat|W = -F_flat (x - offset)}.
    Tangent space: (W c, xi) with W^T xi = -F^T c, xi free on the annihilator of W.
    """
    _check_ambient(T, b)
    _require_brane(T, b)
    W = b.basis
    particular = W * (W.T * W).inv() * _lift_rows(b)
    ann = linalg.annihilator(W)
    basis = linalg.stack([[W, sympy.zeros(W.rows, ann.cols)], [particular, ann]])
    offset = linalg.stack([[b.offset], [sympy.zeros(W.rows, 1)]])
    L = LinearSubtorus(basis, T.names + T.dual_names, offset, label=f"lift({b.name})")
    LOG.debug("lift(%s): dimension %d", b.name, L.dimension)
    return L


def lift_equations(T: SymplecticTorus, b: CoisotropicBrane) -> List[str]:
    """
    Defining equations of the lift in the coordinates of T x T^v, as strings "lhs = rhs".
    For a space-filling brane with W = 1 each line solves for one dual coordinate.
    Coefficients are integers when w, F and the offset are integral and W is primitive.
    """
    _check_ambient(T, b)
    W = b.basis
    x = sympy.Matrix(sympy.symbols(T.names))
    x_hat = sympy.Matrix(sympy.symbols(T.dual_names))
    rel = x - b.offset
    left = _integral_left_inverse(W)
    if left is None:
        left = (W.T * W).inv() * W.T
    params = left * rel
    lhs = W.T * x_hat
    rhs = _lift_rows(b) * params
    out = [f"{sympy.expand(l)} = {sympy.expand(r)}" for l, r in zip(lhs, rhs)]
    ann = linalg.annihilator(W)
    out += [f"{sympy.expand(e)} = 0" for e in _clear_denominators(ann).T * rel]
    return out


def lift_report(T: SymplecticTorus, b: CoisotropicBrane) -> dict:
    """Brane check, lift, and the Lagrangian / complex verdicts in the doubled torus."""
    brane = is_coisotropic_brane(T, b)
    report = {"brane": brane, "lift": None, "equations": [], "dimension": None, "lagrangian": False,
              "complex": False, "integral": brane["integral"]}
    D = DoubledTorus(T)
    report["compatibility"] = D.compatibility()
    if not brane["ok"]:
        report["ok"] = False
        report["message"] = f"precondition failed: {brane['message']}"
        return report
    L = lift(T, b)
    report["lift"] = L.render()
    report["equations"] = lift_equations(T, b)
    report["dimension"] = L.dimension
    report["lagrangian"] = is_lagrangian_in_double(L, D)
    report["complex"] = is_complex_in_double(L, D)
    space_filling = b.dimension == T.dimension
    report["ok"] = report["lagrangian"] and (report["complex"] or not space_filling)
    if report["ok"]:
        report["message"] = "lift is Lagrangian and complex" if report["complex"] else "lift is Lagrangian"
    else:
        missing = [k for k in ("lagrangian", "complex") if not report[k] and (k != "complex" or space_filling)]
        report["message"] = "lift failed: " + ", ".join(missing)
    LOG.info("lift_report(%s): %s", b.name, report["message"])
    return report


# -----------------------
# Random instances
# -----------------------
def _random_unimodular(size: int, rng: random.Random, steps: int = 0) -> sympy.Matrix:
    """Product of elementary row additions; integral with an integral inverse."""
    M = sympy.eye(size)
    if size < 2:
        return M * rng.choice([-1, 1])
    for _ in range(steps or 2 * size):
        i, j = rng.sample(range(size), 2)
        M[i, :] = M[i, :] + rng.choice([-1, 1]) * M[j, :]
    return M


def _random_shear(r: int, rng: random.Random) -> sympy.Matrix:
    """Symplectic matrix for [[0, 1], [-1, 0]] in (p, q) blocks."""
    S = sympy.Matrix(r, r, lambda i, j: 0)
    for i in range(r):
        for j in range(i, r):
            S[i, j] = S[j, i] = rng.randint(-1, 1)
    upper = linalg.stack([[sympy.eye(r), S], [sympy.zeros(r, r), sympy.eye(r)]])
    lower = linalg.stack([[sympy.eye(r), sympy.zeros(r, r)], [S.T, sympy.eye(r)]])
    return upper * lower


def random_brane(n: int, rng: random.Random, transverse: Optional[int] = None):
    """
    Random integral (torus, brane) in dimension 2n whose transverse space has dimension 2r, r even.
    Built in Darboux coordinates y (w0 = [[0, 1], [-1, 0]] in (p, q) blocks) and moved by a
    unimodular x = B y, so w, W and F stay integral and W stays primitive.
    """
    choices = [r for r in range(0, n + 1, 2)]
    r = rng.choice(choices) if transverse is None else transverse
    if r % 2 or r > n:
        raise BranePreconditionError(f"no transverse complex structure in real dimension {2 * r}")
    w0 = linalg.stack([[sympy.zeros(n, n), sympy.eye(n)], [-sympy.eye(n), sympy.zeros(n, n)]])
    columns = list(range(n)) + list(range(n, n + r))
    W0 = sympy.Matrix.hstack(*[sympy.eye(2 * n)[:, j] for j in columns])
    k = n + r
    F = sympy.zeros(k, k)
    if r:
        unit = sympy.Matrix([[0, 1], [-1, 0]])
        A = linalg.block_diag(*[unit * rng.choice([-1, 1]) for _ in range(r // 2)])
        K = linalg.stack([[sympy.zeros(r, r), A], [-A.inv(), sympy.zeros(r, r)]])
        S = _random_shear(r, rng)
        w_red = linalg.stack([[sympy.zeros(r, r), sympy.eye(r)], [-sympy.eye(r), sympy.zeros(r, r)]])
        F_red = S.T * w_red * K * S
        reduced = list(range(r)) + list(range(n, n + r))
        for a, i in enumerate(reduced):
            for c, j in enumerate(reduced):
                F[i, j] = F_red[a, c]
    B = _random_unimodular(2 * n, rng)
    G = _random_unimodular(k, rng)
    Binv = B.inv()
    torus = SymplecticTorus(Binv.T * w0 * Binv)
    offset = sympy.Matrix([rng.randint(-2, 2) for _ in range(2 * n)])
    brane = CoisotropicBrane(B * W0 * G, G.T * F * G, offset, name=f"random(n={n}, r={r})")
    return torus, brane
