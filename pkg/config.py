# config.py
"""
Global configuration for the gcstack verification engine.
Adjust only if needed.
Defaults can be overridden from a local .env file (GCSTACK_* variables).
"""

import json
import os
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()

# -----------------------
# Sampling + determinism
# -----------------------
DEFAULT_SEED = int(os.getenv("GCSTACK_SEED", "20240229"))
DEFAULT_SAMPLES = int(os.getenv("GCSTACK_SAMPLES", "5"))   # fiberwise sample points per check
SAMPLE_RANGE = {
    "numerator": 9,          # sample numerators drawn from [-9, 9]
    "denominator": 5,        # sample denominators drawn from [1, 5]
}

# -----------------------
# Engine limits
# -----------------------
DIMENSION_CAP = int(os.getenv("GCSTACK_DIMENSION_CAP", "8"))   # even coordinates per chart
MAX_WORKERS = int(os.getenv("GCSTACK_WORKERS", "4"))           # task pool size

# -----------------------
# Schemas
# -----------------------
SCENE_SCHEMA = 1             # accepted "schema" value of scene files
REPORT_SCHEMA = 1            # "schema" value written into json reports
TOOL_NAME = "gcstack"
TOOL_VERSION = "0.3.0"

# -----------------------
# Output
# -----------------------
FIXTURES_FOLDER = Path(__file__).resolve().parent / "fixtures"

# -----------------------
# Sign and normalization conventions
# -----------------------
# Every report embeds this table. Only keys in CONFIGURABLE may be changed
# through --convention <path>.
CONVENTIONS = {
    "koszul_sign": {
        "value": "total_degree",
        "doc": "moving a past b costs (-1)^(|a||b|) with total degrees; odd generators ordered by chart declaration",
    },
    "form_degree": {
        "value": "d<z> has degree |z|+1",
        "doc": "form symbols dz are odd over even z and even over odd z",
    },
    "exterior_d": {
        "value": "sum_A dz^A * dL/dz^A",
        "doc": "de Rham differential acts from the left",
    },
    "interior": {
        "value": "i_K = sum_A K^A * dL/d(dz^A)",
        "doc": "insertion of a vector-valued form, a derivation of degree |K|-1",
    },
    "lie_derivative": {
        "value": "L_K = i_K d - (-1)^(|K|-1) d i_K",
        "doc": "reduces to L_v = i_v d + d i_v for vector fields",
    },
    "fn_bracket": {
        "value": "[K,L]^A = L_K(L^A) - (-1)^(|K||L|) L_L(K^A)",
        "doc": "so that [J,J]_FN = 2 N_J for (1,1)-tensors",
    },
    "nr_bracket": {
        "value": "[K,L]_NR = i_K L - (-1)^(|K||L|) i_L K",
        "doc": "total degrees; for (1,1)-tensors i_I L = L o I",
    },
    "nr_normalization": {
        "value": 1,
        "doc": "scalar multiplying every NR bracket",
    },
    "identity_bracket": {
        "value": 2,
        "doc": "[id,id]_NR = identity_bracket * id under the table above",
    },
    "evaluation": {
        "value": "K(u,v) = i_v i_u K",
        "doc": "argument order when evaluating forms on vector fields",
    },
    "schouten": {
        "value": "[P,Q] = sum_i (P dR/dtheta_i)(dL/dx^i Q) - (P dR/dx^i)(dL/dtheta_i Q)",
        "doc": "[v,w] is the Lie bracket and [v,f] = v(f)",
    },
    "contraction": {
        "value": "P#(xi) = i_xi P = sum_i xi_i dL/dtheta_i P",
        "doc": "for P = dx^dy: P#(dx) = +dy; P(a,b) = i_b i_a P; {f,g} = P(df,dg)",
    },
    "bivector_matrix": {
        "value": "P_mat[i][j] = P(dx^i, dx^j)",
        "doc": "matrix of a bivector; 2-forms use w_mat[i][j] = w(d_i, d_j)",
    },
    "symplectic_inverse": {
        "value": "P_mat = w_mat^-1",
        "doc": "P# o w_flat = 1 with w_flat(v) = i_v w",
    },
    "gc_action": {
        "value": "J(v,xi) = (-I v + P#xi, Q_flat v + tI xi)",
        "doc": "Q_flat(v) = i_v Q; (tI xi) = xi o I",
    },
    "pairing": {
        "value": "<v+xi, w+eta> = (xi(w) + eta(v)) / 2",
        "doc": "natural pairing on T + T*",
    },
    "dorfman": {
        "value": "(v+xi)o(w+eta) = [v,w] + L_v eta - i_w d xi + i_v i_w H",
        "doc": "Courant bracket is the antisymmetrization (aob - boa)/2",
    },
    "ce_differential": {
        "value": "delta = xi^a rho^i_a d/dx^i - 1/2 xi^a xi^b c^k_ab d/dxi^k",
        "doc": "homological vector field on A[1]",
    },
    "shift_sign": {
        "value": -1,
        "doc": "fibre components of a homotopy map T -> A stored with this factor",
    },
    "delta_I_reading": {
        "value": "delta_plus_fn",
        "doc": "delta_I = delta + [I, -]_FN; 'delta' drops the FN term",
    },
    "eq3_rhs_scale": {
        "value": -1,
        "doc": "right-hand side of the square equation is eq3_rhs_scale * id",
    },
    "dual_complex": {
        "value": "d_dual^k = -(-1)^k (d^(-k-1))^T",
        "doc": "(C^v)^k = (C^(-k))*",
    },
    "shift": {
        "value": "C[n]^k = C^(k+n), d -> (-1)^n d",
        "doc": "shift of a complex",
    },
    "fiber": {
        "value": "fib(f)^k = P^k + Q^(k-1), d(p,q) = (dp, f(p) - dq)",
        "doc": "derived fibre model of a map f: P -> Q",
    },
    "lift_sign": {
        "value": "x_hat|W = -F_flat x",
        "doc": "brane lift into the doubled torus",
    },
    "doubled_complex_structure": {
        "value": "J_hat(v,xi) = (w^-1 xi, -w v)",
        "doc": "canonical complex structure on T x T^v",
    },
}

CONFIGURABLE = ("nr_normalization", "eq3_rhs_scale", "delta_I_reading")


def convention(key: str):
    return CONVENTIONS[key]["value"]


def load_conventions(path=None) -> dict:
    """
    Return a copy of CONVENTIONS with user overrides from a json file applied.
    The file is a flat {key: value} map restricted to CONFIGURABLE keys.
    """
    from geometry.errors import ConventionError

    table = {k: dict(v) for k, v in CONVENTIONS.items()}
    if not path:
        return table
    try:
        overrides = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as e:
        raise ConventionError(f"cannot read convention file {path}: {e}") from e
    return apply_conventions(table, overrides, source=str(path))


def apply_conventions(table: dict, overrides, source: str = "overrides") -> dict:
    """Copy of table with a flat {key: value} map applied; only CONFIGURABLE keys may change."""
    from geometry.errors import ConventionError

    if not isinstance(overrides, dict):
        raise ConventionError(f"{source} must hold a json object")
    out = {k: dict(v) for k, v in table.items()}
    for key, value in overrides.items():
        if key not in CONFIGURABLE:
            raise ConventionError(f"convention '{key}' is not configurable")
        out[key]["value"] = value
    return out
