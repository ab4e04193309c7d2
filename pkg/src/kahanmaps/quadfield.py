"""Quadratic vector fields and their Kahan discretization.

A quadratic vector field on R^n is

    xdot_i = sum_jk quad[i,j,k] x_j x_k + sum_j lin[i,j] x_j + const[i]

with ``quad`` symmetric in its last two axes.  The Kahan map replaces the
time derivative by a symmetric difference across one step of size 2*eps and
every quadratic monomial by its polarization in (x, x~):

    (x~ - x) / (2*eps) = Q(x, x~) + B (x + x~) / 2 + c

This is linear in x~, so the update solves a single n x n system with matrix
I - eps*f'(x), where f' is the Jacobian of the continuous field.  The map is
birational; it has a pole wherever det(I - eps*f'(x)) vanishes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "SingularStepError",
    "QuadraticVectorField",
    "KahanStepResult",
    "evaluate_field",
    "polarize_eval",
    "jacobian_field",
    "delta",
    "kahan_step",
    "map_jacobian",
    "field_to_json",
    "field_from_json",
]

# Pole detection: |det(I - eps*f'(x))| below this times a conditioning factor
# counts as singular rather than merely small.
SINGULAR_DET_FACTOR = 1e-13


class SingularStepError(RuntimeError):
    """Raised when the step matrix I - eps*f'(x) is numerically singular."""


@dataclass(frozen=True, eq=False)
class QuadraticVectorField:
    """Coefficient arrays of a quadratic vector field on R^n.

    quad: (n, n, n), symmetric in the last two axes
    lin: (n, n)
    const: (n,)

    All entries must be finite; symmetry and shapes are validated on
    construction and the arrays are frozen read-only.
    """

    quad: np.ndarray
    lin: np.ndarray
    const: np.ndarray

    def __post_init__(self) -> None:
        const = np.array(self.const, dtype=float)
        if const.ndim != 1:
            raise ValueError("const must be a one-dimensional array")
        n = const.shape[0]
        quad = np.array(self.quad, dtype=float)
        lin = np.array(self.lin, dtype=float)
        if quad.shape != (n, n, n):
            raise ValueError(f"quad must have shape {(n, n, n)}, got {quad.shape}")
        if lin.shape != (n, n):
            raise ValueError(f"lin must have shape {(n, n)}, got {lin.shape}")
        for name, arr in (("quad", quad), ("lin", lin), ("const", const)):
            if not np.isfinite(arr).all():
                raise ValueError(f"{name} contains non-finite entries")
        if not np.array_equal(quad, quad.swapaxes(1, 2)):
            raise ValueError("quad must be symmetric in its last two axes")
        for arr in (quad, lin, const):
            arr.setflags(write=False)
        object.__setattr__(self, "quad", quad)
        object.__setattr__(self, "lin", lin)
        object.__setattr__(self, "const", const)

    @property
    def dim(self) -> int:
        return self.const.shape[0]


class KahanStepResult(NamedTuple):
    """One Kahan step: the new state, det(I - eps*f'(x)), and the max-norm
    defect of the polarized defining equation at (x, x~)."""

    next: np.ndarray
    delta: float
    residual: float


def evaluate_field(field: QuadraticVectorField, x: np.ndarray) -> np.ndarray:
    """f(x) = Q(x) + B x + c."""
    x = np.asarray(x, dtype=float)
    return np.einsum("ijk,j,k->i", field.quad, x, x) + field.lin @ x + field.const


def polarize_eval(field: QuadraticVectorField, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Symmetric bilinear extension Q(x, y) + B (x + y)/2 + c.

    Q(x, y) = (Q(x+y) - Q(x) - Q(y)) / 2; with a symmetric coefficient
    tensor this is the plain bilinear contraction, which is what is
    evaluated (no cancellation).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return (
        np.einsum("ijk,j,k->i", field.quad, x, y)
        + 0.5 * (field.lin @ (x + y))
        + field.const
    )


def jacobian_field(field: QuadraticVectorField, x: np.ndarray) -> np.ndarray:
    """Jacobian of the continuous field: f'(x)[i,j] = 2 sum_k quad[i,j,k] x_k + lin[i,j]."""
    x = np.asarray(x, dtype=float)
    return 2.0 * np.einsum("ijk,k->ij", field.quad, x) + field.lin


def _step_matrix(field: QuadraticVectorField, x: np.ndarray, eps: float):
    jac = jacobian_field(field, x)
    mat = np.eye(field.dim) - eps * jac
    det = float(np.linalg.det(mat))
    # Scale-aware singularity threshold; the power n tracks how the
    # determinant magnitude grows with the matrix norm.
    threshold = SINGULAR_DET_FACTOR * (1.0 + np.linalg.norm(eps * jac, np.inf)) ** field.dim
    return mat, det, threshold


def delta(field: QuadraticVectorField, x: np.ndarray, eps: float) -> float:
    """det(I - eps*f'(x)), the denominator polynomial of the Kahan map."""
    _, det, _ = _step_matrix(field, x, eps)
    return det


def kahan_step(field: QuadraticVectorField, x: np.ndarray, eps: float) -> KahanStepResult:
    """Advance x by one Kahan step of size 2*eps (time step 2*eps of the flow).

    Solves (I - eps*f'(x)) (x~ - x) = 2*eps*f(x) by LU with partial
    pivoting and reports the defect of the polarized defining equation.
    Raises SingularStepError at a pole of the map.
    """
    x = np.asarray(x, dtype=float)
    mat, det, threshold = _step_matrix(field, x, eps)
    if abs(det) < threshold:
        raise SingularStepError(
            f"|det(I - eps*f'(x))| = {abs(det):.3e} below threshold {threshold:.3e}"
        )
    x_next = x + np.linalg.solve(mat, 2.0 * eps * evaluate_field(field, x))
    defect = x_next - x - 2.0 * eps * polarize_eval(field, x, x_next)
    return KahanStepResult(
        next=x_next, delta=det, residual=float(np.max(np.abs(defect)))
    )


def map_jacobian(field: QuadraticVectorField, x: np.ndarray, eps: float) -> np.ndarray:
    """Jacobian of the Kahan map, (I - eps*f'(x))^{-1} (I + eps*f'(x~))."""
    x = np.asarray(x, dtype=float)
    x_next = kahan_step(field, x, eps).next
    eye = np.eye(field.dim)
    return np.linalg.solve(
        eye - eps * jacobian_field(field, x),
        eye + eps * jacobian_field(field, x_next),
    )


def field_to_json(field: QuadraticVectorField) -> dict:
    """Plain-JSON document with keys dim, quad, lin, const."""
    return {
        "dim": field.dim,
        "quad": field.quad.tolist(),
        "lin": field.lin.tolist(),
        "const": field.const.tolist(),
    }


def field_from_json(doc: dict) -> QuadraticVectorField:
    """Inverse of field_to_json; validates shapes, symmetry, and finiteness."""
    for key in ("dim", "quad", "lin", "const"):
        if key not in doc:
            raise ValueError(f"field document is missing key '{key}'")
    try:
        field = QuadraticVectorField(
            quad=np.asarray(doc["quad"], dtype=float),
            lin=np.asarray(doc["lin"], dtype=float),
            const=np.asarray(doc["const"], dtype=float),
        )
    except (TypeError, ValueError) as exc:
        raise ValueError(f"malformed field document: {exc}") from exc
    if field.dim != doc["dim"]:
        raise ValueError(
            f"key 'dim' is {doc['dim']} but coefficient arrays have dimension {field.dim}"
        )
    return field
