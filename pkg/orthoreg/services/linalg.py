"""Dense float64 kernels shared by the regularizer and the network engine.

Rows are feature detectors: row i of a weight matrix holds the weights into
neuron i. Every function validates its inputs and returns fresh arrays.
"""

import numpy as np
import numpy.typing as npt

from orthoreg.core.errors import DegenerateRowError, PreconditionError, ShapeError

Matrix = npt.NDArray[np.float64]
Vector = npt.NDArray[np.float64]

EPS = 1e-12


def as_matrix(data, name: str = "matrix") -> Matrix:
    """Coerce to a finite, non-empty 2-D float64 array."""
    m = np.asarray(data, dtype=np.float64)
    if m.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got {m.ndim}-D.")
    if m.shape[0] < 1 or m.shape[1] < 1:
        raise ShapeError(f"{name} must have at least one row and column.")
    if not np.all(np.isfinite(m)):
        raise PreconditionError(f"{name} contains non-finite entries.")
    return m


def as_vector(data, name: str = "vector") -> Vector:
    v = np.asarray(data, dtype=np.float64)
    if v.ndim != 1 or v.shape[0] < 1:
        raise ShapeError(f"{name} must be a non-empty 1-D array.")
    if not np.all(np.isfinite(v)):
        raise PreconditionError(f"{name} contains non-finite entries.")
    return v


def matmul(a, b) -> Matrix:
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(
            f"Cannot multiply a {a.shape} matrix by a {b.shape} matrix.",
            details={"a": list(a.shape), "b": list(b.shape)},
        )
    return a @ b


def gram(m) -> Matrix:
    """Inner products of every pair of rows, symmetric by construction."""
    m = as_matrix(m)
    g = m @ m.T
    return (g + g.T) / 2.0


def row_norms(m) -> Vector:
    return np.linalg.norm(as_matrix(m), axis=1)


def check_rows(m, eps: float = EPS) -> Vector:
    """Return the row norms, raising on the first row with norm <= eps."""
    norms = row_norms(m)
    bad = np.flatnonzero(norms <= eps)
    if bad.size:
        index = int(bad[0])
        raise DegenerateRowError(index, float(norms[index]))
    return norms


def normalize_rows(m, eps: float = EPS) -> tuple[Matrix, Vector]:
    """Split m into unit rows and the original row norms."""
    m = as_matrix(m)
    norms = check_rows(m, eps)
    return m / norms[:, None], norms


def scale_rows(m, scales) -> Matrix:
    m = as_matrix(m)
    scales = as_vector(scales, "scales")
    if scales.shape[0] != m.shape[0]:
        raise ShapeError(
            f"Got {scales.shape[0]} scales for a matrix with {m.shape[0]} rows."
        )
    return m * scales[:, None]


def zero_diag(m) -> Matrix:
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise ShapeError(f"zero_diag needs a square matrix, got {m.shape}.")
    out = m.copy()
    np.fill_diagonal(out, 0.0)
    return out


def require_unit_rows(m, tol: float = 1e-6) -> Matrix:
    """Raise unless every row has unit norm within tol."""
    m = as_matrix(m)
    norms = check_rows(m)
    deviation = np.abs(norms - 1.0)
    worst = int(np.argmax(deviation))
    if deviation[worst] > tol:
        raise PreconditionError(
            f"Row {worst} is not unit norm (norm={norms[worst]:.9f}).",
            details={"row": worst, "norm": float(norms[worst])},
        )
    return m
