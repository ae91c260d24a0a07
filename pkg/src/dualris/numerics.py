"""Dense complex linear-algebra kernel used by the optimization modules.

Everything here is a pure function of ndarray inputs, so concurrent callers
never contend. Tolerances live in module constants so library code and tests
share one source of truth.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, NumericalError, ShapeError

# Largest elementwise |a - a^H| accepted before an input is rejected as
# non-Hermitian. Accepted inputs are symmetrized to (a + a^H)/2 before use.
HERMITIAN_TOL = 1e-10
# Relative Frobenius residual allowed for T diag(w) T^H reconstruction.
EIG_RECONSTRUCTION_TOL = 1e-9
# Largest elementwise |T^H T - I| for the eigenvector matrix.
UNITARITY_TOL = 1e-10
# Smallest eigenvalue treated as positive definite by solve_hpd.
HPD_MIN_EIG = 1e-12
# Relative residual ||a x - b||_F / ||b||_F guaranteed by solve_hpd.
SOLVE_RESIDUAL_TOL = 1e-9


@dataclass(frozen=True)
class HermitianEig:
    """Decomposition a = T diag(w) T^H with w real ascending and T unitary."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def _as_matrix(a, name="matrix"):
    arr = np.asarray(a, dtype=np.complex128)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got ndim={arr.ndim}")
    if not np.all(np.isfinite(arr)):
        raise NumericalError(f"{name} contains non-finite entries")
    return arr


def _require_square(a, name="matrix"):
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {a.shape}")


def hermitian_eig(a):
    """Eigendecompose a Hermitian matrix, eigenvalues sorted ascending.

    The input is checked against HERMITIAN_TOL and symmetrized before the
    factorization so tiny asymmetries from accumulated rounding cannot leak
    into the spectrum.
    """
    a = _as_matrix(a)
    _require_square(a)
    deviation = float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0
    if deviation > HERMITIAN_TOL:
        raise ShapeError(f"matrix deviates from Hermitian by {deviation:.3e}")
    sym = 0.5 * (a + a.conj().T)
    w, t = np.linalg.eigh(sym)
    return HermitianEig(eigenvalues=w, eigenvectors=t)


def hadamard(a, b):
    """Elementwise product of two equally shaped matrices."""
    a = _as_matrix(a, "a")
    b = _as_matrix(b, "b")
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    return a * b


def trace(a):
    """Trace of a square matrix as a complex scalar."""
    a = _as_matrix(a)
    _require_square(a)
    return complex(np.trace(a))


def solve_hpd(a, b):
    """Solve a x = b for Hermitian positive definite a.

    Positive definiteness is verified through the spectrum; failures raise
    NumericalError carrying the offending minimum eigenvalue rather than
    returning a silently useless solution.
    """
    a = _as_matrix(a, "a")
    _require_square(a, "a")
    b_arr = np.asarray(b, dtype=np.complex128)
    if b_arr.ndim not in (1, 2):
        raise DimensionError(f"b must be 1-D or 2-D, got ndim={b_arr.ndim}")
    if not np.all(np.isfinite(b_arr)):
        raise NumericalError("b contains non-finite entries")
    if b_arr.shape[0] != a.shape[0]:
        raise DimensionError(
            f"incompatible shapes: a is {a.shape}, b has leading dim {b_arr.shape[0]}"
        )
    sym = 0.5 * (a + a.conj().T)
    min_eig = float(np.linalg.eigvalsh(sym)[0])
    if min_eig <= HPD_MIN_EIG:
        raise NumericalError(
            f"matrix is not positive definite (min eigenvalue {min_eig:.3e})",
            min_eigenvalue=min_eig,
        )
    return np.linalg.solve(sym, b_arr)
