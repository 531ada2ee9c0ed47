"""Dense complex matrix helpers and the unitary eigensolver.

Matrices are plain ``numpy.ndarray`` objects of dtype ``complex128``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ContractViolation, ShapeError

DEFAULT_TOL = 1e-8

_POWER_MAXITER = 200
_POWER_RTOL = 1e-10


def as_matrix(a, *, square=False) -> np.ndarray:
    """Coerce ``a`` to a finite 2-D complex array."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2:
        raise ShapeError(f"expected a 2-D array, got shape {m.shape}")
    if square and m.shape[0] != m.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ShapeError("matrix has non-finite entries")
    return m


def matmul(a, b) -> np.ndarray:
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    if a.ndim != 2 or b.ndim not in (1, 2) or a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def adjoint(a) -> np.ndarray:
    return np.conj(np.asarray(a, dtype=np.complex128)).T


def frob_norm(a) -> float:
    return float(np.linalg.norm(np.asarray(a, dtype=np.complex128)))


def op_norm_estimate(a) -> float:
    """Largest singular value of a square matrix.

    Power iteration on ``A^* A`` from the all-ones vector (deterministic),
    at most 200 steps, stopping once the relative change drops below
    1e-10.  Power iteration can stall on a start vector orthogonal to the
    top singular subspace or on a tiny spectral gap, so the iterate is
    checked against LAPACK's 2-norm and replaced by it when the two
    disagree by more than 1e-8 relative.
    """
    a = as_matrix(a, square=True)
    if not np.any(a):
        return 0.0
    gram = a.conj().T @ a
    v = np.ones(a.shape[1], dtype=np.complex128)
    v /= np.linalg.norm(v)
    sigma2 = 0.0
    for _ in range(_POWER_MAXITER):
        w = gram @ v
        nw = np.linalg.norm(w)
        if nw == 0.0:
            break
        v = w / nw
        new = float(np.real(np.vdot(v, gram @ v)))
        done = abs(new - sigma2) <= _POWER_RTOL * abs(new)
        sigma2 = new
        if done:
            break
    estimate = float(np.sqrt(max(sigma2, 0.0)))
    exact = float(np.linalg.norm(a, 2))
    if abs(estimate - exact) > 1e-8 * exact:
        return exact
    return estimate


_QUARTER_TURNS = {0.0: 1.0 + 0j, 0.25: 1j, 0.5: -1.0 + 0j, 0.75: -1j}


def cis(phases):
    """``exp(2 pi i phase)`` with exact values on the quarter turns."""
    ph = np.asarray(phases, dtype=float)
    z = np.atleast_1d(np.exp(2j * np.pi * ph))
    for i, p in enumerate(np.atleast_1d(ph)):
        if p in _QUARTER_TURNS:
            z[i] = _QUARTER_TURNS[p]
    return complex(z[0]) if ph.ndim == 0 else z


def unitarity_defect(u) -> float:
    u = as_matrix(u, square=True)
    return frob_norm(u.conj().T @ u - np.eye(u.shape[0]))


def is_unitary(u, tol: float = DEFAULT_TOL) -> bool:
    return unitarity_defect(u) <= tol


@dataclass(frozen=True)
class EigenPairs:
    """Eigenvalues on the unit circle and orthonormal eigenvector columns."""

    values: np.ndarray
    vectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.vectors.shape[0]


def eig_unitary(u, tol: float = DEFAULT_TOL) -> EigenPairs:
    """Complete eigendecomposition of a unitary matrix.

    Uses the complex Schur form: for a normal matrix the triangular factor
    is diagonal, and the Schur vectors stay orthonormal even inside
    degenerate eigenspaces, which a general eigensolver does not promise.

    Raises
    ------
    ContractViolation
        If ``||U^* U - I||_F > tol`` (the defect is attached as
        ``residual``) or the reconstruction misses by more than ``10*tol``.
    """
    u = as_matrix(u, square=True)
    defect = unitarity_defect(u)
    if defect > tol:
        raise ContractViolation(
            f"matrix is not unitary: ||U*U - I||_F = {defect:.3e} > {tol:.1e}",
            residual=defect,
        )
    t, z = scipy.linalg.schur(u, output="complex")
    values = np.diag(t).copy()
    values /= np.abs(values)
    recon = frob_norm(z @ np.diag(values) @ z.conj().T - u)
    if recon > 10 * tol:
        raise ContractViolation(
            f"Schur reconstruction residual {recon:.3e} exceeds {10 * tol:.1e}",
            residual=recon,
        )
    return EigenPairs(values=values, vectors=z)
