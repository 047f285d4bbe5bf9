# --- Core Linear Algebra Module ---
"""
Small dense linear algebra for fixed low dimension: weighted norms, the
regularized Gram state with rank-1 updates, cyclic Jacobi eigensolves and
inverse square roots.
"""

from typing import NamedTuple, Tuple

import numpy as np

from config import INVERSE_REFRESH_INTERVAL, JACOBI_MAX_SWEEPS, JACOBI_TOLERANCE, SYMMETRY_TOLERANCE
from validation_utils import NumericDomainError

_EPS = float(np.finfo(float).eps)
_THETA_LIMIT = 1e150


class GramState(NamedTuple):
    """Regularized Gram matrix A = λI + Σ xxᵀ with its maintained inverse"""
    A: np.ndarray
    A_inv: np.ndarray
    b: np.ndarray
    mu_hat: np.ndarray
    lam: float
    n_updates: int

    @property
    def dim(self) -> int:
        return self.A.shape[0]


def new_gram_state(dim: int, lam: float) -> GramState:
    """Empty Gram state λI with zero loss-weighted sum"""
    if lam <= 0:
        raise NumericDomainError(f"ridge parameter must be > 0, got {lam}")
    return GramState(
        A=lam * np.eye(dim),
        A_inv=np.eye(dim) / lam,
        b=np.zeros(dim),
        mu_hat=np.zeros(dim),
        lam=float(lam),
        n_updates=0,
    )


def is_symmetric(M: np.ndarray, tol: float = SYMMETRY_TOLERANCE) -> bool:
    M = np.asarray(M, dtype=float)
    return M.ndim == 2 and M.shape[0] == M.shape[1] and bool(np.max(np.abs(M - M.T), initial=0.0) <= tol)


def weighted_norm(v: np.ndarray, M: np.ndarray) -> float:
    """√(vᵀMv) for a symmetric positive definite M"""
    v = np.asarray(v, dtype=float)
    quad = float(v @ M @ v)
    if quad < 0.0:
        # roundoff on a PSD form can dip just below zero
        scale = float(np.abs(M).max(initial=0.0) * (v @ v))
        if quad < -1e-12 * max(scale, 1.0):
            raise NumericDomainError(f"negative quadratic form {quad:.3e}: matrix is not positive definite")
        return 0.0
    return float(np.sqrt(quad))


def rank1_update(state: GramState, x: np.ndarray, loss: float) -> GramState:
    """Add one observation (x, loss) to the Gram state"""
    x = np.asarray(x, dtype=float)
    A = state.A + np.outer(x, x)
    b = state.b + loss * x
    n_updates = state.n_updates + 1
    if n_updates % INVERSE_REFRESH_INTERVAL == 0:
        A_inv = np.linalg.inv(A)
        A_inv = 0.5 * (A_inv + A_inv.T)
    else:
        # Sherman-Morrison: (A + xxᵀ)⁻¹ = A⁻¹ − A⁻¹xxᵀA⁻¹ / (1 + xᵀA⁻¹x)
        Ax = state.A_inv @ x
        A_inv = state.A_inv - np.outer(Ax, Ax) / (1.0 + float(x @ Ax))
    mu_hat = A_inv @ b
    return GramState(A=A, A_inv=A_inv, b=b, mu_hat=mu_hat, lam=state.lam, n_updates=n_updates)


def refresh_inverse(state: GramState) -> GramState:
    """Recompute the inverse and estimate from scratch"""
    A_inv = np.linalg.inv(state.A)
    A_inv = 0.5 * (A_inv + A_inv.T)
    return state._replace(A_inv=A_inv, mu_hat=A_inv @ state.b)


def _off_diagonal_norm(M: np.ndarray) -> float:
    return float(np.linalg.norm(M - np.diag(np.diag(M))))


def jacobi_eigh(M: np.ndarray,
                tol: float = JACOBI_TOLERANCE,
                max_sweeps: int = JACOBI_MAX_SWEEPS) -> Tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and column eigenvectors of a symmetric matrix by cyclic Jacobi rotations.

    Stops once the off-diagonal Frobenius norm falls below tol·max(1, ‖M‖_F)
    or after max_sweeps sweeps.
    """
    A = np.array(M, dtype=float, copy=True)
    n = A.shape[0]
    V = np.eye(n)
    threshold = tol * max(1.0, float(np.linalg.norm(A)))

    for _ in range(max_sweeps):
        if _off_diagonal_norm(A) < threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= _EPS * np.sqrt(abs(A[p, p] * A[q, q])):
                    A[p, q] = A[q, p] = 0.0
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                if theta == 0.0:
                    t = 1.0
                elif abs(theta) > _THETA_LIMIT:
                    # θ² would overflow
                    t = 1.0 / (2.0 * theta)
                else:
                    t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c

                col_p = A[:, p].copy()
                col_q = A[:, q].copy()
                A[:, p] = c * col_p - s * col_q
                A[:, q] = s * col_p + c * col_q
                row_p = A[p, :].copy()
                row_q = A[q, :].copy()
                A[p, :] = c * row_p - s * row_q
                A[q, :] = s * row_p + c * row_q
                A[p, q] = A[q, p] = 0.0

                v_p = V[:, p].copy()
                v_q = V[:, q].copy()
                V[:, p] = c * v_p - s * v_q
                V[:, q] = s * v_p + c * v_q

    eigenvalues = np.diag(A).copy()
    order = np.argsort(eigenvalues, kind="stable")
    return eigenvalues[order], V[:, order]


def min_eigenvalue(M: np.ndarray) -> float:
    eigenvalues, _ = jacobi_eigh(M)
    return float(eigenvalues[0])


def max_eigenvalue(M: np.ndarray) -> float:
    eigenvalues, _ = jacobi_eigh(M)
    return float(eigenvalues[-1])


def spectral_norm(M: np.ndarray) -> float:
    """Largest singular value, via the eigenvalues of MᵀM"""
    M = np.asarray(M, dtype=float)
    eigenvalues, _ = jacobi_eigh(M.T @ M)
    return float(np.sqrt(max(eigenvalues[-1], 0.0)))


def inv_sqrt(M: np.ndarray) -> np.ndarray:
    """M^{-1/2} for a symmetric positive definite M"""
    eigenvalues, V = jacobi_eigh(M)
    if eigenvalues[0] <= 0.0:
        raise NumericDomainError(f"inv_sqrt needs a positive definite matrix, smallest eigenvalue {eigenvalues[0]:.3e}")
    root = V @ np.diag(1.0 / np.sqrt(eigenvalues)) @ V.T
    return 0.5 * (root + root.T)


def sqrt_psd(M: np.ndarray) -> np.ndarray:
    """M^{1/2} for a symmetric positive semidefinite M"""
    eigenvalues, V = jacobi_eigh(M)
    root = V @ np.diag(np.sqrt(np.clip(eigenvalues, 0.0, None))) @ V.T
    return 0.5 * (root + root.T)
