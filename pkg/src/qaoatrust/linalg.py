import logging

import numpy as np

logger = logging.getLogger(__name__)

JACOBI_TOL = 1e-10
JACOBI_MAX_SWEEPS = 100


def off_diagonal_norm(matrix: np.ndarray) -> float:
    """Frobenius norm of the off-diagonal part of a square matrix."""
    off = matrix - np.diag(np.diag(matrix))
    return float(np.sqrt(np.sum(off * off)))


def jacobi_eigh(
    matrix: np.ndarray,
    tol: float = JACOBI_TOL,
    max_sweeps: int = JACOBI_MAX_SWEEPS,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Eigen-decomposition of a real symmetric matrix by cyclic Jacobi rotations.

    Parameters
    ----------
    matrix : np.ndarray
        Square symmetric matrix.
    tol : float, optional
        Convergence threshold on the off-diagonal Frobenius norm.
    max_sweeps : int, optional
        Maximum number of full cyclic sweeps.

    Returns
    -------
    tuple[np.ndarray, np.ndarray]
        Eigenvalues in ascending order and the matching orthonormal
        eigenvectors as columns.

    Raises
    ------
    ValueError
        If the matrix is not square or not symmetric.
    """
    a = np.array(matrix, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"Expected a square matrix, got shape {a.shape}")
    if not np.allclose(a, a.T, atol=1e-12):
        raise ValueError("Matrix is not symmetric")

    n = a.shape[0]
    v = np.eye(n)
    for sweep in range(max_sweeps):
        if off_diagonal_norm(a) < tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                if tau >= 0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c

                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = a[q, p] = 0.0

                vec_p = v[:, p].copy()
                vec_q = v[:, q].copy()
                v[:, p] = c * vec_p - s * vec_q
                v[:, q] = s * vec_p + c * vec_q
        logger.debug("jacobi sweep %d off-norm %.3e", sweep, off_diagonal_norm(a))
    else:
        logger.warning(
            "Jacobi stopped after %d sweeps with off-norm %.3e",
            max_sweeps,
            off_diagonal_norm(a),
        )

    eigenvalues = np.diag(a).copy()
    order = np.argsort(eigenvalues, kind="stable")
    return eigenvalues[order], v[:, order]
