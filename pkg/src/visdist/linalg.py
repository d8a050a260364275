"""Dense symmetric eigensolver: cyclic Jacobi with threshold sweeps.

Adequate at desk scale (matrices up to a few thousand) and dependency
free.  Sweeps rotate away every off-diagonal element in turn until the
off-diagonal Frobenius norm drops below 1e-10 or a sweep performs no
rotation (machine-precision convergence for matrices of large norm).
"""

from __future__ import annotations

import numpy as np

OFF_DIAGONAL_TOLERANCE = 1e-10
MAX_SWEEPS = 60


def _off_diagonal_norm(a: np.ndarray) -> float:
    off = a - np.diag(np.diag(a))
    return float(np.sqrt((off * off).sum()))


def jacobi_eigh(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and orthonormal eigenvector columns.

    The input must be symmetric; symmetry is enforced by averaging with the
    transpose so callers can pass matrices assembled from condensed storage.
    """
    a = np.asarray(matrix, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    n = a.shape[0]
    a = (a + a.T) / 2.0
    v = np.eye(n)
    if n == 1:
        return np.diag(a).copy(), v

    for _ in range(MAX_SWEEPS):
        if _off_diagonal_norm(a) < OFF_DIAGONAL_TOLERANCE:
            break
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                # skip rotations that cannot change anything at double precision
                if abs(apq) < 1e-18 * max(1.0, abs(a[p, p]) + abs(a[q, q])):
                    continue
                rotated = True
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c

                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                a[p, q] = 0.0
                a[q, p] = 0.0

                vec_p = v[:, p].copy()
                vec_q = v[:, q].copy()
                v[:, p] = c * vec_p - s * vec_q
                v[:, q] = s * vec_p + c * vec_q
        if not rotated:
            break

    eigenvalues = np.diag(a).copy()
    order = np.argsort(eigenvalues, kind="stable")
    return eigenvalues[order], v[:, order]
