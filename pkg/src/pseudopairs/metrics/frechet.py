"""Fréchet distance between Gaussian fits of two count-fingerprint sets.

Stands in for the ChemNet-based FCD: same formula, but the features are
folded circular-environment counts instead of learned activations.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from pseudopairs.errors import DataError
from pseudopairs.fingerprints import CountFingerprint

RIDGE = 1e-6
MAX_DIM = 64


def _rotation(theta: float) -> tuple[float, float]:
    """Cosine and sine of the Jacobi rotation that zeroes one off-diagonal pair."""
    if theta == 0:
        t = 1.0
    elif abs(theta) > 1e150:  # theta**2 would overflow
        t = 0.5 / theta
    else:
        t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1))
    c = 1 / np.sqrt(t * t + 1)
    return c, t * c


def jacobi_eigh(a: np.ndarray, tol: float = 1e-10, max_sweeps: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns ``(w, v)`` with ``a ≈ v @ diag(w) @ v.T``. Sweeps stop once the
    off-diagonal Frobenius norm drops to ``tol`` times the norm of ``a``.
    """
    a = np.array(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("expected a square matrix")
    n = a.shape[0]
    a = (a + a.T) / 2
    v = np.eye(n)
    scale = max(np.linalg.norm(a), np.finfo(float).tiny)
    for _ in range(max_sweeps):
        off = np.sqrt(max(np.sum(a * a) - np.sum(np.diag(a) ** 2), 0.0))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                c, s = _rotation((a[q, q] - a[p, p]) / (2 * apq))
                cp, cq = a[:, p].copy(), a[:, q].copy()
                a[:, p], a[:, q] = c * cp - s * cq, s * cp + c * cq
                rp, rq = a[p, :].copy(), a[q, :].copy()
                a[p, :], a[q, :] = c * rp - s * rq, s * rp + c * rq
                a[p, q] = a[q, p] = 0.0
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p], v[:, q] = c * vp - s * vq, s * vp + c * vq
    return np.diag(a).copy(), v


def jacobi_singular_values(m: np.ndarray, tol: float = 1e-10, max_sweeps: int = 100) -> np.ndarray:
    """Singular values by one-sided (Hestenes) Jacobi.

    Columns are rotated pairwise until every pair is orthogonal to within
    ``tol``; the column norms are then the singular values. Unlike taking
    square roots of ``eig(m.T @ m)``, this keeps small singular values accurate.
    """
    u = np.array(m, dtype=float)
    n = u.shape[1]
    for _ in range(max_sweeps):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                alpha = u[:, p] @ u[:, p]
                beta = u[:, q] @ u[:, q]
                gamma = u[:, p] @ u[:, q]
                if abs(gamma) <= tol * np.sqrt(alpha * beta) or gamma == 0:
                    continue
                rotated = True
                c, s = _rotation((beta - alpha) / (2 * gamma))
                up, uq = u[:, p].copy(), u[:, q].copy()
                u[:, p], u[:, q] = c * up - s * uq, s * up + c * uq
        if not rotated:
            break
    return np.sqrt(np.sum(u * u, axis=0))


def psd_sqrt(a: np.ndarray) -> np.ndarray:
    """Symmetric square root with negative eigenvalues clamped to zero."""
    w, v = jacobi_eigh(a)
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T


def _as_matrix(fps: Sequence[CountFingerprint] | np.ndarray) -> np.ndarray:
    if isinstance(fps, np.ndarray):
        x = np.asarray(fps, dtype=float)
    else:
        x = np.array([fp.as_array() if isinstance(fp, CountFingerprint) else fp for fp in fps], dtype=float)
    if x.ndim != 2:
        raise DataError("fingerprint set must be a non-empty list of equal-length vectors")
    return x


def gaussian_fit(x: np.ndarray, ridge: float = RIDGE) -> tuple[np.ndarray, np.ndarray]:
    cov = np.atleast_2d(np.cov(x, rowvar=False, ddof=1))
    return x.mean(axis=0), cov + ridge * np.eye(x.shape[1])


def frechet_fp_distance(set_a, set_b, ridge: float = RIDGE) -> float:
    """``|mu_a - mu_b|^2 + Tr(S_a + S_b - 2 (S_a S_b)^(1/2))``, clamped at 0.

    ``Tr (S_a S_b)^(1/2)`` equals the sum of singular values of
    ``sqrt(S_a) @ sqrt(S_b)``; computing it that way avoids squaring the
    tiny ridge-level eigenvalues. Arguments are put in a fixed order first,
    so swapping them gives a bit-identical result.
    """
    xa, xb = _as_matrix(set_a), _as_matrix(set_b)
    if xa.shape[1] != xb.shape[1]:
        raise DataError(f"dimension mismatch: {xa.shape[1]} vs {xb.shape[1]}")
    if xa.shape[1] > MAX_DIM:
        raise DataError(f"dimension {xa.shape[1]} exceeds {MAX_DIM}")
    if len(xa) < 2 or len(xb) < 2:
        raise DataError("each set needs at least 2 members")
    mu_a, cov_a = gaussian_fit(xa, ridge)
    mu_b, cov_b = gaussian_fit(xb, ridge)
    if (mu_b.tobytes(), cov_b.tobytes()) < (mu_a.tobytes(), cov_a.tobytes()):
        mu_a, cov_a, mu_b, cov_b = mu_b, cov_b, mu_a, cov_a
    tr_sqrt = float(np.sum(jacobi_singular_values(psd_sqrt(cov_a) @ psd_sqrt(cov_b))))
    diff = mu_a - mu_b
    d2 = float(diff @ diff) + float(np.trace(cov_a) + np.trace(cov_b)) - 2.0 * tr_sqrt
    return max(d2, 0.0)
