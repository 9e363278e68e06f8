"""Dense linear-algebra kernels.

Householder QR with column pivoting, minimum-norm least squares on the
rank-truncated triangular factor, one-sided Jacobi singular values and a
cyclic Jacobi symmetric eigensolver. Matrices in this package are at most a
few hundred rows, so the kernels favour clarity and determinism over speed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "NumericError",
    "QRFactorization",
    "qr_column_pivoted",
    "min_norm_lstsq",
    "singular_values",
    "sym_eigen",
    "numerical_rank",
]

_EPS = np.finfo(float).eps


class NumericError(ArithmeticError):
    """Raised when a numerical routine cannot produce a trustworthy result."""


@dataclass(frozen=True)
class QRFactorization:
    """``a[:, perm] == q @ r`` with ``q`` orthogonal and ``r`` upper triangular."""

    q: np.ndarray
    r: np.ndarray
    perm: np.ndarray

    @property
    def diag(self) -> np.ndarray:
        return np.abs(np.diag(self.r))

    def threshold(self, tol: float, mode: str = "relative") -> float:
        if tol <= 0:
            raise ValueError("tol must be positive")
        if mode == "absolute":
            return tol
        if mode == "relative":
            d = self.diag
            return tol * (d.max() if d.size else 0.0)
        raise ValueError(f"unknown tolerance mode {mode!r}")

    def rank(self, tol: float, mode: str = "relative") -> int:
        """Number of leading diagonal entries of ``r`` at or above the threshold."""
        d = self.diag
        if d.size == 0 or d[0] == 0.0:
            return 0
        thr = self.threshold(tol, mode)
        below = np.flatnonzero(d < thr)
        return int(below[0]) if below.size else int(d.size)


def _householder(x: np.ndarray) -> tuple[np.ndarray, float, float]:
    """Return ``(v, beta, alpha)`` with ``(I - beta v v^T) x = alpha e_1``."""
    sigma = np.linalg.norm(x)
    v = x.astype(float).copy()
    if sigma == 0.0:
        return v, 0.0, 0.0
    alpha = -sigma if x[0] >= 0 else sigma
    v[0] -= alpha
    vnorm2 = v @ v
    if vnorm2 == 0.0:
        return v, 0.0, alpha
    return v, 2.0 / vnorm2, alpha


def qr_column_pivoted(a: np.ndarray, pivoting: bool = True) -> QRFactorization:
    """Householder QR, pivoting on the largest remaining column norm.

    Column norms are recomputed at every step instead of downdated; the
    extra cost is irrelevant at the sizes used here and avoids the
    cancellation problems of norm downdating.
    """
    a = np.array(a, dtype=float)
    if a.ndim != 2 or a.size == 0:
        raise ValueError("qr_column_pivoted needs a nonempty 2-D array")
    m, n = a.shape
    r = a.copy()
    q = np.eye(m)
    perm = np.arange(n)
    for k in range(min(m, n)):
        if pivoting:
            norms = np.einsum("ij,ij->j", r[k:, k:], r[k:, k:])
            p = k + int(np.argmax(norms))
            if p != k:
                r[:, [k, p]] = r[:, [p, k]]
                perm[[k, p]] = perm[[p, k]]
        v, beta, alpha = _householder(r[k:, k])
        if beta == 0.0:
            continue
        r[k:, k:] -= beta * np.outer(v, v @ r[k:, k:])
        r[k, k] = alpha
        r[k + 1 :, k] = 0.0
        q[:, k:] -= beta * np.outer(q[:, k:] @ v, v)
    return QRFactorization(q=q, r=np.triu(r), perm=perm)


def _back_substitute(u: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = u.shape[0]
    x = np.zeros_like(b, dtype=float)
    for i in range(n - 1, -1, -1):
        x[i] = (b[i] - u[i, i + 1 :] @ x[i + 1 :]) / u[i, i]
    return x


def _forward_substitute(lo: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = lo.shape[0]
    x = np.zeros_like(b, dtype=float)
    for i in range(n):
        x[i] = (b[i] - lo[i, :i] @ x[:i]) / lo[i, i]
    return x


def min_norm_lstsq(
    a: np.ndarray,
    b: np.ndarray,
    tol: float = 1e-12,
    mode: str = "relative",
    return_rank: bool = False,
):
    """Minimum-norm least-squares solution of ``a x = b`` after rank truncation.

    ``a`` is factorised with column-pivoted QR; trailing diagonal entries of
    the triangular factor below the threshold are discarded. In ``relative``
    mode the threshold is ``tol * max|R_ii|``, in ``absolute`` mode it is
    ``tol`` itself (the convention of MATLAB's ``lsqminnorm``). The
    remaining ``k x n`` trapezoid is reduced by a second QR so the returned
    vector is the minimum-norm solution of the truncated problem.

    ``b`` may be a vector or a matrix of right-hand sides (one per column).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if tol <= 0:
        raise ValueError("tol must be positive")
    if b.shape[0] != a.shape[0]:
        raise ValueError(f"dimension mismatch: a is {a.shape}, b is {b.shape}")
    m, n = a.shape
    fac = qr_column_pivoted(a)
    k = fac.rank(tol, mode)
    out_shape = (n,) + b.shape[1:]
    if k == 0:
        x = np.zeros(out_shape)
        return (x, 0) if return_rank else x
    c = fac.q[:, :k].T @ b
    if k == n:
        z = _back_substitute(fac.r[:k, :k], c)
    else:
        # complete orthogonal decomposition of the k x n trapezoid
        trap = fac.r[:k, :]
        second = qr_column_pivoted(trap.T, pivoting=False)
        lower = second.r[:k, :k].T
        z = second.q[:, :k] @ _forward_substitute(lower, c)
    x = np.zeros(out_shape)
    x[fac.perm] = z
    return (x, k) if return_rank else x


def singular_values(a: np.ndarray, max_sweeps: int = 80) -> np.ndarray:
    """Singular values in descending order (one-sided Jacobi)."""
    a = np.array(a, dtype=float)
    if a.ndim != 2 or a.size == 0:
        raise ValueError("singular_values needs a nonempty 2-D array")
    if a.shape[0] < a.shape[1]:
        a = a.T.copy()
    n = a.shape[1]
    for _ in range(max_sweeps):
        rotated = False
        for i in range(n - 1):
            for j in range(i + 1, n):
                ai, aj = a[:, i], a[:, j]
                alpha = ai @ ai
                beta = aj @ aj
                gamma = ai @ aj
                if gamma == 0.0 or abs(gamma) <= _EPS * np.sqrt(alpha) * np.sqrt(beta):
                    continue
                rotated = True
                with np.errstate(over="ignore"):
                    zeta = (beta - alpha) / (2.0 * gamma)
                if abs(zeta) > 1e150:
                    t = 0.5 / zeta
                else:
                    t = np.copysign(1.0, zeta) / (abs(zeta) + np.sqrt(1.0 + zeta * zeta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                new_i = c * ai - s * aj
                a[:, j] = s * ai + c * aj
                a[:, i] = new_i
        if not rotated:
            break
    else:
        raise NumericError("one-sided Jacobi did not converge")
    return np.sort(np.linalg.norm(a, axis=0))[::-1]


def numerical_rank(a: np.ndarray, rel_tol: float = 1e-9) -> int:
    """Count singular values above ``rel_tol * sigma_max``."""
    s = singular_values(a)
    if s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > rel_tol * s[0]))


def sym_eigen(s: np.ndarray, max_sweeps: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns ``(lam, v)`` with eigenvalues ascending and orthonormal
    eigenvectors in the columns of ``v``.
    """
    a = np.array(s, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("sym_eigen needs a square matrix")
    scale = np.linalg.norm(a)
    if np.linalg.norm(a - a.T) > 1e-10 * max(scale, 1.0):
        raise ValueError("sym_eigen needs a symmetric matrix")
    a = 0.5 * (a + a.T)
    n = a.shape[0]
    v = np.eye(n)
    for _ in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= _EPS * max(scale, np.finfo(float).tiny):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.copysign(1.0, theta) / (abs(theta) + np.sqrt(1.0 + theta * theta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                sn = t * c
                ap, aq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * ap - sn * aq
                a[:, q] = sn * ap + c * aq
                ap, aq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * ap - sn * aq
                a[q, :] = sn * ap + c * aq
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - sn * vq
                v[:, q] = sn * vp + c * vq
    else:
        raise NumericError("Jacobi eigensolver did not converge")
    lam = np.diag(a).copy()
    order = np.argsort(lam, kind="stable")
    return lam[order], v[:, order]
