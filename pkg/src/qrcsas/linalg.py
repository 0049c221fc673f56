"""Small dense linear algebra on numpy arrays.

Everything here targets matrices of size at most a few tens, so the
algorithms favour accuracy and simplicity: cyclic Jacobi for Hermitian
eigenproblems, one-sided (Hestenes) Jacobi for singular values,
scaling-and-squaring Taylor for the exponential and partial-pivot
Gaussian elimination for solves. numpy only supplies the array type and
BLAS-level products.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ShapeError, SingularMatrixError

PIVOT_FLOOR = 1e-12
DEFAULT_RANK_TOL = 1e-10
_EPS = np.finfo(float).eps


def _square(m, name="matrix"):
    a = np.asarray(m)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"{name} must be square, got shape {a.shape}")
    return a


def hermitian_eigen(m, hermitian_tol=1e-10, max_sweeps=60):
    """Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Parameters
    ----------
    m : array_like, shape (n, n)
        Hermitian (or real symmetric) matrix.
    hermitian_tol : float
        Allowed ``max|M - M^H|``, scaled by ``max(1, max|M|)``.

    Returns
    -------
    eigenvalues : ndarray, shape (n,)
        Real eigenvalues in ascending order.
    eigenvectors : ndarray, shape (n, n)
        Orthonormal eigenvectors as columns, in the same order.
    """
    a = np.array(_square(m), dtype=complex)
    n = a.shape[0]
    scale = max(1.0, float(np.max(np.abs(a)))) if n else 1.0
    if n and np.max(np.abs(a - a.conj().T)) > hermitian_tol * scale:
        raise ShapeError("matrix is not Hermitian within tolerance")
    a = 0.5 * (a + a.conj().T)
    v = np.eye(n, dtype=complex)
    offdiag = ~np.eye(n, dtype=bool)

    for _ in range(max_sweeps):
        off = np.sum(np.abs(a[offdiag]) ** 2)
        if off <= (1e-15 * scale) ** 2:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                r = abs(apq)
                if r < 1e-300:
                    continue
                app = a[p, p].real
                aqq = a[q, q].real
                if r <= _EPS * 1e-3 * math.sqrt(abs(app * aqq)):
                    a[p, q] = a[q, p] = 0.0
                    continue
                phase = complex(apq.real / r, apq.imag / r)
                theta = (aqq - app) / (2.0 * r)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                # G = diag(1, conj(phase)) @ [[c, s], [-s, c]] acting on (p, q)
                g = np.array([[c, s], [-s * phase.conjugate(), c * phase.conjugate()]])
                idx = [p, q]
                a[:, idx] = a[:, idx] @ g
                a[idx, :] = g.conj().T @ a[idx, :]
                a[p, q] = a[q, p] = 0.0
                v[:, idx] = v[:, idx] @ g

    w = np.diag(a).real.copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def singular_values(m, max_sweeps=60):
    """Singular values in descending order (one-sided Jacobi).

    Column pairs are rotated until mutually orthogonal; the singular values
    are then the column norms. This keeps tiny singular values accurate
    relative to the largest one, which matters for rank decisions.
    """
    a = np.array(np.atleast_2d(m), dtype=complex)
    if a.ndim != 2:
        raise ShapeError(f"expected a matrix, got shape {a.shape}")
    if a.shape[0] < a.shape[1]:
        a = a.conj().T.copy()
    n = a.shape[1]
    for _ in range(max_sweeps):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                alpha = float(np.vdot(ap, ap).real)
                beta = float(np.vdot(aq, aq).real)
                gamma = np.vdot(ap, aq)
                g = abs(gamma)
                if g < 1e-300 or g <= 1e-15 * math.sqrt(alpha * beta):
                    continue
                rotated = True
                aq = aq * complex(gamma.real / g, -gamma.imag / g)
                zeta = (beta - alpha) / (2.0 * g)
                if abs(zeta) > 1e150:
                    t = 0.5 / zeta
                else:
                    t = math.copysign(1.0, zeta) / (abs(zeta) + math.sqrt(1.0 + zeta * zeta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = c * t
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
        if not rotated:
            break
    sv = np.sqrt(np.sum(np.abs(a) ** 2, axis=0))
    return np.sort(sv)[::-1]


def spectral_norm(m):
    """Largest singular value."""
    sv = singular_values(m)
    return float(sv[0]) if sv.size else 0.0


def trace_norm(m):
    """Trace norm ``tr sqrt(M M^H)``, i.e. the sum of singular values."""
    return float(np.sum(singular_values(_square(m))))


def matrix_exp(m, scale=1.0):
    """Compute ``exp(scale * M)`` by scaling and squaring a Taylor series.

    The argument is halved until its 1-norm is at most 1/2, the series is
    summed to machine precision and the result squared back up.
    """
    a = np.asarray(_square(m)) * scale
    n = a.shape[0]
    dtype = np.result_type(a.dtype, float)
    norm1 = float(np.max(np.sum(np.abs(a), axis=0))) if n else 0.0
    squarings = 0
    if norm1 > 0.5:
        squarings = int(math.ceil(math.log2(norm1 / 0.5)))
        a = a / (2.0**squarings)
    result = np.eye(n, dtype=dtype)
    term = np.eye(n, dtype=dtype)
    for k in range(1, 40):
        term = term @ a / k
        result = result + term
        if np.max(np.abs(term)) <= 1e-18 * np.max(np.abs(result)):
            break
    for _ in range(squarings):
        result = result @ result
    return result


def solve_linear(a, b, pivot_floor=PIVOT_FLOOR):
    """Solve ``A x = b`` by Gaussian elimination with partial pivoting.

    ``b`` may be a vector or a matrix of right-hand sides.

    Raises
    ------
    SingularMatrixError
        If a pivot falls below ``pivot_floor`` in magnitude; the exception
        carries the failing pivot index.
    """
    a = np.array(_square(a, "coefficient matrix"))
    b = np.array(b)
    n = a.shape[0]
    if b.shape[0] != n:
        raise ShapeError(f"right-hand side has {b.shape[0]} rows, expected {n}")
    dtype = np.result_type(a.dtype, b.dtype, float)
    a = a.astype(dtype)
    x = b.astype(dtype)
    vector = x.ndim == 1
    if vector:
        x = x[:, None]

    for k in range(n):
        piv = k + int(np.argmax(np.abs(a[k:, k])))
        pval = abs(a[piv, k])
        if pval < pivot_floor:
            raise SingularMatrixError(k, float(pval))
        if piv != k:
            a[[k, piv]] = a[[piv, k]]
            x[[k, piv]] = x[[piv, k]]
        factors = a[k + 1 :, k] / a[k, k]
        a[k + 1 :, k:] -= np.outer(factors, a[k, k:])
        x[k + 1 :] -= np.outer(factors, x[k])

    for k in range(n - 1, -1, -1):
        x[k] = (x[k] - a[k, k + 1 :] @ x[k + 1 :]) / a[k, k]
    return x[:, 0] if vector else x


def inverse(a):
    """Matrix inverse through :func:`solve_linear`."""
    a = _square(a)
    return solve_linear(a, np.eye(a.shape[0], dtype=a.dtype))


def numerical_rank(m, rel_tol=DEFAULT_RANK_TOL):
    """Number of singular values above ``rel_tol`` times the largest one."""
    if not 0.0 < rel_tol < 1.0:
        raise ValueError(f"rel_tol must lie in (0, 1), got {rel_tol}")
    sv = singular_values(m)
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    return int(np.sum(sv > rel_tol * sv[0]))
