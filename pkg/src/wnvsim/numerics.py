"""Dense complex-matrix kernel used by every other module.

Matrices are plain 2-D ``complex128`` numpy arrays. This module adds the
contracts the rest of the code relies on: dimension and finiteness checks, a
Hermitian positive-definite solve with an explicit pivot floor, and a cyclic
Jacobi Hermitian eigendecomposition. Matrices in this project are at most a
few dozen rows per side, so the dependency-free Jacobi solver is adequate.

All tolerances are expressed relative to the Frobenius norm of the input so
they remain scale-free.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionError, EighConvergenceError, SingularMatrixError

HERMITIAN_RTOL = 1e-12
PIVOT_RTOL = 1e-14
JACOBI_MAX_SWEEPS = 100
JACOBI_OFF_RTOL = 1e-12


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce ``a`` to a finite 2-D complex128 array, validating the invariants."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains non-finite entries")
    return m


def matmul(a, b) -> np.ndarray:
    """Complex matrix product with an explicit inner-dimension check."""
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"inner dimensions differ: {a.shape} x {b.shape}")
    return a @ b


def hermitian(a) -> np.ndarray:
    """Conjugate transpose."""
    return as_matrix(a).conj().T


def fro_norm(a) -> float:
    """Frobenius norm: sqrt of the sum of squared entry magnitudes."""
    return float(np.linalg.norm(as_matrix(a), "fro"))


def _require_hermitian(a: np.ndarray, name: str) -> np.ndarray:
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {a.shape}")
    scale = max(np.linalg.norm(a), np.finfo(float).tiny)
    if np.linalg.norm(a - a.conj().T) > HERMITIAN_RTOL * scale:
        raise ValueError(f"{name} is not Hermitian within {HERMITIAN_RTOL:g} (relative)")
    return a


def _cholesky(a: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor of a Hermitian positive-definite matrix.

    Raises SingularMatrixError when a pivot falls at or below
    PIVOT_RTOL * trace(a), i.e. the matrix is numerically not PD.
    """
    n = a.shape[0]
    low = np.zeros_like(a)
    floor = PIVOT_RTOL * max(float(np.real(np.trace(a))), np.finfo(float).tiny)
    for j in range(n):
        pivot = float(a[j, j].real - np.real(low[j, :j] @ low[j, :j].conj()))
        if pivot <= floor:
            raise SingularMatrixError(
                f"pivot {pivot:.3e} at column {j} below floor {floor:.3e}; "
                "matrix is not positive-definite"
            )
        low[j, j] = np.sqrt(pivot)
        if j + 1 < n:
            low[j + 1:, j] = (a[j + 1:, j] - low[j + 1:, :j] @ low[j, :j].conj()) / low[j, j]
    return low


def hpd_solve(a, b) -> np.ndarray:
    """Solve a @ X = b for Hermitian positive-definite ``a``.

    Uses an in-house Cholesky factorization so the positive-definiteness
    contract (pivot floor PIVOT_RTOL * trace) is enforced explicitly.

    Raises
    ------
    SingularMatrixError
        If ``a`` is numerically not positive-definite.
    """
    a = _require_hermitian(as_matrix(a, "a"), "a")
    b = as_matrix(b, "b")
    if a.shape[0] != b.shape[0]:
        raise DimensionError(f"row counts differ: {a.shape} vs {b.shape}")
    low = _cholesky(a)
    n = a.shape[0]
    # forward substitution: low @ y = b
    y = np.zeros_like(b)
    for i in range(n):
        y[i] = (b[i] - low[i, :i] @ y[:i]) / low[i, i]
    # backward substitution: low^H @ x = y
    lh = low.conj().T
    x = np.zeros_like(b)
    for i in range(n - 1, -1, -1):
        x[i] = (y[i] - lh[i, i + 1:] @ x[i + 1:]) / lh[i, i]
    return x


def hermitian_eigh(a) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix via cyclic Jacobi rotations.

    Returns (eigenvalues ascending, unitary eigenvector matrix U) with
    a == U diag(w) U^H. Iteration cap JACOBI_MAX_SWEEPS sweeps; convergence
    when the off-diagonal Frobenius mass falls below
    JACOBI_OFF_RTOL * ||a||_F.

    Raises
    ------
    EighConvergenceError
        If the sweep cap is hit before the off-diagonal tolerance is met.
    """
    a = _require_hermitian(as_matrix(a, "a"), "a")
    n = a.shape[0]
    work = 0.5 * (a + a.conj().T)  # fold the (tiny) allowed asymmetry away
    u = np.eye(n, dtype=np.complex128)
    if n == 1:
        return np.array([work[0, 0].real]), u

    norm_a = max(np.linalg.norm(work), np.finfo(float).tiny)
    off_tol = JACOBI_OFF_RTOL * norm_a
    skip_tol = off_tol / (n * n)

    def off_norm(m: np.ndarray) -> float:
        # direct off-diagonal mass; the difference-of-norms form cancels badly
        # when the diagonal dominates
        stripped = m - np.diag(np.diag(m))
        return float(np.linalg.norm(stripped))

    converged = False
    for _ in range(JACOBI_MAX_SWEEPS):
        if off_norm(work) <= off_tol:
            converged = True
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                g = work[p, q]
                mag = abs(g)
                if mag <= skip_tol:
                    continue
                phase = g / mag
                # real Jacobi angle for the phase-folded 2x2 block
                tau = (work[q, q].real - work[p, p].real) / (2.0 * mag)
                if tau >= 0.0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                # unitary G: G[p,p]=c, G[p,q]=s, G[q,p]=-s*conj(phase), G[q,q]=c*conj(phase)
                colp = work[:, p].copy()
                colq = work[:, q] * np.conj(phase)
                work[:, p] = c * colp - s * colq
                work[:, q] = s * colp + c * colq
                rowp = work[p, :].copy()
                rowq = work[q, :] * phase
                work[p, :] = c * rowp - s * rowq
                work[q, :] = s * rowp + c * rowq
                work[p, q] = 0.0
                work[q, p] = 0.0
                ucolp = u[:, p].copy()
                ucolq = u[:, q] * np.conj(phase)
                u[:, p] = c * ucolp - s * ucolq
                u[:, q] = s * ucolp + c * ucolq
    if not converged:
        off = off_norm(work)
        if off > off_tol:
            raise EighConvergenceError(
                f"no convergence after {JACOBI_MAX_SWEEPS} sweeps (off-norm {off:.3e})"
            )
    w = np.real(np.diag(work))
    order = np.argsort(w, kind="stable")
    return w[order], u[:, order]
