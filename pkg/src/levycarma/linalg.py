"""Dense linear-algebra helpers: matrix exponential, Lyapunov solves and the
Van Loan integrated-covariance construction.

Every routine that needs ``exp(A t)`` goes through :func:`expm` so there is
exactly one matrix-exponential implementation in use.
"""

import numpy as np
import scipy.linalg

from .errors import NumericalError


def expm(a):
    """Matrix exponential (scaling-and-squaring with Pade approximant)."""
    return scipy.linalg.expm(np.asarray(a, dtype=float))


def symmetrize(m):
    m = np.asarray(m)
    return 0.5 * (m + m.T)


def solve_lyapunov(a, q):
    """Solve ``A V + V A^T = -Q`` through the Kronecker-product system.

    The ``N^2 x N^2`` operator ``I (x) A + A (x) I`` is assembled densely and
    handed to LAPACK. It is singular exactly when two eigenvalues of ``A``
    sum to zero; that case raises :class:`NumericalError`.
    """
    a = np.asarray(a, dtype=float)
    q = np.asarray(q, dtype=float)
    n = a.shape[0]
    eig = np.linalg.eigvals(a)
    sums = eig[:, None] + eig[None, :]
    scale = max(1.0, float(np.max(np.abs(eig)))) if n else 1.0
    if n and np.min(np.abs(sums)) <= 1e-13 * scale:
        raise NumericalError("singular Lyapunov operator: eigenvalues sum to zero")
    eye = np.eye(n)
    op = np.kron(eye, a) + np.kron(a, eye)
    # column-major vec: vec(A V) = (I (x) A) vec(V)
    vec = np.linalg.solve(op, -q.reshape(-1, order="F"))
    return symmetrize(vec.reshape((n, n), order="F"))


def van_loan(a, qc, h):
    """Return ``(exp(A h), int_0^h exp(A s) Qc exp(A^T s) ds)``.

    Uses the block exponential of ``[[-A, Qc], [0, A^T]] h``.
    """
    a = np.asarray(a, dtype=float)
    qc = np.asarray(qc, dtype=float)
    n = a.shape[0]
    block = np.zeros((2 * n, 2 * n))
    block[:n, :n] = -a
    block[:n, n:] = qc
    block[n:, n:] = a.T
    f = expm(block * h)
    phi = f[n:, n:].T
    qd = phi @ f[:n, n:]
    return phi, symmetrize(qd)


def psd_factor(m):
    """Return ``F`` with ``F F^T = m`` for a symmetric PSD ``m``.

    Eigen-decomposition based, so singular covariances are fine; negative
    eigenvalues from rounding are clipped to zero.
    """
    m = symmetrize(np.asarray(m, dtype=float))
    w, u = np.linalg.eigh(m)
    return u * np.sqrt(np.clip(w, 0.0, None))
