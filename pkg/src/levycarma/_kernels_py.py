"""Pure-Python (numpy) versions of the compiled kernels in ``_kernels.pyx``.

Used when the extension is not built or when ``LEVYCARMA_PURE_PYTHON=1``.
Both modules return identical structures; the test-suite checks they agree.
"""

import numpy as np


def state_recursion(phi, x0, w, stride):
    """Iterate ``x_{k+1} = phi x_k + w_k`` and keep every ``stride``-th state.

    Returns an array of shape ``(len(w) // stride, N)``.
    """
    phi = np.ascontiguousarray(phi, dtype=float)
    w = np.ascontiguousarray(w, dtype=float)
    n, N = w.shape
    out = np.empty((n // stride, N))
    x = np.array(x0, dtype=float)
    r = 0
    for k in range(n):
        x = phi @ x + w[k]
        if (k + 1) % stride == 0:
            out[r] = x
            r += 1
    return out


def kalman_filter(phi, q, c, p0, y):
    """Linear one-step predictor with time-invariant system matrices.

    Returns ``(e, v, terms, status)`` where ``terms[k] = 0.5 (log det V_k +
    e_k^T V_k^{-1} e_k)`` and ``status`` is ``-1`` on success or the index of
    the first step whose prediction covariance was not positive definite.
    """
    phi = np.asarray(phi, dtype=float)
    q = np.asarray(q, dtype=float)
    c = np.asarray(c, dtype=float)
    y = np.asarray(y, dtype=float)
    n, d = y.shape
    N = phi.shape[0]
    e = np.zeros((n, d))
    v = np.zeros((n, d, d))
    terms = np.zeros(n)
    x = np.zeros(N)
    P = np.array(p0, dtype=float)
    for k in range(n):
        ek = y[k] - c @ x
        pct = P @ c.T
        S = c @ pct
        try:
            L = np.linalg.cholesky(S)
        except np.linalg.LinAlgError:
            return e, v, terms, k
        diag = np.diag(L)
        if np.any(diag <= 0) or not np.all(np.isfinite(diag)):
            return e, v, terms, k
        a = np.linalg.solve(S, ek)
        terms[k] = 0.5 * (2.0 * np.sum(np.log(diag)) + ek @ a)
        e[k] = ek
        v[k] = S
        M = phi @ pct
        K = np.linalg.solve(S, M.T).T
        x = phi @ x + K @ ek
        P = phi @ P @ phi.T + q - K @ M.T
        P = 0.5 * (P + P.T)
    return e, v, terms, -1
