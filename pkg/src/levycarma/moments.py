"""Second-order structure and stationary characteristic function of causal
state-space models."""

import warnings

import numpy as np
from scipy import integrate

from .errors import DomainError, NumericalError
from .linalg import expm, solve_lyapunov, symmetrize
from .model import StateSpace, spectrum, transfer_function

__all__ = [
    "stationary_cov",
    "stationary_gaussian_cov",
    "autocov",
    "autocov_table",
    "spectral_density",
    "stationary_cf",
]


def _require_causal(ss):
    spec = spectrum(ss)
    if not spec.causal:
        bad = max(spec.eigenvalues, key=lambda e: e.real)
        raise DomainError(f"model is not causal: eigenvalue {bad} has non-negative real part")
    return spec


def _lyapunov_psd(ss, q):
    v = solve_lyapunov(ss.A, q)
    w = np.linalg.eigvalsh(v)
    if w.size and w.min() < -1e-12 * max(1.0, float(np.abs(w).max())):
        raise NumericalError(f"stationary covariance not PSD (min eigenvalue {w.min():.3e})")
    return v


def stationary_cov(ss: StateSpace) -> np.ndarray:
    """Solution ``V`` of ``A V + V A^T = -B Sigma_L B^T``, i.e. ``Var(X_t)``."""
    _require_causal(ss)
    return _lyapunov_psd(ss, ss.B @ ss.sigma_l @ ss.B.T)


def stationary_gaussian_cov(ss: StateSpace, driver) -> np.ndarray:
    """Gaussian covariance of the stationary law (driver's Brownian part only)."""
    _require_causal(ss)
    g = np.atleast_2d(driver.gaussian_part())
    return _lyapunov_psd(ss, ss.B @ g @ ss.B.T)


def autocov(ss: StateSpace, h: float, v=None) -> np.ndarray:
    """``Cov(Y_{t+h}, Y_t) = C exp(A h) V C^T`` for ``h >= 0``."""
    if h < 0:
        raise DomainError("lag must be non-negative")
    if v is None:
        v = stationary_cov(ss)
    if h == 0:
        return ss.C @ v @ ss.C.T
    return ss.C @ expm(ss.A * h) @ v @ ss.C.T


def autocov_table(ss: StateSpace, lags) -> np.ndarray:
    """Stack of autocovariance matrices, shape ``(len(lags), d, d)``."""
    lags = np.asarray(lags, dtype=float).ravel()
    if lags.size == 0:
        return np.zeros((0, ss.d, ss.d))
    v = stationary_cov(ss)
    return np.stack([autocov(ss, float(h), v) for h in lags])


def spectral_density(ss: StateSpace, omega: float) -> np.ndarray:
    """``(1/2pi) H(i w) Sigma_L H(i w)^*`` with ``H`` the transfer matrix."""
    _require_causal(ss)
    h = transfer_function(ss, 1j * omega)
    return (h @ ss.sigma_l @ h.conj().T) / (2 * np.pi)


def _truncation_time(ss, driver, u):
    """Smallest doubling ``T`` past which the CF integrand is negligible."""
    lam = -max(e.real for e in spectrum(ss).eigenvalues)
    t = 1.0 / lam
    unorm = np.linalg.norm(u)
    for _ in range(200):
        v = ss.B.T @ expm(ss.A.T * t) @ u
        if np.linalg.norm(v) <= 1e-8 * unorm and abs(driver.psi(v[None, :])[0]) <= 1e-14:
            return t
        t *= 2.0
    raise NumericalError("could not find a truncation point for the stationary CF integral")


def stationary_cf(ss: StateSpace, driver, u) -> complex:
    """``E exp(i <u, X_inf>) = exp(int_0^inf psi_L(B^T exp(A^T s) u) ds)``.

    Adaptive Gauss-Kronrod on ``[0, T]`` for the real and imaginary parts,
    where ``T`` makes both ``|exp(A^T T) u|`` and the integrand negligible.
    """
    _require_causal(ss)
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if u.shape != (ss.N,):
        raise DomainError(f"u must have length {ss.N}")
    if driver.dim != ss.m:
        raise DomainError("driver dimension does not match B")
    if not np.any(u):
        return 1.0 + 0.0j
    T = _truncation_time(ss, driver, u)
    # scale-free variable: integrate over s in [0, T] with breakpoints at
    # multiples of the slowest time constant so quad sees the decay early
    lam = -max(e.real for e in spectrum(ss).eigenvalues)
    pts = [p for p in (1.0 / lam, 4.0 / lam, 16.0 / lam) if p < T]

    def integrand(s, part):
        v = ss.B.T @ expm(ss.A.T * s) @ u
        val = driver.psi(v[None, :])[0]
        return val.real if part == 0 else val.imag

    out = []
    for part in (0, 1):
        with warnings.catch_warnings():
            warnings.simplefilter("error", integrate.IntegrationWarning)
            try:
                val, err = integrate.quad(
                    integrand, 0.0, T, args=(part,), points=pts or None,
                    limit=500, epsabs=1e-13, epsrel=1e-11,
                )
            except integrate.IntegrationWarning as exc:
                raise NumericalError(
                    f"stationary CF quadrature did not converge on [0, {T:.4g}] "
                    f"({'real' if part == 0 else 'imaginary'} part): {exc}"
                ) from exc
        out.append(val)
    return complex(np.exp(out[0] + 1j * out[1]))
