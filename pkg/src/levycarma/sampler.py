"""Simulation of sampled state-space/CARMA paths and the sampled AR structure.

Gaussian drivers are simulated exactly through the discretised system.
General Levy drivers run on a sub-grid of step ``h / substeps``: between
sub-grid points the state transition is exact and each driver increment
enters through the kernel evaluated at the sub-interval midpoint,
``x <- exp(A d) x + exp(A d / 2) B dL``.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .errors import DomainError, NumericalError
from .linalg import expm, psd_factor, van_loan
from .model import StateSpace, spectrum
from .moments import stationary_cov
from .paths import SampledPath, make_rng

__all__ = [
    "DiscreteSystem",
    "discretize",
    "simulate_gaussian",
    "simulate_levy",
    "sampled_ar_coefficients",
]

# sub-grid rows per chunk when drawing driver increments
_CHUNK = 1 << 18


@dataclass(frozen=True, eq=False)
class DiscreteSystem:
    """``x_{k+1} = phi x_k + eta_k`` with ``eta_k ~ (0, q_h)``, ``y_k = c x_k``."""

    phi: np.ndarray
    q_h: np.ndarray
    c: np.ndarray


def discretize(ss: StateSpace, h: float) -> DiscreteSystem:
    """Exact transition ``exp(A h)`` and integrated noise covariance over one step."""
    if not h > 0:
        raise DomainError(f"grid step must be positive, got {h}")
    phi, q = van_loan(ss.A, ss.B @ ss.sigma_l @ ss.B.T, h)
    return DiscreteSystem(phi, q, ss.C.copy())


def _check_causal(ss):
    spec = spectrum(ss)
    if not spec.causal:
        bad = max(spec.eigenvalues, key=lambda e: e.real)
        raise DomainError(f"model is not causal: eigenvalue {bad} has non-negative real part")
    return spec


def simulate_gaussian(ss: StateSpace, h: float, n: int, seed: int, stream: int = 0) -> SampledPath:
    """Exact simulation under a Brownian driver with covariance ``ss.sigma_l``.

    Returns ``n + 1`` observations at ``t = 0, h, ..., n h``; the initial
    state is drawn from the stationary law.
    """
    _check_causal(ss)
    if int(n) < 1:
        raise DomainError("need at least one step")
    n = int(n)
    rng = make_rng(seed, stream)
    ds = discretize(ss, h)
    v = stationary_cov(ss)
    x0 = psd_factor(v) @ rng.standard_normal(ss.N)
    w = rng.standard_normal((n, ss.N)) @ psd_factor(ds.q_h).T
    states = kernels.state_recursion(ds.phi, x0, w, 1)
    x = np.vstack([x0[None, :], states])
    return SampledPath(
        h=float(h), y=x @ ss.C.T, x0=x0, seed={"seed": int(seed), "stream": int(stream)},
        model_tag="gaussian",
    )


def _advance(phi, x, w, stride):
    return kernels.state_recursion(phi, x, w, stride)


def simulate_levy(
    ss: StateSpace,
    driver,
    h: float,
    n: int,
    substeps: int = 64,
    seed: int = 0,
    stream: int = 0,
    burn_in: float = None,
) -> SampledPath:
    """Sub-grid simulation under an arbitrary Levy driver.

    The state starts at zero and is run for ``burn_in`` time units (default
    20 slowest time constants) before the first recorded observation. The
    returned path has ``n + 1`` rows and carries the driver increments
    aggregated over each coarse step in ``increments``.
    """
    spec = _check_causal(ss)
    substeps = int(substeps)
    if substeps < 1:
        raise DomainError(f"substeps must be >= 1, got {substeps}")
    if not h > 0:
        raise DomainError(f"grid step must be positive, got {h}")
    if int(n) < 1:
        raise DomainError("need at least one step")
    if driver.dim != ss.m:
        raise DomainError(f"driver dimension {driver.dim} does not match B ({ss.m} columns)")
    n = int(n)
    delta = h / substeps
    phi = expm(ss.A * delta)
    b_mid = expm(ss.A * (0.5 * delta)) @ ss.B
    rng = make_rng(seed, stream)

    if burn_in is None:
        burn_in = 20.0 / abs(spec.max_real)
    n_burn = int(math.ceil(burn_in / delta))
    x = np.zeros(ss.N)
    done = 0
    while done < n_burn:
        k = min(_CHUNK, n_burn - done)
        w = driver.sample(delta, k, rng) @ b_mid.T
        x = _advance(phi, x, w, k)[-1]
        done += k
    x0 = x.copy()

    states = np.empty((n, ss.N))
    incs = np.empty((n, ss.m))
    per_chunk = max(1, _CHUNK // substeps)
    done = 0
    while done < n:
        k = min(per_chunk, n - done)
        dl = driver.sample(delta, k * substeps, rng)
        states[done: done + k] = _advance(phi, x, dl @ b_mid.T, substeps)
        incs[done: done + k] = dl.reshape(k, substeps, ss.m).sum(axis=1)
        x = states[done + k - 1]
        done += k
    y = np.vstack([x0[None, :], states]) @ ss.C.T
    return SampledPath(
        h=float(h), y=y, x0=x0, seed={"seed": int(seed), "stream": int(stream)},
        model_tag=type(driver).__name__.lower(), increments=incs,
        meta={"substeps": substeps},
    )


def sampled_ar_coefficients(ss: StateSpace, h: float) -> np.ndarray:
    """``Phi_1..Phi_N`` with ``1 - sum_j Phi_j z^j = prod_v (1 - exp(lambda_v h) z)``.

    Requires pairwise distinct eigenvalues with imaginary parts inside
    ``(-pi/h, pi/h)``.
    """
    if not h > 0:
        raise DomainError(f"grid step must be positive, got {h}")
    ev = np.linalg.eigvals(ss.A)
    scale = max(1.0, float(np.max(np.abs(ev))))
    for i in range(ev.size):
        for j in range(i):
            if abs(ev[i] - ev[j]) <= 1e-8 * scale:
                raise DomainError(f"eigenvalues {ev[j]} and {ev[i]} are not distinct")
    bound = np.pi / h
    bad = ev[np.abs(ev.imag) >= bound]
    if bad.size:
        raise DomainError(
            f"eigenvalue {bad[0]} outside the strip |Im z| < pi/h = {bound:.6g}; use h < {np.pi / np.max(np.abs(ev.imag)):.6g}"
        )
    coef = np.poly(np.exp(ev * h))  # prod (z - r) = z^N + c_1 z^{N-1} + ...
    if np.max(np.abs(coef.imag)) > 1e-10:
        raise NumericalError("sampled AR coefficients have a non-negligible imaginary part")
    return -coef.real[1:]
