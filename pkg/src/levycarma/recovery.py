"""Reconstruction of driver increments from a finely sampled OU path and
parametric inference on the reconstructed increments.

For ``dY = a Y dt + dL`` the increment of ``L`` over ``((n-1)h, nh]`` is
``Y_{nh} - Y_{(n-1)h} - a * int Y_u du``; the integral is approximated by the
composite trapezoid rule on the observation grid.
"""

from dataclasses import dataclass

import numpy as np
from scipy import optimize, special, stats

from .errors import DomainError, NumericalError
from .paths import SampledPath

__all__ = [
    "RecoveredIncrements",
    "GammaFit",
    "recover_increments",
    "fit_gamma",
    "increment_diagnostics",
]


@dataclass(frozen=True, eq=False)
class RecoveredIncrements:
    """Estimated driver increments on a grid of spacing ``h_coarse``."""

    h_coarse: float
    h_fine: float
    values: np.ndarray
    a_used: float

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).ravel()
        object.__setattr__(self, "values", values)
        _grid_ratio(self.h_coarse, self.h_fine)

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def ratio(self) -> int:
        return _grid_ratio(self.h_coarse, self.h_fine)

    @property
    def t(self) -> np.ndarray:
        """Right end point of each increment interval."""
        return self.h_coarse * np.arange(1, self.n + 1)


def _grid_ratio(h_coarse, h_fine):
    if not (h_fine > 0 and h_coarse > 0):
        raise DomainError("grid spacings must be positive")
    r = h_coarse / h_fine
    k = int(round(r))
    if k < 1 or abs(r - k) > 1e-9 * max(1.0, r):
        raise DomainError(f"h_coarse={h_coarse} is not an integer multiple of h_fine={h_fine}")
    return k


def recover_increments(path: SampledPath, a: float, h_coarse: float) -> RecoveredIncrements:
    """Trapezoid-based increment recovery for a scalar OU path.

    Parameters
    ----------
    path : SampledPath
        Observations at spacing ``h_fine = path.h``; must be one-dimensional.
    a : float
        Autoregressive rate of the OU equation (usually negative).
    h_coarse : float
        Spacing of the recovered increments; an integer multiple of ``path.h``.

    Returns
    -------
    RecoveredIncrements
        ``floor((n - 1) / r)`` increments where ``r = h_coarse / h_fine``.
    """
    if path.d != 1:
        raise DomainError(f"increment recovery needs a scalar path, got d={path.d}")
    r = _grid_ratio(h_coarse, path.h)
    y = path.y[:, 0]
    m = (y.size - 1) // r
    if m < 1:
        raise DomainError(f"path too short for one increment of length {h_coarse}")
    y = y[: m * r + 1]
    trap = 0.5 * path.h * (y[:-1] + y[1:])
    integral = trap.reshape(m, r).sum(axis=1)
    ends = y[::r]
    values = np.diff(ends) - float(a) * integral
    return RecoveredIncrements(float(h_coarse), float(path.h), values, float(a))


@dataclass(frozen=True)
class GammaFit:
    """Maximum-likelihood estimate of the standardised Gamma parameter."""

    gamma: float
    stderr: float
    n: int
    n_clipped: int
    loglik: float

    def to_dict(self):
        return {
            "gamma": self.gamma,
            "stderr": self.stderr,
            "n": self.n,
            "n_clipped": self.n_clipped,
            "loglik": self.loglik,
        }


def _gamma_loglik(g, x, logx, h):
    k = g * h
    return float(np.sum(0.5 * k * np.log(g) - special.gammaln(k) + (k - 1) * logx - x * np.sqrt(g)))


def fit_gamma(inc: RecoveredIncrements, clip_floor: float = 1e-12) -> GammaFit:
    """MLE of ``gamma`` for iid Gamma(shape ``gamma h``, rate ``sqrt(gamma)``) increments.

    Increments below ``clip_floor`` are raised to it inside the likelihood and
    counted in ``n_clipped``; the stored increments are left untouched. The
    score is bracketed around the method-of-moments start ``(mean / h)**2``
    and solved with Brent's method; the standard error comes from the
    observed information.
    """
    x = np.asarray(inc.values, dtype=float)
    h = float(inc.h_coarse)
    if x.size == 0 or not np.any(x > 0):
        raise DomainError("all recovered increments are non-positive; Gamma fit impossible")
    n_clipped = int(np.count_nonzero(x < clip_floor))
    x = np.maximum(x, clip_floor)
    logx = np.log(x)
    n = x.size
    sx, slog = float(x.sum()), float(logx.sum())

    def score(g):
        return (
            0.5 * n * h * (np.log(g) + 1.0)
            - n * h * special.digamma(g * h)
            + h * slog
            - 0.5 * sx / np.sqrt(g)
        )

    g0 = (x.mean() / h) ** 2
    lo, hi = g0 / 2.0, g0 * 2.0
    for _ in range(60):
        if score(lo) > 0:
            break
        lo /= 2.0
    for _ in range(60):
        if score(hi) < 0:
            break
        hi *= 2.0
    if not (score(lo) > 0 > score(hi)):
        raise NumericalError(f"could not bracket the Gamma score root around {g0:.6g}")
    g = optimize.brentq(score, lo, hi, xtol=1e-14, rtol=1e-14, maxiter=500)
    info = n * (h * h * special.polygamma(1, g * h) - h / (2.0 * g)) - 0.25 * sx * g ** -1.5
    if not info > 0:
        raise NumericalError("observed information is not positive at the Gamma MLE")
    return GammaFit(float(g), float(1.0 / np.sqrt(info)), int(n), n_clipped, _gamma_loglik(g, x, logx, h))


def increment_diagnostics(inc: RecoveredIncrements, bins: int = 50) -> dict:
    """Cumulant summaries and a fixed-width histogram of recovered increments.

    ``mean`` and ``variance`` are per unit time; ``skewness`` and
    ``kurtosis`` (excess) are those of the increments themselves. The
    histogram holds ``edges`` and ``density`` so it can be overlaid on a
    reference density; constant input produces a single bin.
    """
    x = np.asarray(inc.values, dtype=float)
    if x.size < 10:
        raise DomainError("need at least 10 increments for diagnostics")
    h = float(inc.h_coarse)
    if np.ptp(x) == 0.0:
        var = 0.0
        skew = kurt = 0.0
        # zero-width support: one bin, density undefined
        edges = np.array([x[0], x[0]])
        counts = np.array([x.size])
        density = None
    else:
        var = float(x.var(ddof=1))
        skew = float(stats.skew(x, bias=False))
        kurt = float(stats.kurtosis(x, bias=False))
        counts, edges = np.histogram(x, bins=int(bins))
        density = counts / (x.size * np.diff(edges))
    return {
        "n": int(x.size),
        "h": h,
        "a_used": float(inc.a_used),
        "mean": float(x.mean()) / h,
        "variance": var / h,
        "skewness": skew,
        "kurtosis": kurt,
        "histogram": {
            "edges": edges.tolist(),
            "counts": np.asarray(counts).tolist(),
            "density": None if density is None else density.tolist(),
        },
    }
