"""Levy drivers: exact increment sampling on an equidistant grid, characteristic
exponents and first two moment rates.

Supported laws
--------------
``Triplet``   drift + Brownian part + optional finite-activity jumps
``Gamma``     standardised Gamma subordinator (mean sqrt(gamma), variance 1 per unit time)
``NIG``       multivariate normal inverse Gaussian (normal mean-variance mixture)
``Stable``    univariate alpha-stable (S1 parametrisation)
``Sum``       independent superposition of the above

Every model exposes ``dim``, ``sample(h, n, rng)``, ``psi(U)`` (vectorised
characteristic exponent, ``U`` of shape ``(k, m)``) and ``moments()``.

The drift of a ``Triplet`` is the slope of the linear component with the
jumps left uncompensated, i.e. ``E[L_1] = drift + rate * E[jump]``.
"""

from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import gammaln

from .errors import DomainError, UnsupportedError
from .linalg import psd_factor, symmetrize
from .paths import IncrementBatch, SampledPath, make_rng

__all__ = [
    "PoissonJumps",
    "CompoundPoissonJumps",
    "Triplet",
    "Gamma",
    "NIG",
    "Stable",
    "Sum",
    "brownian",
    "sample_increments",
    "char_exponent",
    "moment_rates",
    "path_from_increments",
    "model_to_dict",
    "model_from_dict",
    "sample_inverse_gaussian",
    "sample_stable",
]


def _vec(x, name="vector"):
    v = np.atleast_1d(np.asarray(x, dtype=float))
    if v.ndim != 1:
        raise DomainError(f"{name} must be one-dimensional")
    if not np.all(np.isfinite(v)):
        raise DomainError(f"{name} must be finite")
    return v


def _mat(x, m, name="matrix"):
    a = np.asarray(x, dtype=float)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.shape != (m, m):
        raise DomainError(f"{name} must have shape {(m, m)}, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DomainError(f"{name} must be finite")
    return a


def _check_psd(a, name, tol=1e-12):
    if not np.allclose(a, a.T, atol=tol, rtol=0):
        raise DomainError(f"{name} must be symmetric")
    if a.size and np.min(np.linalg.eigvalsh(symmetrize(a))) < -tol * max(1.0, np.abs(a).max()):
        raise DomainError(f"{name} must be positive semi-definite")


def _as_points(u, m):
    u = np.asarray(u, dtype=float)
    if u.ndim == 0:
        u = u.reshape(1, 1)
    elif u.ndim == 1:
        u = u.reshape(-1, m) if m == 1 else u.reshape(1, m)
    if u.shape[-1] != m:
        raise DomainError(f"argument dimension {u.shape[-1]} does not match driver dimension {m}")
    return u


# -- variate generators -----------------------------------------------------


def sample_inverse_gaussian(mean, shape, size, rng):
    """Inverse Gaussian variates with the given mean and shape parameter.

    Michael-Schucany-Haas transformation; the root is written as
    ``mean / (1 + a + sqrt(a^2 + 2a))`` which avoids the cancellation of the
    textbook form when ``mean / shape`` is large.
    """
    if mean <= 0 or shape <= 0:
        raise DomainError("inverse Gaussian needs mean > 0 and shape > 0")
    y = rng.standard_normal(size) ** 2
    a = mean * y / (2.0 * shape)
    x = mean / (1.0 + a + np.sqrt(a * a + 2.0 * a))
    u = rng.random(size)
    return np.where(u <= mean / (mean + x), x, mean * mean / x)


def sample_stable(alpha, scale, skew, loc, size, rng):
    """Chambers-Mallows-Stuck draws from S1(alpha, scale, skew, loc)."""
    v = rng.uniform(-0.5 * np.pi, 0.5 * np.pi, size)
    w = rng.standard_exponential(size)
    if alpha == 1.0:
        half = 0.5 * np.pi + skew * v
        z = (2.0 / np.pi) * (half * np.tan(v) - skew * np.log(0.5 * np.pi * w * np.cos(v) / half))
        return scale * z + (2.0 / np.pi) * skew * scale * np.log(scale) + loc
    t = skew * np.tan(0.5 * np.pi * alpha)
    b = np.arctan(t) / alpha
    s = (1.0 + t * t) ** (1.0 / (2.0 * alpha))
    z = (
        s
        * np.sin(alpha * (v + b))
        / np.cos(v) ** (1.0 / alpha)
        * (np.cos(v - alpha * (v + b)) / w) ** ((1.0 - alpha) / alpha)
    )
    return scale * z + loc


# -- jump parts -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PoissonJumps:
    """Poisson clock with a fixed jump vector."""

    rate: float
    size: np.ndarray

    def __post_init__(self):
        if not self.rate > 0:
            raise DomainError(f"jump rate must be positive, got {self.rate}")
        object.__setattr__(self, "size", _vec(self.size, "jump size"))

    @property
    def dim(self):
        return self.size.shape[0]

    def sample(self, h, n, rng):
        k = rng.poisson(self.rate * h, n)
        return k[:, None] * self.size[None, :]

    def psi(self, u):
        return self.rate * (np.exp(1j * (u @ self.size)) - 1.0)

    def moments(self):
        return self.rate * self.size, self.rate * np.outer(self.size, self.size)

    def to_dict(self):
        return {"kind": "poisson", "rate": float(self.rate), "size": self.size.tolist()}


@dataclass(frozen=True, eq=False)
class CompoundPoissonJumps:
    """Compound Poisson jumps with ``normal`` or ``exponential`` jump law.

    ``normal`` takes ``mean`` (m-vector) and ``cov`` (m x m); ``exponential``
    is univariate with ``scale`` (the mean jump size).
    """

    rate: float
    dist: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.rate > 0:
            raise DomainError(f"jump rate must be positive, got {self.rate}")
        p = dict(self.params)
        if self.dist == "normal":
            mean = _vec(p.get("mean"), "jump mean")
            cov = _mat(p.get("cov"), mean.shape[0], "jump covariance")
            _check_psd(cov, "jump covariance")
            p = {"mean": mean, "cov": cov}
        elif self.dist == "exponential":
            scale = float(p.get("scale", np.nan))
            if not scale > 0:
                raise DomainError("exponential jumps need scale > 0")
            p = {"scale": scale}
        else:
            raise DomainError(f"unknown jump distribution {self.dist!r}")
        object.__setattr__(self, "params", p)

    @property
    def dim(self):
        return self.params["mean"].shape[0] if self.dist == "normal" else 1

    def sample(self, h, n, rng):
        k = rng.poisson(self.rate * h, n)
        if self.dist == "normal":
            mean, cov = self.params["mean"], self.params["cov"]
            z = rng.standard_normal((n, mean.shape[0])) @ psd_factor(cov).T
            return k[:, None] * mean[None, :] + np.sqrt(k)[:, None] * z
        return rng.gamma(k, self.params["scale"])[:, None]

    def psi(self, u):
        if self.dist == "normal":
            mean, cov = self.params["mean"], self.params["cov"]
            phi = np.exp(1j * (u @ mean) - 0.5 * np.einsum("ki,ij,kj->k", u, cov, u))
        else:
            phi = 1.0 / (1.0 - 1j * self.params["scale"] * u[:, 0])
        return self.rate * (phi - 1.0)

    def moments(self):
        if self.dist == "normal":
            mean, cov = self.params["mean"], self.params["cov"]
            return self.rate * mean, self.rate * (cov + np.outer(mean, mean))
        s = self.params["scale"]
        return np.array([self.rate * s]), np.array([[2.0 * self.rate * s * s]])

    def to_dict(self):
        d = {"kind": "compound", "rate": float(self.rate), "dist": self.dist}
        for k, v in self.params.items():
            d[k] = v.tolist() if isinstance(v, np.ndarray) else v
        return d


Jumps = Union[PoissonJumps, CompoundPoissonJumps]


# -- driver families --------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Triplet:
    """Drift, Gaussian covariance rate and an optional finite-activity jump part."""

    gamma: np.ndarray
    sigma_g: np.ndarray
    jumps: Optional[Jumps] = None

    def __post_init__(self):
        g = _vec(self.gamma, "drift")
        s = _mat(self.sigma_g, g.shape[0], "Gaussian covariance")
        _check_psd(s, "Gaussian covariance")
        if self.jumps is not None and self.jumps.dim != g.shape[0]:
            raise DomainError("jump dimension does not match drift dimension")
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "sigma_g", s)

    @property
    def dim(self):
        return self.gamma.shape[0]

    def sample(self, h, n, rng):
        m = self.dim
        out = np.zeros((n, m)) + h * self.gamma
        if np.any(self.sigma_g):
            out += np.sqrt(h) * (rng.standard_normal((n, m)) @ psd_factor(self.sigma_g).T)
        if self.jumps is not None:
            out += self.jumps.sample(h, n, rng)
        return out

    def psi(self, u):
        val = 1j * (u @ self.gamma) - 0.5 * np.einsum("ki,ij,kj->k", u, self.sigma_g, u)
        if self.jumps is not None:
            val = val + self.jumps.psi(u)
        return val

    def moments(self):
        mean, cov = self.gamma.copy(), self.sigma_g.copy()
        if self.jumps is not None:
            jm, jc = self.jumps.moments()
            mean, cov = mean + jm, cov + jc
        return mean, cov

    def gaussian_part(self):
        return self.sigma_g

    def to_dict(self):
        return {
            "family": "triplet",
            "params": {
                "gamma": self.gamma.tolist(),
                "sigma_g": self.sigma_g.tolist(),
                "jumps": None if self.jumps is None else self.jumps.to_dict(),
            },
        }


def brownian(cov) -> Triplet:
    """Zero-drift Brownian motion with covariance rate ``cov``."""
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    return Triplet(np.zeros(cov.shape[0]), cov)


@dataclass(frozen=True, eq=False)
class Gamma:
    """Gamma process with ``L_t ~ Gamma(shape=gamma t, rate=sqrt(gamma))``."""

    gamma: float

    def __post_init__(self):
        if not (np.isfinite(self.gamma) and self.gamma > 0):
            raise DomainError(f"Gamma parameter must be positive, got {self.gamma}")

    dim = 1

    def sample(self, h, n, rng):
        return rng.gamma(self.gamma * h, 1.0 / np.sqrt(self.gamma), n)[:, None]

    def psi(self, u):
        return -self.gamma * np.log1p(-1j * u[:, 0] / np.sqrt(self.gamma))

    def moments(self):
        return np.array([np.sqrt(self.gamma)]), np.array([[1.0]])

    def gaussian_part(self):
        return np.zeros((1, 1))

    def logpdf(self, x, t=1.0):
        """Log density of ``L_t``."""
        k, r = self.gamma * t, np.sqrt(self.gamma)
        x = np.asarray(x, dtype=float)
        return k * np.log(r) - gammaln(k) + (k - 1) * np.log(x) - r * x

    def to_dict(self):
        return {"family": "gamma", "params": {"gamma": float(self.gamma)}}


@dataclass(frozen=True, eq=False)
class NIG:
    """``L_1 = mu + V Delta beta + V^{1/2} N`` with ``N ~ N(0, Delta)`` and
    ``V`` inverse Gaussian with mean ``delta/kappa`` and shape ``delta^2``.

    ``mu`` defaults to ``-(delta/kappa) Delta beta`` (zero-mean driver).
    """

    delta: float
    kappa: float
    beta: np.ndarray
    Delta: np.ndarray
    mu: Optional[np.ndarray] = None

    def __post_init__(self):
        if not (self.delta > 0 and self.kappa > 0):
            raise DomainError("NIG needs delta > 0 and kappa > 0")
        beta = _vec(self.beta, "beta")
        m = beta.shape[0]
        Delta = _mat(self.Delta, m, "Delta")
        _check_psd(Delta, "Delta")
        if np.min(np.linalg.eigvalsh(Delta)) <= 0:
            raise DomainError("Delta must be positive definite")
        mu = -(self.delta / self.kappa) * (Delta @ beta) if self.mu is None else _vec(self.mu, "mu")
        if mu.shape[0] != m:
            raise DomainError("mu has the wrong dimension")
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "Delta", Delta)
        object.__setattr__(self, "mu", mu)

    @property
    def dim(self):
        return self.beta.shape[0]

    @classmethod
    def with_covariance(cls, cov, delta=1.0, kappa=1.0):
        """Symmetric NIG (beta = 0) whose unit-time covariance equals ``cov``."""
        cov = np.atleast_2d(np.asarray(cov, dtype=float))
        return cls(delta, kappa, np.zeros(cov.shape[0]), cov * (kappa / delta))

    def sample(self, h, n, rng):
        m = self.dim
        v = sample_inverse_gaussian(self.delta * h / self.kappa, (self.delta * h) ** 2, n, rng)
        z = rng.standard_normal((n, m)) @ np.linalg.cholesky(self.Delta).T
        return h * self.mu + v[:, None] * (self.Delta @ self.beta) + np.sqrt(v)[:, None] * z

    def psi(self, u):
        db = self.Delta @ self.beta
        quad = np.einsum("ki,ij,kj->k", u, self.Delta, u)
        root = np.sqrt(self.kappa**2 + quad - 2j * (u @ db) + 0j)
        return 1j * (u @ self.mu) + self.delta * (self.kappa - root)

    def moments(self):
        db = self.Delta @ self.beta
        r = self.delta / self.kappa
        mean = self.mu + r * db
        cov = r * self.Delta + (self.delta / self.kappa**3) * np.outer(db, db)
        return mean, cov

    def gaussian_part(self):
        return np.zeros((self.dim, self.dim))

    def to_dict(self):
        return {
            "family": "nig",
            "params": {
                "delta": float(self.delta),
                "kappa": float(self.kappa),
                "beta": self.beta.tolist(),
                "Delta": self.Delta.tolist(),
                "mu": self.mu.tolist(),
            },
        }


@dataclass(frozen=True, eq=False)
class Stable:
    """Univariate alpha-stable motion, ``psi(u) = -scale^a |u|^a (1 - i skew sgn(u) tan(pi a/2)) + i loc u``
    (the ``alpha = 1`` case uses the logarithmic correction)."""

    alpha: float
    scale: float = 1.0
    skew: float = 0.0
    location: float = 0.0

    def __post_init__(self):
        if not 0 < self.alpha <= 2:
            raise DomainError(f"stability index must lie in (0, 2], got {self.alpha}")
        if not self.scale > 0:
            raise DomainError("stable scale must be positive")
        if not -1 <= self.skew <= 1:
            raise DomainError("stable skewness must lie in [-1, 1]")
        if self.alpha == 2 and self.skew != 0:
            raise DomainError("alpha = 2 with non-zero skewness is not a valid parametrisation")

    dim = 1

    def sample(self, h, n, rng):
        a = self.alpha
        scale = self.scale * (h if a == 1 else h ** (1.0 / a))
        return sample_stable(a, scale, self.skew, self.location * h, n, rng)[:, None]

    def psi(self, u):
        u = u[:, 0]
        a, s, b = self.alpha, self.scale, self.skew
        au = np.abs(u)
        if a == 1:
            with np.errstate(divide="ignore", invalid="ignore"):
                lg = np.where(au > 0, np.log(np.where(au > 0, au, 1.0)), 0.0)
            val = -s * au * (1 + 1j * b * (2 / np.pi) * np.sign(u) * lg)
        else:
            val = -(s**a) * au**a * (1 - 1j * b * np.sign(u) * np.tan(0.5 * np.pi * a))
        return val + 1j * self.location * u

    def moments(self):
        if self.alpha < 2:
            raise DomainError(f"stable driver with alpha={self.alpha} has infinite variance")
        return np.array([self.location]), np.array([[2.0 * self.scale**2]])

    def gaussian_part(self):
        return np.array([[2.0 * self.scale**2]]) if self.alpha == 2 else np.zeros((1, 1))

    def to_dict(self):
        return {
            "family": "stable",
            "params": {
                "alpha": float(self.alpha),
                "scale": float(self.scale),
                "skew": float(self.skew),
                "location": float(self.location),
            },
        }


@dataclass(frozen=True, eq=False)
class Sum:
    """Sum of independent drivers of a common dimension."""

    components: Tuple

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise DomainError("a sum driver needs at least one component")
        dims = {c.dim for c in comps}
        if len(dims) != 1:
            raise DomainError(f"sum components have inconsistent dimensions {sorted(dims)}")
        object.__setattr__(self, "components", comps)

    @property
    def dim(self):
        return self.components[0].dim

    def sample(self, h, n, rng):
        return sum(c.sample(h, n, rng) for c in self.components)

    def psi(self, u):
        return sum(c.psi(u) for c in self.components)

    def moments(self):
        mean, cov = np.zeros(self.dim), np.zeros((self.dim, self.dim))
        for i, c in enumerate(self.components):
            try:
                cm, cc = c.moments()
            except DomainError as exc:
                raise DomainError(f"sum component {i} ({type(c).__name__}): {exc}") from exc
            mean, cov = mean + cm, cov + cc
        return mean, cov

    def gaussian_part(self):
        return sum(c.gaussian_part() for c in self.components)

    def to_dict(self):
        return {"family": "sum", "params": {"components": [c.to_dict() for c in self.components]}}


LevyModel = Union[Triplet, Gamma, NIG, Stable, Sum]


# -- public operations ------------------------------------------------------


def sample_increments(model, h: float, n: int, seed: int, stream: int = 0) -> IncrementBatch:
    """Draw ``n`` iid copies of ``L_h``.

    The generator stream is derived from ``(seed, stream)``; identical inputs
    give bit-identical output.
    """
    if not h > 0:
        raise DomainError(f"grid step must be positive, got {h}")
    if int(n) < 1:
        raise DomainError("need at least one increment")
    rng = make_rng(seed, stream)
    values = model.sample(float(h), int(n), rng)
    return IncrementBatch(h=float(h), values=values, seed={"seed": int(seed), "stream": int(stream)})


def char_exponent(model, u) -> complex:
    """``psi_L(u)`` with ``E exp(i<u, L_t>) = exp(t psi_L(u))``."""
    if not hasattr(model, "psi"):
        raise UnsupportedError(f"{type(model).__name__} has no closed-form exponent")
    pts = _as_points(u, model.dim)
    if pts.shape[0] != 1:
        raise DomainError("char_exponent takes a single point; use model.psi for batches")
    return complex(model.psi(pts)[0])


def moment_rates(model) -> Tuple[np.ndarray, np.ndarray]:
    """``(E[L_1], Var[L_1])``; infinite-variance models raise :class:`DomainError`."""
    mean, cov = model.moments()
    return np.asarray(mean, dtype=float), symmetrize(np.asarray(cov, dtype=float))


def path_from_increments(batch: IncrementBatch) -> SampledPath:
    """Cumulative sum of the increments with ``L_0 = 0`` prepended."""
    y = np.vstack([np.zeros((1, batch.values.shape[1])), np.cumsum(batch.values, axis=0)])
    return SampledPath(h=batch.h, y=y, seed=batch.seed, model_tag="levy", increments=batch.values)


# -- serialisation ----------------------------------------------------------


def model_to_dict(model) -> dict:
    return model.to_dict()


def _jumps_from_dict(d):
    if d is None:
        return None
    kind = d.get("kind")
    if kind == "poisson":
        return PoissonJumps(d["rate"], d["size"])
    if kind == "compound":
        params = {k: v for k, v in d.items() if k not in ("kind", "rate", "dist")}
        return CompoundPoissonJumps(d["rate"], d["dist"], params)
    raise DomainError(f"unknown jump kind {kind!r}")


def model_from_dict(d: dict):
    """Inverse of :func:`model_to_dict`."""
    try:
        family = d["family"]
        p = d.get("params", {})
    except (KeyError, TypeError) as exc:
        raise DomainError("driver spec needs 'family' and 'params'") from exc
    if family == "triplet":
        return Triplet(p["gamma"], p["sigma_g"], _jumps_from_dict(p.get("jumps")))
    if family == "gamma":
        return Gamma(float(p["gamma"]))
    if family == "nig":
        return NIG(float(p["delta"]), float(p["kappa"]), p["beta"], p["Delta"], p.get("mu"))
    if family == "stable":
        return Stable(
            float(p["alpha"]), float(p.get("scale", 1.0)), float(p.get("skew", 0.0)),
            float(p.get("location", 0.0)),
        )
    if family == "sum":
        return Sum(tuple(model_from_dict(c) for c in p["components"]))
    raise DomainError(f"unknown driver family {family!r}")
