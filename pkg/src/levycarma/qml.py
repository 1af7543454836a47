"""Quasi-maximum-likelihood estimation of continuous-time state-space models
from equidistant observations.

The Gaussian likelihood is evaluated from the linear innovations of the
sampled system (Kalman predictor started at the stationary covariance).
:func:`fit` minimises the per-observation negative quasi-log-likelihood by a
bounded Nelder-Mead search polished with L-BFGS-B, restarted from several
points in the parameter box. :func:`asymptotic_cov` returns the sandwich
``J^{-1} I J^{-1} / L``.
"""

import logging
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import optimize

from ._backend import kernels
from .errors import DomainError, NumericalError
from .model import CarmaSpec, StateSpace, companion, spectrum
from .moments import stationary_cov
from .paths import SampledPath, make_rng
from .sampler import discretize

log = logging.getLogger(__name__)

__all__ = [
    "Parametrization",
    "InnovationSequence",
    "FitSettings",
    "FitResult",
    "IdentifiabilityReport",
    "univariate_canonical",
    "bivariate_example",
    "user_table",
    "kalman_innovations",
    "neg_quasi_loglik",
    "fit",
    "asymptotic_cov",
    "identifiability_check",
    "BIVARIATE_TRUTH",
]

PENALTY = 1e10

# true parameter of the bivariate NIG simulation study (theta_1..theta_10)
BIVARIATE_TRUTH = np.array([-1.0, -2.0, 1.0, -2.0, -3.0, 1.0, 2.0, 0.4695, -0.1622, 0.3756])


@dataclass(frozen=True, eq=False)
class Parametrization:
    """Map ``theta -> (A, B, C, Sigma_L)`` on a compact box.

    ``constraint`` may return a non-negative violation measure for points that
    build a model but should be excluded (it feeds the soft wall of the
    likelihood); ``sigma_direct`` flags families whose ``Sigma_L`` entries are
    parameters themselves and therefore need a PSD check.
    """

    family: str
    names: tuple
    lower: np.ndarray
    upper: np.ndarray
    builder: Callable[[np.ndarray], StateSpace]
    sigma_direct: bool = False
    constraint: Optional[Callable[[np.ndarray], float]] = None

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        if lo.shape != hi.shape or lo.shape != (len(self.names),):
            raise DomainError("bounds and names must have matching lengths")
        if np.any(~np.isfinite(lo)) or np.any(~np.isfinite(hi)) or np.any(lo >= hi):
            raise DomainError("parameter box must be finite with lower < upper")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        object.__setattr__(self, "names", tuple(self.names))

    @property
    def dim(self) -> int:
        return len(self.names)

    def build(self, theta) -> StateSpace:
        return self.builder(np.asarray(theta, dtype=float))

    def contains(self, theta, tol=1e-12) -> bool:
        theta = np.asarray(theta, dtype=float)
        return theta.shape == (self.dim,) and bool(
            np.all(theta >= self.lower - tol) and np.all(theta <= self.upper + tol)
        )

    def with_box(self, lower=None, upper=None) -> "Parametrization":
        return replace(
            self,
            lower=self.lower if lower is None else lower,
            upper=self.upper if upper is None else upper,
        )

    def permuted(self, perm: Sequence[int]) -> "Parametrization":
        """Same model family with coordinates relabelled: ``new[i] = old[perm[i]]``."""
        perm = np.asarray(perm, dtype=int)
        if sorted(perm.tolist()) != list(range(self.dim)):
            raise DomainError("perm must be a permutation of range(dim)")
        inv = np.argsort(perm)
        base, cons = self.builder, self.constraint
        return Parametrization(
            family=self.family,
            names=tuple(self.names[i] for i in perm),
            lower=self.lower[perm],
            upper=self.upper[perm],
            builder=lambda t: base(np.asarray(t, dtype=float)[inv]),
            sigma_direct=self.sigma_direct,
            constraint=None if cons is None else (lambda t: cons(np.asarray(t, dtype=float)[inv])),
        )


# -- built-in families ------------------------------------------------------


def univariate_canonical(p: int, q: int = 0, lower=None, upper=None) -> Parametrization:
    """Univariate CARMA(p, q) in companion form.

    ``theta = (a_1..a_p, b_1..b_q, s)``: ``a`` is the bottom row of the
    companion matrix (so for p = 1, ``a_1`` is the OU rate ``a``), ``b`` are
    the MA coefficients after the fixed ``B_0 = 1`` and ``Sigma_L = s^2``.
    MA roots are kept in the closed left half-plane, which removes the
    reflection ambiguity of the spectral density.
    """
    if p < 1 or q < 0 or q >= p:
        raise DomainError("need p >= 1 and 0 <= q < p")
    names = tuple(f"a{i + 1}" for i in range(p)) + tuple(f"b{i + 1}" for i in range(q)) + ("s",)
    lo = np.r_[np.full(p, -10.0), np.full(q, -10.0), 1e-3] if lower is None else lower
    hi = np.r_[np.full(p, 10.0), np.full(q, 10.0), 10.0] if upper is None else upper

    def builder(theta):
        bottom = theta[:p]
        ar = [-bottom[p - j] for j in range(1, p + 1)]
        spec = CarmaSpec.univariate(ar, [1.0, *theta[p: p + q]])
        s = theta[p + q]
        return companion(spec, sigma_l=[[s * s]])

    def constraint(theta):
        if q == 0:
            return 0.0
        roots = np.roots(np.r_[1.0, theta[p: p + q]])
        return float(max(0.0, np.max(roots.real)))

    return Parametrization("univariate-canonical", names, lo, hi, builder, False, constraint)


def _bivariate_builder(t):
    A = np.array([[t[0], t[1], 0.0], [0.0, 0.0, 1.0], [t[2], t[3], t[4]]])
    B = np.array([[t[0], t[1]], [t[5], t[6]], [t[2] + t[4] * t[5], t[3] + t[4] * t[6]]])
    C = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    S = np.array([[t[7], t[8]], [t[8], t[9]]])
    return StateSpace(A, B, C, S)


def bivariate_example(lower=None, upper=None) -> Parametrization:
    """Ten-parameter bivariate (N = 3, d = m = 2) canonical state-space family.

    ``theta_8..theta_10`` are the entries of ``Sigma_L`` themselves.
    """
    names = tuple(f"theta{i}" for i in range(1, 11))
    lo = np.r_[np.full(7, -5.0), 1e-3, -2.0, 1e-3] if lower is None else lower
    hi = np.r_[np.full(7, 5.0), 2.0, 2.0, 2.0] if upper is None else upper
    return Parametrization("bivariate-example", names, lo, hi, _bivariate_builder, sigma_direct=True)


def _affine_entry(entry, theta):
    if isinstance(entry, (int, float)):
        return float(entry)
    val = float(entry.get("const", 0.0))
    for idx, coef in entry.get("theta", {}).items():
        val += float(coef) * theta[int(idx)]
    return val


def user_table(table: dict) -> Parametrization:
    """Affine parametrisation read from a JSON-style table.

    Each matrix (``A``, ``B``, ``C`` and either ``sigma_l`` or
    ``sigma_factor``) is a nested list whose entries are numbers or
    ``{"const": c, "theta": {"<index>": coef, ...}}``. With ``sigma_factor``
    the driver covariance is ``F F^T``; with ``sigma_l`` the entries are used
    directly and checked for positive semi-definiteness.
    """
    try:
        names = tuple(table["names"])
        lo, hi = table["lower"], table["upper"]
        mats = {k: table[k] for k in ("A", "B", "C")}
    except KeyError as exc:
        raise DomainError(f"user table is missing {exc}") from exc
    direct = "sigma_l" in table
    sig = table.get("sigma_l", table.get("sigma_factor"))
    if sig is None:
        raise DomainError("user table needs sigma_l or sigma_factor")

    def evaluate(mat, theta):
        return np.array([[_affine_entry(e, theta) for e in row] for row in mat], dtype=float)

    def builder(theta):
        s = evaluate(sig, theta)
        if not direct:
            s = s @ s.T
        return StateSpace(evaluate(mats["A"], theta), evaluate(mats["B"], theta),
                          evaluate(mats["C"], theta), s)

    return Parametrization("user-table", names, lo, hi, builder, sigma_direct=direct)


def parametrization_from_dict(d: dict) -> Parametrization:
    family = d.get("family")
    if family == "univariate-canonical":
        par = univariate_canonical(int(d.get("p", 1)), int(d.get("q", 0)))
    elif family == "bivariate-example":
        par = bivariate_example()
    elif family == "user-table":
        return user_table(d["table"])
    else:
        raise DomainError(f"unknown parametrisation family {family!r}")
    if "lower" in d or "upper" in d:
        par = par.with_box(d.get("lower"), d.get("upper"))
    return par


# -- innovations and likelihood ---------------------------------------------


@dataclass(frozen=True, eq=False)
class InnovationSequence:
    e: np.ndarray
    v: np.ndarray
    loglik: float
    terms: np.ndarray


def kalman_innovations(ss: StateSpace, path: SampledPath) -> InnovationSequence:
    """Linear innovations ``e_n`` and their covariances ``V_n`` along ``path``.

    ``loglik = -sum_n 0.5 (log det V_n + e_n^T V_n^{-1} e_n)``.
    """
    if path.d != ss.d:
        raise DomainError(f"path has {path.d} columns, model output has {ss.d}")
    ds = discretize(ss, path.h)
    v0 = stationary_cov(ss)
    e, v, terms, status = kernels.kalman_filter(ds.phi, ds.q_h, ds.c, v0, path.y)
    if status >= 0:
        raise NumericalError(f"prediction covariance not positive definite at step {status}")
    return InnovationSequence(e, v, -float(np.sum(terms)), terms)


def _violation(par, theta, ss):
    ev = np.linalg.eigvals(ss.A)
    worst = float(np.max(ev.real))
    if worst >= 0:
        return worst + 1e-12
    if par.sigma_direct:
        lo = float(np.min(np.linalg.eigvalsh(ss.sigma_l)))
        if lo < 0:
            return -lo
    if par.constraint is not None:
        c = par.constraint(theta)
        if c > 0:
            return c
    return 0.0


def _terms(par, theta, path):
    """Per-observation contributions, or ``(None, penalty)`` outside the admissible set."""
    try:
        ss = par.build(theta)
    except DomainError:
        return None, PENALTY
    viol = _violation(par, theta, ss)
    if viol > 0:
        return None, PENALTY + 1e6 * viol
    try:
        inn = kalman_innovations(ss, path)
    except (NumericalError, DomainError, np.linalg.LinAlgError):
        return None, PENALTY
    total = -inn.loglik
    if not np.isfinite(total):
        return None, PENALTY
    return inn.terms, total


def neg_quasi_loglik(par: Parametrization, theta, path: SampledPath) -> float:
    """Constant-free negative Gaussian quasi-log-likelihood.

    Non-causal (or otherwise inadmissible) points inside the box return the
    soft-wall value ``1e10 + 1e6 * violation``.
    """
    theta = np.asarray(theta, dtype=float)
    if not par.contains(theta):
        raise DomainError(f"theta {theta} outside the parameter box")
    return _terms(par, theta, path)[1]


# -- fitting ----------------------------------------------------------------


@dataclass(frozen=True)
class FitSettings:
    n_starts: int = 8
    maxiter: int = 2000
    seed: int = 0
    gtol: float = 1e-5
    xatol: float = 1e-7
    fatol: float = 1e-10
    compute_cov: bool = True

    def to_dict(self):
        return dict(self.__dict__)


@dataclass(eq=False)
class FitResult:
    theta_hat: np.ndarray
    loglik: float
    omega: Optional[np.ndarray]
    iterations: int
    converged: bool
    grad_norm: float
    n_obs: int
    names: tuple = ()
    starts: list = field(default_factory=list)
    settings: dict = field(default_factory=dict)
    message: str = ""

    @property
    def stderr(self) -> Optional[np.ndarray]:
        if self.omega is None:
            return None
        return np.sqrt(np.clip(np.diag(self.omega), 0.0, None))

    def to_dict(self):
        se = self.stderr
        return {
            "theta_hat": self.theta_hat.tolist(),
            "names": list(self.names),
            "stderr": None if se is None else se.tolist(),
            "omega": None if self.omega is None else self.omega.tolist(),
            "loglik": float(self.loglik),
            "converged": bool(self.converged),
            "iterations": int(self.iterations),
            "grad_norm": float(self.grad_norm),
            "n_obs": int(self.n_obs),
            "message": self.message,
            "settings": self.settings,
        }


def _projected_gradient(f, x, lo, hi):
    g = np.zeros_like(x)
    for i in range(x.size):
        step = 1e-6 * max(1.0, abs(x[i]))
        up, dn = min(x[i] + step, hi[i]), max(x[i] - step, lo[i])
        xp, xm = x.copy(), x.copy()
        xp[i], xm[i] = up, dn
        g[i] = (f(xp) - f(xm)) / (up - dn)
        # drop components pushing out of an active bound
        if (x[i] <= lo[i] + 1e-10 and g[i] > 0) or (x[i] >= hi[i] - 1e-10 and g[i] < 0):
            g[i] = 0.0
    return g


def fit(par: Parametrization, path: SampledPath, theta_init, settings: FitSettings = None) -> FitResult:
    """Multi-start QML fit.

    Starts are ``theta_init`` plus ``n_starts - 1`` uniform draws from the box
    (stream keyed by ``settings.seed``). Each start runs bounded Nelder-Mead
    followed by L-BFGS-B; the lowest objective wins.
    """
    settings = settings or FitSettings()
    theta_init = np.asarray(theta_init, dtype=float)
    if not par.contains(theta_init):
        raise DomainError(f"theta_init {theta_init} outside the parameter box")
    lo, hi = par.lower, par.upper
    L = path.n
    bounds = list(zip(lo, hi))

    def f(theta):
        return _terms(par, theta, path)[1] / L

    rng = make_rng(settings.seed, 0)
    starts = [theta_init] + [rng.uniform(lo, hi) for _ in range(max(0, settings.n_starts - 1))]
    records = []
    best = None
    for x0 in starts:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            nm = optimize.minimize(
                f, x0, method="Nelder-Mead", bounds=bounds,
                options={"maxiter": settings.maxiter, "xatol": settings.xatol,
                         "fatol": settings.fatol, "adaptive": par.dim > 3},
            )
            x, fx, nit, ok = nm.x, nm.fun, nm.nit, bool(nm.success)
            if fx < PENALTY / L:
                lb = optimize.minimize(
                    f, nm.x, method="L-BFGS-B", bounds=bounds,
                    options={"maxiter": settings.maxiter, "gtol": 1e-9, "ftol": 1e-15},
                )
                nit += lb.nit
                if lb.fun <= fx:
                    x, fx = lb.x, lb.fun
                ok = ok or bool(lb.success)
        rec = {"start": x0.tolist(), "theta": x.tolist(), "value": float(fx), "iterations": int(nit),
               "step_converged": ok}
        records.append(rec)
        if best is None or fx < best[1]:
            best = (x, fx, nit, ok)
    x, fx, _, ok = best
    if fx >= PENALTY / L:
        raise DomainError("no start reached an admissible (causal) parameter")
    gnorm = float(np.linalg.norm(_projected_gradient(f, x, lo, hi)))
    converged = bool(ok and gnorm < settings.gtol)
    total_iters = int(sum(r["iterations"] for r in records))
    omega, msg = None, ""
    if settings.compute_cov:
        try:
            omega = asymptotic_cov(par, x, path)
        except (NumericalError, DomainError) as exc:
            msg = f"asymptotic covariance unavailable: {exc}"
            log.warning(msg)
    return FitResult(
        theta_hat=x, loglik=-fx * L, omega=omega, iterations=total_iters, converged=converged,
        grad_norm=gnorm, n_obs=L, names=par.names, starts=records, settings=settings.to_dict(),
        message=msg,
    )


# -- sandwich covariance ----------------------------------------------------


def _bartlett_lrv(scores):
    """Bartlett-kernel long-run covariance with bandwidth ``floor(L^{1/3})``."""
    L = scores.shape[0]
    s = scores - scores.mean(axis=0)
    bw = int(np.floor(L ** (1.0 / 3.0)))
    out = s.T @ s / L
    for k in range(1, bw + 1):
        g = s[k:].T @ s[:-k] / L
        out += (1.0 - k / (bw + 1.0)) * (g + g.T)
    return out


def asymptotic_cov(par: Parametrization, theta_hat, path: SampledPath) -> np.ndarray:
    """Sandwich estimate ``J^{-1} I J^{-1} / L`` of ``Cov(theta_hat)``.

    ``J`` is the central-difference Hessian of the averaged negative
    quasi-log-likelihood, ``I`` the Bartlett long-run variance of the
    per-observation scores.
    """
    x = np.asarray(theta_hat, dtype=float)
    k = x.size
    steps = 1e-4 * np.maximum(1.0, np.abs(x))
    if np.any(x - steps < par.lower) or np.any(x + steps > par.upper):
        raise DomainError("theta_hat is not interior to the parameter box")
    L = path.n

    def terms(theta):
        t, total = _terms(par, theta, path)
        if t is None:
            raise NumericalError(f"inadmissible model at perturbed parameter {theta}")
        return t

    f0 = terms(x).sum() / L
    scores = np.empty((L, k))
    fp = np.empty(k)
    fm = np.empty(k)
    for i in range(k):
        e = np.zeros(k)
        e[i] = steps[i]
        tp, tm = terms(x + e), terms(x - e)
        scores[:, i] = (tp - tm) / (2 * steps[i])
        fp[i], fm[i] = tp.sum() / L, tm.sum() / L
    J = np.empty((k, k))
    for i in range(k):
        J[i, i] = (fp[i] - 2 * f0 + fm[i]) / steps[i] ** 2
        for j in range(i):
            ei = np.zeros(k)
            ej = np.zeros(k)
            ei[i], ej[j] = steps[i], steps[j]
            fpp = terms(x + ei + ej).sum() / L
            fpm = terms(x + ei - ej).sum() / L
            fmp = terms(x - ei + ej).sum() / L
            fmm = terms(x - ei - ej).sum() / L
            J[i, j] = J[j, i] = (fpp - fpm - fmp + fmm) / (4 * steps[i] * steps[j])
    # a 1e-4 difference step leaves ~1e-8 relative noise in J, so larger
    # condition numbers cannot be told apart from an exactly singular J
    if not np.all(np.isfinite(J)) or np.linalg.cond(J) > 1e8:
        raise NumericalError("Hessian is singular; the parametrisation may not be identifiable")
    I = _bartlett_lrv(scores)
    Jinv = np.linalg.inv(J)
    omega = Jinv @ I @ Jinv / L
    omega = 0.5 * (omega + omega.T)
    w, u = np.linalg.eigh(omega)
    if w.min() < 0:
        # J^-1 I J^-1 is PSD in exact arithmetic; with cond(J) up to 1e8 the
        # rounding in the small eigenvalues reaches ~1e-8 of the largest
        if w.min() < -1e-8 * max(abs(w.max()), 1e-300):
            warnings.warn(f"clipping negative eigenvalue {w.min():.3e} of the sandwich covariance")
        omega = (u * np.clip(w, 0.0, None)) @ u.T
    return omega


# -- identifiability --------------------------------------------------------


@dataclass(frozen=True)
class IdentifiabilityReport:
    distinct: bool
    max_abs_diff: float
    strip_violations: tuple

    def __bool__(self):
        return self.distinct


def sampled_spectral_density(ss: StateSpace, h: float, omegas) -> np.ndarray:
    """Spectral density of ``Y_{kh}``, evaluated at continuous-time angular
    frequencies folded into ``[-pi/h, pi/h]``; shape ``(len(omegas), d, d)``."""
    ds = discretize(ss, h)
    v = stationary_cov(ss)
    out = []
    eye = np.eye(ss.N)
    for w in np.atleast_1d(omegas):
        z = np.exp(1j * w * h)
        # autocovariances C phi^k V C^T for k >= 0; f = (1/2pi) sum_k gamma(k) e^{-ik wh}
        r = np.linalg.solve(eye - ds.phi / z, ds.phi / z)  # sum_{k>=1} (phi/z)^k
        pos = ss.C @ r @ v @ ss.C.T
        out.append((ss.C @ v @ ss.C.T + pos + pos.conj().T) / (2 * np.pi))
    return np.array(out)


def identifiability_check(par: Parametrization, theta1, theta2, h: float, freq_grid=None) -> IdentifiabilityReport:
    """Whether ``theta1`` and ``theta2`` give different sampled spectral densities.

    Also reports eigenvalues violating the distinctness/strip assumption at
    either parameter.
    """
    if freq_grid is None:
        freq_grid = np.linspace(-np.pi / h, np.pi / h, 201)
    violations = []
    dens = []
    for label, th in (("theta1", theta1), ("theta2", theta2)):
        ss = par.build(th)
        ev = np.linalg.eigvals(ss.A)
        for e in ev:
            if abs(e.imag) >= np.pi / h:
                violations.append(f"{label}: eigenvalue {e} outside |Im z| < pi/h")
        for i in range(ev.size):
            for j in range(i):
                if abs(ev[i] - ev[j]) <= 1e-8 * max(1.0, abs(ev[i])):
                    violations.append(f"{label}: repeated eigenvalue {ev[i]}")
        dens.append(sampled_spectral_density(ss, h, freq_grid))
    diff = float(np.max(np.abs(dens[0] - dens[1])))
    return IdentifiabilityReport(diff > 1e-8, diff, tuple(violations))
