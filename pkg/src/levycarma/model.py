"""CARMA coefficient systems and their state-space realisations.

A CARMA(p, q) spec holds ``P(z) = z^p I + A_1 z^{p-1} + ... + A_p`` and
``Q(z) = B_0 z^q + ... + B_q``. :func:`companion` builds the block-companion
state-space form with the beta-recursion input matrix; :func:`transfer_function`
evaluates the rational transfer matrix from either representation.
"""

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .errors import DomainError, NumericalError, SingularityError

__all__ = [
    "CarmaSpec",
    "StateSpace",
    "Spectrum",
    "beta_coefficients",
    "companion",
    "transfer_function",
    "spectrum",
    "verify_equivalence",
]


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class CarmaSpec:
    """Orders and coefficient matrices of a causal CARMA(p, q) model.

    ``ar`` holds ``A_1..A_p`` (each d x d), ``ma`` holds ``B_0..B_q``
    (each d x m); ``q = len(ma) - 1``. Scalars are promoted to 1 x 1.
    """

    ar: Tuple[np.ndarray, ...]
    ma: Tuple[np.ndarray, ...]

    def __post_init__(self):
        ar = tuple(_frozen(np.atleast_2d(a)) for a in self.ar)
        ma = tuple(_frozen(np.atleast_2d(b)) for b in self.ma)
        if len(ar) < 1:
            raise DomainError("AR order p must be at least 1")
        if len(ma) < 1:
            raise DomainError("MA polynomial needs at least B_0")
        if len(ma) - 1 >= len(ar):
            raise DomainError(f"need q < p, got p={len(ar)}, q={len(ma) - 1}")
        d = ar[0].shape[0]
        m = ma[0].shape[1]
        for a in ar:
            if a.shape != (d, d):
                raise DomainError(f"AR coefficients must be {d}x{d}, got {a.shape}")
        for b in ma:
            if b.shape != (d, m):
                raise DomainError(f"MA coefficients must be {d}x{m}, got {b.shape}")
        if not np.any(ma[0]):
            raise DomainError("leading MA coefficient B_0 must be non-zero")
        for c in ar + ma:
            if not np.all(np.isfinite(c)):
                raise DomainError("coefficients must be finite")
        object.__setattr__(self, "ar", ar)
        object.__setattr__(self, "ma", ma)

    @property
    def p(self):
        return len(self.ar)

    @property
    def q(self):
        return len(self.ma) - 1

    @property
    def d(self):
        return self.ar[0].shape[0]

    @property
    def m(self):
        return self.ma[0].shape[1]

    @classmethod
    def univariate(cls, ar: Sequence[float], ma: Sequence[float]) -> "CarmaSpec":
        return cls(tuple(np.array([[a]]) for a in ar), tuple(np.array([[b]]) for b in ma))

    def P(self, z):
        out = np.eye(self.d, dtype=complex) * z**self.p
        for j, a in enumerate(self.ar, start=1):
            out = out + a * z ** (self.p - j)
        return out

    def Q(self, z):
        out = np.zeros((self.d, self.m), dtype=complex)
        for j, b in enumerate(self.ma):
            out = out + b * z ** (self.q - j)
        return out

    def to_dict(self):
        return {
            "kind": "carma",
            "p": self.p,
            "q": self.q,
            "d": self.d,
            "m": self.m,
            "ar": [a.tolist() for a in self.ar],
            "ma": [b.tolist() for b in self.ma],
        }

    @classmethod
    def from_dict(cls, d):
        spec = cls(tuple(np.asarray(a, dtype=float) for a in d["ar"]),
                   tuple(np.asarray(b, dtype=float) for b in d["ma"]))
        for key in ("p", "q", "d", "m"):
            if key in d and int(d[key]) != getattr(spec, key):
                raise DomainError(f"declared {key}={d[key]} does not match coefficients")
        return spec


@dataclass(frozen=True, eq=False)
class StateSpace:
    """``dX = A X dt + B dL``, ``Y = C X``, with ``Var(L_1) = sigma_l``."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    sigma_l: Optional[np.ndarray] = None

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        C = np.atleast_2d(np.asarray(self.C, dtype=float))
        n = A.shape[0]
        if A.shape != (n, n):
            raise DomainError(f"A must be square, got {A.shape}")
        if B.shape[0] != n:
            raise DomainError(f"B must have {n} rows, got {B.shape}")
        if C.shape[1] != n:
            raise DomainError(f"C must have {n} columns, got {C.shape}")
        m = B.shape[1]
        s = np.eye(m) if self.sigma_l is None else np.atleast_2d(np.asarray(self.sigma_l, dtype=float))
        if s.shape != (m, m):
            raise DomainError(f"sigma_l must be {m}x{m}, got {s.shape}")
        if not np.allclose(s, s.T, rtol=0, atol=1e-12):
            raise DomainError("sigma_l must be symmetric")
        for name, val in (("A", A), ("B", B), ("C", C), ("sigma_l", s)):
            object.__setattr__(self, name, _frozen(val))

    @property
    def N(self):
        return self.A.shape[0]

    @property
    def d(self):
        return self.C.shape[0]

    @property
    def m(self):
        return self.B.shape[1]

    def with_sigma(self, sigma_l) -> "StateSpace":
        return StateSpace(self.A, self.B, self.C, sigma_l)

    def to_dict(self):
        return {
            "kind": "state_space",
            "N": self.N,
            "d": self.d,
            "m": self.m,
            "A": self.A.tolist(),
            "B": self.B.tolist(),
            "C": self.C.tolist(),
            "sigma_l": self.sigma_l.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        ss = cls(d["A"], d["B"], d["C"], d.get("sigma_l"))
        for key in ("N", "d", "m"):
            if key in d and int(d[key]) != getattr(ss, key):
                raise DomainError(f"declared {key}={d[key]} does not match matrices")
        return ss


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: Tuple[complex, ...]
    causal: bool

    @property
    def max_real(self) -> float:
        return max(ev.real for ev in self.eigenvalues)


def beta_coefficients(spec: CarmaSpec):
    """Input matrices ``beta_1..beta_p`` of the companion realisation.

    ``beta_1 = ... = beta_{p-q-1} = 0`` and, for ``j = q, q-1, ..., 0`` (so
    lower-index betas are available when needed),
    ``beta_{p-j} = B_{q-j} - sum_{i=1}^{p-j-1} A_i beta_{p-j-i}``.
    """
    p, q = spec.p, spec.q
    beta = {k: np.zeros((spec.d, spec.m)) for k in range(1, p + 1)}
    for j in range(q, -1, -1):
        k = p - j
        acc = spec.ma[q - j].copy()
        for i in range(1, k):
            acc = acc - spec.ar[i - 1] @ beta[k - i]
        beta[k] = acc
    return [beta[k] for k in range(1, p + 1)]


def companion(spec: CarmaSpec, sigma_l=None) -> StateSpace:
    """Block-companion realisation ``(A, beta, [I 0 .. 0])`` of ``spec``."""
    p, d = spec.p, spec.d
    n = p * d
    A = np.zeros((n, n))
    if p > 1:
        A[: n - d, d:] = np.eye(n - d)
    for j, a in enumerate(spec.ar, start=1):
        col = (p - j) * d
        A[n - d:, col: col + d] = -a
    B = np.vstack(beta_coefficients(spec))
    C = np.zeros((d, n))
    C[:, :d] = np.eye(d)
    return StateSpace(A, B, C, sigma_l)


def transfer_function(x: Union[StateSpace, CarmaSpec], z: complex) -> np.ndarray:
    """``C (zI - A)^{-1} B`` or ``P(z)^{-1} Q(z)``."""
    z = complex(z)
    if isinstance(x, StateSpace):
        lhs = z * np.eye(x.N) - x.A
        rhs = x.B.astype(complex)
        left = x.C
    elif isinstance(x, CarmaSpec):
        lhs = x.P(z)
        rhs = x.Q(z)
        left = None
    else:
        raise TypeError(f"expected StateSpace or CarmaSpec, got {type(x).__name__}")
    if np.linalg.cond(lhs) > 1e14:
        raise SingularityError(z)
    try:
        sol = np.linalg.solve(lhs, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularityError(z) from exc
    return sol if left is None else left @ sol


def spectrum(ss: StateSpace) -> Spectrum:
    """Eigenvalues of ``A``; causal iff every real part is strictly negative."""
    try:
        ev = np.linalg.eigvals(ss.A)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigenvalue computation failed: {exc}") from exc
    ev = tuple(complex(e) for e in ev)
    return Spectrum(ev, all(e.real < 0 for e in ev))


def _default_points(ss, count=20, seed=20240601):
    rng = np.random.default_rng(seed)
    ev = np.linalg.eigvals(ss.A)
    pts = []
    while len(pts) < count:
        z = np.exp(1j * rng.uniform(0, 2 * np.pi))
        if ev.size == 0 or np.min(np.abs(ev - z)) > 1e-6:
            pts.append(z)
    return pts


def verify_equivalence(ss: StateSpace, spec: CarmaSpec, test_points=None) -> float:
    """Largest entrywise ``|C(zI-A)^{-1}B - P(z)^{-1}Q(z)|`` over the test points.

    Defaults to 20 random points on the unit circle that avoid the poles.
    """
    pts = _default_points(ss) if test_points is None else list(test_points)
    worst = 0.0
    for z in pts:
        diff = transfer_function(ss, z) - transfer_function(spec, z)
        worst = max(worst, float(np.max(np.abs(diff))))
    return worst
