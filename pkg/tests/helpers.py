"""Random causal models shared by the test modules."""

from math import comb

import numpy as np

from levycarma import CarmaSpec, StateSpace, companion, spectrum


def shift_roots(ar, c):
    """Coefficients of ``P(z + c)`` for the monic matrix polynomial with ``ar``.

    Every zero of ``det P`` moves by ``-c``.
    """
    p = len(ar)
    d = ar[0].shape[0]
    full = [np.eye(d)] + [np.asarray(a, dtype=float) for a in ar]
    out = []
    for j in range(1, p + 1):
        acc = np.zeros((d, d))
        for k in range(j + 1):
            acc = acc + full[k] * comb(p - k, j - k) * c ** (j - k)
        out.append(acc)
    return out


def random_spec(rng, d=None, m=None, p=None, q=None, margin=(0.2, 1.0)):
    """Causal CARMA spec with ``d, m <= 2`` and ``p <= 4`` unless given."""
    d = int(rng.integers(1, 3)) if d is None else d
    m = int(rng.integers(1, 3)) if m is None else m
    p = int(rng.integers(1, 5)) if p is None else p
    q = int(rng.integers(0, p)) if q is None else q
    ar = [rng.normal(size=(d, d)) for _ in range(p)]
    ev = np.linalg.eigvals(companion(CarmaSpec(tuple(ar), (np.eye(d, m),))).A)
    c = max(0.0, ev.real.max()) + rng.uniform(*margin)
    ar = shift_roots(ar, c)
    ma = [rng.normal(size=(d, m)) for _ in range(q + 1)]
    return CarmaSpec(tuple(ar), tuple(ma))


def random_psd(rng, m, rank=None):
    g = rng.normal(size=(m, m if rank is None else rank))
    return g @ g.T + (0.1 * np.eye(m) if rank is None else 0.0)


def random_state_space(rng, N, d=None, m=None, margin=(0.2, 1.0)):
    """Causal ``(A, B, C, Sigma_L)`` with a random dense ``A``."""
    d = int(rng.integers(1, N + 1)) if d is None else d
    m = int(rng.integers(1, N + 1)) if m is None else m
    a = rng.normal(size=(N, N)) / np.sqrt(N)
    shift = np.linalg.eigvals(a).real.max() + rng.uniform(*margin)
    a = a - shift * np.eye(N)
    ss = StateSpace(a, rng.normal(size=(N, m)), rng.normal(size=(d, N)), random_psd(rng, m))
    assert spectrum(ss).causal
    return ss


def random_sampled_model(rng, h=1.0, bivariate=None):
    """Causal companion model with pairwise distinct eigenvalues inside the ``pi/h`` strip."""
    for _ in range(1000):
        d = (2 if rng.random() < 0.5 else 1) if bivariate is None else (2 if bivariate else 1)
        spec = random_spec(rng, d=d, m=d, p=int(rng.integers(1, 4)))
        ss = companion(spec, random_psd(rng, d))
        ev = np.linalg.eigvals(ss.A)
        gaps = [abs(ev[i] - ev[j]) for i in range(ev.size) for j in range(i)]
        if np.all(np.abs(ev.imag) < 0.9 * np.pi / h) and (not gaps or min(gaps) > 1e-3):
            return ss
    raise RuntimeError("could not draw a model with distinct in-strip eigenvalues")
