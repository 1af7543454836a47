"""Containers for equidistant increment batches and sampled paths."""

from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from .errors import DomainError


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Philox generator keyed by ``(seed, stream)``.

    Distinct streams are statistically independent and do not depend on the
    order in which they are created, so replications can be farmed out to
    any number of workers.
    """
    if seed is None:
        raise DomainError("an explicit integer seed is required")
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream),))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True, eq=False)
class IncrementBatch:
    h: float
    values: np.ndarray
    seed: Any = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if self.h <= 0:
            raise DomainError(f"grid step must be positive, got {self.h}")
        if values.shape[0] < 1:
            raise DomainError("an increment batch needs at least one row")
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True, eq=False)
class SampledPath:
    """Observations ``y[k] = Y_{k h}``, ``k = 0..n-1``.

    ``increments`` optionally carries the true driver increments between
    consecutive observations (one row fewer than ``y``) when the path was
    simulated.
    """

    h: float
    y: np.ndarray
    x0: Optional[np.ndarray] = None
    seed: Any = None
    model_tag: str = ""
    increments: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        if y.ndim == 1:
            y = y[:, None]
        if self.h <= 0:
            raise DomainError(f"grid step must be positive, got {self.h}")
        if y.shape[0] < 1:
            raise DomainError("a sampled path needs at least one observation")
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def d(self) -> int:
        return self.y.shape[1]

    @property
    def t(self) -> np.ndarray:
        return self.h * np.arange(self.n)

    def thin(self, factor: int) -> "SampledPath":
        """Keep every ``factor``-th observation."""
        factor = int(factor)
        if factor < 1:
            raise DomainError("thinning factor must be >= 1")
        inc = None
        if self.increments is not None:
            m = (self.n - 1) // factor
            inc = self.increments[: m * factor].reshape(m, factor, -1).sum(axis=1)
        return SampledPath(
            h=self.h * factor,
            y=self.y[::factor][: (self.n - 1) // factor + 1],
            x0=self.x0,
            seed=self.seed,
            model_tag=self.model_tag,
            increments=inc,
            meta=dict(self.meta),
        )
