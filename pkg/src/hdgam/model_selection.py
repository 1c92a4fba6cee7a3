"""Generalized information criterion over a regularization path."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .gmd_solver import CoefBlocks


def a_n(n: int, p: int, m: int) -> float:
    """Model-size penalty ``m * log(log n) * log p``."""
    if n < 3 or p < 2:
        raise ConfigError(f"a_n needs n >= 3 and p >= 2, got n={n}, p={p}")
    return m * math.log(math.log(n)) * math.log(p)


def gic(deviance: float, support_size: int, a_n_val: float, n: int) -> float:
    """``(deviance + a_n * |support|) / n``; support counts groups, not coefficients."""
    if deviance < 0 or support_size < 0:
        raise ConfigError("deviance and support size must be non-negative")
    return (deviance + a_n_val * support_size) / n


@dataclass
class PathEntry:
    lam: float
    coef: CoefBlocks
    deviance: float
    support_size: int
    gic: float


@dataclass
class FitPath:
    entries: list[PathEntry] = field(default_factory=list)
    a_n: float = 0.0
    n: int = 0

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, i) -> PathEntry:
        return self.entries[i]

    def append(self, lam: float, coef: CoefBlocks, deviance: float) -> PathEntry:
        if self.entries and not lam < self.entries[-1].lam:
            raise ConfigError("path lambdas must be strictly decreasing")
        k = len(coef.support)
        entry = PathEntry(float(lam), coef, float(deviance), k, gic(deviance, k, self.a_n, self.n))
        self.entries.append(entry)
        return entry

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([e.lam for e in self.entries])

    @property
    def gics(self) -> np.ndarray:
        return np.array([e.gic for e in self.entries])

    def rows(self) -> list[dict]:
        return [
            {"lambda": e.lam, "deviance": e.deviance, "support_size": e.support_size, "gic": e.gic}
            for e in self.entries
        ]


def select(path: FitPath) -> int:
    """Index of the minimum-GIC entry; ties go to the larger lambda."""
    if len(path) == 0:
        raise ConfigError("cannot select from an empty path")
    # entries are ordered by decreasing lambda, and argmin returns the first minimum
    return int(np.argmin(path.gics))
