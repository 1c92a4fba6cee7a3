"""B-spline bases with empirical-quantile knots.

Each feature gets its own basis of ``num_basis`` normalized B-splines of a
given ``order`` (polynomial degree + 1).  Inner knots sit at evenly spaced
empirical quantiles of the training column and the boundary knots are
repeated ``order`` times, so the basis is a partition of unity on
``[lo, hi]``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import ConfigError, DegenerateFeature


@dataclass(frozen=True)
class BasisSpec:
    """B-spline configuration for one feature."""

    order: int
    inner_knots: tuple[float, ...]
    lo: float
    hi: float

    def __post_init__(self):
        if self.order < 1:
            raise ConfigError(f"spline order must be >= 1, got {self.order}")
        if not self.lo < self.hi:
            raise ConfigError(f"empty basis domain [{self.lo}, {self.hi}]")
        k = np.asarray(self.inner_knots, dtype=float)
        if k.size and (np.any(np.diff(k) <= 0) or k[0] <= self.lo or k[-1] >= self.hi):
            raise ConfigError("inner knots must be strictly increasing inside (lo, hi)")

    @property
    def num_basis(self) -> int:
        return len(self.inner_knots) + self.order

    @property
    def boundary(self) -> tuple[float, float]:
        return (self.lo, self.hi)

    @property
    def knots(self) -> np.ndarray:
        """Padded knot vector with boundary knots repeated ``order`` times."""
        return np.concatenate(
            [np.full(self.order, self.lo), np.asarray(self.inner_knots, float), np.full(self.order, self.hi)]
        )

    def to_dict(self) -> dict:
        return {
            "order": self.order,
            "inner_knots": list(self.inner_knots),
            "lo": self.lo,
            "hi": self.hi,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BasisSpec":
        return cls(int(d["order"]), tuple(float(v) for v in d["inner_knots"]), float(d["lo"]), float(d["hi"]))


def build_basis_spec(x_col, order: int = 4, num_basis: int = 9) -> BasisSpec:
    """Place ``num_basis - order`` inner knots at empirical quantiles of `x_col`.

    Quantile levels are ``k / (K + 1)`` for ``k = 1..K`` with linear
    interpolation between order statistics.  Quantiles that coincide (heavy
    ties) are merged, which shrinks the basis for that feature.
    """
    if order < 1:
        raise ConfigError(f"spline order must be >= 1, got {order}")
    if num_basis <= order:
        raise ConfigError(f"num_basis ({num_basis}) must exceed order ({order})")
    x = np.asarray(x_col, dtype=float).ravel()
    if not np.all(np.isfinite(x)):
        raise DegenerateFeature("feature contains non-finite values")
    n_distinct = np.unique(x).size
    if n_distinct < num_basis:
        raise DegenerateFeature(
            f"feature has {n_distinct} distinct values, needs at least {num_basis}"
        )
    n_inner = num_basis - order
    levels = np.arange(1, n_inner + 1) / (n_inner + 1)
    lo, hi = float(x.min()), float(x.max())
    q = np.quantile(x, levels)
    knots = np.unique(q[(q > lo) & (q < hi)])
    if knots.size < n_inner:
        warnings.warn(
            f"tied quantiles collapsed: {n_inner - knots.size} inner knot(s) dropped, "
            f"basis size reduced to {knots.size + order}",
            stacklevel=2,
        )
    return BasisSpec(order, tuple(float(k) for k in knots), lo, hi)


def basis_matrix(spec: BasisSpec, x) -> np.ndarray:
    """Evaluate all basis functions at points `x`; returns ``len(x) x num_basis``.

    Uses the Cox-de Boor recurrence.  Points outside ``[lo, hi]`` are clamped.
    """
    x = np.clip(np.atleast_1d(np.asarray(x, dtype=float)), spec.lo, spec.hi)
    t = spec.knots
    order = spec.order
    n_knots = t.size
    # order-1 splines are interval indicators; the last interval is closed on the right
    span = np.searchsorted(t, x, side="right") - 1
    span = np.clip(span, order - 1, n_knots - order - 1)
    B = np.zeros((x.size, n_knots - 1))
    B[np.arange(x.size), span] = 1.0
    for k in range(2, order + 1):
        ncols = n_knots - k
        left_den = t[k - 1 : k - 1 + ncols] - t[:ncols]
        right_den = t[k : k + ncols] - t[1 : 1 + ncols]
        with np.errstate(divide="ignore", invalid="ignore"):
            left = np.where(left_den > 0, (x[:, None] - t[:ncols]) / left_den, 0.0)
            right = np.where(right_den > 0, (t[k : k + ncols] - x[:, None]) / right_den, 0.0)
        B = left * B[:, :ncols] + right * B[:, 1 : ncols + 1]
    return B


def evaluate_basis(spec: BasisSpec, x: float) -> np.ndarray:
    """Basis values phi_1(x)..phi_m(x) at a single point."""
    return basis_matrix(spec, [x])[0]


@lru_cache(maxsize=32)
def _diff_penalty(m: int) -> np.ndarray:
    R = np.diff(np.eye(m), axis=0)
    D = R.T @ R
    D.setflags(write=False)
    return D


def diff_penalty_matrix(m: int) -> np.ndarray:
    """First-difference P-spline penalty ``R^T R`` of size ``m x m``.

    ``b @ D @ b == sum((b[1:] - b[:-1]) ** 2)``.
    """
    if m < 1:
        raise ConfigError(f"penalty size must be positive, got {m}")
    return _diff_penalty(int(m))


@dataclass
class ExpandedDesign:
    """Column-centered basis matrix with one block of columns per feature."""

    matrix: np.ndarray
    block_index: list[slice]
    col_center: np.ndarray
    specs: list[BasisSpec] = field(repr=False)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def p(self) -> int:
        return len(self.block_index)

    @property
    def m(self) -> int:
        """Largest block size (all blocks share it unless knots were merged)."""
        return max(s.stop - s.start for s in self.block_index)

    @property
    def block_sizes(self) -> list[int]:
        return [s.stop - s.start for s in self.block_index]

    def block(self, j: int) -> np.ndarray:
        return self.matrix[:, self.block_index[j]]

    def subset(self, groups) -> "ExpandedDesign":
        """Design restricted to the listed groups (in the given order)."""
        groups = list(groups)
        cols, index, start = [], [], 0
        for j in groups:
            sl = self.block_index[j]
            cols.append(np.arange(sl.start, sl.stop))
            index.append(slice(start, start + sl.stop - sl.start))
            start += sl.stop - sl.start
        cols = np.concatenate(cols) if cols else np.zeros(0, dtype=int)
        return ExpandedDesign(
            self.matrix[:, cols], index, self.col_center[cols], [self.specs[j] for j in groups]
        )


def fit_basis(X, order: int = 4, num_basis: int = 9) -> list[BasisSpec]:
    """Build one :class:`BasisSpec` per column of `X`."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ConfigError(f"X must be 2-D, got shape {X.shape}")
    specs = []
    for j in range(X.shape[1]):
        try:
            specs.append(build_basis_spec(X[:, j], order, num_basis))
        except DegenerateFeature as exc:
            raise DegenerateFeature(f"column {j}: {exc}") from None
    return specs


def expand_design(X, specs, col_center=None, center: bool = True) -> ExpandedDesign:
    """Evaluate every feature's basis and stack the blocks side by side.

    With ``col_center=None`` the column means of the new matrix are removed
    (training); passing stored means reuses them (prediction).  ``center=False``
    keeps the raw B-spline values.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != len(specs):
        raise ConfigError(
            f"X has shape {X.shape} but {len(specs)} basis specs were given"
        )
    blocks, index, start = [], [], 0
    for j, spec in enumerate(specs):
        blocks.append(basis_matrix(spec, X[:, j]))
        index.append(slice(start, start + spec.num_basis))
        start += spec.num_basis
    Phi = np.hstack(blocks) if blocks else np.zeros((X.shape[0], 0))
    if col_center is None:
        col_center = Phi.mean(axis=0) if (center and X.shape[0]) else np.zeros(Phi.shape[1])
    else:
        col_center = np.asarray(col_center, dtype=float)
        if col_center.shape != (Phi.shape[1],):
            raise ConfigError("stored column centers do not match the basis size")
    Phi = Phi - col_center
    return ExpandedDesign(Phi, index, col_center, list(specs))


def function_norm(spec: BasisSpec, beta_block, grid_size: int = 1000, center=None) -> float:
    """L2 norm of ``f(x) = sum_k beta_k (phi_k(x) - center_k)`` over ``[lo, hi]``.

    Trapezoidal rule on `grid_size` equally spaced points.
    """
    if grid_size < 100:
        raise ConfigError("grid_size must be at least 100")
    beta = np.asarray(beta_block, dtype=float)
    grid = np.linspace(spec.lo, spec.hi, grid_size)
    B = basis_matrix(spec, grid)
    if center is not None:
        B = B - np.asarray(center, dtype=float)
    f = B @ beta
    return float(np.sqrt(np.trapezoid(f * f, grid)))
