"""Group-lasso screening followed by an adaptive group lasso tuned by GIC."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .exp_family import FamilySpec, deviance, get_family
from .gmd_solver import CoefBlocks, PenaltyConfig, SolverConfig, fit_penalized, kkt_residual, lambda_max
from .model_selection import FitPath, a_n, select
from .spline_basis import BasisSpec, ExpandedDesign, expand_design, fit_basis, function_norm

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PathConfig:
    n_lambda: int = 50
    screen_min_ratio: float = 0.01
    adaptive_min_ratio: float = 0.001
    smooth_lambda: float = 0.0
    # GIC model-size penalty; None uses m * log(log n) * log p
    gic_a_n: float | None = None
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        if self.n_lambda < 1:
            raise ConfigError("n_lambda must be at least 1")
        if not (0 < self.screen_min_ratio <= 1 and 0 < self.adaptive_min_ratio <= 1):
            raise ConfigError("path ratios must lie in (0, 1]")

    def to_dict(self) -> dict:
        s = self.solver
        return {
            "n_lambda": self.n_lambda,
            "screen_min_ratio": self.screen_min_ratio,
            "adaptive_min_ratio": self.adaptive_min_ratio,
            "smooth_lambda": self.smooth_lambda,
            "gic_a_n": self.gic_a_n,
            "solver": {
                "max_cycles": s.max_cycles,
                "tol": s.tol,
                "kkt_tol": s.kkt_tol,
                "majorization_backoff": s.majorization_backoff,
                "active_set": s.active_set,
                "majorizer": s.majorizer,
            },
        }


def lambda_grid(lam_max: float, n_lambda: int, min_ratio: float) -> np.ndarray:
    if n_lambda == 1:
        return np.array([lam_max])
    return lam_max * np.logspace(0.0, math.log10(min_ratio), n_lambda)


def linear_predictor(design: ExpandedDesign, coef: CoefBlocks) -> np.ndarray:
    return coef.intercept + design.matrix @ coef.beta


def max_groups(n: int, m: int) -> int:
    """Largest number of groups whose coefficients fit in n observations."""
    return n // m


def screen(design: ExpandedDesign, y, fam, path_cfg: PathConfig | None = None):
    """Group-lasso screening along a decreasing path with warm starts.

    Returns ``(coef, lam)`` for the smallest path lambda whose support has at
    most ``n // m`` groups.  The path is abandoned at the first lambda that
    exceeds the cap.
    """
    fam = get_family(fam)
    cfg = path_cfg or PathConfig()
    y = np.asarray(y, dtype=float)
    n, m = design.n, design.m
    if n < 2 * m:
        raise ConfigError(f"screening needs n >= 2m (n={n}, m={m})")
    n_g = max_groups(n, m)
    lam_max = lambda_max(design, y, fam)
    grid = lambda_grid(lam_max, cfg.n_lambda, cfg.screen_min_ratio)
    if grid.size == 0:
        raise ConfigError("empty lambda path")
    best, best_lam, warm, fits = None, None, None, []
    for lam in grid:
        pen = PenaltyConfig(float(lam), smooth_lambda=cfg.smooth_lambda)
        coef = fit_penalized(design, y, fam, pen, cfg.solver, warm)
        fits.append((float(lam), coef))
        if len(coef.support) > n_g:
            break
        best, best_lam, warm = coef, float(lam), coef
    if best_lam == grid[0] and grid.size > 1:
        log.warning("no path point below lambda_max respects the %d-group cap", n_g)
    best.info["path"] = fits
    return best, best_lam


def adaptive_weights(screening: CoefBlocks) -> np.ndarray:
    """``1 / ||beta_j||`` on the screening support, infinity elsewhere."""
    norms = screening.block_norms
    with np.errstate(divide="ignore"):
        return np.where(norms > 0, 1.0 / norms, np.inf)


def _embed(sub: CoefBlocks, groups, design: ExpandedDesign) -> CoefBlocks:
    beta = np.zeros(design.matrix.shape[1])
    for k, j in enumerate(groups):
        beta[design.block_index[j]] = sub.beta[sub.block_index[k]]
    out = CoefBlocks(sub.intercept, beta, list(design.block_index), sub.converged, dict(sub.info))
    return out


def adaptive_fit(design: ExpandedDesign, y, fam, screening: CoefBlocks, path_cfg: PathConfig | None = None,
                 weights=None) -> FitPath:
    """Adaptive group lasso path restricted to the groups with finite weight.

    `weights` defaults to :func:`adaptive_weights` of the screening fit; any
    positive vector (with ``inf`` marking excluded groups) may be injected.
    Every entry stores coefficients on the full design together with its
    deviance, support size and GIC.
    """
    fam = get_family(fam)
    cfg = path_cfg or PathConfig()
    y = np.asarray(y, dtype=float)
    w = adaptive_weights(screening) if weights is None else np.asarray(weights, dtype=float)
    penalty = a_n(design.n, design.p, design.m) if cfg.gic_a_n is None else float(cfg.gic_a_n)
    path = FitPath(a_n=penalty, n=design.n)
    groups = [int(j) for j in np.flatnonzero(np.isfinite(w))]
    if not groups:
        eta0 = get_family(fam).null_eta(y)
        coef = CoefBlocks.zeros(design, eta0)
        lam0 = float("inf")
        path.append(lam0, coef, deviance(fam, fam.inverse_link(np.full(design.n, eta0)), y))
        return path
    sub = design.subset(groups)
    w_sub = w[groups]
    lam_max = lambda_max(sub, y, fam, w_sub)
    warm = None
    for lam in lambda_grid(lam_max, cfg.n_lambda, cfg.adaptive_min_ratio):
        pen = PenaltyConfig(float(lam), w_sub, cfg.smooth_lambda)
        coef = fit_penalized(sub, y, fam, pen, cfg.solver, warm)
        warm = coef
        mu = fam.inverse_link(linear_predictor(sub, coef))
        full = _embed(coef, groups, design)
        full.info["kkt_full"] = kkt_residual(sub, y, fam, pen, coef)
        path.append(float(lam), full, deviance(fam, mu, y))
    return path


@dataclass
class TwoStepResult:
    family: FamilySpec
    specs: list[BasisSpec]
    col_center: np.ndarray
    screening: CoefBlocks
    screening_lambda: float
    weights: np.ndarray
    adaptive_path: FitPath
    selected_index: int
    diagnostics: dict = field(default_factory=dict)

    @property
    def selected(self) -> CoefBlocks:
        return self.adaptive_path[self.selected_index].coef

    @property
    def selected_lambda(self) -> float:
        return self.adaptive_path[self.selected_index].lam

    @property
    def gic(self) -> float:
        return self.adaptive_path[self.selected_index].gic


def theoretical_lambda(n: int, p: int, m: int, bounded: bool = True, gamma_n: float = 1.0, C: float = 1.0) -> float:
    """Rate-level screening lambda, reported as a diagnostic only.

    Bounded responses: ``C sqrt(m) sqrt((gamma_n + log(p m)) / n)``;
    otherwise ``sqrt(m) gamma_n sqrt(log(p m) / n)``.
    """
    if bounded:
        return C * math.sqrt(m) * math.sqrt((gamma_n + math.log(p * m)) / n)
    return math.sqrt(m) * gamma_n * math.sqrt(math.log(p * m) / n)


def fit_two_step(X, y, family, order: int = 4, num_basis: int = 9, path_cfg: PathConfig | None = None,
                 specs=None, weights=None) -> TwoStepResult:
    """Expand `X` in B-spline bases, screen with the group lasso, refit adaptively and pick by GIC."""
    fam = get_family(family)
    cfg = path_cfg or PathConfig()
    X = np.asarray(X, dtype=float)
    y = fam.check_support(y)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ConfigError(f"X has shape {X.shape} but y has {y.shape[0]} rows")
    specs = specs if specs is not None else fit_basis(X, order, num_basis)
    design = expand_design(X, specs)
    screening, lam1 = screen(design, y, fam, cfg)
    screen_path = screening.info.pop("path")
    w = adaptive_weights(screening) if weights is None else np.asarray(weights, dtype=float)
    path = adaptive_fit(design, y, fam, screening, cfg, w)
    idx = select(path)
    sel = path[idx].coef
    fnorms = [
        function_norm(specs[j], sel.beta[design.block_index[j]], 1000, design.col_center[design.block_index[j]])
        for j in sorted(sel.support)
    ]
    diagnostics = {
        "screening_cycles": sum(c.info["cycles"] for _, c in screen_path),
        "adaptive_cycles": sum(e.coef.info["cycles"] for e in path.entries),
        "screening_kkt": [c.info["kkt"] for _, c in screen_path],
        "adaptive_kkt": [e.coef.info["kkt"] for e in path.entries],
        "all_converged": all(c.converged for _, c in screen_path) and all(e.coef.converged for e in path.entries),
        "function_norms": dict(zip(sorted(sel.support), fnorms)),
        "theoretical_lambda": theoretical_lambda(
            design.n, design.p, design.m, fam.tag == "bernoulli", math.log(design.p * design.m)
        ),
        "n_groups_cap": max_groups(design.n, design.m),
    }
    return TwoStepResult(fam, list(specs), design.col_center, screening, lam1, w, path, idx, diagnostics)


def predict(result: TwoStepResult, X_new, specs=None):
    """Linear predictor and mean for new rows using the training basis and centering."""
    specs = specs if specs is not None else result.specs
    X_new = np.asarray(X_new, dtype=float)
    if X_new.ndim != 2 or X_new.shape[1] != len(specs):
        raise ConfigError(f"expected {len(specs)} columns, got array of shape {X_new.shape}")
    design = expand_design(X_new, specs, col_center=result.col_center)
    eta = linear_predictor(design, result.selected)
    return eta, result.family.inverse_link(eta)
