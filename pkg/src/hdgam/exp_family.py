"""Exponential-family likelihoods with dispersion fixed at one.

Losses are averaged over observations and written as functions of the
linear predictor ``eta``.  Bernoulli, Poisson and Gaussian use their
canonical links; Gamma uses the log link (shape 1, i.e. exponential
responses).  The non-canonical chain rule for Gamma is folded into the
working residual and curvature so the solver never needs to know the link.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import ConfigError, DataError

FAMILIES = ("bernoulli", "poisson", "gamma", "gaussian")
ETA_CLAMP = 30.0
MU_FLOOR = 1e-10


@dataclass(frozen=True)
class FamilySpec:
    tag: str

    def __post_init__(self):
        if self.tag not in FAMILIES:
            raise ConfigError(f"unknown family {self.tag!r}; choose from {', '.join(FAMILIES)}")

    @property
    def link(self) -> str:
        return {"bernoulli": "logit", "poisson": "log", "gamma": "log", "gaussian": "identity"}[self.tag]

    @property
    def canonical(self) -> bool:
        return self.tag != "gamma"

    dispersion = 1.0

    # cumulant b(theta) in the canonical parameter, with b' = mean and b'' = variance
    def cumulant(self, theta):
        theta = np.asarray(theta, dtype=float)
        if self.tag == "bernoulli":
            return np.logaddexp(0.0, theta)
        if self.tag == "poisson":
            return np.exp(theta)
        if self.tag == "gaussian":
            return 0.5 * theta * theta
        return -np.log(-theta)

    def cumulant_d1(self, theta):
        theta = np.asarray(theta, dtype=float)
        if self.tag == "bernoulli":
            return expit(theta)
        if self.tag == "poisson":
            return np.exp(theta)
        if self.tag == "gaussian":
            return theta
        return -1.0 / theta

    def cumulant_d2(self, theta):
        theta = np.asarray(theta, dtype=float)
        if self.tag == "bernoulli":
            p = expit(theta)
            return p * (1.0 - p)
        if self.tag == "poisson":
            return np.exp(theta)
        if self.tag == "gaussian":
            return np.ones_like(theta)
        return 1.0 / (theta * theta)

    def inverse_link(self, eta):
        """Mean response for linear predictor `eta`."""
        eta = np.asarray(eta, dtype=float)
        if self.tag == "bernoulli":
            return expit(eta)
        if self.tag == "gaussian":
            return eta.copy()
        return np.exp(np.clip(eta, -ETA_CLAMP, ETA_CLAMP))

    def link_fn(self, mu):
        mu = np.asarray(mu, dtype=float)
        if self.tag == "bernoulli":
            return np.log(mu / (1.0 - mu))
        if self.tag == "gaussian":
            return mu.copy()
        return np.log(mu)

    def check_support(self, y) -> np.ndarray:
        """Validate responses, raising :class:`DataError` on the first bad row."""
        y = np.asarray(y, dtype=float)
        bad = ~np.isfinite(y)
        if self.tag == "bernoulli":
            bad |= (y != 0) & (y != 1)
        elif self.tag == "poisson":
            bad |= (y < 0) | (y != np.floor(y))
        elif self.tag == "gamma":
            bad |= y <= 0
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise DataError(f"response at row {i} ({y[i]!r}) is outside the {self.tag} support")
        return y

    def null_eta(self, y) -> float:
        """Intercept-only maximum-likelihood linear predictor."""
        ybar = float(np.mean(y))
        if self.tag == "bernoulli":
            ybar = min(max(ybar, MU_FLOOR), 1.0 - MU_FLOOR)
        elif self.tag in ("poisson", "gamma"):
            ybar = max(ybar, MU_FLOOR)
        return float(self.link_fn(ybar))


def get_family(tag) -> FamilySpec:
    return tag if isinstance(tag, FamilySpec) else FamilySpec(str(tag))


def _clamped(eta):
    return np.clip(eta, -ETA_CLAMP, ETA_CLAMP)


def pointwise_loss(fam: FamilySpec, eta, y) -> np.ndarray:
    """Per-observation negative log-likelihood (without the c(y) term)."""
    eta = np.asarray(eta, dtype=float)
    y = np.asarray(y, dtype=float)
    if fam.tag == "bernoulli":
        return np.logaddexp(0.0, eta) - y * eta
    if fam.tag == "poisson":
        e = _clamped(eta)
        return np.exp(e) - y * e
    if fam.tag == "gaussian":
        return 0.5 * eta * eta - y * eta
    e = _clamped(eta)
    return y * np.exp(-e) + e


def neg_loglik(fam, eta, y) -> float:
    """Average negative log-likelihood ``-(1/n) sum [y theta - b(theta)]``.

    For Gamma with log link this is ``(1/n) sum [y / mu + log mu]``.
    """
    fam = get_family(fam)
    y = fam.check_support(y)
    return float(np.mean(pointwise_loss(fam, eta, y)))


def working_response(fam: FamilySpec, eta, y):
    """Working residual and per-observation curvature of the loss in `eta`.

    The loss gradient with respect to ``eta_i`` is ``-residual_i / n`` and its
    second derivative is ``weight_i / n``.
    """
    eta = np.asarray(eta, dtype=float)
    if fam.tag == "bernoulli":
        mu = expit(eta)
        return y - mu, mu * (1.0 - mu)
    if fam.tag == "poisson":
        mu = np.exp(_clamped(eta))
        return y - mu, mu
    if fam.tag == "gaussian":
        return y - eta, np.ones_like(eta)
    ratio = y * np.exp(-_clamped(eta))
    return ratio - 1.0, ratio


def curvature_bound(fam: FamilySpec, weights) -> float:
    """Upper bound on the working second derivative at the current iterate."""
    if fam.tag == "bernoulli":
        return 0.25
    if fam.tag == "gaussian":
        return 1.0
    return float(np.max(weights)) if np.size(weights) else 1.0


def gradient_and_curvature(fam, eta, y):
    """Return ``(residual, curvature_bound)`` at linear predictor `eta`.

    The block gradient of :func:`neg_loglik` is ``-Phi_j.T @ residual / n``.
    Bernoulli and Gaussian bounds are global (0.25 and 1); Poisson and Gamma
    bounds are the maximum working curvature at `eta` and are only local.
    """
    fam = get_family(fam)
    y = np.asarray(y, dtype=float)
    residual, w = working_response(fam, eta, y)
    return residual, curvature_bound(fam, w)


def eta_was_clamped(fam: FamilySpec, eta) -> bool:
    return fam.tag in ("poisson", "gamma") and bool(np.any(np.abs(eta) > ETA_CLAMP))


def _xlogy_ratio(y, mu):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(y > 0, y * np.log(y / mu), 0.0)


def unit_deviance(fam, mu_hat, y) -> np.ndarray:
    """Per-observation deviance ``2 [l(y; y) - l(mu_hat; y)]``."""
    fam = get_family(fam)
    mu = np.asarray(mu_hat, dtype=float)
    y = np.asarray(y, dtype=float)
    if fam.tag == "bernoulli":
        # saturated term vanishes for y in {0, 1}
        return np.where(
            y == 1.0,
            -2.0 * np.log(np.maximum(mu, MU_FLOOR)),
            -2.0 * np.log(np.maximum(1.0 - mu, MU_FLOOR)),
        )
    if fam.tag == "poisson":
        mu = np.maximum(mu, MU_FLOOR)
        return 2.0 * (_xlogy_ratio(y, mu) - (y - mu))
    if fam.tag == "gamma":
        mu = np.maximum(mu, MU_FLOOR)
        return 2.0 * (-np.log(y / mu) + (y - mu) / mu)
    return (y - mu) ** 2


def deviance(fam, mu_hat, y) -> float:
    """Total deviance of fitted means against observed responses."""
    return float(np.sum(unit_deviance(fam, mu_hat, y)))
