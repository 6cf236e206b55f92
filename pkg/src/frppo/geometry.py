"""Divergences between action distributions, measured against a reference measure.

All functions accept either single distributions (1-D) or stacks of them
(2-D, one distribution per row) and reduce over the last axis.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Generator h(m) = CHI2_SCALE * chi2(m | lambda).  With FR^2 carrying its usual
# factor 4, this is the scale for which D_h(m'|m) = FR^2(m'^2, m^2) / 2.
CHI2_SCALE = 2.0


@dataclass(frozen=True)
class DivergenceReport:
    tv: float
    kl: float
    chi2: float
    fr2: float
    fr2_squared: float
    bregman_chi2: float


def tv(mu, nu):
    mu, nu = np.asarray(mu, float), np.asarray(nu, float)
    return 0.5 * np.sum(np.abs(mu - nu), axis=-1)


def kl(mu, nu):
    """KL(mu || nu) with 0 log 0 = 0; +inf when mu is not absolutely continuous w.r.t. nu."""
    mu, nu = np.broadcast_arrays(np.asarray(mu, float), np.asarray(nu, float))
    pos = mu > 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(pos, mu * (np.log(np.where(pos, mu, 1.0)) - np.log(nu)), 0.0)
    out = np.sum(terms, axis=-1)
    singular = np.any(pos & (nu <= 0.0), axis=-1)
    return np.where(singular, np.inf, np.maximum(out, 0.0))[()]


def chi2(mu, nu):
    """chi^2(mu | nu) = sum (mu - nu)^2 / nu; +inf on absolute-continuity failure."""
    mu, nu = np.broadcast_arrays(np.asarray(mu, float), np.asarray(nu, float))
    pos = nu > 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(pos, (mu - nu) ** 2 / np.where(pos, nu, 1.0), 0.0)
    out = np.sum(terms, axis=-1)
    singular = np.any((~pos) & (mu > 0.0), axis=-1)
    return np.where(singular, np.inf, out)[()]


def fr2(mu, nu, lam):
    """Squared Fisher-Rao (Hellinger) distance ``4 sum lam (sqrt(mu/lam) - sqrt(nu/lam))^2``."""
    lam = np.asarray(lam, float)
    a = np.sqrt(np.asarray(mu, float) / lam)
    b = np.sqrt(np.asarray(nu, float) / lam)
    return 4.0 * np.sum(lam * (a - b) ** 2, axis=-1)


def fr2_squared_densities(mu, nu, lam):
    """FR^2 between the squared densities of ``mu`` and ``nu``.

    Since sqrt((dm/dlam)^2) = dm/dlam this is four times the lam-weighted
    L2 distance between densities.
    """
    lam = np.asarray(lam, float)
    diff = (np.asarray(mu, float) - np.asarray(nu, float)) / lam
    return 4.0 * np.sum(lam * diff * diff, axis=-1)


def fr2_squared_densities_direct(mu, nu, lam):
    """Same quantity through the definitional sqrt-of-squared-density route."""
    lam = np.asarray(lam, float)
    sq_mu = (np.asarray(mu, float) / lam) ** 2
    sq_nu = (np.asarray(nu, float) / lam) ** 2
    return fr2(sq_mu * lam, sq_nu * lam, lam)


def chi2_generator(m, lam):
    """h(m) = CHI2_SCALE * chi2(m | lam), returned with its flat derivative."""
    lam = np.asarray(lam, float)
    dens = np.asarray(m, float) / lam
    value = CHI2_SCALE * np.sum(lam * (dens - 1.0) ** 2, axis=-1)
    grad = 2.0 * CHI2_SCALE * (dens - 1.0)
    # Flat derivatives are centred so that they integrate to zero against m.
    grad = grad - np.sum(grad * np.asarray(m, float), axis=-1, keepdims=True)
    return value, grad


def bregman_chi2(mu, nu, lam):
    """Bregman divergence D_h(mu | nu) of the chi^2 generator, via h(mu) - h(nu) - <dh(nu), mu - nu>."""
    mu, nu = np.asarray(mu, float), np.asarray(nu, float)
    h_mu, _ = chi2_generator(mu, lam)
    h_nu, g_nu = chi2_generator(nu, lam)
    return h_mu - h_nu - np.sum(g_nu * (mu - nu), axis=-1)


def report(mu, nu, lam) -> DivergenceReport:
    return DivergenceReport(
        tv=float(tv(mu, nu)),
        kl=float(kl(mu, nu)),
        chi2=float(chi2(mu, nu)),
        fr2=float(fr2(mu, nu, lam)),
        fr2_squared=float(fr2_squared_densities(mu, nu, lam)),
        bregman_chi2=float(bregman_chi2(mu, nu, lam)),
    )


@dataclass(frozen=True)
class InequalityChecks:
    tv2: float
    half_kl: float
    fr2_squared_over_16: float
    pinsker_slack: float
    fr_slack: float

    def ok(self, tol: float = 1e-12) -> bool:
        return self.pinsker_slack >= -tol and self.fr_slack >= -tol


def inequality_suite(mu, nu, lam) -> InequalityChecks:
    """Slacks of TV^2 <= KL/2 (Pinsker) and TV^2 <= FR^2(squared)/16 (Cauchy-Schwarz)."""
    t2 = float(tv(mu, nu)) ** 2
    half_kl = 0.5 * float(kl(mu, nu))
    frs = float(fr2_squared_densities(mu, nu, lam)) / 16.0
    # An infinite KL makes Pinsker vacuous; report infinite slack.
    return InequalityChecks(t2, half_kl, frs, half_kl - t2, frs - t2)
