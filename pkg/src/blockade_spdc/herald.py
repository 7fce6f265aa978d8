"""Heralded single-photon statistics from a joint photon-number distribution.

Detecting at least one idler photon heralds the signal mode; the conditional
signal distribution is

    alpha[n] = sum_{m>0} P[n, m] / sum_{n', m>0} P[n', m].

Non-paired entries (n != m) are kept in every sum.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .fock import JointPhotonDistribution

__all__ = [
    "NoHeraldError",
    "UndefinedG2Error",
    "HeraldedStatistics",
    "AnalyticNonBlockade",
    "heralded_distribution",
    "g2_heralded",
    "pair_yield",
    "purity",
    "purity_from_g2",
    "yp_product",
    "nonpair_weight",
    "heralded_statistics",
    "analytic_nonblockade",
    "thermal_pair_distribution",
]


class NoHeraldError(ValueError):
    """No probability weight with an idler photon present."""


class UndefinedG2Error(ValueError):
    """Heralded signal has zero mean photon number, so g2 is undefined."""


def _probs(P) -> np.ndarray:
    if isinstance(P, JointPhotonDistribution):
        return P.probs
    arr = np.asarray(P, dtype=float)
    if arr.ndim != 2:
        raise ValueError("joint distribution must be two-dimensional")
    return arr


def heralded_distribution(P) -> np.ndarray:
    """Conditional signal photon-number distribution given an idler click.

    Accepts an unnormalized array as well; the result does not depend on the
    overall scale of ``P``.
    """
    p = _probs(P)
    column = p[:, 1:].sum(axis=1)
    total = column.sum()
    if not total > 0:
        raise NoHeraldError("no weight with n_i > 0; the idler never heralds")
    return column / total


def g2_heralded(P) -> float:
    """Equal-time second-order correlation of the heralded signal."""
    alpha = heralded_distribution(P)
    n = np.arange(alpha.size)
    mean = float(n @ alpha)
    if mean <= 0:
        raise UndefinedG2Error("heralded signal mean photon number is zero")
    return float((n * (n - 1)) @ alpha) / mean**2


def pair_yield(P) -> float:
    """Probability of exactly one photon pair, P[1, 1]."""
    p = _probs(P)
    return float(p[1, 1]) if p.shape[0] > 1 and p.shape[1] > 1 else 0.0


def purity(P) -> float:
    """Single-photon fraction among heralded events with a signal photon present.

    Ratio of sum_{m>0} P[1, m] to sum_{n>0, m>0} P[n, m].
    """
    p = _probs(P)
    den = p[1:, 1:].sum()
    if not den > 0:
        raise NoHeraldError("no weight with both modes occupied")
    return float(p[1, 1:].sum() / den)


def purity_from_g2(P) -> float:
    return max(0.0, 1.0 - g2_heralded(P))


def yp_product(P) -> float:
    return pair_yield(P) * purity_from_g2(P)


def nonpair_weight(P) -> float:
    """Total probability of states with n_s != n_i."""
    p = _probs(P)
    ns, ni = np.indices(p.shape)
    return float(p[ns != ni].sum())


@dataclass(frozen=True)
class HeraldedStatistics:
    """Summary of the heralded source.

    ``g2`` is ``None`` when it is undefined (no herald, or a heralded signal
    that is always empty); the quantities derived from it are ``None`` too.
    """

    alpha: Optional[np.ndarray]
    g2: Optional[float]
    yield_: float
    purity: Optional[float]
    purity_from_g2: Optional[float]
    yp_product: Optional[float]
    nonpair_weight: float

    def as_dict(self) -> dict:
        return {
            "alpha": None if self.alpha is None else [float(a) for a in self.alpha],
            "g2": self.g2,
            "yield": self.yield_,
            "purity_s35": self.purity,
            "purity_1mg2": self.purity_from_g2,
            "yp": self.yp_product,
            "nonpair": self.nonpair_weight,
        }


def heralded_statistics(P) -> HeraldedStatistics:
    p = _probs(P)
    y = pair_yield(p)
    alpha = g2 = pi = pg = yp = None
    try:
        alpha = heralded_distribution(p)
        g2 = g2_heralded(p)
        pg = max(0.0, 1.0 - g2)
        yp = y * pg
    except (NoHeraldError, UndefinedG2Error):
        pass
    try:
        pi = purity(p)
    except NoHeraldError:
        pass
    return HeraldedStatistics(alpha=alpha, g2=g2, yield_=y, purity=pi,
                              purity_from_g2=pg, yp_product=yp,
                              nonpair_weight=nonpair_weight(p))


@dataclass(frozen=True)
class AnalyticNonBlockade:
    P_nn: np.ndarray
    Y: float
    g2_asymptotic: float
    yp: float


def thermal_pair_distribution(x: float, n_max: int) -> np.ndarray:
    """Diagonal joint distribution of an ideal two-mode squeezed vacuum.

    P[n, n] = tanh(x)**(2n) / cosh(x)**2 for n <= n_max; not renormalized.
    """
    if x < 0:
        raise ValueError("squeezing parameter must be nonnegative")
    n = np.arange(n_max + 1)
    P = np.zeros((n_max + 1, n_max + 1))
    P[n, n] = np.tanh(x) ** (2 * n) / np.cosh(x) ** 2
    return P


def analytic_nonblockade(xi_sqrtP_t: float, n_max: int = 40) -> AnalyticNonBlockade:
    """Closed-form statistics of lossless pair generation without blockade.

    The purity is taken as 1 - g2 = 1 - 2 tanh^2(x), clamped at zero, so the
    purity-yield product peaks at sqrt(3)/18 where tanh^2(x) = (3 - sqrt(3))/6.
    """
    x = float(xi_sqrtP_t)
    if x < 0:
        raise ValueError("xi_sqrtP_t must be nonnegative")
    t2 = np.tanh(x) ** 2
    P_nn = np.diag(thermal_pair_distribution(x, n_max)).copy()
    Y = t2 / np.cosh(x) ** 2
    g2 = 2.0 * t2
    return AnalyticNonBlockade(P_nn=P_nn, Y=float(Y), g2_asymptotic=float(g2),
                               yp=float(Y * max(0.0, 1.0 - g2)))
