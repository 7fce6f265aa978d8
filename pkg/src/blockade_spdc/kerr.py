"""Doppler-averaged photon-photon interaction strength of N-type atoms.

All rates are in units of the signal-cavity decay rate kappa_s.  The atomic
velocity enters only through the Doppler shift ``s = k v``; the Maxwell-Boltzmann
weight becomes ``exp(-s**2 / ku**2) / (ku * sqrt(pi))``.  The cavity and control
wave vectors are taken equal, so two-photon detunings carry no Doppler shift.

The susceptibility integrands contain Lorentzian resonances of width ~gamma0,
much narrower than the Doppler width of a warm vapour.  A plain Gauss-Hermite
rule never resolves them, so the Kerr integrals use a composite Gauss-Legendre
rule whose panels are graded around the analytically known poles in the
complex Doppler-shift plane.  :func:`doppler_average` keeps the Gauss-Hermite
rule for smooth integrands.
"""

from __future__ import annotations

import dataclasses
import warnings
from dataclasses import dataclass
from functools import partial
from typing import Callable, Literal, Sequence

import numpy as np

from ._parallel import ordered_map

__all__ = [
    "DEFAULT_KU",
    "AtomicMedium",
    "KerrResult",
    "KerrScan",
    "KerrScanPoint",
    "KerrValidityWarning",
    "doppler_average",
    "resonant_doppler_average",
    "kerr",
    "kerr_type_i",
    "kerr_type_ii",
    "kerr_type_i_approx",
    "kerr_type_ii_approx",
    "scan_detuning",
]

# ku ~ 300 MHz over kappa_s/2pi ~ 8.37 MHz.
DEFAULT_KU = 300.0 / 8.37

Config = Literal["type-I", "type-II"]


class KerrValidityWarning(UserWarning):
    """Parameters outside the regime where the perturbative result holds."""


@dataclass(frozen=True)
class AtomicMedium:
    """Microscopic parameters of the atomic ensemble (rates in kappa_s).

    ``g4N`` is N_a (g/kappa_s)^4.  ``coupling_ratio`` is g/Omega_c; together
    with ``omega_c`` it fixes g and therefore N_a g^2 for the linear shift.
    gamma31 = gamma32 = gamma42 = ``gamma0``.
    """

    config: Config = "type-I"
    g4N: float = 2.3e3
    coupling_ratio: float = 0.05
    gamma0: float = 0.5
    gamma21: float = 0.01
    omega_c: float = 15.0
    omega_d: float = 0.0
    delta31: float = 18.0
    delta42: float = 0.0
    delta_c: float = 0.0
    ku: float = DEFAULT_KU
    gamma41: float = 0.0
    gamma43: float = 0.0

    def __post_init__(self):
        if self.config not in ("type-I", "type-II"):
            raise ValueError(f"unknown configuration {self.config!r}")
        for name in ("gamma0", "gamma21", "omega_d", "ku", "gamma41", "gamma43", "coupling_ratio"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if not self.omega_c > 0:
            raise ValueError("omega_c must be positive")

    @property
    def g(self) -> float:
        return self.coupling_ratio * self.omega_c

    @property
    def Ng2(self) -> float:
        """N_a g^2 implied by ``g4N`` and ``coupling_ratio``."""
        if self.g == 0:
            return 0.0
        return self.g4N / self.g**2

    def with_(self, **changes) -> "AtomicMedium":
        return dataclasses.replace(self, **changes)

    def validity_warnings(self) -> list[str]:
        out = []
        if self.gamma21 > 0.1 * self.gamma0:
            out.append(f"gamma21={self.gamma21} is not small against gamma0={self.gamma0}")
        if self.coupling_ratio > 0.1:
            out.append(f"g/Omega_c={self.coupling_ratio} > 0.1; perturbative expansion unreliable")
        return out


@dataclass(frozen=True)
class KerrResult:
    eta: float
    delta: float
    quadrature_nodes: int
    converged: bool
    imag_residue: float = 0.0


def _check_finite(values: np.ndarray) -> None:
    if not np.all(np.isfinite(values)):
        raise FloatingPointError("integrand is not finite at a quadrature node")


def doppler_average(integrand: Callable[[np.ndarray], np.ndarray], ku: float,
                    nodes: int = 64) -> complex:
    """Gauss-Hermite average of ``integrand(kv)`` over the velocity distribution.

    With ``ku == 0`` the integrand is evaluated at rest.
    """
    if nodes < 8:
        raise ValueError("nodes must be at least 8")
    if ku < 0:
        raise ValueError("ku must be nonnegative")
    if ku == 0:
        value = np.asarray(integrand(np.zeros(1)))[..., 0]
        _check_finite(value)
        return complex(value) if np.ndim(value) == 0 else value
    x, w = np.polynomial.hermite.hermgauss(nodes)
    values = np.asarray(integrand(ku * x))
    _check_finite(values)
    out = (values * w).sum(axis=-1) / np.sqrt(np.pi)
    return complex(out) if np.ndim(out) == 0 else out


def _panel_edges(ku: float, poles: Sequence[complex], span: float) -> np.ndarray:
    L = span * ku
    edges = [np.linspace(-L, L, 17)]
    for p in poles:
        a, w = float(np.real(p)), max(abs(float(np.imag(p))), 1e-9 * ku)
        if abs(a) > L + 50 * w:
            continue
        offsets = w * 2.0 ** np.arange(-3, 60)
        offsets = offsets[offsets < 2 * L]
        edges.append(np.concatenate([[a], a - offsets, a + offsets]))
    e = np.concatenate(edges)
    e = np.unique(np.clip(e, -L, L))
    keep = np.concatenate([[True], np.diff(e) > 1e-13 * L])
    return e[keep]


def resonant_doppler_average(integrand: Callable[[np.ndarray], np.ndarray], ku: float,
                             poles: Sequence[complex] = (), nodes: int = 16,
                             max_nodes: int = 512, rtol: float = 1e-6,
                             span: float = 9.0) -> tuple[np.ndarray, int, bool]:
    """Velocity average of a meromorphic integrand with known poles.

    The integrand may return an array whose last axis runs over ``kv``; every
    leading component is averaged.  Gauss-Legendre panels are refined
    geometrically towards the real part of each pole and the per-panel order
    doubles until two successive estimates of the first component agree to
    ``rtol * max(1, |value|)``.

    Returns ``(value, total_nodes, converged)``.
    """
    if ku < 0:
        raise ValueError("ku must be nonnegative")
    if ku == 0:
        value = np.asarray(integrand(np.zeros(1)))[..., 0]
        _check_finite(value)
        return value, 1, True
    edges = _panel_edges(ku, poles, span)
    mid, half = 0.5 * (edges[1:] + edges[:-1]), 0.5 * (edges[1:] - edges[:-1])
    norm = 1.0 / (ku * np.sqrt(np.pi))

    def estimate(n):
        t, w = np.polynomial.legendre.leggauss(n)
        s = (mid[:, None] + half[:, None] * t[None, :]).ravel()
        weights = (half[:, None] * w[None, :]).ravel() * np.exp(-(s / ku) ** 2) * norm
        values = np.asarray(integrand(s))
        _check_finite(values)
        return (values * weights).sum(axis=-1)

    n = nodes
    previous = estimate(n)
    while True:
        current = estimate(2 * n)
        head_prev = np.ravel(previous)[0]
        head = np.ravel(current)[0]
        if abs(head - head_prev) < rtol * max(1.0, abs(head)):
            return current, 2 * n * len(mid), True
        if 2 * n >= max_nodes:
            return current, 2 * n * len(mid), False
        n *= 2
        previous = current


def _shifted(m: AtomicMedium, s):
    # Doppler-shifted one-photon detunings (k_s = k_c = k).
    return m.delta31 + s, m.delta_c + s, m.delta42 + s


def _type_i_densities(m: AtomicMedium, s: np.ndarray) -> np.ndarray:
    g0, g21 = m.gamma0, m.gamma21
    g31 = g32 = g42 = g0
    G3 = g31 + g32
    d31, dc, d42 = _shifted(m, s)
    t21 = -1j * (m.delta31 - m.delta_c) - g21 / 2
    t31 = -1j * d31 - G3 / 2
    t42 = -1j * d42 - (g21 + m.gamma41 + g42 + m.gamma43) / 2
    t43 = -1j * (m.delta42 - m.delta_c) - (G3 + m.gamma41 + g42 + m.gamma43) / 2
    Om2 = m.omega_c**2
    iF = 1.0 / (t31 + Om2 / t21)
    iF1 = 1.0 / (t42 + Om2 / t43)
    re2 = iF + iF.conj()
    eta = (1j * (2 * g21 + g32) / (g21 * G3) * re2 * (iF.conj() - iF)
           + 1j * g32 / (g21 * G3) * re2 * (iF1 - iF1.conj()))
    delta = (g32 / (g21 * G3) * re2 * (m.delta31 - m.delta_c)
             + d31 / G3 * re2
             + 1j * (iF.conj() - iF))
    return np.stack([eta, delta])


def _type_i_poles(m: AtomicMedium) -> list[complex]:
    G3 = 2 * m.gamma0
    t21 = -1j * (m.delta31 - m.delta_c) - m.gamma21 / 2
    t43 = -1j * (m.delta42 - m.delta_c) - (G3 + m.gamma41 + m.gamma0 + m.gamma43) / 2
    c = -1j * m.delta31 - G3 / 2 + m.omega_c**2 / t21
    c1 = -1j * m.delta42 - (m.gamma21 + m.gamma41 + m.gamma0 + m.gamma43) / 2 + m.omega_c**2 / t43
    # F(s) = -i s + c vanishes at s = -i c.
    return [-1j * c, -1j * c1]


def _type_ii_inverse_f3(m: AtomicMedium, s):
    G3 = 2 * m.gamma0
    d31, dc, d42 = _shifted(m, s)
    t21 = -1j * (m.delta31 - m.delta_c) - m.gamma21 / 2
    t31 = -1j * d31 - G3 / 2
    t41 = 1j * (dc - d31 - d42) - (m.gamma41 + m.gamma0 + m.gamma43) / 2
    den = t21 * t41 + m.omega_d**2
    return den / (t31 * den + t41 * m.omega_c**2)


def _type_ii_densities(m: AtomicMedium, s: np.ndarray) -> np.ndarray:
    g21, g32 = m.gamma21, m.gamma0
    G3 = 2 * m.gamma0
    iF = _type_ii_inverse_f3(m, s)
    re2 = iF + iF.conj()
    eta = 1j * (2 * g21 + g32) / (g21 * G3) * re2 * (iF.conj() - iF)
    delta = (g32 / (g21 * G3) * re2 * (m.delta31 - m.delta_c)
             + (m.delta31 + s) / G3 * re2
             + 1j * (iF.conj() - iF))
    return np.stack([eta, delta])


def _type_ii_poles(m: AtomicMedium) -> list[complex]:
    G3 = 2 * m.gamma0
    r = -1j * (m.delta31 - m.delta_c) - m.gamma21 / 2
    a = -1j * m.delta31 - G3 / 2
    b = 1j * (m.delta_c - m.delta31 - m.delta42) - (m.gamma41 + m.gamma0 + m.gamma43) / 2
    Od2, Oc2 = m.omega_d**2, m.omega_c**2
    # With x = -i s: r x^2 + (r b + Od2 + a r + Oc2) x + a (r b + Od2) + b Oc2 = 0.
    roots = np.roots([r, r * b + Od2 + a * r + Oc2, a * (r * b + Od2) + b * Oc2])
    return [1j * x for x in roots]


def _evaluate(m: AtomicMedium, densities, poles, nodes: int) -> KerrResult:
    for msg in m.validity_warnings():
        warnings.warn(msg, KerrValidityWarning, stacklevel=3)
    value, used, converged = resonant_doppler_average(
        partial(densities, m), m.ku, poles(m), nodes=nodes)
    eta_avg, delta_avg = value[0], value[1]
    scale = max(abs(eta_avg), abs(delta_avg), 1e-300)
    residue = max(abs(eta_avg.imag), abs(delta_avg.imag)) / scale
    return KerrResult(eta=float(m.g4N * eta_avg.real),
                      delta=float(m.Ng2 * delta_avg.real),
                      quadrature_nodes=int(used), converged=bool(converged),
                      imag_residue=float(residue))


def kerr_type_i(medium: AtomicMedium, nodes: int = 16) -> KerrResult:
    """Photon-photon interaction and linear shift for the type-I scheme.

    The cavity drives 1-3 and 2-4, the control field drives 2-3.
    """
    if medium.config != "type-I":
        raise ValueError("kerr_type_i needs a type-I medium")
    return _evaluate(medium, _type_i_densities, _type_i_poles, nodes)


def kerr_type_ii(medium: AtomicMedium, nodes: int = 16) -> KerrResult:
    """Same for the type-II scheme, with a switching field ``omega_d`` on 2-4."""
    if medium.config != "type-II":
        raise ValueError("kerr_type_ii needs a type-II medium")
    return _evaluate(medium, _type_ii_densities, _type_ii_poles, nodes)


def kerr(medium: AtomicMedium, nodes: int = 16) -> KerrResult:
    if medium.config == "type-I":
        return kerr_type_i(medium, nodes)
    return kerr_type_ii(medium, nodes)


def kerr_type_i_approx(medium: AtomicMedium) -> float:
    """Large-Omega_c, stationary-atom limit of the type-I interaction."""
    m = medium
    g32, G3 = m.gamma0, 2 * m.gamma0
    bracket = (2 * m.gamma21 + g32) / g32 * (m.delta31 - m.delta_c) - (m.delta42 - m.delta_c)
    return 2 * m.g4N * g32 / (m.omega_c**4 * G3) * bracket


def kerr_type_ii_approx(medium: AtomicMedium) -> float:
    """Large-Omega_c, stationary-atom limit of the type-II interaction.

    This is also the omega_d -> 0 limit; a switching field with
    omega_d**2 comparable to gamma21 * |delta31| already spoils it.
    """
    m = medium
    return 2 * m.g4N * (2 * m.gamma21 + m.gamma0) * (m.delta31 - m.delta_c) / (m.omega_c**4 * 2 * m.gamma0)


@dataclass(frozen=True)
class KerrScanPoint:
    delta31: float
    eta: float
    delta: float
    converged: bool
    error: str | None = None


@dataclass(frozen=True)
class KerrScan:
    points: list[KerrScanPoint]
    extrema: list[KerrScanPoint]


def _delta42_for(rule, delta31: float, fixed: float) -> float:
    if rule == "fixed":
        return fixed
    if isinstance(rule, tuple) and len(rule) == 2 and rule[0] == "proportional":
        return float(rule[1]) * delta31
    raise ValueError(f"unknown delta42 rule {rule!r}")


def _scan_point(args) -> KerrScanPoint:
    medium, nodes = args
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", KerrValidityWarning)
            r = kerr(medium, nodes)
        return KerrScanPoint(medium.delta31, r.eta, r.delta, r.converged)
    except (FloatingPointError, ValueError, ZeroDivisionError) as exc:
        return KerrScanPoint(medium.delta31, float("nan"), float("nan"), False, str(exc))


def scan_detuning(medium: AtomicMedium, delta31_grid: Sequence[float],
                  delta42_rule="fixed", nodes: int = 16, workers: int = 1) -> KerrScan:
    """Evaluate the interaction along a grid of cavity detunings delta31.

    ``delta42_rule`` is ``"fixed"`` (keep ``medium.delta42``) or
    ``("proportional", c)`` for delta42 = c * delta31.  Extrema are interior
    local maxima of |eta|.
    """
    grid = [float(d) for d in delta31_grid]
    if not grid:
        raise ValueError("delta31 grid is empty")
    for msg in medium.validity_warnings():
        warnings.warn(msg, KerrValidityWarning, stacklevel=2)
    media = [medium.with_(delta31=d, delta42=_delta42_for(delta42_rule, d, medium.delta42))
             for d in grid]
    points = ordered_map(_scan_point, [(m, nodes) for m in media], workers)
    mags = np.array([abs(p.eta) if p.error is None else np.nan for p in points])
    extrema = []
    for k in range(1, len(points) - 1):
        if np.isnan(mags[k - 1:k + 2]).any():
            continue
        if mags[k] > mags[k - 1] and mags[k] >= mags[k + 1]:
            extrema.append(points[k])
    return KerrScan(points=points, extrema=extrema)
