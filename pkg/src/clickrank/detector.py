"""Attenuator + beam splitter + two on/off detectors.

Detector D1 sits in the transmitted port (transmittance ``T``), D2 in the
reflected port. All losses are folded into one total efficiency ``eta``.
Every POVM element of the scheme is diagonal in the Fock basis and can be
written as ``c * I + sum_t w_t * rho_th(nbar_t)``; that thermal form is what
the witness optimisation consumes.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np


@dataclass(frozen=True)
class DetectorParams:
    eta: float
    transmittance: float

    def __post_init__(self):
        if not (0.0 < self.eta <= 1.0):
            raise ValueError(f"eta must lie in (0, 1], got {self.eta}")
        if not (0.0 < self.transmittance < 1.0):
            raise ValueError(f"transmittance must lie in (0, 1), got {self.transmittance}")

    @property
    def balanced(self) -> bool:
        return self.transmittance == 0.5


class Outcome(enum.Enum):
    NO_CLICK = "no_click"
    CLICK_D1_ONLY = "click_d1_only"
    CLICK_D2_ONLY = "click_d2_only"
    DOUBLE_CLICK = "double_click"
    # single lossy on/off detector without the beam splitter
    CLICK_SINGLE_DETECTOR = "click_single_detector"


TWO_DETECTOR_OUTCOMES = (
    Outcome.NO_CLICK,
    Outcome.CLICK_D1_ONLY,
    Outcome.CLICK_D2_ONLY,
    Outcome.DOUBLE_CLICK,
)


def thermal_weight(n, nbar: float):
    """Photon-number distribution ``nbar**n / (nbar + 1)**(n + 1)`` of a thermal state."""
    n = np.asarray(n, dtype=float)
    if nbar == 0.0:
        return np.where(n == 0, 1.0, 0.0)
    return np.exp(n * math.log(nbar) - (n + 1) * math.log1p(nbar))


@dataclass(frozen=True)
class ThermalCombo:
    """Operator ``identity_coeff * I + sum(weight * rho_th(nbar))``."""

    identity_coeff: float = 0.0
    terms: tuple[tuple[float, float], ...] = ()

    def evaluate(self, n):
        """Diagonal Fock coefficient ``<n|op|n>``."""
        n = np.asarray(n)
        out = np.full(n.shape, float(self.identity_coeff))
        for weight, nbar in self.terms:
            out = out + weight * thermal_weight(n, nbar)
        return out

    def scaled(self, factor: float) -> "ThermalCombo":
        return ThermalCombo(
            factor * self.identity_coeff, tuple((factor * w, nb) for w, nb in self.terms)
        )

    def __add__(self, other: "ThermalCombo") -> "ThermalCombo":
        return ThermalCombo(
            self.identity_coeff + other.identity_coeff, self.terms + other.terms
        ).merged()

    def __sub__(self, other: "ThermalCombo") -> "ThermalCombo":
        return self + other.scaled(-1.0)

    def merged(self) -> "ThermalCombo":
        """Combine terms sharing a mean photon number and drop zero weights."""
        acc: dict[float, float] = {}
        for weight, nbar in self.terms:
            acc[nbar] = acc.get(nbar, 0.0) + weight
        terms = tuple((w, nb) for nb, w in acc.items() if w != 0.0)
        return ThermalCombo(self.identity_coeff, terms)


@dataclass(frozen=True)
class DiagonalOperator:
    """Fock-diagonal operator given by a closed-form coefficient generator."""

    generator: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    label: str = ""

    def coeff(self, n):
        return self.generator(np.asarray(n))

    def coeffs(self, n_max: int) -> np.ndarray:
        return self.coeff(np.arange(n_max + 1))


def _pow(base: float, n):
    # 0**0 == 1 is the intended convention for n = 0
    return np.power(base, np.asarray(n, dtype=float))


def _clip(x, n):
    # cancellation can leave -1e-16 at integer n; non-integer n is an analytic
    # continuation (used by the curvature checks) and is left untouched
    n = np.asarray(n, dtype=float)
    return np.where(n == np.floor(n), np.clip(x, 0.0, 1.0), x)


def prob_no_click(n, p: DetectorParams):
    """``R0(n) = (1 - eta)**n``."""
    return _pow(1.0 - p.eta, n)


def prob_single_click(n, p: DetectorParams, detector: str = "D1"):
    """Probability that only ``detector`` clicks for Fock input ``|n>``."""
    if detector == "D1":
        keep = 1.0 - p.eta * (1.0 - p.transmittance)
    elif detector == "D2":
        keep = 1.0 - p.eta * p.transmittance
    else:
        raise ValueError(f"detector must be 'D1' or 'D2', got {detector!r}")
    return _clip(_pow(keep, n) - _pow(1.0 - p.eta, n), n)


def prob_double_click(n, p: DetectorParams):
    """Probability that both detectors click for Fock input ``|n>``."""
    eta, T = p.eta, p.transmittance
    return _clip(1.0 - _pow(1.0 - eta * T, n) - _pow(1.0 - eta * (1.0 - T), n) + _pow(1.0 - eta, n), n)


def prob_click_single_detector(n, p: DetectorParams):
    return 1.0 - _pow(1.0 - p.eta, n)


_GENERATORS = {
    Outcome.NO_CLICK: prob_no_click,
    Outcome.CLICK_D1_ONLY: lambda n, p: prob_single_click(n, p, "D1"),
    Outcome.CLICK_D2_ONLY: lambda n, p: prob_single_click(n, p, "D2"),
    Outcome.DOUBLE_CLICK: prob_double_click,
    Outcome.CLICK_SINGLE_DETECTOR: prob_click_single_detector,
}


def povm_diagonal(outcome: Outcome, p: DetectorParams) -> DiagonalOperator:
    gen = _GENERATORS[outcome]
    return DiagonalOperator(lambda n: gen(n, p), label=outcome.value)


def thermal_nbars(p: DetectorParams) -> tuple[float, float, float]:
    """``(nbar1, nbar2, nbar3)`` for survival factors ``1-eta(1-T)``, ``1-eta``, ``1-eta*T``."""
    eta, T = p.eta, p.transmittance
    nbar1 = 1.0 / (eta * (1.0 - T)) - 1.0
    nbar2 = 1.0 / eta - 1.0
    nbar3 = 1.0 / (eta * T) - 1.0
    return nbar1, nbar2, nbar3


def povm_thermal_decomposition(outcome: Outcome, p: DetectorParams) -> ThermalCombo:
    """Identity-plus-thermal-states form of a POVM element.

    A geometric sequence ``q**n`` equals ``(1 + nbar) * rho_th(nbar)`` with
    ``nbar = q / (1 - q)``, so each power-law term maps to one thermal state.
    """
    n1, n2, n3 = thermal_nbars(p)
    if outcome is Outcome.NO_CLICK:
        return ThermalCombo(0.0, ((1.0 + n2, n2),))
    if outcome is Outcome.CLICK_D1_ONLY:
        return ThermalCombo(0.0, ((1.0 + n1, n1), (-(1.0 + n2), n2)))
    if outcome is Outcome.CLICK_D2_ONLY:
        return ThermalCombo(0.0, ((1.0 + n3, n3), (-(1.0 + n2), n2)))
    if outcome is Outcome.DOUBLE_CLICK:
        return ThermalCombo(1.0, ((-(1.0 + n1), n1), (-(1.0 + n3), n3), (1.0 + n2, n2)))
    if outcome is Outcome.CLICK_SINGLE_DETECTOR:
        return ThermalCombo(1.0, ((-(1.0 + n2), n2),))
    raise ValueError(f"unknown outcome {outcome!r}")


def default_n_cap(p: DetectorParams, patience: int = 10, hard_cap: int = 10_000) -> int:
    """Smallest ``n`` after which ``R1`` has decreased for ``patience`` consecutive steps."""
    prev = float(prob_single_click(0, p))
    run = 0
    for n in range(1, hard_cap + 1):
        cur = float(prob_single_click(n, p))
        run = run + 1 if cur < prev else 0
        if run >= patience:
            return n
        prev = cur
    return hard_cap


def wmax_single_click(p: DetectorParams, n_cap: int | None = None) -> tuple[int, float]:
    """Fock number maximising ``R1(n)`` and the maximum value."""
    if n_cap is None:
        n_cap = default_n_cap(p)
    values = prob_single_click(np.arange(n_cap + 1), p)
    n_star = int(np.argmax(values))
    if n_star == n_cap:
        warnings.warn(f"R1 maximum found at the cap n={n_cap}; increase n_cap", RuntimeWarning)
    return n_star, float(values[n_star])


def peak_threshold_efficiency(transmittance: float) -> float:
    """Efficiency below which the ``R1(n)`` peak moves to ``n >= 2``."""
    if not (0.0 < transmittance < 1.0):
        raise ValueError(f"transmittance must lie in (0, 1), got {transmittance}")
    return 1.0 / (2.0 - transmittance)


@dataclass(frozen=True)
class PhysicalBoundary:
    """Fock-state points ``(R2(n), R1(n))`` and the hull of achievable pairs.

    ``vertices`` runs from the vacuum ``(0, 0)`` along the upper hull to the
    infinite-energy limit ``(1, 0)``.
    """

    params: DetectorParams
    points: tuple[tuple[float, float], ...]
    vertices: tuple[tuple[float, float], ...]

    def upper_r1(self, r2: float) -> float:
        """Largest achievable ``R1`` at a given ``R2`` (linear between hull vertices)."""
        xs = [v[0] for v in self.vertices]
        ys = [v[1] for v in self.vertices]
        # vertical first edge at R2 = 0 (vacuum to |1>) is handled by max at x=0
        if r2 <= xs[0]:
            return max(y for x, y in self.vertices if x == xs[0])
        return float(np.interp(r2, xs, ys))

    def contains(self, r2: float, r1: float, tol: float = 1e-12) -> bool:
        if r1 < -tol or r2 < -tol or r2 > 1.0 + tol:
            return False
        return r1 <= self.upper_r1(min(max(r2, 0.0), 1.0)) + tol


def _upper_hull(points: Sequence[tuple[float, float]]) -> list[tuple[float, float]]:
    pts = sorted(set(points), key=lambda q: (q[0], -q[1]))
    hull: list[tuple[float, float]] = []
    for q in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (x2 - x1) * (q[1] - y1) - (y2 - y1) * (q[0] - x1) >= 0.0:
                hull.pop()
            else:
                break
        hull.append(q)
    return hull


def physical_boundary(p: DetectorParams, tail_tol: float = 1e-9) -> PhysicalBoundary:
    """Boundary of all ``(R2, R1)`` pairs achievable by some quantum state.

    Any state yields a mixture of Fock-point probabilities, so the achievable set
    is the convex hull of the Fock points together with their ``n -> inf``
    limit ``(1, 0)``.
    """
    if tail_tol <= 0.0:
        raise ValueError("tail_tol must be positive")
    points = []
    n = 0
    while True:
        r1 = float(prob_single_click(n, p))
        r2 = float(prob_double_click(n, p))
        points.append((r2, r1))
        if n > 0 and r1 < tail_tol and 1.0 - r2 < tail_tol:
            break
        n += 1
    hull = _upper_hull(points + [(1.0, 0.0)])
    # keep the vacuum as the first vertex even though (0, R1(1)) dominates it
    vertices = [(0.0, 0.0)] + [v for v in hull if v != (0.0, 0.0)]
    return PhysicalBoundary(p, tuple(points), tuple(vertices))


@dataclass(frozen=True)
class CurvatureSample:
    n: float
    dr2_dn: float
    f: float

    @property
    def ok(self) -> bool:
        return self.dr2_dn > 0.0 and self.f < 0.0


def boundary_curvature_check(p: DetectorParams, n_grid: Sequence[float]) -> list[CurvatureSample]:
    """Closed-form sign checks showing the balanced Fock curve is concave.

    For the balanced scheme this evaluates ``dR2/dn`` and the numerator ``f(n)``
    of the signed curvature of ``n -> (R2(n), R1(n))``, with ``n`` continuous.
    """
    if p.transmittance != 0.5:
        raise ValueError("curvature check is derived for the balanced scheme T = 1/2")
    eta = p.eta
    if not (0.0 < eta < 1.0):
        raise ValueError("curvature check needs 0 < eta < 1")
    la, lb = math.log1p(-eta / 2.0), math.log1p(-eta)
    ratio = (2.0 - 2.0 * eta) / (2.0 - eta)
    out = []
    for n in n_grid:
        if n < 1:
            raise ValueError(f"samples must satisfy n >= 1, got {n}")
        a_n = (1.0 - eta / 2.0) ** n
        dr2 = a_n * (ratio**n * lb - 2.0 * la)
        f = (1.0 - eta) ** n * a_n * lb * la * math.log(ratio)
        out.append(CurvatureSample(float(n), dr2, f))
    return out
