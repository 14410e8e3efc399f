"""Self-check suites run by ``clickrank validate``.

Each suite returns a :class:`SuiteResult`; a suite passes only if every one of
its checks holds at the stated tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .detector import (
    TWO_DETECTOR_OUTCOMES,
    DetectorParams,
    Outcome,
    boundary_curvature_check,
    povm_diagonal,
    povm_thermal_decomposition,
    prob_double_click,
    prob_single_click,
)
from .gaussian_states import GaussianParams, combo_expectation, covariance, dst_block, dst_block_oracle
from .regions import RegionBoundary, certify


@dataclass
class SuiteResult:
    name: str
    passed: bool
    checks: int
    max_deviation: float = 0.0
    failures: list[str] = field(default_factory=list)

    def to_row(self) -> dict:
        return {
            "suite": self.name,
            "passed": self.passed,
            "checks": self.checks,
            "max_deviation": self.max_deviation,
            "failures": "; ".join(self.failures[:5]),
        }


def _random_params(rng, count):
    out = []
    while len(out) < count:
        eta = float(rng.uniform(0.05, 1.0))
        T = float(rng.uniform(0.05, 0.95))
        out.append(DetectorParams(eta, T))
    return out


def povm_completeness(rng, n_params: int = 50, n_max: int = 60, tol: float = 1e-13) -> SuiteResult:
    n = np.arange(n_max + 1)
    worst, fails, checks = 0.0, [], 0
    for p in _random_params(rng, n_params):
        coeffs = [povm_diagonal(o, p).coeff(n) for o in TWO_DETECTOR_OUTCOMES]
        dev = float(np.max(np.abs(sum(coeffs) - 1.0)))
        lo = min(float(c.min()) for c in coeffs)
        hi = max(float(c.max()) for c in coeffs)
        thermal = max(
            float(np.max(np.abs(povm_thermal_decomposition(o, p).evaluate(n) - povm_diagonal(o, p).coeff(n))))
            for o in Outcome
        )
        worst = max(worst, dev)
        checks += 1
        if dev > tol or lo < 0.0 or hi > 1.0 or thermal > 1e-12:
            fails.append(f"eta={p.eta:.4f} T={p.transmittance:.4f}: sum dev {dev:.2e}, "
                         f"range [{lo:.3g}, {hi:.3g}], thermal dev {thermal:.2e}")
    return SuiteResult("povm_completeness", not fails, checks, worst, fails)


def random_gaussian_params(rng) -> tuple[GaussianParams, float]:
    mag = float(rng.uniform(0.0, 2.0))
    alpha = mag if rng.random() < 0.5 else 1j * mag
    r = float(rng.uniform(0.05, 1.5)) * (1 if rng.random() < 0.5 else -1)
    nbar = float(rng.uniform(0.0, 3.0))
    return GaussianParams(r, alpha), nbar


def analytic_vs_oracle(rng, n_cases: int = 50, mdim: int = 11, tol: float = 1e-8) -> SuiteResult:
    worst, fails = 0.0, []
    for _ in range(n_cases):
        g, nbar = random_gaussian_params(rng)
        dev = float(np.max(np.abs(dst_block(mdim, g, nbar) - dst_block_oracle(mdim, g, nbar))))
        worst = max(worst, dev)
        if not dev < tol:
            fails.append(f"r={g.r:.4f} alpha={complex(g.alpha):.4f} nbar={nbar:.4f}: {dev:.2e}")
    return SuiteResult("analytic_vs_oracle", not fails, n_cases, worst, fails)


def _fd_curvature(p: DetectorParams, n: float, h: float = 1e-3) -> tuple[float, float]:
    def r1(x):
        return float(prob_single_click(x, p))

    def r2(x):
        return float(prob_double_click(x, p))

    d1 = (r1(n + h) - r1(n - h)) / (2 * h)
    d2 = (r2(n + h) - r2(n - h)) / (2 * h)
    dd1 = (r1(n + h) - 2 * r1(n) + r1(n - h)) / h**2
    dd2 = (r2(n + h) - 2 * r2(n) + r2(n - h)) / h**2
    return d2, d2 * dd1 - d1 * dd2


def curvature_signs(tol: float = 1e-6) -> SuiteResult:
    grid = np.round(np.arange(1.0, 20.0 + 1e-9, 0.1), 10)
    worst, fails, checks = 0.0, [], 0
    for eta in np.round(np.arange(0.1, 0.95, 0.1), 10):
        p = DetectorParams(float(eta), 0.5)
        for s in boundary_curvature_check(p, grid):
            checks += 1
            fd_dr2, fd_f = _fd_curvature(p, s.n)
            dev = max(abs(fd_dr2 - s.dr2_dn), abs(fd_f - s.f))
            worst = max(worst, dev)
            if not s.ok or dev > tol:
                fails.append(f"eta={eta} n={s.n}: dR2/dn={s.dr2_dn:.3e} f={s.f:.3e} fd dev {dev:.2e}")
    return SuiteResult("curvature_signs", not fails, checks, worst, fails)


def polyline_is_concave(polyline, tol: float = 1e-12) -> bool:
    pts = np.asarray(polyline, float)
    if len(pts) < 3:
        return True
    slopes = np.diff(pts[:, 1]) / np.diff(pts[:, 0])
    return bool(np.all(np.diff(slopes) <= tol))


def envelope_convexity(boundaries: list[RegionBoundary]) -> SuiteResult:
    fails = []
    for b in boundaries:
        if not polyline_is_concave(b.polyline):
            fails.append(f"m={b.m}: envelope not concave")
    for lo, hi in zip(boundaries, boundaries[1:]):
        x = np.linspace(0.0, 1.0, 201)
        gap = float(np.min(hi.r1_limit(x) - lo.r1_limit(x)))
        if gap < -1e-12:
            fails.append(f"m={hi.m} boundary dips {gap:.2e} below m={lo.m}")
    return SuiteResult("envelope_convexity", not fails, len(boundaries), 0.0, fails)


def random_gaussian_click_pair(rng, p: DetectorParams, max_components: int = 4) -> tuple[float, float]:
    """``(R1, R2)`` of a random mixture of displaced squeezed thermal states."""
    k = int(rng.integers(1, max_components + 1))
    weights = rng.dirichlet(np.ones(k))
    pi1 = povm_thermal_decomposition(Outcome.CLICK_D1_ONLY, p)
    pi2 = povm_thermal_decomposition(Outcome.DOUBLE_CLICK, p)
    r1 = r2 = 0.0
    for w in weights:
        cov = covariance(float(rng.uniform(-1.5, 1.5)), float(rng.exponential(0.5)),
                         float(rng.uniform(0.0, math.pi)))
        mag, phase = float(rng.uniform(0.0, 2.5)), float(rng.uniform(0.0, 2 * math.pi))
        mean = math.sqrt(2) * mag * np.array([math.cos(phase), math.sin(phase)])
        r1 += w * combo_expectation(pi1, cov, mean)
        r2 += w * combo_expectation(pi2, cov, mean)
    return min(max(r1, 0.0), 1.0), min(max(r2, 0.0), 1.0)


def gaussian_soundness(rng, p: DetectorParams, boundaries: list[RegionBoundary],
                       n_states: int = 200) -> SuiteResult:
    fails, worst = [], -math.inf
    for i in range(n_states):
        r1, r2 = random_gaussian_click_pair(rng, p)
        v = certify(r1, r2, p, boundaries)
        worst = max(worst, v.margin)
        if v.certified_rank != 0:
            fails.append(f"state {i}: (R2, R1)=({r2:.6f}, {r1:.6f}) certified rank {v.certified_rank}")
    return SuiteResult("gaussian_soundness", not fails, n_states, worst, fails)
