"""Certifiable regions in the ``(R2, R1)`` plane and certification verdicts.

For each slope ``lambda`` the threshold ``W_{lambda,m}`` bounds all states of
stellar rank below ``m`` by the half-plane ``R1 <= W + lambda * R2``. The
intersection of these half-planes over a sampled set of slopes approximates
the convex set of pairs achievable with rank ``<= m - 1``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .detector import DetectorParams, physical_boundary
from .witness import SearchConfig, ThresholdResult, lambda_witness, optimize_threshold

# thresholds are accurate to ~1e-14; margins below this are rounding noise
DEFAULT_SLACK = 1e-12


def default_lambda_grid() -> np.ndarray:
    """0, 200 log-spaced slopes in [1e-3, 1e2] and 50 slopes in [-1, 0)."""
    neg = np.linspace(-1.0, 0.0, 50, endpoint=False)
    pos = np.geomspace(1e-3, 1e2, 200)
    return np.concatenate([neg, [0.0], pos])


@dataclass(frozen=True)
class LambdaSample:
    lam: float
    threshold: float
    converged: bool = True
    asymptotic: bool = False
    alpha: float = 0.0
    r: float = 0.0


@dataclass(frozen=True)
class RegionBoundary:
    m: int
    params: DetectorParams
    samples: tuple[LambdaSample, ...]
    polyline: tuple[tuple[float, float], ...] = field(default=())

    def r1_limit(self, r2):
        """Upper bound on ``R1`` at ``R2`` implied by the sampled lines."""
        r2 = np.asarray(r2, float)
        lams = np.array([s.lam for s in self.samples])
        ws = np.array([s.threshold for s in self.samples])
        return np.min(ws[:, None] + lams[:, None] * r2.ravel()[None, :], axis=0).reshape(r2.shape)

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "eta": self.params.eta,
            "transmittance": self.params.transmittance,
            "samples": [
                {"lambda": s.lam, "threshold": s.threshold, "converged": s.converged,
                 "asymptotic": s.asymptotic, "alpha": s.alpha, "r": s.r}
                for s in self.samples
            ],
            "polyline": [list(v) for v in self.polyline],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RegionBoundary":
        samples = tuple(
            LambdaSample(s["lambda"], s["threshold"], s["converged"], s["asymptotic"],
                         s["alpha"], s["r"])
            for s in d["samples"]
        )
        return cls(d["m"], DetectorParams(d["eta"], d["transmittance"]), samples,
                   tuple(tuple(v) for v in d["polyline"]))


def lower_envelope(lines: Sequence[tuple[float, float]], x_lo: float = 0.0,
                   x_hi: float = 1.0) -> list[tuple[float, float]]:
    """Vertices of ``x -> min_i (b_i + k_i x)`` on ``[x_lo, x_hi]``.

    ``lines`` holds ``(slope, intercept)`` pairs. Classic convex-hull trick:
    sort by decreasing slope and pop lines never attaining the minimum.
    """
    best: dict[float, float] = {}
    for k, b in lines:
        best[k] = min(b, best.get(k, math.inf))
    ordered = sorted(best.items(), key=lambda kb: -kb[0])
    hull: list[tuple[float, float]] = []
    for k, b in ordered:
        while len(hull) >= 2:
            (k1, b1), (k2, b2) = hull[-2], hull[-1]
            # line 2 is useless if line 3 undercuts it before line 1 does
            if (b - b1) * (k1 - k2) <= (b2 - b1) * (k1 - k):
                hull.pop()
            else:
                break
        hull.append((k, b))
    # walk from x_lo to x_hi; at x_lo the active line has the smallest value
    xs = [x_lo]
    active = [min(range(len(hull)), key=lambda i: hull[i][1] + hull[i][0] * x_lo)]
    i = active[0]
    while i + 1 < len(hull):
        (k1, b1), (k2, b2) = hull[i], hull[i + 1]
        x = (b2 - b1) / (k1 - k2)
        if x >= x_hi:
            break
        if x > xs[-1]:
            xs.append(x)
            active.append(i + 1)
        else:
            active[-1] = i + 1
        i += 1
    xs.append(x_hi)
    verts = []
    for j, x in enumerate(xs):
        k, b = hull[active[min(j, len(active) - 1)]]
        verts.append((x, b + k * x))
    return verts


def envelope_polyline(samples: Sequence[LambdaSample]) -> tuple[tuple[float, float], ...]:
    """Boundary of the sampled half-planes clipped to the unit square."""
    verts = lower_envelope([(s.lam, s.threshold) for s in samples])
    return tuple((float(x), float(min(max(y, 0.0), 1.0))) for x, y in verts)


def lambda_sweep(
    m: int,
    p: DetectorParams,
    lambdas: Sequence[float] | None = None,
    cfg: SearchConfig = SearchConfig(),
    previous: RegionBoundary | None = None,
) -> RegionBoundary:
    """Thresholds ``W_{lambda,m}`` over a slope grid and the resulting boundary.

    Each slope's search is seeded with the optimum of its neighbour and, when
    ``previous`` (the rank ``m - 1`` boundary on the same grid) is given, with
    that optimum too; the rank-``m`` value can then never fall below rank ``m-1``.
    """
    lambdas = default_lambda_grid() if lambdas is None else np.asarray(lambdas, float)
    if not np.all(np.isfinite(lambdas)):
        raise ValueError("lambda values must be finite")
    lambdas = np.unique(lambdas)
    prev_by_lam = {s.lam: s for s in previous.samples} if previous is not None else {}
    samples = []
    last: ThresholdResult | None = None
    for lam in lambdas:
        seeds = []
        if last is not None and not last.asymptotic:
            seeds.append((float(complex(last.argmax.alpha).real), last.argmax.r))
        lower = prev_by_lam.get(float(lam))
        if lower is not None and not lower.asymptotic:
            seeds.append((lower.alpha, lower.r))
        res = optimize_threshold(lambda_witness(p, lam), m, cfg, seeds)
        samples.append(LambdaSample(
            float(lam), res.value, res.converged, res.asymptotic,
            float(complex(res.argmax.alpha).real), res.argmax.r,
        ))
        last = res
    samples = tuple(samples)
    return RegionBoundary(m, p, samples, envelope_polyline(samples))


def region_boundaries(
    p: DetectorParams,
    ranks: Sequence[int],
    lambdas: Sequence[float] | None = None,
    cfg: SearchConfig = SearchConfig(),
) -> list[RegionBoundary]:
    """Boundaries for ``ranks`` (all ranks from 1 up to ``max(ranks)`` are swept)."""
    out = []
    prev = None
    for m in range(1, max(ranks) + 1):
        prev = lambda_sweep(m, p, lambdas, cfg, previous=prev)
        if m in ranks:
            out.append(prev)
    return out


@dataclass(frozen=True)
class CertificationVerdict:
    certified_rank: int
    witnessing_lambda: float | None
    margin: float
    r1: float
    r2: float
    params: DetectorParams
    outside_physical: bool = False

    def to_dict(self) -> dict:
        return {
            "certified_rank": self.certified_rank,
            "witnessing_lambda": self.witnessing_lambda,
            "margin": self.margin,
            "r1": self.r1,
            "r2": self.r2,
            "eta": self.params.eta,
            "transmittance": self.params.transmittance,
            "outside_physical": self.outside_physical,
        }


def certify(
    r1_meas: float,
    r2_meas: float,
    p: DetectorParams,
    boundaries: Sequence[RegionBoundary],
    slack: float = DEFAULT_SLACK,
) -> CertificationVerdict:
    """Highest rank ``m`` with ``R1 - lambda R2 > W_{lambda,m} + slack`` for a sampled slope.

    The margin reported is the best ``R1 - lambda R2 - W`` at the certified rank
    (at rank 1 when nothing is certified, where it is non-positive).
    """
    if not (0.0 <= r1_meas <= 1.0 and 0.0 <= r2_meas <= 1.0):
        raise ValueError(f"probabilities must lie in [0, 1], got R1={r1_meas}, R2={r2_meas}")
    if not boundaries:
        raise ValueError("no region boundaries supplied")
    outside = not physical_boundary(p).contains(r2_meas, r1_meas, tol=1e-12)
    if outside:
        warnings.warn(
            f"(R2, R1) = ({r2_meas}, {r1_meas}) lies outside the physically achievable region",
            RuntimeWarning,
        )
    best_by_rank = {}
    for b in boundaries:
        if b.params != p:
            raise ValueError(f"boundary for {b.params} does not match {p}")
        margins = [(r1_meas - s.lam * r2_meas - s.threshold, s.lam) for s in b.samples]
        best_by_rank[b.m] = max(margins, key=lambda t: (t[0], -abs(t[1])))
    certified = [m for m, (mg, _) in best_by_rank.items() if mg > slack]
    if certified:
        rank = max(certified)
        margin, lam = best_by_rank[rank]
        return CertificationVerdict(rank, lam, margin, r1_meas, r2_meas, p, outside)
    lowest = min(best_by_rank)
    margin, lam = best_by_rank[lowest]
    return CertificationVerdict(0, None, margin, r1_meas, r2_meas, p, outside)
