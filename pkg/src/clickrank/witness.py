"""Stellar-rank witnesses built from the click POVM and their thresholds.

The threshold for certifying rank ``m`` is the supremum, over Gaussian
unitaries ``U``, of the largest eigenvalue of ``U W U^dag`` restricted to the
span of ``|0>..|m-1>``. Because ``W`` is a combination of identity and thermal
states, each restricted block is a sum of displaced squeezed thermal blocks.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .detector import (
    DetectorParams,
    Outcome,
    ThermalCombo,
    default_n_cap,
    povm_thermal_decomposition,
    prob_single_click,
)
from .fock_linalg import hermitian_max_eig, hermitian_max_eig_batch
from .gaussian_states import GaussianParams, dst_block, dst_blocks_real
from .search import grid_local_maxima, nelder_mead_batch


@dataclass(frozen=True)
class WitnessSpec:
    combo: ThermalCombo
    label: str
    lam: float | None = None


def single_click_witness(p: DetectorParams) -> WitnessSpec:
    """``W = Pi_1``: D1 clicks while D2 stays silent."""
    return WitnessSpec(povm_thermal_decomposition(Outcome.CLICK_D1_ONLY, p).merged(), "Pi1")


def lambda_witness(p: DetectorParams, lam: float) -> WitnessSpec:
    """``W_lambda = Pi_1 - lambda * Pi_2`` with ``Pi_2`` the coincidence element."""
    pi1 = povm_thermal_decomposition(Outcome.CLICK_D1_ONLY, p)
    pi2 = povm_thermal_decomposition(Outcome.DOUBLE_CLICK, p)
    lam = float(lam)
    return WitnessSpec(pi1 - pi2.scaled(lam), f"Pi1 - {lam!r}*Pi2", lam)


@dataclass(frozen=True)
class SearchConfig:
    """Grid-plus-simplex search settings; ``alpha_max=None`` means ``3 + sqrt(m)``."""

    alpha_max: float | None = None
    r_max: float = 2.0
    n_alpha: int = 81
    n_r: int = 81
    xtol: float = 1e-7
    multistarts: int = 16
    max_iter: int = 400

    def __post_init__(self):
        if self.alpha_max is not None and self.alpha_max <= 0:
            raise ValueError("alpha_max must be positive")
        if self.r_max <= 0 or self.n_alpha < 2 or self.n_r < 3 or self.multistarts < 1:
            raise ValueError(f"invalid search configuration {self}")
        if not (0 < self.xtol <= 1e-6):
            raise ValueError("refinement tolerance must lie in (0, 1e-6]")

    def alpha_bound(self, m: int) -> float:
        return self.alpha_max if self.alpha_max is not None else 3.0 + math.sqrt(m)

    def densified(self) -> "SearchConfig":
        return replace(self, n_alpha=2 * self.n_alpha - 1, n_r=2 * self.n_r - 1)


@dataclass(frozen=True)
class ThresholdResult:
    m: int
    value: float
    argmax: GaussianParams
    converged: bool
    evaluations: int
    grid_value: float = float("nan")
    refinement_gain: float = 0.0
    at_search_edge: bool = False
    # the supremum is reached only in the infinite-energy limit
    asymptotic: bool = False

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "value": self.value,
            "alpha": float(complex(self.argmax.alpha).real),
            "r": self.argmax.r,
            "converged": self.converged,
            "evaluations": self.evaluations,
            "grid_value": self.grid_value,
            "refinement_gain": self.refinement_gain,
            "at_search_edge": self.at_search_edge,
            "asymptotic": self.asymptotic,
        }


def projected_witness(w: WitnessSpec, m: int, g: GaussianParams) -> np.ndarray:
    """``<j|U W U^dag|k>`` for ``j, k < m`` with ``U = D(alpha) S(r)``."""
    if m < 1:
        raise ValueError(f"rank index must be >= 1, got {m}")
    M = w.combo.identity_coeff * np.eye(m, dtype=complex)
    for weight, nbar in w.combo.terms:
        M = M + weight * dst_block(m, g, nbar)
    return M


def objective(w: WitnessSpec, m: int, g: GaussianParams) -> float:
    return hermitian_max_eig(projected_witness(w, m, g))


def objective_batch(w: WitnessSpec, m: int, alpha, r) -> np.ndarray:
    """Vectorised objective over real ``alpha`` and ``r`` arrays."""
    alpha, r = np.broadcast_arrays(np.asarray(alpha, float), np.asarray(r, float))
    M = np.zeros(alpha.shape + (m, m))
    for weight, nbar in w.combo.terms:
        M += weight * dst_blocks_real(m, alpha, r, nbar)
    M[..., np.arange(m), np.arange(m)] += w.combo.identity_coeff
    return hermitian_max_eig_batch(M)


def _preferred(cands: np.ndarray, values: np.ndarray) -> int:
    # max value; ties -> smaller alpha, smaller |r|, negative r
    keys = (cands[:, 1] > 0, np.abs(cands[:, 1]), np.abs(cands[:, 0]), -values)
    return int(np.lexsort(keys)[0])


def optimize_threshold(
    w: WitnessSpec,
    m: int,
    cfg: SearchConfig = SearchConfig(),
    seeds: Iterable[tuple[float, float]] = (),
) -> ThresholdResult:
    """Lower bound on the rank-``m`` threshold of witness ``w``.

    A coarse grid over ``alpha in [0, alpha_max]`` and ``r in [-r_max, r_max]``
    picks starting points (the best grid local maxima, plus any ``seeds`` given
    as ``(alpha, r)``) which are polished by Nelder-Mead.
    """
    if m < 1:
        raise ValueError(f"rank index must be >= 1, got {m}")
    a_max = cfg.alpha_bound(m)
    alphas = np.linspace(0.0, a_max, cfg.n_alpha)
    rs = cfg.r_max * np.linspace(-1.0, 1.0, cfg.n_r)
    if cfg.n_r % 2:
        rs[cfg.n_r // 2] = 0.0
    AA, RR = np.meshgrid(alphas, rs, indexing="ij")
    vals = objective_batch(w, m, AA, RR)
    evals = vals.size

    flat = np.column_stack([AA.ravel(), RR.ravel()])
    best_grid = _preferred(flat, vals.ravel())
    grid_value = float(vals.ravel()[best_grid])

    peaks = np.flatnonzero(grid_local_maxima(vals).ravel())
    peaks = peaks[np.argsort(-vals.ravel()[peaks], kind="stable")][: cfg.multistarts]
    if peaks.size < cfg.multistarts:
        extra = np.argsort(-vals.ravel(), kind="stable")
        extra = extra[~np.isin(extra, peaks)][: cfg.multistarts - peaks.size]
        peaks = np.concatenate([peaks, extra])
    starts = flat[peaks]
    seeds = np.asarray(list(seeds), float).reshape(-1, 2)
    if seeds.size:
        starts = np.vstack([starts, seeds])
        seed_vals = objective_batch(w, m, seeds[:, 0], seeds[:, 1])
        evals += seed_vals.size
    step = np.array([alphas[1] - alphas[0], rs[1] - rs[0]])

    fun = lambda pts: objective_batch(w, m, pts[:, 0], pts[:, 1])
    res = nelder_mead_batch(fun, starts, step, xatol=cfg.xtol, max_iter=cfg.max_iter)
    evals += res.evaluations

    cands = np.vstack([flat[best_grid][None, :], res.x])
    cvals = np.concatenate([[grid_value], res.f])
    if seeds.size:
        cands = np.vstack([cands, seeds])
        cvals = np.concatenate([cvals, seed_vals])
    # alpha -> -alpha is a symmetry of the objective
    cands[:, 0] = np.abs(cands[:, 0])
    i = _preferred(cands, cvals)
    alpha_opt, r_opt = (float(v) for v in cands[i])
    value = float(cvals[i])
    # a finite optimum that only matches the limit to rounding counts as the limit
    asymptotic = w.combo.identity_coeff >= value - 1e-12
    if asymptotic:
        value = float(w.combo.identity_coeff)
    edge = alpha_opt >= a_max * (1 - 1e-3) or abs(r_opt) >= cfg.r_max * (1 - 1e-3)
    return ThresholdResult(
        m=m,
        value=value,
        argmax=GaussianParams(r_opt, alpha_opt),
        converged=bool(res.converged.all()),
        evaluations=int(evals),
        grid_value=grid_value,
        refinement_gain=value - grid_value,
        at_search_edge=bool(edge and not asymptotic),
        asymptotic=bool(asymptotic),
    )


def single_click_thresholds(
    p: DetectorParams, ranks: Sequence[int], cfg: SearchConfig = SearchConfig()
) -> list[ThresholdResult]:
    """Thresholds of ``Pi_1`` for several ranks, each seeded with the previous optimum."""
    w = single_click_witness(p)
    out: list[ThresholdResult] = []
    seeds: list[tuple[float, float]] = []
    for m in sorted(ranks):
        res = optimize_threshold(w, m, cfg, seeds)
        out.append(res)
        seeds = [(float(complex(res.argmax.alpha).real), res.argmax.r)]
    return out


def gap_delta(p: DetectorParams, m: int, n_cap: int | None = None) -> float:
    """Signed gap ``min_{n != m} [R1(m) - R1(n)]``.

    Competitors beyond ``n_cap`` are bounded by ``[1 - eta(1 - T)]**n_cap``.
    """
    if n_cap is None:
        n_cap = max(default_n_cap(p), m + 10)
    n = np.arange(n_cap + 1)
    r1 = prob_single_click(n, p)
    tail = (1.0 - p.eta * (1.0 - p.transmittance)) ** n_cap
    delta = float(r1[m] - max(np.delete(r1, m).max(), tail))
    if delta <= 0:
        warnings.warn(f"R1({m}) is not the unique maximum: gap {delta:.3e}", RuntimeWarning)
    return delta


def fidelity_lower_bound(p_meas: float, p: DetectorParams, m: int) -> float:
    """Lower bound on the fidelity with ``|m>`` from a measured ``R1`` value.

    Not clamped to ``[0, 1]``; a negative value carries no information.
    """
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        delta = gap_delta(p, m)
    if delta <= 0:
        raise ValueError(f"gap is not positive for m={m} (delta={delta:.3e})")
    return 1.0 - (float(prob_single_click(m, p)) - p_meas) / delta
