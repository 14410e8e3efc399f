"""Derivative-free maximisation on a 2-D box: coarse grid plus simplex polishing.

The simplex stage runs many Nelder-Mead simplices in lockstep so that each
iteration costs one vectorised objective call.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

BatchObjective = Callable[[np.ndarray], np.ndarray]


@dataclass
class SimplexResult:
    x: np.ndarray  # (K, 2) best vertex of each simplex
    f: np.ndarray  # (K,) objective at x
    converged: np.ndarray  # (K,) bool
    iterations: int
    evaluations: int


def nelder_mead_batch(
    fun: BatchObjective,
    x0: np.ndarray,
    step: np.ndarray,
    xatol: float = 1e-7,
    fatol: float = 1e-13,
    max_iter: int = 400,
) -> SimplexResult:
    """Maximise ``fun`` from each row of ``x0`` with independent 2-D simplices.

    ``fun`` maps an ``(P, 2)`` array of points to ``(P,)`` values. Standard
    coefficients (reflection 1, expansion 2, contraction 1/2, shrink 1/2).
    """
    x0 = np.atleast_2d(np.asarray(x0, float))
    K, d = x0.shape
    step = np.broadcast_to(np.asarray(step, float), (d,))
    sim = np.repeat(x0[:, None, :], d + 1, axis=1)
    for i in range(d):
        sim[:, i + 1, i] += step[i]
    # minimise the negated objective
    fs = -fun(sim.reshape(-1, d)).reshape(K, d + 1)
    evals = K * (d + 1)
    active = np.ones(K, bool)
    it = 0
    while it < max_iter:
        order = np.argsort(fs, axis=1, kind="stable")
        sim = np.take_along_axis(sim, order[:, :, None], axis=1)
        fs = np.take_along_axis(fs, order, axis=1)
        size = np.max(np.abs(sim[:, 1:] - sim[:, :1]), axis=(1, 2))
        spread = np.max(np.abs(fs[:, 1:] - fs[:, :1]), axis=1)
        active = ~((size <= xatol) & (spread <= fatol))
        if not active.any():
            break
        it += 1
        idx = np.flatnonzero(active)
        s, f = sim[idx], fs[idx]
        centroid = s[:, :-1].mean(axis=1)
        worst = s[:, -1]
        xr = centroid + (centroid - worst)
        xe = centroid + 2.0 * (centroid - worst)
        xoc = centroid + 0.5 * (centroid - worst)
        xic = centroid - 0.5 * (centroid - worst)
        cand = np.concatenate([xr, xe, xoc, xic])
        fc = -fun(cand)
        evals += cand.shape[0]
        n = idx.size
        fr, fe, foc, fic = fc[:n], fc[n : 2 * n], fc[2 * n : 3 * n], fc[3 * n :]
        f_best, f_second, f_worst = f[:, 0], f[:, -2], f[:, -1]

        new_x = worst.copy()
        new_f = f_worst.copy()
        shrink = np.zeros(n, bool)

        expand = fr < f_best
        use_e = expand & (fe < fr)
        use_r_exp = expand & ~use_e
        accept_r = ~expand & (fr < f_second)
        outside = ~expand & ~accept_r & (fr < f_worst)
        inside = ~expand & ~accept_r & ~outside

        new_x[use_e], new_f[use_e] = xe[use_e], fe[use_e]
        new_x[use_r_exp], new_f[use_r_exp] = xr[use_r_exp], fr[use_r_exp]
        new_x[accept_r], new_f[accept_r] = xr[accept_r], fr[accept_r]
        ok_oc = outside & (foc <= fr)
        new_x[ok_oc], new_f[ok_oc] = xoc[ok_oc], foc[ok_oc]
        ok_ic = inside & (fic < f_worst)
        new_x[ok_ic], new_f[ok_ic] = xic[ok_ic], fic[ok_ic]
        shrink = (outside & ~ok_oc) | (inside & ~ok_ic)

        s[:, -1], f[:, -1] = new_x, new_f
        if shrink.any():
            sh = np.flatnonzero(shrink)
            pts = s[sh, :1] + 0.5 * (s[sh, 1:] - s[sh, :1])
            s[sh, 1:] = pts
            f[sh, 1:] = -fun(pts.reshape(-1, d)).reshape(sh.size, d)
            evals += sh.size * d
        sim[idx], fs[idx] = s, f

    order = np.argsort(fs, axis=1, kind="stable")
    sim = np.take_along_axis(sim, order[:, :, None], axis=1)
    fs = np.take_along_axis(fs, order, axis=1)
    return SimplexResult(sim[:, 0].copy(), -fs[:, 0], ~active, it, evals)


def grid_local_maxima(values: np.ndarray) -> np.ndarray:
    """Boolean mask of grid points not exceeded by any of their 8 neighbours."""
    padded = np.pad(values, 1, mode="constant", constant_values=-np.inf)
    mask = np.ones(values.shape, bool)
    H, W = values.shape
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            mask &= values >= padded[1 + di : 1 + di + H, 1 + dj : 1 + dj + W]
    return mask
