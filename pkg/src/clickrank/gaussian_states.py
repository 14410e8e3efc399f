"""Fock-basis blocks of displaced squeezed thermal states.

``rho_G = D(alpha) S(r) rho_th(nbar) S(r)^dag D(alpha)^dag`` with
``D(alpha) = exp(alpha a^dag - alpha^* a)`` and ``S(r) = exp(r/2 (a^dag^2 - a^2))``.
Positive ``r`` stretches the ``x = (a + a^dag)/sqrt(2)`` quadrature.

Two independent routes are provided: a closed-form expansion built from the
Husimi function (Hermite polynomials of the displacement), and a brute-force
route exponentiating truncated ladder-operator generators.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .fock_linalg import hermite_poly, ladder_matrix, matrix_exp, scaled_hermite

DEGENERATE_A = 1e-8
TAIL_TOL = 1e-12
MAX_TRUNCATION = 8192


class DegenerateParametersError(ValueError):
    """Closed form is singular (``A -> 0``, i.e. no squeezing); use the oracle."""


class TruncationError(RuntimeError):
    pass


@dataclass(frozen=True)
class GaussianParams:
    """Gaussian unitary ``D(alpha) S(r)``; ``alpha`` must lie on a coordinate axis."""

    r: float
    alpha: complex = 0.0

    def __post_init__(self):
        if not math.isfinite(self.r):
            raise ValueError("squeezing must be finite")
        a = complex(self.alpha)
        if a.real != 0.0 and a.imag != 0.0:
            raise ValueError(f"alpha must be real or purely imaginary, got {a}")


@dataclass(frozen=True)
class HusimiGaussian:
    V_R: float
    V_I: float
    alpha_R: float
    alpha_I: float


@dataclass(frozen=True)
class ABOmega:
    A: complex
    B: float
    omega: complex | None
    degenerate: bool = False


def husimi_widths(r: float, nbar: float) -> tuple[float, float]:
    if nbar < 0:
        raise ValueError(f"nbar must be >= 0, got {nbar}")
    V_R = ((2 * nbar + 1) * math.exp(2 * r) + 1) / 2
    V_I = ((2 * nbar + 1) * math.exp(-2 * r) + 1) / 2
    return V_R, V_I


def husimi_gaussian(g: GaussianParams, nbar: float) -> HusimiGaussian:
    V_R, V_I = husimi_widths(g.r, nbar)
    a = complex(g.alpha)
    return HusimiGaussian(V_R, V_I, a.real, a.imag)


def _b_coefficient(V_R: float, V_I: float) -> float:
    return 1.0 - 1.0 / (2 * V_R) - 1.0 / (2 * V_I)


def abw_params(g: GaussianParams, nbar: float) -> ABOmega:
    """Parameters ``A``, ``B`` and ``omega`` of the Hermite expansion.

    ``A`` takes the principal square root, so it is real for ``r < 0`` and
    purely imaginary for ``r > 0``. With ``|A| < 1e-8`` the result is flagged
    degenerate and ``omega`` is ``None``.
    """
    h = husimi_gaussian(g, nbar)
    A = cmath.sqrt(1 / (4 * h.V_R) - 1 / (4 * h.V_I))
    B = _b_coefficient(h.V_R, h.V_I)
    if abs(A) < DEGENERATE_A:
        return ABOmega(A, B, None, degenerate=True)
    omega = (h.alpha_R / (2 * h.V_R) + 1j * h.alpha_I / (2 * h.V_I)) / A
    return ABOmega(A, B, omega)


def _log_factorial(n: int) -> float:
    return math.lgamma(n + 1)


def dst_element_analytic(j: int, k: int, g: GaussianParams, nbar: float) -> complex:
    """Closed-form matrix element ``<j|rho_G|k>``.

    The second Hermite factor is evaluated at ``conj(c) / A`` where
    ``c = A * omega``: the conjugation acts on the displacement only, which
    matches the generating-function derivation for either branch of ``A``.
    """
    if j < 0 or k < 0:
        raise ValueError("matrix indices must be non-negative")
    p = abw_params(g, nbar)
    if p.degenerate:
        raise DegenerateParametersError(f"A = {p.A!r} is below {DEGENERATE_A}; use the oracle")
    h = husimi_gaussian(g, nbar)
    A, B = p.A, p.B
    c = A * p.omega
    omega_tilde = c.conjugate() / A
    log_pref = 0.5 * (_log_factorial(j) + _log_factorial(k)) - 0.5 * math.log(h.V_R * h.V_I)
    envelope = math.exp(-h.alpha_R**2 / h.V_R - h.alpha_I**2 / h.V_I)
    total = 0j
    for l in range(min(j, k) + 1):
        log_c = log_pref - _log_factorial(l) - _log_factorial(j - l) - _log_factorial(k - l)
        term = A ** (j + k - 2 * l) * B**l
        term *= hermite_poly(j - l, p.omega) * hermite_poly(k - l, omega_tilde)
        total += math.exp(log_c) * term
    return envelope * total


def thermal_state(N: int, nbar: float) -> np.ndarray:
    n = np.arange(N, dtype=float)
    if nbar == 0.0:
        return np.diag((n == 0).astype(float))
    return np.diag(np.exp(n * math.log(nbar) - (n + 1) * math.log1p(nbar)))


def default_truncation(g: GaussianParams, nbar: float) -> int:
    est = 8 * (nbar + 1) * math.exp(2 * abs(g.r)) + 8 * abs(complex(g.alpha)) ** 2
    # Fock tail of the stretched quadrature decays like ((V - 1/2) / (V + 1/2))**n
    V = (nbar + 0.5) * math.exp(2 * abs(g.r))
    decay = math.log((V + 0.5) / (V - 0.5)) if V > 0.5 else math.inf
    tail = 1.2 * math.log(1 / TAIL_TOL) / decay + 4 * abs(complex(g.alpha)) ** 2
    return max(64, math.ceil(est), math.ceil(tail) if math.isfinite(tail) else 0)


def gaussian_unitary(N: int, g: GaussianParams) -> np.ndarray:
    a = ladder_matrix(N)
    ad = a.conj().T
    alpha = complex(g.alpha)
    S = matrix_exp(0.5 * g.r * (ad @ ad - a @ a))
    D = matrix_exp(alpha * ad - alpha.conjugate() * a)
    return D @ S


def _apply_tridiagonal_exp(R: np.ndarray, off: np.ndarray, antisymmetric: bool) -> np.ndarray:
    """``R @ exp(K)`` for a tridiagonal generator ``K`` with real couplings ``off``.

    ``antisymmetric``: ``K[k+1, k] = off[k] = -K[k, k+1]``, which the phases
    ``i**k`` map to ``-i H``; otherwise ``K = i H``. Here ``H`` is the real
    symmetric tridiagonal matrix with off-diagonal ``off``.
    """
    lam, V = eigh_tridiagonal(np.zeros(len(off) + 1), off)
    if antisymmetric:
        ph = 1j ** (np.arange(len(off) + 1) % 4)
        return (((R * ph) @ V) * np.exp(-1j * lam)) @ V.T / ph
    return ((R @ V) * np.exp(1j * lam)) @ V.T


def _unitary_rows(N: int, g: GaussianParams, rows: np.ndarray) -> np.ndarray:
    """Selected rows of the truncated ``D(alpha) S(r)``.

    Both generators are tridiagonal (squeezing on the even and odd sublattices
    separately), so each exponential is taken exactly from its eigensystem.
    """
    R = np.zeros((len(rows), N), dtype=complex)
    R[np.arange(len(rows)), rows] = 1.0
    alpha = complex(g.alpha)
    k = np.arange(1, N, dtype=float)
    if alpha.imag == 0.0:
        if alpha.real != 0.0:
            R = _apply_tridiagonal_exp(R, alpha.real * np.sqrt(k), antisymmetric=True)
    else:
        R = _apply_tridiagonal_exp(R, alpha.imag * np.sqrt(k), antisymmetric=False)
    if g.r != 0.0:
        out = np.empty_like(R)
        for start in (0, 1):
            n = np.arange(start, N - 2, 2, dtype=float)
            off = 0.5 * g.r * np.sqrt((n + 1) * (n + 2))
            out[:, start::2] = _apply_tridiagonal_exp(R[:, start::2], off, antisymmetric=True)
        R = out
    return R


def dst_block_oracle(mdim: int, g: GaussianParams, nbar: float, N: int | None = None) -> np.ndarray:
    """Top-left ``mdim x mdim`` block of ``rho_G`` from truncated operator exponentials.

    The truncation starts at ``N`` (or an energy-based estimate) and doubles until
    the last diagonal element of the rotated state drops below ``1e-12``.
    """
    if N is None:
        N = default_truncation(g, nbar)
    N = min(max(N, 4 * mdim), MAX_TRUNCATION)
    while True:
        rows = _unitary_rows(N, g, np.r_[np.arange(mdim), N - 1])
        w = np.diag(thermal_state(N, nbar))
        rho = (rows * w) @ rows.conj().T
        tail = rho[-1, -1].real
        if abs(tail) <= TAIL_TOL:
            block = rho[:mdim, :mdim]
            return 0.5 * (block + block.conj().T)
        if N >= MAX_TRUNCATION:
            raise TruncationError(f"tail weight {abs(tail):.2e} > {TAIL_TOL} at N={N}")
        N = min(2 * N, MAX_TRUNCATION)


def dst_block(mdim: int, g: GaussianParams, nbar: float) -> np.ndarray:
    """``mdim x mdim`` block of ``rho_G``; closed form unless degenerate."""
    if abw_params(g, nbar).degenerate:
        return dst_block_oracle(mdim, g, nbar)
    rho = np.empty((mdim, mdim), dtype=complex)
    for j in range(mdim):
        for k in range(j, mdim):
            v = dst_element_analytic(j, k, g, nbar)
            rho[j, k] = v
            rho[k, j] = v.conjugate()
    return rho


@lru_cache(maxsize=64)
def _sum_coefficients(mdim: int) -> tuple[np.ndarray, ...]:
    # C[l][j-l, k-l] = sqrt(j! k!) / (l! (j-l)! (k-l)!)
    coeffs = []
    for l in range(mdim):
        size = mdim - l
        C = np.empty((size, size))
        for jj in range(size):
            for kk in range(size):
                j, k = jj + l, kk + l
                C[jj, kk] = math.exp(
                    0.5 * (_log_factorial(j) + _log_factorial(k))
                    - _log_factorial(l) - _log_factorial(jj) - _log_factorial(kk)
                )
        C.setflags(write=False)
        coeffs.append(C)
    return tuple(coeffs)


def dst_blocks_real(mdim: int, alpha, r, nbar: float) -> np.ndarray:
    """Vectorised closed form for real ``alpha`` and real ``r``.

    Uses ``A**n H_n(c/A)`` in its polynomial form in ``A**2``, so ``r = 0`` is
    regular here. Returns a real array of shape ``alpha.shape + (mdim, mdim)``.
    """
    alpha, r = np.broadcast_arrays(np.asarray(alpha, float), np.asarray(r, float))
    e2r = np.exp(2 * r)
    V_R = ((2 * nbar + 1) * e2r + 1) / 2
    V_I = ((2 * nbar + 1) / e2r + 1) / 2
    s = 1 / (4 * V_R) - 1 / (4 * V_I)
    B = _b_coefficient(V_R, V_I)
    c = alpha / (2 * V_R)
    pref = np.exp(-alpha**2 / V_R) / np.sqrt(V_R * V_I)
    G = np.moveaxis(scaled_hermite(mdim - 1, c, s), 0, -1)
    rho = np.zeros(alpha.shape + (mdim, mdim))
    Bl = np.ones_like(B)
    for l, C in enumerate(_sum_coefficients(mdim)):
        g = G[..., : mdim - l]
        rho[..., l:, l:] += (Bl * pref)[..., None, None] * C * g[..., :, None] * g[..., None, :]
        Bl = Bl * B
    return rho


# Independent closed-form route used for expectation values of full POVM elements.

def covariance(r: float, nbar: float, angle: float = 0.0) -> np.ndarray:
    """Quadrature covariance (vacuum = I/2) of a squeezed thermal state.

    ``angle`` rotates the stretched axis away from ``x``.
    """
    Vd = (nbar + 0.5) * np.diag([math.exp(2 * r), math.exp(-2 * r)])
    c, s = math.cos(angle), math.sin(angle)
    R = np.array([[c, -s], [s, c]])
    return R @ Vd @ R.T


def gaussian_overlap(cov1, mean1, cov2, mean2) -> float:
    """``Tr[rho1 rho2]`` for two single-mode Gaussian states."""
    S = np.asarray(cov1) + np.asarray(cov2)
    d = np.asarray(mean1, float) - np.asarray(mean2, float)
    return float(np.exp(-0.5 * d @ np.linalg.solve(S, d)) / np.sqrt(np.linalg.det(S)))


def combo_expectation(combo, cov, mean) -> float:
    """Expectation of a ``ThermalCombo`` operator in a Gaussian state.

    ``mean`` holds the quadrature means ``sqrt(2) * (Re alpha, Im alpha)``.
    """
    total = combo.identity_coeff
    for weight, nb in combo.terms:
        total += weight * gaussian_overlap((nb + 0.5) * np.eye(2), (0.0, 0.0), cov, mean)
    return float(total)
