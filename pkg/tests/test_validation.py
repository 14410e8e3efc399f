import numpy as np

from clickrank.detector import DetectorParams, physical_boundary
from clickrank.regions import LambdaSample, RegionBoundary, envelope_polyline
from clickrank.validation import (
    analytic_vs_oracle,
    curvature_signs,
    envelope_convexity,
    gaussian_soundness,
    polyline_is_concave,
    povm_completeness,
    random_gaussian_click_pair,
)


def test_povm_suite():
    res = povm_completeness(np.random.default_rng(0))
    assert res.passed and res.checks == 50 and res.max_deviation < 1e-13


def test_oracle_suite_small():
    res = analytic_vs_oracle(np.random.default_rng(1), n_cases=5)
    assert res.passed and res.max_deviation < 1e-8


def test_curvature_suite():
    res = curvature_signs()
    assert res.passed, res.failures[:3]
    assert res.checks == 9 * 191


def test_polyline_concavity_detector():
    assert polyline_is_concave([(0, 0), (0.5, 0.4), (1, 0)])
    assert not polyline_is_concave([(0, 0.3), (0.5, 0.1), (1, 0.3)])


def _boundary(m, lines):
    samples = tuple(LambdaSample(k, b) for k, b in lines)
    return RegionBoundary(m, DetectorParams(0.5, 0.5), samples, envelope_polyline(samples))


def test_envelope_suite_flags_broken_nesting():
    lo = _boundary(1, [(0.0, 0.3), (1.0, 0.1)])
    hi = _boundary(2, [(0.0, 0.2), (1.0, 0.1)])
    assert envelope_convexity([lo, hi]).passed is False
    assert envelope_convexity([hi, lo]).passed


def test_random_pairs_are_physical():
    rng = np.random.default_rng(7)
    p = DetectorParams(0.5, 0.5)
    phys = physical_boundary(p)
    for _ in range(50):
        r1, r2 = random_gaussian_click_pair(rng, p)
        assert phys.contains(r2, r1, tol=1e-9)


def test_soundness_flags_a_too_small_boundary():
    # a rank-1 "boundary" far below the Gaussian set must produce failures
    p = DetectorParams(0.5, 0.5)
    fake = RegionBoundary(1, p, (LambdaSample(0.0, 0.01),), ((0.0, 0.01), (1.0, 0.01)))
    res = gaussian_soundness(np.random.default_rng(3), p, [fake], n_states=20)
    assert not res.passed


def test_seeded_suite_is_reproducible():
    a = analytic_vs_oracle(np.random.default_rng(5), n_cases=3)
    b = analytic_vs_oracle(np.random.default_rng(5), n_cases=3)
    assert a == b
