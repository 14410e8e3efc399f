import warnings

import numpy as np
import pytest

from clickrank.detector import DetectorParams, prob_double_click, prob_single_click
from clickrank.regions import (
    DEFAULT_SLACK,
    LambdaSample,
    RegionBoundary,
    certify,
    default_lambda_grid,
    envelope_polyline,
    lambda_sweep,
    lower_envelope,
    region_boundaries,
)
from clickrank.reports import parse_lambda_grid
from clickrank.validation import polyline_is_concave
from clickrank.witness import optimize_threshold, single_click_witness

SMALL_GRID = parse_lambda_grid("lin:-1:0:8,0,geom:1e-3:100:24")


def test_default_grid_shape():
    g = default_lambda_grid()
    assert g.size == 251
    assert np.sum(g < 0) == 50 and g.min() == -1.0 and g[g < 0].max() < 0
    assert 0.0 in g and np.isclose(g.max(), 100.0) and np.isclose(g[g > 0].min(), 1e-3)


def test_lower_envelope_vs_brute_force():
    rng = np.random.default_rng(4)
    for _ in range(20):
        lines = [(float(k), float(b)) for k, b in zip(rng.normal(size=7), rng.normal(size=7))]
        verts = lower_envelope(lines)
        xs = np.linspace(0, 1, 501)
        brute = np.min([b + k * xs for k, b in lines], axis=0)
        vx, vy = zip(*verts)
        assert vx[0] == 0.0 and vx[-1] == 1.0
        assert np.max(np.abs(np.interp(xs, vx, vy) - brute)) < 1e-12
        for x, y in verts:
            assert y == pytest.approx(min(b + k * x for k, b in lines), abs=1e-12)


def test_lower_envelope_duplicate_slopes():
    verts = lower_envelope([(1.0, 0.5), (1.0, 0.2), (-1.0, 1.0)])
    assert verts[0] == (0.0, 0.2)


def test_envelope_polyline_is_clipped():
    samples = [LambdaSample(-2.0, 2.5), LambdaSample(5.0, -0.5)]
    poly = envelope_polyline(samples)
    assert all(0.0 <= y <= 1.0 for _, y in poly)


@pytest.fixture(scope="module")
def unit_eff_sweeps():
    p = DetectorParams(1.0, 0.5)
    return region_boundaries(p, [1, 2], SMALL_GRID)


def test_sweep_lambda_zero_equals_plain_threshold(unit_eff_sweeps):
    b1 = unit_eff_sweeps[0]
    s0 = next(s for s in b1.samples if s.lam == 0.0)
    plain = optimize_threshold(single_click_witness(DetectorParams(1.0, 0.5)), 1)
    assert s0.threshold == pytest.approx(plain.value, abs=1e-9)
    assert abs(s0.threshold - 0.2979) < 5e-4


def test_sweep_intercept_and_shape(unit_eff_sweeps):
    b1, b2 = unit_eff_sweeps
    # the horizontal (lam = 0) line supports the top of the rank-1 boundary
    top = max(y for _, y in b1.polyline)
    assert abs(top - 0.2979) < 5e-4
    # only the vacuum has R2 = 0 among Gaussian states
    assert b1.r1_limit(0.0) < 0.05
    for b in unit_eff_sweeps:
        assert polyline_is_concave(b.polyline)
        assert all(s.converged for s in b.samples)
    x = np.linspace(0, 1, 101)
    assert np.all(b2.r1_limit(x) >= b1.r1_limit(x) - 1e-12)


def test_sweep_rejects_nonfinite():
    with pytest.raises(ValueError):
        lambda_sweep(1, DetectorParams(1.0, 0.5), [0.0, np.inf])


def test_round_trip(unit_eff_sweeps):
    b = unit_eff_sweeps[1]
    assert RegionBoundary.from_dict(b.to_dict()) == b


def test_certify_examples(unit_eff_sweeps):
    p = DetectorParams(1.0, 0.5)
    assert certify(0.0, 0.0, p, unit_eff_sweeps).certified_rank == 0
    v = certify(0.5, 0.0, p, unit_eff_sweeps)
    assert v.certified_rank == 1 and v.margin > 0 and v.witnessing_lambda is not None
    assert not v.outside_physical


def test_certify_errors_and_warnings(unit_eff_sweeps):
    p = DetectorParams(1.0, 0.5)
    with pytest.raises(ValueError):
        certify(1.2, 0.0, p, unit_eff_sweeps)
    with pytest.raises(ValueError):
        certify(0.1, 0.1, p, [])
    with pytest.raises(ValueError):
        certify(0.1, 0.1, DetectorParams(0.9, 0.5), unit_eff_sweeps)
    with pytest.warns(RuntimeWarning):
        v = certify(0.9, 0.1, p, unit_eff_sweeps)
    assert v.outside_physical


def test_certify_slack(unit_eff_sweeps):
    p = DetectorParams(1.0, 0.5)
    v = certify(0.5, 0.0, p, unit_eff_sweeps)
    assert certify(0.5, 0.0, p, unit_eff_sweeps, slack=v.margin + 1e-9).certified_rank == 0
    assert DEFAULT_SLACK > 0


def test_two_photon_point_certifies_rank_two(default_boundaries):
    p = DetectorParams(0.5, 0.5)
    bounds = default_boundaries(0.5, 0.5, 3)
    r1, r2 = float(prob_single_click(2, p)), float(prob_double_click(2, p))
    v = certify(r1, r2, p, bounds)
    assert v.certified_rank == 2 and v.margin > 0


def test_unit_efficiency_fock_points_only_rank_one(default_boundaries):
    p = DetectorParams(1.0, 0.5)
    bounds = default_boundaries(1.0, 0.5, 2)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        for n in range(1, 8):
            v = certify(float(prob_single_click(n, p)), float(prob_double_click(n, p)), p, bounds)
            assert v.certified_rank <= 1
