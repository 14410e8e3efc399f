"""Command-line entry point.

Usage:
    clickrank probabilities --eta 0.2 --transmittance 0.5
    clickrank thresholds --eta 0.2 --ranks 1-6
    clickrank boundary --eta 0.5 --ranks 1-3 --format json --out fig4b.json
    clickrank certify --eta 0.5 --r1 0.3125 --r2 0.1875 --ranks 1-3
    clickrank validate --seed 7

Exit codes: 0 success, 1 usage error, 2 validation failure, 3 non-convergence.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import validation
from .detector import physical_boundary, prob_double_click, prob_no_click, prob_single_click, wmax_single_click
from .regions import DEFAULT_SLACK, certify
from .reports import (
    RunConfig,
    cached_boundaries,
    default_cache_dir,
    display_value,
    emit,
    parse_lambda_grid,
    parse_ranks,
    render_csv,
    render_json,
)
from .witness import single_click_thresholds


EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_NONCONVERGED = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _default_ranks(cfg: RunConfig, command: str) -> list[int]:
    if cfg.ranks:
        return list(cfg.ranks)
    if command == "thresholds":
        n_star, _ = wmax_single_click(cfg.params)
        return list(range(1, max(n_star, 1) + 1))
    return [1, 2, 3]


def _output(cfg: RunConfig, rows: list[dict], columns: list[str], results) -> None:
    if cfg.format == "json":
        emit(render_json(cfg, results), cfg.out)
    else:
        emit(render_csv(rows, columns), cfg.out)


def cmd_probabilities(cfg: RunConfig) -> int:
    p = cfg.params
    n = np.arange(cfg.n_max + 1)
    r0, r1a, r1b, r2 = (prob_no_click(n, p), prob_single_click(n, p, "D1"),
                        prob_single_click(n, p, "D2"), prob_double_click(n, p))
    rows = [{"n": int(k), "R0": float(r0[k]), "R1_D1": float(r1a[k]), "R1_D2": float(r1b[k]),
             "R2": float(r2[k])} for k in n]
    _output(cfg, rows, ["n", "R0", "R1_D1", "R1_D2", "R2"], rows)
    return EXIT_OK


def cmd_thresholds(cfg: RunConfig) -> int:
    p = cfg.params
    ranks = _default_ranks(cfg, "thresholds")
    results = single_click_thresholds(p, ranks, cfg.search)
    rows = []
    for res in results:
        status = "ok" if res.converged else "nonconverged"
        if res.at_search_edge:
            status += ";search_edge"
        rows.append({"row": f"W_{res.m}", "m": res.m, "display": display_value(res.value),
                     "value": res.value, "alpha": float(complex(res.argmax.alpha).real),
                     "r": res.argmax.r, "status": status,
                     "grid_value": res.grid_value, "refinement_gain": res.refinement_gain})
    n_star, wmax = wmax_single_click(p)
    rows.append({"row": "W_max", "m": n_star, "display": f"{wmax:.4f}",
                 "value": wmax, "status": "exact"})
    cols = ["row", "m", "display", "value", "alpha", "r", "status", "grid_value", "refinement_gain"]
    json_results = {"thresholds": [r.to_dict() for r in results],
                    "w_max": {"n_star": n_star, "value": wmax}}
    _output(cfg, rows, cols, json_results)
    lines = [f"  W_{r.m}: grid {r.grid_value!r} -> refined {r.value!r} "
             f"(gain {r.refinement_gain:.2e}, {r.evaluations} evaluations)" for r in results]
    print("search confidence (lower bounds of a non-convex maximisation):", *lines,
          sep="\n", file=sys.stderr)
    return EXIT_OK if all(r.converged for r in results) else EXIT_NONCONVERGED


def _boundaries(cfg: RunConfig, ranks: list[int], cache_dir: Path | None):
    lambdas = parse_lambda_grid(cfg.lambda_grid)
    return cached_boundaries(cfg.params, ranks, lambdas, cfg.search, cache_dir)


def cmd_boundary(cfg: RunConfig, cache_dir: Path | None) -> int:
    p = cfg.params
    ranks = _default_ranks(cfg, "boundary")
    bounds = [b for b in _boundaries(cfg, ranks, cache_dir) if b.m in ranks]
    phys = physical_boundary(p)
    rows = []
    for i, (x, y) in enumerate(phys.points):
        rows.append({"kind": "fock_point", "m": "", "index": i, "R2": x, "R1": y})
    for i, (x, y) in enumerate(phys.vertices):
        rows.append({"kind": "physical_vertex", "m": "", "index": i, "R2": x, "R1": y})
    for b in bounds:
        for i, s in enumerate(b.samples):
            rows.append({"kind": "witness_line", "m": b.m, "index": i, "lambda": s.lam,
                         "threshold": s.threshold, "converged": s.converged})
        for i, (x, y) in enumerate(b.polyline):
            rows.append({"kind": "region_vertex", "m": b.m, "index": i, "R2": x, "R1": y})
    results = {
        "physical": {"points": [list(v) for v in phys.points],
                     "vertices": [list(v) for v in phys.vertices]},
        "regions": [b.to_dict() for b in bounds],
    }
    _output(cfg, rows, ["kind", "m", "index", "R2", "R1", "lambda", "threshold", "converged"], results)
    converged = all(s.converged for b in bounds for s in b.samples)
    return EXIT_OK if converged else EXIT_NONCONVERGED


def cmd_certify(cfg: RunConfig, r1: float, r2: float, cache_dir: Path | None) -> int:
    p = cfg.params
    if not (0.0 <= r1 <= 1.0 and 0.0 <= r2 <= 1.0):
        raise UsageError(f"--r1 and --r2 must lie in [0, 1], got {r1}, {r2}")
    ranks = _default_ranks(cfg, "certify")
    bounds = _boundaries(cfg, ranks, cache_dir)
    slack = DEFAULT_SLACK if cfg.slack is None else cfg.slack
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", RuntimeWarning)
        verdict = certify(r1, r2, p, bounds, slack=slack)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    row = verdict.to_dict()
    row["max_rank_tested"] = max(b.m for b in bounds)
    if verdict.witnessing_lambda is not None:
        lam = verdict.witnessing_lambda
        thr = next(s.threshold for s in bounds[verdict.certified_rank - 1].samples if s.lam == lam)
        row["witness_line"] = f"R1 - ({lam!r})*R2 > {thr!r}"
    else:
        row["witness_line"] = ""
    cols = ["certified_rank", "witnessing_lambda", "margin", "witness_line", "r1", "r2",
            "eta", "transmittance", "outside_physical", "max_rank_tested"]
    _output(cfg, [row], cols, row)
    if cfg.out is not None:
        print(f"certified stellar rank >= {verdict.certified_rank} (margin {verdict.margin:.3e})")
    return EXIT_OK


def cmd_validate(cfg: RunConfig, cache_dir: Path | None) -> int:
    rng = np.random.default_rng(cfg.seed)
    p = cfg.params
    ranks = _default_ranks(cfg, "validate")
    bounds = _boundaries(cfg, ranks, cache_dir)
    suites = [
        validation.povm_completeness(rng),
        validation.analytic_vs_oracle(rng),
        validation.curvature_signs(),
        validation.envelope_convexity(bounds),
        validation.gaussian_soundness(rng, p, bounds),
    ]
    rows = [s.to_row() for s in suites]
    _output(cfg, rows, ["suite", "passed", "checks", "max_deviation", "failures"], rows)
    for s in suites:
        print(f"{'PASS' if s.passed else 'FAIL'} {s.name} ({s.checks} checks)", file=sys.stderr)
    return EXIT_OK if all(s.passed for s in suites) else EXIT_VALIDATION


def _config_from_args(args) -> RunConfig:
    base: dict = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            base = json.load(fh)
    cfg = RunConfig.from_dict(base)
    overrides = {}
    for name in ("eta", "transmittance", "format", "out", "seed", "n_max", "slack"):
        v = getattr(args, name, None)
        if v is not None:
            overrides[name] = v
    if args.ranks is not None:
        overrides["ranks"] = parse_ranks(args.ranks)
    if args.lambda_grid is not None:
        overrides["lambda_grid"] = args.lambda_grid
    search = {k: getattr(args, k) for k in ("alpha_max", "r_max", "multistarts")
              if getattr(args, k) is not None}
    if args.grid_size is not None:
        search["n_alpha"] = search["n_r"] = args.grid_size
    if search:
        overrides["search"] = replace(cfg.search, **search)
    return RunConfig.from_dict({**{f: getattr(cfg, f) for f in cfg.__dataclass_fields__}, **overrides})


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--eta", type=float, help="total detection efficiency (0, 1]")
    common.add_argument("--transmittance", type=float, help="beam-splitter transmittance (0, 1)")
    common.add_argument("--ranks", help="ranks as '1,2,3' or '1-4'")
    common.add_argument("--lambda-grid", help="slopes, e.g. 'default' or 'lin:-1:0:50,0,geom:1e-3:100:200'")
    common.add_argument("--format", choices=["csv", "json"])
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--seed", type=int, help="seed for randomised validation suites")
    common.add_argument("--config", help="JSON file mirroring the run configuration")
    common.add_argument("--alpha-max", type=float, help="displacement search bound (default 3+sqrt(m))")
    common.add_argument("--r-max", type=float, help="squeezing search bound (default 2)")
    common.add_argument("--grid-size", type=int, help="coarse grid points per axis (default 81)")
    common.add_argument("--multistarts", type=int, help="simplex refinements (default 16)")
    common.add_argument("--cache-dir", help="boundary cache directory")
    common.add_argument("--no-cache", action="store_true", help="do not read or write the boundary cache")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="clickrank", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    probs = sub.add_parser("probabilities", parents=[common], help="click probabilities per Fock state")
    probs.add_argument("--n-max", type=int, help="largest photon number (default 20)")
    sub.add_parser("thresholds", parents=[common], help="rank thresholds of the single-click witness")
    sub.add_parser("boundary", parents=[common], help="certifiable-region and physical boundaries")
    cert = sub.add_parser("certify", parents=[common], help="certify measured (R2, R1)")
    cert.add_argument("--r1", type=float, required=True)
    cert.add_argument("--r2", type=float, required=True)
    cert.add_argument("--slack", type=float, help=f"margin required above threshold (default {DEFAULT_SLACK})")
    sub.add_parser("validate", parents=[common], help="run the self-check suites")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config_from_args(args)
        cache_dir = None if args.no_cache else (Path(args.cache_dir) if args.cache_dir else default_cache_dir())
        if args.command == "probabilities":
            return cmd_probabilities(cfg)
        if args.command == "thresholds":
            return cmd_thresholds(cfg)
        if args.command == "boundary":
            return cmd_boundary(cfg, cache_dir)
        if args.command == "certify":
            return cmd_certify(cfg, args.r1, args.r2, cache_dir)
        if args.command == "validate":
            return cmd_validate(cfg, cache_dir)
    except (UsageError, ValueError, OSError) as exc:
        print(f"clickrank: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
