"""Run configuration, CSV/JSON emitters and the on-disk boundary cache."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import tempfile
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .detector import DetectorParams
from .regions import RegionBoundary, default_lambda_grid, lambda_sweep
from .witness import SearchConfig

SCHEMA_VERSION = 1
FORMATS = ("csv", "json")


@dataclass
class RunConfig:
    eta: float = 1.0
    transmittance: float = 0.5
    ranks: list[int] | None = None
    lambda_grid: str = "default"
    search: SearchConfig = field(default_factory=SearchConfig)
    format: str = "csv"
    out: str | None = None
    seed: int = 0
    n_max: int = 20
    slack: float | None = None

    def __post_init__(self):
        self.params  # validates eta / transmittance
        if self.format not in FORMATS:
            raise ValueError(f"format must be one of {FORMATS}, got {self.format!r}")
        if self.ranks is not None and (not self.ranks or min(self.ranks) < 1):
            raise ValueError(f"ranks must be positive integers, got {self.ranks}")
        parse_lambda_grid(self.lambda_grid)

    @property
    def params(self) -> DetectorParams:
        return DetectorParams(self.eta, self.transmittance)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("out")
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        d = dict(d)
        if isinstance(d.get("search"), dict):
            d["search"] = SearchConfig(**d["search"])
        return cls(**d)


def parse_ranks(text: str) -> list[int]:
    """``"1,2,5"`` or ``"1-4"`` (or a mix) to a sorted rank list."""
    ranks: set[int] = set()
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        if "-" in tok:
            lo, hi = (int(v) for v in tok.split("-", 1))
            ranks.update(range(lo, hi + 1))
        else:
            ranks.add(int(tok))
    if not ranks or min(ranks) < 1:
        raise ValueError(f"invalid rank list {text!r}")
    return sorted(ranks)


def parse_lambda_grid(spec: str) -> np.ndarray:
    """Slope grid from a comma-separated spec.

    Tokens: a number, ``default``, ``geom:lo:hi:count`` (log-spaced, inclusive)
    or ``lin:lo:hi:count`` (evenly spaced, ``hi`` excluded).
    """
    parts: list[np.ndarray] = []
    for tok in spec.split(","):
        tok = tok.strip()
        if not tok:
            continue
        if tok == "default":
            parts.append(default_lambda_grid())
        elif tok.startswith(("geom:", "lin:")):
            kind, lo, hi, count = tok.split(":")
            lo, hi, count = float(lo), float(hi), int(count)
            if kind == "geom":
                parts.append(np.geomspace(lo, hi, count))
            else:
                parts.append(np.linspace(lo, hi, count, endpoint=False))
        else:
            parts.append(np.array([float(tok)]))
    if not parts:
        raise ValueError(f"empty lambda grid spec {spec!r}")
    grid = np.unique(np.concatenate(parts))
    if not np.all(np.isfinite(grid)):
        raise ValueError("lambda grid must be finite")
    return grid


def display_value(x: float) -> str:
    """Four decimals, rounded up, as in the published tables."""
    return f"{math.ceil(x * 1e4 - 1e-9) / 1e4:.4f}"


def _cell(v: Any) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if v is None:
        return ""
    return str(v)


def _jsonable(v: Any) -> Any:
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.generic):
        return v.item()
    return v


def render_csv(rows: Sequence[dict], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    buf.write(f"# schema_version: {SCHEMA_VERSION}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(row.get(c)) for c in columns])
    return buf.getvalue()


def render_json(config: RunConfig, results: Any) -> str:
    doc = {"schema_version": SCHEMA_VERSION, "config": _jsonable(config.to_dict()),
           "results": _jsonable(results)}
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def atomic_write(path: str | os.PathLike, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit(text: str, out: str | None) -> None:
    if out is None:
        print(text, end="")
    else:
        atomic_write(out, text)


# --- boundary cache --------------------------------------------------------

def default_cache_dir() -> Path:
    base = os.environ.get("CLICKRANK_CACHE") or os.path.join(
        os.environ.get("XDG_CACHE_HOME", os.path.expanduser("~/.cache")), "clickrank"
    )
    return Path(base)


def grid_hash(lambdas: np.ndarray, cfg: SearchConfig) -> str:
    h = hashlib.sha256()
    h.update(np.asarray(lambdas, "<f8").tobytes())
    h.update(json.dumps(asdict(cfg), sort_keys=True).encode())
    return h.hexdigest()[:16]


def _cache_path(cache_dir: Path, p: DetectorParams, m: int, key: str) -> Path:
    return cache_dir / f"boundary_eta{p.eta!r}_T{p.transmittance!r}_m{m}_{key}.json"


def cached_boundaries(
    p: DetectorParams,
    ranks: Iterable[int],
    lambdas: np.ndarray,
    cfg: SearchConfig,
    cache_dir: Path | None,
) -> list[RegionBoundary]:
    """Boundaries for ranks ``1..max(ranks)``, reusing cached sweeps when present.

    Cache files hold the same JSON document that ``clickrank boundary`` emits
    for a single rank.
    """
    key = grid_hash(lambdas, cfg)
    out: list[RegionBoundary] = []
    prev = None
    for m in range(1, max(ranks) + 1):
        b = None
        path = _cache_path(cache_dir, p, m, key) if cache_dir is not None else None
        if path is not None and path.exists():
            with open(path, encoding="utf-8") as fh:
                b = RegionBoundary.from_dict(json.load(fh)["results"]["regions"][0])
        if b is None:
            b = lambda_sweep(m, p, lambdas, cfg, previous=prev)
            if path is not None:
                doc = {"schema_version": SCHEMA_VERSION,
                       "config": {"eta": p.eta, "transmittance": p.transmittance, "m": m,
                                  "grid_hash": key, "search": asdict(cfg)},
                       "results": {"regions": [b.to_dict()]}}
                atomic_write(path, json.dumps(doc, indent=2) + "\n")
        out.append(b)
        prev = b
    return out
