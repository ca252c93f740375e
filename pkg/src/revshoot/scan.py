"""Parameter-plane sweeps for symmetric homoclinic loci.

A scan shoots the unstable manifold at every cell of an (a, b) grid, for
both seed signs, and records the crossing profile of each shot.  Along a
constant-b row, a sign change of the k-th crossing miss between adjacent
cells brackets a locus point, which bisection then refines and an
independent shot certifies.

Rows are independent, so they parallelize across processes.  Every row
writes its own part file and the final tables are merged from disk in a
fixed order, which makes the output bytes independent of the worker count
and lets an interrupted scan resume where it stopped.
"""

from __future__ import annotations

import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace

from .homoclinic import (
    MISS_CERTIFY,
    BracketInvalid,
    CrossingIndexJumped,
    LocusPoint,
    MissProfile,
    Outcome,
    ShotConfig,
    Sigma,
    refine_root,
    shoot,
)
from .system import NonlinearitySpec, Params
from .writers import write_lines, fmt17

log = logging.getLogger(__name__)

MAX_CELLS = 10_000_000
SPLIT_DEPTH = 5

MANIFEST_NAME = "manifest.json"
LOCUS_NAME = "locus.csv"
PROFILES_NAME = "profiles.csv"
LOCUS_HEADER = "a_star,b,sigma,k,miss_residual,lambda"
PROFILE_HEADER = "a,b,sigma,k,v_at_crossing,t_crossing,outcome"


class GridTooLarge(ValueError):
    """The grid would take more than MAX_CELLS shots per seed sign."""


class ManifestMismatch(ValueError):
    """Resume directory was produced by a different run configuration."""


def _axis_len(lo: float, hi: float, step: float) -> int:
    return int(math.floor((hi - lo) / step + 1e-9)) + 1


def _axis(lo: float, hi: float, step: float) -> list[float]:
    # nodes are lo + i*step, never cumulative sums, so cell values do not
    # depend on how many cells precede them
    return [lo + i * step for i in range(_axis_len(lo, hi, step))]


@dataclass(frozen=True)
class GridSpec:
    """Rectangular (a, b) grid with a common step in both directions."""

    a_min: float
    a_max: float
    b_min: float
    b_max: float
    step: float = 1e-2

    def __post_init__(self) -> None:
        vals = (self.a_min, self.a_max, self.b_min, self.b_max, self.step)
        for name, v in zip(("a_min", "a_max", "b_min", "b_max", "step"), vals):
            object.__setattr__(self, name, float(v))
        if not all(math.isfinite(float(v)) for v in vals):
            raise ValueError("grid bounds and step must be finite")
        if not self.a_min < self.a_max:
            raise ValueError(f"need a_min < a_max, got [{self.a_min!r}, {self.a_max!r}]")
        if not self.b_min <= self.b_max:
            raise ValueError(f"need b_min <= b_max, got [{self.b_min!r}, {self.b_max!r}]")
        if not self.step > 0.0:
            raise ValueError(f"step must be positive, got {self.step!r}")

    def a_values(self) -> list[float]:
        return _axis(self.a_min, self.a_max, self.step)

    def b_values(self) -> list[float]:
        return _axis(self.b_min, self.b_max, self.step)

    def n_cells(self) -> int:
        # arithmetic only: the size guard must not allocate the axes
        a_n = _axis_len(self.a_min, self.a_max, self.step)
        b_n = _axis_len(self.b_min, self.b_max, self.step)
        return a_n * b_n


def _check_size(grid: GridSpec) -> None:
    n = grid.n_cells()
    if n > MAX_CELLS:
        raise GridTooLarge(f"grid has {n} cells, limit is {MAX_CELLS}")


def _row_profiles(
    nonlinearity: NonlinearitySpec, b: float, a_values: list[float], cfg: ShotConfig
) -> list[MissProfile]:
    out = []
    for sig in (Sigma.PLUS, Sigma.MINUS):
        cfg_s = replace(cfg, sigma=sig)
        for a in a_values:
            out.append(shoot(Params(a, b, nonlinearity), cfg_s))
    return out


def scan_grid(
    nonlinearity: NonlinearitySpec, grid: GridSpec, cfg: ShotConfig
) -> list[MissProfile]:
    """One profile per grid cell and seed sign, row by row in memory."""
    _check_size(grid)
    a_vals = grid.a_values()
    out = []
    for b in grid.b_values():
        out.extend(_row_profiles(nonlinearity, b, a_vals, cfg))
    return out


def _refine_split(
    nonlinearity: NonlinearitySpec,
    b: float,
    a_lo: float,
    a_hi: float,
    cfg: ShotConfig,
    k: int,
    depth: int,
) -> list[LocusPoint]:
    """Refine one bracket, splitting when the crossing index is unstable."""
    try:
        return [refine_root(nonlinearity, b, a_lo, a_hi, cfg, k)]
    except BracketInvalid:
        return []
    except CrossingIndexJumped:
        if depth <= 0:
            log.info(
                "dropping bracket [%g, %g] at b=%g, k=%d: crossing count unstable",
                a_lo, a_hi, b, k,
            )
            return []
        mid = 0.5 * (a_lo + a_hi)
        if not a_lo < mid < a_hi:
            return []
        return _refine_split(nonlinearity, b, a_lo, mid, cfg, k, depth - 1) + _refine_split(
            nonlinearity, b, mid, a_hi, cfg, k, depth - 1
        )


def _bracketing(m_lo: float | None, m_hi: float | None) -> bool:
    if m_lo is None or m_hi is None:
        return False
    if m_lo == 0.0 and m_hi == 0.0:
        return False
    return (m_lo <= 0.0 <= m_hi) or (m_hi <= 0.0 <= m_lo)


def extract_loci(
    profiles: list[MissProfile], cfg: ShotConfig, dedupe_tol: float = 1e-3
) -> list[LocusPoint]:
    """Certified locus points from the sign structure of scanned profiles.

    Adjacent same-row cells whose k-th miss brackets zero are refined by
    bisection; candidates are kept only if the residual at the refined
    point re-certifies (|miss| <= MISS_CERTIFY), and points of the same
    (b, sigma, k) closer than dedupe_tol collapse to the first.
    """
    groups: dict[tuple[float, Sigma], list[MissProfile]] = {}
    for prof in profiles:
        groups.setdefault((prof.params.b, prof.sigma), []).append(prof)

    out: list[LocusPoint] = []
    for (b, sig), cells in sorted(groups.items(), key=lambda kv: (kv[0][0], int(kv[0][1]))):
        cells = sorted(cells, key=lambda pr: pr.params.a)
        cfg_s = replace(cfg, sigma=sig)
        nonlinearity = cells[0].params.nonlinearity
        for k in range(1, cfg.k_max + 1):
            found: list[LocusPoint] = []
            for lo_cell, hi_cell in zip(cells, cells[1:]):
                if Outcome.INTEGRATOR_FAILED in (lo_cell.outcome, hi_cell.outcome):
                    continue
                if not _bracketing(lo_cell.miss_at(k), hi_cell.miss_at(k)):
                    continue
                found.extend(
                    _refine_split(
                        nonlinearity, b, lo_cell.params.a, hi_cell.params.a,
                        cfg_s, k, SPLIT_DEPTH,
                    )
                )
            found = [lp for lp in found if lp.miss_residual <= MISS_CERTIFY]
            found.sort(key=lambda lp: lp.a_star)
            for lp in found:
                if out and out[-1].b == b and out[-1].sigma == sig and out[-1].k == k \
                        and lp.a_star - out[-1].a_star < dedupe_tol:
                    continue
                out.append(lp)
    out.sort(key=lambda lp: (lp.b, int(lp.sigma), lp.k, lp.a_star))
    return out


def search_bracket(
    nonlinearity: NonlinearitySpec,
    b: float,
    a_lo: float,
    a_hi: float,
    cfg: ShotConfig,
    k: int | None = None,
    sigma: Sigma | None = None,
) -> LocusPoint | None:
    """First certified locus point inside one a-bracket at fixed b.

    Endpoints are shot once per seed sign; crossing indices are tried in
    ascending order (restricted when k or sigma is given) and the first
    refined point that re-certifies wins.
    """
    sigmas = (Sigma.PLUS, Sigma.MINUS) if sigma is None else (Sigma(sigma),)
    ks = range(1, cfg.k_max + 1) if k is None else (int(k),)
    for sig in sigmas:
        cfg_s = replace(cfg, sigma=sig)
        prof_lo = shoot(Params(a_lo, b, nonlinearity), cfg_s)
        prof_hi = shoot(Params(a_hi, b, nonlinearity), cfg_s)
        if Outcome.INTEGRATOR_FAILED in (prof_lo.outcome, prof_hi.outcome):
            continue
        for kk in ks:
            if not _bracketing(prof_lo.miss_at(kk), prof_hi.miss_at(kk)):
                continue
            for lp in _refine_split(nonlinearity, b, a_lo, a_hi, cfg_s, kk, SPLIT_DEPTH):
                if lp.miss_residual <= MISS_CERTIFY:
                    return lp
    return None


# ---------------------------------------------------------------------------
# file-backed scans


def _locus_line(lp: LocusPoint) -> str:
    return ",".join(
        (
            fmt17(lp.a_star),
            fmt17(lp.b),
            str(int(lp.sigma)),
            str(lp.k),
            fmt17(lp.miss_residual),
            fmt17(lp.lam),
        )
    )


def _profile_lines(prof: MissProfile) -> list[str]:
    head = f"{fmt17(prof.params.a)},{fmt17(prof.params.b)},{int(prof.sigma)}"
    name = prof.outcome.name.lower()
    if not prof.crossings:
        return [f"{head},0,,,{name}"]
    return [
        f"{head},{i},{fmt17(rec.s.v)},{fmt17(rec.t)},{name}"
        for i, rec in enumerate(prof.crossings, start=1)
    ]


def _locus_sort_key(line: str):
    a_star, b, sig, k, _res, _lam = line.split(",")
    return (float(b), int(sig), int(k), float(a_star))


def _row_paths(rows_dir: str, i: int) -> tuple[str, str]:
    return (
        os.path.join(rows_dir, f"row_{i:05d}.csv"),
        os.path.join(rows_dir, f"profiles_{i:05d}.csv"),
    )


def _write_atomic(path: str, lines: list[str]) -> None:
    tmp = path + ".tmp"
    write_lines(tmp, lines)
    os.replace(tmp, path)


def _read_rows(path: str) -> list[str]:
    with open(path) as fp:
        return [ln for ln in fp.read().splitlines() if ln]


def _scan_row_task(task):
    nonlinearity, b, a_values, cfg, dedupe_tol = task
    profs = _row_profiles(nonlinearity, b, a_values, cfg)
    loci = extract_loci(profs, cfg, dedupe_tol)
    return profs, loci


def _manifest_payload(
    nonlinearity: NonlinearitySpec, grid: GridSpec, cfg: ShotConfig
) -> dict:
    from . import __version__

    shot = asdict(cfg)
    shot["sigma"] = int(cfg.sigma)
    payload = {
        "format": 1,
        "version": __version__,
        "nonlinearity": nonlinearity.to_json_dict(),
        "grid": asdict(grid),
        "shot": shot,
    }
    # canonicalize through JSON so comparisons with a reloaded manifest
    # never trip over tuple-vs-list or enum-vs-int
    return json.loads(json.dumps(payload, sort_keys=True))


def _write_json(path: str, obj: dict) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", newline="\n") as fp:
        json.dump(obj, fp, indent=2, sort_keys=True)
        fp.write("\n")
    os.replace(tmp, path)


def run_scan(
    nonlinearity: NonlinearitySpec,
    grid: GridSpec,
    cfg: ShotConfig,
    out_dir,
    *,
    jobs: int | None = None,
    resume: bool = False,
    write_profiles: bool = False,
) -> dict:
    """Scan a grid into out_dir and merge the results deterministically.

    Writes rows/row_*.csv part files (and profile parts when requested),
    then locus.csv sorted by (b, sigma, k, a_star) and a manifest.  The
    merge always reads the part files back from disk, so a fresh run and
    a resumed one produce identical bytes.  Returns the final manifest.
    """
    _check_size(grid)
    t_start = time.monotonic()
    out_dir = os.fspath(out_dir)
    rows_dir = os.path.join(out_dir, "rows")
    os.makedirs(rows_dir, exist_ok=True)

    payload = _manifest_payload(nonlinearity, grid, cfg)
    man_path = os.path.join(out_dir, MANIFEST_NAME)
    if resume:
        if not os.path.exists(man_path):
            raise ManifestMismatch(f"no manifest to resume from in {out_dir!r}")
        with open(man_path) as fp:
            old = json.load(fp)
        for key in ("format", "version", "nonlinearity", "grid", "shot"):
            if old.get(key) != payload[key]:
                raise ManifestMismatch(
                    f"manifest field {key!r} does not match this run; refusing to resume"
                )
    _write_json(man_path, payload)

    b_vals = grid.b_values()
    a_vals = grid.a_values()
    dedupe_tol = grid.step / 10.0
    pending = []
    for i, b in enumerate(b_vals):
        locus_path, prof_path = _row_paths(rows_dir, i)
        done = os.path.exists(locus_path) and (
            not write_profiles or os.path.exists(prof_path)
        )
        if not (resume and done):
            pending.append((i, b))

    if pending:
        tasks = [(nonlinearity, b, a_vals, cfg, dedupe_tol) for _, b in pending]
        n_jobs = jobs if jobs is not None else (os.cpu_count() or 1)
        if n_jobs <= 1 or len(pending) == 1:
            results = map(_scan_row_task, tasks)
            for (i, b), (profs, loci) in zip(pending, results):
                _store_row(rows_dir, i, b, profs, loci, write_profiles)
        else:
            with ProcessPoolExecutor(max_workers=min(n_jobs, len(pending))) as pool:
                for (i, b), (profs, loci) in zip(
                    pending, pool.map(_scan_row_task, tasks)
                ):
                    _store_row(rows_dir, i, b, profs, loci, write_profiles)

    loci_lines: list[str] = []
    prof_lines: list[str] = []
    for i in range(len(b_vals)):
        locus_path, prof_path = _row_paths(rows_dir, i)
        loci_lines.extend(_read_rows(locus_path))
        if write_profiles:
            prof_lines.extend(_read_rows(prof_path))
    loci_lines.sort(key=_locus_sort_key)
    write_lines(os.path.join(out_dir, LOCUS_NAME), [LOCUS_HEADER] + loci_lines)
    if write_profiles:
        write_lines(os.path.join(out_dir, PROFILES_NAME), [PROFILE_HEADER] + prof_lines)

    manifest = dict(payload)
    manifest["rows_total"] = len(b_vals)
    manifest["rows_computed"] = len(pending)
    manifest["loci_count"] = len(loci_lines)
    manifest["wall_time_s"] = round(time.monotonic() - t_start, 3)
    _write_json(man_path, manifest)
    return manifest


def _store_row(rows_dir, i, b, profs, loci, write_profiles):
    locus_path, prof_path = _row_paths(rows_dir, i)
    _write_atomic(locus_path, [_locus_line(lp) for lp in loci])
    if write_profiles:
        lines = []
        for prof in profs:
            lines.extend(_profile_lines(prof))
        _write_atomic(prof_path, lines)
    log.info("row %d of %s done (b=%s): %d loci", i, rows_dir, fmt17(b), len(loci))
