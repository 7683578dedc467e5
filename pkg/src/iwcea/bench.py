"""Benchmark harness: gaps, multi-run statistics, exhaustive oracle, CSV output."""

from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .ea import EaConfig, RunResult, solve
from .instance import MkpInstance
from .lp import solve_relaxation

BRUTE_FORCE_MAX_N = 25

RUN_COLUMNS = ["instance", "algo", "seed", "best", "lp_bound", "gap", "evals",
               "accepted", "rejected", "wall_ms"]
AGG_COLUMNS = ["instance", "algo", "runs", "mean_gap", "std_gap", "best", "known_best", "cmp"]

BETTER = "better"
EQUAL = "equal"
WORSE = "worse"
UNKNOWN = "unknown"


def gap(best: float, lp_bound: float) -> float:
    """Relative distance below the LP bound: ``(lp_bound - best) / lp_bound``."""
    if not lp_bound > 0:
        raise ValueError(f"LP bound must be positive, got {lp_bound}")
    return (lp_bound - best) / lp_bound


def brute_force_opt(inst: MkpInstance) -> tuple:
    """Exhaustive optimum ``(fitness, x)``; ties go to the lexicographically smallest x."""
    n = inst.n
    if n > BRUTE_FORCE_MAX_N:
        raise ValueError(f"brute force limited to n <= {BRUTE_FORCE_MAX_N}, got {n}")
    # x_1 is the most significant bit, so enumeration order is lexicographic
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    chunk = 1 << min(n, 16)
    best_f, best_code = -1.0, 0
    for start in range(0, 1 << n, chunk):
        codes = np.arange(start, min(start + chunk, 1 << n), dtype=np.int64)
        X = ((codes[:, None] >> shifts) & 1).astype(np.float64)
        feasible = np.all(X @ inst.r.T <= inst.b, axis=1)
        f = np.where(feasible, X @ inst.p, -1.0)
        k = int(np.argmax(f))
        if f[k] > best_f:
            best_f, best_code = f[k], int(codes[k])
    x = ((best_code >> shifts) & 1).astype(np.uint8)
    return inst.fitness(x), x


def compare(best: float, known_best: Optional[float], tol: float = 1e-6) -> str:
    if known_best is None or known_best == 0:
        return UNKNOWN
    a, b = best, known_best
    if abs(a - round(a)) <= tol and abs(b - round(b)) <= tol:
        a, b = round(a), round(b)
        return EQUAL if a == b else (BETTER if a > b else WORSE)
    if abs(a - b) <= tol:
        return EQUAL
    return BETTER if a > b else WORSE


@dataclass(frozen=True)
class AggregateStats:
    instance: str
    algorithm: str
    runs: int
    mean_gap: float
    std_gap: float
    best: float
    known_best: Optional[float]
    cmp: str


def aggregate(results: Sequence[RunResult], known_best: Optional[float] = None) -> AggregateStats:
    """Mean and population standard deviation of the gaps over the runs."""
    if not results:
        raise ValueError("no results to aggregate")
    keys = {(r.instance, r.algorithm) for r in results}
    if len(keys) != 1:
        raise ValueError(f"results mix instances/algorithms: {sorted(keys)}")
    # sorted so the float sums do not depend on input order
    gaps = np.array(sorted(r.gap for r in results))
    best = max(r.best_fitness for r in results)
    inst, algo = keys.pop()
    return AggregateStats(inst, algo, len(results), float(gaps.mean()),
                          float(gaps.std(ddof=0)), best, known_best, compare(best, known_best))


def _num(v: Optional[float]) -> str:
    if v is None:
        return ""
    if float(v).is_integer():
        return str(int(v))
    return repr(float(v))


def run_rows(results: Iterable[RunResult]) -> list:
    rows = []
    for r in sorted(results, key=lambda r: (r.instance, r.algorithm, r.seed)):
        rows.append([r.instance, r.algorithm, str(r.seed), _num(r.best_fitness),
                     f"{r.lp_bound:.6f}", f"{r.gap:.6f}", str(r.evaluations), str(r.accepted),
                     str(r.rejected), str(int(round(r.wall_time * 1000)))])
    return rows


def aggregate_rows(stats: Iterable[AggregateStats]) -> list:
    rows = []
    for s in sorted(stats, key=lambda s: (s.instance, s.algorithm)):
        rows.append([s.instance, s.algorithm, str(s.runs), f"{s.mean_gap:.6f}",
                     f"{s.std_gap:.6f}", _num(s.best), _num(s.known_best), s.cmp])
    return rows


def emit_csv(items: Sequence, destination=None) -> bytes:
    """Render run results or aggregate stats as CSV.

    ``destination`` may be a path, a text stream, or ``None``; the encoded
    bytes are returned in every case.
    """
    items = list(items)
    if not items:
        raise ValueError("nothing to emit")
    if isinstance(items[0], AggregateStats):
        header, rows = AGG_COLUMNS, aggregate_rows(items)
    else:
        header, rows = RUN_COLUMNS, run_rows(items)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    text = buf.getvalue()
    if isinstance(destination, (str, Path)):
        Path(destination).write_text(text)
    elif destination is not None:
        destination.write(text)
    return text.encode()


def _one_run(args):
    inst, cfg, relax = args
    return solve(inst, cfg, lp_solution=relax)


def run_many(inst: MkpInstance, cfg: EaConfig, runs: int, base_seed: int = 0,
             workers: int = 1) -> list:
    """``runs`` independent runs with seeds ``base_seed + k``, sorted by seed."""
    relax = solve_relaxation(inst)
    jobs = [(inst, replace(cfg, seed=base_seed + k), relax) for k in range(runs)]
    if workers > 1 and runs > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_one_run, jobs))
    else:
        results = [_one_run(job) for job in jobs]
    return sorted(results, key=lambda r: r.seed)
