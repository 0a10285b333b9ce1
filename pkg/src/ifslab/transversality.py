"""Sampled checks of the transversality conditions over a parameter grid."""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy.stats import linregress

from .errors import BudgetExceeded
from .ifs_core import IFSFamily, natural_projection, projection_gradients
from .symbolic import EventuallyPeriodicWord

ETA_LADDER = (0.2, 0.1, 0.05, 0.02, 0.01, 0.005)
PAIR_CAP = 10**6
VIOLATION_KEEP = 10_000


def cell_centers(U, counts) -> np.ndarray:
    """Centers of a regular grid of cells covering the box U.

    Centers of a grid with 3c cells per axis include those with c cells, so
    refining by odd factors nests the samples.
    """
    if isinstance(counts, int):
        counts = [counts] * len(U)
    if len(counts) != len(U):
        raise ValueError("one count per parameter axis")
    axes = [lo + (np.arange(c) + 0.5) * (hi - lo) / c for (lo, hi), c in zip(U, counts)]
    return np.array(list(itertools.product(*axes)), dtype=float)


def sample_words(m: int, depth: int) -> list:
    """Distinct words pre + (a) with |pre| <= depth and a constant tail a."""
    seen = {}
    for n in range(depth + 1):
        for pre in itertools.product(range(1, m + 1), repeat=n):
            for a in range(1, m + 1):
                w = EventuallyPeriodicWord(pre, (a,))
                seen.setdefault(w, None)
    return list(seen)


@dataclass
class Violation:
    lam: list
    i: str
    j: str
    delta: float
    grad_norm: float
    eta: float


@dataclass
class TransversalityReport:
    eta_passed: float | None
    violations: list
    pairs_tested: int
    depth: int
    grid: list
    min_margin: float = math.inf
    ladder: tuple = ETA_LADDER
    truncated: bool = False

    def to_json_dict(self) -> dict:
        d = asdict(self)
        d["ladder"] = list(self.ladder)
        return d


def check_MT(fam: IFSFamily, grid_counts, depth: int, N: int = 60, ladder: Sequence[float] = ETA_LADDER) -> TransversalityReport:
    """Largest ladder eta such that no sampled pair has small distance and small gradient.

    A pair (i, j) with different first symbols violates eta at a parameter
    when |Pi(i) - Pi(j)| + tail < eta and |grad(Pi(i) - Pi(j))| - tail < eta,
    so truncation errors can only create violations, never hide them.
    """
    if fam.d < 1:
        raise ValueError("family must have at least one parameter")
    if depth < 1:
        raise ValueError("depth must be at least 1")
    ladder = tuple(sorted(ladder, reverse=True))
    words = sample_words(fam.m, depth)
    first = np.array([w.symbol(0) for w in words])
    lams = cell_centers(fam.U, grid_counts)
    n_pairs = sum(int((first == a).sum() * (first > a).sum()) for a in range(1, fam.m + 1))
    total = n_pairs * len(lams)
    if total > PAIR_CAP:
        raise BudgetExceeded(f"{total} (parameter, pair) tests exceed the cap {PAIR_CAP}")
    names = [str(w) for w in words]
    worst = math.inf
    records = []
    for lam in lams:
        pts, grads, tail = projection_gradients(fam, lam, words, N)
        grad_tail = 2 * tail * math.sqrt(fam.d)
        for a in range(1, fam.m + 1):
            I = np.nonzero(first == a)[0]
            J = np.nonzero(first > a)[0]
            if len(I) == 0 or len(J) == 0:
                continue
            delta = np.abs(pts[I][:, None] - pts[J][None, :])
            gnorm = np.linalg.norm(grads[I][:, None, :] - grads[J][None, :, :], axis=2)
            # projections are exact fixed points, so only the gradient carries a tail
            margin = np.maximum(delta, gnorm - grad_tail)
            worst = min(worst, float(margin.min()))
            bad = np.argwhere(margin < ladder[0])
            for p, q in bad:
                mg = margin[p, q]
                failed = max(e for e in ladder if mg < e)
                records.append(Violation(lam.tolist(), names[I[p]], names[J[q]], float(delta[p, q]), float(gnorm[p, q]), failed))
    passed = None
    for e in ladder:
        if worst >= e:
            passed = e
            break
    records.sort(key=lambda v: (max(v.delta, v.grad_norm), v.lam, v.i, v.j))
    truncated = len(records) > VIOLATION_KEEP
    return TransversalityReport(passed, records[:VIOLATION_KEEP], total, depth, list(np.atleast_1d(grid_counts).tolist()), worst, ladder, truncated)


def check_T3_slope(fam: IFSFamily, i: EventuallyPeriodicWord, j: EventuallyPeriodicWord, r_ladder: Sequence[float], grid_counts) -> tuple[list, float]:
    """Fraction of parameter cells where |Pi(i) - Pi(j)| < r, for each r.

    Returns the (r, fraction) list and the least-squares slope of fraction
    against r.
    """
    if i.symbol(0) == j.symbol(0):
        raise ValueError("words must have different first symbols")
    lams = cell_centers(fam.U, grid_counts)
    dist = np.array([abs(natural_projection(fam, lam, i)[0] - natural_projection(fam, lam, j)[0]) for lam in lams])
    rs = sorted(float(r) for r in r_ladder)
    fracs = [(r, float((dist < r).mean())) for r in rs]
    if len(rs) >= 2 and np.ptp(rs) > 0:
        slope = float(linregress(rs, [f for _, f in fracs]).slope)
    else:
        slope = math.nan
    return fracs, slope
