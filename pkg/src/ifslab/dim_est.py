"""Dimension estimators: symbolic energy, correlation, box and local dimension."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np
from scipy.special import logsumexp
from scipy.stats import linregress

from .errors import EmptyBall, NonpositiveLyapunov
from .ifs_core import IFSFamily, cylinder_geometry, word_points
from .symbolic import check_budget
from .thermo import GibbsApproximation, entropy_estimate, lyapunov_estimate


@dataclass
class EnergySeries:
    alpha: float
    terms: list
    partial_sum: float
    growth_rate: float

    @property
    def converges(self) -> bool:
        return self.growth_rate < 0

    def to_json_dict(self) -> dict:
        return asdict(self)

    def csv_rows(self) -> list:
        return [(n, t) for n, t in enumerate(self.terms)]


class _EnergyLevels:
    """Per-level log lengths and off-diagonal mass products, reused across alpha."""

    def __init__(self, g: GibbsApproximation, fam: IFSFamily, lam, N: int):
        if N < 0:
            raise ValueError("N must be nonnegative")
        check_budget(fam.m, N + 1)
        self.N = N
        self.log_len = []
        self.log_mass = []
        lam = fam.param(lam)
        for n in range(N + 1):
            length = cylinder_geometry(fam, lam, n)[2]
            child = g.weights_at(n + 1).reshape(-1, fam.m)
            parent = child.sum(axis=1)
            cross = np.maximum(parent**2 - (child**2).sum(axis=1), 0.0)
            keep = cross > 0
            self.log_len.append(np.log(length[keep] / fam.width))
            self.log_mass.append(np.log(cross[keep]))

    def log_terms(self, alpha: float) -> np.ndarray:
        out = np.empty(self.N + 1)
        for n in range(self.N + 1):
            if self.log_mass[n].size:
                out[n] = logsumexp(self.log_mass[n] - alpha * self.log_len[n])
            else:
                out[n] = -math.inf
        return out

    def growth(self, alpha: float) -> float:
        logs = self.log_terms(alpha)
        return _fit_growth(logs)


def _fit_growth(log_terms: np.ndarray) -> float:
    N = len(log_terms) - 1
    if N < 1:
        return math.nan
    window = max(2, math.ceil(N / 2))
    ns = np.arange(N + 1)[-window:]
    ys = log_terms[-window:]
    if np.any(~np.isfinite(ys)):
        return -math.inf
    return float(linregress(ns, ys).slope)


def symbolic_energy(g: GibbsApproximation, fam: IFSFamily, lam, alpha: float, N: int) -> EnergySeries:
    """Level contributions to the alpha-energy of the symbolic measure.

    E_n sums |X_w|^{-alpha} mu[wa] mu[wb] over words w of length n and
    ordered pairs a != b, with lengths normalized by |X|.
    """
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    levels = _EnergyLevels(g, fam, lam, N)
    logs = levels.log_terms(alpha)
    terms = np.exp(logs)
    return EnergySeries(alpha, terms.tolist(), float(terms.sum()), _fit_growth(logs))


@dataclass
class CorrelationDimension:
    value: float
    lo: float
    hi: float

    @property
    def bracket(self) -> tuple:
        return (self.lo, self.hi)


def correlation_dimension_estimate(g: GibbsApproximation, fam: IFSFamily, lam, N: int, iterations: int = 30) -> CorrelationDimension:
    """Bisection in alpha on the sign of the energy growth rate."""
    if N < 1:
        raise ValueError("N must be at least 1")
    levels = _EnergyLevels(g, fam, lam, N)
    lo, hi = 0.0, max(1.0, math.log(fam.m) / -math.log(fam.gamma2)) + 0.5
    while levels.growth(hi) < 0 and hi < 64:
        hi *= 2
    if levels.growth(lo) >= 0:
        return CorrelationDimension(0.0, 0.0, 0.0)
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if levels.growth(mid) < 0:
            lo = mid
        else:
            hi = mid
    return CorrelationDimension(0.5 * (lo + hi), lo, hi)


def dimension_formula(h: float, chi: float) -> float:
    """min(1, h / chi)."""
    if chi <= 0:
        raise NonpositiveLyapunov(f"Lyapunov exponent {chi} is not positive")
    if h < 0:
        raise ValueError("entropy must be nonnegative")
    return min(1.0, h / chi)


@dataclass
class BoxDimension:
    value: float
    counts: list

    def to_json_dict(self) -> dict:
        return asdict(self)


def box_counts(fam: IFSFamily, lam, n: int) -> tuple[float, int]:
    """(delta, number of delta-mesh boxes hit by the level-n cylinders)."""
    lo, _, length = cylinder_geometry(fam, lam, n)
    delta = float(length.max())
    a = (lo - fam.X[0]) / delta
    b = a + length / delta
    # snap mesh coordinates that are integers up to rounding
    a = np.where(np.abs(a - np.rint(a)) < 1e-7, np.rint(a), a)
    b = np.where(np.abs(b - np.rint(b)) < 1e-7, np.rint(b), b)
    first = np.floor(a).astype(np.int64)
    last = np.maximum(np.ceil(b).astype(np.int64) - 1, first)
    span = int((last - first).max())
    boxes = np.concatenate([np.minimum(first + k, last) for k in range(span + 1)])
    return delta, int(np.unique(boxes).size)


def box_dimension_estimate(fam: IFSFamily, lam, depths: Sequence[int]) -> BoxDimension:
    """Least-squares slope of log N_delta against log(1/delta) over the depths."""
    counts = [(n, *box_counts(fam, lam, n)) for n in depths]
    if len(counts) < 2:
        raise ValueError("need at least two depths")
    xs = [-math.log(d) for _, d, _ in counts]
    ys = [math.log(c) for _, _, c in counts]
    return BoxDimension(float(linregress(xs, ys).slope), [{"depth": n, "delta": d, "count": c} for n, d, c in counts])


def local_dimension_estimate(samples, x: float, radii: Sequence[float], min_samples: int = 10_000) -> float:
    """Slope of log mass(B(x, r)) against log r over the radius ladder."""
    s = np.sort(np.asarray(samples, dtype=float))
    if s.size < min_samples:
        raise ValueError(f"need at least {min_samples} samples")
    r = np.asarray(radii, dtype=float)
    if r.size < 2 or np.any(np.diff(r) >= 0):
        raise ValueError("radii must be strictly decreasing and at least two")
    mass = (np.searchsorted(s, x + r, side="right") - np.searchsorted(s, x - r, side="left")) / s.size
    if mass[-1] == 0:
        raise EmptyBall(f"no samples within {r[-1]} of {x}")
    return float(linregress(np.log(r), np.log(mass)).slope)


def projected_energy(g: GibbsApproximation, fam: IFSFamily, lam, alpha: float, depth: int | None = None, block: int = 512) -> float:
    """alpha-energy of the projected measure, discretized at a cylinder depth.

    Each depth-n cylinder is represented by the projection of w 1 1 1 ...
    carrying mass mu[w].  Distances are normalized by |X| and floored at the
    smaller of the two cylinder lengths, which also supplies the
    within-cylinder term mu[w]^2 |X_w|^{-alpha}.
    """
    from .thermo import _base_point

    n = g.depth if depth is None else depth
    lam = fam.param(lam)
    w = g.weights_at(n)
    pts = word_points(fam, lam, n, _base_point(fam, lam)) / fam.width
    L = cylinder_geometry(fam, lam, n)[2] / fam.width
    total = 0.0
    for start in range(0, pts.size, block):
        sl = slice(start, start + block)
        dist = np.abs(pts[sl, None] - pts[None, :])
        floor = np.minimum(L[sl, None], L[None, :])
        dist = np.maximum(dist, floor)
        total += float((w[sl, None] * w[None, :] * dist**-alpha).sum())
    return total


def energy_continuity_probe(gA: GibbsApproximation, gB: GibbsApproximation, fam: IFSFamily, lam, alpha: float, eps: float, depth: int | None = None) -> tuple[float, float]:
    """Observed ratios E_alpha(A)/E_{alpha-eps}(B) and E_alpha(A)/E_{alpha+eps}(B).

    The energy comparison C1^{-1} E_{alpha-eps}(B) - C2 <= E_alpha(A) <=
    C1 E_{alpha+eps}(B) + C2 holds with C2 = 0 exactly when C1 is at least
    1/ratio_low and at least ratio_high.
    """
    n = min(gA.depth, gB.depth) if depth is None else depth
    ea = projected_energy(gA, fam, lam, alpha, n)
    lower = projected_energy(gB, fam, lam, max(alpha - eps, 0.0), n)
    upper = projected_energy(gB, fam, lam, alpha + eps, n)
    return ea / lower, ea / upper


@dataclass
class DimensionReport:
    h: float
    chi: float
    ratio_dim: float
    cor_dim: float
    cor_bracket: tuple
    box_dim: float | None
    depth: int
    residuals: dict

    def to_json_dict(self) -> dict:
        d = asdict(self)
        d["cor_bracket"] = list(self.cor_bracket)
        return d


def dimension_report(g: GibbsApproximation, fam: IFSFamily, lam, N: int | None = None, box_depths: Sequence[int] | None = None) -> DimensionReport:
    h = entropy_estimate(g)
    chi = lyapunov_estimate(g, fam, lam)
    N = g.depth - 1 if N is None else N
    cd = correlation_dimension_estimate(g, fam, lam, N)
    box = box_dimension_estimate(fam, lam, box_depths).value if box_depths else None
    return DimensionReport(
        h.value,
        chi.value,
        dimension_formula(h.value, chi.value),
        cd.value,
        cd.bracket,
        box,
        g.depth,
        {"entropy": abs(h.value - h.raw), "lyapunov": abs(chi.value - chi.raw)},
    )
