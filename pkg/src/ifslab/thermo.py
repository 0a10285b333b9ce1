"""Pressure, Hölder potentials, Gibbs measures, entropy and Lyapunov exponents.

Potentials here are functions of the first symbol ``a`` and of the projected
point ``x = Pi(sigma i)``, so every potential is stored as a rule giving the
local value ``phi(a, x)``.  Words of length ``n`` are always indexed in
lexicographic order with the first symbol most significant.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy.special import logsumexp, xlogy

from .errors import DegenerateGap, NoConvergence, ZeroMass
from .ifs_core import IFSFamily, cylinder_geometry, natural_projection, word_points
from .symbolic import (
    EventuallyPeriodicWord,
    check_budget,
    index_word,
    max_depth,
    word_index,
)

TRANSFER_STATE_CAP = 2**14
GIBBS_RATIO_CAP = 1e3


class Estimate(NamedTuple):
    """A primary estimate together with the raw finite-depth value."""

    value: float
    raw: float


class RootEstimate(NamedTuple):
    value: float
    depth: int
    sensitivity: float


def _base_point(fam: IFSFamily, lam) -> float:
    """Projection of the constant word 1 1 1 ..."""
    return natural_projection(fam, lam, EventuallyPeriodicWord.periodic((1,)))[0]


class Potential:
    """A Hölder potential phi(i) = local(i_1, Pi(sigma i))."""

    def values(self, fam: IFSFamily, lam, x: np.ndarray) -> np.ndarray:
        """Array of shape (m, len(x)) with phi(a, x[j]) in row a-1."""
        raise NotImplementedError

    def holder(self, fam: IFSFamily, lam) -> tuple[float, float]:
        """(alpha, b) with var_k phi <= b alpha^k."""
        raise NotImplementedError


@dataclass(frozen=True)
class FirstSymbol(Potential):
    log_weights: tuple

    def values(self, fam, lam, x):
        w = np.asarray(self.log_weights, dtype=float)
        return np.broadcast_to(w[:, None], (len(w), np.size(x))).copy()

    def holder(self, fam, lam):
        return 0.5, 0.0


def constant_potential(c: float, m: int) -> FirstSymbol:
    return FirstSymbol((float(c),) * m)


@dataclass(frozen=True)
class Geometric(Potential):
    """s log|f'_{i_1}(Pi(sigma i))|."""

    s: float

    def values(self, fam, lam, x):
        lam = fam.param(lam)
        return np.stack([self.s * np.log(np.abs(f.dx(x, lam))) for f in fam.maps])

    def holder(self, fam, lam):
        lam = fam.param(lam)
        xs = np.linspace(fam.X[0], fam.X[1], 129)
        lip = max(float(np.abs(f.dxx(xs, lam) / f.dx(xs, lam)).max()) for f in fam.maps)
        g2 = fam.gamma2
        return g2, abs(self.s) * lip * fam.width / g2


@dataclass(frozen=True)
class PlaceDependentLog(Potential):
    """log p_{i_1}(Pi(sigma i)) for place dependent probabilities.

    ``probs`` maps an array of points to an (m, len) array of probabilities;
    ``lipschitz`` bounds |d/dx log p_i| on X.
    """

    probs: Callable
    lipschitz: float

    def values(self, fam, lam, x):
        return np.log(self.probs(np.asarray(x, dtype=float)))

    def holder(self, fam, lam):
        g2 = fam.gamma2
        return g2, self.lipschitz * fam.width / g2


@dataclass(frozen=True)
class MatrixNorm(Potential):
    """q log ||A_{i_1} v(Pi(sigma i))||_1 with v(x) = (x, 1 - x)."""

    q: float
    matrices: tuple

    def values(self, fam, lam, x):
        x = np.asarray(x, dtype=float)
        rows = []
        for A in self.matrices:
            (a, b), (c, d) = np.asarray(A, dtype=float)
            rows.append(self.q * np.log((a + c) * x + (b + d) * (1.0 - x)))
        return np.stack(rows)

    def holder(self, fam, lam):
        lip = 0.0
        for A in self.matrices:
            (a, b), (c, d) = np.asarray(A, dtype=float)
            lip = max(lip, abs(a + c - b - d) / min(a + c, b + d))
        g2 = fam.gamma2
        return g2, abs(self.q) * lip * fam.width / g2


def check_probabilities(pot: PlaceDependentLog, fam: IFSFamily, grid: int = 257) -> bool:
    xs = np.linspace(fam.X[0], fam.X[1], grid)
    p = pot.probs(xs)
    return bool(np.all(p > 0) and np.allclose(p.sum(axis=0), 1.0, atol=1e-12))


def variation_estimate(pot: Potential, fam: IFSFamily, lam, k: int) -> float:
    """Sampled var_k: spread of phi over words sharing their first k symbols.

    Each k-word is extended by every constant tail.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    lam = fam.param(lam)
    tails = [natural_projection(fam, lam, EventuallyPeriodicWord.periodic((a,)))[0] for a in range(1, fam.m + 1)]
    vals = []
    for t in tails:
        pts = word_points(fam, lam, k - 1, t)
        vals.append(pot.values(fam, lam, pts).ravel())
    vals = np.array(vals)
    return float((vals.max(axis=0) - vals.min(axis=0)).max())


def _log_lengths(fam, lam, n, normalized=True):
    L = cylinder_geometry(fam, lam, n)[2]
    if normalized:
        L = L / fam.width
    with np.errstate(divide="ignore"):
        return np.log(L)


def pressure(fam: IFSFamily, lam, t: float, n: int) -> float:
    """(1/n) log of the sum of |X_w|^t over words of length n."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return float(logsumexp(t * _log_lengths(fam, lam, n, normalized=False)) / n)


def pressure_estimate(fam: IFSFamily, lam, t: float, n: int) -> Estimate:
    """Raw pressure at depth n and the depth-difference (Richardson) value.

    The difference uses depths n and 2n when the budget allows, else n-1 and n.
    """
    raw = pressure(fam, lam, t, n)
    if 2 * n <= max_depth(fam.m):
        z_n = logsumexp(t * _log_lengths(fam, lam, n, normalized=False))
        z_2n = logsumexp(t * _log_lengths(fam, lam, 2 * n, normalized=False))
        return Estimate(float((z_2n - z_n) / n), raw)
    if n >= 2:
        z_n = logsumexp(t * _log_lengths(fam, lam, n, normalized=False))
        z_prev = logsumexp(t * _log_lengths(fam, lam, n - 1, normalized=False))
        return Estimate(float(z_n - z_prev), raw)
    return Estimate(raw, raw)


def _bisect_decreasing(fn, lo, hi, tol):
    f_hi = fn(hi)
    while f_hi > 0:
        lo, hi = hi, 2 * hi
        f_hi = fn(hi)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if fn(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def conformal_similarity_dimension(fam: IFSFamily, lam=None, n: int | None = None, tol: float = 1e-9) -> RootEstimate:
    """Zero of the pressure of cylinder lengths.

    Lengths are normalized by |X| (which leaves the limit unchanged) and the
    root is taken of the depth difference between n/2 and n, which removes
    bounded-distortion bias.  ``sensitivity`` is the gap to the root of the
    raw depth-n pressure.
    """
    if n is None:
        n = max(2, min(max_depth(fam.m, 2**16), 40))
    check_budget(fam.m, n)
    n0 = max(1, n // 2)
    ln = _log_lengths(fam, lam, n)
    l0 = _log_lengths(fam, lam, n0)

    def diff(t):
        return (logsumexp(t * ln) - logsumexp(t * l0)) / (n - n0)

    def raw(t):
        return logsumexp(t * ln) / n

    upper = math.log(fam.m) / -math.log(fam.gamma2)
    s = _bisect_decreasing(diff, 0.0, upper, tol)
    s_raw = _bisect_decreasing(raw, 0.0, upper, tol)
    return RootEstimate(s, n, abs(s - s_raw))


def solve_similarity_dimension(ratios: Sequence[float], tol: float = 1e-12) -> float:
    """Root s of sum |r_i|^s = 1."""
    rs = [abs(float(r)) for r in ratios]
    if not rs or any(not 0 < r < 1 for r in rs):
        raise ValueError("ratios must lie in (0, 1)")
    lo = 0.0
    hi = math.log(len(rs)) / -math.log(max(rs))
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if sum(r**mid for r in rs) > 1.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def birkhoff_sums(pot: Potential, fam: IFSFamily, lam, n: int) -> np.ndarray:
    """S_n phi for every word of length n, evaluated along w 1 1 1 ..."""
    lam = fam.param(lam)
    check_budget(fam.m, n)
    pts = np.array([_base_point(fam, lam)])
    sums = np.zeros(1)
    for _ in range(n):
        vals = pot.values(fam, lam, pts)
        sums = np.concatenate([vals[a] + sums for a in range(fam.m)])
        pts = np.concatenate([f.value(pts, lam) for f in fam.maps])
    return sums


def birkhoff_sum(pot: Potential, fam: IFSFamily, lam, word: Sequence[int]) -> tuple[float, float]:
    """S_n phi(w) at the representative w 1 1 1 ..., with a var-based slack."""
    lam = fam.param(lam)
    x = _base_point(fam, lam)
    total = 0.0
    for s in reversed(tuple(word)):
        total += float(pot.values(fam, lam, np.array([x]))[s - 1, 0])
        x = float(fam.maps[s - 1].value(x, lam))
    alpha, b = pot.holder(fam, lam)
    return total, b * alpha / (1.0 - alpha)


def potential_pressure(pot: Potential, fam: IFSFamily, lam, n: int) -> Estimate:
    """Pressure of a potential: depth difference log Z_n - log Z_{n-1}, and raw (1/n) log Z_n."""
    if n < 1:
        raise ValueError("n must be at least 1")
    z_n = float(logsumexp(birkhoff_sums(pot, fam, lam, n)))
    if n == 1:
        return Estimate(z_n, z_n)
    z_prev = float(logsumexp(birkhoff_sums(pot, fam, lam, n - 1)))
    return Estimate(z_n - z_prev, z_n / n)


@dataclass
class GibbsApproximation:
    """Cylinder masses of a Gibbs measure at a fixed depth.

    ``weights`` holds the masses of all words of length ``depth``.  When the
    measure comes from a transfer operator, ``transition[a-1, u]`` is the
    conditional mass of prepending ``a`` to a word starting with the k-word
    of index ``u``; it lets the weights be extended to deeper levels.
    """

    m: int
    depth: int
    weights: np.ndarray
    eigenvalue: float | None = None
    eigenfunction: np.ndarray | None = None
    eigenmeasure: np.ndarray | None = None
    k: int = 0
    residual: float = 0.0
    iterations: int = 0
    lam: np.ndarray | None = None
    transition: np.ndarray | None = None
    gibbs_ratio: float | None = None

    @property
    def pressure(self) -> float | None:
        return None if self.eigenvalue is None else math.log(self.eigenvalue)

    def weights_at(self, depth: int) -> np.ndarray:
        """Masses of all words of length ``depth``, marginalized or extended."""
        if depth < 0:
            raise ValueError("depth must be nonnegative")
        if depth <= self.depth:
            w = self.weights
            for _ in range(self.depth - depth):
                w = w.reshape(-1, self.m).sum(axis=1)
            return w
        if self.transition is None:
            raise ValueError("this approximation cannot be extended beyond its depth")
        check_budget(self.m, depth)
        w = self.weights
        k = self.k
        for level in range(self.depth + 1, depth + 1):
            prefix_idx = np.arange(self.m ** (level - 1)) // self.m ** (level - 1 - k)
            w = (self.transition[:, prefix_idx] * w[None, :]).ravel()
        return w

    def extend(self, depth: int) -> GibbsApproximation:
        out = GibbsApproximation(**{**self.__dict__})
        out.weights = self.weights_at(depth)
        out.depth = depth
        return out

    def weight(self, word: Sequence[int]) -> float:
        w = self.weights_at(len(word))
        return float(w[word_index(word, self.m)])

    def to_json_dict(self) -> dict:
        return {
            "depth": self.depth,
            "eigenvalue": self.eigenvalue,
            "weights": [[list(index_word(j, self.m, self.depth)), float(v)] for j, v in enumerate(self.weights)],
            "residual": self.residual,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())


def product_measure(p: Sequence[float], depth: int) -> GibbsApproximation:
    """Bernoulli measure with probabilities ``p`` as a Gibbs approximation."""
    p = np.asarray(p, dtype=float)
    if np.any(p < 0) or not math.isclose(p.sum(), 1.0, abs_tol=1e-12):
        raise ValueError("p must be a probability vector")
    m = len(p)
    check_budget(m, depth)
    w = np.ones(1)
    for _ in range(depth):
        w = np.concatenate([pa * w for pa in p])
    return GibbsApproximation(m, depth, w, 1.0, np.ones(m), p.copy(), 1, 0.0, 0, None, p[:, None] * np.ones((1, m)))


def default_truncation(pot: Potential, fam: IFSFamily, lam, target: float = 1e-8, max_states: int = TRANSFER_STATE_CAP) -> int:
    """Smallest k with b alpha^k < target, capped so m^k stays within ``max_states``."""
    alpha, b = pot.holder(fam, lam)
    cap = max(1, max_depth(fam.m, min(max_states, 2**62)))
    k = 1
    while b * alpha**k >= target and k < cap:
        k += 1
    return k


def transfer_operator_solve(
    pot: Potential,
    fam: IFSFamily,
    lam=None,
    k: int | None = None,
    n: int | None = None,
    tol: float = 1e-12,
    max_iter: int = 100_000,
) -> GibbsApproximation:
    """Gibbs measure of ``pot`` from the transfer operator of its depth-k truncation.

    The truncated potential depends on the first k symbols, so the operator
    acts on functions of k-words.  Power iteration gives the eigenfunction
    h, the adjoint iteration gives the eigenmeasure nu, and the depth-k
    masses are h * nu.  Deeper masses follow from the conditional weights
    e^{phi - P} h(a u) / h(u), and shallower ones by summing out trailing
    symbols, so the returned weights are exactly consistent across levels.
    """
    lam = fam.param(lam)
    m = fam.m
    if k is None:
        k = default_truncation(pot, fam, lam)
    if k < 1:
        raise ValueError("k must be at least 1")
    check_budget(m, k)
    n = k if n is None else n
    inner = m ** (k - 1)
    pts = word_points(fam, lam, k - 1, _base_point(fam, lam))
    phi = pot.values(fam, lam, pts)
    shift = float(phi.max())
    E = np.exp(phi - shift)

    def apply(h):
        s = (E * h.reshape(m, inner)).sum(axis=0)
        return np.repeat(s, m)

    def apply_adjoint(nu):
        return (E * nu.reshape(inner, m).sum(axis=1)[None, :]).ravel()

    def iterate(op):
        v = np.full(m**k, 1.0 / m**k)
        res = math.inf
        it = 0
        for it in range(1, max_iter + 1):
            w = op(v)
            ev = w.sum() / v.sum()
            res = float(np.abs(w - ev * v).max() / (ev * np.abs(v).max()))
            v = w / w.sum()
            if res <= tol:
                break
        if res > tol and res > 1e-9:
            raise NoConvergence(f"power iteration stalled at residual {res:.3g}")
        return v, ev, res, it

    h, ev_h, res_h, it_h = iterate(apply)
    nu, ev_nu, res_nu, it_nu = iterate(apply_adjoint)
    ev = ev_h
    mu = h * nu
    mu /= mu.sum()
    h = h / float((h * nu).sum())
    u = np.arange(m**k)
    prev = u // m
    trans = np.empty((m, m**k))
    for a in range(m):
        trans[a] = E[a, prev] * h[a * inner + prev] / (ev * h[u])
    eigenvalue = float(ev * math.exp(shift))
    g = GibbsApproximation(
        m=m,
        depth=k,
        weights=mu,
        eigenvalue=eigenvalue,
        eigenfunction=h,
        eigenmeasure=nu,
        k=k,
        residual=max(res_h, res_nu),
        iterations=max(it_h, it_nu),
        lam=lam,
        transition=trans,
    )
    if n != k:
        g = g.extend(n)
    g.gibbs_ratio = gibbs_ratio(g, pot, fam, lam)
    return g


def gibbs_ratio(g: GibbsApproximation, pot: Potential, fam: IFSFamily, lam) -> float:
    """max/min over depth-n words of mu[w] / exp(-nP + S_n phi(w))."""
    S = birkhoff_sums(pot, fam, lam, g.depth)
    with np.errstate(divide="ignore"):
        r = np.log(g.weights) - S
    r = r[np.isfinite(r)]
    return float(math.exp(min(r.max() - r.min(), math.log(GIBBS_RATIO_CAP) + 1))) if r.size else math.inf


def _entropy(w: np.ndarray) -> float:
    return float(-xlogy(w, w).sum())


def entropy_estimate(g: GibbsApproximation) -> Estimate:
    """Conditional entropy H_n - H_{n-1} and raw H_n / n, in nats."""
    if g.depth < 2:
        raise ValueError("depth must be at least 2")
    h_n = _entropy(g.weights_at(g.depth))
    h_prev = _entropy(g.weights_at(g.depth - 1))
    return Estimate(h_n - h_prev, h_n / g.depth)


def lyapunov_estimate(g: GibbsApproximation, fam: IFSFamily, lam=None) -> Estimate:
    """Depth difference of -sum mu[w] log|X_w|, and the raw per-level average."""
    n = g.depth

    def level(j):
        return float(-(g.weights_at(j) * _log_lengths(fam, lam, j, normalized=False)).sum())

    l_n = level(n)
    raw = l_n / n
    if n < 2:
        return Estimate(raw, raw)
    return Estimate(l_n - level(n - 1), raw)


@dataclass
class ErgodicStats:
    entropy: float
    lyapunov: float
    ratio: float
    depths: tuple
    extrapolation_residual: float


def ergodic_stats(g: GibbsApproximation, fam: IFSFamily, lam=None) -> ErgodicStats:
    h = entropy_estimate(g)
    chi = lyapunov_estimate(g, fam, lam)
    resid = max(abs(h.value - h.raw), abs(chi.value - chi.raw))
    return ErgodicStats(h.value, chi.value, h.value / chi.value, (g.depth - 1, g.depth), resid)


def equilibrium_check(pot: Potential, fam: IFSFamily, lam, g: GibbsApproximation) -> float:
    """|P - (h + integral of phi)| with the integral taken as sum mu[w] S_n phi(w) / n."""
    n = g.depth
    P = potential_pressure(pot, fam, lam, n).value
    h = entropy_estimate(g).value
    integral = float((g.weights * birkhoff_sums(pot, fam, lam, n)).sum() / n)
    return abs(P - (h + integral))


class ModulusEstimate(NamedTuple):
    c_hat: float
    max_log_ratio: float
    gap: float


def _max_log_ratio(gA: GibbsApproximation, gB: GibbsApproximation, n: int) -> float:
    a = gA.weights_at(n)
    b = gB.weights_at(n)
    za, zb = a == 0, b == 0
    if np.any(za != zb):
        raise ZeroMass("a cylinder has zero mass in exactly one measure")
    keep = ~za
    return float(np.abs(np.log(a[keep]) - np.log(b[keep])).max())


def measure_modulus(gA: GibbsApproximation, gB: GibbsApproximation, n: int, theta: float = 1.0, gap: float | None = None) -> ModulusEstimate:
    """max |log(muA[w]/muB[w])| / (n |lamA - lamB|^theta) over words of length n."""
    if gap is None:
        if gA.lam is None or gB.lam is None:
            raise ValueError("parameter gap unknown; pass gap explicitly")
        gap = float(np.linalg.norm(np.asarray(gA.lam) - np.asarray(gB.lam)))
    if gap == 0:
        raise DegenerateGap("the two parameters coincide")
    top = _max_log_ratio(gA, gB, n)
    return ModulusEstimate(top / (n * gap**theta), top, gap)


def modulus_theta_fit(g0: GibbsApproximation, others: Sequence[GibbsApproximation], n: int, gaps: Sequence[float] | None = None) -> tuple[float, float]:
    """Least-squares (c, theta) with max log ratio / n ~ c gap^theta."""
    xs, ys = [], []
    for j, g in enumerate(others):
        est = measure_modulus(g0, g, n, 1.0, None if gaps is None else gaps[j])
        xs.append(math.log(est.gap))
        ys.append(math.log(est.max_log_ratio / n))
    theta, logc = np.polyfit(xs, ys, 1)
    return float(math.exp(logc)), float(theta)
