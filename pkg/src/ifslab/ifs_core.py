"""Parametrized families of hyperbolic contractions on a compact interval.

Maps are described by small immutable specs with analytic evaluators for the
value, the first two x-derivatives, the parameter gradient and the mixed
derivative.  Families bundle the maps with the interval ``X``, the parameter
box ``U`` and the hyperbolicity bounds.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    ContractionTooWeak,
    NoConvergence,
    NotContracting,
    SingularMatrix,
    UnsupportedKind,
)
from .symbolic import EventuallyPeriodicWord, Word, check_budget, shift_n

V_INFLATION = 0.05


def _grad(grad, lam: np.ndarray) -> np.ndarray:
    d = lam.shape[0]
    if len(grad) == 0:
        return np.zeros(d)
    g = np.asarray(grad, dtype=float)
    if g.shape[-1] != d:
        raise ValueError(f"gradient has {g.shape[-1]} components, parameter has {d}")
    return g


class MapSpec:
    """Interface shared by all map kinds.

    ``x`` may be a scalar or an array; ``lam`` is a 1-d parameter vector
    (possibly empty).  ``dlam`` and ``dxdlam`` return arrays whose leading
    axis runs over parameter components.
    """

    def value(self, x, lam):
        raise NotImplementedError

    def dx(self, x, lam):
        raise NotImplementedError

    def dxx(self, x, lam):
        raise NotImplementedError

    def dlam(self, x, lam):
        raise NotImplementedError

    def dxdlam(self, x, lam):
        raise NotImplementedError

    def secant(self, x, y, lam):
        """(f(x) - f(y)) / (x - y), computed without cancellation."""
        raise NotImplementedError

    def affine_at(self, lam):
        """(slope, offset) when the map is affine at ``lam``, else None."""
        return None

    def mobius_at(self, lam):
        """Coefficients (a, b, c, d) of (a x + b)/(c x + d), else None."""
        return None


@dataclass(frozen=True)
class Affine(MapSpec):
    """x -> slope * x + offset, both optionally affine in the parameter."""

    slope: float
    offset: float
    slope_grad: tuple = ()
    offset_grad: tuple = ()

    def coefficients(self, lam):
        s = self.slope + (np.dot(self.slope_grad, lam) if len(self.slope_grad) else 0.0)
        o = self.offset + (np.dot(self.offset_grad, lam) if len(self.offset_grad) else 0.0)
        return float(s), float(o)

    def value(self, x, lam):
        s, o = self.coefficients(lam)
        return s * np.asarray(x, dtype=float) + o

    def dx(self, x, lam):
        s, _ = self.coefficients(lam)
        return np.full(np.shape(x), s)

    def dxx(self, x, lam):
        return np.zeros(np.shape(x))

    def secant(self, x, y, lam):
        s, _ = self.coefficients(lam)
        return np.full(np.broadcast(x, y).shape, s)

    def dlam(self, x, lam):
        x = np.asarray(x, dtype=float)
        gs = _grad(self.slope_grad, lam)
        go = _grad(self.offset_grad, lam)
        return gs.reshape((-1,) + (1,) * x.ndim) * x + go.reshape((-1,) + (1,) * x.ndim)

    def dxdlam(self, x, lam):
        gs = _grad(self.slope_grad, lam)
        return gs.reshape((-1,) + (1,) * np.ndim(x)) * np.ones(np.shape(x))

    def affine_at(self, lam):
        return self.coefficients(lam)


@dataclass(frozen=True)
class Mobius(MapSpec):
    """x -> (a x + b) / (c x + d) with coefficients optionally affine in the parameter.

    ``grads`` holds one row per coefficient (a, b, c, d) and one column per
    parameter component, or is empty for an unparametrized map.
    """

    a: float
    b: float
    c: float
    d: float
    grads: tuple = ()

    def __post_init__(self):
        if self.a * self.d - self.b * self.c == 0:
            raise SingularMatrix(f"determinant of {(self.a, self.b, self.c, self.d)} is zero")

    def coefficients(self, lam):
        base = np.array([self.a, self.b, self.c, self.d], dtype=float)
        if len(self.grads):
            base = base + np.asarray(self.grads, dtype=float) @ lam
        return base

    def _coef_grads(self, lam):
        if len(self.grads):
            return np.asarray(self.grads, dtype=float)
        return np.zeros((4, lam.shape[0]))

    def value(self, x, lam):
        a, b, c, d = self.coefficients(lam)
        x = np.asarray(x, dtype=float)
        return (a * x + b) / (c * x + d)

    def dx(self, x, lam):
        a, b, c, d = self.coefficients(lam)
        x = np.asarray(x, dtype=float)
        return (a * d - b * c) / (c * x + d) ** 2

    def dxx(self, x, lam):
        a, b, c, d = self.coefficients(lam)
        x = np.asarray(x, dtype=float)
        return -2.0 * c * (a * d - b * c) / (c * x + d) ** 3

    def secant(self, x, y, lam):
        a, b, c, d = self.coefficients(lam)
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return (a * d - b * c) / ((c * x + d) * (c * y + d))

    def dlam(self, x, lam):
        a, b, c, d = self.coefficients(lam)
        x = np.asarray(x, dtype=float)
        den = c * x + d
        num = a * x + b
        partials = np.stack([x / den, 1.0 / den, -x * num / den**2, -num / den**2])
        return np.tensordot(self._coef_grads(lam).T, partials, axes=1)

    def dxdlam(self, x, lam):
        a, b, c, d = self.coefficients(lam)
        x = np.asarray(x, dtype=float)
        den = c * x + d
        det = a * d - b * c
        partials = np.stack([
            d / den**2,
            -c / den**2,
            -b / den**2 - 2.0 * x * det / den**3,
            a / den**2 - 2.0 * det / den**3,
        ])
        return np.tensordot(self._coef_grads(lam).T, partials, axes=1)

    def affine_at(self, lam):
        a, b, c, d = self.coefficients(lam)
        if c == 0:
            return float(a / d), float(b / d)
        return None

    def mobius_at(self, lam):
        return tuple(float(v) for v in self.coefficients(lam))


@dataclass(frozen=True)
class TranslatedBase(MapSpec):
    """base(x) + lam[index]."""

    base: MapSpec
    index: int

    def value(self, x, lam):
        return self.base.value(x, lam) + lam[self.index]

    def dx(self, x, lam):
        return self.base.dx(x, lam)

    def dxx(self, x, lam):
        return self.base.dxx(x, lam)

    def secant(self, x, y, lam):
        return self.base.secant(x, y, lam)

    def dlam(self, x, lam):
        out = np.array(self.base.dlam(x, lam), dtype=float)
        out[self.index] += 1.0
        return out

    def dxdlam(self, x, lam):
        return self.base.dxdlam(x, lam)

    def affine_at(self, lam):
        coef = self.base.affine_at(lam)
        if coef is None:
            return None
        return coef[0], coef[1] + float(lam[self.index])


def _box_grid(U, count: int) -> np.ndarray:
    """Closed-box grid with ``count`` points per axis (inclusive endpoints)."""
    if len(U) == 0:
        return np.zeros((1, 0))
    axes = [np.linspace(lo, hi, count) if hi > lo else np.array([lo]) for lo, hi in U]
    return np.array(list(itertools.product(*axes)), dtype=float)


@dataclass(frozen=True)
class IFSFamily:
    """A family of ``m`` maps on ``X`` indexed by parameters in the box ``U``.

    ``U`` is a tuple of (lo, hi) pairs, one per parameter component.  When the
    hyperbolicity bounds are not given they are filled in from sampled
    derivatives over X and U.
    """

    maps: tuple
    X: tuple
    U: tuple = ()
    gamma1: float | None = None
    gamma2: float | None = None
    name: str = ""
    info: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "maps", tuple(self.maps))
        object.__setattr__(self, "X", (float(self.X[0]), float(self.X[1])))
        object.__setattr__(self, "U", tuple((float(lo), float(hi)) for lo, hi in self.U))
        if len(self.maps) < 1:
            raise ValueError("a family needs at least one map")
        if not self.X[0] < self.X[1]:
            raise ValueError("X must be a nondegenerate interval")
        if self.gamma1 is None or self.gamma2 is None:
            lo, hi = _sampled_slope_range(self, 5, 65)
            if self.gamma1 is None:
                object.__setattr__(self, "gamma1", lo)
            if self.gamma2 is None:
                object.__setattr__(self, "gamma2", hi)

    @property
    def m(self) -> int:
        return len(self.maps)

    @property
    def d(self) -> int:
        return len(self.U)

    @property
    def width(self) -> float:
        return self.X[1] - self.X[0]

    @property
    def V(self) -> tuple:
        pad = V_INFLATION * self.width
        return (self.X[0] - pad, self.X[1] + pad)

    def center(self) -> np.ndarray:
        return np.array([(lo + hi) / 2 for lo, hi in self.U], dtype=float)

    def param(self, lam=None) -> np.ndarray:
        """Coerce ``lam`` to a parameter vector; None selects the box center."""
        if lam is None:
            return self.center()
        v = np.atleast_1d(np.asarray(lam, dtype=float))
        if self.d == 0 and v.size == 0:
            return np.zeros(0)
        if v.shape != (self.d,):
            raise ValueError(f"parameter must have {self.d} components, got {v.shape}")
        return v


def _sampled_slope_range(fam: IFSFamily, lam_count: int, x_count: int):
    xs = np.linspace(fam.X[0], fam.X[1], x_count)
    lo, hi = math.inf, 0.0
    for lam in _box_grid(fam.U, lam_count):
        for f in fam.maps:
            s = np.abs(f.dx(xs, lam))
            lo = min(lo, float(s.min()))
            hi = max(hi, float(s.max()))
    return lo, hi


@dataclass(frozen=True)
class CylinderInterval:
    word: Word
    lo: float
    hi: float

    @property
    def length(self) -> float:
        return self.hi - self.lo


def apply_word(fam: IFSFamily, lam, word: Sequence[int], x):
    """Value and x-derivative of f_{w1} o ... o f_{wn} at ``x``."""
    lam = fam.param(lam)
    y = np.asarray(x, dtype=float)
    deriv = np.ones(np.shape(y))
    for s in reversed(tuple(word)):
        f = fam.maps[s - 1]
        deriv = deriv * f.dx(y, lam)
        y = f.value(y, lam)
    if np.ndim(y) == 0:
        return float(y), float(deriv)
    return y, deriv


def cylinder_interval(fam: IFSFamily, lam, word: Sequence[int]) -> CylinderInterval:
    """The image of X under the composition along ``word``."""
    a, _ = apply_word(fam, lam, word, fam.X[0])
    b, _ = apply_word(fam, lam, word, fam.X[1])
    return CylinderInterval(tuple(word), min(a, b), max(a, b))


def cylinder_endpoints(fam: IFSFamily, lam, n: int, budget: int | None = None):
    """Lower and upper endpoints of all level-``n`` cylinders, lexicographic order."""
    lo, hi, _ = cylinder_geometry(fam, lam, n, budget)
    return lo, hi


def cylinder_geometry(fam: IFSFamily, lam, n: int, budget: int | None = None):
    """Endpoints and lengths of all level-``n`` cylinders.

    Lengths are propagated through secant slopes rather than taken as
    differences of endpoints, so they keep full relative precision even when
    they are far below the spacing of floating point numbers near X.
    """
    lam = fam.param(lam)
    check_budget(fam.m, n, budget)
    lo = np.array([fam.X[0]])
    hi = np.array([fam.X[1]])
    length = np.array([fam.width])
    for _ in range(n):
        new_lo, new_hi, new_len = [], [], []
        for f in fam.maps:
            a = f.value(lo, lam)
            b = f.value(hi, lam)
            new_lo.append(np.minimum(a, b))
            new_hi.append(np.maximum(a, b))
            new_len.append(np.abs(f.secant(hi, lo, lam)) * length)
        lo, hi, length = np.concatenate(new_lo), np.concatenate(new_hi), np.concatenate(new_len)
    return lo, hi, length


def word_points(fam: IFSFamily, lam, n: int, x0: float, budget: int | None = None) -> np.ndarray:
    """f_w(x0) for every word w of length ``n``, lexicographic order."""
    lam = fam.param(lam)
    check_budget(fam.m, n, budget)
    pts = np.array([float(x0)])
    for _ in range(n):
        pts = np.concatenate([f.value(pts, lam) for f in fam.maps])
    return pts


def _compose_affine(fam, lam, word):
    slope, offset = 1.0, 0.0
    for s in word:
        coef = fam.maps[s - 1].affine_at(lam)
        if coef is None:
            return None
        r, d = coef
        # f_word o f_s : x -> slope * (r x + d) + offset
        offset = slope * d + offset
        slope = slope * r
    return slope, offset


def _compose_mobius(fam, lam, word):
    mat = np.eye(2)
    for s in word:
        coef = fam.maps[s - 1].mobius_at(lam)
        if coef is None:
            return None
        a, b, c, d = coef
        mat = mat @ np.array([[a, b], [c, d]])
    return mat


def _attracting_mobius_fixed_point(mat, lo, hi):
    (a, b), (c, d) = mat
    det = a * d - b * c
    if abs(c) < 1e-300:
        if d == a:
            return None
        roots = [b / (d - a)]
    else:
        qa, qb, qc = c, d - a, -b
        disc = qb * qb - 4 * qa * qc
        if disc < 0:
            return None
        sq = math.sqrt(disc)
        q = -0.5 * (qb + math.copysign(sq, qb))
        roots = []
        if q != 0:
            roots.append(qc / q)
        roots.append(q / qa)
    for r in roots:
        den = c * r + d
        if den != 0 and lo <= r <= hi and abs(det / den**2) < 1:
            return r
    return None


def _periodic_fixed_point(fam, lam, period, tol):
    """Fixed point of f_period on X, with an error bound."""
    coef = _compose_affine(fam, lam, period)
    if coef is not None:
        slope, offset = coef
        return offset / (1.0 - slope), 0.0
    mat = _compose_mobius(fam, lam, period)
    if mat is not None:
        lo, hi = fam.V
        r = _attracting_mobius_fixed_point(mat, lo, hi)
        if r is not None:
            return r, 0.0
    lo, hi = fam.X
    g_lo = apply_word(fam, lam, period, lo)[0] - lo
    g_hi = apply_word(fam, lam, period, hi)[0] - hi
    if g_lo < 0 or g_hi > 0:
        raise NoConvergence(f"f_{period} does not map X into itself; no bracket")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if apply_word(fam, lam, period, mid)[0] - mid >= 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi), hi - lo


def natural_projection(fam: IFSFamily, lam, i: EventuallyPeriodicWord, tol: float = 1e-13):
    """Point of X coded by the infinite word ``i``, with an error bound."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    lam = fam.param(lam)
    scale = fam.gamma2 ** len(i.preperiod)
    x, err = _periodic_fixed_point(fam, lam, i.period, tol / max(scale, 1e-300))
    y, _ = apply_word(fam, lam, i.preperiod, x)
    return y, err * scale


def projection_orbits(fam: IFSFamily, lam, words: Sequence[EventuallyPeriodicWord], N: int) -> tuple:
    """Projected shift orbits of many words.

    Returns ``(symbols, points)`` where ``symbols[w, n]`` is the (n+1)-th
    symbol of word ``w`` and ``points[w, n]`` is the projection of its n-th
    shift, for n = 0..N.
    """
    lam = fam.param(lam)
    W = len(words)
    symbols = np.empty((W, N), dtype=np.int64)
    points = np.empty((W, N + 1))
    tails: dict = {}
    for k, w in enumerate(words):
        for n in range(N):
            symbols[k, n] = w.symbol(n)
        t = shift_n(w, N)
        if t not in tails:
            tails[t] = natural_projection(fam, lam, t)[0]
        points[k, N] = tails[t]
    for n in range(N - 1, -1, -1):
        src = points[:, n + 1]
        out = np.empty(W)
        for a, f in enumerate(fam.maps, start=1):
            mask = symbols[:, n] == a
            if mask.any():
                out[mask] = f.value(src[mask], lam)
        points[:, n] = out
    return symbols, points


def _sup_param_derivative(fam: IFSFamily, lam, count: int = 65) -> float:
    if fam.d == 0:
        return 0.0
    xs = np.linspace(fam.X[0], fam.X[1], count)
    return max(float(np.abs(f.dlam(xs, lam)).max()) for f in fam.maps)


def projection_gradients(fam: IFSFamily, lam, words: Sequence[EventuallyPeriodicWord], N: int = 60):
    """Projections, parameter gradients and a common tail bound for many words.

    Returns ``(points, gradients, tail)`` with ``gradients`` of shape (W, d).
    ``tail`` bounds every gradient component's truncation error.
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    lam = fam.param(lam)
    symbols, pts = projection_orbits(fam, lam, words, N)
    W = len(words)
    grad = np.zeros((W, fam.d))
    if fam.d == 0:
        return pts[:, 0], grad, 0.0
    deriv = np.ones(W)
    for n in range(1, N + 1):
        x = pts[:, n]
        step_dlam = np.empty((W, fam.d))
        step_dx = np.empty(W)
        for a, f in enumerate(fam.maps, start=1):
            mask = symbols[:, n - 1] == a
            if mask.any():
                step_dlam[mask] = np.asarray(f.dlam(x[mask], lam)).T
                step_dx[mask] = f.dx(x[mask], lam)
        grad += deriv[:, None] * step_dlam
        deriv = deriv * step_dx
    g2 = fam.gamma2
    tail = _sup_param_derivative(fam, lam) * g2**N / (1.0 - g2)
    return pts[:, 0], grad, tail


def projection_gradient(fam: IFSFamily, lam, i: EventuallyPeriodicWord, N: int = 60):
    """Gradient of the projection of ``i`` in the parameter, with a tail bound."""
    _, grad, tail = projection_gradients(fam, lam, [i], N)
    return grad[0], tail


def distortion_ratio(fam: IFSFamily, lam, word: Sequence[int], grid: int = 64) -> float:
    """max |f_w'(x)| / min |f_w'(y)| over a grid on X."""
    if grid < 2:
        raise ValueError("grid must be at least 2")
    xs = np.linspace(fam.X[0], fam.X[1], grid)
    _, d = apply_word(fam, lam, word, xs)
    d = np.abs(d)
    return float(d.max() / d.min())


def detect_exact_overlap(fam: IFSFamily, lam, depth: int, tol: float = 1e-12) -> list:
    """Pairs of distinct words of length at most ``depth`` giving the same affine map."""
    if depth < 1:
        raise ValueError("depth must be at least 1")
    lam = fam.param(lam)
    coefs = []
    for f in fam.maps:
        c = f.affine_at(lam)
        if c is None:
            raise UnsupportedKind("exact overlap detection needs affine maps")
        coefs.append(c)
    r = np.array([c[0] for c in coefs])
    o = np.array([c[1] for c in coefs])
    words: list = []
    slopes, offsets = [], []
    level_w: list = [()]
    level_s, level_o = np.array([1.0]), np.array([0.0])
    for n in range(1, depth + 1):
        check_budget(fam.m, n)
        # prepend symbol a: f_a o f_w has slope r_a s and offset r_a o_w + o_a
        level_s = np.concatenate([r[a] * level_s for a in range(fam.m)])
        level_o = np.concatenate([r[a] * level_o + o[a] for a in range(fam.m)])
        level_w = [(a + 1,) + w for a in range(fam.m) for w in level_w]
        words.extend(level_w)
        slopes.append(level_s)
        offsets.append(level_o)
    S = np.concatenate(slopes)
    D = np.concatenate(offsets)
    pairs = []
    order = np.lexsort((D, S))
    # chain-cluster on slope, then on offset
    groups = np.split(order, np.nonzero(np.diff(S[order]) > tol)[0] + 1)
    for g in groups:
        if len(g) < 2:
            continue
        g = g[np.argsort(D[g], kind="stable")]
        sub = np.split(g, np.nonzero(np.diff(D[g]) > tol)[0] + 1)
        for cl in sub:
            if len(cl) < 2:
                continue
            cl = np.sort(cl)
            for p, q in itertools.combinations(cl, 2):
                if abs(S[p] - S[q]) <= tol and abs(D[p] - D[q]) <= tol:
                    pairs.append((words[p], words[q]))
    pairs.sort(key=lambda pq: (len(pq[0]), pq[0], len(pq[1]), pq[1]))
    return pairs


@dataclass
class AssumptionsReport:
    gamma1_obs: float
    gamma2_obs: float
    M1: float
    M2: float
    holder_estimates: dict
    violations: list

    @property
    def ok(self) -> bool:
        return not self.violations


def verify_assumptions(fam: IFSFamily, lam_grid: int = 5, x_grid: int = 65, holder_exponent: float = 0.5) -> AssumptionsReport:
    """Sample the smoothness, invariance and hyperbolicity assumptions."""
    if lam_grid < 2 or x_grid < 2:
        raise ValueError("grids must have at least 2 points")
    xs = np.linspace(fam.X[0], fam.X[1], x_grid)
    vs = np.linspace(fam.V[0], fam.V[1], x_grid)
    lams = _box_grid(fam.U, lam_grid)
    slack = 1e-12
    g1, g2, M1, M2 = math.inf, 0.0, 0.0, 0.0
    holder_x, holder_lam = 0.0, 0.0
    violations = []
    dx_pairs = np.abs(xs[:, None] - xs[None, :]) ** holder_exponent
    off = ~np.eye(x_grid, dtype=bool)
    prev_dlam = {}
    for lam in lams:
        for i, f in enumerate(fam.maps, start=1):
            img = f.value(np.array(fam.X), lam)
            if img.min() < fam.X[0] - slack or img.max() > fam.X[1] + slack:
                violations.append(f"f_{i}(X) not inside X at lambda={lam.tolist()}: image [{img.min():.6g}, {img.max():.6g}]")
            s = np.abs(f.dx(xs, lam))
            g1 = min(g1, float(s.min()))
            g2 = max(g2, float(s.max()))
            if s.max() > fam.gamma2 + slack or s.min() < fam.gamma1 - slack:
                violations.append(f"|f_{i}'| in [{s.min():.6g}, {s.max():.6g}] outside [{fam.gamma1:.6g}, {fam.gamma2:.6g}] at lambda={lam.tolist()}")
            sv = f.dx(vs, lam)
            if not np.all(np.isfinite(sv)) or np.any(sv == 0) or np.ptp(np.sign(sv)) != 0:
                violations.append(f"f_{i} is not a diffeomorphism on V at lambda={lam.tolist()}")
            second = f.dxx(xs, lam)
            M1 = max(M1, float(np.abs(second).max()))
            if fam.d:
                M2 = max(M2, float(np.abs(f.dxdlam(xs, lam)).max()))
            quot = np.abs(second[:, None] - second[None, :])[off] / dx_pairs[off]
            holder_x = max(holder_x, float(quot.max()))
            if fam.d:
                cur = np.asarray(f.dlam(xs, lam))
                key = i
                if key in prev_dlam:
                    plam, pval = prev_dlam[key]
                    gap = float(np.linalg.norm(lam - plam))
                    if gap > 0:
                        holder_lam = max(holder_lam, float(np.abs(cur - pval).max()) / gap**holder_exponent)
                prev_dlam[key] = (lam, cur)
    holder = {"second_derivative_in_x": holder_x, "parameter_derivative_in_lambda": holder_lam, "exponent": holder_exponent}
    return AssumptionsReport(g1, g2, M1, M2, holder, violations)


def affine_family(slopes, offsets, X=(0.0, 1.0), U=(), name: str = "") -> IFSFamily:
    """Unparametrized affine family x -> slopes[i] x + offsets[i]."""
    maps = tuple(Affine(float(r), float(o)) for r, o in zip(slopes, offsets, strict=True))
    return IFSFamily(maps, X, U, name=name)


def vertical_translate_family(base: IFSFamily, eps: float) -> IFSFamily:
    """The family f_i + lam_i with lam in (-eps, eps)^m.

    X is widened by eps/(1 - gamma2) on each side so the translated maps
    still send X into itself for every parameter in the box.
    """
    if base.d != 0:
        raise ValueError("base family must be unparametrized")
    if eps <= 0:
        raise ValueError("eps must be positive")
    lam0 = np.zeros(0)
    vs = np.linspace(base.V[0], base.V[1], 257)
    for i, f in enumerate(base.maps, start=1):
        if float(np.abs(f.dx(vs, lam0)).max()) >= 0.5:
            raise ContractionTooWeak(f"|f_{i}'| reaches 1/2 on V")
    pad = eps / (1.0 - base.gamma2)
    X = (base.X[0] - pad, base.X[1] + pad)
    maps = tuple(TranslatedBase(f, k) for k, f in enumerate(base.maps))
    U = tuple((-eps, eps) for _ in base.maps)
    return IFSFamily(maps, X, U, base.gamma1, base.gamma2, name=f"translates({base.name})")


_ENTRY_GRADS = {
    # Furstenberg entry -> change of the standard coefficients (a-b, b, a+c-b-d, b+d)
    "a": (1.0, 0.0, 1.0, 0.0),
    "b": (-1.0, 1.0, -1.0, 1.0),
    "c": (0.0, 0.0, 1.0, 0.0),
    "d": (0.0, 0.0, -1.0, 1.0),
}


def furstenberg_map(matrix, grads: tuple = ()) -> Mobius:
    """Map x -> (a x + b(1-x)) / ((a+c) x + (b+d)(1-x)) for matrix [[a, b], [c, d]]."""
    (a, b), (c, d) = np.asarray(matrix, dtype=float)
    return Mobius(a - b, b, a + c - b - d, b + d, grads)


def mobius_family(matrices, params: Sequence[tuple] = (), box: Sequence[tuple] = ()) -> IFSFamily:
    """Linear fractional family on [0, 1] in Furstenberg form.

    ``params`` optionally lists (map index, entry name) pairs; parameter k is
    added to that entry and ranges over ``box[k]``.
    """
    mats = [np.asarray(A, dtype=float) for A in matrices]
    if len(params) != len(box):
        raise ValueError("each parameter needs a box interval")
    d = len(params)
    grads = [np.zeros((4, d)) for _ in mats]
    for k, (i, entry) in enumerate(params):
        grads[i][:, k] += _ENTRY_GRADS[entry]
    norms = []
    for i, A in enumerate(mats):
        (a, b), (c, dd) = A
        det = a * dd - b * c
        if det == 0:
            raise SingularMatrix(f"matrix {i + 1} is singular")
        den0, den1 = b + dd, a + c
        if den0 == 0 or den1 == 0 or (den0 > 0) != (den1 > 0):
            raise NotContracting(f"map {i + 1} has a pole in [0, 1]")
        norm = abs(det) / min(abs(den0), abs(den1)) ** 2
        if norm >= 1:
            raise NotContracting(f"map {i + 1} has derivative norm {norm:.6g} >= 1")
        norms.append(float(norm))
    maps = tuple(furstenberg_map(A, tuple(map(tuple, g)) if d else ()) for A, g in zip(mats, grads))
    return IFSFamily(maps, (0.0, 1.0), tuple(box), name="mobius", info={"derivative_norms": norms})
