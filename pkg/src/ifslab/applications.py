"""Worked applications: place dependent Bernoulli convolutions, the slanted
baker map, and Furstenberg-like measures of positive 2x2 matrix cocycles."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.special import entr
from scipy.stats import ks_2samp

from .errors import NoConvergence, NotInU
from .ifs_core import Affine, IFSFamily, mobius_family
from .symbolic import check_budget
from .thermo import (
    Estimate,
    GibbsApproximation,
    MatrixNorm,
    PlaceDependentLog,
    default_truncation,
    transfer_operator_solve,
)

TRANSVERSALITY_INTERVAL = (0.5, 0.6684755)
BURN_IN = 1000
U_MARGIN = 1e-12
# scale of the fresh low-order bits fed into the baker map's y coordinate
BAKER_DITHER = 2.0**-40


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator keyed by (seed, stream)."""
    return np.random.Generator(np.random.Philox(key=np.array([seed, stream], dtype=np.uint64)))


def bc_family(lo: float = TRANSVERSALITY_INTERVAL[0], hi: float = TRANSVERSALITY_INTERVAL[1]) -> IFSFamily:
    """The maps lam x - (1 - lam) and lam x + (1 - lam) on [-1, 1], lam in [lo, hi]."""
    maps = (Affine(0.0, -1.0, (1.0,), (1.0,)), Affine(0.0, 1.0, (1.0,), (-1.0,)))
    return IFSFamily(maps, (-1.0, 1.0), ((lo, hi),), gamma1=lo, gamma2=hi, name="bc")


@dataclass(frozen=True)
class PlaceDepBC:
    """Bernoulli convolution with probabilities 1/2 + rho x and 1/2 - rho x."""

    lam: float
    rho: float

    def __post_init__(self):
        if not 0 < self.lam < 1:
            raise ValueError("lambda must lie in (0, 1)")
        if not 0 <= self.rho < 0.5:
            raise ValueError("rho must lie in [0, 1/2)")

    def probs(self, x):
        x = np.asarray(x, dtype=float)
        return np.stack([0.5 + self.rho * x, 0.5 - self.rho * x])

    def family(self) -> IFSFamily:
        return bc_family(self.lam, self.lam)

    def potential(self) -> PlaceDependentLog:
        return PlaceDependentLog(self.probs, self.rho / (0.5 - self.rho))


def bc_chaos_game(spec: PlaceDepBC, n: int, seed: int = 0, stream: int = 0, burn_in: int = BURN_IN, return_branches: bool = False):
    """Samples of the stationary measure from the Markov chain started at 0."""
    if n < 1:
        raise ValueError("n must be at least 1")
    u = make_rng(seed, stream).random(n + burn_in).tolist()
    lam, rho = spec.lam, spec.rho
    shift = 1.0 - lam
    out = np.empty(n)
    branches = np.empty(n, dtype=np.int8)
    x = 0.0
    for k, v in enumerate(u):
        if v < 0.5 + rho * x:
            x = lam * x - shift
            e = 0
        else:
            x = lam * x + shift
            e = 1
        if k >= burn_in:
            out[k - burn_in] = x
            branches[k - burn_in] = e
    if return_branches:
        return out, branches
    return out


def _stable_mean(v: np.ndarray) -> float:
    # centering keeps a constant sample's mean exact
    return float(v[0] + np.mean(v - v[0]))


class BCStats(NamedTuple):
    h_mc: float
    chi_mc: float
    h_se: float


def bc_entropy_lyapunov(spec: PlaceDepBC, samples, batches: int = 100) -> BCStats:
    """Monte Carlo entropy, the exact Lyapunov exponent and a batch-means standard error."""
    x = np.asarray(samples, dtype=float)
    if x.size < 10_000:
        raise ValueError("need at least 10^4 samples")
    H = entr(spec.probs(x)).sum(axis=0)
    h = _stable_mean(H)
    # sum_e p_e(x) log|psi_e'| = log lam for every x since the weights sum to 1
    chi = -math.log(spec.lam)
    means = np.array([b.mean() for b in np.array_split(H, batches)])
    se = float(means.std(ddof=1) / math.sqrt(batches))
    return BCStats(h, chi, se)


class BCBounds(NamedTuple):
    A: float
    B: float
    dim_lower: float
    dim_upper: float


def bc_bounds(lam: float, rho: float) -> BCBounds:
    """Entropy bounds A - B <= h <= A and the resulting dimension bounds."""
    PlaceDepBC(lam, rho)
    A = math.log(2) - 2 * rho**2 * (1 - lam) ** 2 / (1 + lam * (4 * rho * (1 - lam) - lam))
    B = rho**2 / (3 * (1 - 4 * rho**2))
    chi = -math.log(lam)
    return BCBounds(A, B, (A - B) / chi, A / chi)


def bc_region_classify(lam: float, rho: float) -> str:
    b = bc_bounds(lam, rho)
    lo, hi = TRANSVERSALITY_INTERVAL
    if lo < lam < hi and b.dim_lower > 1:
        return "abs_cont_ae"
    if b.dim_upper < 1:
        return "singular"
    return "undetermined"


def bc_region_scan(lams: Sequence[float], rhos: Sequence[float]) -> list:
    """Rows (lambda, rho, A, B, dim_lower, dim_upper, class), lambda-major."""
    rows = []
    for lam in lams:
        for rho in rhos:
            b = bc_bounds(lam, rho)
            rows.append((lam, rho, b.A, b.B, b.dim_lower, b.dim_upper, bc_region_classify(lam, rho)))
    return rows


def stationarity_check(spec: PlaceDepBC, samples, test_fns: int = 8) -> float:
    """max_j |E phi_j(x) - E sum_i p_i(x) phi_j(psi_i(x))| for phi_j = cos(j pi x / 2)."""
    x = np.asarray(samples, dtype=float)
    p0, p1 = spec.probs(x)
    y0 = spec.lam * x - (1 - spec.lam)
    y1 = spec.lam * x + (1 - spec.lam)
    worst = 0.0
    for j in range(1, test_fns + 1):
        w = j * math.pi / 2
        lhs = np.cos(w * x)
        rhs = p0 * np.cos(w * y0) + p1 * np.cos(w * y1)
        worst = max(worst, abs(float(np.mean(lhs - rhs))))
    return worst


def bc_gibbs(spec: PlaceDepBC, k: int | None = None, n: int | None = None) -> GibbsApproximation:
    """Symbolic Gibbs measure whose projection is the stationary measure."""
    return transfer_operator_solve(spec.potential(), spec.family(), [spec.lam], k, n)


@dataclass(frozen=True)
class FurstenbergSpec:
    """Positive 2x2 matrices and the exponent q of the norm potential."""

    matrices: tuple
    q: float = 1.0

    def __post_init__(self):
        mats = tuple(tuple(tuple(float(v) for v in row) for row in A) for A in self.matrices)
        for A in mats:
            if len(A) != 2 or any(len(r) != 2 for r in A):
                raise ValueError("matrices must be 2x2")
            if min(min(r) for r in A) <= 0:
                raise ValueError("matrix entries must be positive")
        object.__setattr__(self, "matrices", mats)

    @property
    def m(self) -> int:
        return len(self.matrices)

    def arrays(self) -> np.ndarray:
        return np.array(self.matrices)

    @property
    def in_U(self) -> bool:
        """Every |det A_i| < (1/2) min(a+c, b+d)^2, with a 1e-12 margin."""
        for (a, b), (c, d) in self.matrices:
            if abs(a * d - b * c) >= 0.5 * min(a + c, b + d) ** 2 - U_MARGIN:
                return False
        return True

    def family(self) -> IFSFamily:
        return mobius_family(self.matrices)

    def potential(self) -> MatrixNorm:
        return MatrixNorm(self.q, self.matrices)


def _triangular_singular_values(R: np.ndarray):
    """Singular values of upper triangular 2x2 matrices, small one to full relative accuracy."""
    f = np.abs(R[:, 0, 0])
    g = np.abs(R[:, 0, 1])
    h = np.abs(R[:, 1, 1])
    big = 0.5 * (np.hypot(f + h, g) + np.hypot(f - h, g))
    return big, f * h / big


def _log_singular_values(mats: np.ndarray, n: int):
    """log of both singular values of A_{w1} ... A_{wn} for all words w.

    Products are kept as Q R with R upper triangular and rescaled each level,
    so the small singular value stays accurate even when the product is far
    from invertible in floating point.
    """
    m = len(mats)
    check_budget(m, n)
    Q = np.eye(2)[None, :, :]
    R = np.eye(2)[None, :, :]
    logs = np.zeros(1)
    for _ in range(n):
        Qs, Rs = [], []
        for A in mats:
            q, r = np.linalg.qr(np.einsum("ij,wjk->wik", A, Q))
            Qs.append(q)
            Rs.append(r @ R)
        Q = np.concatenate(Qs)
        R = np.concatenate(Rs)
        logs = np.tile(logs, m)
        s = np.abs(R).max(axis=(1, 2))
        R = R / s[:, None, None]
        logs = logs + np.log(s)
    big, small = _triangular_singular_values(R)
    return np.log(big) + logs, np.log(small) + logs


def furstenberg_pressure(spec: FurstenbergSpec, n: int) -> Estimate:
    """(1/n) log sum ||A_w||^q with the depth difference as the primary value."""
    if n < 1:
        raise ValueError("n must be at least 1")
    mats = spec.arrays()
    top = spec.q * _log_singular_values(mats, n)[0]
    shift = float(top.max())
    z_n = float(np.exp(top - shift).sum())
    raw = (math.log(z_n) + shift) / n
    if n == 1:
        return Estimate(raw * n, raw)
    prev = spec.q * _log_singular_values(mats, n - 1)[0]
    # one shared shift, so the difference is the log of a ratio of sums
    z_prev = float(np.exp(prev - shift).sum())
    return Estimate(math.log(z_n / z_prev), raw)


def furstenberg_gibbs(spec: FurstenbergSpec, k: int, method: str = "transfer") -> GibbsApproximation:
    """Depth-k cylinder masses of the norm-weighted Gibbs measure.

    ``method="norm"`` normalizes ||A_w||^q directly; ``method="transfer"``
    solves the transfer operator of q log ||A_{i1} v(Pi(sigma i))||_1 on
    the projective action and reads off depth-k masses.
    """
    if method == "norm":
        log_w = spec.q * _log_singular_values(spec.arrays(), k)[0]
        w = np.exp(log_w - log_w.max())
        w /= w.sum()
        P = furstenberg_pressure(spec, k).value
        return GibbsApproximation(spec.m, k, w, math.exp(P))
    if method == "transfer":
        fam = spec.family()
        pot = spec.potential()
        trunc = max(k, default_truncation(pot, fam, None))
        g = transfer_operator_solve(pot, fam, None, trunc)
        return g.extend(k) if trunc != k else g
    raise ValueError(f"unknown method {method!r}")


def gibbs_path_discrepancy(spec: FurstenbergSpec, k: int) -> float:
    """max over depth-k words of |log(transfer mass / norm-formula mass)|."""
    a = furstenberg_gibbs(spec, k, "transfer").weights_at(k)
    b = furstenberg_gibbs(spec, k, "norm").weights_at(k)
    return float(np.abs(np.log(a) - np.log(b)).max())


class CocycleExponents(NamedTuple):
    eta1: float
    eta2: float
    identity_residual: float


def cocycle_lyapunov(spec: FurstenbergSpec, g: GibbsApproximation | None, n: int, tol: float = 1e-10) -> CocycleExponents:
    """Weighted averages of (1/n) log of the singular values of depth-n products.

    ``g=None`` uses the uniform measure.  The sum of the two exponents is
    compared with the average log determinant, computed separately from
    the determinants of the factors.
    """
    mats = spec.arrays()
    m = spec.m
    w = np.full(m**n, 1.0 / m**n) if g is None else g.weights_at(n)
    l1, l2 = _log_singular_values(mats, n)
    logdet_one = np.log(np.abs(np.linalg.det(mats)))
    logdet = np.zeros(1)
    for _ in range(n):
        logdet = (logdet_one[:, None] + logdet[None, :]).ravel()
    eta1 = float((w * l1).sum() / n)
    eta2 = float((w * l2).sum() / n)
    resid = abs(eta1 + eta2 - float((w * logdet).sum() / n))
    if resid > tol:
        raise NoConvergence(f"singular values disagree with determinants by {resid:.3g}")
    return CocycleExponents(eta1, eta2, resid)


@dataclass
class FurstenbergReport:
    q: float
    pressure: float
    eta1: float
    eta2: float
    entropy: float
    lyapunov: float
    dimension: float
    abs_cont: bool
    depth: int

    def to_json_dict(self) -> dict:
        return asdict(self)


def furstenberg_dimension(spec: FurstenbergSpec, g: GibbsApproximation | None = None, n: int = 12) -> FurstenbergReport:
    """Entropy P(q) - q eta1, exponent eta1 - eta2 and dimension min(1, h/chi).

    ``abs_cont`` is the sufficient condition P(q) > (q + 1) eta1 - eta2.
    """
    if not spec.in_U:
        raise NotInU("some |det A_i| is not below half of min(a+c, b+d)^2")
    if g is None:
        g = furstenberg_gibbs(spec, n, "transfer")
    P = furstenberg_pressure(spec, n).value
    eta1, eta2, _ = cocycle_lyapunov(spec, g, n)
    h = P - spec.q * eta1
    chi = eta1 - eta2
    if chi <= 0:
        from .errors import NonpositiveLyapunov

        raise NonpositiveLyapunov("eta1 - eta2 is not positive")
    dim = min(1.0, h / chi)
    return FurstenbergReport(spec.q, P, eta1, eta2, h, chi, dim, P > (spec.q + 1) * eta1 - eta2, n)


@dataclass(frozen=True)
class BakerSpec:
    """Slanted baker map on [-1, 1] x [0, 1]."""

    lam: float
    rho: float

    def __post_init__(self):
        if not 0 < self.lam < 1:
            raise ValueError("lambda must lie in (0, 1)")
        if not 0 <= self.rho < 0.5:
            raise ValueError("rho must lie in [0, 1/2)")


def baker_orbit(spec: BakerSpec, n: int, seed: int = 0, stream: int = 0, burn_in: int = BURN_IN):
    """Orbit of the slanted baker map from a random start, after burn-in.

    The y coordinate loses about one bit per step, so in floating point an
    orbit would run out of information after roughly fifty steps.  A random
    start in exact arithmetic carries infinitely many random low-order bits;
    they are supplied here by adding a uniform perturbation of size
    ``BAKER_DITHER`` to y at each step.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = make_rng(seed, stream)
    x = float(rng.uniform(-1.0, 1.0))
    y = float(rng.random())
    noise = ((rng.random(n + burn_in) - 0.5) * BAKER_DITHER).tolist()
    lam, rho = spec.lam, spec.rho
    shift = 1.0 - lam
    xs = np.empty(n)
    ys = np.empty(n)
    for k, e in enumerate(noise):
        t = rho * x
        if y < 0.5 + t:
            y = 2.0 * y / (1.0 + 2.0 * t)
            x = lam * x - shift
        else:
            y = (2.0 * y - 2.0 * t - 1.0) / (1.0 - 2.0 * t)
            x = lam * x + shift
        y += e
        if y < 0.0:
            y = -y
        elif y >= 1.0:
            y = 2.0 - y - 2.0**-52
        if k >= burn_in:
            xs[k - burn_in] = x
            ys[k - burn_in] = y
    return xs, ys


def baker_vs_bc(spec: BakerSpec, n: int, seed: int = 0, bc_spec: PlaceDepBC | None = None) -> float:
    """Kolmogorov-Smirnov distance between the baker x-marginal and the chaos game."""
    if bc_spec is None:
        bc_spec = PlaceDepBC(spec.lam, spec.rho)
    xs, _ = baker_orbit(spec, n, seed, stream=0)
    bs = bc_chaos_game(bc_spec, n, seed, stream=1)
    return float(ks_2samp(xs, bs).statistic)
