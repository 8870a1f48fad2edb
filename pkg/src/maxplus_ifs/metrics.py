"""Metrics between idempotent measures.

Three structures:

* the coupling (bottleneck) metric: optimal couplings of two densities are
  screened through the pointwise-maximal candidate at a distance threshold,
  and the smallest feasible threshold is found by binary search (feasibility
  is monotone in the threshold);
* the Lipschitz-dual pseudometrics: sup over functions with Lipschitz
  constant <= a of |mu(f) - nu(f)|, computed in closed form through cone
  test functions and validated by sampled certificates;
* two-sided weighted series of the dual pseudometrics, with certified
  truncation tails.

Every computed route has an independent oracle next to it: subset
enumeration for the coupling metric, inf-convolution sampling for the dual
closed form, and a directed level-set formula as a second exact route to
the coupling optimum.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .measures import IdempotentMeasure, TestFunction, pushforward
from .semiring import NEG_INF
from .spaces import ProductSpace

_BRUTE_FORCE_CELLS = 16
_DENSE_PAIRS = 4_000_000


@dataclass(frozen=True)
class Coupling:
    """Measure on X x X whose projections reproduce the two marginals."""

    measure: IdempotentMeasure
    left: IdempotentMeasure
    right: IdempotentMeasure

    def __post_init__(self):
        ps = self.measure.space
        if not isinstance(ps, ProductSpace):
            raise ValueError("a coupling lives on a product space")
        if ps.left is not self.left.space or ps.right is not self.right.space:
            raise ValueError("product space factors do not match the marginals")
        lam1 = pushforward(self.measure, ps.proj_left, ps.left).density
        lam2 = pushforward(self.measure, ps.proj_right, ps.right).density
        if not np.array_equal(lam1, self.left.density):
            raise ValueError("left marginal condition fails")
        if not np.array_equal(lam2, self.right.density):
            raise ValueError("right marginal condition fails")

    def max_support_distance(self) -> float:
        sup = self.measure.support()
        ps = self.measure.space
        il, ir = np.divmod(sup, ps.right.n_points)
        d = ps.left.distance_submatrix(il, ir)
        return float(np.max(np.diagonal(d))) if d.size else 0.0


def _check_same_space(mu1: IdempotentMeasure, mu2: IdempotentMeasure) -> None:
    if mu1.space is not mu2.space:
        raise ValueError("measures live on different spaces")


def _support_tables(mu1, mu2, with_dist=True):
    s1 = mu1.support()
    s2 = mu2.support()
    l1 = mu1.density[s1]
    l2 = mu2.density[s2]
    d = mu1.space.distance_submatrix(s1, s2) if with_dist else None
    return s1, s2, l1, l2, d


def maximal_coupling(mu1: IdempotentMeasure, mu2: IdempotentMeasure, t: float) -> np.ndarray:
    """Pointwise-largest coupling candidate at distance threshold t.

    eta[x, y] = min(lambda1(x), lambda2(y)) where d(x, y) <= t, -inf
    elsewhere.  Any coupling supported on pairs of distance <= t lies below
    it pointwise, so a feasible coupling at t exists iff this table already
    satisfies the marginal conditions.  The raw table is returned; it is a
    normalized density only when feasible.
    """
    _check_same_space(mu1, mu2)
    if t < 0:
        raise ValueError("threshold must be nonnegative")
    d = mu1.space.distance_matrix()
    eta = np.minimum(mu1.density[:, None], mu2.density[None, :])
    return np.where(d <= t, eta, NEG_INF)


def coupling_feasible(mu1: IdempotentMeasure, mu2: IdempotentMeasure, t: float) -> bool:
    """Marginal conditions for the maximal coupling at threshold t.

    Row x needs max_y eta(x, y) = lambda1(x); since min(l1, l2) never
    exceeds l1, that holds iff some y within t has lambda2(y) >= lambda1(x)
    (bottom rows are automatic).  Columns are symmetric.
    """
    _check_same_space(mu1, mu2)
    s1, s2, l1, l2, _ = _support_tables(mu1, mu2, with_dist=False)
    if s1.size * s2.size <= _DENSE_PAIRS:
        d = mu1.space.distance_submatrix(s1, s2)
        ok_rows = np.all(((l2[None, :] >= l1[:, None]) & (d <= t)).any(axis=1))
        if not ok_rows:
            return False
        return bool(np.all(((l1[:, None] >= l2[None, :]) & (d <= t)).any(axis=0)))
    # streamed row/column scan, no |s1| x |s2| allocation
    for chunk in range(0, s1.size, 256):
        rows = s1[chunk : chunk + 256]
        d = mu1.space.distance_submatrix(rows, s2)
        if not np.all(((l2[None, :] >= l1[chunk : chunk + 256, None]) & (d <= t)).any(axis=1)):
            return False
    for chunk in range(0, s2.size, 256):
        cols = s2[chunk : chunk + 256]
        d = mu1.space.distance_submatrix(s1, cols)
        if not np.all(((l1[:, None] >= l2[None, chunk : chunk + 256]) & (d <= t)).any(axis=0)):
            return False
    return True


def _candidate_thresholds(mu1, mu2) -> np.ndarray:
    s1, s2, _, _, _ = _support_tables(mu1, mu2, with_dist=False)
    if s1.size * s2.size <= _DENSE_PAIRS:
        d = mu1.space.distance_submatrix(s1, s2)
        cands = np.unique(d)
    else:
        seen = [np.array([0.0])]
        for chunk in range(0, s1.size, 256):
            seen.append(np.unique(mu1.space.distance_submatrix(s1[chunk : chunk + 256], s2)))
        cands = np.unique(np.concatenate(seen))
    if cands.size == 0 or cands[0] != 0.0:
        cands = np.concatenate([[0.0], cands])
    return cands


def coupling_distance(mu1: IdempotentMeasure, mu2: IdempotentMeasure) -> float:
    """Bottleneck coupling distance between two measures on one space.

    Binary search over the sorted candidate thresholds (support-pair
    distances plus 0) for the smallest t whose maximal coupling satisfies
    the marginals; feasibility only depends on t through the allowed-pair
    set and grows with t.  Returns the largest distance realized in the
    support of the optimal maximal coupling, which is <= the feasible
    threshold.
    """
    _check_same_space(mu1, mu2)
    cands = _candidate_thresholds(mu1, mu2)
    lo, hi = 0, cands.size - 1
    if not coupling_feasible(mu1, mu2, float(cands[hi])):
        raise AssertionError("coupling infeasible at the maximal support distance")
    while lo < hi:
        mid = (lo + hi) // 2
        if coupling_feasible(mu1, mu2, float(cands[mid])):
            hi = mid
        else:
            lo = mid + 1
    t_star = float(cands[lo])
    # sup of d over supp(eta_t*): support pairs within t*; equals t* unless
    # the optimum is the diagonal threshold 0
    s1, s2, _, _, d = _support_tables(mu1, mu2)
    below = d[d <= t_star]
    return float(below.max()) if below.size else 0.0


def coupling_distance_levelsets(mu1: IdempotentMeasure, mu2: IdempotentMeasure) -> float:
    """Independent closed form for the coupling distance.

    Directed part: every support point x of mu1 must reach, within the
    answer, a point where lambda2 is at least lambda1(x); symmetrically for
    mu2.  The answer is the larger of the two directed worst cases.
    """
    _check_same_space(mu1, mu2)
    s1, s2, l1, l2, d = _support_tables(mu1, mu2)
    a = np.where(l2[None, :] >= l1[:, None], d, np.inf).min(axis=1).max()
    b = np.where(l1[:, None] >= l2[None, :], d, np.inf).min(axis=0).max()
    return float(max(a, b))


def coupling_distance_bruteforce(mu1: IdempotentMeasure, mu2: IdempotentMeasure) -> float:
    """Exhaustive oracle: try every subset of support pairs as a coupling.

    For each subset A of supp(mu1) x supp(mu2), restrict the pointwise-min
    density to A, test the marginal conditions, and keep the best feasible
    max-distance.  Exponential in |A|; guarded at 16 cells.
    """
    _check_same_space(mu1, mu2)
    s1, s2, l1, l2, d = _support_tables(mu1, mu2)
    n_cells = s1.size * s2.size
    if n_cells > _BRUTE_FORCE_CELLS:
        raise ValueError(f"{n_cells} support pairs exceed the brute-force bound")
    minval = np.minimum(l1[:, None], l2[None, :]).ravel()
    dist = d.ravel()
    rows = np.repeat(np.arange(s1.size), s2.size)
    cols = np.tile(np.arange(s2.size), s1.size)
    n_masks = 1 << n_cells
    include = (np.arange(n_masks)[:, None] >> np.arange(n_cells)[None, :]) & 1 == 1
    ok = np.ones(n_masks, dtype=bool)
    for x in range(s1.size):
        cells = np.flatnonzero(rows == x)
        got = np.where(include[:, cells], minval[cells][None, :], NEG_INF).max(axis=1)
        ok &= got == l1[x]
    for y in range(s2.size):
        cells = np.flatnonzero(cols == y)
        got = np.where(include[:, cells], minval[cells][None, :], NEG_INF).max(axis=1)
        ok &= got == l2[y]
    if not ok.any():
        raise AssertionError("no feasible coupling subset exists")
    max_dist = np.where(include, dist[None, :], NEG_INF).max(axis=1)
    return float(max_dist[ok].min())


# ---------------------------------------------------------------------------
# Lipschitz-dual pseudometrics
# ---------------------------------------------------------------------------

def _lipschitz_delta(l_from, l_to, d, a):
    """max_x [l_from(x) - max_y (l_to(y) - a * d(x, y))] over support tables."""
    inner = np.max(l_to[None, :] - a * d, axis=1)
    return float(np.max(l_from - inner))


def lipschitz_distance(mu1: IdempotentMeasure, mu2: IdempotentMeasure, a: float) -> float:
    """sup over a-Lipschitz f of |mu1(f) - mu2(f)|, in closed form.

    For fixed x the least a-Lipschitz function vanishing at x is the cone
    y -> -a * d(x, y); maximizing over cones gives
    max_x [lambda1(x) - max_y (lambda2(y) - a d(x, y))] and the symmetric
    term, and the larger of the two is attained.  O(n^2).
    """
    _check_same_space(mu1, mu2)
    if a <= 0:
        raise ValueError("Lipschitz bound a must be positive")
    s1, s2, l1, l2, d = _support_tables(mu1, mu2)
    value = max(_lipschitz_delta(l1, l2, d, a), _lipschitz_delta(l2, l1, d.T, a))
    return max(value, 0.0)


@dataclass
class LipschitzCertificates:
    """Two-sided validation data for the closed-form dual distance."""

    value: float            # closed form
    sampled_lower: float    # best regularized random table
    cone: TestFunction      # achieving cone witness
    cone_value: float       # |mu1(cone) - mu2(cone)|
    cone_lip: float         # measured Lipschitz constant of the cone


def lipschitz_distance_certificates(
    mu1: IdempotentMeasure,
    mu2: IdempotentMeasure,
    a: float,
    samples: int = 10_000,
    rng: np.random.Generator | None = None,
) -> LipschitzCertificates:
    """Sampled lower certificate and cone witness for the closed form.

    Random tables are replaced by their greatest a-Lipschitz minorant
    f~(x) = min_y (f(y) + a d(x, y)) (inf-convolution), so every sampled
    value is a true lower bound; the cone at the maximizing support point
    attains the closed form exactly.
    """
    _check_same_space(mu1, mu2)
    space = mu1.space
    if space.n_points > 50:
        raise ValueError("certificate sampling is limited to 50 points")
    if rng is None:
        rng = np.random.default_rng(0)
    d = space.distance_matrix()
    scale = a * max(space.diameter(), 1.0)
    f = rng.uniform(-scale, scale, size=(samples, space.n_points))
    reg = np.min(f[:, None, :] + a * d[None, :, :], axis=2)
    vals1 = np.max(mu1.density[None, :] + reg, axis=1)
    vals2 = np.max(mu2.density[None, :] + reg, axis=1)
    sampled_lower = float(np.max(np.abs(vals1 - vals2)))

    s1, s2, l1, l2, dsup = _support_tables(mu1, mu2)
    d12 = _lipschitz_delta(l1, l2, dsup, a)
    d21 = _lipschitz_delta(l2, l1, dsup.T, a)
    if d12 >= d21:
        x_star = int(s1[np.argmax(l1 - np.max(l2[None, :] - a * dsup, axis=1))])
    else:
        x_star = int(s2[np.argmax(l2 - np.max(l1[None, :] - a * dsup.T, axis=1))])
    cone = TestFunction(space, -a * space.distances_from(x_star))
    cone_value = abs(
        float(np.max(mu1.density + cone.values)) - float(np.max(mu2.density + cone.values))
    )
    return LipschitzCertificates(
        value=max(d12, d21, 0.0),
        sampled_lower=sampled_lower,
        cone=cone,
        cone_value=cone_value,
        cone_lip=cone.lipschitz_constant(),
    )


# ---------------------------------------------------------------------------
# series metrics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SeriesParams:
    """Parameters of the two-sided weighted series metric.

    alpha scales the per-term Lipschitz bounds, q the geometric weights;
    both in (0, 1).  Certifying the alpha/q contraction factor additionally
    needs alpha < q, but the metric itself is defined for any combination.
    """

    alpha: float
    q: float
    tol: float = 1e-9

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if not 0.0 < self.q < 1.0:
            raise ValueError("q must lie in (0, 1)")
        if not self.tol > 0.0:
            raise ValueError("tol must be positive")


@dataclass
class SeriesValue:
    """Truncated series value with its certified tail bound."""

    value: float
    tail_bound: float
    terms: int  # summed indices run over |n| <= terms

    def __float__(self):
        return self.value


def series_distance(
    mu1: IdempotentMeasure, mu2: IdempotentMeasure, params: SeriesParams
) -> SeriesValue:
    """Two-sided series sum_n (q^|n| / alpha^n) d_{alpha^n}(mu1, mu2).

    Each term is bounded by q^|n| * diam (the dual distance at level a is
    at most a * diam), so truncating at the least N with
    2 * diam * q^(N+1) / (1 - q) <= tol certifies the tail.  The partial
    sum is a lower estimate; the true value lies within [value,
    value + tail_bound].  Terms are accumulated in ascending |n| for
    determinism.
    """
    _check_same_space(mu1, mu2)
    diam = mu1.space.diameter()
    if diam == 0.0:
        return SeriesValue(0.0, 0.0, 0)
    q, alpha = params.q, params.alpha
    n_terms = 0
    while 2.0 * diam * q ** (n_terms + 1) / (1.0 - q) > params.tol:
        n_terms += 1
    tail = 2.0 * diam * q ** (n_terms + 1) / (1.0 - q)
    s1, s2, l1, l2, d = _support_tables(mu1, mu2)

    def term(n: int) -> float:
        a = alpha**n
        da = max(_lipschitz_delta(l1, l2, d, a), _lipschitz_delta(l2, l1, d.T, a), 0.0)
        return (q ** abs(n) / a) * da

    total = term(0)
    for k in range(1, n_terms + 1):
        total += term(-k)
        total += term(k)
    return SeriesValue(total, tail, n_terms)


def harmonic_series_distance(
    mu1: IdempotentMeasure, mu2: IdempotentMeasure, tol: float
) -> SeriesValue:
    """One-sided series sum_{n>=1} d_n(mu1, mu2) / (n 2^n).

    d_n <= n * diam bounds each term by diam / 2^n, so the tail after N
    terms is at most diam * 2^-N.
    """
    _check_same_space(mu1, mu2)
    if tol <= 0:
        raise ValueError("tol must be positive")
    diam = mu1.space.diameter()
    if diam == 0.0:
        return SeriesValue(0.0, 0.0, 0)
    n_terms = 1
    while diam * 2.0 ** (-n_terms) > tol:
        n_terms += 1
    s1, s2, l1, l2, d = _support_tables(mu1, mu2)
    total = 0.0
    for n in range(1, n_terms + 1):
        da = max(
            _lipschitz_delta(l1, l2, d, float(n)),
            _lipschitz_delta(l2, l1, d.T, float(n)),
            0.0,
        )
        total += da / (n * 2.0**n)
    return SeriesValue(total, diam * 2.0 ** (-n_terms), n_terms)


# ---------------------------------------------------------------------------
# empirical contraction driver
# ---------------------------------------------------------------------------

@dataclass
class ContractionReport:
    max_ratio: float
    pair: tuple[IdempotentMeasure, IdempotentMeasure]
    numerator: float
    denominator: float
    used: int
    skipped: int


def empirical_contraction(
    operator: Callable[[IdempotentMeasure], IdempotentMeasure],
    metric: Callable[[IdempotentMeasure, IdempotentMeasure], float],
    pairs: Sequence[tuple[IdempotentMeasure, IdempotentMeasure]],
) -> ContractionReport:
    """Largest metric(Op mu1, Op mu2) / metric(mu1, mu2) over the pairs.

    Pairs at metric distance 0 are skipped; if every pair degenerates the
    ratio is undefined and an error is raised.
    """
    if not pairs:
        raise ValueError("need at least one measure pair")
    best = None
    skipped = 0
    for mu1, mu2 in pairs:
        den = float(metric(mu1, mu2))
        if den == 0.0:
            skipped += 1
            continue
        num = float(metric(operator(mu1), operator(mu2)))
        ratio = num / den
        if best is None or ratio > best[0]:
            best = (ratio, (mu1, mu2), num, den)
    if best is None:
        raise ValueError("all pairs were at distance zero; no ratio defined")
    return ContractionReport(
        max_ratio=best[0],
        pair=best[1],
        numerator=best[2],
        denominator=best[3],
        used=len(pairs) - skipped,
        skipped=skipped,
    )
