"""Empirical measurement and closed-form theory values.

Covers degree histograms and power-law fitting, exact and bounded
diameter computation on the bipartite graph, the closed-form worst-case
diameters and expected route lengths for runs with/without the search
engine, and the supporting recursion limit used to sanity-check the
degree-fraction asymptotics.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from weakref import WeakKeyDictionary

import numpy as np

from .evolution import EvolutionConfig
from .graph import BipartiteGraph, ParameterError, Side
from .rng import as_generator

METHOD_REGRESSION = "loglog_regression"
METHOD_MLE = "discrete_mle"

EXACT_BFS = "exact_bfs"
DOUBLE_SWEEP = "double_sweep_bounds"

MIN_REGRESSION_POINTS = 10
MIN_TAIL_SAMPLES = 10


class FitError(ValueError):
    """Not enough tail data for a meaningful fit."""

    def __init__(self, message: str, n_tail: int):
        super().__init__(f"{message} (tail size {n_tail})")
        self.n_tail = n_tail


class ComponentTooLargeError(RuntimeError):
    """Largest component exceeds the exact-diameter threshold."""

    def __init__(self, size: int, threshold: int):
        super().__init__(
            f"largest component has {size} nodes (> {threshold}); "
            "use diameter_approx for bounds"
        )
        self.size = size
        self.threshold = threshold


# ------------------------------------------------------------------ types


@dataclass
class DegreeHistogram:
    side: Side
    counts: dict[int, int]
    total_nodes: int
    recorded_at: int = 0


@dataclass
class PowerLawFit:
    """Fitted tail exponent.

    ``alpha`` keeps its natural sign (negative for a decaying
    distribution; the MLE stores the negated positive estimate so both
    methods agree on convention).  ``quality`` is the regression R^2 or
    the MLE standard error depending on ``method``.
    """

    alpha: float
    d_min: int
    method: str
    quality: float
    n_tail: int

    @property
    def magnitude(self) -> float:
        return abs(self.alpha)


@dataclass
class DiameterReport:
    lower: int
    upper: int
    component_size: int
    method: str
    is_exact: bool

    @property
    def value(self) -> int:
        if not self.is_exact:
            raise ValueError("approximate diameter report only carries bounds")
        return self.lower


@dataclass
class RouteExpectation:
    e0: float
    n: int
    u: int
    d_max: float
    value_with_engine: float
    value_without_engine: float


# ---------------------------------------------------- CSR / BFS machinery

_csr_cache: "WeakKeyDictionary[BipartiteGraph, tuple]" = WeakKeyDictionary()


def _combined_csr(graph: BipartiteGraph):
    """CSR over the combined node set (users first, then topics)."""
    key = (graph.num_users, graph.num_topics, graph.edge_count)
    cached = _csr_cache.get(graph)
    if cached is not None and cached[0] == key:
        return cached[1], cached[2], cached[3]
    nu, nt = graph.num_users, graph.num_topics
    n = nu + nt
    indptr = np.zeros(n + 1, dtype=np.int64)
    chunks = []
    for u in range(nu):
        adj = graph.neighbors(Side.USER, u)
        indptr[u + 1] = indptr[u] + len(adj)
        chunks.append(np.asarray(adj, dtype=np.int64) + nu)
    for t in range(nt):
        adj = graph.neighbors(Side.TOPIC, t)
        indptr[nu + t + 1] = indptr[nu + t] + len(adj)
        chunks.append(np.asarray(adj, dtype=np.int64))
    indices = np.concatenate(chunks) if chunks else np.zeros(0, dtype=np.int64)
    _csr_cache[graph] = (key, indptr, indices, n)
    return indptr, indices, n


def _gather_neighbors(indptr, indices, frontier):
    starts = indptr[frontier]
    counts = indptr[frontier + 1] - starts
    total = int(counts.sum())
    if total == 0:
        return indices[:0]
    cum = np.cumsum(counts)
    within = np.arange(total, dtype=np.int64) - np.repeat(cum - counts, counts)
    return indices[np.repeat(starts, counts) + within]


def _bfs(indptr, indices, src: int, n: int) -> np.ndarray:
    """Hop distances from src; -1 marks unreachable nodes."""
    dist = np.full(n, -1, dtype=np.int32)
    dist[src] = 0
    frontier = np.array([src], dtype=np.int64)
    level = 0
    while frontier.size:
        nbrs = _gather_neighbors(indptr, indices, frontier)
        if nbrs.size == 0:
            break
        fresh = nbrs[dist[nbrs] < 0]
        if fresh.size == 0:
            break
        level += 1
        dist[fresh] = level
        frontier = np.flatnonzero(dist == level)
    return dist


def _components(indptr, indices, n: int) -> list[np.ndarray]:
    """Connected components as sorted node arrays, largest first."""
    label = np.full(n, -1, dtype=np.int64)
    n_comps = 0
    for s in range(n):
        if label[s] >= 0:
            continue
        label[s] = n_comps
        frontier = np.array([s], dtype=np.int64)
        while frontier.size:
            nbrs = _gather_neighbors(indptr, indices, frontier)
            if nbrs.size == 0:
                break
            nbrs = nbrs[label[nbrs] < 0]
            if nbrs.size == 0:
                break
            frontier = np.unique(nbrs)
            label[frontier] = n_comps
        n_comps += 1
    comps = [np.flatnonzero(label == cid) for cid in range(n_comps)]
    comps.sort(key=lambda c: (-len(c), int(c[0]) if len(c) else 0))
    return comps


def _subgraph_csr(indptr, indices, nodes: np.ndarray):
    """Reindexed CSR of a component (neighbor sets must be closed)."""
    n = len(indptr) - 1
    pos = np.full(n, -1, dtype=np.int64)
    pos[nodes] = np.arange(len(nodes), dtype=np.int64)
    counts = indptr[nodes + 1] - indptr[nodes]
    sub_indptr = np.concatenate(([0], np.cumsum(counts)))
    gathered = _gather_neighbors(indptr, indices, nodes)
    return sub_indptr, pos[gathered]


def _largest_component(graph: BipartiteGraph):
    indptr, indices, n = _combined_csr(graph)
    if n == 0:
        return None, 0
    comps = _components(indptr, indices, n)
    comp = comps[0]
    sub_indptr, sub_indices = _subgraph_csr(indptr, indices, comp)
    return (sub_indptr, sub_indices), len(comp)


# -------------------------------------------------------------- histograms


def degree_histogram(graph: BipartiteGraph, side: Side, d_floor: int = 1) -> DegreeHistogram:
    """Exact counts of side-nodes per degree, restricted to d >= d_floor."""
    counter = Counter()
    for i in range(graph.num_nodes(side)):
        d = graph.degree(side, i)
        if d >= d_floor:
            counter[d] += 1
    counts = {d: counter[d] for d in sorted(counter)}
    return DegreeHistogram(side=side, counts=counts, total_nodes=sum(counts.values()))


def fit_power_law(hist: DegreeHistogram, d_min: int, method: str = METHOD_REGRESSION) -> PowerLawFit:
    """Fit the tail d >= d_min of a degree histogram.

    Regression fits the least-squares slope of (ln d, ln count) over the
    non-empty bins; the discrete MLE uses the standard continuous
    approximation 1 + n / sum(ln(d_i / (d_min - 0.5))).
    """
    if d_min < 1:
        raise ParameterError("d_min must be at least 1")
    tail = [(d, c) for d, c in sorted(hist.counts.items()) if d >= d_min and c > 0]
    n_tail = sum(c for _, c in tail)
    if method == METHOD_REGRESSION:
        if len(tail) < MIN_REGRESSION_POINTS:
            raise FitError(
                f"regression needs >= {MIN_REGRESSION_POINTS} non-empty degree bins",
                n_tail,
            )
        x = np.log([d for d, _ in tail])
        y = np.log([c for _, c in tail])
        slope, intercept = np.polyfit(x, y, 1)
        resid = y - (slope * x + intercept)
        ss_tot = float(np.sum((y - y.mean()) ** 2))
        # ss_tot below float noise means the log-counts are constant
        r_squared = 1.0 if ss_tot <= 1e-12 else 1.0 - float(np.sum(resid**2)) / ss_tot
        return PowerLawFit(
            alpha=float(slope),
            d_min=d_min,
            method=method,
            quality=r_squared,
            n_tail=n_tail,
        )
    if method == METHOD_MLE:
        if n_tail < MIN_TAIL_SAMPLES:
            raise FitError(f"MLE needs >= {MIN_TAIL_SAMPLES} tail samples", n_tail)
        denom = sum(c * math.log(d / (d_min - 0.5)) for d, c in tail)
        magnitude = 1.0 + n_tail / denom
        std_err = (magnitude - 1.0) / math.sqrt(n_tail)
        return PowerLawFit(
            alpha=-magnitude,
            d_min=d_min,
            method=method,
            quality=std_err,
            n_tail=n_tail,
        )
    raise ParameterError(f"unknown fit method {method!r}")


def fit_record(fit: PowerLawFit) -> dict:
    """JSON-ready record for a fit (explicit sign + magnitude)."""
    return {
        "alpha": fit.alpha,
        "magnitude": fit.magnitude,
        "sign": "negative" if fit.alpha < 0 else "non-negative",
        "d_min": fit.d_min,
        "method": fit.method,
        "quality": fit.quality,
        "n_tail": fit.n_tail,
    }


def write_histogram_csv(hist: DegreeHistogram, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("degree,count\n")
        for d, c in hist.counts.items():
            fh.write(f"{d},{c}\n")


# --------------------------------------------------------------- diameters


def diameter_exact(graph: BipartiteGraph, *, max_component: int = 5000) -> DiameterReport:
    """Exact diameter of the largest connected component.

    Matches the eccentricity maximum a full all-sources BFS would
    report, but prunes sources with lower/upper eccentricity bounds so
    typical graphs need only a handful of BFS passes.
    """
    sub, size = _largest_component(graph)
    if size == 0:
        return DiameterReport(0, 0, 0, EXACT_BFS, True)
    if size > max_component:
        raise ComponentTooLargeError(size, max_component)
    if size == 1:
        return DiameterReport(0, 0, 1, EXACT_BFS, True)
    indptr, indices = sub
    value = _exact_component_diameter(indptr, indices, size)
    return DiameterReport(value, value, size, EXACT_BFS, True)


def _exact_component_diameter(indptr, indices, n: int) -> int:
    """Eccentricity-bounding diameter search (exact).

    Every BFS from v fixes ecc(v) and tightens per-node bounds
    ecc(w) in [max(d(v,w), ecc(v)-d(v,w)), ecc(v)+d(v,w)]; nodes whose
    upper bound cannot beat the best eccentricity seen are pruned.
    Worst case n BFS, typically a few dozen.
    """
    degs = indptr[1:] - indptr[:-1]
    ecc_lo = np.zeros(n, dtype=np.int32)
    ecc_hi = np.full(n, np.iinfo(np.int32).max, dtype=np.int32)
    active = np.ones(n, dtype=bool)
    lb = 0
    pick_wide = True
    v = int(np.argmax(degs))
    while True:
        dist = _bfs(indptr, indices, v, n)
        ecc = int(dist.max())
        lb = max(lb, ecc)
        np.maximum(ecc_lo, np.maximum(dist, ecc - dist), out=ecc_lo)
        np.minimum(ecc_hi, ecc + dist, out=ecc_hi)
        settled = active & (ecc_lo == ecc_hi)
        if settled.any():
            lb = max(lb, int(ecc_lo[settled].max()))
            active &= ~settled
        active &= ecc_hi > lb
        idx = np.flatnonzero(active)
        if idx.size == 0:
            return lb
        # alternate: chase a large upper bound (can raise lb) then a
        # small lower bound (tightens bounds around the center)
        if pick_wide:
            best = idx[ecc_hi[idx] == ecc_hi[idx].max()]
        else:
            best = idx[ecc_lo[idx] == ecc_lo[idx].min()]
        v = int(best[np.argmax(degs[best])])
        pick_wide = not pick_wide


def diameter_approx(
    graph: BipartiteGraph, sweeps: int = 4, rng: np.random.Generator | int = 0
) -> DiameterReport:
    """Double-sweep diameter bounds on the largest component.

    The lower bound is the best distance any sweep realized; the upper
    bound is twice the smallest observed eccentricity.  Always brackets
    the true diameter.
    """
    rng = as_generator(rng)
    sub, size = _largest_component(graph)
    if size <= 1:
        return DiameterReport(0, 0, size, DOUBLE_SWEEP, False)
    indptr, indices = sub
    lower = 0
    min_ecc = None
    for _ in range(max(1, sweeps)):
        src = int(rng.integers(0, size))
        dist1 = _bfs(indptr, indices, src, size)
        ecc1 = int(dist1.max())
        far = int(np.argmax(dist1))
        dist2 = _bfs(indptr, indices, far, size)
        ecc2 = int(dist2.max())
        lower = max(lower, ecc1, ecc2)
        worst = min(ecc1, ecc2)
        min_ecc = worst if min_ecc is None else min(min_ecc, worst)
    return DiameterReport(lower, 2 * min_ecc, size, DOUBLE_SWEEP, False)


# ------------------------------------------------------- closed-form theory


def worst_case_diameter(u: int, p_t: float, with_engine: bool) -> float:
    """Worst-case diameter bound given the topic count.

    Without injected links the bound is u + 1; with them the expected
    p_t-fraction of shortcut links lowers it to u - p_t*u + 1.
    """
    if u < 1:
        raise ParameterError("topic count must be at least 1")
    if with_engine:
        return u - p_t * u + 1.0
    return u + 1.0


def expected_route(
    e0: float, n: int, u: int, d_max: float, config: EvolutionConfig
) -> RouteExpectation:
    """Expected shortest-route mass with and without injected links.

    Unconnected pairs are charged the sentinel distance d_max (>> 1);
    the two closed forms differ by exactly (d_max - 1) * p * u * c_t.
    """
    if d_max <= 1:
        raise ParameterError("d_max must exceed 1")
    if n < 2:
        raise ParameterError("need at least two nodes")
    base = config.c_u * config.beta + config.c_t * (1.0 - config.beta)
    core = e0 + d_max * (n * (n - 1) / 2.0 - e0)
    without_engine = core - (d_max - 1.0) * base
    # subtract the injected-link term from the shared value so the two
    # results differ by exactly that term (no independent re-rounding)
    with_engine = without_engine - (d_max - 1.0) * (config.p_search * u * config.c_t)
    return RouteExpectation(
        e0=e0,
        n=n,
        u=u,
        d_max=d_max,
        value_with_engine=with_engine,
        value_without_engine=without_engine,
    )


def theoretical_degree_fraction(i: int, config: EvolutionConfig, u_term: float) -> float:
    """Limiting fraction of side-U nodes of degree i (overlay curve).

    Qualitative by construction: the injected-link correction scale
    ``u_term`` is caller-supplied, and the value is meant for curve
    overlays rather than tight assertions.
    """
    if i < config.c_u:
        raise ParameterError(f"degree {i} below the minimum {config.c_u}")
    beta = config.beta
    ratio = config.c_u * beta / (config.c_t * (1.0 - beta))
    correction = config.p_search * u_term * config.c_t
    base = config.c_u * beta + config.c_t * (1.0 - beta)
    if i == config.c_u:
        return (beta - correction) * base / (base + (1.0 - beta) * config.c_u * config.c_t)
    tail = sum(k ** (-3.0 - ratio) for k in range(config.c_t, i + 1))
    return i ** (-2.0 - ratio) + correction * (ratio + 1.0) * tail


def recursion_ratio_limit(
    b_seq, c_seq, t0: int = 1, a0: float = 0.0, horizon: int = 1_000_000
) -> float:
    """Iterate a_{t+1} = (1 - b_t/t) a_t + c_t and return a_T / T.

    ``b_seq``/``c_seq`` may be constants or callables of t.  Validates
    b_t > -1 and b_t/t <= 1 along the way.
    """
    if t0 < 1 or horizon <= t0:
        raise ParameterError("need horizon > t0 >= 1")
    b_fn = b_seq if callable(b_seq) else None
    c_fn = c_seq if callable(c_seq) else None
    if b_fn is None and float(b_seq) <= -1.0:
        raise ParameterError("recursion diverges for b <= -1")
    a = float(a0)
    if b_fn is None and c_fn is None:
        b = float(b_seq)
        c = float(c_seq)
        if b / t0 > 1.0:
            raise ParameterError(f"b/t exceeds 1 at t={t0}")
        for t in range(t0, horizon):
            a = (1.0 - b / t) * a + c
        return a / horizon
    for t in range(t0, horizon):
        b = float(b_fn(t)) if b_fn else float(b_seq)
        c = float(c_fn(t)) if c_fn else float(c_seq)
        if b <= -1.0:
            raise ParameterError(f"recursion diverges for b_t <= -1 at t={t}")
        if b / t > 1.0:
            raise ParameterError(f"b_t/t exceeds 1 at t={t}")
        a = (1.0 - b / t) * a + c
    return a / horizon
