"""Discrete-time rumor propagation over a frozen bipartite graph.

Users are susceptible, infectious, or recovered.  Contacts are users
sharing at least one topic (bipartite distance 2).  Per synchronous time
slot: (1) every susceptible user with k infectious contacts becomes
infectious with probability 1 - (1-lambda)^k, realized as independent
per-contact trials; (2) with the engine enabled, still-susceptible users
can additionally learn the rumor through the search channel; (3) each
previously infectious user recovers with probability mu.  Nodes infected
in a slot do not recover in that slot.  Recovered users stay aware, so
coverage m_t/n never decreases.

Randomness is keyed, not streamed: a contact trial depends only on
(seed, source, target, infection age), recovery on (seed, node, age) and
the search channel on (seed, node, slot).  Engine-on and engine-off runs
with the same seed therefore share every contact and recovery trial,
which makes the engine run a pointwise upper bound of the other -- the
search channel can only move infection times earlier.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from weakref import WeakKeyDictionary

import numpy as np
import scipy.sparse as sp

from .graph import BipartiteGraph, ParameterError, Side
from .rng import CH_SIR_INIT, KCH_CONTACT, KCH_RECOVERY, KCH_SEARCH, keyed_u01, substream

SUSCEPTIBLE = 0
INFECTIOUS = 1
RECOVERED = 2

EXPOSURE_PREVALENCE = "prevalence_scaled"
EXPOSURE_TOPIC = "topic_mediated"


@dataclass
class SirConfig:
    lambda_adj: float = 0.7
    mu: float = 0.07
    xi: float = 0.7
    initial_fraction: float = 0.01
    max_steps: int = 200
    engine_enabled: bool = True
    exposure_model: str = EXPOSURE_PREVALENCE
    p_search: float = 0.1  # only read by the topic-mediated exposure model
    seed: int = 0

    def validate(self) -> None:
        for name in ("lambda_adj", "mu", "xi", "p_search"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ParameterError(f"{name} must lie in [0,1], got {v}")
        if not 0.0 < self.initial_fraction <= 1.0:
            raise ParameterError("initial_fraction must lie in (0,1]")
        if self.max_steps < 0:
            raise ParameterError("max_steps must be non-negative")
        if self.exposure_model not in (EXPOSURE_PREVALENCE, EXPOSURE_TOPIC):
            raise ParameterError(f"unknown exposure model {self.exposure_model!r}")

    def without_engine(self) -> "SirConfig":
        return replace(self, engine_enabled=False)


@dataclass
class SirState:
    """Per-user compartment labels plus the bookkeeping for keyed draws."""

    status: np.ndarray  # int8, one of SUSCEPTIBLE/INFECTIOUS/RECOVERED
    infected_at: np.ndarray  # int32 slot of infection, -1 for never
    time: int
    aware: int  # m_t = |infectious| + |recovered|

    @property
    def n(self) -> int:
        return len(self.status)

    def counts(self) -> tuple[int, int, int]:
        s = int(np.count_nonzero(self.status == SUSCEPTIBLE))
        i = int(np.count_nonzero(self.status == INFECTIOUS))
        r = int(np.count_nonzero(self.status == RECOVERED))
        return s, i, r


@dataclass
class SirTrace:
    """Per-slot compartment counts and coverage, up to the stop slot."""

    coverage: np.ndarray
    susceptible: np.ndarray
    infectious: np.ndarray
    recovered: np.ndarray
    final_state: SirState
    steps_to_stability: int

    def coverage_padded(self, horizon: int) -> np.ndarray:
        """Coverage over slots 0..horizon (constant after the run stops)."""
        out = np.full(horizon + 1, self.coverage[-1], dtype=np.float64)
        out[: len(self.coverage)] = self.coverage
        return out

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("t,susceptible,infectious,recovered,coverage\n")
            for t in range(len(self.coverage)):
                fh.write(
                    f"{t},{int(self.susceptible[t])},{int(self.infectious[t])},"
                    f"{int(self.recovered[t])},{float(self.coverage[t])!r}\n"
                )


_contact_cache: "WeakKeyDictionary[BipartiteGraph, tuple]" = WeakKeyDictionary()


def contact_matrix(graph: BipartiteGraph) -> sp.csr_matrix:
    """Boolean user-user matrix: entry (u, w) set iff they share a topic.

    Cached per graph instance; rebuilt if the graph grew since caching.
    """
    key = (graph.num_users, graph.num_topics, graph.edge_count)
    cached = _contact_cache.get(graph)
    if cached is not None and cached[0] == key:
        return cached[1]
    nu, nt = graph.num_users, graph.num_topics
    indptr = np.zeros(nu + 1, dtype=np.int64)
    cols = []
    for u in range(nu):
        adj = graph.neighbors(Side.USER, u)
        indptr[u + 1] = indptr[u] + len(adj)
        cols.append(np.asarray(adj, dtype=np.int64))
    indices = np.concatenate(cols) if cols else np.zeros(0, dtype=np.int64)
    biadj = sp.csr_matrix(
        (np.ones(len(indices), dtype=np.int8), indices, indptr), shape=(nu, max(nt, 1))
    )
    contacts = (biadj @ biadj.T).tocsr()
    contacts.setdiag(0)
    contacts.eliminate_zeros()
    contacts.data = np.ones_like(contacts.data)
    _contact_cache[graph] = (key, contacts)
    return contacts


def rumor_coverage(state: SirState) -> float:
    """Fraction of users aware of the rumor (infectious plus recovered)."""
    return state.aware / state.n


def sir_init(graph: BipartiteGraph, config: SirConfig, rng=None) -> SirState:
    """Seed ceil(initial_fraction * n) distinct users as infectious.

    At least one user is always seeded.  The sample comes from a named
    substream of config.seed unless an explicit generator is supplied.
    """
    config.validate()
    n = graph.num_users
    if n == 0:
        raise ParameterError("rumor propagation needs at least one user")
    if rng is None:
        rng = substream(config.seed, CH_SIR_INIT)
    l0 = max(1, math.ceil(config.initial_fraction * n))
    seeds = rng.choice(n, size=l0, replace=False)
    status = np.full(n, SUSCEPTIBLE, dtype=np.int8)
    infected_at = np.full(n, -1, dtype=np.int32)
    status[seeds] = INFECTIOUS
    infected_at[seeds] = 0
    return SirState(status=status, infected_at=infected_at, time=0, aware=l0)


def sir_step(state: SirState, graph: BipartiteGraph, config: SirConfig) -> SirState:
    """Advance one synchronous slot; returns the new state.

    All trials are keyed draws (see module docstring), so the result is
    a pure function of (graph, config, state history).
    """
    contacts = contact_matrix(graph)
    t_new = state.time + 1
    status = state.status.copy()
    infected_at = state.infected_at.copy()
    inf_nodes = np.flatnonzero(state.status == INFECTIOUS)

    newly = np.zeros(state.n, dtype=bool)
    if inf_nodes.size and config.lambda_adj > 0:
        sub = contacts[inf_nodes]
        targets = sub.indices
        if targets.size:
            counts = np.diff(sub.indptr)
            sources = np.repeat(inf_nodes, counts)
            ages = t_new - state.infected_at[sources]
            hits = keyed_u01(config.seed, KCH_CONTACT, sources, targets, ages) < config.lambda_adj
            hit_targets = targets[hits]
            newly[hit_targets] = True
            newly &= state.status == SUSCEPTIBLE

    # search exposure needs active spreaders: with no infectious users the
    # slot is absorbing regardless of how many are already aware
    if config.engine_enabled and inf_nodes.size:
        still = (state.status == SUSCEPTIBLE) & ~newly
        still_idx = np.flatnonzero(still)
        if still_idx.size:
            if config.exposure_model == EXPOSURE_PREVALENCE:
                threshold = config.xi * (state.aware / state.n)
            else:
                # topic-mediated: a constant chance that a search surfaces
                # the rumor while any infectious user is affiliated anywhere
                any_indexed = any(
                    graph.degree(Side.USER, int(v)) > 0 for v in inf_nodes
                )
                threshold = config.xi * config.p_search if any_indexed else 0.0
            if threshold > 0:
                exposed = keyed_u01(config.seed, KCH_SEARCH, still_idx, t_new) < threshold
                newly[still_idx[exposed]] = True

    if inf_nodes.size and config.mu > 0:
        ages = t_new - state.infected_at[inf_nodes]
        recovering = keyed_u01(config.seed, KCH_RECOVERY, inf_nodes, ages) < config.mu
        status[inf_nodes[recovering]] = RECOVERED

    new_idx = np.flatnonzero(newly)
    status[new_idx] = INFECTIOUS
    infected_at[new_idx] = t_new
    return SirState(
        status=status,
        infected_at=infected_at,
        time=t_new,
        aware=state.aware + len(new_idx),
    )


def run_sir(graph: BipartiteGraph, config: SirConfig, rng=None) -> SirTrace:
    """Run up to max_steps slots or until no infectious users remain.

    Identical (graph, config, seed) produce identical traces.
    """
    state = sir_init(graph, config, rng)
    coverage = [rumor_coverage(state)]
    s, i, r = state.counts()
    sus, inf, rec = [s], [i], [r]
    while state.time < config.max_steps and inf[-1] > 0:
        state = sir_step(state, graph, config)
        coverage.append(rumor_coverage(state))
        s, i, r = state.counts()
        sus.append(s)
        inf.append(i)
        rec.append(r)
    cov = np.asarray(coverage)
    changed = np.flatnonzero(np.diff(cov) != 0)
    stability = int(changed[-1] + 1) if changed.size else 0
    return SirTrace(
        coverage=cov,
        susceptible=np.asarray(sus),
        infectious=np.asarray(inf),
        recovered=np.asarray(rec),
        final_state=state,
        steps_to_stability=stability,
    )
