"""Growth engine: node arrivals, prototype copying, search-link injection.

Each timestep adds exactly one node.  A user arrives with probability
``beta`` (otherwise a topic, by the fully symmetric process), picks a
same-side prototype with probability proportional to degree, copies a
uniform subset of the prototype's edges, and then, with probability
``p_search``, receives extra opposite-side links chosen by the
configured search policy.

Randomness is split across five named streams (see :mod:`searchnet.rng`)
so that a run with the search gate disabled replays the identical
arrival, prototype, and copy draws of the corresponding enabled run.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .graph import BipartiteGraph, NodeRef, ParameterError, SamplingError, Side
from .rng import EvolutionStreams

POLICY_UNIFORM = "uniform"
POLICY_DEGREE = "degree_ranked"
POLICY_SIMILARITY = "similarity_ranked"
_POLICIES = (POLICY_UNIFORM, POLICY_DEGREE, POLICY_SIMILARITY)

# give up on finding further distinct non-neighbor targets after this
# many rejected draws per requested edge (only matters on tiny graphs)
_PICK_PATIENCE = 24


@dataclass(frozen=True)
class SearchPolicy:
    """How injected edges choose their opposite-side endpoints.

    ``uniform`` draws targets uniformly at random, ``degree_ranked``
    draws them with probability proportional to degree**degree_exponent,
    and ``similarity_ranked`` weighs candidates by how many nodes they
    share with the new node's current neighborhood.
    """

    kind: str = POLICY_UNIFORM
    degree_exponent: float = 1.0

    def validate(self) -> None:
        if self.kind not in _POLICIES:
            raise ParameterError(f"unknown search policy {self.kind!r}")
        if not np.isfinite(self.degree_exponent) or self.degree_exponent < 0:
            raise ParameterError("degree_exponent must be finite and non-negative")


@dataclass
class EvolutionConfig:
    beta: float = 0.5
    p_search: float = 0.1
    c_u: int = 2
    c_t: int = 2
    search_edges_per_activation: int | None = None
    search_policy: SearchPolicy = field(default_factory=SearchPolicy)
    steps: int = 1000
    seed: int = 0

    def validate(self) -> None:
        if not 0.0 < self.beta < 1.0:
            raise ParameterError(f"beta must lie in (0,1), got {self.beta}")
        if not 0.0 <= self.p_search < 1.0:
            raise ParameterError(f"p_search must lie in [0,1), got {self.p_search}")
        if self.c_u < 1 or self.c_t < 1:
            raise ParameterError("c_u and c_t must be positive")
        if self.steps < 0:
            raise ParameterError("steps must be non-negative")
        if (
            self.search_edges_per_activation is not None
            and self.search_edges_per_activation < 1
        ):
            raise ParameterError("search_edges_per_activation must be positive")
        self.search_policy.validate()

    def copy_count(self, side: Side) -> int:
        return self.c_u if side is Side.USER else self.c_t

    def search_count(self, side: Side) -> int:
        if self.search_edges_per_activation is not None:
            return self.search_edges_per_activation
        return self.copy_count(side)

    def without_engine(self) -> "EvolutionConfig":
        return replace(self, p_search=0.0)


@dataclass(slots=True)
class StepReport:
    """Trace record for one evolution step.

    ``copied_edges`` and ``search_edges`` hold opposite-side node
    indexes (the new node is the shared endpoint of every listed edge).
    """

    time: int
    arrival_side: Side
    new_node: NodeRef
    prototype: NodeRef
    copied_edges: list[int]
    search_edges: list[int]


@dataclass
class EvolutionTrace:
    steps: int = 0
    users_added: int = 0
    topics_added: int = 0
    edges_added: int = 0
    search_activations: int = 0
    reports: list[StepReport] = field(default_factory=list)


class ObserverError(RuntimeError):
    """An observer callback raised during a run; carries the step index."""

    def __init__(self, step: int, original: BaseException):
        super().__init__(f"observer failed at step {step}: {original!r}")
        self.step = step


def _choose_copy_positions(deg: int, want: int, rng: np.random.Generator) -> range | list[int]:
    """Distinct adjacency positions, uniform without replacement.

    Consumes zero draws when the whole list is taken; otherwise draws
    positions with rejection (documented draw semantics, mirrored by the
    straight-line test oracle).
    """
    if want >= deg:
        return range(deg)
    chosen: list[int] = []
    seen = set()
    while len(chosen) < want:
        j = int(rng.integers(0, deg))
        if j not in seen:
            seen.add(j)
            chosen.append(j)
    return chosen


def _draw_search_targets(
    graph: BipartiteGraph,
    target_side: Side,
    exclude: set[int],
    want: int,
    policy: SearchPolicy,
    rng: np.random.Generator,
) -> list[int]:
    """Distinct opposite-side targets per the policy, best effort.

    Existing neighbors are excluded; on graphs too small to supply
    ``want`` distinct candidates the result is short.
    """
    count = graph.num_nodes(target_side)
    if count <= len(exclude):
        return []
    picked: list[int] = []
    if policy.kind == POLICY_UNIFORM:
        budget = _PICK_PATIENCE * want
        while len(picked) < want and budget > 0:
            budget -= 1
            cand = int(rng.integers(0, count))
            if cand not in exclude:
                exclude.add(cand)
                picked.append(cand)
        return picked
    if policy.kind == POLICY_DEGREE and policy.degree_exponent == 1.0:
        index = graph.degree_index(target_side)
        budget = _PICK_PATIENCE * want
        while len(picked) < want and budget > 0:
            budget -= 1
            cand = index.sample(rng)
            if cand not in exclude:
                exclude.add(cand)
                picked.append(cand)
        return picked
    if policy.kind == POLICY_DEGREE:
        weights = graph.degrees(target_side).astype(np.float64) ** policy.degree_exponent
        weights[list(exclude)] = 0.0
        return _weighted_picks(weights, want, rng)
    # similarity_ranked: candidate weight = number of distinct same-side
    # nodes shared between the candidate and the new node's neighborhood;
    # falls back to uniform when nothing overlaps yet
    new_side = target_side.other
    bridge: set[int] = set()
    for nbr in exclude:
        bridge.update(graph.neighbors(target_side, nbr))
    weights = np.zeros(count, dtype=np.float64)
    for mid in sorted(bridge):
        for cand in graph.neighbors(new_side, mid):
            if cand not in exclude:
                weights[cand] += 1.0
    if weights.sum() <= 0:
        return _draw_search_targets(
            graph, target_side, exclude, want, SearchPolicy(POLICY_UNIFORM), rng
        )
    return _weighted_picks(weights, want, rng)


def _weighted_picks(weights: np.ndarray, want: int, rng: np.random.Generator) -> list[int]:
    picked: list[int] = []
    weights = weights.copy()
    for _ in range(want):
        total = weights.sum()
        if total <= 0:
            break
        cum = np.cumsum(weights)
        cand = int(np.searchsorted(cum, rng.random() * total, side="right"))
        cand = min(cand, len(weights) - 1)
        picked.append(cand)
        weights[cand] = 0.0
    return picked


def evolve_step(
    graph: BipartiteGraph,
    config: EvolutionConfig,
    streams: EvolutionStreams,
    time: int = 0,
) -> StepReport:
    """Apply one arrival step and report what happened.

    Requires both sides non-empty with positive total degree.  Draw
    order per step: side coin, prototype, copy choices, gate coin
    (always), then search choices only if the gate fired.
    """
    if graph.num_users == 0 or graph.num_topics == 0:
        raise SamplingError("evolution requires a non-empty seed on both sides")
    side = Side.USER if streams.side.random() < config.beta else Side.TOPIC
    proto_idx = graph.sample_index(side, streams.proto)
    proto_adj = graph.neighbors(side, proto_idx)
    deg = len(proto_adj)
    new_idx = graph.add_node(side)
    positions = _choose_copy_positions(deg, config.copy_count(side), streams.copy)
    copied = [proto_adj[j] for j in positions]
    if side is Side.USER:
        for t in copied:
            graph.add_edge(new_idx, t)
    else:
        for u in copied:
            graph.add_edge(u, new_idx)
    fired = streams.gate.random() < config.p_search
    search_targets: list[int] = []
    if fired:
        exclude = set(graph.neighbors(side, new_idx))
        search_targets = _draw_search_targets(
            graph,
            side.other,
            exclude,
            config.search_count(side),
            config.search_policy,
            streams.pick,
        )
        if side is Side.USER:
            for t in search_targets:
                graph.add_edge(new_idx, t)
        else:
            for u in search_targets:
                graph.add_edge(u, new_idx)
    return StepReport(
        time=time,
        arrival_side=side,
        new_node=NodeRef(side, new_idx),
        prototype=NodeRef(side, proto_idx),
        copied_edges=copied,
        search_edges=search_targets,
    )


def run_evolution(
    graph: BipartiteGraph,
    config: EvolutionConfig,
    observers: Sequence[Callable[[StepReport], None]] = (),
    *,
    streams: EvolutionStreams | None = None,
    replicate: int = 0,
    keep_reports: bool = True,
) -> EvolutionTrace:
    """Run ``config.steps`` arrival steps, notifying observers per step.

    Identical (config, seed, replicate) always produces an identical
    trace and final graph.  Observer exceptions abort the run with an
    :class:`ObserverError` naming the failing step.
    """
    config.validate()
    if streams is None:
        streams = EvolutionStreams.from_seed(config.seed, replicate)
    trace = EvolutionTrace()
    edges_before = graph.edge_count
    for t in range(1, config.steps + 1):
        report = evolve_step(graph, config, streams, time=t)
        trace.steps += 1
        if report.arrival_side is Side.USER:
            trace.users_added += 1
        else:
            trace.topics_added += 1
        if report.search_edges:
            trace.search_activations += 1
        if keep_reports:
            trace.reports.append(report)
        for obs in observers:
            try:
                obs(report)
            except Exception as exc:  # noqa: BLE001 - rewrapped with step index
                raise ObserverError(t, exc) from exc
    trace.edges_added = graph.edge_count - edges_before
    return trace
