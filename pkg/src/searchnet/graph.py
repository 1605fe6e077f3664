"""Bipartite user-topic graph with degree-proportional node sampling.

The graph is strictly two-sided: every edge joins a user and a topic,
adjacency is stored symmetrically on both sides, and parallel edges are
silently rejected.  Each side carries a cumulative-mass index over node
degrees so that degree-proportional sampling and degree updates both run
in O(log n).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .rng import as_generator


class Side(IntEnum):
    USER = 0
    TOPIC = 1

    @property
    def other(self) -> "Side":
        return Side(1 - int(self))


@dataclass(frozen=True)
class NodeRef:
    """A node named by (side, dense index in arrival order)."""

    side: Side
    index: int


class ParameterError(ValueError):
    """Infeasible or out-of-range model parameters."""


class SamplingError(RuntimeError):
    """Degree-proportional sampling attempted with no mass to draw from."""


class DegreeIndex:
    """Growable binary indexed tree over per-node degree masses.

    ``sample`` draws node i with probability mass(i)/total, ``add``
    shifts one node's mass; both are O(log capacity).  Appending past
    capacity doubles the tree with an O(n) rebuild (amortized O(1)).
    """

    __slots__ = ("_tree", "_mass", "_size", "_cap", "total")

    def __init__(self, capacity: int = 16):
        cap = 1
        while cap < capacity:
            cap <<= 1
        self._cap = cap
        self._tree = [0] * (cap + 1)
        self._mass: list[int] = []
        self._size = 0
        self.total = 0

    def __len__(self) -> int:
        return self._size

    def append(self, mass: int = 0) -> int:
        """Add a node with the given initial mass; returns its index."""
        if self._size == self._cap:
            self._cap <<= 1
            self._rebuild()
        self._mass.append(0)
        self._size += 1
        if mass:
            self.add(self._size - 1, mass)
        return self._size - 1

    def _rebuild(self) -> None:
        cap = self._cap
        tree = [0] * (cap + 1)
        for i, m in enumerate(self._mass, start=1):
            tree[i] += m
            j = i + (i & -i)
            if j <= cap:
                tree[j] += tree[i]
        self._tree = tree

    def add(self, index: int, delta: int) -> None:
        if not 0 <= index < self._size:
            raise IndexError(f"degree index {index} out of range")
        self._mass[index] += delta
        self.total += delta
        j = index + 1
        tree = self._tree
        cap = self._cap
        while j <= cap:
            tree[j] += delta
            j += j & -j

    def mass(self, index: int) -> int:
        return self._mass[index]

    def find(self, target: int) -> int:
        """Smallest index whose cumulative mass reaches ``target``.

        Requires 1 <= target <= total.
        """
        if not 1 <= target <= self.total:
            raise SamplingError(f"target {target} outside cumulative mass {self.total}")
        idx = 0
        rem = target
        bit = self._cap
        tree = self._tree
        while bit:
            nxt = idx + bit
            if nxt <= self._cap and tree[nxt] < rem:
                rem -= tree[nxt]
                idx = nxt
            bit >>= 1
        return idx

    def sample(self, rng: np.random.Generator) -> int:
        """Draw a node with probability proportional to its mass."""
        if self.total <= 0:
            raise SamplingError("no positive mass to sample from")
        return self.find(int(rng.integers(1, self.total + 1)))


class BipartiteGraph:
    """User-topic affiliation graph.

    Invariants maintained by every mutation: adjacency symmetric and
    duplicate-free, sum of user degrees == sum of topic degrees ==
    edge_count, and the per-side degree indexes hold each node's current
    degree as its sampling mass.
    """

    __slots__ = ("_adj", "_index", "edge_count", "meta", "__weakref__")

    def __init__(self) -> None:
        self._adj: tuple[list[list[int]], list[list[int]]] = ([], [])
        self._index = (DegreeIndex(), DegreeIndex())
        self.edge_count = 0
        self.meta: dict = {}

    # -- structure ---------------------------------------------------

    @property
    def num_users(self) -> int:
        return len(self._adj[Side.USER])

    @property
    def num_topics(self) -> int:
        return len(self._adj[Side.TOPIC])

    def num_nodes(self, side: Side) -> int:
        return len(self._adj[side])

    def add_node(self, side: Side) -> int:
        """Append a degree-0 node on ``side``; returns its index."""
        self._adj[side].append([])
        self._index[side].append(0)
        return len(self._adj[side]) - 1

    def neighbors(self, side: Side, index: int) -> list[int]:
        """The live adjacency list of a node (do not mutate)."""
        return self._adj[side][index]

    def degree(self, side: Side, index: int) -> int:
        return len(self._adj[side][index])

    def degrees(self, side: Side) -> np.ndarray:
        return np.fromiter(
            (len(a) for a in self._adj[side]), dtype=np.int64, count=self.num_nodes(side)
        )

    def total_degree(self, side: Side) -> int:
        return self._index[side].total

    def degree_index(self, side: Side) -> DegreeIndex:
        return self._index[side]

    # -- mutation ----------------------------------------------------

    def add_edge(self, user, topic) -> bool:
        """Insert the user-topic edge; returns False if already present.

        Accepts NodeRef or plain indexes.  A NodeRef on the wrong side
        raises IndexError, as does an out-of-range index.
        """
        if isinstance(user, NodeRef):
            if user.side is not Side.USER:
                raise IndexError("first endpoint must be a user reference")
            user = user.index
        if isinstance(topic, NodeRef):
            if topic.side is not Side.TOPIC:
                raise IndexError("second endpoint must be a topic reference")
            topic = topic.index
        users, topics = self._adj
        if not 0 <= user < len(users):
            raise IndexError(f"user index {user} out of range")
        if not 0 <= topic < len(topics):
            raise IndexError(f"topic index {topic} out of range")
        au = users[user]
        at = topics[topic]
        # membership test on the shorter list
        if len(au) <= len(at):
            if topic in au:
                return False
        elif user in at:
            return False
        au.append(topic)
        at.append(user)
        self._index[Side.USER].add(user, 1)
        self._index[Side.TOPIC].add(topic, 1)
        self.edge_count += 1
        return True

    # -- sampling ----------------------------------------------------

    def sample_index(self, side: Side, rng: np.random.Generator) -> int:
        """Index of a node drawn with probability degree/total_degree."""
        return self._index[side].sample(rng)

    def sample_preferential(self, side: Side, rng: np.random.Generator) -> NodeRef:
        """Node drawn with probability proportional to its degree."""
        return NodeRef(side, self.sample_index(side, rng))

    # -- misc --------------------------------------------------------

    def copy(self) -> "BipartiteGraph":
        g = BipartiteGraph()
        for side in (Side.USER, Side.TOPIC):
            for adj in self._adj[side]:
                idx = g.add_node(side)
                g._adj[side][idx] = list(adj)
                g._index[side].add(idx, len(adj))
        g.edge_count = self.edge_count
        g.meta = dict(self.meta)
        return g

    def edges(self):
        """Iterate (user, topic) pairs in insertion-independent order."""
        for u, adj in enumerate(self._adj[Side.USER]):
            for t in adj:
                yield u, t

    def __repr__(self) -> str:
        return (
            f"BipartiteGraph(users={self.num_users}, topics={self.num_topics}, "
            f"edges={self.edge_count})"
        )


def check_invariants(graph: BipartiteGraph) -> list[str]:
    """Return a list of invariant violations (empty when consistent)."""
    problems: list[str] = []
    users, topics = graph._adj
    deg_u = sum(len(a) for a in users)
    deg_t = sum(len(a) for a in topics)
    if deg_u != graph.edge_count or deg_t != graph.edge_count:
        problems.append(
            f"degree sums {deg_u}/{deg_t} disagree with edge_count {graph.edge_count}"
        )
    for side, name in ((Side.USER, "user"), (Side.TOPIC, "topic")):
        adj = graph._adj[side]
        limit = graph.num_nodes(side.other)
        index = graph._index[side]
        if len(index) != len(adj):
            problems.append(f"{name} index size {len(index)} != node count {len(adj)}")
        for i, nbrs in enumerate(adj):
            if len(set(nbrs)) != len(nbrs):
                problems.append(f"duplicate entries in {name} {i} adjacency")
            if any(not 0 <= v < limit for v in nbrs):
                problems.append(f"{name} {i} references an out-of-range neighbor")
            if index.mass(i) != len(nbrs):
                problems.append(
                    f"{name} {i} index mass {index.mass(i)} != degree {len(nbrs)}"
                )
    edge_set_u = {(u, t) for u, adj in enumerate(users) for t in adj}
    edge_set_t = {(u, t) for t, adj in enumerate(topics) for u in adj}
    if edge_set_u != edge_set_t:
        problems.append("adjacency is not symmetric between sides")
    if len(edge_set_u) != graph.edge_count:
        problems.append(
            f"distinct edge count {len(edge_set_u)} != edge_count {graph.edge_count}"
        )
    return problems


def new_seed_graph(
    num_users: int,
    num_topics: int,
    c_u: int,
    c_t: int,
    *,
    connected: bool = True,
    rng: np.random.Generator | int = 0,
) -> BipartiteGraph:
    """Build a starting graph meeting per-side minimum degrees.

    Every user ends with degree >= c_u and every topic with degree >=
    c_t.  With ``connected=True`` the nodes are first threaded onto a
    closed alternating walk (guaranteeing a single component), then
    degrees are topped up with uniformly random non-duplicate edges.
    Construction is deterministic given the rng/seed.
    """
    if num_users < 1 or num_topics < 1:
        raise ParameterError("need at least one node per side")
    if c_u < 1 or c_t < 1:
        raise ParameterError("minimum degrees must be positive")
    if c_u > num_topics:
        raise ParameterError(f"c_u={c_u} exceeds topic count {num_topics}")
    if c_t > num_users:
        raise ParameterError(f"c_t={c_t} exceeds user count {num_users}")
    rng = as_generator(rng)
    g = BipartiteGraph()
    for _ in range(num_users):
        g.add_node(Side.USER)
    for _ in range(num_topics):
        g.add_node(Side.TOPIC)
    if connected:
        walk = max(num_users, num_topics)
        for i in range(walk):
            g.add_edge(i % num_users, i % num_topics)
            g.add_edge((i + 1) % num_users, i % num_topics)
    _top_up(g, Side.USER, c_u, rng)
    _top_up(g, Side.TOPIC, c_t, rng)
    return g


def _top_up(g: BipartiteGraph, side: Side, minimum: int, rng: np.random.Generator) -> None:
    """Raise every ``side`` node to the minimum degree with random edges."""
    other_count = g.num_nodes(side.other)
    for i in range(g.num_nodes(side)):
        if g.degree(side, i) >= minimum:
            continue
        for cand in rng.permutation(other_count):
            cand = int(cand)
            if side is Side.USER:
                g.add_edge(i, cand)
            else:
                g.add_edge(cand, i)
            if g.degree(side, i) >= minimum:
                break
