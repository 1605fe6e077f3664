"""Edge-list loading and conversion into bipartite seed graphs.

Input formats: a plain two-column integer edge list ('#' starts a
comment line), or the same with a leading ``BIPARTITE`` header line, in
which case column one is a user id and column two a topic id (separate
id namespaces).  Unipartite lists can be turned bipartite by double
cover (each raw node appears once per side) or by a seeded random side
split (same-side edges dropped).
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .graph import BipartiteGraph, ParameterError, Side
from .rng import substream

STRATEGY_DIRECT = "direct_bipartite"
STRATEGY_DOUBLE_COVER = "double_cover"
STRATEGY_RANDOM_SPLIT = "random_split"
_STRATEGIES = (STRATEGY_DIRECT, STRATEGY_DOUBLE_COVER, STRATEGY_RANDOM_SPLIT)

BIPARTITE_HEADER = "BIPARTITE"

_CH_SPLIT = 0
_CH_TOP_UP = 1


class ParseError(ValueError):
    """Malformed edge-list input; carries the offending line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class EmptyInputError(ValueError):
    """The stream held no edges."""


class BipartizeError(ValueError):
    """The chosen strategy cannot produce a valid two-sided graph."""


@dataclass
class RawGraph:
    """Edge list as read, with ids densified and the mapping retained.

    For bipartite inputs the two columns use independent namespaces and
    ``raw_user_of`` / ``raw_topic_of`` map dense side-indexes back to the
    file's ids; otherwise ``raw_of`` maps the single dense namespace.
    """

    edges: list[tuple[int, int]]
    directed: bool
    bipartite: bool
    source_path: str
    raw_of: list[int] = field(default_factory=list)
    raw_user_of: list[int] = field(default_factory=list)
    raw_topic_of: list[int] = field(default_factory=list)
    self_loops_dropped: int = 0
    duplicates_dropped: int = 0

    @property
    def num_nodes(self) -> int:
        return len(self.raw_of)

    @property
    def num_edges(self) -> int:
        return len(self.edges)


@dataclass(frozen=True)
class BipartizeStrategy:
    kind: str = STRATEGY_DOUBLE_COVER
    split_fraction: float = 0.5
    seed: int = 0

    def validate(self) -> None:
        if self.kind not in _STRATEGIES:
            raise ParameterError(f"unknown bipartize strategy {self.kind!r}")
        if not 0.0 < self.split_fraction < 1.0:
            raise ParameterError("split_fraction must lie in (0,1)")


def _open_lines(source):
    if isinstance(source, (str, Path)):
        return open(source, "r", encoding="utf-8"), str(source)
    if isinstance(source, bytes):
        return io.StringIO(source.decode("utf-8")), "<bytes>"
    if isinstance(source, io.IOBase) and isinstance(source, io.BufferedIOBase):
        return io.TextIOWrapper(source, encoding="utf-8"), "<stream>"
    return source, getattr(source, "name", "<stream>")


def load_edge_list(source, *, directed: bool = False) -> RawGraph:
    """Parse whitespace-separated integer pairs, one edge per line.

    Comment lines start with '#'; blank lines are skipped.  Self-loops
    are dropped and duplicate edges deduplicated, both with counts kept
    on the result.  Raises ParseError with the line number on bad
    tokens and EmptyInputError when no edges survive.
    """
    fh, label = _open_lines(source)
    bipartite = False
    pairs: list[tuple[int, int]] = []
    self_loops = 0
    header_seen = False
    try:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            if not header_seen and not pairs and text == BIPARTITE_HEADER:
                bipartite = True
                header_seen = True
                continue
            tokens = text.split()
            if len(tokens) != 2:
                raise ParseError(f"expected two columns, got {len(tokens)}", lineno)
            try:
                a, b = int(tokens[0]), int(tokens[1])
            except ValueError as exc:
                raise ParseError(f"non-integer token in {text!r}", lineno) from exc
            if not bipartite and a == b:
                self_loops += 1
                continue
            pairs.append((a, b))
    finally:
        if isinstance(source, (str, Path)):
            fh.close()
    if not pairs:
        raise EmptyInputError(f"{label}: no edges found")

    if bipartite:
        user_ids: dict[int, int] = {}
        topic_ids: dict[int, int] = {}
        seen = set()
        edges = []
        duplicates = 0
        for a, b in pairs:
            u = user_ids.setdefault(a, len(user_ids))
            t = topic_ids.setdefault(b, len(topic_ids))
            if (u, t) in seen:
                duplicates += 1
                continue
            seen.add((u, t))
            edges.append((u, t))
        return RawGraph(
            edges=edges,
            directed=False,
            bipartite=True,
            source_path=label,
            raw_user_of=sorted(user_ids, key=user_ids.get),
            raw_topic_of=sorted(topic_ids, key=topic_ids.get),
            duplicates_dropped=duplicates,
        )

    ids: dict[int, int] = {}
    seen = set()
    edges = []
    duplicates = 0
    for a, b in pairs:
        x = ids.setdefault(a, len(ids))
        y = ids.setdefault(b, len(ids))
        key = (x, y) if directed else (min(x, y), max(x, y))
        if key in seen:
            duplicates += 1
            continue
        seen.add(key)
        edges.append((x, y))
    return RawGraph(
        edges=edges,
        directed=directed,
        bipartite=False,
        source_path=label,
        raw_of=sorted(ids, key=ids.get),
        self_loops_dropped=self_loops,
        duplicates_dropped=duplicates,
    )


def write_edge_list(raw: RawGraph, path) -> None:
    """Write a RawGraph back out with its original ids (round-trippable)."""
    with open(path, "w", encoding="utf-8") as fh:
        if raw.bipartite:
            fh.write(f"{BIPARTITE_HEADER}\n")
            for u, t in raw.edges:
                fh.write(f"{raw.raw_user_of[u]} {raw.raw_topic_of[t]}\n")
        else:
            for a, b in raw.edges:
                fh.write(f"{raw.raw_of[a]} {raw.raw_of[b]}\n")


def write_bipartite(graph: BipartiteGraph, path) -> None:
    """Write a bipartite graph in the headed two-column format.

    Node ids are the graph's dense indexes; a size comment preserves
    isolated nodes so the file round-trips exactly.
    """
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{BIPARTITE_HEADER}\n")
        fh.write(f"# users {graph.num_users} topics {graph.num_topics}\n")
        for u, t in graph.edges():
            fh.write(f"{u} {t}\n")


def read_bipartite(path) -> BipartiteGraph:
    """Load a headed bipartite file back into a graph.

    Ids are taken as dense side indexes (the write_bipartite layout);
    the size comment, when present, fixes the node counts.
    """
    nu = nt = None
    edges: list[tuple[int, int]] = []
    saw_header = False
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            if text.startswith("#"):
                parts = text.split()
                if len(parts) == 5 and parts[1] == "users" and parts[3] == "topics":
                    nu, nt = int(parts[2]), int(parts[4])
                continue
            if not saw_header:
                if text != BIPARTITE_HEADER:
                    raise ParseError("expected BIPARTITE header", lineno)
                saw_header = True
                continue
            tokens = text.split()
            if len(tokens) != 2:
                raise ParseError(f"expected two columns, got {len(tokens)}", lineno)
            try:
                edges.append((int(tokens[0]), int(tokens[1])))
            except ValueError as exc:
                raise ParseError(f"non-integer token in {text!r}", lineno) from exc
    if not edges and nu is None:
        raise EmptyInputError(f"{path}: no edges found")
    if nu is None:
        nu = max(u for u, _ in edges) + 1
        nt = max(t for _, t in edges) + 1
    g = BipartiteGraph()
    for _ in range(nu):
        g.add_node(Side.USER)
    for _ in range(nt):
        g.add_node(Side.TOPIC)
    for u, t in edges:
        g.add_edge(u, t)
    g.meta["source"] = str(path)
    return g


def bipartize(raw: RawGraph, strategy: BipartizeStrategy) -> BipartiteGraph:
    """Convert a RawGraph into a valid BipartiteGraph per the strategy.

    direct_bipartite requires side-labeled input; double_cover mirrors
    every raw node onto both sides; random_split assigns sides with a
    seeded coin and drops same-side edges (count kept in graph.meta).
    """
    strategy.validate()
    if raw.num_edges == 0:
        raise BipartizeError("raw graph has no edges")
    meta = {
        "source": raw.source_path,
        "strategy": strategy.kind,
        "raw_nodes": raw.num_nodes if not raw.bipartite else None,
        "raw_edges": raw.num_edges,
        "self_loops_dropped": raw.self_loops_dropped,
        "duplicates_dropped": raw.duplicates_dropped,
    }

    if strategy.kind == STRATEGY_DIRECT:
        if not raw.bipartite:
            raise BipartizeError("direct_bipartite needs side-labeled input")
        g = BipartiteGraph()
        for _ in raw.raw_user_of:
            g.add_node(Side.USER)
        for _ in raw.raw_topic_of:
            g.add_node(Side.TOPIC)
        for u, t in raw.edges:
            g.add_edge(u, t)
        g.meta.update(meta)
        return g

    if raw.bipartite:
        raise BipartizeError(f"{strategy.kind} expects unipartite input")

    if strategy.kind == STRATEGY_DOUBLE_COVER:
        g = BipartiteGraph()
        for _ in range(raw.num_nodes):
            g.add_node(Side.USER)
        for _ in range(raw.num_nodes):
            g.add_node(Side.TOPIC)
        for a, b in raw.edges:
            g.add_edge(a, b)
            if not raw.directed:
                g.add_edge(b, a)
        g.meta.update(meta)
        return g

    # random_split
    rng = substream(strategy.seed, _CH_SPLIT)
    to_user = rng.random(raw.num_nodes) < strategy.split_fraction
    user_pos = np.cumsum(to_user) - 1
    topic_pos = np.cumsum(~to_user) - 1
    if not to_user.any() or to_user.all():
        raise BipartizeError("random split left one side empty")
    g = BipartiteGraph()
    for _ in range(int(to_user.sum())):
        g.add_node(Side.USER)
    for _ in range(int((~to_user).sum())):
        g.add_node(Side.TOPIC)
    dropped = 0
    for a, b in raw.edges:
        if to_user[a] == to_user[b]:
            dropped += 1
            continue
        if to_user[a]:
            g.add_edge(int(user_pos[a]), int(topic_pos[b]))
        else:
            g.add_edge(int(user_pos[b]), int(topic_pos[a]))
    if g.edge_count == 0:
        raise BipartizeError("random split dropped every edge")
    g.meta.update(meta)
    g.meta["same_side_dropped"] = dropped
    g.meta["split_fraction"] = strategy.split_fraction
    g.meta["split_seed"] = strategy.seed
    return g


def seed_from_dataset(
    raw: RawGraph, strategy: BipartizeStrategy, c_u: int, c_t: int
) -> BipartiteGraph:
    """Bipartize, then top up degrees so every user has >= c_u edges and
    every topic >= c_t (uniformly random non-duplicate extras).

    The number of added edges lands in ``graph.meta['top_up_edges']``.
    """
    if c_u < 1 or c_t < 1:
        raise ParameterError("minimum degrees must be positive")
    g = bipartize(raw, strategy)
    if c_u > g.num_topics:
        raise ParameterError(f"c_u={c_u} exceeds topic count {g.num_topics}")
    if c_t > g.num_users:
        raise ParameterError(f"c_t={c_t} exceeds user count {g.num_users}")
    rng = substream(strategy.seed, _CH_TOP_UP)
    before = g.edge_count
    _top_up_side(g, Side.USER, c_u, rng)
    _top_up_side(g, Side.TOPIC, c_t, rng)
    g.meta["top_up_edges"] = g.edge_count - before
    g.meta["c_u"] = c_u
    g.meta["c_t"] = c_t
    return g


def _top_up_side(g: BipartiteGraph, side: Side, minimum: int, rng) -> None:
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
