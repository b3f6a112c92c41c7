"""Directed spatial lane graphs: data model, resampling, shortest paths,
chain decomposition, and the JSON document format.

Conventions: x grows with raster column (right), y grows with raster row
(down); coordinates are meters.  Angles are radians, counter-clockwise from
the +x axis, canonicalized to [0, 2*pi).  Graphs are immutable after
construction and safe to share across workers.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass

from . import errors

__all__ = [
    "AnchorNode",
    "LaneSegment",
    "Frame",
    "LaneGraph",
    "Chain",
    "resample",
    "shortest_path_len",
    "chain_decomposition",
    "save_graph",
    "load_graph",
]


@dataclass(frozen=True)
class AnchorNode:
    """A lane anchor point.  ``id`` is unique per graph, coordinates in meters."""

    id: int
    x_m: float
    y_m: float
    score: float = 1.0


@dataclass(frozen=True)
class LaneSegment:
    """A lane segment between two anchor ids.  Directed segments run src -> dst."""

    src: int
    dst: int
    score: float = 1.0
    directed: bool = False


@dataclass(frozen=True)
class Frame:
    """Axis-aligned map window in meters."""

    origin_x_m: float
    origin_y_m: float
    width_m: float
    height_m: float

    def contains(self, x: float, y: float) -> bool:
        return (self.origin_x_m <= x <= self.origin_x_m + self.width_m
                and self.origin_y_m <= y <= self.origin_y_m + self.height_m)


class LaneGraph:
    """Validated directed lane graph.

    Nodes and edges keep their construction order; "edge index" in the rest
    of the package always means the position in ``edges``.
    """

    def __init__(self, nodes, edges, frame):
        if not isinstance(frame, Frame):
            frame = Frame(*frame)
        if frame.width_m < 0 or frame.height_m < 0:
            raise errors.ValidationError("frame has negative extent")
        nodes = tuple(nodes)
        edges = tuple(edges)
        by_id: dict[int, AnchorNode] = {}
        for n in nodes:
            if n.id in by_id:
                raise errors.DuplicateNodeId(n.id)
            if not (math.isfinite(n.x_m) and math.isfinite(n.y_m)):
                raise errors.OutOfFrame(f"node {n.id} at ({n.x_m}, {n.y_m})", frame)
            if not frame.contains(n.x_m, n.y_m):
                raise errors.OutOfFrame(f"node {n.id} at ({n.x_m}, {n.y_m})", frame)
            if not 0.0 <= n.score <= 1.0:
                raise errors.ValidationError(f"node {n.id} score {n.score} not in [0, 1]")
            by_id[n.id] = n
        seen_pairs: dict[frozenset, bool] = {}
        seen_directed: set[tuple[int, int]] = set()
        for e in edges:
            if e.src == e.dst:
                raise errors.SelfLoop(e.src)
            for end in (e.src, e.dst):
                if end not in by_id:
                    raise errors.DanglingEdge(end)
            if not 0.0 <= e.score <= 1.0:
                raise errors.ValidationError(
                    f"edge ({e.src}, {e.dst}) score {e.score} not in [0, 1]")
            pair = frozenset((e.src, e.dst))
            if e.directed:
                if (e.src, e.dst) in seen_directed or seen_pairs.get(pair) is False:
                    raise errors.DuplicateEdge(e.src, e.dst)
                seen_directed.add((e.src, e.dst))
                seen_pairs[pair] = True
            else:
                if pair in seen_pairs:
                    raise errors.DuplicateEdge(e.src, e.dst)
                seen_pairs[pair] = False
        self.nodes = nodes
        self.edges = edges
        self.frame = frame
        self._by_id = by_id

    # --- lookups ---------------------------------------------------------

    def node(self, node_id: int) -> AnchorNode:
        try:
            return self._by_id[node_id]
        except KeyError:
            raise errors.UnknownNode(node_id) from None

    def has_node(self, node_id: int) -> bool:
        return node_id in self._by_id

    def edge_length(self, e: LaneSegment) -> float:
        a, b = self._by_id[e.src], self._by_id[e.dst]
        return math.hypot(b.x_m - a.x_m, b.y_m - a.y_m)

    def total_length(self) -> float:
        return sum(self.edge_length(e) for e in self.edges)

    def adjacency(self, respect_direction: bool = False) -> dict[int, list[tuple[int, float]]]:
        """id -> [(neighbour id, edge length)], honouring edge direction on request."""
        adj: dict[int, list[tuple[int, float]]] = {n.id: [] for n in self.nodes}
        for e in self.edges:
            w = self.edge_length(e)
            adj[e.src].append((e.dst, w))
            if not (respect_direction and e.directed):
                adj[e.dst].append((e.src, w))
        return adj

    def degrees(self) -> dict[int, int]:
        """Undirected degree (number of incident segments) per node id."""
        deg = {n.id: 0 for n in self.nodes}
        for e in self.edges:
            deg[e.src] += 1
            deg[e.dst] += 1
        return deg

    def is_directed(self) -> bool:
        return bool(self.edges) and all(e.directed for e in self.edges)

    # --- dunder ------------------------------------------------------------

    def __eq__(self, other):
        return (isinstance(other, LaneGraph)
                and self.frame == other.frame
                and self.nodes == other.nodes
                and self.edges == other.edges)

    def __hash__(self):
        return hash((self.frame, self.nodes, self.edges))

    def __repr__(self):
        return (f"LaneGraph({len(self.nodes)} nodes, {len(self.edges)} edges, "
                f"frame={self.frame})")


def resample(g: LaneGraph, max_spacing_m: float) -> LaneGraph:
    """Split every edge longer than ``max_spacing_m`` into equal collinear parts.

    An edge of length L becomes ceil(L / max_spacing_m) sub-segments; the
    inserted nodes get fresh sequential ids after the largest existing id.
    Edge score and directedness are inherited.
    """
    if not max_spacing_m > 0:
        raise errors.NonPositiveSpacing(f"max_spacing_m={max_spacing_m}")
    nodes = list(g.nodes)
    next_id = max((n.id for n in g.nodes), default=-1) + 1
    edges: list[LaneSegment] = []
    for e in g.edges:
        a, b = g.node(e.src), g.node(e.dst)
        length = math.hypot(b.x_m - a.x_m, b.y_m - a.y_m)
        parts = max(1, math.ceil(length / max_spacing_m))
        if parts == 1:
            edges.append(e)
            continue
        chain_ids = [e.src]
        for i in range(1, parts):
            t = i / parts
            nodes.append(AnchorNode(next_id,
                                    a.x_m + t * (b.x_m - a.x_m),
                                    a.y_m + t * (b.y_m - a.y_m)))
            chain_ids.append(next_id)
            next_id += 1
        chain_ids.append(e.dst)
        for u, v in zip(chain_ids, chain_ids[1:]):
            edges.append(LaneSegment(u, v, score=e.score, directed=e.directed))
    return LaneGraph(nodes, edges, g.frame)


def shortest_path_len(g: LaneGraph, a: int, b: int,
                      respect_direction: bool = False) -> float:
    """Minimum total Euclidean length of a path from ``a`` to ``b``.

    Returns ``math.inf`` when ``b`` is unreachable.
    """
    g.node(a), g.node(b)
    if a == b:
        return 0.0
    adj = g.adjacency(respect_direction)
    dist = {a: 0.0}
    heap = [(0.0, a)]
    while heap:
        d, u = heapq.heappop(heap)
        if u == b:
            return d
        if d > dist.get(u, math.inf):
            continue
        for v, w in adj[u]:
            nd = d + w
            if nd < dist.get(v, math.inf):
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return math.inf


@dataclass(frozen=True)
class Chain:
    """A maximal run of edges through nodes of undirected degree 2.

    ``node_ids`` lists the traversal order; ``edge_indices`` the edges walked
    (positions in ``LaneGraph.edges``).  ``directed`` is True when every edge
    in the chain is directed and consistently oriented with the traversal.
    ``closed`` marks pure cycles.
    """

    node_ids: tuple[int, ...]
    edge_indices: tuple[int, ...]
    directed: bool
    closed: bool = False


def chain_decomposition(g: LaneGraph) -> list[Chain]:
    """Decompose the graph into maximal chains between junction/terminal nodes.

    Nodes with undirected degree != 2 break chains.  Components that are pure
    cycles become a single closed chain seeded at their lowest edge index.
    Chains containing directed edges are traversed along the edge direction
    when the orientation is consistent.
    """
    incident: dict[int, list[int]] = {n.id: [] for n in g.nodes}
    for i, e in enumerate(g.edges):
        incident[e.src].append(i)
        incident[e.dst].append(i)
    deg = {nid: len(lst) for nid, lst in incident.items()}
    used = [False] * len(g.edges)
    chains: list[Chain] = []

    def walk(start: int, first_edge: int) -> Chain:
        node_ids = [start]
        edge_idx = []
        cur, ei = start, first_edge
        while True:
            used[ei] = True
            e = g.edges[ei]
            nxt = e.dst if e.src == cur else e.src
            edge_idx.append(ei)
            node_ids.append(nxt)
            cur = nxt
            if deg[cur] != 2 or cur == start:
                break
            ei = next(j for j in incident[cur] if not used[j])
        return node_ids, edge_idx

    def orient(node_ids, edge_idx, closed):
        forward = sum(1 for ei, u in zip(edge_idx, node_ids)
                      if g.edges[ei].src == u and g.edges[ei].directed)
        backward = sum(1 for ei, u in zip(edge_idx, node_ids[1:])
                       if g.edges[ei].src == u and g.edges[ei].directed)
        n_dir = sum(1 for ei in edge_idx if g.edges[ei].directed)
        if n_dir == len(edge_idx) and backward == n_dir and n_dir > 0:
            node_ids = node_ids[::-1]
            edge_idx = edge_idx[::-1]
            forward = backward
        consistent = n_dir == len(edge_idx) and forward == n_dir and n_dir > 0
        return Chain(tuple(node_ids), tuple(edge_idx), consistent, closed)

    for nid in sorted(incident):
        if deg[nid] == 2:
            continue
        for ei in incident[nid]:
            if not used[ei]:
                node_ids, edge_idx = walk(nid, ei)
                chains.append(orient(node_ids, edge_idx, closed=False))
    # leftover edges live in pure cycles
    for ei in range(len(g.edges)):
        if not used[ei]:
            node_ids, edge_idx = walk(g.edges[ei].src, ei)
            chains.append(orient(node_ids, edge_idx, closed=True))
    return chains


# --- serialization (.lgraph.json) -------------------------------------------


def save_graph(g: LaneGraph) -> bytes:
    """Serialize to the UTF-8 JSON graph document (full float precision)."""
    doc = {
        "frame": {
            "origin_x_m": g.frame.origin_x_m,
            "origin_y_m": g.frame.origin_y_m,
            "width_m": g.frame.width_m,
            "height_m": g.frame.height_m,
        },
        "nodes": [{"id": n.id, "x_m": n.x_m, "y_m": n.y_m, "score": n.score}
                  for n in g.nodes],
        "edges": [{"src": e.src, "dst": e.dst, "score": e.score,
                   "directed": e.directed} for e in g.edges],
    }
    return json.dumps(doc, indent=1).encode("utf-8")


def _require(obj, key, where, types):
    if not isinstance(obj, dict) or key not in obj:
        raise errors.ParseError(f"missing '{key}' in {where}")
    val = obj[key]
    if not isinstance(val, types) or isinstance(val, bool) and types != bool:
        raise errors.ParseError(f"bad type for '{key}' in {where}")
    return val


def load_graph(data) -> LaneGraph:
    """Parse bytes/str produced by :func:`save_graph` and validate the graph."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise errors.ParseError(
            f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from None
    fr = _require(doc, "frame", "document", dict)
    frame = Frame(
        float(_require(fr, "origin_x_m", "frame", (int, float))),
        float(_require(fr, "origin_y_m", "frame", (int, float))),
        float(_require(fr, "width_m", "frame", (int, float))),
        float(_require(fr, "height_m", "frame", (int, float))),
    )
    nodes = []
    for i, nd in enumerate(_require(doc, "nodes", "document", list)):
        where = f"nodes[{i}]"
        score = nd.get("score", 1.0) if isinstance(nd, dict) else 1.0
        if not isinstance(score, (int, float)) or isinstance(score, bool):
            raise errors.ParseError(f"bad type for 'score' in {where}")
        nodes.append(AnchorNode(
            id=_require(nd, "id", where, int),
            x_m=float(_require(nd, "x_m", where, (int, float))),
            y_m=float(_require(nd, "y_m", where, (int, float))),
            score=float(score),
        ))
    edges = []
    for i, ed in enumerate(_require(doc, "edges", "document", list)):
        where = f"edges[{i}]"
        score = ed.get("score", 1.0) if isinstance(ed, dict) else 1.0
        if not isinstance(score, (int, float)) or isinstance(score, bool):
            raise errors.ParseError(f"bad type for 'score' in {where}")
        edges.append(LaneSegment(
            src=_require(ed, "src", where, int),
            dst=_require(ed, "dst", where, int),
            score=float(score),
            directed=bool(ed.get("directed", False)),
        ))
    return LaneGraph(nodes, edges, frame)
