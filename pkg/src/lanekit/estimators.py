"""Non-neural graph constructors and the external-prediction bridge.

``b2_knn_graph`` links every anchor to its two nearest neighbours;
``b1_skeleton_graph`` thins a centerline-likelihood raster to a skeleton and
reads the graph off its endpoints and junctions.  ``ScoredProposals`` is the
file format any external model must emit to be evaluated by this toolkit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import errors
from . import _kernels
from .graph import AnchorNode, Frame, LaneGraph, LaneSegment

__all__ = [
    "ProposalAnchor",
    "ProposalConnection",
    "ScoredProposals",
    "load_predictions",
    "save_predictions",
    "proposals_to_graph",
    "graph_to_proposals",
    "b2_knn_graph",
    "b1_skeleton_graph",
    "rdp",
]


@dataclass(frozen=True)
class ProposalAnchor:
    id: int
    x_m: float
    y_m: float
    score: float = 1.0


@dataclass(frozen=True)
class ProposalConnection:
    src: int
    dst: int
    score: float = 1.0


@dataclass(frozen=True)
class ScoredProposals:
    """Externally produced anchors and connection candidates with scores."""

    anchors: tuple[ProposalAnchor, ...]
    connections: tuple[ProposalConnection, ...]

    def __post_init__(self):
        ids = set()
        for a in self.anchors:
            if a.id in ids:
                raise errors.DuplicateNodeId(a.id)
            ids.add(a.id)
            if not 0.0 <= a.score <= 1.0:
                raise errors.ValidationError(f"anchor {a.id} score {a.score}")
        for c in self.connections:
            for end in (c.src, c.dst):
                if end not in ids:
                    raise errors.DanglingConnection(end)
            if not 0.0 <= c.score <= 1.0:
                raise errors.ValidationError(f"connection score {c.score}")


def load_predictions(data) -> ScoredProposals:
    """Parse a ``.lpred.json`` document."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise errors.ParseError(
            f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from None
    if not isinstance(doc, dict) or "anchors" not in doc:
        raise errors.ParseError("missing 'anchors' in predictions document")
    try:
        anchors = tuple(
            ProposalAnchor(int(a["id"]), float(a["x_m"]), float(a["y_m"]),
                           float(a.get("score", 1.0)))
            for a in doc["anchors"])
        connections = tuple(
            ProposalConnection(int(c["src"]), int(c["dst"]),
                               float(c.get("score", 1.0)))
            for c in doc.get("connections", []))
    except (KeyError, TypeError, ValueError) as exc:
        raise errors.ParseError(f"malformed predictions entry: {exc}") from None
    return ScoredProposals(anchors, connections)


def save_predictions(sp: ScoredProposals) -> bytes:
    doc = {
        "anchors": [{"id": a.id, "x_m": a.x_m, "y_m": a.y_m, "score": a.score}
                    for a in sp.anchors],
        "connections": [{"src": c.src, "dst": c.dst, "score": c.score}
                        for c in sp.connections],
    }
    return json.dumps(doc, indent=1).encode("utf-8")


def proposals_to_graph(sp: ScoredProposals, frame: Frame) -> LaneGraph:
    """Lossless conversion to an (undirected) scored lane graph."""
    nodes = [AnchorNode(a.id, a.x_m, a.y_m, a.score) for a in sp.anchors]
    edges = [LaneSegment(c.src, c.dst, score=c.score, directed=False)
             for c in sp.connections]
    return LaneGraph(nodes, edges, frame)


def graph_to_proposals(g: LaneGraph) -> ScoredProposals:
    return ScoredProposals(
        tuple(ProposalAnchor(n.id, n.x_m, n.y_m, n.score) for n in g.nodes),
        tuple(ProposalConnection(e.src, e.dst, e.score) for e in g.edges))


# --- B2: two-nearest-neighbour linking ---------------------------------------


def b2_knn_graph(anchors, frame: Frame | None = None) -> LaneGraph:
    """Connect every anchor to its min(2, n-1) nearest neighbours.

    ``anchors`` is a sequence of (x, y) points; node ids follow input order.
    Distance ties prefer the lower node id.  The edge set is the union over
    anchors, so it is invariant under input permutation.
    """
    pts = np.asarray(anchors, dtype=np.float64).reshape(-1, 2)
    n = len(pts)
    if n < 2:
        raise errors.TooFewAnchors(f"need at least 2 anchors, got {n}")
    k = min(2, n - 1)
    d2 = ((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2)
    pairs = set()
    for i in range(n):
        # sort by (distance, id); skip self
        order = sorted(j for j in range(n) if j != i)
        order.sort(key=lambda j: d2[i, j])
        for j in order[:k]:
            pairs.add((min(i, j), max(i, j)))
    if frame is None:
        x0, y0 = pts.min(axis=0)
        x1, y1 = pts.max(axis=0)
        frame = Frame(float(x0), float(y0), float(x1 - x0), float(y1 - y0))
    nodes = [AnchorNode(i, float(x), float(y)) for i, (x, y) in enumerate(pts)]
    edges = [LaneSegment(a, b) for a, b in sorted(pairs)]
    return LaneGraph(nodes, edges, frame)


# --- B1: skeleton-based extraction --------------------------------------------


def rdp(points, epsilon: float):
    """Ramer-Douglas-Peucker polyline simplification (endpoint-preserving)."""
    if len(points) < 3:
        return list(points)
    stack = [(0, len(points) - 1)]
    keep = np.zeros(len(points), dtype=bool)
    keep[0] = keep[-1] = True
    while stack:
        lo, hi = stack.pop()
        if hi - lo < 2:
            continue
        ax, ay = points[lo]
        bx, by = points[hi]
        dmax, split = -1.0, lo
        for i in range(lo + 1, hi):
            px, py = points[i]
            if (ax, ay) == (bx, by):
                d = math.hypot(px - ax, py - ay)
            else:
                d = abs((bx - ax) * (ay - py) - (ax - px) * (by - ay)) \
                    / math.hypot(bx - ax, by - ay)
            if d > dmax:
                dmax, split = d, i
        if dmax > epsilon:
            keep[split] = True
            stack.append((lo, split))
            stack.append((split, hi))
    return [p for p, k in zip(points, keep) if k]


_NB_ORTH = ((-1, 0), (0, -1), (0, 1), (1, 0))
_NB_DIAG = ((-1, -1), (-1, 1), (1, -1), (1, 1))


def _trace_paths(skel: np.ndarray):
    """Polylines of the skeleton between endpoint/junction pixels.

    Adjacency is reduced 8-connectivity: a diagonal link is ignored when an
    orthogonal skeleton pixel already joins the two (otherwise the pixels
    around a junction would all read as junctions themselves).  Node pixels
    have reduced degree != 2; paths run through degree-2 pixels.  Pure
    cycles are traced from their smallest pixel.  Returns (node_pixels,
    paths) with paths as lists of (row, col).
    """
    sk = skel != 0
    padded = np.pad(sk, 1)

    def shifted(dr, dc):
        return padded[1 + dr:sk.shape[0] + 1 + dr, 1 + dc:sk.shape[1] + 1 + dc]

    deg = np.zeros(sk.shape, dtype=np.int32)
    for dr, dc in _NB_ORTH:
        deg += shifted(dr, dc)
    for dr, dc in _NB_DIAG:
        deg += shifted(dr, dc) & ~shifted(dr, 0) & ~shifted(0, dc)
    deg[~sk] = -1
    node_px = [tuple(p) for p in np.argwhere(sk & (deg != 2))]
    node_set = set(node_px)
    consumed = set()
    seen_links = set()
    paths = []

    def at(p):
        return (0 <= p[0] < sk.shape[0] and 0 <= p[1] < sk.shape[1]
                and sk[p[0], p[1]])

    def neighbours(p):
        out = [(p[0] + dr, p[1] + dc) for dr, dc in _NB_ORTH
               if at((p[0] + dr, p[1] + dc))]
        for dr, dc in _NB_DIAG:
            q = (p[0] + dr, p[1] + dc)
            if at(q) and not at((p[0] + dr, p[1])) and not at((p[0], p[1] + dc)):
                out.append(q)
        return out

    def walk(start, first):
        path = [start, first]
        prev, cur = start, first
        while cur not in node_set:
            consumed.add(cur)
            nxt = [q for q in neighbours(cur) if q != prev]
            if not nxt:
                break
            prev, cur = cur, nxt[0]
            path.append(cur)
            if cur == start:
                break
        return path

    for p in node_px:
        for q in sorted(neighbours(p)):
            if q in node_set:
                link = (min(p, q), max(p, q))
                if p < q and link not in seen_links:
                    seen_links.add(link)
                    paths.append([p, q])
            elif q not in consumed:
                paths.append(walk(p, q))
    # pure cycles have no node pixels; seed them at their smallest pixel
    remaining = sk & (deg == 2)
    for p in node_px:
        remaining[p] = False
    for p in sorted(consumed):
        remaining[p] = False
    while remaining.any():
        seed = tuple(np.argwhere(remaining)[0])
        node_px.append(seed)
        node_set.add(seed)
        nbs = [q for q in neighbours(seed) if remaining[q] or q == seed]
        path = walk(seed, sorted(nbs)[0])
        paths.append(path)
        for q in path:
            remaining[q] = False
    return node_px, paths


def b1_skeleton_graph(centerline: np.ndarray, threshold: float,
                      rdp_epsilon_px: float = 2.0,
                      resolution_m_per_px: float = 0.2) -> LaneGraph:
    """Extract a lane graph from a centerline-likelihood raster.

    Pixels with value >= threshold are thinned to a 1-px 8-connected
    skeleton; endpoints and junctions become nodes, degree-2 runs become
    edges, and each traced polyline is simplified with tolerance
    ``rdp_epsilon_px`` (simplification vertices are added as nodes).  Node
    coordinates are skeleton pixel centers in meters.  An empty mask yields
    an empty graph.
    """
    plane = np.asarray(centerline)
    mask = (plane >= threshold).astype(np.uint8)
    h, w = mask.shape
    frame = Frame(0.0, 0.0, w * resolution_m_per_px, h * resolution_m_per_px)
    if not mask.any():
        return LaneGraph([], [], frame)
    skel = _kernels.zhang_suen(mask)
    node_px, paths = _trace_paths(skel)

    def to_m(p):
        return ((p[1] + 0.5) * resolution_m_per_px,
                (p[0] + 0.5) * resolution_m_per_px)

    ids: dict[tuple[int, int], int] = {}
    nodes = []
    for p in sorted(set(node_px)):
        ids[p] = len(nodes)
        x, y = to_m(p)
        nodes.append(AnchorNode(ids[p], x, y))
    edges = []
    seen = set()
    for path in paths:
        closed = len(path) > 2 and path[0] == path[-1]
        if closed:
            # keep the two extreme interior vertices so the cycle survives
            half = len(path) // 2
            simple = (rdp(path[:half + 1], rdp_epsilon_px)[:-1]
                      + rdp(path[half:], rdp_epsilon_px)[:-1] + [path[0]])
        else:
            simple = rdp(path, rdp_epsilon_px)
        vertex_ids = []
        for p in simple:
            if p not in ids:
                ids[p] = len(nodes)
                x, y = to_m(p)
                nodes.append(AnchorNode(ids[p], x, y))
            vertex_ids.append(ids[p])
        for a, b in zip(vertex_ids, vertex_ids[1:]):
            key = (min(a, b), max(a, b))
            if a != b and key not in seen:
                seen.add(key)
                edges.append(LaneSegment(a, b))
    return LaneGraph(nodes, edges, frame)
