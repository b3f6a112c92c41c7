"""Four-rule false-positive filter for scored predicted graphs.

Rules run strictly in order: low-score nodes (with their incident edges),
low-score edges, over-long edges, then isolated nodes.  Comparisons are
strict, so a score exactly at a threshold survives.
"""

from __future__ import annotations

from dataclasses import dataclass

from .graph import LaneGraph

__all__ = ["PostprocessConfig", "filter_graph"]


@dataclass(frozen=True)
class PostprocessConfig:
    node_score_min: float = 0.5
    edge_score_min: float = 0.2
    max_span_fraction: float = 0.25
    # (width_m, height_m); None takes the graph's own frame
    image_extent_m: tuple[float, float] | None = None


def filter_graph(g: LaneGraph, cfg: PostprocessConfig = PostprocessConfig()) -> LaneGraph:
    """Apply the four removal rules and return the filtered graph.

    Idempotent; output node and edge sets are subsets of the input.
    """
    extent = cfg.image_extent_m or (g.frame.width_m, g.frame.height_m)
    max_span = cfg.max_span_fraction * min(extent)

    nodes = [n for n in g.nodes if not n.score < cfg.node_score_min]
    kept_ids = {n.id for n in nodes}
    edges = [e for e in g.edges if e.src in kept_ids and e.dst in kept_ids]

    edges = [e for e in edges if not e.score < cfg.edge_score_min]
    edges = [e for e in edges if not g.edge_length(e) > max_span]

    degree = {nid: 0 for nid in kept_ids}
    for e in edges:
        degree[e.src] += 1
        degree[e.dst] += 1
    nodes = [n for n in nodes if degree[n.id] > 0]
    return LaneGraph(nodes, edges, g.frame)
