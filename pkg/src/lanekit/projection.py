"""Adaptive ground-truth reparameterization.

Anchor proposals are orthogonally projected onto the nearest ground-truth
lane segment; the projections become the new ground-truth anchors and are
re-chained along each lane in arclength order, so a proposal's position
along the lane carries no penalty.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import errors
from .graph import AnchorNode, LaneGraph, LaneSegment, chain_decomposition

__all__ = [
    "ProjectionResult",
    "project_to_segment",
    "nearest_segment",
    "adapt_ground_truth",
]


@dataclass(frozen=True)
class ProjectionResult:
    """Foot of perpendicular of one proposal on its nearest lane segment."""

    proposal_id: int
    edge_index: int
    l1: tuple[float, float]
    l2: tuple[float, float]
    t_proj: tuple[float, float]
    arclength_t: float      # position along the segment, clamped to [0, 1]
    residual_m: float       # distance proposal -> t_proj


def project_to_segment(p, l1, l2):
    """Clamped orthogonal projection of point ``p`` onto segment [l1, l2].

    Returns (t_proj, t) with t in [0, 1].
    """
    px, py = p
    x1, y1 = l1
    x2, y2 = l2
    dx, dy = x2 - x1, y2 - y1
    l2norm = dx * dx + dy * dy
    if math.sqrt(l2norm) < 1e-12:
        raise errors.DegenerateSegment(f"segment endpoints coincide at {l1}")
    t = ((px - x1) * dx + (py - y1) * dy) / l2norm
    t = min(1.0, max(0.0, t))
    return (x1 + t * dx, y1 + t * dy), t


def nearest_segment(gt: LaneGraph, p, proposal_id: int = 0) -> ProjectionResult:
    """Projection of ``p`` with minimal residual over all edges of ``gt``.

    Ties are broken by the lowest edge index.
    """
    if not gt.edges:
        raise errors.EmptyGraph("ground-truth graph has no edges")
    best = None
    for i, e in enumerate(gt.edges):
        a, b = gt.node(e.src), gt.node(e.dst)
        l1, l2 = (a.x_m, a.y_m), (b.x_m, b.y_m)
        try:
            t_proj, t = project_to_segment(p, l1, l2)
        except errors.DegenerateSegment:
            continue
        residual = math.hypot(p[0] - t_proj[0], p[1] - t_proj[1])
        if best is None or residual < best.residual_m:
            best = ProjectionResult(proposal_id, i, l1, l2, t_proj, t, residual)
    if best is None:
        raise errors.EmptyGraph("ground-truth graph has no usable segments")
    return best


def adapt_ground_truth(gt: LaneGraph, proposals) -> LaneGraph:
    """Rebuild the ground truth from projected proposals.

    Each proposal is projected onto its nearest lane segment; proposals that
    land on the same lane (maximal chain of the ground-truth graph) are
    sorted by arclength along that lane and connected consecutively, oriented
    with the lane's direction.  Output node ids follow proposal input order.
    """
    if not gt.edges:
        raise errors.EmptyGraph("ground-truth graph has no edges")
    chains = chain_decomposition(gt)
    # edge index -> (chain number, cumulative length at edge start, walks forward)
    edge_place: dict[int, tuple[int, float, bool]] = {}
    for ci, chain in enumerate(chains):
        cum = 0.0
        for ei, u in zip(chain.edge_indices, chain.node_ids):
            e = gt.edges[ei]
            edge_place[ei] = (ci, cum, e.src == u)
            cum += gt.edge_length(e)

    nodes = []
    per_chain: dict[int, list[tuple[float, int]]] = {}
    for pid, p in enumerate(proposals):
        proj = nearest_segment(gt, p, proposal_id=pid)
        nodes.append(AnchorNode(pid, proj.t_proj[0], proj.t_proj[1]))
        ci, cum, forward = edge_place[proj.edge_index]
        seg_len = math.hypot(proj.l2[0] - proj.l1[0], proj.l2[1] - proj.l1[1])
        t = proj.arclength_t if forward else 1.0 - proj.arclength_t
        per_chain.setdefault(ci, []).append((cum + t * seg_len, pid))

    edges = []
    for ci in sorted(per_chain):
        ordered = sorted(per_chain[ci])
        directed = chains[ci].directed
        for (_, a), (_, b) in zip(ordered, ordered[1:]):
            edges.append(LaneSegment(a, b, directed=directed))
    return LaneGraph(nodes, edges, gt.frame)
