"""Evaluation metrics for (ground truth, prediction) graph pairs.

APLS compares shortest-path lengths between corresponding node pairs (1 is
perfect); the symmetric Chamfer distance sums squared nearest-neighbour
distances between the two anchor point sets; F1/IoU come from rasterized
overlap; direction accuracy scores per-edge headings against the nearest
ground-truth edge.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import csgraph_from_dense, dijkstra

from . import errors
from . import _kernels
from .graph import LaneGraph
from .raster import rasterize_graph

__all__ = [
    "NodeMatching",
    "MetricCounts",
    "MetricReport",
    "EvalConfig",
    "match_nodes",
    "apls",
    "chamfer",
    "overlap_scores",
    "direction_accuracy",
    "evaluate_all",
    "mean_report",
]


@dataclass(frozen=True)
class NodeMatching:
    """Injective greedy correspondence between two node sets."""

    pairs: tuple[tuple[int, int], ...]   # (gt id, pred id)
    match_radius_m: float


@dataclass
class MetricCounts:
    gt_nodes: int = 0
    pred_nodes: int = 0
    matched_nodes: int = 0
    unmatched_gt_nodes: int = 0
    path_pairs: int = 0
    evaluated_edges: int = 0

    def to_dict(self):
        return dict(self.__dict__)


@dataclass
class MetricReport:
    apls: float
    chamfer_m2: float | None
    f1: float
    iou: float
    dir_accuracy: float
    counts: MetricCounts = field(default_factory=MetricCounts)

    def to_dict(self):
        d = {"apls": self.apls, "chamfer_m2": self.chamfer_m2, "f1": self.f1,
             "iou": self.iou, "dir_accuracy": self.dir_accuracy,
             "counts": self.counts.to_dict()}
        return d


@dataclass(frozen=True)
class EvalConfig:
    match_radius_m: float = 4.0
    resolution: float = 0.2
    lane_width_m: float = 1.8
    respect_direction: bool = False
    symmetric_apls: bool = False


def _coords(g: LaneGraph) -> np.ndarray:
    return np.asarray([(n.x_m, n.y_m) for n in g.nodes],
                      dtype=np.float64).reshape(-1, 2)


def match_nodes(gt: LaneGraph, pred: LaneGraph,
                match_radius_m: float = 4.0) -> NodeMatching:
    """Greedy matching: ground-truth nodes in id order each take the nearest
    still-unmatched predicted node within the radius (ties to the lower id)."""
    gt_nodes = sorted(gt.nodes, key=lambda n: n.id)
    pred_nodes = sorted(pred.nodes, key=lambda n: n.id)
    if not gt_nodes or not pred_nodes:
        return NodeMatching((), match_radius_m)
    pc = np.asarray([(n.x_m, n.y_m) for n in pred_nodes])
    taken = np.zeros(len(pred_nodes), dtype=bool)
    pairs = []
    for n in gt_nodes:
        d = np.hypot(pc[:, 0] - n.x_m, pc[:, 1] - n.y_m)
        d[taken] = np.inf
        j = int(np.argmin(d))
        if d[j] <= match_radius_m:
            taken[j] = True
            pairs.append((n.id, pred_nodes[j].id))
    return NodeMatching(tuple(pairs), match_radius_m)


def _path_matrix(g: LaneGraph, indices, respect_direction: bool) -> np.ndarray:
    """Shortest-path length matrix from the given node positions (by index
    into g.nodes) to every node."""
    n = len(g.nodes)
    pos = {node.id: i for i, node in enumerate(g.nodes)}
    dense = np.full((n, n), np.inf)
    for e in g.edges:
        w = g.edge_length(e)
        i, j = pos[e.src], pos[e.dst]
        dense[i, j] = min(dense[i, j], w)
        if not (respect_direction and e.directed):
            dense[j, i] = min(dense[j, i], w)
    graph = csgraph_from_dense(dense, null_value=np.inf)
    return dijkstra(graph, directed=True, indices=np.asarray(indices, dtype=np.intp))


def _apls_one_sided(gt: LaneGraph, pred: LaneGraph, match_radius_m: float,
                    respect_direction: bool):
    if not gt.nodes:
        raise errors.EmptyGroundTruth("ground truth has no nodes")
    counts = MetricCounts(gt_nodes=len(gt.nodes), pred_nodes=len(pred.nodes))
    if not pred.nodes:
        counts.unmatched_gt_nodes = len(gt.nodes)
        return 0.0, counts
    matching = match_nodes(gt, pred, match_radius_m)
    matched = dict(matching.pairs)
    counts.matched_nodes = len(matched)
    counts.unmatched_gt_nodes = len(gt.nodes) - len(matched)

    gt_ids = [n.id for n in gt.nodes]
    gt_index = {nid: i for i, nid in enumerate(gt_ids)}
    d_gt = _path_matrix(gt, range(len(gt.nodes)), respect_direction)
    pred_index = {n.id: i for i, n in enumerate(pred.nodes)}
    matched_pred_rows = sorted({pred_index[p] for p in matched.values()})
    if matched_pred_rows:
        d_pred_rows = _path_matrix(pred, matched_pred_rows, respect_direction)
        row_of = {r: k for k, r in enumerate(matched_pred_rows)}

    total = 0.0
    n_pairs = 0
    ids_sorted = sorted(gt_ids)
    for a_pos, a in enumerate(ids_sorted):
        for b in ids_sorted[a_pos + 1:]:
            d = d_gt[gt_index[a], gt_index[b]]
            if not (np.isfinite(d) and d > 0.0):
                continue
            n_pairs += 1
            pa, pb = matched.get(a), matched.get(b)
            if pa is None or pb is None:
                total += 1.0
                continue
            dp = d_pred_rows[row_of[pred_index[pa]], pred_index[pb]]
            if not np.isfinite(dp):
                total += 1.0
            else:
                total += min(1.0, abs(d - dp) / d)
    counts.path_pairs = n_pairs
    score = 1.0 if n_pairs == 0 else 1.0 - total / n_pairs
    return score, counts


def apls(gt: LaneGraph, pred: LaneGraph, match_radius_m: float = 4.0,
         respect_direction: bool = False, symmetric: bool = False) -> float:
    """Average path length similarity in [0, 1].

    Node pairs of the ground truth with a finite positive path length each
    contribute min(1, |d - d'|/d), where d' is the path between the matched
    predicted nodes; pairs with an unmatched endpoint or unreachable
    prediction contribute 1.  An empty prediction scores 0.  Path lengths
    ignore edge direction unless ``respect_direction``; ``symmetric``
    averages both evaluation directions.
    """
    score, _ = _apls_one_sided(gt, pred, match_radius_m, respect_direction)
    if symmetric:
        if not pred.nodes:
            return 0.5 * score   # reverse direction is 0 by convention
        back, _ = _apls_one_sided(pred, gt, match_radius_m, respect_direction)
        return 0.5 * (score + back)
    return score


def chamfer(x, y) -> float:
    """Symmetric Chamfer distance (m^2) between two point sets (n, 2)."""
    x = np.asarray(x, dtype=np.float64).reshape(-1, 2)
    y = np.asarray(y, dtype=np.float64).reshape(-1, 2)
    if len(x) == 0 or len(y) == 0:
        raise errors.EmptySet("chamfer distance needs two non-empty sets")
    return float(_kernels.chamfer_sq(x, y))


def overlap_scores(gt: LaneGraph, pred: LaneGraph, resolution: float = 0.2,
                   lane_width_m: float = 1.8) -> tuple[float, float]:
    """(F1, IoU) of the two graphs rendered as lane masks on the shared frame."""
    if gt.frame != pred.frame:
        raise errors.FrameMismatch(f"{gt.frame} != {pred.frame}")
    a = rasterize_graph(gt, resolution, lane_width_m).channel("lane") != 0
    b = rasterize_graph(pred, resolution, lane_width_m).channel("lane") != 0
    union = int(np.logical_or(a, b).sum())
    if union == 0:
        return 1.0, 1.0
    inter = int(np.logical_and(a, b).sum())
    f1 = 2.0 * inter / (int(a.sum()) + int(b.sum()))
    iou = inter / union
    return f1, iou


def _edge_angle(g: LaneGraph, e) -> float:
    a, b = g.node(e.src), g.node(e.dst)
    return math.atan2(b.y_m - a.y_m, b.x_m - a.x_m)


def _circular_diff(a: float, b: float) -> float:
    d = abs(a - b) % (2.0 * math.pi)
    return min(d, 2.0 * math.pi - d)


def direction_accuracy(gt: LaneGraph, pred: LaneGraph,
                       match_radius_m: float = 4.0) -> float:
    """Fraction of predicted edges whose heading is within 90 degrees of the
    nearest ground-truth edge (by midpoint distance, within the radius).

    Predicted edges left undirected, or without a match, count as incorrect.
    Exact ties on midpoint distance (crossing edges can share a midpoint)
    prefer the candidate with the closest heading, then the lowest index.
    Returns 0.0 when the prediction has no edges.
    """
    if not pred.edges:
        return 0.0
    gt_dir = [e for e in gt.edges if e.directed]
    if gt_dir:
        mids = np.asarray([[(gt.node(e.src).x_m + gt.node(e.dst).x_m) / 2.0,
                            (gt.node(e.src).y_m + gt.node(e.dst).y_m) / 2.0]
                           for e in gt_dir])
        angles = np.asarray([_edge_angle(gt, e) for e in gt_dir])
    correct = 0
    for e in pred.edges:
        if not e.directed or not gt_dir:
            continue
        a, b = pred.node(e.src), pred.node(e.dst)
        mx, my = (a.x_m + b.x_m) / 2.0, (a.y_m + b.y_m) / 2.0
        d = np.hypot(mids[:, 0] - mx, mids[:, 1] - my)
        dmin = float(d.min())
        if dmin > match_radius_m:
            continue
        heading = _edge_angle(pred, e)
        delta = min(_circular_diff(heading, float(angles[j]))
                    for j in np.flatnonzero(d == dmin))
        if delta < math.pi / 2.0:
            correct += 1
    return correct / len(pred.edges)


def evaluate_all(gt: LaneGraph, pred: LaneGraph,
                 config: EvalConfig = EvalConfig()) -> MetricReport:
    """All four metrics for one (ground truth, prediction) pair.

    The Chamfer term is None when the prediction has no nodes.
    """
    if gt.frame != pred.frame:
        raise errors.FrameMismatch(f"{gt.frame} != {pred.frame}")
    score, counts = _apls_one_sided(gt, pred, config.match_radius_m,
                                    config.respect_direction)
    if config.symmetric_apls and pred.nodes:
        back, _ = _apls_one_sided(pred, gt, config.match_radius_m,
                                  config.respect_direction)
        score = 0.5 * (score + back)
    elif config.symmetric_apls:
        score = 0.5 * score
    ch = None
    if pred.nodes and gt.nodes:
        ch = chamfer(_coords(gt), _coords(pred))
    f1, iou = overlap_scores(gt, pred, config.resolution, config.lane_width_m)
    dir_acc = direction_accuracy(gt, pred, config.match_radius_m)
    counts.evaluated_edges = len(pred.edges)
    return MetricReport(apls=score, chamfer_m2=ch, f1=f1, iou=iou,
                        dir_accuracy=dir_acc, counts=counts)


def mean_report(reports) -> dict:
    """Field-wise arithmetic mean over per-sample reports (None chamfer
    values are skipped; their count is recorded)."""
    reports = list(reports)
    if not reports:
        return {}
    chamfers = [r.chamfer_m2 for r in reports if r.chamfer_m2 is not None]
    return {
        "apls": sum(r.apls for r in reports) / len(reports),
        "chamfer_m2": (sum(chamfers) / len(chamfers)) if chamfers else None,
        "chamfer_samples": len(chamfers),
        "f1": sum(r.f1 for r in reports) / len(reports),
        "iou": sum(r.iou for r in reports) / len(reports),
        "dir_accuracy": sum(r.dir_accuracy for r in reports) / len(reports),
        "samples": len(reports),
    }
