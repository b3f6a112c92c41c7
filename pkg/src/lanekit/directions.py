"""Binned per-pixel lane directions and directed-edge resolution.

Angles are binned into 18 half-open 20-degree classes (0..17); code 18 is
background.  An undirected edge (A, B) is resolved by de-binning the field
at both anchors, taking the circular mean, and orienting the edge along the
sign of its dot product with the mean direction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import errors
from .graph import LaneGraph, LaneSegment
from .raster import BevRaster, pixel_of

__all__ = [
    "BACKGROUND_CLASS",
    "DirectionField",
    "DirectedEdgeDecision",
    "EdgeIssue",
    "canonical_angle",
    "angle_to_class",
    "class_to_angle",
    "circular_mean",
    "resolve_edge_direction",
    "direct_graph",
]

BACKGROUND_CLASS = 18
_BIN_RAD = math.radians(20.0)
TWO_PI = 2.0 * math.pi


def canonical_angle(theta: float) -> float:
    """Map any finite angle to [0, 2*pi)."""
    theta = theta % TWO_PI
    if theta >= TWO_PI:  # guard against float fold-back at the boundary
        theta -= TWO_PI
    return theta


def angle_to_class(theta_rad: float) -> int:
    """Half-open 20-degree bin index (0..17) for an angle."""
    if not math.isfinite(theta_rad):
        raise errors.ValidationError(f"angle {theta_rad} is not finite")
    k = int(canonical_angle(theta_rad) // _BIN_RAD)
    return min(k, 17)


def class_to_angle(k: int) -> float:
    """Bin-center angle in radians for class ``k``."""
    if k == BACKGROUND_CLASS:
        raise errors.BackgroundClass("class 18 is background, not an angle bin")
    if not 0 <= k <= 17:
        raise errors.ValidationError(f"direction class {k} not in 0..17")
    return (k + 0.5) * _BIN_RAD


def circular_mean(angles) -> float:
    """Direction of the sum of unit vectors, in [0, 2*pi)."""
    angles = list(angles)
    if not angles:
        raise errors.EmptyList("circular_mean of no angles")
    sx = sum(math.cos(a) for a in angles)
    sy = sum(math.sin(a) for a in angles)
    if math.hypot(sx, sy) < 1e-9:
        raise errors.MeanUndefined("resultant vector vanishes")
    return canonical_angle(math.atan2(sy, sx))


class DirectionField:
    """A u8 ``dir`` channel holding per-pixel direction classes.

    Coordinates passed to :meth:`class_at` are relative to the raster origin.
    """

    def __init__(self, raster: BevRaster, channel: str = "dir"):
        plane = raster.channel(channel)
        if plane.dtype != np.uint8:
            raise errors.ValidationError("direction channel must be u8")
        if plane.size and plane.max() > BACKGROUND_CLASS:
            raise errors.ValidationError(
                f"direction codes above {BACKGROUND_CLASS} present")
        self.raster = raster
        self.plane = plane
        self.resolution = raster.resolution_m_per_px

    def class_at(self, x_m: float, y_m: float) -> int:
        row, col = pixel_of(x_m, y_m, self.resolution,
                            self.raster.width_px, self.raster.height_px)
        return int(self.plane[row, col])


@dataclass(frozen=True)
class DirectedEdgeDecision:
    """Outcome of resolving one edge (A, B)."""

    forward: bool           # True: A -> B, False: B -> A
    mean_dir_rad: float
    confidence: float       # |cos| between mean direction and the edge vector


@dataclass(frozen=True)
class EdgeIssue:
    """Edge that could not be resolved, with the reason."""

    edge_index: int
    src: int
    dst: int
    reason: str


def resolve_edge_direction(field: DirectionField, a, b) -> DirectedEdgeDecision:
    """Orient the edge between points ``a`` and ``b`` using the field.

    The field is sampled at the pixel containing each anchor (codes are
    categorical, so no interpolation); the two de-binned angles are averaged
    on the circle and the edge is directed along the sign of the dot product
    with that mean.
    """
    ka = field.class_at(*a)
    kb = field.class_at(*b)
    if ka == BACKGROUND_CLASS:
        raise errors.BackgroundAtAnchor(a)
    if kb == BACKGROUND_CLASS:
        raise errors.BackgroundAtAnchor(b)
    try:
        mean = circular_mean([class_to_angle(ka), class_to_angle(kb)])
    except errors.MeanUndefined:
        raise errors.DirectionAmbiguous(
            "anchor directions cancel; edge orientation undefined") from None
    ex, ey = b[0] - a[0], b[1] - a[1]
    norm = math.hypot(ex, ey)
    dot = math.cos(mean) * ex + math.sin(mean) * ey
    if abs(dot) < 1e-9 * norm or norm == 0.0:
        raise errors.DirectionAmbiguous(
            f"mean direction is perpendicular to edge {a} -> {b}")
    return DirectedEdgeDecision(forward=dot > 0.0, mean_dir_rad=mean,
                                confidence=abs(dot) / norm)


def direct_graph(field: DirectionField, g: LaneGraph):
    """Resolve a direction for every undirected edge of ``g``.

    Returns (directed graph, issues).  Edges whose anchors fall on the
    background, outside the field, or yield an ambiguous direction are kept
    undirected and listed in ``issues``.
    """
    if any(e.directed for e in g.edges):
        raise errors.ValidationError("input graph already has directed edges")
    ox, oy = g.frame.origin_x_m, g.frame.origin_y_m
    edges = []
    issues = []
    for i, e in enumerate(g.edges):
        a_node, b_node = g.node(e.src), g.node(e.dst)
        a = (a_node.x_m - ox, a_node.y_m - oy)
        b = (b_node.x_m - ox, b_node.y_m - oy)
        try:
            decision = resolve_edge_direction(field, a, b)
        except (errors.BackgroundAtAnchor, errors.DirectionAmbiguous,
                errors.OutOfFrame) as exc:
            edges.append(e)
            issues.append(EdgeIssue(i, e.src, e.dst, type(exc).__name__))
            continue
        if decision.forward:
            edges.append(LaneSegment(e.src, e.dst, score=e.score, directed=True))
        else:
            edges.append(LaneSegment(e.dst, e.src, score=e.score, directed=True))
    return LaneGraph(g.nodes, edges, g.frame), issues
