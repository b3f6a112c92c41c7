"""Deterministic synthetic scenes for end-to-end verification.

Each scene provides a directed ground-truth graph resampled at 2 m, a
centerline-likelihood raster (smoothed in-lane depth), an exact-tangent
direction field, and noisy scored proposals.  Everything is a pure function
of (spec, seed); the PCG64 generator is used with one documented stream per
output kind, so runs are reproducible bit for bit.

Layouts: ``straight`` (axis-aligned multi-lane road, snapped to pixel
centers), ``curve`` (concentric circular arcs, radius drawn from [15, 40] m),
``intersection3`` / ``intersection4`` (axis-aligned crossing with through
and right-turn connections).  Opposing sides of a road travel in opposite
directions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

import numpy as np

from . import errors
from . import _kernels
from .directions import BACKGROUND_CLASS, DirectionField, angle_to_class
from .estimators import (ProposalAnchor, ProposalConnection, ScoredProposals)
from .graph import AnchorNode, Frame, LaneGraph, LaneSegment, resample
from .raster import BevRaster, distance_transform, pixel_of, rasterize_graph

__all__ = ["LAYOUTS", "NoiseSpec", "SceneSpec", "SceneSample", "gen_scene"]

LAYOUTS = ("straight", "curve", "intersection3", "intersection4")

# PCG64 stream ids, combined with the scene seed as SeedSequence([seed, stream])
_STREAM_GEOMETRY = 0
_STREAM_PERTURB = 1
_STREAM_DROP = 2
_STREAM_FALSE_POS = 3
_STREAM_SCORES = 4


@dataclass(frozen=True)
class NoiseSpec:
    anchor_sigma_m: float = 0.0
    false_positive_rate: float = 0.0
    drop_rate: float = 0.0
    score_noise: float = 0.0


@dataclass(frozen=True)
class SceneSpec:
    layout: str = "straight"
    lanes_per_road: int = 2
    lane_spacing_m: float = 3.0
    frame: Frame = Frame(0.0, 0.0, 51.2, 51.2)
    seed: int = 0
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    resolution: float = 0.2
    lane_width_m: float = 1.8
    max_spacing_m: float = 2.0
    centerline_sigma_px: float = 1.5

    def validate(self):
        if self.layout not in LAYOUTS:
            raise errors.InvalidSpec(f"unknown layout '{self.layout}'")
        if self.lanes_per_road < 1:
            raise errors.InvalidSpec("lanes_per_road must be >= 1")
        if not self.lane_spacing_m > 0:
            raise errors.InvalidSpec("lane_spacing_m must be positive")
        if self.frame.width_m <= 0 or self.frame.height_m <= 0:
            raise errors.InvalidSpec("frame must have positive extent")
        n = self.noise
        if n.anchor_sigma_m < 0 or n.score_noise < 0:
            raise errors.InvalidSpec("noise magnitudes must be >= 0")
        if not (0.0 <= n.false_positive_rate < 1.0 and 0.0 <= n.drop_rate < 1.0):
            raise errors.InvalidSpec("rates must lie in [0, 1)")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "frame" in d:
            d["frame"] = Frame(**d["frame"])
        if "noise" in d:
            d["noise"] = NoiseSpec(**d["noise"])
        return cls(**d)


@dataclass
class SceneSample:
    gt: LaneGraph
    centerline: BevRaster
    dir_field: DirectionField
    proposals: ScoredProposals


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, stream])))


def _snap_center(v: float, res: float) -> float:
    """Snap a coordinate to the nearest pixel-center line."""
    return (math.floor(v / res)) * res + res / 2.0


# --- lane centerline construction -------------------------------------------
#
# A lane is an ordered polyline in the direction of travel plus bookkeeping
# for junction links.  Lanes at non-negative perpendicular offset travel
# along the road axis; the others travel against it, so opposing sides of a
# road oppose each other.


def _offsets(n: int, spacing: float) -> list[float]:
    return [(i - (n - 1) / 2.0) * spacing for i in range(n)]


def _clip_line(cx, cy, ux, uy, frame: Frame, margin: float):
    """Liang-Barsky clip of the line (cx, cy) + t (ux, uy) to the inset frame."""
    t0, t1 = -math.inf, math.inf
    for p, q0, q1 in (
        (ux, frame.origin_x_m + margin - cx,
         frame.origin_x_m + frame.width_m - margin - cx),
        (uy, frame.origin_y_m + margin - cy,
         frame.origin_y_m + frame.height_m - margin - cy),
    ):
        if abs(p) < 1e-12:
            if q0 > 0 or q1 < 0:
                return None
            continue
        a, b = q0 / p, q1 / p
        if a > b:
            a, b = b, a
        t0, t1 = max(t0, a), min(t1, b)
    if t0 >= t1:
        return None
    return t0, t1


def _straight_lanes(spec: SceneSpec, rng) -> tuple[list[list[tuple[float, float]]], list]:
    """Horizontal lanes snapped to pixel centers (exact skeleton recovery)."""
    fr = spec.frame
    margin = 2.0 * spec.resolution
    jitter = int(rng.integers(-20, 21))
    cy = fr.origin_y_m + fr.height_m / 2.0 + jitter * spec.resolution
    lanes = []
    x0 = fr.origin_x_m + margin
    x1 = fr.origin_x_m + fr.width_m - margin
    for o in _offsets(spec.lanes_per_road, spec.lane_spacing_m):
        y = _snap_center(cy + o, spec.resolution)
        if not (fr.origin_y_m + margin <= y <= fr.origin_y_m + fr.height_m - margin):
            continue
        if o >= 0:
            lanes.append([(x0, y), (x1, y)])
        else:
            lanes.append([(x1, y), (x0, y)])
    return lanes, []


def _curve_lanes(spec: SceneSpec, rng) -> tuple[list, list]:
    """Concentric arcs through the frame; tangents are exact by construction."""
    fr = spec.frame
    margin = 2.0 * spec.resolution
    radius = float(rng.uniform(15.0, 40.0))
    cx = fr.origin_x_m + fr.width_m / 2.0
    cy = fr.origin_y_m + fr.height_m / 2.0
    ccx, ccy = cx, cy + radius   # arc center below the frame center (y down)
    lanes = []
    phi_grid = np.linspace(-math.pi / 2.0, math.pi / 2.0, 2001)
    for o in _offsets(spec.lanes_per_road, spec.lane_spacing_m):
        r = radius + o
        if r < 5.0:
            continue
        xs = ccx + r * np.sin(phi_grid)
        ys = ccy - r * np.cos(phi_grid)
        inside = ((xs >= fr.origin_x_m + margin)
                  & (xs <= fr.origin_x_m + fr.width_m - margin)
                  & (ys >= fr.origin_y_m + margin)
                  & (ys <= fr.origin_y_m + fr.height_m - margin))
        mid = len(phi_grid) // 2
        if not inside[mid]:
            continue
        lo = mid
        while lo > 0 and inside[lo - 1]:
            lo -= 1
        hi = mid
        while hi < len(phi_grid) - 1 and inside[hi + 1]:
            hi += 1
        phi_a, phi_b = float(phi_grid[lo]), float(phi_grid[hi])
        arc_len = r * (phi_b - phi_a)
        if arc_len < 4.0:
            continue
        parts = max(2, math.ceil(arc_len / spec.max_spacing_m))
        phis = np.linspace(phi_a, phi_b, parts + 1)
        pts = [(float(ccx + r * math.sin(p)), float(ccy - r * math.cos(p)))
               for p in phis]
        lanes.append(pts if o >= 0 else pts[::-1])
    return lanes, []


def _intersection_lanes(spec: SceneSpec, rng, arms4: bool):
    """Axis-aligned crossing; each lane is cut at the junction box.

    Links (by lane list position) connect entries to their own exits
    (through) and to the nearest right-turn exit of the crossing road.
    """
    fr = spec.frame
    margin = 2.0 * spec.resolution
    jitter_x = int(rng.integers(-10, 11))
    jitter_y = int(rng.integers(-10, 11))
    cx = fr.origin_x_m + fr.width_m / 2.0 + jitter_x * spec.resolution
    cy = fr.origin_y_m + fr.height_m / 2.0 + jitter_y * spec.resolution
    span = (spec.lanes_per_road - 1) * spec.lane_spacing_m
    box = span / 2.0 + 3.0
    x_lo, x_hi = fr.origin_x_m + margin, fr.origin_x_m + fr.width_m - margin
    y_lo, y_hi = fr.origin_y_m + margin, fr.origin_y_m + fr.height_m - margin
    if cx - box - x_lo < 4.0 or x_hi - cx - box < 4.0 \
            or cy - box - y_lo < 4.0 or y_hi - cy - box < 4.0:
        raise errors.InvalidSpec("junction box leaves no room for approach lanes")

    lanes: list[list[tuple[float, float]]] = []
    # per lane record: (direction unit vector, entry index or None, exit index or None)
    roads = []
    for o in _offsets(spec.lanes_per_road, spec.lane_spacing_m):
        y = cy + o
        if o >= 0:   # eastbound
            entry = [(x_lo, y), (cx - box, y)]
            exit_ = [(cx + box, y), (x_hi, y)]
            d = (1.0, 0.0)
        else:        # westbound
            entry = [(x_hi, y), (cx + box, y)]
            exit_ = [(cx - box, y), (x_lo, y)]
            d = (-1.0, 0.0)
        roads.append(("A", d, entry, exit_))
    for o in _offsets(spec.lanes_per_road, spec.lane_spacing_m):
        x = cx + o
        if o >= 0:   # southbound
            entry = [(x, y_lo), (x, cy - box)] if arms4 else None
            exit_ = [(x, cy + box), (x, y_hi)]
            d = (0.0, 1.0)
        else:        # northbound
            entry = [(x, y_hi), (x, cy + box)]
            exit_ = [(x, cy - box), (x, y_lo)] if arms4 else None
            d = (0.0, -1.0)
        roads.append(("B", d, entry, exit_))

    records = []
    for road, d, entry, exit_ in roads:
        ei = xi = None
        if entry is not None:
            lanes.append(entry)
            ei = len(lanes) - 1
        if exit_ is not None:
            lanes.append(exit_)
            xi = len(lanes) - 1
        records.append((road, d, ei, xi))

    links = []
    for road, d, ei, xi in records:
        if ei is None:
            continue
        if xi is not None:
            links.append((ei, xi))
        # right turn: (dx, dy) -> (-dy, dx) with y growing downward
        rd = (-d[1], d[0])
        best = None
        ex, ey = lanes[ei][-1]
        for road2, d2, _, xi2 in records:
            if road2 == road or xi2 is None or d2 != rd:
                continue
            sx, sy = lanes[xi2][0]
            dist = math.hypot(sx - ex, sy - ey)
            if best is None or dist < best[0]:
                best = (dist, xi2)
        if best is not None:
            links.append((ei, best[1]))
    return lanes, links


def _build_gt(spec: SceneSpec, rng) -> LaneGraph:
    if spec.layout == "straight":
        lanes, links = _straight_lanes(spec, rng)
    elif spec.layout == "curve":
        lanes, links = _curve_lanes(spec, rng)
    else:
        lanes, links = _intersection_lanes(spec, rng,
                                           arms4=spec.layout == "intersection4")
    if not lanes:
        raise errors.InvalidSpec("no lane fits inside the frame")
    nodes, edges = [], []
    starts, ends = [], []
    nid = 0
    for pts in lanes:
        ids = []
        for x, y in pts:
            nodes.append(AnchorNode(nid, x, y))
            ids.append(nid)
            nid += 1
        for a, b in zip(ids, ids[1:]):
            edges.append(LaneSegment(a, b, directed=True))
        starts.append(ids[0])
        ends.append(ids[-1])
    for i, j in links:
        edges.append(LaneSegment(ends[i], starts[j], directed=True))
    g = LaneGraph(nodes, edges, spec.frame)
    return resample(g, spec.max_spacing_m)


# --- raster outputs ------------------------------------------------------------


def _gen_centerline(spec: SceneSpec, gt: LaneGraph) -> BevRaster:
    """Centerline likelihood: smoothed depth inside the rendered lane mask
    (distance in pixels to the nearest non-lane pixel), so thresholding at a
    small positive value recovers the lane region."""
    mask = rasterize_graph(gt, spec.resolution, spec.lane_width_m).channel("lane")
    depth = distance_transform(1 - mask, gaussian_sigma_px=spec.centerline_sigma_px)
    return BevRaster(mask.shape[1], mask.shape[0], spec.resolution,
                     [("centerline", depth)])


def _gen_dir_field(spec: SceneSpec, gt: LaneGraph) -> DirectionField:
    """Exact tangent bins within the lane mask, background elsewhere.

    Each pixel takes the tangent class of its nearest segment; the pixel
    containing an anchor is forced to the tangent of the anchor's
    lowest-index incident edge, which keeps edge resolution exact at
    junctions and lane crossings.
    """
    fr = spec.frame
    h = int(round(fr.height_m / spec.resolution))
    w = int(round(fr.width_m / spec.resolution))
    segs = np.empty((len(gt.edges), 4), dtype=np.float64)
    classes = np.empty(len(gt.edges), dtype=np.uint8)
    for i, e in enumerate(gt.edges):
        a, b = gt.node(e.src), gt.node(e.dst)
        segs[i] = (a.x_m, a.y_m, b.x_m, b.y_m)
        classes[i] = angle_to_class(math.atan2(b.y_m - a.y_m, b.x_m - a.x_m))
    radius = spec.lane_width_m / 2.0
    dist2, idx = _kernels.segment_distance_field(
        segs, h, w, fr.origin_x_m, fr.origin_y_m, spec.resolution, radius)
    plane = np.full((h, w), BACKGROUND_CLASS, dtype=np.uint8)
    hit = dist2 <= radius * radius   # same predicate as rasterize_graph
    plane[hit] = classes[idx[hit]]

    first_incident: dict[int, int] = {}
    for i, e in enumerate(gt.edges):
        first_incident.setdefault(e.src, i)
        first_incident.setdefault(e.dst, i)
    for n in sorted(gt.nodes, key=lambda n: n.id):
        ei = first_incident.get(n.id)
        if ei is None:
            continue
        row, col = pixel_of(n.x_m - fr.origin_x_m, n.y_m - fr.origin_y_m,
                            spec.resolution, w, h)
        plane[row, col] = classes[ei]
    raster = BevRaster(w, h, spec.resolution, [("dir", plane)])
    return DirectionField(raster)


# --- proposals -----------------------------------------------------------------


def _gen_proposals(spec: SceneSpec, gt: LaneGraph) -> ScoredProposals:
    noise = spec.noise
    rng_pert = _rng(spec.seed, _STREAM_PERTURB)
    rng_drop = _rng(spec.seed, _STREAM_DROP)
    rng_fp = _rng(spec.seed, _STREAM_FALSE_POS)
    rng_score = _rng(spec.seed, _STREAM_SCORES)
    fr = spec.frame

    n = len(gt.nodes)
    keep = rng_drop.random(n) >= noise.drop_rate
    shift = rng_pert.standard_normal((n, 2)) * noise.anchor_sigma_m
    node_scores = np.clip(1.0 - np.abs(rng_score.standard_normal(n))
                          * noise.score_noise, 0.0, 1.0)
    anchors = []
    kept_ids = set()
    for i, node in enumerate(gt.nodes):
        if not keep[i]:
            continue
        x = min(max(node.x_m + shift[i, 0], fr.origin_x_m),
                fr.origin_x_m + fr.width_m)
        y = min(max(node.y_m + shift[i, 1], fr.origin_y_m),
                fr.origin_y_m + fr.height_m)
        anchors.append(ProposalAnchor(node.id, x, y, float(node_scores[i])))
        kept_ids.add(node.id)

    edge_scores = np.clip(1.0 - np.abs(rng_score.standard_normal(len(gt.edges)))
                          * noise.score_noise, 0.0, 1.0)
    connections = [
        ProposalConnection(e.src, e.dst, float(edge_scores[i]))
        for i, e in enumerate(gt.edges)
        if e.src in kept_ids and e.dst in kept_ids
    ]

    n_fp = int(round(n * noise.false_positive_rate))
    next_id = max((a.id for a in anchors), default=-1) + 1
    for _ in range(n_fp):
        x = fr.origin_x_m + float(rng_fp.random()) * fr.width_m
        y = fr.origin_y_m + float(rng_fp.random()) * fr.height_m
        score = 0.05 + 0.40 * float(rng_fp.random())
        anchors.append(ProposalAnchor(next_id, x, y, score))
        next_id += 1
    return ScoredProposals(tuple(anchors), tuple(connections))


def gen_scene(spec: SceneSpec) -> SceneSample:
    """Generate one scene; bit-identical for identical specs."""
    spec.validate()
    rng_geom = _rng(spec.seed, _STREAM_GEOMETRY)
    gt = _build_gt(spec, rng_geom)
    centerline = _gen_centerline(spec, gt)
    dir_field = _gen_dir_field(spec, gt)
    proposals = _gen_proposals(spec, gt)
    return SceneSample(gt, centerline, dir_field, proposals)
