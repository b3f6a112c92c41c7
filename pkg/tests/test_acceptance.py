"""Acceptance gate: every criterion prints one PASS line (or fails loudly).

Run with ``pytest tests/test_acceptance.py -v -s``.
"""

import math
import time

import numpy as np

from lanekit.directions import (BACKGROUND_CLASS, DirectionField,
                                angle_to_class, class_to_angle, direct_graph)
from lanekit.estimators import (b1_skeleton_graph, b2_knn_graph,
                                graph_to_proposals, load_predictions,
                                proposals_to_graph, save_predictions)
from lanekit.graph import (AnchorNode, Frame, LaneGraph, LaneSegment,
                           load_graph, resample, save_graph)
from lanekit.metrics import apls, chamfer, evaluate_all, overlap_scores
from lanekit.postprocess import filter_graph
from lanekit.projection import nearest_segment, project_to_segment
from lanekit.raster import (BevRaster, PointCloud, VehicleBox,
                            accumulate_lowest_z, encode_vehicle_layer,
                            rasterize_graph, read_bvr, write_bvr)
from lanekit.synth import LAYOUTS, SceneSpec, gen_scene

from conftest import session_elapsed
from oracles import apls_reference, chamfer_matrix_oracle, random_graph
from test_postprocess import fixture_graph

FRAME = Frame(0, 0, 51.2, 51.2)


def _report(name, detail=""):
    print(f"\nACCEPTANCE {name}: PASS {detail}")


def test_c1_metric_oracle_equivalence():
    t0 = time.monotonic()
    rng = np.random.default_rng(20_001)
    worst_apls = 0.0
    for _ in range(200):
        gt = random_graph(rng, int(rng.integers(2, 16)), FRAME, edge_prob=0.3)
        pred = random_graph(rng, int(rng.integers(0, 16)), FRAME, edge_prob=0.3)
        delta = abs(apls(gt, pred) - apls_reference(gt, pred))
        worst_apls = max(worst_apls, delta)
        assert delta <= 1e-9
    worst_ch = 0.0
    for _ in range(200):
        x = rng.uniform(-60, 60, (int(rng.integers(1, 201)), 2))
        y = rng.uniform(-60, 60, (int(rng.integers(1, 201)), 2))
        delta = abs(chamfer(x, y) - chamfer_matrix_oracle(x, y))
        worst_ch = max(worst_ch, delta)
        assert delta <= 1e-9
    for _ in range(20):
        gt = random_graph(rng, 8, Frame(0, 0, 25.6, 25.6), edge_prob=0.35)
        pred = random_graph(rng, 8, Frame(0, 0, 25.6, 25.6), edge_prob=0.35)
        f1, iou = overlap_scores(gt, pred)
        a = rasterize_graph(gt).channel("lane") != 0
        b = rasterize_graph(pred).channel("lane") != 0
        inter, union = int((a & b).sum()), int((a | b).sum())
        if union == 0:
            assert (f1, iou) == (1.0, 1.0)
        else:
            assert f1 == 2 * inter / (int(a.sum()) + int(b.sum()))
            assert iou == inter / union
    elapsed = time.monotonic() - t0
    assert elapsed < 30.0
    _report("1 metric-oracle-equivalence",
            f"(apls max |d|={worst_apls:.2e}, chamfer max |d|={worst_ch:.2e}, "
            f"{elapsed:.1f} s)")


def test_c2_perfect_prediction_identities():
    t0 = time.monotonic()
    for i in range(50):
        spec = SceneSpec(layout=LAYOUTS[i % 4], lanes_per_road=1 + i % 4,
                         seed=30_000 + i)
        sample = gen_scene(spec)
        pred = proposals_to_graph(sample.proposals, spec.frame)
        directed, issues = direct_graph(sample.dir_field, pred)
        assert not issues
        cleaned = filter_graph(directed)
        rep = evaluate_all(sample.gt, cleaned)
        assert rep.apls == 1.0
        assert rep.f1 == 1.0
        assert rep.iou == 1.0
        assert rep.chamfer_m2 == 0.0
        assert rep.dir_accuracy == 1.0
    elapsed = time.monotonic() - t0
    assert elapsed < 20.0
    _report("2 perfect-prediction-identities", f"(50 scenes, {elapsed:.1f} s)")


def test_c3_adaptive_resampling_projection():
    # printed projection case: (5,3) onto (0,0)-(10,0) lands at (5,0) exactly
    t_proj, t = project_to_segment((5.0, 3.0), (0.0, 0.0), (10.0, 0.0))
    assert t_proj == (5.0, 0.0) and t == 0.5

    rng = np.random.default_rng(40_001)
    for _ in range(1000):
        l1 = tuple(rng.uniform(-20, 20, 2))
        l2 = tuple(rng.uniform(-20, 20, 2))
        if math.hypot(l2[0] - l1[0], l2[1] - l1[1]) < 1e-9:
            continue
        p = tuple(rng.uniform(-25, 25, 2))
        t_proj, t = project_to_segment(p, l1, l2)
        dx, dy = l2[0] - l1[0], l2[1] - l1[1]
        t_ref = max(0.0, min(1.0, ((p[0] - l1[0]) * dx + (p[1] - l1[1]) * dy)
                             / (dx * dx + dy * dy)))
        assert abs(t - t_ref) <= 1e-12
        assert abs(t_proj[0] - (l1[0] + t_ref * dx)) <= 1e-12
        assert abs(t_proj[1] - (l1[1] + t_ref * dy)) <= 1e-12

    # tangential-shift invariance of the matched residual
    lane = LaneGraph([AnchorNode(0, 5, 20), AnchorNode(1, 45, 20)],
                     [LaneSegment(0, 1)], FRAME)
    for _ in range(200):
        x = float(rng.uniform(10, 40))
        off = float(rng.uniform(-3, 3))
        shift = float(rng.uniform(-2, 2))
        r0 = nearest_segment(lane, (x, 20 + off)).residual_m
        r1 = nearest_segment(lane, (x + shift, 20 + off)).residual_m
        assert abs(r0 - r1) <= 1e-9
    _report("3 adaptive-resampling-projection", "(1000 cases + invariance)")


def test_c4_direction_machinery():
    for k in range(18):
        assert angle_to_class(class_to_angle(k)) == k
    rng = np.random.default_rng(50_001)
    ten_deg = math.radians(10.0)
    for theta in rng.uniform(0, 2 * math.pi, 10_000):
        back = class_to_angle(angle_to_class(theta))
        diff = abs(back - theta) % (2 * math.pi)
        assert min(diff, 2 * math.pi - diff) <= ten_deg + 1e-12

    checked = flipped = 0
    for i, layout in enumerate(LAYOUTS):
        spec = SceneSpec(layout=layout, lanes_per_road=2, seed=50_100 + i)
        sample = gen_scene(spec)
        undirected = proposals_to_graph(sample.proposals, spec.frame)
        directed, issues = direct_graph(sample.dir_field, undirected)
        assert not issues   # every edge is non-degenerate on exact fields
        gt_pairs = {(e.src, e.dst) for e in sample.gt.edges}
        for e in directed.edges:
            assert (e.src, e.dst) in gt_pairs
            checked += 1
        plane = sample.dir_field.plane.copy()
        lane = plane != BACKGROUND_CLASS
        plane[lane] = (plane[lane] + 9) % 18
        rev_field = DirectionField(BevRaster(
            plane.shape[1], plane.shape[0], spec.resolution, [("dir", plane)]))
        reversed_graph, issues = direct_graph(rev_field, undirected)
        assert not issues
        rev_pairs = {(e.src, e.dst) for e in reversed_graph.edges}
        for src, dst in rev_pairs:
            assert (dst, src) in gt_pairs
            flipped += 1
    _report("4 direction-machinery",
            f"({checked} edges resolved, {flipped} flipped)")


def test_c5_postprocessing():
    out = filter_graph(fixture_graph())
    assert {n.id for n in out.nodes} == {0, 1, 3, 4}
    assert {(e.src, e.dst) for e in out.edges} == {(0, 1), (3, 4)}

    rng = np.random.default_rng(60_001)
    for _ in range(200):
        g = random_graph(rng, int(rng.integers(2, 14)), FRAME,
                         edge_prob=0.3, scored=True)
        once = filter_graph(g)
        assert filter_graph(once) == once
    _report("5 postprocessing", "(fixture exact + 200x idempotent)")


def test_c6_resampling():
    g = LaneGraph([AnchorNode(0, 0, 0), AnchorNode(1, 5, 0)],
                  [LaneSegment(0, 1)], FRAME)
    out = resample(g, 2.0)
    assert len(out.edges) == 3
    lengths = sorted(out.edge_length(e) for e in out.edges)
    assert all(abs(l - 5.0 / 3.0) <= 1e-12 for l in lengths)

    rng = np.random.default_rng(70_001)
    for _ in range(100):
        g = random_graph(rng, int(rng.integers(2, 12)), FRAME, edge_prob=0.3)
        out = resample(g, 2.0)
        assert all(out.edge_length(e) <= 2.0 + 1e-9 for e in out.edges)
        assert abs(out.total_length() - g.total_length()) <= 1e-9
    _report("6 resampling", "(100 graphs, 2 m bound, length preserved)")


def test_c7_baselines():
    xs = [(float(2 * i), 25.0) for i in range(10)]
    gt_chain = LaneGraph([AnchorNode(i, x, y) for i, (x, y) in enumerate(xs)],
                         [LaneSegment(i, i + 1) for i in range(9)], FRAME)
    assert apls(gt_chain, b2_knn_graph(xs, frame=FRAME)) == 1.0

    spec = SceneSpec(layout="straight", lanes_per_road=2, seed=80_001)
    sample = gen_scene(spec)
    recovered = b1_skeleton_graph(sample.centerline.channel("centerline"),
                                  threshold=1.0)
    f1, _ = overlap_scores(sample.gt, recovered)
    assert f1 >= 0.95

    img = np.zeros((41, 41), dtype=np.float32)
    img[20, 5:36] = 1.0
    img[5:36, 20] = 1.0
    plus = b1_skeleton_graph(img, 0.5)
    deg = {n.id: 0 for n in plus.nodes}
    for e in plus.edges:
        deg[e.src] += 1
        deg[e.dst] += 1
    assert sorted(deg.values()) == [1, 1, 1, 1, 4]
    _report("7 baselines", f"(b2 apls=1.0, b1 straight f1={f1:.3f}, plus-sign ok)")


def test_c8_formats():
    rng = np.random.default_rng(90_001)
    for _ in range(100):
        w, h = int(rng.integers(1, 30)), int(rng.integers(1, 30))
        channels = []
        for c in range(int(rng.integers(1, 4))):
            if rng.random() < 0.5:
                channels.append((f"c{c}", rng.integers(0, 256, (h, w),
                                                       dtype=np.uint8)))
            else:
                channels.append((f"c{c}", rng.random((h, w),
                                                     dtype=np.float32)))
        r = BevRaster(w, h, float(rng.uniform(0.05, 1.0)), channels)
        assert read_bvr(write_bvr(r)) == r

        g = random_graph(rng, int(rng.integers(1, 12)), FRAME,
                         edge_prob=0.3, scored=True)
        assert load_graph(save_graph(g)) == g
        sp = graph_to_proposals(g)
        assert load_predictions(save_predictions(sp)) == sp

    cloud = PointCloud(np.array([[0.05, 0.05, 0.1, 0.0],
                                 [0.06, 0.04, 1.5, 0.0],
                                 [0.04, 0.06, 2.0, 0.0]]))
    kept = accumulate_lowest_z(cloud, 0.2)
    assert len(kept) == 1 and kept.points[0, 2] == 0.1

    layer = encode_vehicle_layer(
        [VehicleBox(5.0, 5.0, 4.0, 2.0, heading_rad=math.pi)],
        Frame(0, 0, 10, 10), 0.2)
    inside = layer[layer != -1.0]
    assert len(inside) and np.all(inside == np.float32(0.5))
    assert layer[0, 0] == -1.0
    _report("8 formats", "(300 round trips + fixtures)")


def test_c9_wall_time_and_determinism():
    spec = SceneSpec(layout="intersection4", lanes_per_road=3, seed=99_999)
    a, b = gen_scene(spec), gen_scene(spec)
    assert save_graph(a.gt) == save_graph(b.gt)
    assert write_bvr(a.centerline) == write_bvr(b.centerline)
    assert write_bvr(a.dir_field.raster) == write_bvr(b.dir_field.raster)
    assert save_predictions(a.proposals) == save_predictions(b.proposals)
    elapsed = session_elapsed()
    assert elapsed < 120.0
    _report("9 wall-time-and-determinism", f"({elapsed:.1f} s elapsed so far)")
