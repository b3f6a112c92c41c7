import math

import numpy as np
import pytest

from lanekit import errors
from lanekit.graph import AnchorNode, Frame, LaneGraph, LaneSegment
from lanekit.metrics import (apls, chamfer, direction_accuracy, evaluate_all,
                             match_nodes, mean_report, overlap_scores)
from lanekit.synth import SceneSpec, gen_scene

from oracles import apls_reference, chamfer_brute, random_graph

FRAME = Frame(0, 0, 51.2, 51.2)


def chain(coords, directed=False, frame=FRAME):
    nodes = [AnchorNode(i, x, y) for i, (x, y) in enumerate(coords)]
    edges = [LaneSegment(i, i + 1, directed=directed)
             for i in range(len(coords) - 1)]
    return LaneGraph(nodes, edges, frame)


def connected_random(rng, n):
    """Random graph plus a spanning chain so it is connected."""
    g = random_graph(rng, n, FRAME, edge_prob=0.15)
    have = {(e.src, e.dst) for e in g.edges} | {(e.dst, e.src) for e in g.edges}
    edges = list(g.edges)
    for i in range(n - 1):
        if (i, i + 1) not in have:
            edges.append(LaneSegment(i, i + 1))
    return LaneGraph(g.nodes, edges, FRAME)


class TestApls:
    def test_identity_is_one(self):
        rng = np.random.default_rng(0)
        g = connected_random(rng, 10)
        assert apls(g, g) == 1.0

    def test_empty_pred_is_zero(self):
        g = chain([(0, 0), (2, 0)])
        assert apls(g, LaneGraph([], [], FRAME)) == 0.0

    def test_chain_missing_edge_one_third(self):
        gt = chain([(0, 0), (2, 0), (4, 0)])
        pred = LaneGraph([AnchorNode(0, 0, 0), AnchorNode(1, 2, 0),
                          AnchorNode(2, 4, 0)],
                         [LaneSegment(0, 1)], FRAME)
        assert apls(gt, pred) == pytest.approx(1.0 / 3.0, abs=1e-12)

    def test_empty_gt_raises(self):
        with pytest.raises(errors.EmptyGroundTruth):
            apls(LaneGraph([], [], FRAME), chain([(0, 0), (1, 0)]))

    @pytest.mark.parametrize("seed", range(25))
    def test_matches_brute_force_reference(self, seed):
        rng = np.random.default_rng(700 + seed)
        gt = random_graph(rng, int(rng.integers(2, 15)), FRAME, edge_prob=0.3)
        pred = random_graph(rng, int(rng.integers(0, 15)), FRAME, edge_prob=0.3)
        assert apls(gt, pred) == pytest.approx(apls_reference(gt, pred), abs=1e-9)

    def test_in_unit_interval(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            gt = random_graph(rng, 8, FRAME, edge_prob=0.3)
            pred = random_graph(rng, 8, FRAME, edge_prob=0.3)
            assert 0.0 <= apls(gt, pred) <= 1.0

    def test_monotone_degradation_from_identity(self):
        rng = np.random.default_rng(4)
        gt = connected_random(rng, 9)
        edges = list(gt.edges)
        prev = apls(gt, gt)
        while edges:
            edges.pop()
            pred = LaneGraph(gt.nodes, edges, FRAME)
            cur = apls(gt, pred)
            assert cur <= prev + 1e-12
            prev = cur

    def test_symmetric_averages_directions(self):
        gt = chain([(0, 0), (2, 0), (4, 0)])
        pred = chain([(0, 0), (2, 0)])
        one = apls(gt, pred)
        back = apls(pred, gt)
        assert apls(gt, pred, symmetric=True) == pytest.approx((one + back) / 2)

    def test_greedy_matching_injective(self):
        rng = np.random.default_rng(5)
        gt = random_graph(rng, 12, FRAME, edge_prob=0.2)
        pred = random_graph(rng, 9, FRAME, edge_prob=0.2)
        m = match_nodes(gt, pred, 4.0)
        gt_ids = [a for a, _ in m.pairs]
        pred_ids = [b for _, b in m.pairs]
        assert len(set(gt_ids)) == len(gt_ids)
        assert len(set(pred_ids)) == len(pred_ids)
        for a, b in m.pairs:
            d = math.hypot(gt.node(a).x_m - pred.node(b).x_m,
                           gt.node(a).y_m - pred.node(b).y_m)
            assert d <= 4.0


class TestChamfer:
    def test_identical_sets_zero(self):
        x = np.random.default_rng(0).uniform(0, 10, (20, 2))
        assert chamfer(x, x) == 0.0

    def test_single_pair_analytic(self):
        assert chamfer([(0, 0)], [(3, 4)]) == pytest.approx(50.0)

    def test_empty_set_raises(self):
        with pytest.raises(errors.EmptySet):
            chamfer([], [(1, 1)])
        with pytest.raises(errors.EmptySet):
            chamfer([(1, 1)], [])

    @pytest.mark.parametrize("seed", range(10))
    def test_matches_brute_force(self, seed):
        rng = np.random.default_rng(800 + seed)
        x = rng.uniform(-50, 50, (int(rng.integers(1, 60)), 2))
        y = rng.uniform(-50, 50, (int(rng.integers(1, 60)), 2))
        assert chamfer(x, y) == pytest.approx(chamfer_brute(x, y), abs=1e-9)

    def test_symmetry_and_scaling(self):
        rng = np.random.default_rng(6)
        x = rng.uniform(0, 10, (30, 2))
        y = rng.uniform(0, 10, (25, 2))
        assert chamfer(x, y) == pytest.approx(chamfer(y, x), abs=1e-9)
        s = 3.7
        assert chamfer(s * x, s * y) == pytest.approx(s * s * chamfer(x, y),
                                                      rel=1e-12)


class TestOverlap:
    def test_identical_graphs(self):
        rng = np.random.default_rng(7)
        g = random_graph(rng, 8, FRAME, edge_prob=0.4)
        assert overlap_scores(g, g) == (1.0, 1.0)

    def test_disjoint_graphs(self):
        a = chain([(5, 5), (15, 5)])
        b = chain([(5, 45), (15, 45)])
        assert overlap_scores(a, b) == (0.0, 0.0)

    def test_both_empty(self):
        g = LaneGraph([], [], FRAME)
        assert overlap_scores(g, g) == (1.0, 1.0)

    def test_one_empty(self):
        g = chain([(5, 5), (15, 5)])
        assert overlap_scores(g, LaneGraph([], [], FRAME)) == (0.0, 0.0)

    def test_frame_mismatch(self):
        a = chain([(1, 1), (2, 2)], frame=Frame(0, 0, 10, 10))
        b = chain([(1, 1), (2, 2)], frame=Frame(0, 0, 20, 20))
        with pytest.raises(errors.FrameMismatch):
            overlap_scores(a, b)

    @pytest.mark.parametrize("seed", range(8))
    def test_dice_jaccard_identity_and_pixel_oracle(self, seed):
        rng = np.random.default_rng(900 + seed)
        gt = random_graph(rng, 7, Frame(0, 0, 20, 20), edge_prob=0.35)
        pred = random_graph(rng, 7, Frame(0, 0, 20, 20), edge_prob=0.35)
        f1, iou = overlap_scores(gt, pred, resolution=0.4)
        from lanekit.raster import rasterize_graph
        a = rasterize_graph(gt, 0.4).channel("lane") != 0
        b = rasterize_graph(pred, 0.4).channel("lane") != 0
        inter = int((a & b).sum())
        union = int((a | b).sum())
        if union:
            assert iou == pytest.approx(inter / union, abs=1e-15)
            assert f1 == pytest.approx(2 * inter / (a.sum() + b.sum()), abs=1e-15)
        assert 0.0 <= iou <= f1 <= 1.0
        if iou > 0:
            assert f1 == pytest.approx(2 * iou / (1 + iou), abs=1e-12)


class TestDirectionAccuracy:
    def gt(self):
        return chain([(0, 0), (4, 0), (8, 0), (12, 0), (16, 0)], directed=True)

    def test_identity(self):
        g = self.gt()
        assert direction_accuracy(g, g) == 1.0

    def test_all_reversed_zero(self):
        g = self.gt()
        rev = LaneGraph(g.nodes, [LaneSegment(e.dst, e.src, directed=True)
                                  for e in g.edges], FRAME)
        assert direction_accuracy(g, rev) == 0.0

    def test_half_reversed(self):
        g = self.gt()
        edges = [LaneSegment(e.dst, e.src, directed=True) if i % 2 == 0
                 else e for i, e in enumerate(g.edges)]
        pred = LaneGraph(g.nodes, edges, FRAME)
        assert direction_accuracy(g, pred) == 0.5

    def test_no_pred_edges(self):
        g = self.gt()
        assert direction_accuracy(g, LaneGraph(g.nodes, [], FRAME)) == 0.0

    def test_unmatched_and_undirected_count_incorrect(self):
        g = self.gt()
        nodes = list(g.nodes) + [AnchorNode(90, 40.0, 40.0), AnchorNode(91, 44.0, 40.0)]
        edges = list(g.edges) + [LaneSegment(90, 91, directed=True)]
        pred = LaneGraph(nodes, edges, FRAME)   # far edge: unmatched
        assert direction_accuracy(g, pred) == pytest.approx(4 / 5)
        undirected = LaneGraph(g.nodes,
                               [LaneSegment(e.src, e.dst) for e in g.edges], FRAME)
        assert direction_accuracy(g, undirected) == 0.0


class TestEvaluateAll:
    def test_perfect_prediction_identity(self):
        sample = gen_scene(SceneSpec(layout="curve", seed=2))
        rep = evaluate_all(sample.gt, sample.gt)
        assert (rep.apls, rep.f1, rep.iou, rep.dir_accuracy) == (1.0, 1.0, 1.0, 1.0)
        assert rep.chamfer_m2 == 0.0
        assert rep.counts.path_pairs > 0

    def test_empty_prediction(self):
        g = chain([(5, 5), (7, 5)], directed=True)
        rep = evaluate_all(g, LaneGraph([], [], FRAME))
        assert (rep.apls, rep.f1, rep.iou, rep.dir_accuracy) == (0.0, 0.0, 0.0, 0.0)
        assert rep.chamfer_m2 is None

    def test_batch_mean_is_arithmetic(self):
        reports = []
        for seed in range(3):
            s = gen_scene(SceneSpec(layout="straight", seed=seed))
            reports.append(evaluate_all(s.gt, s.gt))
        mean = mean_report(reports)
        assert mean["apls"] == pytest.approx(
            sum(r.apls for r in reports) / 3)
        assert mean["samples"] == 3
