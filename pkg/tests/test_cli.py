import json

import numpy as np
import pytest

from lanekit.cli import main
from lanekit.graph import load_graph, save_graph
from lanekit.raster import PointCloud, read_bvr

from oracles import random_graph
from lanekit.graph import Frame


def run(*argv):
    return main(list(argv))


def test_synth_deterministic_trees(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert run("synth", "--out", str(out), "--layout", "intersection4",
                   "--seed", "7") == 0
    for name in ("gt.lgraph.json", "centerline.bvr", "dir.bvr",
                 "proposals.lpred.json", "spec.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_full_pipeline_identity(tmp_path):
    out = tmp_path / "scene"
    assert run("synth", "--out", str(out), "--layout", "curve", "--seed", "3") == 0

    pred = tmp_path / "pred.lgraph.json"
    assert run("estimate", "--method", "file",
               "--proposals", str(out / "proposals.lpred.json"),
               "--frame-from", str(out / "gt.lgraph.json"),
               "--out", str(pred)) == 0

    directed = tmp_path / "directed.lgraph.json"
    report = tmp_path / "dir_report.json"
    assert run("direction", "--field", str(out / "dir.bvr"),
               "--graph", str(pred), "--out", str(directed),
               "--report", str(report)) == 0
    assert json.loads(report.read_text())["unresolved"] == []

    cleaned = tmp_path / "cleaned.lgraph.json"
    assert run("postprocess", "--graph", str(directed), "--out", str(cleaned)) == 0

    result = tmp_path / "report.json"
    assert run("eval", "--gt", str(out / "gt.lgraph.json"),
               "--pred", str(cleaned), "--out", str(result)) == 0
    rep = json.loads(result.read_text())
    sample = next(iter(rep["samples"].values()))
    assert sample["apls"] == 1.0
    assert sample["f1"] == 1.0
    assert sample["iou"] == 1.0
    assert sample["dir_accuracy"] == 1.0
    assert sample["chamfer_m2"] == 0.0


def test_eval_identity_single_files(tmp_path, capsys):
    g = random_graph(np.random.default_rng(0), 8, Frame(0, 0, 30, 30),
                     edge_prob=0.4)
    p = tmp_path / "g.lgraph.json"
    p.write_bytes(save_graph(g))
    assert run("eval", "--gt", str(p), "--pred", str(p),
               "--metrics", "apls,overlap") == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["mean"]["apls"] == 1.0
    assert "chamfer_m2" not in rep["mean"]


def test_eval_directory_pairing_and_mean(tmp_path):
    gt_dir, pred_dir = tmp_path / "gt", tmp_path / "pred"
    gt_dir.mkdir(), pred_dir.mkdir()
    rng = np.random.default_rng(1)
    for i in range(3):
        g = random_graph(rng, 7, Frame(0, 0, 30, 30), edge_prob=0.4)
        (gt_dir / f"s{i}.lgraph.json").write_bytes(save_graph(g))
        (pred_dir / f"s{i}.lgraph.json").write_bytes(save_graph(g))
    out = tmp_path / "rep.json"
    assert run("eval", "--gt", str(gt_dir), "--pred", str(pred_dir),
               "--out", str(out), "--jobs", "2") == 0
    rep = json.loads(out.read_text())
    assert len(rep["samples"]) == 3
    assert rep["mean"]["apls"] == 1.0
    assert rep["mean"]["samples"] == 3


def test_resample_and_rasterize(tmp_path):
    doc = {"frame": {"origin_x_m": 0, "origin_y_m": 0,
                     "width_m": 10, "height_m": 10},
           "nodes": [{"id": 0, "x_m": 1, "y_m": 5}, {"id": 1, "x_m": 9, "y_m": 5}],
           "edges": [{"src": 0, "dst": 1}]}
    src = tmp_path / "g.lgraph.json"
    src.write_text(json.dumps(doc))
    dst = tmp_path / "r.lgraph.json"
    assert run("resample", "--graph", str(src), "--out", str(dst)) == 0
    g = load_graph(dst.read_bytes())
    assert len(g.edges) == 4   # 8 m into <= 2 m pieces

    bvr = tmp_path / "mask.bvr"
    assert run("rasterize", "--graph", str(dst), "--out", str(bvr)) == 0
    r = read_bvr(bvr.read_bytes())
    assert r.channel("lane").any()


def test_estimate_b2_and_b1(tmp_path):
    prop = tmp_path / "p.lpred.json"
    prop.write_text(json.dumps({
        "anchors": [{"id": 0, "x_m": 0, "y_m": 0}, {"id": 1, "x_m": 2, "y_m": 0},
                    {"id": 2, "x_m": 4, "y_m": 0}],
        "connections": []}))
    out = tmp_path / "b2.lgraph.json"
    assert run("estimate", "--method", "b2", "--proposals", str(prop),
               "--frame", "0,0,10,10", "--out", str(out)) == 0
    assert len(load_graph(out.read_bytes()).edges) == 3

    scene = tmp_path / "scene"
    assert run("synth", "--out", str(scene), "--layout", "straight",
               "--seed", "2") == 0
    b1_out = tmp_path / "b1.lgraph.json"
    assert run("estimate", "--method", "b1",
               "--raster", str(scene / "centerline.bvr"),
               "--out", str(b1_out)) == 0
    assert load_graph(b1_out.read_bytes()).edges


def test_project_subcommand(tmp_path):
    scene = tmp_path / "scene"
    assert run("synth", "--out", str(scene), "--seed", "1") == 0
    adapted = tmp_path / "adapted.lgraph.json"
    assert run("project", "--gt", str(scene / "gt.lgraph.json"),
               "--proposals", str(scene / "proposals.lpred.json"),
               "--out", str(adapted)) == 0
    g = load_graph(adapted.read_bytes())
    gt = load_graph((scene / "gt.lgraph.json").read_bytes())
    assert len(g.nodes) == len(gt.nodes)


def test_lowz_subcommand(tmp_path):
    cloud = PointCloud(np.array([[0.05, 0.05, 1.5, 0.0],
                                 [0.06, 0.06, 0.1, 0.0],
                                 [3.0, 3.0, 2.0, 0.0]]))
    src = tmp_path / "cloud.csv"
    src.write_bytes(cloud.to_csv())
    dst = tmp_path / "ground.csv"
    assert run("lowz", "--cloud", str(src), "--out", str(dst),
               "--cell", "0.2") == 0
    kept = PointCloud.from_csv(dst.read_bytes())
    assert len(kept) == 2
    assert kept.points[0, 2] == 0.1


def test_unknown_flag_exits_one(capsys):
    with pytest.raises(SystemExit) as exc:
        run("eval", "--nonsense")
    assert exc.value.code == 1
    assert "usage" in capsys.readouterr().err


def test_missing_file_exits_two(tmp_path):
    assert run("resample", "--graph", str(tmp_path / "absent.lgraph.json"),
               "--out", str(tmp_path / "x.json")) == 2


def test_validation_error_exits_one(tmp_path):
    bad = tmp_path / "bad.lgraph.json"
    bad.write_text(json.dumps({
        "frame": {"origin_x_m": 0, "origin_y_m": 0, "width_m": 5, "height_m": 5},
        "nodes": [{"id": 0, "x_m": 1, "y_m": 1}],
        "edges": [{"src": 0, "dst": 0}]}))
    assert run("resample", "--graph", str(bad),
               "--out", str(tmp_path / "x.json")) == 1


def test_synth_batch_count(tmp_path):
    out = tmp_path / "batch"
    assert run("synth", "--out", str(out), "--count", "3", "--seed", "5") == 0
    assert sorted(p.name for p in out.iterdir()) == \
        ["sample_000", "sample_001", "sample_002"]
    # distinct seeds give distinct scenes
    g0 = (out / "sample_000" / "gt.lgraph.json").read_bytes()
    g1 = (out / "sample_001" / "gt.lgraph.json").read_bytes()
    assert g0 != g1
