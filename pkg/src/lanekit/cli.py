"""Command-line front end.

Subcommands: synth, resample, project, estimate, direction, postprocess,
rasterize, eval, lowz.  Exit codes: 0 success, 1 validation/usage error,
2 I/O or parse error.  Diagnostics go to stderr; results go to files or to
stdout as JSON.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from pathlib import Path

from . import errors
from .directions import DirectionField, direct_graph
from .estimators import (b1_skeleton_graph, b2_knn_graph, load_predictions,
                         proposals_to_graph, save_predictions)
from .graph import Frame, load_graph, resample, save_graph
from .metrics import EvalConfig, evaluate_all, mean_report
from .postprocess import PostprocessConfig, filter_graph
from .projection import adapt_ground_truth
from .raster import PointCloud, accumulate_lowest_z, rasterize_graph, read_bvr, write_bvr
from .synth import LAYOUTS, NoiseSpec, SceneSpec, gen_scene


class _Parser(argparse.ArgumentParser):
    """argparse that exits with code 1 on usage errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _read_graph(path: str):
    return load_graph(Path(path).read_bytes())


def _write_graph(g, path: str):
    Path(path).write_bytes(save_graph(g))


def _parse_frame(args) -> Frame | None:
    if getattr(args, "frame_from", None):
        return _read_graph(args.frame_from).frame
    if getattr(args, "frame", None):
        parts = [float(v) for v in args.frame.split(",")]
        if len(parts) != 4:
            raise errors.ValidationError(
                "--frame expects 'origin_x,origin_y,width,height'")
        return Frame(*parts)
    return None


def _emit(doc, out: str | None):
    text = json.dumps(doc, indent=1)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


# --- synth ---------------------------------------------------------------


def _synth_one(task):
    out_dir, spec_dict = task
    spec = SceneSpec.from_dict(spec_dict)
    sample = gen_scene(spec)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "gt.lgraph.json").write_bytes(save_graph(sample.gt))
    (out / "centerline.bvr").write_bytes(write_bvr(sample.centerline))
    (out / "dir.bvr").write_bytes(write_bvr(sample.dir_field.raster))
    (out / "proposals.lpred.json").write_bytes(save_predictions(sample.proposals))
    (out / "spec.json").write_text(json.dumps(spec.to_dict(), indent=1) + "\n")
    return str(out)


def _cmd_synth(args):
    noise = NoiseSpec(anchor_sigma_m=args.anchor_sigma,
                      false_positive_rate=args.fp_rate,
                      drop_rate=args.drop_rate,
                      score_noise=args.score_noise)
    tasks = []
    for i in range(args.count):
        spec = SceneSpec(layout=args.layout,
                         lanes_per_road=args.lanes_per_road,
                         lane_spacing_m=args.lane_spacing,
                         seed=args.seed + i, noise=noise)
        sub = Path(args.out) if args.count == 1 else Path(args.out) / f"sample_{i:03d}"
        tasks.append((str(sub), spec.to_dict()))
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            done = list(pool.map(_synth_one, tasks))
    else:
        done = [_synth_one(t) for t in tasks]
    for d in done:
        print(f"wrote {d}", file=sys.stderr)
    return 0


# --- single-input commands ---------------------------------------------------


def _cmd_resample(args):
    _write_graph(resample(_read_graph(args.graph), args.spacing), args.out)
    return 0


def _cmd_project(args):
    gt = _read_graph(args.gt)
    doc = json.loads(Path(args.proposals).read_text())
    if isinstance(doc, dict) and "anchors" in doc:   # accept .lpred.json too
        doc = doc["anchors"]
    points = [(float(p["x_m"]), float(p["y_m"])) for p in doc]
    _write_graph(adapt_ground_truth(gt, points), args.out)
    return 0


def _cmd_estimate(args):
    if args.method == "b1" and not args.raster:
        raise errors.ValidationError("--raster is required for --method b1")
    if args.method in ("b2", "file") and not args.proposals:
        raise errors.ValidationError(
            f"--proposals is required for --method {args.method}")
    if args.method == "b1":
        raster = read_bvr(Path(args.raster).read_bytes())
        plane = raster.channel(args.channel)
        g = b1_skeleton_graph(plane, args.threshold, args.rdp_epsilon,
                              raster.resolution_m_per_px)
        if not g.nodes:
            print("estimate: empty mask, empty graph", file=sys.stderr)
    elif args.method == "b2":
        sp = load_predictions(Path(args.proposals).read_bytes())
        pts = [(a.x_m, a.y_m) for a in sp.anchors]
        g = b2_knn_graph(pts, frame=_parse_frame(args))
    else:   # file: trust the proposals as a scored graph
        sp = load_predictions(Path(args.proposals).read_bytes())
        frame = _parse_frame(args)
        if frame is None:
            raise errors.ValidationError(
                "--frame or --frame-from is required for --method file")
        g = proposals_to_graph(sp, frame)
    _write_graph(g, args.out)
    return 0


def _cmd_direction(args):
    g = _read_graph(args.graph)
    field = DirectionField(read_bvr(Path(args.field).read_bytes()), args.channel)
    directed, issues = direct_graph(field, g)
    _write_graph(directed, args.out)
    if args.report:
        _emit({"edges": len(directed.edges),
               "unresolved": [asdict(i) for i in issues]}, args.report)
    return 0


def _cmd_postprocess(args):
    cfg = PostprocessConfig(node_score_min=args.node_min,
                            edge_score_min=args.edge_min,
                            max_span_fraction=args.span_fraction)
    _write_graph(filter_graph(_read_graph(args.graph), cfg), args.out)
    return 0


def _cmd_rasterize(args):
    r = rasterize_graph(_read_graph(args.graph), args.resolution, args.lane_width)
    Path(args.out).write_bytes(write_bvr(r))
    return 0


def _cmd_lowz(args):
    cloud = PointCloud.from_csv(Path(args.cloud).read_bytes())
    kept = accumulate_lowest_z(cloud, args.cell)
    Path(args.out).write_bytes(kept.to_csv())
    print(f"kept {len(kept)} of {len(cloud)} points", file=sys.stderr)
    return 0


# --- eval -----------------------------------------------------------------------


def _pair_paths(gt: str, pred: str):
    gt_p, pred_p = Path(gt), Path(pred)
    if gt_p.is_file() and pred_p.is_file():
        return [(gt_p.name.split(".")[0], gt_p, pred_p)]
    if not (gt_p.is_dir() and pred_p.is_dir()):
        raise errors.ValidationError("--gt and --pred must both be files or both dirs")
    pairs = []
    preds = {p.name.split(".")[0]: p for p in sorted(pred_p.glob("*.lgraph.json"))}
    for gp in sorted(gt_p.glob("*.lgraph.json")):
        stem = gp.name.split(".")[0]
        if stem in preds:
            pairs.append((stem, gp, preds[stem]))
    if not pairs:
        raise errors.ValidationError("no matching gt/pred file stems")
    return pairs


def _eval_one(task):
    stem, gt_path, pred_path, cfg_kwargs = task
    gt = load_graph(Path(gt_path).read_bytes())
    pred = load_graph(Path(pred_path).read_bytes())
    report = evaluate_all(gt, pred, EvalConfig(**cfg_kwargs))
    return stem, report


def _cmd_eval(args):
    cfg_kwargs = dict(match_radius_m=args.match_radius,
                      resolution=args.resolution,
                      lane_width_m=args.lane_width,
                      respect_direction=args.respect_direction,
                      symmetric_apls=args.symmetric)
    wanted = set(args.metrics.split(","))
    unknown = wanted - {"apls", "chamfer", "overlap", "dir"}
    if unknown:
        raise errors.ValidationError(f"unknown metrics: {sorted(unknown)}")
    tasks = [(stem, str(g), str(p), cfg_kwargs)
             for stem, g, p in _pair_paths(args.gt, args.pred)]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_eval_one, tasks))
    else:
        results = [_eval_one(t) for t in tasks]

    drop = set()
    if "apls" not in wanted:
        drop.add("apls")
    if "chamfer" not in wanted:
        drop.update(("chamfer_m2", "chamfer_samples"))
    if "overlap" not in wanted:
        drop.update(("f1", "iou"))
    if "dir" not in wanted:
        drop.add("dir_accuracy")

    def trim(d):
        return {k: v for k, v in d.items() if k not in drop}

    samples = {stem: trim(rep.to_dict()) for stem, rep in results}
    mean = trim(mean_report([rep for _, rep in results]))
    _emit({"samples": samples, "mean": mean}, args.out)
    return 0


# --- parser ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lanekit",
                description="Directed lane-graph toolkit: synthetic scenes, "
                            "baseline estimators, direction resolution, "
                            "post-processing, and metrics.")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("synth", parents=[], help="generate synthetic scenes")
    sp.add_argument("--out", required=True, help="output directory")
    sp.add_argument("--layout", default="straight", choices=LAYOUTS)
    sp.add_argument("--lanes-per-road", type=int, default=2)
    sp.add_argument("--lane-spacing", type=float, default=3.0,
                    help="lane spacing in meters (default 3.0)")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--count", type=int, default=1,
                    help="number of samples (seeds seed..seed+count-1)")
    sp.add_argument("--anchor-sigma", type=float, default=0.0,
                    help="anchor perturbation sigma in meters")
    sp.add_argument("--fp-rate", type=float, default=0.0)
    sp.add_argument("--drop-rate", type=float, default=0.0)
    sp.add_argument("--score-noise", type=float, default=0.0)
    sp.add_argument("--jobs", type=int, default=1)
    sp.set_defaults(func=_cmd_synth)

    sp = sub.add_parser("resample", help="split long edges to a max spacing")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--spacing", type=float, default=2.0,
                    help="max node spacing in meters (default 2.0)")
    sp.set_defaults(func=_cmd_resample)

    sp = sub.add_parser("project",
                        help="adapt a ground-truth graph to anchor proposals")
    sp.add_argument("--gt", required=True, help="ground-truth .lgraph.json")
    sp.add_argument("--proposals", required=True,
                    help="JSON list of {id, x_m, y_m} or a .lpred.json file")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=_cmd_project)

    sp = sub.add_parser("estimate", help="build a graph with b1, b2, or from file")
    sp.add_argument("--method", required=True, choices=("b1", "b2", "file"))
    sp.add_argument("--proposals", help=".lpred.json input (b2, file)")
    sp.add_argument("--raster", help="BVR raster with the centerline channel (b1)")
    sp.add_argument("--channel", default="centerline")
    sp.add_argument("--threshold", type=float, default=1.0,
                    help="centerline binarization threshold (default 1.0)")
    sp.add_argument("--rdp-epsilon", type=float, default=2.0,
                    help="polyline simplification tolerance in px (default 2.0)")
    sp.add_argument("--frame", help="origin_x,origin_y,width,height in meters")
    sp.add_argument("--frame-from", help="copy the frame of this .lgraph.json")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=_cmd_estimate)

    sp = sub.add_parser("direction",
                        help="resolve edge directions from a direction field")
    sp.add_argument("--field", required=True, help="BVR file with the dir channel")
    sp.add_argument("--channel", default="dir")
    sp.add_argument("--graph", required=True, help="undirected .lgraph.json")
    sp.add_argument("--out", required=True)
    sp.add_argument("--report", help="write unresolved-edge report JSON here")
    sp.set_defaults(func=_cmd_direction)

    sp = sub.add_parser("postprocess", help="four-rule false-positive filter")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--node-min", type=float, default=0.5,
                    help="node score threshold (default 0.5)")
    sp.add_argument("--edge-min", type=float, default=0.2,
                    help="edge score threshold (default 0.2)")
    sp.add_argument("--span-fraction", type=float, default=0.25,
                    help="max edge length as a fraction of the smaller frame "
                         "dimension (default 0.25)")
    sp.set_defaults(func=_cmd_postprocess)

    sp = sub.add_parser("rasterize", help="render a graph to a lane mask")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--resolution", type=float, default=0.2,
                    help="meters per pixel (default 0.2)")
    sp.add_argument("--lane-width", type=float, default=1.8,
                    help="rendered lane diameter in meters (default 1.8)")
    sp.set_defaults(func=_cmd_rasterize)

    sp = sub.add_parser("eval", help="evaluate predictions against ground truth")
    sp.add_argument("--gt", required=True, help="graph file or directory")
    sp.add_argument("--pred", required=True, help="graph file or directory")
    sp.add_argument("--metrics", default="apls,chamfer,overlap,dir")
    sp.add_argument("--match-radius", type=float, default=4.0,
                    help="node match radius in meters (default 4.0)")
    sp.add_argument("--resolution", type=float, default=0.2)
    sp.add_argument("--lane-width", type=float, default=1.8)
    sp.add_argument("--respect-direction", action="store_true",
                    help="honour edge direction in path lengths")
    sp.add_argument("--symmetric", action="store_true",
                    help="average both APLS evaluation directions")
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--out", help="report JSON path (stdout when omitted)")
    sp.set_defaults(func=_cmd_eval)

    sp = sub.add_parser("lowz", help="keep the lowest-z point per ground cell")
    sp.add_argument("--cloud", required=True, help="CSV x_m,y_m,z_m,intensity")
    sp.add_argument("--out", required=True)
    sp.add_argument("--cell", type=float, default=0.2,
                    help="ground cell size in meters (default 0.2)")
    sp.set_defaults(func=_cmd_lowz)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except errors.ParseError as exc:
        print(f"lanekit: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"lanekit: {exc}", file=sys.stderr)
        return 2
    except errors.LaneKitError as exc:
        print(f"lanekit: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
