"""lanekit: directed lane-graph estimation toolkit.

Spatial lane graphs with adaptive resampling, BEV rasterization, direction
fields with edge resolution, scored-graph post-processing, baseline graph
estimators, synthetic verification scenes, and the evaluation metric suite
(APLS, Chamfer, F1/IoU overlap, direction accuracy).
"""

from ._kernels import BACKEND as KERNEL_BACKEND
from .directions import (DirectionField, angle_to_class, circular_mean,
                         class_to_angle, direct_graph, resolve_edge_direction)
from .estimators import (ScoredProposals, b1_skeleton_graph, b2_knn_graph,
                         graph_to_proposals, load_predictions,
                         proposals_to_graph, save_predictions)
from .graph import (AnchorNode, Frame, LaneGraph, LaneSegment, load_graph,
                    resample, save_graph, shortest_path_len)
from .metrics import (EvalConfig, MetricReport, apls, chamfer,
                      direction_accuracy, evaluate_all, overlap_scores)
from .postprocess import PostprocessConfig, filter_graph
from .projection import adapt_ground_truth, nearest_segment, project_to_segment
from .raster import (BevRaster, PointCloud, VehicleBox, accumulate_lowest_z,
                     distance_transform, encode_vehicle_layer, extract_crop,
                     rasterize_graph, read_bvr, write_bvr)
from .synth import NoiseSpec, SceneSpec, gen_scene

__version__ = "0.1.0"
