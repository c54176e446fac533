"""Evaluation and analysis toolkit for 68-point facial landmarks and face detections."""
from .augment import (AffineTransform, AugmentConfig, GridSpace, Rotation, Scale, apply_transform, compose,
                      gen_config_grid, grayscale, make_transform, preset, sample_augmentation, warp_raster)
from .dataset import (DatasetManifest, Detection, FaceAttributes, FaceRecord, FeatureMatrix, FormatError,
                      SplitFilter, filter_split, load_detections, load_features, load_manifest, load_predictions,
                      parse_pts)
from .detection import average_precision, iou, match_detections
from .geometry import (BoundingBox, GeomStats, NormalizationKind, box_size, geometry_stats, interocular_distance,
                       mean_face, minimal_bounding_box)
from .metrics import CedCurve, MetricReport, auc, ced_curve, evaluate, failure_rate, nme, per_landmark_errors
from .plots import PlotSpec, render_plot
from .raster import RasterImage
from .report import ReportDoc, ReportRow, emit_report
from .tsne import Embedding, TsneConfig, conditional_affinities, kl_divergence, run_tsne, symmetrize

__version__ = "0.1.0"
