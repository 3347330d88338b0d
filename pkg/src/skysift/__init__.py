"""skysift: unsupervised UAV trajectory estimation from sparse LiDAR scans.

Superimpose a scan sequence, cluster it, score each cluster on how its
voxel footprint and density behave over time (static structure holds
still and densifies; a mover does neither), pick the winner, and fit an
interpolating spline through its per-frame centroids.
"""

__version__ = "0.1.0"

from .clustering import NOISE, ClusterLabeling, DbscanParams, cluster_members, dbscan
from .config import PipelineConfig, apply_overrides, config_from_dict, load_config
from .errors import (BothEmpty, DuplicateTimestamps, EdgeMismatch, EmptyCluster,
                     EmptyInput, EmptyPairs, EmptyQuery, EmptySequence,
                     InvalidConfig, LabelingMismatch, MalformedRecord,
                     NoClusters, NonMonotonicTimestamps, NonPositiveEdge,
                     NoOverlap, SkysiftError, TooFewFrames, UnknownClusterId,
                     WindowOutOfRange, ZeroGlobalDensity)
from .evaluation import (AlignedPairs, RmseReport, aggregate_rmse,
                         align_by_timestamp, evaluate, per_axis_rmse,
                         save_report_json)
from .plotting import plot_projections
from .pointcloud import (Frame, PointSet, ScanSequence, Window, load_points_csv,
                         load_sequence, restrict_to_frame, save_points_csv,
                         save_sequence, sequence_from_frame_arrays, superimpose)
from .scoring import (ScoreBreakdown, ScoringParams, SelectionResult,
                      audit_document, combined_score, density_score, iou_score,
                      partition_windows, score_all_clusters, select_target)
from .synthetic import (BoxSpec, CirclePath, LissajousPath, MovingClusterOracle,
                        PolylinePath, SceneConfig, generate, randomized_scene,
                        scene_config_from_dict, scene_config_to_dict, scene_s1,
                        scene_s2)
from .trajectory import (ControlSequence, SplineModel, Trajectory,
                         extract_control_points, fit_spline, interpolate,
                         load_trajectory_csv, save_trajectory_csv)
from .voxel import (VoxelGrid, density, relative_density, voxel_iou, voxel_of,
                    voxel_volume, voxelize)

__all__ = [name for name in dir() if not name.startswith("_")]
