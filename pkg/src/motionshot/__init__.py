"""Shot boundary detection from block-matching motion activity."""

__version__ = "0.1.0"

from ._backend import BACKEND
from .block_matching import (
    BlockGridSpec,
    MotionVectorField,
    SearchStats,
    arps_search,
    exhaustive_search,
    motion_compensate,
    psnr,
    search_stats,
)
from .evaluation import EvalReport, GroundTruth, load_ground_truth, match_boundaries, score
from .frame_io import Frame, SourceDescriptor, open_source, read_frame
from .motion_activity import (
    ActivityDescriptor,
    activity_average,
    activity_intensity,
    activity_matrix,
    describe_field,
    describe_pair,
    low_activity_filter,
    quantize_intensity,
)
from .shot_detector import (
    IntensityTimeline,
    ShotList,
    ThresholdPolicy,
    build_timeline,
    detect,
    detect_shots,
    diff_signal,
    resolve_threshold,
)
