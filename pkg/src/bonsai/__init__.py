"""Point-cloud radius search over k-d trees with compressed leaves.

Leaves hold up to 16 points in half precision with shared sign/exponent
tuples; queries stay exact by widening the error bound around every
approximate distance and recomputing the undecidable remainder from the
original single-precision coordinates.
"""

from .cluster import ClusterParams, ClusterSet, extract_clusters
from .codec import (
    MAX_LEAF_POINTS,
    blob_size,
    compress_leaf,
    decompress_leaf,
    header_flags,
    unpadded_bits,
)
from .floats import (
    BFLOAT16,
    BINARY32,
    CUSTOM24,
    HALF,
    HALF_DELTA_SQ,
    HALF_TWO_DELTA,
    STUDY_FORMATS,
    ReducedFormat,
    half_bits_to_single,
    max_rounding_error,
    single_to_half_bits,
    to_reduced,
    to_reduced_array,
    widen,
    widen_array,
)
from .pcd import read_pcd, read_pcd_file, write_pcd, write_pcd_file
from .rng import Rand
from .scene import SceneSpec, default_corpus, generate_scene, plant_boundary_points
from .search import (
    DEFAULT_SAFETY_FACTOR,
    Classification,
    RadiusQuery,
    SearchStats,
    StudyResult,
    classify,
    misclassification_study,
    radius_search_baseline,
    radius_search_bonsai,
    sq_diff_with_error,
    squared_distances,
)
from .tree import (
    DEFAULT_LEAF_CAPACITY,
    KdTree,
    LeafNode,
    PointCloud,
    build_tree,
    leaf_visit_order,
)

__version__ = "0.1.0"

__all__ = [
    "BFLOAT16",
    "BINARY32",
    "CUSTOM24",
    "Classification",
    "ClusterParams",
    "ClusterSet",
    "DEFAULT_LEAF_CAPACITY",
    "DEFAULT_SAFETY_FACTOR",
    "HALF",
    "HALF_DELTA_SQ",
    "HALF_TWO_DELTA",
    "KdTree",
    "LeafNode",
    "MAX_LEAF_POINTS",
    "PointCloud",
    "RadiusQuery",
    "Rand",
    "ReducedFormat",
    "STUDY_FORMATS",
    "SceneSpec",
    "SearchStats",
    "StudyResult",
    "blob_size",
    "build_tree",
    "classify",
    "compress_leaf",
    "decompress_leaf",
    "default_corpus",
    "extract_clusters",
    "generate_scene",
    "half_bits_to_single",
    "header_flags",
    "leaf_visit_order",
    "max_rounding_error",
    "misclassification_study",
    "plant_boundary_points",
    "radius_search_baseline",
    "radius_search_bonsai",
    "read_pcd",
    "read_pcd_file",
    "single_to_half_bits",
    "sq_diff_with_error",
    "squared_distances",
    "to_reduced",
    "to_reduced_array",
    "unpadded_bits",
    "widen",
    "widen_array",
    "write_pcd",
    "write_pcd_file",
]
