"""Density estimation trees with pruning, kernel cross-validation,
smoothing, and rectangular selection optimization."""

from .analysis import (
    LikelihoodFactor,
    LikelihoodSpec,
    SelectionRegion,
    YieldConfig,
    composite_log_likelihood,
    conditional_line_integral,
    delta_log_likelihood,
    integrate_region,
    optimize_selection,
    selection_metric,
)
from .bench import BenchRow, benchmark
from .crossval import (
    Bandwidths,
    QualityCurve,
    expected_kernel_count,
    loo_quality_curve,
    loo_risk,
    node_kernel_masses,
    overlap_integral,
    quality_kernel,
    select_alpha,
    silverman_bandwidths,
)
from .datatable import DataTable
from .errors import (
    ConfigError,
    DataError,
    DetreeError,
    ModelInvariantError,
    ModelParseError,
    ModelSchemaError,
    NumericError,
    UsageError,
)
from .estimator import DensityEstimationTree
from .growth import GrowthReport, StopCondition, best_split, grow, replacement_error
from .io import load_csv, sample_grid, write_csv, write_table_csv
from .kde import TriangularKde, grid_points, ise_against
from .pruning import (
    Complexity,
    PruneProfile,
    PruneStep,
    alpha_threshold,
    apply_alpha,
    complexity,
    prune_sequence,
)
from .smoothing import (
    InterpolatedTree,
    SmearedTree,
    Triangulation,
    interpolate_evaluate,
    interpolate_many,
    smear_evaluate,
    triangulate,
)
from .synthetic import (
    NormalBlob,
    SyntheticSpec,
    UniformBox,
    d0_demo_spec,
    generate_synthetic,
    preset_spec,
)
from .tree import Box, DensityTree, TreeNode, bounding_box

__version__ = "0.1.0"

__all__ = [
    "Bandwidths",
    "BenchRow",
    "Box",
    "Complexity",
    "ConfigError",
    "DataError",
    "DataTable",
    "DensityEstimationTree",
    "DensityTree",
    "DetreeError",
    "GrowthReport",
    "InterpolatedTree",
    "LikelihoodFactor",
    "LikelihoodSpec",
    "ModelInvariantError",
    "ModelParseError",
    "ModelSchemaError",
    "NormalBlob",
    "NumericError",
    "PruneProfile",
    "PruneStep",
    "QualityCurve",
    "SelectionRegion",
    "SmearedTree",
    "StopCondition",
    "SyntheticSpec",
    "TreeNode",
    "TriangularKde",
    "Triangulation",
    "UniformBox",
    "UsageError",
    "YieldConfig",
    "alpha_threshold",
    "apply_alpha",
    "benchmark",
    "best_split",
    "bounding_box",
    "complexity",
    "composite_log_likelihood",
    "conditional_line_integral",
    "d0_demo_spec",
    "delta_log_likelihood",
    "expected_kernel_count",
    "generate_synthetic",
    "grid_points",
    "grow",
    "integrate_region",
    "interpolate_evaluate",
    "interpolate_many",
    "ise_against",
    "load_csv",
    "loo_quality_curve",
    "loo_risk",
    "node_kernel_masses",
    "optimize_selection",
    "overlap_integral",
    "preset_spec",
    "prune_sequence",
    "quality_kernel",
    "replacement_error",
    "sample_grid",
    "select_alpha",
    "selection_metric",
    "silverman_bandwidths",
    "smear_evaluate",
    "triangulate",
    "write_csv",
    "write_table_csv",
]
