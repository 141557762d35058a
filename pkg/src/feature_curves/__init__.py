"""Algebraic feature-curve recognition on 3D meshes and point clouds.

The pipeline extracts salient vertices from a curvature or colour property,
groups them with DBSCAN, maps every group onto its best-fit plane and finds
the member of an implicit curve family that collects the most Hough votes.
"""

from .cluster import Cluster, Clustering, DensityParams, dbscan, knn_epsilon
from .curves import (Annulus, Box, CurveFamily, ParameterRegion, bounding_box, catalogue,
                     estimate_petal_exponent, family_from_spec, make_circle, make_citrus,
                     make_citrus_circle, make_citrus_line, make_compound,
                     make_convexities_circle, make_ellipse, make_independent_product,
                     make_lamet, make_line, make_m_convexities, make_petal, make_spiral,
                     make_three_ellipses, suggest_region)
from .errors import (AllFailed, ConfigError, DegenerateCluster, DomainError, EmptyField,
                     EmptyLocus, FeatureCurveError, GridTooLarge, LayoutMismatch,
                     LengthMismatch, MissingColor, NoVotes, NonFiniteEvaluation, ParseError,
                     RatioOutOfRange, SingularFit, TooFewPoints, UnsupportedFamily)
from .features import (FeaturePointSet, Histogram, Property, ScalarField, build_histogram,
                       combine_feature_sets, compute_property, estimate_principal_curvatures,
                       extract_feature_points, filter_threshold)
from .hough import (Accumulator, CellGrid, CrossingResult, DetectedCurve, accumulate,
                    build_grid, compete_families, crossing_cell, detect_curve, lift_to_3d,
                    resolve_undetermined, sample_curve)
from .model_io import LabColor, SurfaceModel, load_model, rgb_to_cielab, save_model
from .pipeline import RunConfig, RunReport, emit_cluster_plot, emit_overlay, run_pipeline
from .plane import Frame, PlanarSet, fit_plane, project_to_plane

__version__ = "0.1.0"

__all__ = [
    "Accumulator", "Annulus", "Box", "CellGrid", "Cluster", "Clustering", "CrossingResult",
    "CurveFamily", "DensityParams", "DetectedCurve", "FeaturePointSet", "Frame", "Histogram",
    "LabColor", "ParameterRegion", "PlanarSet", "Property", "RunConfig", "RunReport",
    "ScalarField", "SurfaceModel", "accumulate", "bounding_box", "build_grid",
    "build_histogram", "catalogue", "combine_feature_sets", "compete_families",
    "compute_property", "crossing_cell", "dbscan", "detect_curve", "emit_cluster_plot",
    "emit_overlay", "estimate_petal_exponent", "estimate_principal_curvatures",
    "extract_feature_points", "family_from_spec", "filter_threshold", "fit_plane",
    "knn_epsilon", "lift_to_3d", "load_model", "make_circle", "make_citrus",
    "make_citrus_circle", "make_citrus_line", "make_compound", "make_convexities_circle",
    "make_ellipse", "make_independent_product", "make_lamet", "make_line", "make_m_convexities",
    "make_petal", "make_spiral", "make_three_ellipses", "project_to_plane",
    "resolve_undetermined", "rgb_to_cielab", "run_pipeline", "sample_curve", "save_model",
    "suggest_region", "AllFailed", "ConfigError", "DegenerateCluster", "DomainError",
    "EmptyField", "EmptyLocus", "FeatureCurveError", "GridTooLarge", "LayoutMismatch",
    "LengthMismatch", "MissingColor", "NoVotes", "NonFiniteEvaluation", "ParseError",
    "RatioOutOfRange", "SingularFit", "TooFewPoints", "UnsupportedFamily",
]
