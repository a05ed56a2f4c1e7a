"""Executable synthetic Lorentzian geometry at desk scale.

Finite causal structures with exact time-separation tables, metric products
of compact bases with a time window, discrete geodesics, comparison-triangle
curvature certificates, causal-boundary classification and a splitting
verification harness, plus the `lorlen` command line front end.
"""

from .causal import (
    AxiomReport,
    CausalStructure,
    build_closure,
    check_axioms,
    diamond,
    diamond_diameter,
    future,
    is_chain,
    past,
    past_set,
)
from .cboundary import (
    BoundaryClass,
    Classification,
    CompletionPair,
    ConvergenceReport,
    CoverageReport,
    FutureSet,
    InclusionReport,
    PastSet,
    TauBarResult,
    check_chain_convergence,
    check_vertical_past_covers,
    check_vertical_past_inclusion,
    classify,
    down_set,
    future_boundary_classes,
    generate_IF,
    generate_IP,
    limit_operator,
    past_boundary_classes,
    reverse_structure,
    s_relation_pairs,
    tau_bar,
    up_set,
)
from .comparison import (
    AngleCheckReport,
    CertReport,
    ComparisonTriangle,
    ProductTriangle,
    SideLengths,
    UpperAngleReport,
    VertexAngles,
    angle_comparison_check,
    certify_curvature_below,
    corresponding_point,
    law_of_cosines_residual,
    minkowski_tau,
    realize,
    sample_product_triangles,
    upper_angle,
    vertex_angles,
)
from .errors import (
    CausalCycleError,
    EmptyHorizonError,
    LorlenError,
    NoLimitError,
    NonMetricError,
    NoRelatedPairsError,
    NotRelatedError,
    UnrealizableError,
)
from .geodesy import (
    Chain,
    LimitLine,
    MaximizerResult,
    NullChainReport,
    chain_tau_length,
    compute_links,
    extract_limit_line,
    is_line,
    line_defect,
    maximizer,
    null_chain_scan,
)
from .io import (
    curves_from_report,
    dump_structure,
    load_json,
    load_structure,
    save_json,
    structure_from_dict,
    structure_to_dict,
    write_curves_csv,
)
from .metric import (
    MatrixMetric,
    MetricSpace,
    builtin,
    euclid_comparison_angle,
    metric_from_spec,
    quadruple_curvature_test,
)
from .product import (
    ProductSpace,
    SampleSet,
    SprinkleConfig,
    build_causal_structure,
    causal_closedness_probe,
    load_run_spec,
    nn_spacing,
    region_from_spec,
    sprinkle,
    vertical_chain,
)
from .splitting import (
    LineSearchResult,
    MapCheck,
    RunConfig,
    SplitRecovery,
    TimeEstimate,
    TimelikeCertificate,
    busemann_time,
    busemann_times,
    certify_timelike,
    dhat_relative_errors,
    fiber_anchors,
    maximizer_error_sweep,
    pipeline_find_line,
    prepare_run,
    recover_sigma,
    run_split,
    validate_split,
)

__version__ = "0.1.0"
