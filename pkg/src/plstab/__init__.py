"""plstab: a numerical laboratory for quantitative stability of the
Prekopa-Leindler inequality on uniform grids.

The package measures how far a triple (f, g, h) satisfying the
interpolated pointwise condition is from the equality case, and
constructively rebuilds the log-concave witness predicted by the
stability theory: deficit computation, symmetric decreasing
rearrangement, level-set profiles, concave/convex envelope fitting,
reconstruction with L1 error reports, supporting diagnostics, and a 2D
layer with reduction to one dimension.
"""

from .gridfn import (
    DomainError,
    FormatError,
    GridFunction,
    IntervalUnion,
    common_grid,
    from_samples,
    grid_function,
    l1_distance,
    read_function,
    resample,
    write_function,
)
from .plcore import (
    AmGmReport,
    ConditionReport,
    DeficitReport,
    FreimanReport,
    PLTriple,
    amgm_stability,
    canonical_triple,
    deficit,
    freiman_check,
    minkowski_sum,
    quadrature_tol,
    sup_convolution,
)
from .rearrange import rearranged_triple, symmetric_decreasing
from .profiles import (
    GoodLevelReport,
    LevelProfile,
    build_bubble,
    extract_profile,
    good_levels,
    level_grid,
    regularize,
    write_profile_csv,
)
from .envelope import (
    EnvelopePair,
    ViolationReport,
    four_point_check,
    greatest_convex_minorant,
    least_concave_majorant,
    monotonize,
    three_point_check,
)
from .reconstruct import (
    AlignResult,
    LogConcavityReport,
    PipelineConfig,
    StabilityReport,
    TheoremConstants,
    align,
    from_envelopes,
    is_log_concave,
    log_concave_hull,
    stability_decompose,
)
from .diagnostics import (
    CheckRow,
    check_logconcave_tails,
    check_sup_ratio,
    check_tail_truncation,
    constants_table,
    write_diagnostics_csv,
)
from .multidim import (
    DistributionProfile,
    GridFunction2D,
    ReducedDeficitReport,
    Triple2D,
    deficit_2d,
    distribution,
    multiplicative_to_additive,
    read_function_2d,
    reduced_deficit,
    sup_convolution_2d,
    write_function_2d,
)

__version__ = "0.1.0"
