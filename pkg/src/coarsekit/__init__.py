"""Computational coarse geometry on finite metric spaces."""

from .errors import (
    AmbientMismatch,
    CoarseKitError,
    ControlError,
    DegenerateTree,
    GenerationError,
    InvalidScale,
    MetricViolation,
    MoveRejected,
    ScheduleError,
    SizeLimitExceeded,
    StageAssertionFailure,
)
from .metric_core import (
    CoarseMap,
    ControlFunction,
    FiniteMetricSpace,
    MetricFamily,
    Subspace,
    check_metric,
    family,
    is_cover,
    is_r_disjoint,
    mesh,
    neighborhood,
    r_components,
    set_distance,
    singletons,
    sub,
    whole,
)
from .spacegen import GeneratorSpec, generate, graph_to_space, load_space, save_space
from .decomp import (
    CoverFailure,
    CoverSequence,
    DecompositionChain,
    RDecomposition,
    amalgamate,
    amalgamate_play,
    annulus_split,
    asc_cover,
    asc_to_chain,
    decompose_member,
    minimal_depth_oracle,
    oracle_chain,
    pullback_chain,
    pullback_decomposition,
    solve_chain,
    sum_theorem_step,
    verify_chain,
    verify_cover,
    verify_decomposition,
)
from .games import (
    GameSession,
    Move,
    Transcript,
    auto_move,
    new_session,
    replay,
    run_game,
    submit_challenge,
    submit_response,
    transcript,
)
from .witness import (
    PartitionTree,
    WitnessMeasure,
    build_partition_tree,
    geometric_schedule,
    property_a_check,
    variation_report,
    witness_measure,
)

__version__ = "0.1.0"
