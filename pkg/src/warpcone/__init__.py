"""Exact warped-cone metrics over group actions, with distortion and
dimension-at-scale experiments."""

from .actions import (
    ActionSystem,
    PermutationMap,
    PiecewiseLinearMap,
    ReflectionMap,
    RotationMap,
    TorusReflectionMap,
    TorusRotationMap,
    TranslationMap,
    action_system,
    apply,
    change_of_metric,
    check_free_at_scale,
    orbit_closure,
)
from .contfrac import (
    ContinuedFraction,
    Convergent,
    LevelDecomposition,
    badly_approximable_margin,
    convergents,
    expand,
    golden_cf,
    higher_tori_alpha,
    is_restricted_up_to_depth,
    level_decomposition,
    verify_approximation_bound,
    verify_technical_conditions,
)
from .groups import GroupSpec, Word, ball, inverse, multiply, word_length
from .presets import run_preset
from .qimaps import (
    Cocycle,
    DistortionReport,
    MetricMap,
    build_iota,
    extract_cocycle,
    measure_distortion,
    quotient_map,
    substitute_angle,
)
from .scaleinv import (
    ComponentDecomposition,
    CoverCertificate,
    asdim_cover_search,
    prop_a_ball_average,
    r_components,
    vn_invariant,
)
from .spaces import (
    CircleNet,
    FiniteNet,
    MatrixNet,
    QuotientNet,
    TorusNet,
    UltrametricNet,
    circle_net,
    interleaved_embedding,
    quotient_by_finite_group,
    scale,
    torus_product,
    ultrametric_chain,
)
from .warped import (
    CoveringLevel,
    WarpedLevel,
    covering_level,
    faithfulness_radius,
    stabilized_distance,
    warped_distance_closed_form,
    warped_distance_graph,
    warped_level_closed_form,
)

__version__ = "0.1.0"
