"""Random loop model (crosses and double bars) on rooted trees.

Simulation of the Poisson link processes and their loops, link and
pruning percolation couplings, Galton-Watson threshold criteria, and
potential theory (conductance, capacity brackets, branching numbers) on
finite tree truncations.
"""

__version__ = "0.1.0"

from .errors import (
    DegenerateSampleError,
    DegenerateStartError,
    DiagnosticError,
    InvalidParameterError,
    NonMonotoneCurveError,
    NoTransitionError,
    PrecisionError,
    TreeloopsError,
    UnknownEdgeError,
    UnknownVertexError,
)
from .estimators import (
    DominationReport,
    RegularTree,
    SurvivalCurve,
    TransitionEstimate,
    domination_report,
    run_replicas,
    survival_curve,
    threshold_bisection,
    wilson_interval,
)
from .gwt import (
    GeneratingFunction,
    expected_Y,
    h_of_beta,
    link_threshold,
    poisson_sufficient,
    survivor_pgf,
    theoremB_analytic_verdict,
    theoremB_condition,
)
from .links import Link, LinkConfiguration, LinkKind, config_from_lists, dump_links, is_retained, sample_links
from .multilink import (
    MultiLinkCluster,
    UnilinkReport,
    count_incident_unilinks,
    multi_link_cluster,
    multi_link_loop,
    unilink_branching_criterion,
)
from .percolation import (
    PercolationMask,
    PruningParams,
    compose_link_delay_survival,
    delayed_pruning_mask,
    is_pruning_edge,
    link_cluster,
    pruning_probability,
    pruning_probability_2d,
    verify_pruning_probability_mc,
)
from .potential import (
    BranchingEstimate,
    ConductanceReport,
    Gauge,
    Theorem53Probe,
    branching_number_estimate,
    branching_number_regular,
    conductance_profile,
    effective_conductance,
    exponential_gauge,
    gauge_from_percolation,
    regular_conductance_profile,
    theorem53_probe,
)
from .tracer import (
    DOWN,
    UP,
    EventIndex,
    LoopPoint,
    LoopTrace,
    Segment,
    all_loops,
    dump_loops,
    loop_reaches_depth,
    trace_loop,
)
from .trees import (
    OffspringLaw,
    RootedTree,
    d_star,
    generate_galton_watson,
    generate_regular,
    parse_tree,
    serialize_tree,
    tree_from_level_counts,
    truncate,
)
