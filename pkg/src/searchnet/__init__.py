"""Evolving bipartite user-topic network simulation and measurement."""

__version__ = "0.1.0"

from .graph import (  # noqa: F401
    BipartiteGraph,
    DegreeIndex,
    NodeRef,
    ParameterError,
    SamplingError,
    Side,
    check_invariants,
    new_seed_graph,
)
from .evolution import (  # noqa: F401
    EvolutionConfig,
    EvolutionTrace,
    ObserverError,
    SearchPolicy,
    StepReport,
    evolve_step,
    run_evolution,
)
from .metrics import (  # noqa: F401
    DegreeHistogram,
    DiameterReport,
    FitError,
    PowerLawFit,
    RouteExpectation,
    degree_histogram,
    diameter_approx,
    diameter_exact,
    expected_route,
    fit_power_law,
    recursion_ratio_limit,
    theoretical_degree_fraction,
    worst_case_diameter,
)
from .sir import (  # noqa: F401
    SirConfig,
    SirState,
    SirTrace,
    rumor_coverage,
    run_sir,
    sir_init,
    sir_step,
)
from .ingest import (  # noqa: F401
    BipartizeStrategy,
    RawGraph,
    bipartize,
    load_edge_list,
    read_bipartite,
    seed_from_dataset,
    write_bipartite,
)
from .harness import (  # noqa: F401
    ExperimentSpec,
    RunArtifacts,
    reproduce_figures,
    run_experiment,
)
