"""Frame pairs, Besov sequence spaces and n-term approximation rates."""

from .besov import (
    BesovParams,
    IndexFamily,
    RateReport,
    Weight,
    besov_seq_norm,
    exhaustive_n_term_oracle,
    extremal_ball_element,
    fit_rate,
    greedy_errors,
    greedy_n_term,
    random_ball_element,
)
from .domains import (
    Domain,
    DomainFramePair,
    ExtensionOperator,
    build_domain_frame_pair,
    build_index_sets,
    domain_analysis,
    domain_preset,
    domain_synthesis,
    extend,
    hs_norm_estimate,
    sigma_n_frame,
    stable_box_subframe,
)
from .errors import FrameWidthsError
from .experiments import rate_experiment
from .frames import (
    FramePair,
    check_stability,
    continuous_n_term,
    estimate_frame_bounds,
    map_frame_pair,
    pathological_frame,
    riesz_basis_frame,
    soft_threshold_map,
    tight_duplicate,
    tight_growing,
)
from .operators import (
    FourierCoefficients,
    SineSeries,
    SolutionOperator,
    periodic_besov_norm,
    poisson_solve_1d,
    single_layer_apply,
    single_layer_solve,
)
from .verify import run_verify
from .wavelets import (
    CoefficientArray,
    DyadicGrid,
    WaveletSystem,
    analyze,
    build_system,
    evaluate_atom,
    periodic_analyze,
    synthesize,
)

__version__ = "0.1.0"
